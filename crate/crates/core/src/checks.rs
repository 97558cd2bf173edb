//! Statistical and exact checks with a uniform report shape.
//!
//! Every report passes iff `statistic ≤ threshold`.

use serde::{Deserialize, Serialize};

use crate::alpha::AlphaFunction;
use crate::charfn::{self, cf_li_marginal, McSettings};
use crate::decomp;
use crate::error::{Error, Result};
use crate::localize::{self, TangentSettings};
use crate::rng;
use crate::series::{self, draw_series, ProcessKind, TimeGrid};
use crate::stable::sample_stable_oracle;
use crate::stats;

/// Fewest samples a statistical check accepts.
pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub test: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(test: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Self {
            test: test.into(),
            statistic,
            threshold,
            pass: statistic <= threshold,
        }
    }
}

fn require_samples(m: usize) -> Result<()> {
    if m < MIN_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "insufficient samples: M = {m}, statistical checks need at least {MIN_SAMPLES}"
        )));
    }
    Ok(())
}

/// Which simulator feeds a marginal check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Simulator {
    Fkl,
    Poisson,
}

/// `L_I(T)` samples from one simulator, path `k` seeded by `path_seed(seed, k)`.
pub fn li_terminal_samples(f: &AlphaFunction, sim: Simulator, n_terms: usize, m: usize, seed: u64) -> Result<Vec<f64>> {
    let horizon = f.domain_end();
    let grid = TimeGrid::new(vec![horizon], horizon)?;
    series::simulate_many(seed, m, |s| {
        let path = match sim {
            Simulator::Fkl => series::simulate_li_fkl(&draw_series(s, n_terms, horizon)?, f, &grid)?,
            Simulator::Poisson => series::simulate_li_poisson(s, f, &grid, n_terms)?,
        };
        Ok(path.values[0])
    })
}

/// Sup distance over 21 θ in `[-3, 3]` between the empirical CF of `L_I(T)`
/// simulated with `sim_alpha` and the analytic marginal CF of `analytic_alpha`.
pub fn cf_match(
    sim_alpha: &AlphaFunction,
    analytic_alpha: &AlphaFunction,
    sim: Simulator,
    n_terms: usize,
    m: usize,
    seed: u64,
    threshold: f64,
) -> Result<CheckReport> {
    require_samples(m)?;
    let xs = li_terminal_samples(sim_alpha, sim, n_terms, m, seed)?;
    let t = analytic_alpha.domain_end();
    let d = charfn::cf_distance_scalar(
        |th| cf_li_marginal(analytic_alpha, t, th).map(|r| r.value),
        &xs,
        &charfn::theta_grid(-3.0, 3.0, 21),
    )?;
    let name = match sim {
        Simulator::Fkl => "cf_match_fkl",
        Simulator::Poisson => "cf_match_poisson",
    };
    Ok(CheckReport::new(name, d, threshold))
}

/// Two-sample KS between the Poisson-point and series simulators of `L_I(T)`.
pub fn representation_equivalence(
    f: &AlphaFunction,
    n_terms: usize,
    m: usize,
    seed: u64,
    level: f64,
) -> Result<CheckReport> {
    require_samples(m)?;
    let a = li_terminal_samples(f, Simulator::Poisson, n_terms, m, seed)?;
    let b = li_terminal_samples(f, Simulator::Fkl, n_terms, m, rng::path_seed(seed, u64::MAX))?;
    let ks = stats::ks_two_sample(&a, &b)?;
    Ok(CheckReport::new(
        "representation_equivalence",
        ks.statistic,
        stats::ks_critical(level, m as f64 / 2.0),
    ))
}

/// Two-sample KS between `L_F(t)` and the stable law of exponent `α(t)` and scale `t`.
pub fn lf_fixed_time(
    f: &AlphaFunction,
    t: f64,
    n_terms: usize,
    m: usize,
    seed: u64,
    level: f64,
) -> Result<CheckReport> {
    require_samples(m)?;
    let horizon = f.domain_end();
    let grid = TimeGrid::new(vec![t], horizon)?;
    let lf = series::simulate_many(seed, m, |s| {
        Ok(series::simulate_lf_fkl(&draw_series(s, n_terms, horizon)?, f, &grid)?.values[0])
    })?;
    let a = f.eval(t)?;
    let mut oracle_rng = rng::stream(rng::path_seed(seed, u64::MAX), 7);
    let oracle: Vec<f64> = (0..m)
        .map(|_| sample_stable_oracle(a, t, &mut oracle_rng))
        .collect::<Result<_>>()?;
    let ks = stats::ks_two_sample(&lf, &oracle)?;
    Ok(CheckReport::new(
        "lf_fixed_time",
        ks.statistic,
        stats::ks_critical(level, m as f64 / 2.0),
    ))
}

/// Largest `|a + m − L_I|` over draws and grid points for both split rules;
/// the threshold is zero.
pub fn split_reconstruction(
    f: &AlphaFunction,
    n_terms: usize,
    grid_points: usize,
    n_draws: usize,
    seed: u64,
) -> Result<CheckReport> {
    let horizon = f.domain_end();
    let grid = TimeGrid::uniform(horizon, grid_points)?;
    let gaps = series::simulate_many(seed, n_draws, |s| {
        let draw = draw_series(s, n_terms, horizon)?;
        let li = series::simulate_li_fkl(&draw, f, &grid)?;
        let mag = decomp::decompose_li_magnitude(&draw, f, &grid)?;
        let alt = decomp::decompose_li_alternate(&draw, f, &grid)?;
        Ok(decomp::reconstruction_gap(&li, &mag)?.max(decomp::reconstruction_gap(&li, &alt)?))
    })?;
    Ok(CheckReport::new(
        "split_reconstruction",
        gaps.into_iter().fold(0.0, f64::max),
        0.0,
    ))
}

/// Largest `sup_t |L_F − (A + L_I)| / (1 + sup |L_F|)` over draws.
pub fn field_reconstruction(
    f: &AlphaFunction,
    n_terms: usize,
    grid_points: usize,
    n_draws: usize,
    seed: u64,
    threshold: f64,
) -> Result<CheckReport> {
    let horizon = f.domain_end();
    let grid = TimeGrid::uniform(horizon, grid_points)?;
    let gaps = series::simulate_many(seed, n_draws, |s| {
        let draw = draw_series(s, n_terms, horizon)?;
        let lf = series::simulate_lf_fkl(&draw, f, &grid)?;
        let d = decomp::decompose_lf_field(&draw, f, &grid)?;
        Ok(decomp::reconstruction_gap(&lf, &d)? / (1.0 + lf.sup_abs()))
    })?;
    Ok(CheckReport::new(
        "field_reconstruction",
        gaps.into_iter().fold(0.0, f64::max),
        threshold,
    ))
}

/// Factorisation of the joint CF of `(0, T/2]`, `(T/2, T]` increments.
pub fn independence(f: &AlphaFunction, kind: ProcessKind, n_terms: usize, m: usize, seed: u64) -> Result<CheckReport> {
    require_samples(m)?;
    let t = f.domain_end();
    let rep = charfn::increment_independence_check(
        f,
        kind,
        &[(0.0, 0.5 * t), (0.5 * t, t)],
        McSettings {
            n_samples: m,
            n_terms,
            seed,
        },
    )?;
    Ok(CheckReport::new(
        format!("independence_{kind}").to_lowercase(),
        rep.sup_gap,
        rep.threshold,
    ))
}

/// Largest increase of the tangency distance as the scale shrinks; the
/// threshold only absorbs rounding.
#[allow(clippy::too_many_arguments)]
pub fn tangency(
    kind: ProcessKind,
    f: &AlphaFunction,
    u: f64,
    r_values: &[f64],
    probe_times: &[f64],
    n_terms: usize,
    m: usize,
    seed: u64,
) -> Result<CheckReport> {
    require_samples(m)?;
    let rep = localize::tangent_check(
        kind,
        f,
        u,
        r_values,
        probe_times,
        TangentSettings {
            n_samples: m,
            n_terms,
            seed,
        },
    )?;
    let rise = rep
        .distances
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(CheckReport::new(format!("tangency_{kind}").to_lowercase(), rise, 1e-12))
}

/// Means of `M′` at `T/4, T/2, T`, in standard errors; threshold `sigmas`.
pub fn martingale_mean(f: &AlphaFunction, n_terms: usize, m: usize, seed: u64, sigmas: f64) -> Result<CheckReport> {
    require_samples(m)?;
    let horizon = f.domain_end();
    let grid = TimeGrid::new(vec![0.25 * horizon, 0.5 * horizon, horizon], horizon)?;
    let rows = series::simulate_many(seed, m, |s| {
        Ok(
            decomp::decompose_li_magnitude(&draw_series(s, n_terms, horizon)?, f, &grid)?
                .m_path
                .values,
        )
    })?;
    let z = (0..3)
        .map(|k| {
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            stats::mean(&col).abs() / stats::std_error(&col)
        })
        .fold(0.0, f64::max);
    Ok(CheckReport::new("martingale_mean", z, sigmas))
}

/// Settings of [`run_suite`].
#[derive(Debug, Clone)]
pub struct SuiteSettings {
    pub alpha: AlphaFunction,
    /// Exponent used on the analytic side of the CF match; `None` uses `alpha`.
    pub analytic_alpha: Option<AlphaFunction>,
    pub n_terms: usize,
    pub n_paths: usize,
    pub grid_points: usize,
    pub seed: u64,
    pub cf_tolerance: f64,
    pub ks_level: f64,
    pub field_tolerance: f64,
    pub sigmas: f64,
}

/// CF match, representation equivalence, decomposition reconstruction,
/// independence, tangency and martingale mean.
pub fn run_suite(s: &SuiteSettings) -> Result<Vec<CheckReport>> {
    require_samples(s.n_paths)?;
    let f = &s.alpha;
    let analytic = s.analytic_alpha.as_ref().unwrap_or(f);
    let horizon = f.domain_end();
    let seed = |k: u64| rng::path_seed(s.seed, 1_000_000 + k);
    let mut out = vec![
        cf_match(
            f,
            analytic,
            Simulator::Fkl,
            s.n_terms,
            s.n_paths,
            seed(0),
            s.cf_tolerance,
        )?,
        cf_match(
            f,
            analytic,
            Simulator::Poisson,
            s.n_terms,
            s.n_paths,
            seed(1),
            s.cf_tolerance,
        )?,
        representation_equivalence(f, s.n_terms, s.n_paths, seed(2), s.ks_level)?,
        split_reconstruction(f, s.n_terms, s.grid_points, 100, seed(3))?,
    ];
    if f.is_c1() {
        out.push(field_reconstruction(
            f,
            s.n_terms,
            s.grid_points,
            5,
            seed(4),
            s.field_tolerance,
        )?);
    }
    out.push(independence(f, ProcessKind::Li, s.n_terms, s.n_paths, seed(5))?);
    let u = 0.5 * horizon;
    let r_values = [0.2 * horizon, 0.05 * horizon, 0.0125 * horizon];
    for (k, kind) in [ProcessKind::Li, ProcessKind::Lf].into_iter().enumerate() {
        out.push(tangency(
            kind,
            f,
            u,
            &r_values,
            &[0.5, 1.0],
            s.n_terms,
            s.n_paths,
            seed(6 + k as u64),
        )?);
    }
    out.push(martingale_mean(f, s.n_terms, s.n_paths, seed(8), s.sigmas)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine() -> AlphaFunction {
        AlphaFunction::affine(1.2, 0.3, 1.0).unwrap()
    }

    #[test]
    fn report_passes_iff_statistic_within_threshold() {
        assert!(CheckReport::new("x", 0.01, 0.03).pass);
        assert!(CheckReport::new("x", 0.0, 0.0).pass);
        assert!(!CheckReport::new("x", 0.04, 0.03).pass);
        assert!(!CheckReport::new("x", f64::NAN, 0.03).pass);
        let json = serde_json::to_value(CheckReport::new("x", 0.5, 1.0)).unwrap();
        for key in ["test", "statistic", "threshold", "pass"] {
            assert!(json.get(key).is_some());
        }
    }

    #[test]
    fn small_sample_checks_are_refused() {
        let f = affine();
        let err = cf_match(&f, &f, Simulator::Fkl, 10, 1, 0, 0.03).unwrap_err();
        assert!(err.to_string().contains("insufficient samples"), "{err}");
        assert!(martingale_mean(&f, 10, 50, 0, 3.0).is_err());
    }

    #[test]
    fn mismatched_analytic_alpha_fails_cf_match() {
        let f = affine();
        let other = AlphaFunction::constant(1.9, 1.0).unwrap();
        assert!(cf_match(&f, &f, Simulator::Fkl, 1000, 4000, 1, 0.05).unwrap().pass);
        assert!(!cf_match(&f, &other, Simulator::Fkl, 1000, 4000, 1, 0.05).unwrap().pass);
    }

    #[test]
    fn splits_reconstruct_exactly() {
        let r = split_reconstruction(&affine(), 500, 64, 10, 2).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.pass);
    }
}
