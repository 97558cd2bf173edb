//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::PI;
use std::time::Instant;

use mslevy::charfn::{self, cf_lf_joint, CfQuery, McSettings};
use mslevy::checks::{self, Simulator};
use mslevy::decomp::{self, ProbeSettings};
use mslevy::localize::{self, TangentSettings};
use mslevy::rng::path_seed;
use mslevy::series::{self, draw_series, ProcessKind, TimeGrid};
use mslevy::stable::{c_alpha, c_alpha_closed_form, sample_stable_oracle, NormTable};
use mslevy::{stats, AlphaFunction, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn affine() -> AlphaFunction {
    AlphaFunction::affine(1.2, 0.3, 1.0).expect("valid exponent")
}

fn c1_normalisation() -> Result<Outcome> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in 1..=19 {
        let u = k as f64 / 10.0;
        worst = worst.max((c_alpha(u)? - c_alpha_closed_form(u)?).abs());
    }
    let at_one = (c_alpha(1.0)? - 2.0 / PI).abs();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-8 && at_one <= 1e-10 && secs < 1.0,
        format!("max |quadrature − closed form| = {worst:.2e}, |C_1 − 2/π| = {at_one:.2e}, {secs:.3} s"),
    )
}

fn c2_marginal_cf() -> Result<Outcome> {
    let start = Instant::now();
    let f = affine();
    let fkl = checks::cf_match(&f, &f, Simulator::Fkl, 5000, 20_000, 201, 0.03)?;
    let poi = checks::cf_match(&f, &f, Simulator::Poisson, 5000, 20_000, 202, 0.03)?;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        fkl.pass && poi.pass && secs < 120.0,
        format!(
            "sup CF gap FKL {:.4}, Poisson {:.4} (≤ 0.03), {secs:.1} s",
            fkl.statistic, poi.statistic
        ),
    )
}

fn c3_representation() -> Result<Outcome> {
    let f = affine();
    let a = checks::li_terminal_samples(&f, Simulator::Poisson, 5000, 10_000, 301)?;
    let b = checks::li_terminal_samples(&f, Simulator::Fkl, 5000, 10_000, 302)?;
    let ks = stats::ks_two_sample(&a, &b)?;
    outcome(
        ks.p_value > 0.01,
        format!("KS D = {:.4}, p = {:.3}", ks.statistic, ks.p_value),
    )
}

fn c4_fixed_time() -> Result<Outcome> {
    let f = affine();
    let t = 0.7;
    let grid = TimeGrid::new(vec![t], 1.0)?;
    let lf = series::simulate_many(401, 10_000, |s| {
        Ok(series::simulate_lf_fkl(&draw_series(s, 5000, 1.0)?, &f, &grid)?.values[0])
    })?;
    let a = f.eval(t)?;
    let mut rng = mslevy::rng::stream(402, 0);
    let oracle: Vec<f64> = (0..10_000)
        .map(|_| sample_stable_oracle(a, t, &mut rng))
        .collect::<Result<_>>()?;
    let ks = stats::ks_two_sample(&lf, &oracle)?;
    let mut worst = 0.0f64;
    for th in charfn::theta_grid(-3.0, 3.0, 13) {
        let got = cf_lf_joint(&f, &CfQuery::marginal(t, th)?)?.value.re;
        worst = worst.max((got - (-t * th.abs().powf(a)).exp()).abs());
    }
    outcome(
        ks.p_value > 0.01 && worst <= 1e-6,
        format!("KS p = {:.3}, max |cf_LF − exp(−t|θ|^α(t))| = {worst:.2e}", ks.p_value),
    )
}

fn c5_independence() -> Result<Outcome> {
    let f = affine();
    let inc = [(0.0, 0.5), (0.5, 1.0)];
    let li = charfn::increment_independence_check(
        &f,
        ProcessKind::Li,
        &inc,
        McSettings {
            n_samples: 20_000,
            n_terms: 5000,
            seed: 501,
        },
    )?;
    let lf = charfn::increment_independence_check(
        &f,
        ProcessKind::Lf,
        &inc,
        McSettings {
            n_samples: 100_000,
            n_terms: 2000,
            seed: 502,
        },
    )?;
    outcome(
        li.pass && !lf.pass,
        format!(
            "L_I gap {:.4} ≤ {:.4}; L_F gap {:.4} > {:.4}",
            li.sup_gap, li.threshold, lf.sup_gap, lf.threshold
        ),
    )
}

fn c6_split_reconstruction() -> Result<Outcome> {
    let r = checks::split_reconstruction(&affine(), 5000, 1000, 100, 601)?;
    outcome(
        r.statistic == 0.0,
        format!("max |A + M − L_I| over 100 draws, both rules = {:e}", r.statistic),
    )
}

fn c7_martingale_mean() -> Result<Outcome> {
    let r = checks::martingale_mean(&affine(), 5000, 20_000, 701, 3.0)?;
    outcome(
        r.pass,
        format!("max |mean M′(t)| / s.e. over t ∈ {{1/4, 1/2, 1}} = {:.2}", r.statistic),
    )
}

fn c8_field_decomposition() -> Result<Outcome> {
    let start = Instant::now();
    let r = checks::field_reconstruction(&affine(), 10_000, 1000, 20, 801, 1e-2)?;
    let c = AlphaFunction::constant(1.35, 1.0)?;
    let grid = TimeGrid::uniform(1.0, 1000)?;
    let exact = series::simulate_many(802, 20, |s| {
        let draw = draw_series(s, 10_000, 1.0)?;
        let d = decomp::decompose_lf_field(&draw, &c, &grid)?;
        let lf = series::simulate_lf_fkl(&draw, &c, &grid)?;
        Ok(d.a_path.values.iter().all(|&v| v == 0.0) && lf.values == d.m_path.values)
    })?;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        r.pass && exact.iter().all(|&e| e),
        format!(
            "max gap / (1 + sup|L_F|) = {:.2e} (≤ 1e-2); constant α: A ≡ 0 and L_F ≡ L_I in all draws = {}, {secs:.1} s",
            r.statistic,
            exact.iter().all(|&e| e)
        ),
    )
}

fn c9_variation() -> Result<Outcome> {
    let f = affine();
    let coarse = TimeGrid::uniform(1.0, 1001)?;
    let fine = TimeGrid::uniform(1.0, 10_001)?;
    let mut worst = 0.0f64;
    let mut m_ratio = Vec::new();
    for k in 0..5 {
        let draw = draw_series(path_seed(901, k), 2000, 1.0)?;
        let tv_c = decomp::total_variation(&decomp::compute_a_field(&draw, &f, &coarse)?);
        let tv_f = decomp::total_variation(&decomp::compute_a_field(&draw, &f, &fine)?);
        worst = worst.max((tv_f - tv_c).abs() / tv_f);
        let big = draw_series(path_seed(902, k), 100_000, 1.0)?;
        let m_c = decomp::total_variation(&decomp::decompose_li_magnitude(&big, &f, &coarse)?.m_path);
        let m_f = decomp::total_variation(&decomp::decompose_li_magnitude(&big, &f, &fine)?.m_path);
        m_ratio.push(m_f / m_c);
    }
    let ratios: Vec<String> = m_ratio.iter().map(|r| format!("{r:.2}")).collect();
    outcome(
        worst < 0.01,
        format!(
            "max relative TV change of A = {worst:.2e} (< 1%); TV(M′) fine/coarse per draw [{}] (reported)",
            ratios.join(", ")
        ),
    )
}

fn c10_tangency() -> Result<Outcome> {
    let f = affine();
    let ratio = localize::li_rescaled_log_cf_ratio(&f, 0.5, 1e-4, 1.0, 1.0)?;
    let r_values = [0.2, 0.05, 0.0125];
    let mc = TangentSettings {
        n_samples: 20_000,
        n_terms: 2000,
        seed: 1001,
    };
    let li = localize::tangent_check(ProcessKind::Li, &f, 0.5, &r_values, &[0.5, 1.0], mc)?;
    let lf = localize::tangent_check(ProcessKind::Lf, &f, 0.5, &r_values, &[0.5, 1.0], mc)?;
    let fmt = |d: &[f64]| d.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ≥ ");
    outcome(
        (ratio - 1.0).abs() < 1e-3 && li.pass && lf.pass,
        format!(
            "log-CF ratio at r = 1e-4: {ratio:.6}; L_I distances {}; L_F distances {}",
            fmt(&li.distances),
            fmt(&lf.distances)
        ),
    )
}

fn c11_good_integrator() -> Result<Outcome> {
    let s = ProbeSettings {
        n_draws: 1000,
        n_integrands: 1000,
        n_terms: 1000,
        grid_points: 101,
        max_blocks: 8,
        p: 1.7,
        k_values: vec![2.0, 4.0, 8.0, 16.0],
        seed: 1101,
    };
    let r = decomp::good_integrator_probe(&affine(), &s)?;
    let cs: Vec<String> = r
        .points
        .iter()
        .map(|p| format!("K={}: P={:.4}, P·K^p={:.3}", p.k, p.empirical_tail, p.fitted_c))
        .collect();
    let finite = r.points.iter().all(|p| p.fitted_c.is_finite());
    outcome(
        finite,
        format!("fitted C = {:.3}; {} (reported)", r.fitted_c, cs.join("; ")),
    )
}

fn c12_partial_sums() -> Result<Outcome> {
    let f = affine();
    let grid = TimeGrid::uniform(1.0, 1001)?;
    let n_values: Vec<usize> = (10..=14).map(|k| 1usize << k).collect();
    let draws = series::simulate_many(1201, 20, |s| draw_series(s, 1 << 15, 1.0))?;
    let r = series::partial_sum_convergence(&draws, &f, &n_values, &grid)?;
    let (unit, log) = r.non_increasing_after(0);
    let fmt = |d: &[f64]| d.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
    outcome(
        unit && log,
        format!(
            "median gaps U=1: [{}]; U=ln Γ: [{}]",
            fmt(&r.median_unit),
            fmt(&r.median_log)
        ),
    )
}

type Criterion = (&'static str, fn() -> Result<Outcome>);

fn main() {
    NormTable::warm();
    let criteria: [Criterion; 12] = [
        ("C_α quadrature vs closed form", c1_normalisation),
        ("marginal CF of L_I, FKL and Poisson", c2_marginal_cf),
        ("Poisson vs series representation", c3_representation),
        ("fixed-time stability of L_F", c4_fixed_time),
        ("increment independence", c5_independence),
        ("split reconstruction", c6_split_reconstruction),
        ("martingale mean of M′", c7_martingale_mean),
        ("pathwise field decomposition", c8_field_decomposition),
        ("finite variation of A", c9_variation),
        ("tangency", c10_tangency),
        ("good-integrator probe", c11_good_integrator),
        ("partial-sum convergence", c12_partial_sums),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        eprintln!(
            "{} criterion {id:>2} ({name}): {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
