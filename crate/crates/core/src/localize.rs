//! Tangency of `L_I` and `L_F` to stable Lévy motion with exponent `α(u)`.
//!
//! Rescaled increments `(Y(u + r t) − Y(u)) / r^{1/α(u)}` are simulated from
//! the Poisson points that can affect them. Points with location in the window
//! `(u, u + r t_max]` have arrivals of rate `w / T`, `w = r t_max`, so the
//! window is drawn as its own series of `N` terms and every scale keeps the
//! same resolution. `L_F` additionally depends on the points left of `u`,
//! drawn the same way with rate `u / T`. All scales reuse the same seeds.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::alpha::AlphaFunction;
use crate::charfn::{cf_li_joint, ecf, CfQuery};
use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};
use crate::rng::path_seed;
use crate::series::{self, draw_series, ProcessKind};
use crate::stable::NormTable;

/// Monte Carlo tangency diagnostics at one base time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentReport {
    pub process: ProcessKind,
    pub u: f64,
    pub alpha_u: f64,
    pub probe_times: Vec<f64>,
    pub r_values: Vec<f64>,
    /// CF sup-distance to the tangent stable law, per scale.
    pub distances: Vec<f64>,
    /// Monte Carlo band `3/√M`.
    pub band: f64,
    /// Distances do not increase as `r` decreases, up to rounding.
    pub pass: bool,
}

/// One line of the JSON report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentRow {
    pub process: ProcessKind,
    pub u: f64,
    pub r: f64,
    pub distance: f64,
    pub band: f64,
    pub pass: bool,
}

impl TangentReport {
    pub fn rows(&self) -> Vec<TangentRow> {
        self.r_values
            .iter()
            .zip(&self.distances)
            .map(|(&r, &distance)| TangentRow {
                process: self.process,
                u: self.u,
                r,
                distance,
                band: self.band,
                pass: self.pass,
            })
            .collect()
    }
}

/// Settings of the Monte Carlo in [`tangent_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentSettings {
    pub n_samples: usize,
    pub n_terms: usize,
    pub seed: u64,
}

fn check_probe(f: &AlphaFunction, u: f64, r: f64, probe_times: &[f64]) -> Result<()> {
    let t = f.domain_end();
    if !(u > 0.0 && u < t) {
        return Err(Error::Precondition(format!("base time {u} must lie in (0, {t})")));
    }
    if !(r > 0.0) {
        return Err(Error::Precondition(format!("scale {r} must be positive")));
    }
    if probe_times.is_empty() || probe_times.windows(2).any(|w| !(w[0] < w[1])) || !(probe_times[0] > 0.0) {
        return Err(Error::Precondition(
            "probe times must be positive and strictly increasing".into(),
        ));
    }
    let end = u + r * probe_times[probe_times.len() - 1];
    if end > t {
        return Err(Error::Precondition(format!(
            "probe u + r·t_max = {end} leaves [0, {t}]"
        )));
    }
    Ok(())
}

/// Rescaled increments of one realisation at the probe times.
pub fn rescaled_increments(
    kind: ProcessKind,
    f: &AlphaFunction,
    u: f64,
    r: f64,
    probe_times: &[f64],
    n_terms: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_probe(f, u, r, probe_times)?;
    let t_max = probe_times[probe_times.len() - 1];
    let w = r * t_max;
    let a_u = f.value(u);
    let scale = r.powf(-1.0 / a_u);
    let alphas: Vec<f64> = probe_times.iter().map(|&t| f.value(u + r * t)).collect();
    let window = draw_series(seed, n_terms, w)?;
    let ells = window.log_scaled();
    let mut out = vec![0.0; probe_times.len()];
    match kind {
        ProcessKind::Li => {
            for ((&v, &s), &l) in window.locations().iter().zip(window.signs()).zip(&ells) {
                let jump = s * NormTable::term(f.value(u + v), l);
                for (o, &t) in out.iter_mut().zip(probe_times) {
                    if v <= r * t {
                        *o += jump;
                    }
                }
            }
        }
        ProcessKind::Lf => {
            for ((&v, &s), &l) in window.locations().iter().zip(window.signs()).zip(&ells) {
                for ((o, &t), &a) in out.iter_mut().zip(probe_times).zip(&alphas) {
                    if v <= r * t {
                        *o += s * NormTable::term(a, l);
                    }
                }
            }
            if !f.is_constant() {
                let left = draw_series(path_seed(seed, 1), n_terms, u)?;
                for (&s, l) in left.signs().iter().zip(left.log_scaled()) {
                    let base = NormTable::term(a_u, l);
                    for (o, &a) in out.iter_mut().zip(&alphas) {
                        *o += s * (NormTable::term(a, l) - base);
                    }
                }
            }
        }
        ProcessKind::General => return Err(Error::Unsupported("tangency of the general process".into())),
    }
    out.iter_mut().for_each(|o| *o *= scale);
    Ok(out)
}

/// θ vectors for the distance: 21 points on `[-3, 3]` for one probe time,
/// otherwise the non-zero points of `{0, ±0.5, ±1, ±2}^m`.
pub fn tangent_theta_grid(m: usize) -> Vec<Vec<f64>> {
    if m == 1 {
        return crate::charfn::theta_grid(-3.0, 3.0, 21)
            .into_iter()
            .map(|t| vec![t])
            .collect();
    }
    let levels = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
    let mut out = Vec::new();
    let total = levels.len().pow(m as u32);
    for code in 0..total {
        let mut c = code;
        let v: Vec<f64> = (0..m)
            .map(|_| {
                let l = levels[c % levels.len()];
                c /= levels.len();
                l
            })
            .collect();
        if v.iter().any(|&x| x != 0.0) {
            out.push(v);
        }
    }
    out
}

/// Compares rescaled increments at each scale with the stable Lévy motion of
/// exponent `α(u)` through the sup CF distance.
pub fn tangent_check(
    kind: ProcessKind,
    f: &AlphaFunction,
    u: f64,
    r_values: &[f64],
    probe_times: &[f64],
    mc: TangentSettings,
) -> Result<TangentReport> {
    if r_values.is_empty() || r_values.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Precondition("scales must be strictly decreasing".into()));
    }
    for &r in r_values {
        check_probe(f, u, r, probe_times)?;
    }
    if mc.n_samples < 2 {
        return Err(Error::InsufficientSamples(format!("M = {}", mc.n_samples)));
    }
    let a_u = f.value(u);
    let t_max = probe_times[probe_times.len() - 1];
    let limit = AlphaFunction::constant(a_u, t_max)?;
    let grid = tangent_theta_grid(probe_times.len());
    let targets: Vec<Complex64> = grid
        .iter()
        .map(|th| Ok(cf_li_joint(&limit, &CfQuery::new(probe_times.to_vec(), th.clone())?)?.value))
        .collect::<Result<_>>()?;
    let mut distances = Vec::with_capacity(r_values.len());
    for &r in r_values {
        let rows = series::simulate_many(mc.seed, mc.n_samples, |seed| {
            rescaled_increments(kind, f, u, r, probe_times, mc.n_terms, seed)
        })?;
        let mut sup = 0.0f64;
        for (th, target) in grid.iter().zip(&targets) {
            let q = CfQuery::new(probe_times.to_vec(), th.clone())?;
            sup = sup.max((ecf(&rows, &q)?.value - target).norm());
        }
        distances.push(sup);
    }
    // equal-in-law scales reproduce the same samples up to rounding
    let pass = distances.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    Ok(TangentReport {
        process: kind,
        u,
        alpha_u: a_u,
        probe_times: probe_times.to_vec(),
        r_values: r_values.to_vec(),
        distances,
        band: 3.0 / (mc.n_samples as f64).sqrt(),
        pass,
    })
}

/// `-ln` of the rescaled `L_I` increment CF, `∫_u^{u+rt} |θ r^{-1/α(u)}|^{α(s)} ds`,
/// divided by its limit `t |θ|^{α(u)}`.
pub fn li_rescaled_log_cf_ratio(f: &AlphaFunction, u: f64, r: f64, t: f64, theta: f64) -> Result<f64> {
    check_probe(f, u, r, &[t])?;
    if theta == 0.0 {
        return Err(Error::InvalidParameter("θ = 0 has a vanishing log-CF".into()));
    }
    let a_u = f.value(u);
    let ln_x = theta.abs().ln() - r.ln() / a_u;
    let exponent = quad::integrate(|s| (f.value(s) * ln_x).exp(), u, u + r * t, Tolerance::new(0.0, 1e-13))?;
    Ok(exponent.value / (t * theta.abs().powf(a_u)))
}
