//! Analytic joint characteristic functions of `L_I` and `L_F`, empirical
//! characteristic functions and CF distances.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::alpha::AlphaFunction;
use crate::error::{Error, Result};
use crate::quad::{self, Estimate, Tolerance};
use crate::series::{self, draw_series, ProcessKind, TimeGrid};
use crate::stable::c_alpha_pow;

/// Joint CF request `E exp(i Σ_j θ_j Y(t_j))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfQuery {
    pub times: Vec<f64>,
    pub thetas: Vec<f64>,
}

impl CfQuery {
    pub fn new(times: Vec<f64>, thetas: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != thetas.len() {
            return Err(Error::InvalidParameter(format!(
                "a CF query needs m ≥ 1 times and as many thetas (got {} and {})",
                times.len(),
                thetas.len()
            )));
        }
        if times.iter().chain(&thetas).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("CF query entries must be finite".into()));
        }
        Ok(Self { times, thetas })
    }

    pub fn marginal(t: f64, theta: f64) -> Result<Self> {
        Self::new(vec![t], vec![theta])
    }

    pub fn m(&self) -> usize {
        self.times.len()
    }

    fn check(&self, f: &AlphaFunction) -> Result<()> {
        if self.times.is_empty() || self.times.len() != self.thetas.len() {
            return Err(Error::InvalidParameter("malformed CF query".into()));
        }
        self.times.iter().try_for_each(|&t| f.check_time(t))
    }

    /// Sorted distinct times `τ_1 < … < τ_K` and, per cell `(τ_{k-1}, τ_k]`,
    /// the indices `j` with `t_j ≥ τ_k`.
    fn cells(&self) -> Vec<(f64, f64, Vec<usize>)> {
        let mut taus: Vec<f64> = self.times.clone();
        taus.sort_by(f64::total_cmp);
        taus.dedup();
        let mut prev = 0.0;
        let mut cells = Vec::with_capacity(taus.len());
        for tau in taus {
            let active: Vec<usize> = (0..self.m()).filter(|&j| self.times[j] >= tau).collect();
            if tau > prev {
                cells.push((prev, tau, active));
            }
            prev = tau;
        }
        cells
    }
}

/// A characteristic-function value with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfResult {
    pub value: Complex64,
    pub abs_err: f64,
}

impl CfResult {
    fn from_exponent(e: Estimate) -> Self {
        let v = (-e.value).exp();
        Self {
            value: Complex64::new(v, 0.0),
            abs_err: v * e.abs_err,
        }
    }
}

const CELL_TOL: Tolerance = Tolerance::new(1e-13, 1e-13);

/// `exp(-∫ |Σ_j θ_j 1(s ≤ t_j)|^{α(s)} ds)`, integrated cell by cell between
/// the sorted query times.
pub fn cf_li_joint(f: &AlphaFunction, q: &CfQuery) -> Result<CfResult> {
    q.check(f)?;
    let mut exponent = Estimate::new(0.0, 0.0);
    for (a, b, active) in q.cells() {
        let s: f64 = active.iter().map(|&j| q.thetas[j]).sum();
        if s == 0.0 {
            continue;
        }
        let ln_s = s.abs().ln();
        let cell = quad::integrate(|x| (f.value(x) * ln_s).exp(), a, b, CELL_TOL)?;
        exponent.value += cell.value;
        exponent.abs_err += cell.abs_err;
    }
    Ok(CfResult::from_exponent(exponent))
}

/// `exp(-∫_0^t |θ|^{α(u)} du)`.
pub fn cf_li_marginal(f: &AlphaFunction, t: f64, theta: f64) -> Result<CfResult> {
    cf_li_joint(f, &CfQuery::marginal(t, theta)?)
}

/// `exp(-∫_0^T ∫_0^∞ (1 - cos ψ_x(y)) dy dx)` with
/// `ψ_x(y) = Σ_j θ_j C_{α(t_j)}^{1/α(t_j)} y^{-1/α(t_j)} 1(x ≤ t_j)`.
///
/// The outer integrand is constant on each cell between sorted query times,
/// so the outer integral is a finite sum of cell lengths times inner integrals.
pub fn cf_lf_joint(f: &AlphaFunction, q: &CfQuery) -> Result<CfResult> {
    q.check(f)?;
    let coeffs: Vec<(f64, f64)> = q
        .times
        .iter()
        .zip(&q.thetas)
        .map(|(&t, &theta)| {
            let a = f.value(t);
            Ok((a, if theta == 0.0 { 0.0 } else { theta * c_alpha_pow(a)? }))
        })
        .collect::<Result<_>>()?;
    let mut exponent = Estimate::new(0.0, 0.0);
    for (a, b, active) in q.cells() {
        let terms: Vec<(f64, f64)> = active.iter().map(|&j| coeffs[j]).collect();
        let inner = phase_integral(&terms)?;
        exponent.value += (b - a) * inner.value;
        exponent.abs_err += (b - a) * inner.abs_err;
    }
    Ok(CfResult::from_exponent(exponent))
}

/// `ψ(v) = Σ_j b_j v^{e_j}` after the substitution `y = v^{-β}`, `β = min α`.
/// Exponents ascend and the last one is 1.
struct Phase {
    e: Vec<f64>,
    b: Vec<f64>,
    beta: f64,
    b_star: f64,
}

/// Below this weight the remaining tail `2 v^{-β}` is negligible.
const NEGLIGIBLE_TAIL: f64 = 1e-16;
const MAX_CROSSINGS: usize = 200_000;
const PIECE_TOL: Tolerance = Tolerance::new(1e-15, 1e-12);

impl Phase {
    /// Groups equal exponents and drops vanishing coefficients.
    fn new(terms: &[(f64, f64)]) -> Option<Self> {
        let mut sorted: Vec<(f64, f64)> = terms.to_vec();
        sorted.sort_by(|x, y| y.0.total_cmp(&x.0));
        let mut groups: Vec<(f64, f64)> = Vec::new();
        for (a, b) in sorted {
            match groups.last_mut() {
                Some(g) if g.0 == a => g.1 += b,
                _ => groups.push((a, b)),
            }
        }
        groups.retain(|g| g.1 != 0.0);
        let beta = groups.last()?.0;
        let e = groups.iter().map(|g| beta / g.0).collect();
        let b: Vec<f64> = groups.iter().map(|g| g.1).collect();
        let b_star = *b.last().expect("non-empty");
        Some(Self { e, b, beta, b_star })
    }

    fn psi(&self, v: f64) -> f64 {
        let l = v.ln();
        self.e.iter().zip(&self.b).map(|(e, b)| b * (e * l).exp()).sum()
    }

    fn dpsi(&self, v: f64) -> f64 {
        let l = v.ln();
        self.e
            .iter()
            .zip(&self.b)
            .map(|(e, b)| b * e * ((e - 1.0) * l).exp())
            .sum()
    }

    /// `β (1 - cos ψ(v)) v^{-β-1}`.
    fn one_minus_cos(&self, v: f64) -> f64 {
        let s = (0.5 * self.psi(v)).sin();
        2.0 * s * s * self.beta * (-(self.beta + 1.0) * v.ln()).exp()
    }

    /// `∫_0^r β (1 - cos ψ) v^{-β-1} dv` with `v = s^{1/κ}`, `κ = 2e_min - β`,
    /// which makes the integrand bounded at the origin.
    fn head_from_zero(&self, r: f64) -> Result<Estimate> {
        let e_min = self.e[0];
        let kappa = 2.0 * e_min - self.beta;
        let inv_kappa = 1.0 / kappa;
        let scale = self.beta / kappa;
        quad::integrate(
            |s: f64| {
                let l = s.ln() * inv_kappa;
                let mut psi = 0.0;
                let mut ratio = 0.0;
                for (e, b) in self.e.iter().zip(&self.b) {
                    let rel = if *e == e_min { 1.0 } else { ((e - e_min) * l).exp() };
                    ratio += b * rel;
                    psi += b * (e * l).exp();
                }
                // 2 sin²(ψ/2) / v^{2 e_min} = ½ (ψ / v^{e_min})² sinc²(ψ/2)
                let h = 0.5 * psi;
                let sinc = if h.abs() < 1e-8 { 1.0 } else { h.sin() / h };
                scale * 0.5 * ratio * ratio * sinc * sinc
            },
            0.0,
            r.powf(kappa),
            PIECE_TOL,
        )
    }

    /// Zeros of `ψ′` on `(0, V_max)`, where `V_max` bounds the relevant range.
    fn stationary_points(&self) -> Vec<f64> {
        let n = self.e.len();
        if n < 2 {
            return Vec::new();
        }
        let nf = n as f64;
        let g = |w: f64| -> f64 {
            self.e
                .iter()
                .zip(&self.b)
                .map(|(e, b)| b * e * ((e - 1.0) * w).exp())
                .sum()
        };
        // For w > w_hi the e = 1 term dominates; for w < w_lo the smallest e dominates.
        let mut w_hi = f64::NEG_INFINITY;
        for j in 0..n - 1 {
            let x = (nf * (self.b[j] * self.e[j]).abs() / self.b_star.abs()).ln() / (1.0 - self.e[j]);
            w_hi = w_hi.max(x);
        }
        let lead = (self.b[0] * self.e[0]).abs();
        let mut w_lo = f64::INFINITY;
        for j in 1..n {
            let x = (lead / (nf * (self.b[j] * self.e[j]).abs())).ln() / (self.e[j] - self.e[0]);
            w_lo = w_lo.min(x);
        }
        let w_cap = (2.0 / NEGLIGIBLE_TAIL).ln() / self.beta;
        let w_hi = w_hi.min(w_cap);
        let w_lo = w_lo.max(-w_cap);
        if !(w_lo < w_hi) {
            return Vec::new();
        }
        let steps = (((w_hi - w_lo) / 1e-3).ceil() as usize).clamp(64, 400_000);
        let dw = (w_hi - w_lo) / steps as f64;
        let mut zeros = Vec::new();
        let mut w0 = w_lo;
        let mut g0 = g(w0);
        for k in 1..=steps {
            let w1 = w_lo + k as f64 * dw;
            let g1 = g(w1);
            if g0 == 0.0 || g0.signum() != g1.signum() && g1 != 0.0 {
                let (mut a, mut b) = (w0, w1);
                let ga = g0;
                for _ in 0..100 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    if g(m).signum() == ga.signum() {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                zeros.push((0.5 * (a + b)).exp());
            }
            w0 = w1;
            g0 = g1;
        }
        zeros
    }

    /// Point `v > a` with `ψ(v) = level` on a stretch where `ψ` is monotone.
    /// `end` bounds the stretch when finite.
    fn crossing(&self, a: f64, end: Option<f64>, level: f64) -> Result<f64> {
        let dir = match end {
            Some(b) => (self.psi(b) - self.psi(a)).signum(),
            None => self.b_star.signum(),
        };
        let h = |v: f64| dir * (self.psi(v) - level);
        let (mut lo, mut hi) = (a, 0.0);
        match end {
            Some(b) => hi = b,
            None => {
                let mut width = PI / self.b_star.abs();
                for _ in 0..2000 {
                    hi = a + width;
                    if h(hi) >= 0.0 {
                        break;
                    }
                    lo = hi;
                    width *= 2.0;
                }
                if h(hi) < 0.0 {
                    return Err(Error::Quadrature {
                        value: f64::NAN,
                        estimate: f64::INFINITY,
                    });
                }
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let hx = h(x);
            if hx == 0.0 {
                return Ok(x);
            }
            if hx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
            let d = dir * self.dpsi(x);
            let newton = x - hx / d;
            x = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Ok(x)
    }

    /// `∫ β (1 - cos ψ) v^{-β-1} dv` over `[a, b]`, on which `ψ` is monotone,
    /// split where `ψ` crosses multiples of π.
    fn monotone_span(&self, a: f64, b: f64) -> Result<Estimate> {
        let (pa, pb) = (if a == 0.0 { 0.0 } else { self.psi(a) }, self.psi(b));
        let (lo, hi) = (pa.min(pb), pa.max(pb));
        let first = (lo / PI).floor() as i64 + 1;
        let last = (hi / PI).ceil() as i64 - 1;
        let count = (last - first + 1).max(0) as usize;
        if count > MAX_CROSSINGS {
            return Err(Error::Quadrature {
                value: f64::NAN,
                estimate: f64::INFINITY,
            });
        }
        let mut levels: Vec<f64> = (first..=last).map(|k| k as f64 * PI).collect();
        if pb < pa {
            levels.reverse();
        }
        let mut total = Estimate::new(0.0, 0.0);
        let mut start = a;
        for level in levels.into_iter().map(Some).chain(std::iter::once(None)) {
            let stop = match level {
                Some(l) => self.crossing(start, Some(b), l)?,
                None => b,
            };
            if stop > start {
                let piece = if start == 0.0 {
                    self.head_from_zero(stop)?
                } else {
                    quad::integrate(|v| self.one_minus_cos(v), start, stop, PIECE_TOL)?
                };
                total.value += piece.value;
                total.abs_err += piece.abs_err;
            }
            start = stop;
        }
        Ok(total)
    }
}

/// `∫_0^∞ (1 - cos Σ_j b_j y^{-1/α_j}) dy` for `(α_j, b_j)` pairs.
///
/// With `y = v^{-β}` the phase becomes `Σ b_j v^{β/α_j}`, which is eventually
/// linear in `v`. Stretches between stationary points of the phase are
/// integrated piece by piece; on the final monotone stretch the constant part
/// is integrated in closed form and the cosine part is summed over
/// half-periods with epsilon acceleration.
pub fn phase_integral(terms: &[(f64, f64)]) -> Result<Estimate> {
    let Some(phase) = Phase::new(terms) else {
        return Ok(Estimate::new(0.0, 0.0));
    };
    let mut total = Estimate::new(0.0, 0.0);
    let mut start = 0.0;
    for z in phase.stationary_points() {
        let piece = phase.monotone_span(start, z)?;
        total.value += piece.value;
        total.abs_err += piece.abs_err;
        start = z;
    }
    let dir = phase.b_star.signum();
    let psi_start = if start == 0.0 { 0.0 } else { phase.psi(start) };
    let mut k = (dir * psi_start / PI - 0.5).floor() + 1.0;
    let v0 = phase.crossing(start, None, dir * (k + 0.5) * PI)?;
    let head = phase.monotone_span(start, v0)?;
    total.value += head.value + v0.powf(-phase.beta);
    total.abs_err += head.abs_err;

    let beta = phase.beta;
    let mut prev = v0;
    let tail = quad::accelerated_series(
        |_| {
            k += 1.0;
            let next = phase.crossing(prev, None, dir * (k + 0.5) * PI)?;
            let piece = quad::integrate(
                |v| beta * phase.psi(v).cos() * (-(beta + 1.0) * v.ln()).exp(),
                prev,
                next,
                PIECE_TOL,
            )?;
            prev = next;
            Ok(Estimate::new(-piece.value, piece.abs_err))
        },
        Tolerance::new(1e-15, 1e-12),
        8,
        4000,
    )?;
    total.value += tail.value;
    total.abs_err += tail.abs_err;
    Ok(total)
}

/// `(1/M) Σ_k exp(i Σ_j θ_j y_j^{(k)})` with error estimate `3/√M`.
/// Each sample row holds the values at the query times.
pub fn ecf<S: AsRef<[f64]>>(samples: &[S], q: &CfQuery) -> Result<CfResult> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples("empirical CF of an empty sample set".into()));
    }
    let m = q.m();
    let mut acc = Complex64::new(0.0, 0.0);
    for row in samples {
        let row = row.as_ref();
        if row.len() != m {
            return Err(Error::InvalidParameter(format!(
                "sample row of length {} for an m = {m} query",
                row.len()
            )));
        }
        let phase: f64 = row.iter().zip(&q.thetas).map(|(y, th)| y * th).sum();
        acc += Complex64::from_polar(1.0, phase);
    }
    let n = samples.len() as f64;
    Ok(CfResult {
        value: acc / n,
        abs_err: 3.0 / n.sqrt(),
    })
}

/// Empirical CF of scalar samples at `theta`.
pub fn ecf_scalar(samples: &[f64], theta: f64) -> Complex64 {
    let acc: Complex64 = samples.iter().map(|y| Complex64::from_polar(1.0, theta * y)).sum();
    acc / samples.len() as f64
}

/// `sup_θ |ecf(θ) - φ(θ)|` over a grid of θ vectors.
pub fn cf_distance<S, A>(analytic: A, samples: &[S], theta_grid: &[Vec<f64>]) -> Result<f64>
where
    S: AsRef<[f64]>,
    A: Fn(&[f64]) -> Result<Complex64>,
{
    if theta_grid.is_empty() {
        return Err(Error::InvalidParameter("empty θ grid".into()));
    }
    let mut sup = 0.0f64;
    for theta in theta_grid {
        let q = CfQuery {
            times: vec![0.0; theta.len()],
            thetas: theta.clone(),
        };
        let e = ecf(samples, &q)?;
        sup = sup.max((e.value - analytic(theta)?).norm());
    }
    Ok(sup)
}

/// `sup_θ |ecf(θ) - φ(θ)|` for scalar samples.
pub fn cf_distance_scalar<A>(analytic: A, samples: &[f64], theta_grid: &[f64]) -> Result<f64>
where
    A: Fn(f64) -> Result<Complex64>,
{
    if theta_grid.is_empty() {
        return Err(Error::InvalidParameter("empty θ grid".into()));
    }
    if samples.is_empty() {
        return Err(Error::InsufficientSamples("CF distance of an empty sample".into()));
    }
    theta_grid.iter().try_fold(0.0f64, |sup, &th| {
        Ok(sup.max((ecf_scalar(samples, th) - analytic(th)?).norm()))
    })
}

/// `n` equally spaced points on `[lo, hi]`.
pub fn theta_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Outcome of the increment factorisation test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub process: ProcessKind,
    pub increments: Vec<(f64, f64)>,
    pub n_samples: usize,
    pub sup_gap: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Settings of the Monte Carlo behind [`increment_independence_check`].
#[derive(Debug, Clone, Copy)]
pub struct McSettings {
    pub n_samples: usize,
    pub n_terms: usize,
    pub seed: u64,
}

/// Compares the empirical joint CF of disjoint increments with the product of
/// the empirical marginal CFs over θ ∈ {±0.5, ±1, ±2}^k, against `3/√M`.
pub fn increment_independence_check(
    f: &AlphaFunction,
    kind: ProcessKind,
    increments: &[(f64, f64)],
    mc: McSettings,
) -> Result<IndependenceReport> {
    if increments.len() < 2 {
        return Err(Error::Precondition("at least two increments are needed".into()));
    }
    for &(s, t) in increments {
        if !(s < t) {
            return Err(Error::Precondition(format!("increment ({s}, {t}] is empty")));
        }
        f.check_time(s)?;
        f.check_time(t)?;
    }
    let mut sorted = increments.to_vec();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    if sorted.windows(2).any(|w| w[1].0 < w[0].1) {
        return Err(Error::Precondition("increments overlap".into()));
    }
    if mc.n_samples < 2 {
        return Err(Error::InsufficientSamples(format!("M = {}", mc.n_samples)));
    }
    let mut pts: Vec<f64> = increments.iter().flat_map(|&(s, t)| [s, t]).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let grid = TimeGrid::new(pts, f.domain_end())?;
    let horizon = f.domain_end();
    let rows: Vec<Vec<f64>> = series::simulate_many(mc.seed, mc.n_samples, |seed| {
        let draw = draw_series(seed, mc.n_terms, horizon)?;
        let path = match kind {
            ProcessKind::Li => series::simulate_li_fkl(&draw, f, &grid)?,
            ProcessKind::Lf => series::simulate_lf_fkl(&draw, f, &grid)?,
            ProcessKind::General => return Err(Error::Unsupported("independence check of the general process".into())),
        };
        Ok(increments
            .iter()
            .map(|&(s, t)| path.value_at(t).expect("on grid") - path.value_at(s).expect("on grid"))
            .collect())
    })?;
    let k = increments.len();
    let levels = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
    let mut sup = 0.0f64;
    let mut index = vec![0usize; k];
    loop {
        let thetas: Vec<f64> = index.iter().map(|&i| levels[i]).collect();
        let joint = ecf(
            &rows,
            &CfQuery {
                times: vec![0.0; k],
                thetas: thetas.clone(),
            },
        )?
        .value;
        let mut product = Complex64::new(1.0, 0.0);
        for (j, th) in thetas.iter().enumerate() {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            product *= ecf_scalar(&col, *th);
        }
        sup = sup.max((joint - product).norm());
        // odometer over the θ grid
        let mut pos = 0;
        loop {
            if pos == k {
                let threshold = 3.0 / (mc.n_samples as f64).sqrt();
                return Ok(IndependenceReport {
                    process: kind,
                    increments: increments.to_vec(),
                    n_samples: mc.n_samples,
                    sup_gap: sup,
                    threshold,
                    pass: sup <= threshold,
                });
            }
            index[pos] += 1;
            if index[pos] < levels.len() {
                break;
            }
            index[pos] = 0;
            pos += 1;
        }
    }
}
