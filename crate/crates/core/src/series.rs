//! Random sequences of the Ferguson–Klass–LePage series and truncated-series
//! simulation of `L_I`, `L_F` and the general kernel process.
//!
//! Every simulated term is rounded to a multiple of a power-of-two quantum
//! fixed by the draw and the α bounds. The quantum is small enough that all
//! partial sums are exact, so any regrouping of the terms (split rules,
//! summation order, thread schedule) reproduces the same floating-point path.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alpha::AlphaFunction;
use crate::error::{domain, Error, Result};
use crate::quad::{self, Tolerance};
use crate::rng;
use crate::stable::NormTable;

/// One realisation of `(Γ_i, V_i, γ_i)`, `i = 1..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesDraw {
    seed: Option<u64>,
    horizon: f64,
    arrivals: Vec<f64>,
    locations: Vec<f64>,
    signs: Vec<f64>,
}

/// Identifies the draw a path was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawRef {
    pub seed: Option<u64>,
    pub n_terms: usize,
}

/// Draws `N` terms for horizon `T` from three independent streams of `seed`.
pub fn draw_series(seed: u64, n_terms: usize, horizon: f64) -> Result<SeriesDraw> {
    if n_terms == 0 {
        return Err(Error::EmptyDraw);
    }
    check_horizon(horizon)?;
    let mut arrivals_rng = rng::stream(seed, rng::ARRIVALS);
    let mut locations_rng = rng::stream(seed, rng::LOCATIONS);
    let mut signs_rng = rng::stream(seed, rng::SIGNS);
    let mut gamma = 0.0;
    let arrivals = (0..n_terms)
        .map(|_| {
            let e: f64 = Exp1.sample(&mut arrivals_rng);
            gamma += e;
            gamma
        })
        .collect();
    let locations = (0..n_terms).map(|_| horizon * locations_rng.random::<f64>()).collect();
    let signs = (0..n_terms)
        .map(|_| if signs_rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    Ok(SeriesDraw {
        seed: Some(seed),
        horizon,
        arrivals,
        locations,
        signs,
    })
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon > 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(domain("T", horizon, "(0, ∞)"))
    }
}

impl SeriesDraw {
    /// Builds a draw from explicit sequences.
    pub fn from_parts(arrivals: Vec<f64>, locations: Vec<f64>, signs: Vec<f64>, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        let n = arrivals.len();
        if n == 0 {
            return Err(Error::EmptyDraw);
        }
        if locations.len() != n || signs.len() != n {
            return Err(Error::InvalidParameter(format!(
                "sequence lengths differ: {n} arrivals, {} locations, {} signs",
                locations.len(),
                signs.len()
            )));
        }
        if !(arrivals[0] > 0.0) || arrivals.windows(2).any(|w| !(w[1] > w[0])) || !arrivals[n - 1].is_finite() {
            return Err(Error::InvalidParameter(
                "arrivals must be finite, positive and strictly increasing".into(),
            ));
        }
        if let Some(v) = locations.iter().find(|v| !(0.0..=horizon).contains(*v)) {
            return Err(domain("V", *v, format!("[0, {horizon}]")));
        }
        if let Some(s) = signs.iter().find(|s| **s != 1.0 && **s != -1.0) {
            return Err(domain("γ", *s, "{-1, +1}"));
        }
        Ok(Self {
            seed: None,
            horizon,
            arrivals,
            locations,
            signs,
        })
    }

    /// Builds a draw whose arrivals are the cumulative sums of `increments`.
    pub fn from_increments(increments: &[f64], locations: Vec<f64>, signs: Vec<f64>, horizon: f64) -> Result<Self> {
        if increments.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::InvalidParameter("arrival increments must be positive".into()));
        }
        let mut acc = 0.0;
        let arrivals = increments
            .iter()
            .map(|e| {
                acc += e;
                acc
            })
            .collect();
        Self::from_parts(arrivals, locations, signs, horizon)
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn n_terms(&self) -> usize {
        self.arrivals.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn arrivals(&self) -> &[f64] {
        &self.arrivals
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn draw_ref(&self) -> DrawRef {
        DrawRef {
            seed: self.seed,
            n_terms: self.n_terms(),
        }
    }

    /// The first `n` terms of this draw.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDraw);
        }
        if n > self.n_terms() {
            return Err(Error::InvalidParameter(format!(
                "cannot truncate a draw of {} terms to {n}",
                self.n_terms()
            )));
        }
        Ok(Self {
            seed: self.seed,
            horizon: self.horizon,
            arrivals: self.arrivals[..n].to_vec(),
            locations: self.locations[..n].to_vec(),
            signs: self.signs[..n].to_vec(),
        })
    }

    /// Diagnostic copy with every sign set to zero.
    pub fn silenced(&self) -> Self {
        Self {
            signs: vec![0.0; self.n_terms()],
            ..self.clone()
        }
    }

    /// `ln(Γ_i / T)` per term.
    pub(crate) fn log_scaled(&self) -> Vec<f64> {
        let ln_t = self.horizon.ln();
        self.arrivals.iter().map(|g| g.ln() - ln_t).collect()
    }
}

/// Strictly increasing evaluation times inside `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    points: Vec<f64>,
    horizon: f64,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        if points.is_empty() {
            return Err(Error::InvalidParameter("a time grid needs at least one point".into()));
        }
        if let Some(t) = points.iter().find(|t| !(0.0..=horizon).contains(*t)) {
            return Err(domain("grid time", *t, format!("[0, {horizon}]")));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("grid times must be strictly increasing".into()));
        }
        Ok(Self { points, horizon })
    }

    /// `n_points` equally spaced times from 0 to T inclusive.
    pub fn uniform(horizon: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InvalidParameter(format!(
                "a uniform grid needs at least 2 points, got {n_points}"
            )));
        }
        let last = (n_points - 1) as f64;
        let mut points: Vec<f64> = (0..n_points).map(|k| horizon * k as f64 / last).collect();
        points[n_points - 1] = horizon;
        Self::new(points, horizon)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of a grid point equal to `t`, if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.points.binary_search_by(|p| p.total_cmp(&t)).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProcessKind {
    #[serde(rename = "LI")]
    Li,
    #[serde(rename = "LF")]
    Lf,
    #[serde(rename = "GENERAL")]
    General,
}

impl std::fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProcessKind::Li => "LI",
            ProcessKind::Lf => "LF",
            ProcessKind::General => "GENERAL",
        })
    }
}

/// A trajectory on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub kind: ProcessKind,
    pub draw: DrawRef,
}

impl PathSample {
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value at a grid time.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.grid.index_of(t).map(|k| self.values[k])
    }
}

/// Power-of-two quantum for terms bounded by `amp · C_b^{1/b} e^{-ℓ_i/b}`,
/// `b ∈ [c, d]`. Uses `C_b^{1/b} ≤ 1` on `(0, 2)`.
pub(crate) fn quantum(ells: impl IntoIterator<Item = f64>, bounds: (f64, f64), amp: f64) -> f64 {
    let (c, d) = bounds;
    let total: f64 = ells.into_iter().map(|l| (-l / c).max(-l / d).exp()).sum();
    let s = 2.0 * amp * total;
    if !(s > 0.0 && s.is_finite()) {
        return 1.0;
    }
    2f64.powi(s.log2().ceil() as i32 - 52)
}

#[inline]
pub(crate) fn quantize(x: f64, q: f64) -> f64 {
    (x / q).round() * q
}

fn check_compatible(draw_horizon: f64, f: &AlphaFunction, grid: &TimeGrid) -> Result<()> {
    let t = f.domain_end();
    if (draw_horizon - t).abs() > 1e-12 * t || (grid.horizon() - t).abs() > 1e-12 * t {
        return Err(Error::Precondition(format!(
            "horizons differ: draw {draw_horizon}, α domain {t}, grid {}",
            grid.horizon()
        )));
    }
    Ok(())
}

/// Indices sorted by location; ties keep index order.
fn order_by_location(locations: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..locations.len()).collect();
    order.sort_by(|&a, &b| locations[a].total_cmp(&locations[b]));
    order
}

/// Piecewise-constant path `t ↦ Σ_{loc_i ≤ t} jump_i`. Exact when the jumps
/// share a quantum.
pub(crate) fn step_path(locations: &[f64], jumps: &[f64], grid: &TimeGrid) -> Vec<f64> {
    let order = order_by_location(locations);
    let mut values = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    let mut k = 0;
    for &t in grid.points() {
        while k < order.len() && locations[order[k]] <= t {
            acc += jumps[order[k]];
            k += 1;
        }
        values.push(acc);
    }
    values
}

/// Quantised signed jumps `γ_i C_{α(V_i)}^{1/α(V_i)} (Γ_i/T)^{-1/α(V_i)}` of
/// `L_I`, in index order, with the quantum used.
pub fn li_jumps(draw: &SeriesDraw, f: &AlphaFunction) -> (Vec<f64>, f64) {
    let ells = draw.log_scaled();
    let q = quantum(ells.iter().copied(), f.bounds(), 1.0);
    let jumps = ells
        .iter()
        .zip(&draw.locations)
        .zip(&draw.signs)
        .map(|((&l, &v), &s)| s * quantize(NormTable::term(f.value(v), l), q))
        .collect();
    (jumps, q)
}

/// `L_I(t) = Σ C_{α(V_i)}^{1/α(V_i)} γ_i (Γ_i/T)^{-1/α(V_i)} 1(V_i ≤ t)`.
pub fn simulate_li_fkl(draw: &SeriesDraw, f: &AlphaFunction, grid: &TimeGrid) -> Result<PathSample> {
    check_compatible(draw.horizon, f, grid)?;
    let (jumps, _) = li_jumps(draw, f);
    Ok(PathSample {
        values: step_path(&draw.locations, &jumps, grid),
        grid: grid.clone(),
        kind: ProcessKind::Li,
        draw: draw.draw_ref(),
    })
}

/// `L_F(t) = C_{α(t)}^{1/α(t)} Σ γ_i (Γ_i/T)^{-1/α(t)} 1(V_i ≤ t)`.
pub fn simulate_lf_fkl(draw: &SeriesDraw, f: &AlphaFunction, grid: &TimeGrid) -> Result<PathSample> {
    check_compatible(draw.horizon, f, grid)?;
    let ells = draw.log_scaled();
    let q = quantum(ells.iter().copied(), f.bounds(), 1.0);
    let order = order_by_location(&draw.locations);
    let mut active = 0;
    let values = grid
        .points()
        .iter()
        .map(|&t| {
            while active < order.len() && draw.locations[order[active]] <= t {
                active += 1;
            }
            let a = f.value(t);
            order[..active]
                .iter()
                .map(|&i| draw.signs[i] * quantize(NormTable::term(a, ells[i]), q))
                .sum()
        })
        .collect();
    Ok(PathSample {
        grid: grid.clone(),
        values,
        kind: ProcessKind::Lf,
        draw: draw.draw_ref(),
    })
}

/// `L_I` from its Poisson-point representation: `Poisson(N)` points with
/// locations uniform on `[0, T]`, magnitudes uniform on `(0, N/T]` and
/// Rademacher signs, i.e. the points of a mean-`Lebesgue` process on
/// `[0, T] × (0, N/T]`. The point magnitudes are processed in increasing order.
pub fn simulate_li_poisson(seed: u64, f: &AlphaFunction, grid: &TimeGrid, n: usize) -> Result<PathSample> {
    let horizon = f.domain_end();
    check_compatible(horizon, f, grid)?;
    let draw_ref = DrawRef {
        seed: Some(seed),
        n_terms: n,
    };
    if n == 0 {
        return Ok(PathSample {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
            kind: ProcessKind::Li,
            draw: draw_ref,
        });
    }
    let count = Poisson::new(n as f64)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .sample(&mut rng::stream(seed, rng::COUNT)) as usize;
    let mut magnitudes_rng = rng::stream(seed, rng::ARRIVALS);
    let mut locations_rng = rng::stream(seed, rng::LOCATIONS);
    let mut signs_rng = rng::stream(seed, rng::SIGNS);
    let y_max = n as f64 / horizon;
    let mut magnitudes: Vec<f64> = (0..count)
        .map(|_| y_max * (1.0 - magnitudes_rng.random::<f64>()))
        .collect();
    magnitudes.sort_by(f64::total_cmp);
    let locations: Vec<f64> = (0..count).map(|_| horizon * locations_rng.random::<f64>()).collect();
    let ells: Vec<f64> = magnitudes.iter().map(|y| y.ln()).collect();
    let q = quantum(ells.iter().copied(), f.bounds(), 1.0);
    let jumps: Vec<f64> = ells
        .iter()
        .zip(&locations)
        .map(|(&l, &x)| {
            let s = if signs_rng.random::<bool>() { 1.0 } else { -1.0 };
            s * quantize(NormTable::term(f.value(x), l), q)
        })
        .collect();
    Ok(PathSample {
        values: step_path(&locations, &jumps, grid),
        grid: grid.clone(),
        kind: ProcessKind::Li,
        draw: draw_ref,
    })
}

/// Deterministic kernel `f(t, x)` of the general series process.
pub trait Kernel: Send + Sync {
    fn value(&self, t: f64, x: f64) -> f64;
    /// `L_∞ ≥ sup |f|` on `[0, T]²`.
    fn bound(&self) -> f64;
    /// Total variation of `t ↦ f(t, x)` on `[0, T]`.
    fn variation(&self, x: f64) -> f64;
    /// Exponent `p ∈ (d, 2)` of the integrability condition on the variation.
    fn p_exponent(&self) -> f64;
}

/// `f(t, x) = 1(x ≤ t)`, which turns the general process into `L_F`.
#[derive(Debug, Clone, Copy)]
pub struct IndicatorKernel {
    pub p: f64,
}

impl Kernel for IndicatorKernel {
    fn value(&self, t: f64, x: f64) -> f64 {
        if x <= t {
            1.0
        } else {
            0.0
        }
    }
    fn bound(&self) -> f64 {
        1.0
    }
    fn variation(&self, _x: f64) -> f64 {
        1.0
    }
    fn p_exponent(&self) -> f64 {
        self.p
    }
}

/// `f(t, x) = min(t, x)`.
#[derive(Debug, Clone, Copy)]
pub struct MinKernel {
    pub horizon: f64,
    pub p: f64,
}

impl Kernel for MinKernel {
    fn value(&self, t: f64, x: f64) -> f64 {
        t.min(x)
    }
    fn bound(&self) -> f64 {
        self.horizon
    }
    fn variation(&self, x: f64) -> f64 {
        x
    }
    fn p_exponent(&self) -> f64 {
        self.p
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ZeroKernel {
    pub p: f64,
}

impl Kernel for ZeroKernel {
    fn value(&self, _t: f64, _x: f64) -> f64 {
        0.0
    }
    fn bound(&self) -> f64 {
        0.0
    }
    fn variation(&self, _x: f64) -> f64 {
        0.0
    }
    fn p_exponent(&self) -> f64 {
        self.p
    }
}

/// Kernel assembled from closures.
pub struct FnKernel<F, V> {
    pub f: F,
    pub bound: f64,
    pub variation: V,
    pub p: f64,
}

impl<F, V> Kernel for FnKernel<F, V>
where
    F: Fn(f64, f64) -> f64 + Send + Sync,
    V: Fn(f64) -> f64 + Send + Sync,
{
    fn value(&self, t: f64, x: f64) -> f64 {
        (self.f)(t, x)
    }
    fn bound(&self) -> f64 {
        self.bound
    }
    fn variation(&self, x: f64) -> f64 {
        (self.variation)(x)
    }
    fn p_exponent(&self) -> f64 {
        self.p
    }
}

/// Checks `p ∈ (d, 2)`, a finite bound and `∫_0^T |Vf(·, x)|^p dx < ∞`.
/// Returns the value of the integral.
pub fn check_kernel(kernel: &dyn Kernel, f: &AlphaFunction) -> Result<f64> {
    let p = kernel.p_exponent();
    let (_, d) = f.bounds();
    if !(p > d && p < 2.0) {
        return Err(Error::InvalidParameter(format!(
            "kernel exponent p = {p} must lie in ({d}, 2)"
        )));
    }
    let bound = kernel.bound();
    if !(bound >= 0.0 && bound.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "kernel bound {bound} must be finite and non-negative"
        )));
    }
    let integral = quad::integrate(
        |x| kernel.variation(x).abs().powf(p),
        0.0,
        f.domain_end(),
        Tolerance::new(1e-10, 1e-8),
    )?;
    if !integral.value.is_finite() {
        return Err(Error::InvalidParameter("kernel variation is not p-integrable".into()));
    }
    Ok(integral.value)
}

/// `X(t) = C_{α(t)}^{1/α(t)} Σ γ_i (Γ_i/T)^{-1/α(t)} f(t, V_i)`.
pub fn simulate_general_fkl(
    draw: &SeriesDraw,
    f: &AlphaFunction,
    kernel: &dyn Kernel,
    grid: &TimeGrid,
) -> Result<PathSample> {
    check_compatible(draw.horizon, f, grid)?;
    check_kernel(kernel, f)?;
    let ells = draw.log_scaled();
    let bound = kernel.bound();
    let q = quantum(ells.iter().copied(), f.bounds(), bound);
    let mut values = Vec::with_capacity(grid.len());
    for &t in grid.points() {
        let a = f.value(t);
        let mut acc = 0.0;
        for ((&x, &sign), &ell) in draw.locations.iter().zip(&draw.signs).zip(&ells) {
            let k = kernel.value(t, x);
            if !(k.abs() <= bound) {
                return Err(Error::InvariantViolation(format!(
                    "|f({t}, {x})| = {} exceeds the declared bound {bound}",
                    k.abs()
                )));
            }
            acc += sign * quantize(NormTable::term(a, ell) * k, q);
        }
        values.push(acc);
    }
    Ok(PathSample {
        grid: grid.clone(),
        values,
        kind: ProcessKind::General,
        draw: draw.draw_ref(),
    })
}

/// Runs `job` on `m` consecutive path seeds derived from `base_seed`, in
/// parallel; results are in path order.
pub fn simulate_many<T, F>(base_seed: u64, m: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    (0..m as u64)
        .into_par_iter()
        .map(|i| job(rng::path_seed(base_seed, i)))
        .collect()
}

/// Sup-gaps `sup_s |D_{2N}(s) - D_N(s)|` of the partial sums
/// `D_N(s) = Σ_{i ≤ N} γ_i U_i Γ_i^{-1/α(s)} 1(V_i < s)` with `U_i = 1` and
/// `U_i = ln Γ_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub n_values: Vec<usize>,
    /// `[draw][k]`, weights `U = 1`.
    pub gaps_unit: Vec<Vec<f64>>,
    /// `[draw][k]`, weights `U = ln Γ`.
    pub gaps_log: Vec<Vec<f64>>,
    pub median_unit: Vec<f64>,
    pub median_log: Vec<f64>,
}

impl ConvergenceReport {
    /// Whether both median sequences are non-increasing from index `burn_in` on.
    pub fn non_increasing_after(&self, burn_in: usize) -> (bool, bool) {
        let check = |m: &[f64]| {
            m.iter()
                .skip(burn_in)
                .collect::<Vec<_>>()
                .windows(2)
                .all(|w| w[1] <= w[0])
        };
        (check(&self.median_unit), check(&self.median_log))
    }
}

pub fn partial_sum_convergence(
    draws: &[SeriesDraw],
    f: &AlphaFunction,
    n_values: &[usize],
    grid: &TimeGrid,
) -> Result<ConvergenceReport> {
    if draws.is_empty() {
        return Err(Error::InsufficientSamples("no draws supplied".into()));
    }
    if n_values.is_empty() || n_values[0] == 0 || n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "N list must be positive and strictly increasing".into(),
        ));
    }
    let n_max = *n_values.last().expect("non-empty");
    for draw in draws {
        check_compatible(draw.horizon, f, grid)?;
        if draw.n_terms() < 2 * n_max {
            return Err(Error::Precondition(format!(
                "draw has {} terms; the largest gap needs {}",
                draw.n_terms(),
                2 * n_max
            )));
        }
    }
    let alphas: Vec<f64> = grid.points().iter().map(|&s| -1.0 / f.value(s)).collect();
    let per_draw: Vec<(Vec<f64>, Vec<f64>)> = draws
        .par_iter()
        .map(|draw| {
            let ln_gamma: Vec<f64> = draw.arrivals.iter().map(|g| g.ln()).collect();
            let mut unit = Vec::with_capacity(n_values.len());
            let mut log = Vec::with_capacity(n_values.len());
            for &n in n_values {
                let mut block: Vec<usize> = (n..2 * n).collect();
                block.sort_by(|&a, &b| draw.locations[a].total_cmp(&draw.locations[b]));
                let (mut sup_u, mut sup_l) = (0.0f64, 0.0f64);
                for (s, &neg_inv) in grid.points().iter().zip(&alphas) {
                    let (mut acc_u, mut acc_l) = (0.0, 0.0);
                    for &i in block.iter().take_while(|&&i| draw.locations[i] < *s) {
                        let w = draw.signs[i] * (neg_inv * ln_gamma[i]).exp();
                        acc_u += w;
                        acc_l += w * ln_gamma[i];
                    }
                    sup_u = sup_u.max(acc_u.abs());
                    sup_l = sup_l.max(acc_l.abs());
                }
                unit.push(sup_u);
                log.push(sup_l);
            }
            (unit, log)
        })
        .collect();
    let (gaps_unit, gaps_log): (Vec<_>, Vec<_>) = per_draw.into_iter().unzip();
    let median_of = |gaps: &[Vec<f64>], k: usize| {
        let mut col: Vec<f64> = gaps.iter().map(|g| g[k]).collect();
        crate::stats::median(&mut col)
    };
    let median_unit = (0..n_values.len()).map(|k| median_of(&gaps_unit, k)).collect();
    let median_log = (0..n_values.len()).map(|k| median_of(&gaps_log, k)).collect();
    Ok(ConvergenceReport {
        n_values: n_values.to_vec(),
        gaps_unit,
        gaps_log,
        median_unit,
        median_log,
    })
}

/// Deterministic bound on `sup_t |Σ_{i > N} term_i|` for `d < 1`, valid on the
/// event `Γ_i ≥ i/2` for all `i > N` and `N ≥ 2T`:
/// `(2T)^{1/d} · d/(1-d) · N^{1-1/d}` (using `C_b^{1/b} ≤ 1`).
pub fn truncation_tail_bound(n: usize, bounds: (f64, f64), horizon: f64) -> Result<f64> {
    let (_, d) = bounds;
    if d >= 1.0 {
        return Err(Error::Unsupported(format!(
            "no deterministic truncation bound for d = {d} ≥ 1"
        )));
    }
    if (n as f64) < 2.0 * horizon {
        return Err(Error::Precondition(format!(
            "N = {n} must be at least 2T = {}",
            2.0 * horizon
        )));
    }
    let inv_d = 1.0 / d;
    Ok((2.0 * horizon).powf(inv_d) * d / (1.0 - d) * (n as f64).powf(1.0 - inv_d))
}

/// Whether `Γ_i ≥ i/2` holds for every term of the draw beyond the first `n`.
pub fn tail_event_holds(draw: &SeriesDraw, n: usize) -> bool {
    draw.arrivals
        .iter()
        .enumerate()
        .skip(n)
        .all(|(k, g)| *g >= (k + 1) as f64 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_grid(n: usize) -> TimeGrid {
        TimeGrid::uniform(1.0, n).unwrap()
    }

    #[test]
    fn arrivals_are_cumulative_increments() {
        let d = SeriesDraw::from_increments(&[0.5, 1.0, 0.2], vec![0.1, 0.2, 0.3], vec![1.0, -1.0, 1.0], 1.0).unwrap();
        assert_eq!(d.arrivals(), &[0.5, 1.5, 1.7]);
    }

    #[test]
    fn draw_is_reproducible_and_valid() {
        let a = draw_series(9, 500, 2.0).unwrap();
        let b = draw_series(9, 500, 2.0).unwrap();
        assert_eq!(a, b);
        assert!(a.arrivals()[0] > 0.0);
        assert!(a.arrivals().windows(2).all(|w| w[1] > w[0]));
        assert!(a.locations().iter().all(|v| (0.0..=2.0).contains(v)));
        assert!(a.signs().iter().all(|s| s.abs() == 1.0));
        assert_ne!(a, draw_series(10, 500, 2.0).unwrap());
        // a longer draw extends a shorter one from the same seed
        assert_eq!(draw_series(9, 800, 2.0).unwrap().truncated(500).unwrap(), a);
    }

    #[test]
    fn empty_draw_is_rejected() {
        assert!(matches!(draw_series(1, 0, 1.0), Err(Error::EmptyDraw)));
    }

    #[test]
    fn arrival_growth_and_sign_balance() {
        let means: Vec<f64> = (0..1000)
            .map(|s| {
                let d = draw_series(s, 1000, 1.0).unwrap();
                d.arrivals()[999] / 1000.0
            })
            .collect();
        let mean = means.iter().sum::<f64>() / 1000.0;
        assert!((mean - 1.0).abs() < 0.1, "{mean}");

        let signs: f64 = (0..10_000)
            .map(|s| draw_series(s, 1, 1.0).unwrap().signs()[0])
            .sum::<f64>()
            / 1e4;
        assert!(signs.abs() < 0.03, "{signs}");
    }

    #[test]
    fn single_term_li_is_a_step() {
        let f = AlphaFunction::constant(1.0, 1.0).unwrap();
        let d = SeriesDraw::from_parts(vec![1.0], vec![0.3], vec![1.0], 1.0).unwrap();
        let grid = unit_grid(11);
        let p = simulate_li_fkl(&d, &f, &grid).unwrap();
        for (t, v) in grid.points().iter().zip(&p.values) {
            let want = if *t >= 0.3 { 2.0 / PI } else { 0.0 };
            assert!((v - want).abs() < 1e-14, "t = {t}: {v}");
        }
    }

    #[test]
    fn single_term_lf_follows_diagonal_exponent() {
        let f = AlphaFunction::affine(1.0, 0.5, 1.0).unwrap();
        let d = SeriesDraw::from_parts(vec![2.0], vec![0.0], vec![1.0], 1.0).unwrap();
        let grid = unit_grid(21);
        let p = simulate_lf_fkl(&d, &f, &grid).unwrap();
        for (t, v) in grid.points().iter().zip(&p.values) {
            let a = 1.0 + t / 2.0;
            let want = crate::stable::c_alpha_pow(a).unwrap() * 2f64.powf(-1.0 / a);
            assert!((v - want).abs() < 1e-12, "t = {t}: {v} vs {want}");
        }
    }

    #[test]
    fn constant_alpha_collapses_lf_onto_li() {
        let f = AlphaFunction::constant(1.3, 2.0).unwrap();
        let grid = TimeGrid::uniform(2.0, 101).unwrap();
        for seed in 0..5 {
            let d = draw_series(seed, 2000, 2.0).unwrap();
            let li = simulate_li_fkl(&d, &f, &grid).unwrap();
            let lf = simulate_lf_fkl(&d, &f, &grid).unwrap();
            assert_eq!(li.values, lf.values);
            let general = simulate_general_fkl(&d, &f, &IndicatorKernel { p: 1.5 }, &grid).unwrap();
            assert_eq!(general.values, lf.values);
        }
    }

    #[test]
    fn indicator_kernel_reproduces_lf() {
        let f = AlphaFunction::affine(1.2, 0.3, 1.0).unwrap();
        let grid = unit_grid(50);
        let d = draw_series(3, 3000, 1.0).unwrap();
        let lf = simulate_lf_fkl(&d, &f, &grid).unwrap();
        let general = simulate_general_fkl(&d, &f, &IndicatorKernel { p: 1.7 }, &grid).unwrap();
        assert_eq!(general.values, lf.values);
    }

    #[test]
    fn min_and_zero_kernels() {
        let f = AlphaFunction::constant(1.0, 1.0).unwrap();
        let d = SeriesDraw::from_parts(vec![1.0], vec![0.4], vec![1.0], 1.0).unwrap();
        let grid = unit_grid(11);
        let p = simulate_general_fkl(&d, &f, &MinKernel { horizon: 1.0, p: 1.5 }, &grid).unwrap();
        for (t, v) in grid.points().iter().zip(&p.values) {
            assert!((v - 2.0 / PI * t.min(0.4)).abs() < 1e-14);
        }
        let z = simulate_general_fkl(&draw_series(1, 100, 1.0).unwrap(), &f, &ZeroKernel { p: 1.5 }, &grid).unwrap();
        assert!(z.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn kernel_bound_violation_is_reported() {
        let f = AlphaFunction::constant(1.0, 1.0).unwrap();
        let k = FnKernel {
            f: |t: f64, _x: f64| 2.0 * t,
            bound: 1.0,
            variation: |_x: f64| 2.0,
            p: 1.5,
        };
        let err = simulate_general_fkl(&draw_series(1, 10, 1.0).unwrap(), &f, &k, &unit_grid(5)).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation(_)));
        let bad_p = IndicatorKernel { p: 0.9 };
        assert!(check_kernel(&bad_p, &f).is_err());
    }

    #[test]
    fn li_jumps_sit_at_locations() {
        let f = AlphaFunction::affine(1.2, 0.3, 1.0).unwrap();
        let d = draw_series(5, 200, 1.0).unwrap();
        let mut pts: Vec<f64> = d.locations().to_vec();
        pts.push(0.0);
        pts.push(1.0);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let grid = TimeGrid::new(pts, 1.0).unwrap();
        let p = simulate_li_fkl(&d, &f, &grid).unwrap();
        let (jumps, _) = li_jumps(&d, &f);
        for (i, v) in d.locations().iter().enumerate() {
            let k = grid.index_of(*v).unwrap();
            assert_eq!(p.values[k] - p.values[k - 1], jumps[i]);
            let exact = d.signs()[i]
                * crate::stable::c_alpha_pow(f.value(*v)).unwrap()
                * d.arrivals()[i].powf(-1.0 / f.value(*v));
            assert!((jumps[i] - exact).abs() < 1e-10 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn poisson_with_no_points_is_zero() {
        let f = AlphaFunction::constant(1.2, 1.0).unwrap();
        let p = simulate_li_poisson(1, &f, &unit_grid(4), 0).unwrap();
        assert_eq!(p.values, vec![0.0; 4]);
    }

    #[test]
    fn paths_start_at_zero() {
        let f = AlphaFunction::affine(1.2, 0.3, 1.0).unwrap();
        let grid = unit_grid(3);
        let d = draw_series(2, 100, 1.0).unwrap();
        assert_eq!(simulate_li_fkl(&d, &f, &grid).unwrap().values[0], 0.0);
        assert_eq!(simulate_lf_fkl(&d, &f, &grid).unwrap().values[0], 0.0);
        assert_eq!(simulate_li_poisson(2, &f, &grid, 100).unwrap().values[0], 0.0);
    }

    #[test]
    fn mismatched_horizons_are_rejected() {
        let f = AlphaFunction::constant(1.2, 1.0).unwrap();
        let d = draw_series(2, 10, 2.0).unwrap();
        assert!(matches!(
            simulate_li_fkl(&d, &f, &unit_grid(3)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn silenced_draw_has_zero_gaps() {
        let f = AlphaFunction::affine(1.2, 0.3, 1.0).unwrap();
        let draws: Vec<SeriesDraw> = (0..3).map(|s| draw_series(s, 512, 1.0).unwrap().silenced()).collect();
        let r = partial_sum_convergence(&draws, &f, &[16, 64, 256], &unit_grid(33)).unwrap();
        assert!(r.median_unit.iter().chain(&r.median_log).all(|g| *g == 0.0));
    }

    #[test]
    fn gaps_decay_when_d_below_one() {
        let f = AlphaFunction::constant(0.8, 1.0).unwrap();
        let draws: Vec<SeriesDraw> = (0..5).map(|s| draw_series(s, 8192, 1.0).unwrap()).collect();
        let r = partial_sum_convergence(&draws, &f, &[256, 4096], &unit_grid(65)).unwrap();
        assert!(r.median_unit[1] < r.median_unit[0]);
        assert!(r.median_log[1] < r.median_log[0]);
    }

    #[test]
    fn truncation_bound_holds_on_its_event() {
        let f = AlphaFunction::constant(0.7, 1.0).unwrap();
        let n = 200;
        let bound = truncation_tail_bound(n, f.bounds(), 1.0).unwrap();
        let grid = unit_grid(101);
        for seed in 0..20 {
            let d = draw_series(seed, 20_000, 1.0).unwrap();
            if !tail_event_holds(&d, n) {
                continue;
            }
            let full = simulate_li_fkl(&d, &f, &grid).unwrap();
            let head = simulate_li_fkl(&d.truncated(n).unwrap(), &f, &grid).unwrap();
            let gap = full
                .values
                .iter()
                .zip(&head.values)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(gap <= bound, "{gap} > {bound}");
        }
        assert!(truncation_tail_bound(n, (1.2, 1.5), 1.0).is_err());
    }

    #[test]
    fn simulation_is_schedule_independent() {
        let f = AlphaFunction::affine(1.2, 0.3, 1.0).unwrap();
        let grid = unit_grid(9);
        let job = |seed| simulate_lf_fkl(&draw_series(seed, 300, 1.0)?, &f, &grid).map(|p| p.values);
        let a = simulate_many(4, 16, job).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| simulate_many(4, 16, job)).unwrap();
        assert_eq!(a, b);
    }
}
