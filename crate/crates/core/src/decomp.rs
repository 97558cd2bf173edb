//! Semi-martingale decompositions of `L_I` and `L_F`, path variation and the
//! simple predictable integral.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alpha::AlphaFunction;
use crate::error::{domain, Error, Result};
use crate::quad::{self, gauss16, Tolerance};
use crate::rng;
use crate::series::{self, draw_series, li_jumps, step_path, PathSample, ProcessKind, SeriesDraw, TimeGrid};
use crate::stable::{c_alpha_log_deriv, ln_c_alpha_closed_form, sup_scaled_c_pow, NormTable};

/// Which decomposition produced a [`DecompositionResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRule {
    /// `A′` holds the terms with `Γ_i < 1`.
    MagnitudeSplit,
    /// `A₁` holds the terms with `α(V_i) < 1/i`; ties go to `M₁`.
    AlternateSplit,
    /// `L_F = A + L_I` with `A` the absolutely continuous field drift.
    FieldDrift,
}

/// `target = a_path + m_path` on every grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub a_path: PathSample,
    pub m_path: PathSample,
    pub rule: SplitRule,
    /// Zero-based indices of the series terms assigned to the `A` part.
    /// Empty for [`SplitRule::FieldDrift`].
    pub a_terms: Vec<usize>,
}

impl DecompositionResult {
    /// `a_path + m_path` per grid point.
    pub fn total(&self) -> Vec<f64> {
        self.a_path
            .values
            .iter()
            .zip(&self.m_path.values)
            .map(|(a, m)| a + m)
            .collect()
    }
}

fn split_li(
    draw: &SeriesDraw,
    f: &AlphaFunction,
    grid: &TimeGrid,
    rule: SplitRule,
    in_a: impl Fn(usize) -> bool,
) -> Result<DecompositionResult> {
    // validates horizons
    series::simulate_li_fkl(&draw.truncated(1)?, f, grid)?;
    let (jumps, _) = li_jumps(draw, f);
    let mut a_jumps = vec![0.0; jumps.len()];
    let mut m_jumps = vec![0.0; jumps.len()];
    let mut a_terms = Vec::new();
    for (i, &j) in jumps.iter().enumerate() {
        if in_a(i) {
            a_jumps[i] = j;
            a_terms.push(i);
        } else {
            m_jumps[i] = j;
        }
    }
    let path = |jumps: &[f64]| PathSample {
        grid: grid.clone(),
        values: step_path(draw.locations(), jumps, grid),
        kind: ProcessKind::Li,
        draw: draw.draw_ref(),
    };
    Ok(DecompositionResult {
        a_path: path(&a_jumps),
        m_path: path(&m_jumps),
        rule,
        a_terms,
    })
}

/// `L_I = A′ + M′` with `A′` the terms whose unit-rate arrival satisfies `Γ_i < 1`.
///
/// The jumps share one quantum, so both parts and their sum are exact and
/// `a_path + m_path` equals [`series::simulate_li_fkl`] bit for bit.
pub fn decompose_li_magnitude(draw: &SeriesDraw, f: &AlphaFunction, grid: &TimeGrid) -> Result<DecompositionResult> {
    let arrivals = draw.arrivals();
    split_li(draw, f, grid, SplitRule::MagnitudeSplit, |i| arrivals[i] < 1.0)
}

/// `L_I = A₁ + M₁` with `A₁` the terms with `α(V_i) < 1/i` (one-based `i`).
pub fn decompose_li_alternate(draw: &SeriesDraw, f: &AlphaFunction, grid: &TimeGrid) -> Result<DecompositionResult> {
    let locations = draw.locations();
    split_li(draw, f, grid, SplitRule::AlternateSplit, |i| {
        f.value(locations[i]) < 1.0 / (i + 1) as f64
    })
}

/// Bound `sup_{b ∈ [c, d]} C_b^{1/b} T^{1/b}` on every jump of `M′`.
pub fn magnitude_split_jump_bound(f: &AlphaFunction) -> f64 {
    let (c, d) = f.bounds();
    sup_scaled_c_pow(c, d, f.domain_end())
}

/// Largest jump magnitude among the `M′` terms of a draw.
pub fn max_m_jump(draw: &SeriesDraw, f: &AlphaFunction) -> f64 {
    let (jumps, _) = li_jumps(draw, f);
    jumps
        .iter()
        .zip(draw.arrivals())
        .filter(|(_, &g)| g >= 1.0)
        .fold(0.0f64, |m, (j, _)| m.max(j.abs()))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(domain("Γ", gamma, "(0, ∞)"))
    }
}

/// `g(t) = C_{α(t)}^{1/α(t)} Γ^{-1/α(t)}`. For horizons other than 1 pass `Γ_i / T`.
pub fn g_eval(gamma: f64, f: &AlphaFunction, t: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let a = f.eval(t)?;
    Ok(((ln_c_alpha_closed_form(a)? - gamma.ln()) / a).exp())
}

/// `g′(t) = g(t) α′(t) (ln C_α′ / α - ln C_α / α² + ln Γ / α²)`.
pub fn g_deriv(gamma: f64, f: &AlphaFunction, t: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let a = f.eval(t)?;
    let da = f.eval_deriv(t)?;
    if da == 0.0 {
        return Ok(0.0);
    }
    let ln_c = ln_c_alpha_closed_form(a)?;
    let ell = gamma.ln();
    let g = ((ln_c - ell) / a).exp();
    Ok(g * da * (c_alpha_log_deriv(a)? / a + (ell - ln_c) / (a * a)))
}

/// Field drift with a per-point error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDrift {
    pub path: PathSample,
    /// Accumulated `|refined − coarse|` up to each grid point.
    pub abs_err: Vec<f64>,
}

/// Per-node factors of `Σ_i γ_i g_i′(s) = w₀(s) Σ γ_i e^{-ℓ_i/α} + w₁(s) Σ γ_i ℓ_i e^{-ℓ_i/α}`.
struct Node {
    inv_alpha: f64,
    w0: f64,
    w1: f64,
}

impl Node {
    fn at(f: &AlphaFunction, s: f64) -> Result<Self> {
        let a = f.value(s);
        let da = f.deriv(s);
        if da == 0.0 {
            return Ok(Self {
                inv_alpha: 1.0 / a,
                w0: 0.0,
                w1: 0.0,
            });
        }
        let ln_c = NormTable::ln_c(a);
        let scale = da * (ln_c / a).exp();
        Ok(Self {
            inv_alpha: 1.0 / a,
            w0: scale * (c_alpha_log_deriv(a)? / a - ln_c / (a * a)),
            w1: scale / (a * a),
        })
    }

    fn eval(&self, terms: &[(f64, f64)]) -> f64 {
        if self.w0 == 0.0 && self.w1 == 0.0 {
            return 0.0;
        }
        let (mut s0, mut s1) = (0.0, 0.0);
        for &(sign, ell) in terms {
            let e = sign * (-ell * self.inv_alpha).exp();
            s0 += e;
            s1 += ell * e;
        }
        self.w0 * s0 + self.w1 * s1
    }
}

/// Order-16 Gauss rule on `[a, b]` and on its two halves; returns the refined
/// value and the difference.
fn gauss_refined(f: &AlphaFunction, terms: &[(f64, f64)], a: f64, b: f64) -> Result<(f64, f64)> {
    let rule = gauss16();
    let apply = |lo: f64, hi: f64| -> Result<f64> {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        let mut acc = 0.0;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            acc += w * Node::at(f, c + h * x)?.eval(terms);
        }
        Ok(acc * h)
    };
    let coarse = apply(a, b)?;
    let m = 0.5 * (a + b);
    let fine = apply(a, m)? + apply(m, b)?;
    Ok((fine, (fine - coarse).abs()))
}

/// `A(t) = ∫_0^t Σ_i γ_i g_i′(s) 1(V_i < s) ds` with `g_i` evaluated at `Γ_i / T`.
///
/// The integrand is smooth between consecutive grid points and locations, so
/// each such cell gets a fixed Gauss rule with one refinement pass.
pub fn compute_a_field_with_error(draw: &SeriesDraw, f: &AlphaFunction, grid: &TimeGrid) -> Result<FieldDrift> {
    if !f.is_c1() {
        return Err(Error::Unsupported("the field drift needs a C¹ exponent".into()));
    }
    series::simulate_li_fkl(&draw.truncated(1)?, f, grid)?;
    let ells = draw.log_scaled();
    let mut order: Vec<usize> = (0..draw.n_terms()).collect();
    order.sort_by(|&a, &b| draw.locations()[a].total_cmp(&draw.locations()[b]));
    let terms: Vec<(f64, f64)> = order.iter().map(|&i| (draw.signs()[i], ells[i])).collect();
    let locs: Vec<f64> = order.iter().map(|&i| draw.locations()[i]).collect();

    let mut values = Vec::with_capacity(grid.len());
    let mut errs = Vec::with_capacity(grid.len());
    let (mut acc, mut err) = (0.0, 0.0);
    let mut prev = 0.0;
    let mut active = 0;
    for &t in grid.points() {
        if f.is_constant() {
            values.push(0.0);
            errs.push(0.0);
            continue;
        }
        // terms already active at the left end of the cell
        while active < locs.len() && locs[active] <= prev {
            active += 1;
        }
        let mut entering = active;
        while entering < locs.len() && locs[entering] < t {
            entering += 1;
        }
        if t > prev {
            let (v, e) = gauss_refined(f, &terms[..active], prev, t)?;
            acc += v;
            err += e;
            for j in active..entering {
                let (v, e) = gauss_refined(f, &terms[j..=j], locs[j], t)?;
                acc += v;
                err += e;
            }
        }
        values.push(acc);
        errs.push(err);
        prev = t;
    }
    Ok(FieldDrift {
        path: PathSample {
            grid: grid.clone(),
            values,
            kind: ProcessKind::General,
            draw: draw.draw_ref(),
        },
        abs_err: errs,
    })
}

/// Field drift `A` of `L_F = A + L_I`.
pub fn compute_a_field(draw: &SeriesDraw, f: &AlphaFunction, grid: &TimeGrid) -> Result<PathSample> {
    compute_a_field_with_error(draw, f, grid).map(|d| d.path)
}

/// `A(t) = Σ_i γ_i (g_i(t) − g_i(V_i)) 1(V_i ≤ t)` summed directly.
pub fn a_field_closed_form(draw: &SeriesDraw, f: &AlphaFunction, grid: &TimeGrid) -> Result<Vec<f64>> {
    let ells = draw.log_scaled();
    grid.points()
        .iter()
        .map(|&t| {
            let at = f.value(t);
            Ok(draw
                .locations()
                .iter()
                .zip(draw.signs())
                .zip(&ells)
                .filter(|((&v, _), _)| v <= t)
                .map(|((&v, &s), &l)| s * (NormTable::term(at, l) - NormTable::term(f.value(v), l)))
                .sum())
        })
        .collect()
}

/// `L_F = A + L_I`: `a_path` is the field drift and `m_path` the `L_I` path of the same draw.
pub fn decompose_lf_field(draw: &SeriesDraw, f: &AlphaFunction, grid: &TimeGrid) -> Result<DecompositionResult> {
    Ok(DecompositionResult {
        a_path: compute_a_field(draw, f, grid)?,
        m_path: series::simulate_li_fkl(draw, f, grid)?,
        rule: SplitRule::FieldDrift,
        a_terms: Vec::new(),
    })
}

/// `sup_t |target(t) − (a(t) + m(t))|`.
pub fn reconstruction_gap(target: &PathSample, d: &DecompositionResult) -> Result<f64> {
    if target.values.len() != d.a_path.values.len() {
        return Err(Error::Precondition("paths live on different grids".into()));
    }
    Ok(target
        .values
        .iter()
        .zip(d.total())
        .fold(0.0f64, |m, (y, s)| m.max((y - s).abs())))
}

/// `Σ_j |v_{j+1} − v_j|` over the grid, starting from the first grid value.
pub fn total_variation(path: &PathSample) -> f64 {
    path.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// One block `(s, t]` of a simple predictable integrand with value `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub s: f64,
    pub t: f64,
    pub xi: f64,
}

/// `ξ = ξ₀ 1_{0} + Σ_k ξ_k 1_{(s_k, t_k]}` with ordered, disjoint blocks and `|ξ| ≤ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplePredictable {
    xi0: f64,
    blocks: Vec<Block>,
}

impl SimplePredictable {
    pub fn new(xi0: f64, blocks: Vec<Block>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(xi0.abs() <= 1.0) {
            return bad(format!("|ξ₀| = {} exceeds 1", xi0.abs()));
        }
        let mut prev_t = 0.0;
        for (k, b) in blocks.iter().enumerate() {
            if !(b.xi.abs() <= 1.0) {
                return bad(format!("block {k}: |ξ| = {} exceeds 1", b.xi.abs()));
            }
            if !(b.s >= prev_t && b.s < b.t) {
                return bad(format!(
                    "block {k}: ({}, {}] is empty or overlaps the previous block",
                    b.s, b.t
                ));
            }
            prev_t = b.t;
        }
        Ok(Self { xi0, blocks })
    }

    pub fn xi0(&self) -> f64 {
        self.xi0
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }
}

/// `I_Y(ξ) = Σ_k ξ_k (Y_{t_k} − Y_{s_k})`. Block endpoints must be grid points.
pub fn simple_predictable_integral(path: &PathSample, xi: &SimplePredictable) -> Result<f64> {
    let at = |x: f64| {
        path.value_at(x)
            .ok_or_else(|| Error::Precondition(format!("block endpoint {x} is not a grid point")))
    };
    xi.blocks
        .iter()
        .try_fold(0.0, |acc, b| Ok(acc + b.xi * (at(b.t)? - at(b.s)?)))
}

/// Lévy density `|z|^{-α(x)-1}` of `L_I` as written for the generating triplet.
pub fn levy_measure_li(f: &AlphaFunction, x: f64, z: f64) -> Result<f64> {
    if z == 0.0 || !z.is_finite() {
        return Err(domain("z", z, "ℝ \\ {0}"));
    }
    Ok(z.abs().powf(-f.eval(x)? - 1.0))
}

/// Lévy density of the simulated `L_I`, whose CF is `exp(-∫|θ|^{α} ds)`:
/// `(α C_α / 2) |z|^{-α-1}`.
pub fn levy_density_li(f: &AlphaFunction, x: f64, z: f64) -> Result<f64> {
    let raw = levy_measure_li(f, x, z)?;
    let a = f.value(x);
    Ok(0.5 * a * ln_c_alpha_closed_form(a)?.exp() * raw)
}

/// Expected number of jumps of the simulated `L_I` on `[0, T]` with size above
/// `z₀`: `∫_0^T C_{α(x)} z₀^{-α(x)} dx`.
pub fn expected_jump_count(f: &AlphaFunction, z0: f64) -> Result<f64> {
    if !(z0 > 0.0) {
        return Err(domain("z₀", z0, "(0, ∞)"));
    }
    let ln_z = z0.ln();
    quad::integrate(
        |x| {
            let a = f.value(x);
            (NormTable::ln_c(a) - a * ln_z).exp()
        },
        0.0,
        f.domain_end(),
        Tolerance::new(1e-12, 1e-12),
    )
    .map(|e| e.value)
}

/// Settings of [`good_integrator_probe`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeSettings {
    pub n_draws: usize,
    pub n_integrands: usize,
    pub n_terms: usize,
    pub grid_points: usize,
    pub max_blocks: usize,
    pub p: f64,
    pub k_values: Vec<f64>,
    pub seed: u64,
}

/// One row of the probe report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    #[serde(rename = "K")]
    pub k: f64,
    pub empirical_tail: f64,
    pub fitted_c: f64,
    pub p: f64,
}

/// Tail of `|I_Y(ξ)|` for `Y = L_F` over random simple integrands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub points: Vec<TailPoint>,
    /// `max_K P(|I| > K) K^p`.
    pub fitted_c: f64,
    pub n_integrals: usize,
}

/// Random simple integrand on the grid with `ξ_k = ±1` and last block ending at `T`.
fn random_integrand<R: Rng>(grid: &TimeGrid, max_blocks: usize, rng: &mut R) -> SimplePredictable {
    let pts = grid.points();
    let g = pts.len();
    let n = rng.random_range(1..=max_blocks.min((g - 1) / 2).max(1));
    let mut idx: Vec<usize> = rand::seq::index::sample(rng, g - 1, 2 * n - 1).into_vec();
    idx.push(g - 1);
    idx.sort_unstable();
    let blocks = idx
        .chunks(2)
        .map(|c| Block {
            s: pts[c[0]],
            t: pts[c[1]],
            xi: if rng.random::<bool>() { 1.0 } else { -1.0 },
        })
        .collect();
    SimplePredictable { xi0: 0.0, blocks }
}

/// Empirical `P(|I_{L_F}(ξ)| > K) K^p` over `n_draws × n_integrands` pairs.
/// The report is a fit, not a test.
pub fn good_integrator_probe(f: &AlphaFunction, s: &ProbeSettings) -> Result<ProbeReport> {
    if s.n_draws == 0 || s.n_integrands == 0 {
        return Err(Error::InsufficientSamples(
            "the probe needs draws and integrands".into(),
        ));
    }
    let grid = TimeGrid::uniform(f.domain_end(), s.grid_points)?;
    let horizon = f.domain_end();
    let paths = series::simulate_many(s.seed, s.n_draws, |seed| {
        series::simulate_lf_fkl(&draw_series(seed, s.n_terms, horizon)?, f, &grid)
    })?;
    let mut xi_rng = rng::stream(s.seed, 16);
    let integrands: Vec<SimplePredictable> = (0..s.n_integrands)
        .map(|_| random_integrand(&grid, s.max_blocks, &mut xi_rng))
        .collect();
    let mut exceed = vec![0usize; s.k_values.len()];
    for path in &paths {
        for xi in &integrands {
            let v = simple_predictable_integral(path, xi)?.abs();
            for (c, &k) in exceed.iter_mut().zip(&s.k_values) {
                if v > k {
                    *c += 1;
                }
            }
        }
    }
    let total = s.n_draws * s.n_integrands;
    let points: Vec<TailPoint> = s
        .k_values
        .iter()
        .zip(&exceed)
        .map(|(&k, &c)| {
            let tail = c as f64 / total as f64;
            TailPoint {
                k,
                empirical_tail: tail,
                fitted_c: tail * k.powf(s.p),
                p: s.p,
            }
        })
        .collect();
    let fitted_c = points.iter().fold(0.0f64, |m, p| m.max(p.fitted_c));
    Ok(ProbeReport {
        points,
        fitted_c,
        n_integrals: total,
    })
}
