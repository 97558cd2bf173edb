//! Numerical integration primitives.
//!
//! * [`integrate`]: globally adaptive 15-point Gauss–Kronrod on a finite interval.
//! * [`accelerated_series`]: sums a slowly convergent series (typically the
//!   half-period pieces of an oscillatory tail) with Wynn's epsilon algorithm.
//! * [`GaussRule`]: fixed Gauss–Legendre rules, used where the integrand is
//!   known to be smooth cell by cell.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::LazyLock;

use crate::error::{Error, Result};

/// A value together with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_err: f64,
}

impl Estimate {
    pub fn new(value: f64, abs_err: f64) -> Self {
        Self { value, abs_err }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_segments: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            max_segments: 4000,
        }
    }

    pub const fn with_max_segments(mut self, n: usize) -> Self {
        self.max_segments = n;
        self
    }

    // Kronrod error estimates never fall below ~50ε relative.
    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel.max(100.0 * f64::EPSILON) * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-12, 1e-12)
    }
}

// Kronrod abscissae; odd indices are the embedded Gauss nodes, index 7 is the centre.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One application of the 15-point Kronrod rule with its embedded 7-point
/// Gauss rule. Returns the Kronrod value and a QUADPACK-style error estimate.
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Estimate {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half.abs();
    let res_abs = res_abs * scale;
    let res_asc = res_asc * scale;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Estimate::new(res_k * half, err)
}

struct Segment {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.est.abs_err == other.est.abs_err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.abs_err.total_cmp(&other.est.abs_err)
    }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// The segment with the largest error estimate is bisected until the summed
/// error drops below the tolerance. Non-convergence is reported as
/// [`Error::Quadrature`] carrying the best value reached.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate::new(0.0, 0.0));
    }
    let first = gk15(&mut f, a, b);
    if !first.value.is_finite() {
        return Err(Error::NonFinite(format!("integrand on [{a}, {b}]")));
    }
    let mut heap = BinaryHeap::new();
    let mut value = first.value;
    let mut err = first.abs_err;
    heap.push(Segment { a, b, est: first });

    while err > tol.target(value) {
        if heap.len() >= tol.max_segments {
            return Err(Error::Quadrature { value, estimate: err });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // interval exhausted at floating-point resolution
            heap.push(worst);
            return Err(Error::Quadrature { value, estimate: err });
        }
        let left = gk15(&mut f, worst.a, mid);
        let right = gk15(&mut f, mid, worst.b);
        if !left.value.is_finite() || !right.value.is_finite() {
            return Err(Error::NonFinite(format!("integrand on [{}, {}]", worst.a, worst.b)));
        }
        value += left.value + right.value - worst.est.value;
        err += left.abs_err + right.abs_err - worst.est.abs_err;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            est: left,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            est: right,
        });
    }

    // Re-sum in a fixed order to shed the drift of the running totals.
    let mut segments = heap.into_vec();
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = segments.iter().map(|s| s.est.value).sum();
    let err = segments.iter().map(|s| s.est.abs_err).sum();
    Ok(Estimate::new(value, err))
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums.
/// Returns the deepest even-column entry built from the most recent sums.
pub fn wynn_epsilon(sums: &[f64]) -> f64 {
    let Some(&last) = sums.last() else {
        return 0.0;
    };
    let mut best = last;
    let mut prev = vec![0.0; sums.len() + 1];
    let mut cur = sums.to_vec();
    let mut column = 0usize;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for j in 0..cur.len() - 1 {
            let diff = cur[j + 1] - cur[j];
            if diff == 0.0 || !diff.is_finite() {
                return best;
            }
            next.push(prev[j + 1] + 1.0 / diff);
        }
        column += 1;
        prev = cur;
        cur = next;
        if column % 2 == 0 {
            let candidate = *cur.last().expect("non-empty column");
            if !candidate.is_finite() {
                return best;
            }
            best = candidate;
        }
    }
    best
}

/// Sums `Σ_k term(k)` with epsilon acceleration, stopping once successive
/// extrapolations agree to the tolerance. Each term carries its own error,
/// which is added to the final estimate.
pub fn accelerated_series<F>(mut term: F, tol: Tolerance, min_terms: usize, max_terms: usize) -> Result<Estimate>
where
    F: FnMut(usize) -> Result<Estimate>,
{
    let mut sums: Vec<f64> = Vec::with_capacity(max_terms);
    let mut running = 0.0;
    let mut term_err = 0.0;
    let mut history: Vec<f64> = Vec::new();
    for k in 0..max_terms {
        let t = term(k)?;
        running += t.value;
        term_err += t.abs_err;
        sums.push(running);
        if sums.len() < min_terms.max(3) {
            continue;
        }
        let est = wynn_epsilon(&sums);
        history.push(est);
        if history.len() >= 3 {
            let n = history.len();
            let spread = (history[n - 1] - history[n - 2]).abs() + (history[n - 1] - history[n - 3]).abs();
            if spread <= tol.target(est) {
                return Ok(Estimate::new(est, spread + term_err));
            }
        }
    }
    let est = history.last().copied().unwrap_or(running);
    Err(Error::Quadrature {
        value: est,
        estimate: f64::NAN,
    })
}

/// Fixed Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Nodes and weights by Newton iteration on the Legendre recurrence.
    pub fn legendre(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p1, mut p2) = (1.0, 0.0);
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2.0 * j as f64 + 1.0) * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
                }
                dp = nf * (z * p1 - p2) / (z * z - 1.0);
                let z_old = z;
                z = z_old - p1 / dp;
                if (z - z_old).abs() <= 1e-16 {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Applies the rule on `[a, b]`.
    pub fn apply<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x);
        }
        acc * h
    }
}

static GAUSS8: LazyLock<GaussRule> = LazyLock::new(|| GaussRule::legendre(8));
static GAUSS16: LazyLock<GaussRule> = LazyLock::new(|| GaussRule::legendre(16));

pub fn gauss8() -> &'static GaussRule {
    &GAUSS8
}

pub fn gauss16() -> &'static GaussRule {
    &GAUSS16
}
