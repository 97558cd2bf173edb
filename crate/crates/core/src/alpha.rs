//! Time-varying stability index `α: [0, T] → [c, d] ⊂ (0, 2)`.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Interpolation used by tabulated α.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Piecewise cubic Hermite with Fritsch–Carlson slopes (C¹, no overshoot).
    #[default]
    MonotoneCubic,
    /// Piecewise linear. Not C¹, so derivative queries are refused.
    Linear,
}

/// Parametric family of α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaKind {
    Constant {
        value: f64,
    },
    /// `a0 + a1·t`
    Affine {
        a0: f64,
        a1: f64,
    },
    /// `mean + amplitude·sin(2π·frequency·t + phase)`
    Sinusoidal {
        mean: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    Table {
        times: Vec<f64>,
        values: Vec<f64>,
        #[serde(default)]
        interpolation: Interpolation,
    },
}

/// A validated stability-index function. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaFunction {
    kind: AlphaKind,
    domain_end: f64,
    bounds: (f64, f64),
    // Hermite slopes at the table knots; empty for the parametric kinds.
    slopes: Vec<f64>,
}

const SCAN_POINTS: usize = 10_000;

impl AlphaFunction {
    /// Validates `kind` on `[0, domain_end]`. Without `declared_bounds` the
    /// exact range of α is used as `(c, d)`.
    pub fn new(kind: AlphaKind, domain_end: f64, declared_bounds: Option<(f64, f64)>) -> Result<Self> {
        if !(domain_end > 0.0 && domain_end.is_finite()) {
            return Err(domain("T", domain_end, "(0, ∞)"));
        }
        let slopes = match &kind {
            AlphaKind::Table { times, values, .. } => {
                validate_table(times, values, domain_end)?;
                pchip_slopes(times, values)
            }
            AlphaKind::Constant { value } => {
                check_finite("value", *value)?;
                Vec::new()
            }
            AlphaKind::Affine { a0, a1 } => {
                check_finite("a0", *a0)?;
                check_finite("a1", *a1)?;
                Vec::new()
            }
            AlphaKind::Sinusoidal {
                mean,
                amplitude,
                frequency,
                phase,
            } => {
                for (name, v) in [
                    ("mean", mean),
                    ("amplitude", amplitude),
                    ("frequency", frequency),
                    ("phase", phase),
                ] {
                    check_finite(name, *v)?;
                }
                Vec::new()
            }
        };
        let mut f = Self {
            kind,
            domain_end,
            bounds: (0.0, 0.0),
            slopes,
        };
        let (lo, hi) = f.exact_range();
        let (c, d) = declared_bounds.unwrap_or((lo, hi));
        if !(c > 0.0 && c <= d && d < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "declared bounds ({c}, {d}) must satisfy 0 < c ≤ d < 2"
            )));
        }
        if lo < c || hi > d {
            return Err(Error::InvalidParameter(format!(
                "α ranges over [{lo}, {hi}], outside the declared bounds [{c}, {d}]"
            )));
        }
        f.bounds = (c, d);
        // the scan catches anything the analytic range might miss through rounding
        for k in 0..=SCAN_POINTS {
            let t = domain_end * k as f64 / SCAN_POINTS as f64;
            let a = f.value(t);
            if !(c..=d).contains(&a) {
                return Err(Error::InvalidParameter(format!("α({t}) = {a} is outside [{c}, {d}]")));
            }
        }
        Ok(f)
    }

    pub fn constant(value: f64, domain_end: f64) -> Result<Self> {
        Self::new(AlphaKind::Constant { value }, domain_end, None)
    }

    pub fn affine(a0: f64, a1: f64, domain_end: f64) -> Result<Self> {
        Self::new(AlphaKind::Affine { a0, a1 }, domain_end, None)
    }

    pub fn sinusoidal(mean: f64, amplitude: f64, frequency: f64, phase: f64, domain_end: f64) -> Result<Self> {
        Self::new(
            AlphaKind::Sinusoidal {
                mean,
                amplitude,
                frequency,
                phase,
            },
            domain_end,
            None,
        )
    }

    pub fn table(times: Vec<f64>, values: Vec<f64>, interpolation: Interpolation, domain_end: f64) -> Result<Self> {
        Self::new(
            AlphaKind::Table {
                times,
                values,
                interpolation,
            },
            domain_end,
            None,
        )
    }

    pub fn kind(&self) -> &AlphaKind {
        &self.kind
    }

    pub fn domain_end(&self) -> f64 {
        self.domain_end
    }

    /// Declared (or exact) range bounds `(c, d)`.
    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn is_constant(&self) -> bool {
        match &self.kind {
            AlphaKind::Constant { .. } => true,
            AlphaKind::Affine { a1, .. } => *a1 == 0.0,
            AlphaKind::Sinusoidal {
                amplitude, frequency, ..
            } => *amplitude == 0.0 || *frequency == 0.0,
            AlphaKind::Table { values, .. } => values.iter().all(|v| *v == values[0]),
        }
    }

    /// Whether a derivative is available everywhere on `[0, T]`.
    pub fn is_c1(&self) -> bool {
        !matches!(
            self.kind,
            AlphaKind::Table {
                interpolation: Interpolation::Linear,
                ..
            }
        )
    }

    /// α(t) with domain checking.
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.value(t))
    }

    /// α′(t) with domain checking.
    pub fn eval_deriv(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if !self.is_c1() {
            return Err(Error::Unsupported(
                "derivative of a piecewise-linear α table".to_string(),
            ));
        }
        Ok(self.deriv(t))
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        if (0.0..=self.domain_end).contains(&t) {
            Ok(())
        } else {
            Err(domain("t", t, format!("[0, {}]", self.domain_end)))
        }
    }

    /// α(t) without domain checking.
    pub fn value(&self, t: f64) -> f64 {
        match &self.kind {
            AlphaKind::Constant { value } => *value,
            AlphaKind::Affine { a0, a1 } => a0 + a1 * t,
            AlphaKind::Sinusoidal {
                mean,
                amplitude,
                frequency,
                phase,
            } => mean + amplitude * (TAU * frequency * t + phase).sin(),
            AlphaKind::Table {
                times,
                values,
                interpolation,
            } => {
                let k = segment(times, t);
                let h = times[k + 1] - times[k];
                let s = (t - times[k]) / h;
                match interpolation {
                    Interpolation::Linear => values[k] + s * (values[k + 1] - values[k]),
                    Interpolation::MonotoneCubic => {
                        let (s2, s3) = (s * s, s * s * s);
                        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * values[k]
                            + (s3 - 2.0 * s2 + s) * h * self.slopes[k]
                            + (-2.0 * s3 + 3.0 * s2) * values[k + 1]
                            + (s3 - s2) * h * self.slopes[k + 1];
                        // the interpolant stays between its knot values; clamp off rounding
                        v.clamp(values[k].min(values[k + 1]), values[k].max(values[k + 1]))
                    }
                }
            }
        }
    }

    /// α′(t) without domain checking. For linear tables this is the one-sided
    /// segment slope.
    pub fn deriv(&self, t: f64) -> f64 {
        match &self.kind {
            AlphaKind::Constant { .. } => 0.0,
            AlphaKind::Affine { a1, .. } => *a1,
            AlphaKind::Sinusoidal {
                amplitude,
                frequency,
                phase,
                ..
            } => amplitude * TAU * frequency * (TAU * frequency * t + phase).cos(),
            AlphaKind::Table {
                times,
                values,
                interpolation,
            } => {
                let k = segment(times, t);
                let h = times[k + 1] - times[k];
                let s = (t - times[k]) / h;
                match interpolation {
                    Interpolation::Linear => (values[k + 1] - values[k]) / h,
                    Interpolation::MonotoneCubic => {
                        (6.0 * s * s - 6.0 * s) * (values[k] - values[k + 1]) / h
                            + (3.0 * s * s - 4.0 * s + 1.0) * self.slopes[k]
                            + (3.0 * s * s - 2.0 * s) * self.slopes[k + 1]
                    }
                }
            }
        }
    }

    /// Exact range of α on `[0, T]`.
    fn exact_range(&self) -> (f64, f64) {
        let end = self.domain_end;
        match &self.kind {
            AlphaKind::Constant { value } => (*value, *value),
            AlphaKind::Affine { a0, a1 } => {
                let (x, y) = (*a0, a0 + a1 * end);
                (x.min(y), x.max(y))
            }
            AlphaKind::Sinusoidal {
                mean,
                amplitude,
                frequency,
                phase,
            } => {
                let (lo, hi) = sin_range(*phase, TAU * frequency * end + phase);
                let (x, y) = (mean + amplitude * lo, mean + amplitude * hi);
                (x.min(y), x.max(y))
            }
            // Both interpolants stay within the neighbouring knot values on
            // each segment, so the extremes sit on knots inside [0, T].
            AlphaKind::Table { times, values, .. } => {
                let mut lo = self.value(0.0).min(self.value(end));
                let mut hi = self.value(0.0).max(self.value(end));
                for (t, v) in times.iter().zip(values) {
                    if *t > 0.0 && *t < end {
                        lo = lo.min(*v);
                        hi = hi.max(*v);
                    }
                }
                (lo, hi)
            }
        }
    }
}

/// Checked evaluation of α(t).
pub fn eval_alpha(f: &AlphaFunction, t: f64) -> Result<f64> {
    f.eval(t)
}

/// Checked evaluation of α′(t).
pub fn eval_alpha_deriv(f: &AlphaFunction, t: f64) -> Result<f64> {
    f.eval_deriv(t)
}

fn check_finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(domain(name, v, "finite reals"))
    }
}

/// Range of sin over the closed interval between `x0` and `x1`.
fn sin_range(x0: f64, x1: f64) -> (f64, f64) {
    let (a, b) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
    let mut lo = a.sin().min(b.sin());
    let mut hi = a.sin().max(b.sin());
    // peaks at π/2 + 2kπ, troughs at -π/2 + 2kπ
    if ((a - FRAC_PI_2) / TAU).ceil() * TAU + FRAC_PI_2 <= b {
        hi = 1.0;
    }
    if ((a + FRAC_PI_2) / TAU).ceil() * TAU - FRAC_PI_2 <= b {
        lo = -1.0;
    }
    (lo, hi)
}

fn validate_table(times: &[f64], values: &[f64], domain_end: f64) -> Result<()> {
    if times.len() < 2 || times.len() != values.len() {
        return Err(Error::InvalidParameter(format!(
            "α table needs at least two knots and equal lengths (got {} times, {} values)",
            times.len(),
            values.len()
        )));
    }
    if times.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("α table contains non-finite entries".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "α table times must be strictly increasing".into(),
        ));
    }
    if times[0] > 0.0 || times[times.len() - 1] < domain_end {
        return Err(Error::InvalidParameter(format!(
            "α table spans [{}, {}] but must cover [0, {domain_end}]",
            times[0],
            times[times.len() - 1]
        )));
    }
    Ok(())
}

/// Index `k` of the table segment `[times[k], times[k+1]]` containing `t`.
fn segment(times: &[f64], t: f64) -> usize {
    let k = times.partition_point(|x| *x <= t);
    k.saturating_sub(1).min(times.len() - 2)
}

/// Fritsch–Carlson monotone slopes with the shape-preserving three-point end rule.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() || m0 == 0.0 {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}
