//! Normalisation constant `C_u`, symmetric stable characteristic functions,
//! and an exact sampler used as an independent oracle.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::LazyLock;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{domain, Error, Result};
use crate::quad::{self, Estimate, Tolerance};

fn check_index(u: f64) -> Result<()> {
    if u > 0.0 && u < 2.0 {
        Ok(())
    } else {
        Err(domain("u", u, "(0, 2)"))
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `∫_0^∞ x^{-u} sin x dx` by quadrature.
///
/// On `[0, π]` the substitution `s = x^{2-u}` removes the endpoint
/// singularity; beyond `π` the integral is a sum of alternating half-period
/// pieces, accelerated with Wynn's epsilon algorithm.
pub fn sine_moment(u: f64) -> Result<Estimate> {
    check_index(u)?;
    let p = 2.0 - u;
    let inv_p = 1.0 / p;
    let head = quad::integrate(
        |s: f64| sinc(s.powf(inv_p)),
        0.0,
        PI.powf(p),
        Tolerance::new(1e-16, 1e-14),
    )?;
    let piece_tol = Tolerance::new(1e-16, 1e-14);
    let tail = quad::accelerated_series(
        |k| {
            let start = (k + 1) as f64 * PI;
            let piece = quad::integrate(|y: f64| (start + y).powf(-u) * y.sin(), 0.0, PI, piece_tol)?;
            let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
            Ok(Estimate::new(sign * piece.value, piece.abs_err))
        },
        Tolerance::new(1e-15, 1e-14),
        6,
        2000,
    )?;
    Ok(Estimate::new(
        head.value * inv_p + tail.value,
        head.abs_err * inv_p + tail.abs_err,
    ))
}

/// `C_u = (∫_0^∞ x^{-u} sin x dx)^{-1}`, evaluated by quadrature.
pub fn c_alpha(u: f64) -> Result<f64> {
    let m = sine_moment(u)?;
    if m.value <= 0.0 || !m.value.is_finite() {
        return Err(Error::NonFinite(format!("sine moment {} at u = {u}", m.value)));
    }
    Ok(1.0 / m.value)
}

/// `C_u^{1/u}`, the scale factor carried by every series term.
pub fn c_alpha_pow(u: f64) -> Result<f64> {
    Ok(c_alpha(u)?.powf(1.0 / u))
}

/// `ln C_u` from `1/C_u = Γ(1-u)·cos(πu/2)`, written in `ε = 1 - u` so that
/// it is regular at `u = 1`: `C_u = (2/π) / (Γ(1+ε)·sinc(πε/2))`.
pub fn ln_c_alpha_closed_form(u: f64) -> Result<f64> {
    check_index(u)?;
    let eps = 1.0 - u;
    Ok((2.0 / PI).ln() - ln_gamma(1.0 + eps) - sinc(FRAC_PI_2 * eps).ln())
}

pub fn c_alpha_closed_form(u: f64) -> Result<f64> {
    Ok(ln_c_alpha_closed_form(u)?.exp())
}

/// `d ln C_u / du = ψ(1+ε) + (π/2)(cot x - 1/x)` with `ε = 1 - u`, `x = πε/2`.
pub fn c_alpha_log_deriv(u: f64) -> Result<f64> {
    check_index(u)?;
    let eps = 1.0 - u;
    let x = FRAC_PI_2 * eps;
    let cot_gap = if x.abs() < 0.1 {
        let x2 = x * x;
        -x * (1.0 / 3.0 + x2 * (1.0 / 45.0 + x2 * (2.0 / 945.0 + x2 / 4725.0)))
    } else {
        1.0 / x.tan() - 1.0 / x
    };
    Ok(digamma(1.0 + eps) + FRAC_PI_2 * cot_gap)
}

/// `α ∫_0^∞ (1 - cos z) z^{-α-1} dz`, which equals `1/C_α`.
pub fn cosine_kernel_moment(alpha: f64) -> Result<Estimate> {
    check_index(alpha)?;
    // head on [0, π] with z = s^{1/(2-α)}: (1 - cos z) z^{-α-1} dz = (1-cos z)/z² · ds/(2-α)
    let p = 2.0 - alpha;
    let inv_p = 1.0 / p;
    let head = quad::integrate(
        |s: f64| {
            let z = s.powf(inv_p);
            let h = sinc(0.5 * z);
            0.5 * h * h
        },
        0.0,
        PI.powf(p),
        Tolerance::new(1e-16, 1e-14),
    )?;
    // ∫_π^∞ z^{-α-1} dz = π^{-α}/α, minus the oscillating cos part
    let power = PI.powf(-alpha) / alpha;
    let piece_tol = Tolerance::new(1e-16, 1e-14);
    let first = quad::integrate(|z: f64| z.powf(-alpha - 1.0) * z.cos(), PI, 1.5 * PI, piece_tol)?;
    let rest = quad::accelerated_series(
        |k| {
            let start = (k as f64 + 1.5) * PI;
            let piece = quad::integrate(|y: f64| (start + y).powf(-alpha - 1.0) * y.sin(), 0.0, PI, piece_tol)?;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            Ok(Estimate::new(sign * piece.value, piece.abs_err))
        },
        Tolerance::new(1e-16, 1e-14),
        6,
        2000,
    )?;
    let value = head.value * inv_p + power - first.value - rest.value;
    let err = head.abs_err * inv_p + first.abs_err + rest.abs_err;
    Ok(Estimate::new(alpha * value, alpha * err))
}

const TABLE_STEPS: usize = 1024;

/// `ln(C_u / (2-u))` tabulated at `u = k/1024`, `k = 1..2047`, from the
/// quadrature definition. The ratio is smooth on all of `(0, 2)`.
static LN_RATIO: LazyLock<Vec<f64>> = LazyLock::new(|| {
    (1..2 * TABLE_STEPS)
        .map(|k| {
            let u = k as f64 / TABLE_STEPS as f64;
            let c = c_alpha(u).unwrap_or_else(|e| panic!("C_u quadrature failed at u = {u}: {e}"));
            c.ln() - (2.0 - u).ln()
        })
        .collect()
});

/// Interpolated `ln(C_u/(2-u))` for use inside simulation loops.
fn ln_ratio(u: f64) -> f64 {
    let table = &*LN_RATIO;
    let x = u * TABLE_STEPS as f64;
    // node j of the table sits at u = (j+1)/1024
    let lo = 1.0;
    let hi = (2 * TABLE_STEPS - 1) as f64;
    if !(lo..=hi).contains(&x) {
        return ln_c_alpha_closed_form(u).map_or(f64::NAN, |l| l - (2.0 - u).ln());
    }
    // four-node stencil centred on the bracketing pair
    let len = table.len();
    let base = ((x.floor() as isize) - 2).clamp(0, len as isize - 4) as usize;
    let pos = |m: usize| (base + 1 + m) as f64;
    let mut acc = 0.0;
    for j in 0..4 {
        let mut w = 1.0;
        for m in 0..4 {
            if m != j {
                w *= (x - pos(m)) / (pos(j) - pos(m));
            }
        }
        acc += w * table[base + j];
    }
    acc
}

/// Fast evaluator for the series terms `C_u^{1/u} (Γ/T)^{-1/u}`.
pub struct NormTable;

impl NormTable {
    /// Interpolated `ln C_u`.
    #[inline]
    pub fn ln_c(u: f64) -> f64 {
        (2.0 - u).ln() + ln_ratio(u)
    }

    /// `C_u^{1/u} e^{-ℓ/u}`, with `ℓ = ln(Γ/T)`.
    #[inline]
    pub fn term(u: f64, ell: f64) -> f64 {
        ((Self::ln_c(u) - ell) / u).exp()
    }

    /// Interpolated `C_u^{1/u}`.
    #[inline]
    pub fn c_pow(u: f64) -> f64 {
        Self::term(u, 0.0)
    }

    /// Forces the table build so later timings exclude it.
    pub fn warm() {
        LazyLock::force(&LN_RATIO);
    }
}

/// `sup_{b ∈ [c, d]} C_b^{1/b} s^{1/b}` for a fixed `s > 0`.
pub fn sup_scaled_c_pow(c: f64, d: f64, s: f64) -> f64 {
    let f = |b: f64| ((NormTable::ln_c(b) + s.ln()) / b).exp();
    if c == d {
        return f(c);
    }
    let n = 2048;
    let mut best = (c, f(c));
    for k in 1..=n {
        let b = c + (d - c) * k as f64 / n as f64;
        let v = f(b);
        if v > best.1 {
            best = (b, v);
        }
    }
    // golden-section polish around the best scan point
    let h = (d - c) / n as f64;
    let (mut a, mut z) = ((best.0 - h).max(c), (best.0 + h).min(d));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let x1 = z - g * (z - a);
        let x2 = a + g * (z - a);
        if f(x1) >= f(x2) {
            z = x2;
        } else {
            a = x1;
        }
    }
    // slack covers interpolation error in the table
    best.1.max(f(0.5 * (a + z))) * (1.0 + 1e-9)
}

/// Parameters of the symmetric stable law with CF `exp(-t|θ|^α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    alpha: f64,
    scale_time: f64,
}

impl StableParams {
    pub fn new(alpha: f64, scale_time: f64) -> Result<Self> {
        check_index(alpha)?;
        if !(scale_time >= 0.0 && scale_time.is_finite()) {
            return Err(domain("scale_time", scale_time, "[0, ∞)"));
        }
        Ok(Self { alpha, scale_time })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale_time(&self) -> f64 {
        self.scale_time
    }
}

/// `exp(-t|θ|^α)`.
pub fn stable_cf(p: StableParams, theta: f64) -> f64 {
    if p.scale_time == 0.0 {
        return 1.0;
    }
    (-p.scale_time * theta.abs().powf(p.alpha)).exp()
}

/// One draw from the symmetric α-stable law with CF `exp(-t|θ|^α)` by the
/// Chambers–Mallows–Stuck transform.
pub fn sample_stable_oracle<R: Rng + ?Sized>(alpha: f64, scale_time: f64, rng: &mut R) -> Result<f64> {
    check_index(alpha)?;
    if !(scale_time > 0.0 && scale_time.is_finite()) {
        return Err(domain("scale_time", scale_time, "(0, ∞)"));
    }
    let u = PI * (rng.random::<f64>() - 0.5);
    let x = if alpha == 1.0 {
        u.tan()
    } else {
        let w: f64 = Exp1.sample(rng);
        (alpha * u).sin() / u.cos().powf(1.0 / alpha) * (((1.0 - alpha) * u).cos() / w).powf((1.0 - alpha) / alpha)
    };
    Ok(scale_time.powf(1.0 / alpha) * x)
}
