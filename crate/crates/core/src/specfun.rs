//! Special functions used by the kernel formulas.
//!
//! Everything here is self-contained and pure:
//!
//! - [`ln_gamma`]: complex log-gamma via upward recurrence and Stirling's
//!   series, with reflection for `Re z < 1/2`.
//! - [`digamma`], [`trigamma`]: recurrence plus asymptotic expansion.
//! - [`erfi`]: Maclaurin series near the origin, otherwise through the
//!   Faddeeva function `w(z) = exp(-z²) erfc(-iz)`.
//! - [`airy_ai`], [`airy_ai_prime`]: Maclaurin series in the central
//!   region and the standard asymptotic expansions outside it.
//!
//! The Faddeeva function is evaluated with the trapezoidal rule for
//! `(i/π) ∫ exp(-t²)/(z - t) dt` on a grid of spacing `h = 1/2`, plus the
//! pole correction that accounts for the singularity of the integrand near
//! the real axis. The discretisation error is `O(exp(-π²/h²)) ≈ 1e-17`.

use std::f64::consts::{FRAC_2_SQRT_PI, PI};

use num_complex::Complex64;

use crate::error::{domain, Error, Result};

/// Complex scalar used for integration variables and integrand values.
pub type ComplexValue = Complex64;

const LN_PI: f64 = 1.144_729_885_849_400_2;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// B_{2k} / (2k (2k-1)) for k = 1..10.
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43_867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
];

/// B_{2k} / (2k) for k = 1..7.
const DIGAMMA_ASYMP: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
];

/// B_{2k} for k = 1..7.
const BERNOULLI_EVEN: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

fn check_finite(z: Complex64, what: &'static str) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn finite(z: Complex64, what: &'static str) -> Result<Complex64> {
    check_finite(z, what).map(|_| z)
}

/// Below this real part [`ln_gamma`] switches from upward recurrence to
/// reflection.
const RECURRENCE_FLOOR: f64 = -64.0;

/// Principal-branch log-gamma, `exp(ln_gamma(z)) = Γ(z)`.
///
/// The imaginary part is the branch continuous from the positive real axis
/// with a cut along the negative real axis (the usual `loggamma`
/// convention). Left of `Re z = -64` reflection is used and the imaginary
/// part is only correct modulo 2π.
pub fn ln_gamma(z: Complex64) -> Result<Complex64> {
    check_finite(z, "ln_gamma")?;
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.floor() {
        return Err(Error::Pole(z.re));
    }
    let v = if z.re >= 0.5 {
        ln_gamma_right(z)
    } else if z.re >= RECURRENCE_FLOOR {
        // ln Γ(z) = ln Γ(z + k) − Σ_{i<k} ln(z + i)
        let k = (0.5 - z.re).ceil() as usize;
        let shift: Complex64 = (0..k).map(|i| (z + i as f64).ln()).sum();
        ln_gamma_right(z + k as f64) - shift
    } else {
        Complex64::new(LN_PI, 0.0) - ln_sin_pi(z) - ln_gamma_right(Complex64::new(1.0, 0.0) - z)
    };
    finite(v, "ln_gamma")
}

/// Real log-gamma for positive arguments.
pub fn ln_gamma_real(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain("ln_gamma_real", format!("x = {x} must be positive")));
    }
    Ok(ln_gamma_right(Complex64::new(x, 0.0)).re)
}

fn ln_gamma_right(z: Complex64) -> Complex64 {
    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.norm_sqr() < 256.0 {
        shift += w.ln();
        w += 1.0;
    }
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut p = inv;
    for c in STIRLING {
        series += p * c;
        p *= inv2;
    }
    (w - 0.5) * w.ln() - w + HALF_LN_2PI + series - shift
}

/// `ln(sin(πz))` on some branch, stable for large `|Im z|`.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    if z.im.abs() < 15.0 {
        return (z * PI).sin().ln();
    }
    if z.im > 0.0 {
        // sin(πz) = (i/2) e^{-iπz} (1 - e^{2iπz})
        Complex64::new(0.5f64.ln(), PI / 2.0) - i * PI * z + (1.0 - (i * 2.0 * PI * z).exp()).ln()
    } else {
        Complex64::new(0.5f64.ln(), -PI / 2.0) + i * PI * z + (1.0 - (-i * 2.0 * PI * z).exp()).ln()
    }
}

/// Digamma ψ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("digamma", format!("x = {x} must be positive and finite")));
    }
    let mut acc = 0.0;
    let mut w = x;
    while w < 10.0 {
        acc -= 1.0 / w;
        w += 1.0;
    }
    let inv2 = 1.0 / (w * w);
    let mut p = inv2;
    let mut series = 0.0;
    for c in DIGAMMA_ASYMP {
        series += c * p;
        p *= inv2;
    }
    Ok(acc + w.ln() - 0.5 / w - series)
}

/// Trigamma ψ′(x) for x > 0.
pub fn trigamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("trigamma", format!("x = {x} must be positive and finite")));
    }
    let mut acc = 0.0;
    let mut w = x;
    while w < 10.0 {
        acc += 1.0 / (w * w);
        w += 1.0;
    }
    let inv = 1.0 / w;
    let inv2 = inv * inv;
    let mut p = inv2 * inv;
    let mut series = 0.0;
    for b in BERNOULLI_EVEN {
        series += b * p;
        p *= inv2;
    }
    Ok(acc + inv + 0.5 * inv2 + series)
}

/// Euler–Mascheroni constant, exposed for tests and theory formulas.
pub const fn euler_gamma() -> f64 {
    EULER_GAMMA
}

const FADDEEVA_H: f64 = 0.5;
const FADDEEVA_TERMS: i32 = 14;

/// Trapezoidal part of the Faddeeva integral on nodes `(n + offset) h` and
/// the matching pole correction, returned separately so callers can scale
/// them without overflow. Requires `Im z >= 0`.
///
/// `w(z) = trapezoid + correction * exp(-z²)`.
pub(crate) fn faddeeva_parts(z: Complex64) -> (Complex64, Complex64) {
    let h = FADDEEVA_H;
    // Nodes at nh (offset 0) or (n + 1/2)h, whichever is farther from Re z.
    let frac = (z.re / h).rem_euclid(1.0);
    let dist_int = frac.min(1.0 - frac);
    let dist_half = (frac - 0.5).abs();
    let offset = if dist_int >= dist_half { 0.0 } else { 0.5 };
    let center = (z.re / h).round() as i32;
    let lo = center.min(0) - FADDEEVA_TERMS;
    let hi = center.max(0) + FADDEEVA_TERMS;
    let mut sum = Complex64::new(0.0, 0.0);
    for n in lo..=hi {
        let t = (f64::from(n) + offset) * h;
        let g = (-t * t).exp();
        if g == 0.0 {
            continue;
        }
        sum += g / (z - t);
    }
    let trap = Complex64::i() * (h / PI) * sum;
    let corr = if z.im < PI / h {
        let q = (-Complex64::i() * 2.0 * PI * z / h).exp();
        let denom = if offset == 0.0 { 1.0 - q } else { 1.0 + q };
        2.0 / denom
    } else {
        Complex64::new(0.0, 0.0)
    };
    (trap, corr)
}

/// Faddeeva function `w(z) = exp(-z²) erfc(-iz)`.
pub fn faddeeva(z: Complex64) -> Result<Complex64> {
    check_finite(z, "faddeeva")?;
    if z.im >= 0.0 {
        let (trap, corr) = faddeeva_parts(z);
        let e = (-z * z).exp();
        return finite(trap + corr * e, "faddeeva");
    }
    let (trap, corr) = faddeeva_parts(-z);
    let e = (-z * z).exp();
    finite(2.0 * e - trap - corr * e, "faddeeva")
}

/// `exp(z²) w(z)` for `Im z >= 0`, i.e. `erfc(-iz)`.
fn erfc_minus_iz(z: Complex64) -> Result<Complex64> {
    debug_assert!(z.im >= 0.0);
    let growth = z.re * z.re - z.im * z.im;
    if growth > 700.0 {
        return Err(Error::Overflow("erfi"));
    }
    let (trap, corr) = faddeeva_parts(z);
    finite((z * z).exp() * trap + corr, "erfi")
}

/// Imaginary error function `erfi(z) = (2/√π) ∫₀^z exp(t²) dt`.
///
/// Errors with [`Error::Overflow`] once `|exp(z²)|` leaves the range of
/// `f64`.
pub fn erfi(z: Complex64) -> Result<Complex64> {
    check_finite(z, "erfi")?;
    if z.norm_sqr() <= 1.0 {
        return Ok(erfi_series(z));
    }
    if z.im < 0.0 {
        return erfi(-z).map(|v| -v);
    }
    // erfi(z) = i - i exp(z²) w(z)
    let i = Complex64::i();
    Ok(i - i * erfc_minus_iz(z)?)
}

fn erfi_series(z: Complex64) -> Complex64 {
    let z2 = z * z;
    let mut power = z;
    let mut sum = z;
    let mut k = 0.0;
    loop {
        k += 1.0;
        power *= z2 / k;
        let term = power / (2.0 * k + 1.0);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum * FRAC_2_SQRT_PI
}

const AI0: f64 = 0.355_028_053_887_817_2;
const AIP0: f64 = -0.258_819_403_792_806_8;

/// Airy function Ai(x). Underflows to zero for large positive x.
pub fn airy_ai(x: f64) -> f64 {
    airy_pair(x).0
}

/// Derivative Ai′(x).
pub fn airy_ai_prime(x: f64) -> f64 {
    airy_pair(x).1
}

/// `(Ai(x), Ai′(x))`.
pub fn airy_pair(x: f64) -> (f64, f64) {
    if (-7.0..=5.0).contains(&x) {
        airy_maclaurin(x)
    } else if x > 0.0 {
        airy_asymptotic_pos(x)
    } else {
        airy_asymptotic_neg(-x)
    }
}

fn airy_maclaurin(x: f64) -> (f64, f64) {
    // Ai = Ai(0) f + Ai'(0) g with
    // f = Σ a_k x^{3k}, a_k = a_{k-1} / ((3k-1)(3k))
    // g = Σ b_k x^{3k+1}, b_k = b_{k-1} / ((3k)(3k+1))
    let x3 = x * x * x;
    let (mut f, mut g) = (1.0, x);
    let (mut fp, mut gp) = (0.0, 1.0);
    let mut a = 1.0;
    let mut b = x;
    for k in 1..200 {
        let kf = f64::from(k);
        a *= x3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        b *= x3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        f += a;
        g += b;
        // derivatives: d/dx x^{3k} = 3k x^{3k-1}
        if x != 0.0 {
            fp += a * 3.0 * kf / x;
            gp += b * (3.0 * kf + 1.0) / x;
        }
        if a.abs() + b.abs() <= 1e-18 * (f.abs() + g.abs()) && k > 2 {
            break;
        }
    }
    if x == 0.0 {
        return (AI0, AIP0);
    }
    (AI0 * f + AIP0 * g, AI0 * fp + AIP0 * gp)
}

/// u_k and v_k of the Airy asymptotic expansions.
fn airy_uv(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![1.0];
    let mut v = vec![1.0];
    for k in 1..n {
        let kf = k as f64;
        let uk = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
            / ((2.0 * kf - 1.0) * 216.0 * kf);
        u.push(uk);
        v.push(-(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * uk);
    }
    (u, v)
}

/// Sum of `Σ (-1)^k c_k ζ^{-k}` over `ks`, truncated at the smallest term.
fn alternating_sum(c: &[f64], zeta: f64, ks: impl Iterator<Item = usize>, sign_step: usize) -> f64 {
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    for (count, k) in ks.enumerate() {
        if k >= c.len() {
            break;
        }
        let term = c[k] / zeta.powi(k as i32);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        let sign = if (count * sign_step).is_multiple_of(2) { 1.0 } else { -1.0 };
        sum += sign * term;
    }
    sum
}

fn airy_asymptotic_pos(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let (u, v) = airy_uv(40);
    let su = alternating_sum(&u, zeta, 0..40, 1);
    let sv = alternating_sum(&v, zeta, 0..40, 1);
    let e = (-zeta).exp() / (2.0 * PI.sqrt());
    let q = x.powf(0.25);
    (e / q * su, -e * q * sv)
}

fn airy_asymptotic_neg(z: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * z.powf(1.5);
    let (u, v) = airy_uv(60);
    let pu = alternating_sum(&u, zeta, (0..60).step_by(2), 1);
    let qu = alternating_sum(&u, zeta, (1..60).step_by(2), 1);
    let pv = alternating_sum(&v, zeta, (0..60).step_by(2), 1);
    let qv = alternating_sum(&v, zeta, (1..60).step_by(2), 1);
    let theta = zeta - PI / 4.0;
    let (s, c) = theta.sin_cos();
    let q = z.powf(0.25);
    let sp = PI.sqrt();
    let ai = (c * pu + s * qu) / (q * sp);
    let aip = q / sp * (s * pv - c * qv);
    (ai, aip)
}
