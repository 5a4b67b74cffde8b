//! Correlation kernels and level densities.
//!
//! - Finite `(N, M)` Ginibre products: [`finite_g`], [`finite_kernel`],
//!   [`finite_density`]. `G_j` is a Mellin–Barnes integral evaluated on the
//!   vertical line through its real saddle point.
//! - Bulk double-scaling limit: [`bulk_kernel_sum`] (erfi series) and
//!   [`bulk_kernel_poisson`] (its Poisson resummation). They are the same
//!   function; the sum is cheap and accurate for small `ap`, the resummed
//!   form for large `ap`.
//! - Soft-edge double-scaling limit: [`soft_kernel`], integrated along a
//!   horizontal line below the branch points of the integrand.
//! - Limits: [`sine_kernel`], [`airy_kernel`], [`airy_density`].
//!
//! Quantities that overflow in the linear domain (`y^t`, `(x/y)^j`, edge
//! positions) are handled through logarithms.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::specfun::{airy_pair, digamma, faddeeva_parts, ln_gamma, ln_gamma_real};

/// Controls every numerical integral and truncated series in this module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Largest `|u|` (finite kernel) or `|s|` (soft kernel) ever visited.
    pub max_t: f64,
    /// Initial trapezoid nodes per unit length; halved adaptively.
    pub nodes_per_unit: usize,
    /// Distance of the soft-edge contour below the real axis. `None`
    /// selects the saddle point of the Gaussian factor.
    pub contour_shift: Option<f64>,
    /// Target absolute accuracy.
    pub tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            max_t: 1000.0,
            nodes_per_unit: 8,
            contour_shift: None,
            tol: 1e-10,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_t > 0.0) {
            return Err(Error::InvalidParameter("max_t must be positive".into()));
        }
        if self.nodes_per_unit < 8 {
            return Err(Error::InvalidParameter("nodes_per_unit must be at least 8".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        if let Some(d) = self.contour_shift {
            if !(d > 0.0) {
                return Err(Error::InvalidParameter("contour_shift must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Parameters of the bulk interpolating kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulkKernelParams {
    /// Limit of `N/M`.
    pub a: f64,
    /// Relative bulk position, `j = Np`.
    pub p: f64,
    /// Local shift of the zoom window.
    pub delta_p: f64,
}

impl BulkKernelParams {
    pub fn new(a: f64, p: f64, delta_p: f64) -> Result<Self> {
        let out = Self { a, p, delta_p };
        out.validate()?;
        Ok(out)
    }

    /// Parameters with a given product `ap` at `p = 1/2`.
    pub fn from_ap(ap: f64) -> Result<Self> {
        Self::new(2.0 * ap, 0.5, 0.0)
    }

    pub fn ap(&self) -> f64 {
        self.a * self.p
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidParameter(format!("a must be positive, got {}", self.a)));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {}", self.p)));
        }
        if !self.delta_p.is_finite() {
            return Err(Error::InvalidParameter("delta_p must be finite".into()));
        }
        Ok(())
    }
}

/// Gaussian factor of the soft-edge integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoftGaussian {
    /// `exp(−t²/(2a))`. Its large-`a` limit is the Airy density.
    #[default]
    Half,
    /// `exp(−t²/a)`. Keeps a Gaussian of width `√(2a)` after the
    /// expansion of the power, so it has no Airy limit.
    Full,
}

impl SoftGaussian {
    /// `g` in `exp(−g t²/a)`.
    pub fn coefficient(self) -> f64 {
        match self {
            Self::Half => 0.5,
            Self::Full => 1.0,
        }
    }
}

/// Parameters of the soft-edge interpolating kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftKernelParams {
    pub a: f64,
    #[serde(default)]
    pub gaussian: SoftGaussian,
}

impl SoftKernelParams {
    pub fn new(a: f64) -> Result<Self> {
        Self::with_gaussian(a, SoftGaussian::default())
    }

    pub fn with_gaussian(a: f64, gaussian: SoftGaussian) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("a must be positive, got {a}")));
        }
        Ok(Self { a, gaussian })
    }
}

/// A density sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: CurveMeta,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CurveMeta {
    pub label: String,
    pub params: BTreeMap<String, f64>,
}

impl CurveMeta {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

impl DensityCurve {
    pub fn new(xs: Vec<f64>, values: Vec<f64>, meta: CurveMeta) -> Result<Self> {
        if xs.len() != values.len() {
            return Err(Error::GridMismatch(format!(
                "{} grid points but {} values",
                xs.len(),
                values.len()
            )));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::GridMismatch("grid must be strictly increasing".into()));
        }
        Ok(Self { xs, values, meta })
    }

    /// Evaluates `f` at every grid point.
    pub fn tabulate(xs: Vec<f64>, meta: CurveMeta, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let values = xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
        Self::new(xs, values, meta)
    }

    /// Linear interpolation; `None` outside the grid.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        let (first, last) = (*self.xs.first()?, *self.xs.last()?);
        if x < first || x > last {
            return None;
        }
        let k = self.xs.partition_point(|&v| v <= x);
        if k == 0 {
            return Some(self.values[0]);
        }
        if k == self.xs.len() {
            return self.values.last().copied();
        }
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let (y0, y1) = (self.values[k - 1], self.values[k]);
        Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }
}

/// `count` equally spaced points from `min` to `max`, both included.
pub fn grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 || !(max > min) || !min.is_finite() || !max.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "grid needs min < max and at least 2 points (got {min}:{max}:{count})"
        )));
    }
    let step = (max - min) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| if i + 1 == count { max } else { min + step * i as f64 })
        .collect())
}

// ---------------------------------------------------------------------------
// Finite (N, M)

/// Log of the Mellin–Barnes integrand of `G_j` without the `sin(πt)/(πt)`
/// factor.
fn finite_phase(t: Complex64, ln_y: f64, j: usize, n: usize, m: usize, norm: f64) -> Result<Complex64> {
    let a = ln_gamma(Complex64::new(j as f64, 0.0) - t)?;
    let b = ln_gamma(Complex64::new((n - j + 1) as f64, 0.0) + t)?;
    Ok(t * ln_y + (m as f64 + 1.0) * a + b - norm)
}

fn sinc_pi(t: Complex64) -> Complex64 {
    if t.norm() < 1e-8 {
        return Complex64::new(1.0 - PI * PI * (t * t).re / 6.0, -PI * PI * (t * t).im / 6.0);
    }
    (PI * t).sin() / (PI * t)
}

/// Real saddle of the integrand, kept a quarter unit away from the poles.
fn finite_saddle(ln_y: f64, j: usize, n: usize, m: usize) -> Result<f64> {
    let lo_pole = -((n - j + 1) as f64);
    let hi_pole = j as f64;
    let slope = |t: f64| -> Result<f64> {
        Ok(ln_y - (m as f64 + 1.0) * digamma(j as f64 - t)? + digamma((n - j + 1) as f64 + t)?)
    };
    let margin = 0.25;
    let (mut lo, mut hi) = (lo_pole + margin, hi_pole - margin);
    if slope(lo)? >= 0.0 {
        return Ok(lo);
    }
    if slope(hi)? <= 0.0 {
        return Ok(hi);
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if slope(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `G_j` as a function of `ln y`, so that `y = exp(2Mλ)` never has to be
/// formed.
pub fn finite_g_log(j: usize, ln_y: f64, n: usize, m: usize, quad: &QuadratureConfig) -> Result<f64> {
    quad.validate()?;
    if j == 0 || j > n {
        return Err(domain("finite_g", format!("need 1 <= j <= n, got j = {j}, n = {n}")));
    }
    if m == 0 {
        return Err(domain("finite_g", "m = 0 makes the integral divergent; need m >= 1"));
    }
    if !ln_y.is_finite() {
        return Err(domain("finite_g", "y must be positive and finite"));
    }
    let norm = (m as f64 + 1.0) * ln_gamma_real(j as f64)? + ln_gamma_real((n - j + 1) as f64)?;
    let c = finite_saddle(ln_y, j, n, m)?;
    let phi0 = finite_phase(Complex64::new(c, 0.0), ln_y, j, n, m, norm)?.re;
    let f = |u: f64| -> Result<Complex64> {
        let t = Complex64::new(c, u);
        let ph = finite_phase(t, ln_y, j, n, m, norm)?;
        Ok((ph - phi0).exp() * sinc_pi(t))
    };
    // tolerance on the scaled integral
    let scaled_tol = quad.tol * (-phi0).exp().min(1e300);
    let value = trapezoid_symmetric(&f, quad, scaled_tol, "finite kernel integral")?;
    let out = phi0.exp() * value / (2.0 * PI);
    if !out.is_finite() {
        return Err(Error::NonFinite("finite_g"));
    }
    Ok(out)
}

/// `G_j(y)` for `y > 0`.
pub fn finite_g(j: usize, y: f64, n: usize, m: usize, quad: &QuadratureConfig) -> Result<f64> {
    if !(y > 0.0) {
        return Err(domain("finite_g", format!("y must be positive, got {y}")));
    }
    finite_g_log(j, y.ln(), n, m, quad)
}

/// `∫ f(u) du` over the real line for `f(-u) = conj f(u)`, by the
/// trapezoid rule with step halving until two estimates agree within `tol`.
fn trapezoid_symmetric(
    f: &dyn Fn(f64) -> Result<Complex64>,
    quad: &QuadratureConfig,
    tol: f64,
    what: &'static str,
) -> Result<f64> {
    let tail_tol = 0.01 * tol;
    // Σ Re f(k h) over k = start, start + stride, … until the tail is small
    let partial = |h: f64, start: usize, stride: usize| -> Result<f64> {
        let mut sum = 0.0;
        let mut small = 0;
        let mut k = start;
        loop {
            let u = k as f64 * h;
            let v = f(u)?;
            if u > quad.max_t {
                return Err(Error::NonConvergence {
                    what,
                    tail: v.norm() * h,
                    tol,
                });
            }
            sum += v.re;
            if v.norm() * h < tail_tol {
                small += 1;
                if small >= 4 {
                    return Ok(sum);
                }
            } else {
                small = 0;
            }
            k += stride;
        }
    };
    let f0 = f(0.0)?.re;
    let mut h = 1.0 / quad.nodes_per_unit as f64;
    let mut sum = partial(h, 1, 1)?;
    let mut estimate = h * (f0 + 2.0 * sum);
    for _ in 0..10 {
        h *= 0.5;
        sum += partial(h, 1, 2)?;
        let refined = h * (f0 + 2.0 * sum);
        if (refined - estimate).abs() <= tol {
            return Ok(refined);
        }
        estimate = refined;
    }
    Err(Error::NonConvergence {
        what,
        tail: f64::NAN,
        tol,
    })
}

/// `K(x, y) = (1/x) Σ_j (x/y)^j G_j(y)` for `x, y > 0`.
pub fn finite_kernel(x: f64, y: f64, n: usize, m: usize, quad: &QuadratureConfig) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) {
        return Err(domain("finite_kernel", "x and y must be positive"));
    }
    finite_kernel_log(x.ln(), y.ln(), n, m, quad)
}

/// [`finite_kernel`] with logarithmic arguments.
pub fn finite_kernel_log(ln_x: f64, ln_y: f64, n: usize, m: usize, quad: &QuadratureConfig) -> Result<f64> {
    let mut total = 0.0;
    for j in 1..=n {
        let g = finite_g_log(j, ln_y, n, m, quad)?;
        let e = j as f64 * (ln_x - ln_y) - ln_x;
        if e > 700.0 {
            return Err(Error::Overflow("finite_kernel"));
        }
        total += e.exp() * g;
    }
    Ok(total)
}

/// One-point density of the exponents, `R₁(λ) = 2M Σ_j G_j(e^{2Mλ})`.
pub fn finite_density(lambda: f64, n: usize, m: usize, quad: &QuadratureConfig) -> Result<f64> {
    let ln_y = 2.0 * m as f64 * lambda;
    let mut total = 0.0;
    for j in 1..=n {
        total += finite_g_log(j, ln_y, n, m, quad)?;
    }
    Ok(2.0 * m as f64 * total)
}

// ---------------------------------------------------------------------------
// Bulk

/// Neumaier-compensated sum.
#[derive(Default)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

const BULK_TOL: f64 = 1e-15;

/// Bulk kernel from its erfi series,
/// `(1/2πap) Σ_j exp[j(ξ−ζ)/ap] Re erfi[(π/2)√(2ap) + i(ζ−j)/√(2ap)]`.
///
/// Every term is of size `exp(π²ap/2)` while the sum is `O(1)`, so about
/// `π²ap/(2 ln 10)` digits cancel; prefer [`bulk_kernel_poisson`] for
/// `ap ≳ 4`. The common factor `exp[π²ap/2 + (ξ²−ζ²)/(2ap)]` is pulled out
/// and the oscillating phases are formed exactly, so the remaining error is
/// rounding in the terms themselves.
pub fn bulk_kernel_sum(xi: f64, zeta: f64, params: &BulkKernelParams) -> Result<f64> {
    params.validate()?;
    let ap = params.ap();
    let s = (2.0 * ap).sqrt();
    let x0 = 0.5 * PI * s;
    let log_common = x0 * x0 + (xi - zeta) * (xi + zeta) / (2.0 * ap);
    if log_common > 709.0 {
        return Err(Error::Overflow("bulk_kernel_sum"));
    }
    // terms are bounded by exp(-(j-ξ)²/2ap) relative to the common factor,
    // while the result is about 2πap exp(-x0²) relative to it
    let budget = x0 * x0 + (1.0 / BULK_TOL).ln() + (1.0 / (2.0 * PI * ap)).ln().max(0.0);
    let half_width = (2.0 * ap * budget).sqrt() + 1.0;
    if half_width > 1e6 {
        return Err(Error::NonConvergence {
            what: "erfi series truncation",
            tail: half_width,
            tol: BULK_TOL,
        });
    }
    let (sin_z, cos_z) = (PI * zeta).sin_cos();
    let mut acc = Compensated::default();
    let j_lo = (xi - half_width).floor() as i64;
    let j_hi = (xi + half_width).ceil() as i64;
    for j in j_lo..=j_hi {
        let jf = j as f64;
        let d = zeta - jf;
        let y = d.abs() / s;
        let (trap, corr) = faddeeva_parts(Complex64::new(x0, y));
        // exp(2i x0 y) = exp(iπ|ζ − j|), formed without a large argument
        let sign_j = if j.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let sin_d = sign_j * sin_z * d.signum();
        let phase = Complex64::new(sign_j * cos_z, sin_d);
        let gauss = (-(jf - xi) * (jf - xi) / (2.0 * ap)).exp();
        let mut term = (phase * trap).im;
        if corr.im != 0.0 {
            term += (y * y - x0 * x0).exp() * corr.im;
        }
        acc.add(gauss * term);
    }
    let out = log_common.exp() * acc.value() / (2.0 * PI * ap);
    if !out.is_finite() {
        return Err(Error::NonFinite("bulk_kernel_sum"));
    }
    Ok(out)
}

/// Bulk kernel from the Poisson-resummed series
/// `(1/π) e^{(ξ²−ζ²)/2ap} Re Σ_n e^{−2π²ap n(n−1) + iπ(ζ+(2n−1)ξ)} / (2πap n + i(ζ−ξ))`.
/// The `n = 0` term is the sine kernel.
pub fn bulk_kernel_poisson(xi: f64, zeta: f64, params: &BulkKernelParams) -> Result<f64> {
    params.validate()?;
    let ap = params.ap();
    let d = zeta - xi;
    let gauge = (xi - zeta) * (xi + zeta) / (2.0 * ap);
    if gauge.abs() > 709.0 {
        return Err(Error::Overflow("bulk_kernel_poisson"));
    }
    let mut acc = Compensated::default();
    acc.add(PI * sine_kernel(xi, zeta));
    let cut = (1.0 / BULK_TOL).ln() + 10.0;
    // weights are symmetric under n -> 1 - n; walk both directions
    for dir in [1i64, -1] {
        let mut n = if dir > 0 { 1 } else { -1 };
        loop {
            let nf = n as f64;
            let weight_log = -2.0 * PI * PI * ap * nf * (nf - 1.0);
            if -weight_log > cut {
                break;
            }
            let num = Complex64::from_polar(weight_log.exp(), PI * (zeta + (2.0 * nf - 1.0) * xi));
            let den = Complex64::new(2.0 * PI * ap * nf, d);
            acc.add((num / den).re);
            n += dir;
        }
    }
    let out = gauge.exp() * acc.value() / PI;
    if !out.is_finite() {
        return Err(Error::NonFinite("bulk_kernel_poisson"));
    }
    Ok(out)
}

/// Above this `ap` the bulk density is taken from the resummed series.
pub const BULK_SWITCH_AP: f64 = 0.5;

/// `ρ_bulk(ξ; ap) = K_bulk(ξ, ξ)`.
pub fn bulk_density(xi: f64, params: &BulkKernelParams) -> Result<f64> {
    let v = if params.ap() <= BULK_SWITCH_AP {
        bulk_kernel_sum(xi, xi, params)?
    } else {
        bulk_kernel_poisson(xi, xi, params)?
    };
    // clamp tiny negative rounding noise between pickets
    Ok(if v < 0.0 && v > -1e-12 { 0.0 } else { v })
}

/// Two-point correlation `ρ(ξ)ρ(ζ) − K(ξ,ζ)K(ζ,ξ)`, independent of the
/// kernel's gauge.
pub fn bulk_r2(
    xi: f64,
    zeta: f64,
    params: &BulkKernelParams,
    kernel: fn(f64, f64, &BulkKernelParams) -> Result<f64>,
) -> Result<f64> {
    let rx = kernel(xi, xi, params)?;
    let rz = kernel(zeta, zeta, params)?;
    Ok(rx * rz - kernel(xi, zeta, params)? * kernel(zeta, xi, params)?)
}

/// Local shift `Np − [Np] + 1/2 − ap log[(1−p)/p]`.
pub fn delta_p(n: usize, p: f64, a: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("delta_p", format!("p must lie in (0, 1), got {p}")));
    }
    let np = n as f64 * p;
    Ok(np - np.floor() + 0.5 - a * p * ((1.0 - p) / p).ln())
}

/// Log of the upper spectral edge `N^M (M+1)^{M+1} / M^M` of `exp(2ML)`.
pub fn soft_edge_position_log(n: usize, m: usize) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    mf * nf.ln() + (mf + 1.0) * (mf + 1.0).ln() - mf * mf.ln()
}

// ---------------------------------------------------------------------------
// Soft edge

/// Contour `Im t = σ` used for the soft kernel. For `c > 0` the saddle
/// `−a c/(2g)` of the Gaussian factor; otherwise the integrand grows away
/// from the real axis and the contour stays `min(a, 1)` below it. Always at
/// least `min(a, 1)` below the branch points at `Im t = aΔ`.
fn soft_sigma(a: f64, g: f64, delta: f64, c: f64, quad: &QuadratureConfig) -> f64 {
    if let Some(d) = quad.contour_shift {
        return (-d).min(a * delta - d);
    }
    let gap = a.min(1.0);
    let base = if c > 0.0 { -(a * c / (2.0 * g)).max(gap) } else { -gap };
    base.min(a * delta - gap)
}

/// Integrand of the soft kernel at `t = s + iσ`, in the log domain.
fn soft_log_integrand(t: Complex64, a: f64, g: f64, delta: f64, c: f64) -> Result<Complex64> {
    let i = Complex64::i();
    let w = (-i * t / a - delta).exp();
    let base = Complex64::new(1.0, 0.0) - w;
    if base.re <= 0.0 && base.im.abs() < 1e-300 {
        return Err(Error::BranchCrossing { modulus: w.norm() });
    }
    let lg = ln_gamma(Complex64::new(1.0, 0.0) + i * t)?;
    Ok((i * t - 1.0) * base.ln() - lg - g * t * t / a - i * t * c)
}

const SOFT_MAX_ROUNDING: f64 = 1e-7;

fn soft_integral(xi: f64, zeta: f64, a: f64, g: f64, sigma: f64, quad: &QuadratureConfig) -> Result<(f64, f64)> {
    let a23 = a.powf(2.0 / 3.0);
    let delta = (xi - zeta) / a23;
    let c = 1.0 - a.ln() + 1.0 / (2.0 * a) + zeta / a23;
    if sigma >= a * delta {
        return Err(Error::BranchCrossing {
            modulus: (sigma / a - delta).exp(),
        });
    }
    let eval = |s: f64| soft_log_integrand(Complex64::new(s, sigma), a, g, delta, c);
    // reference magnitude from the peak of |integrand| near s = 0
    let ref_log = {
        let mut best = f64::NEG_INFINITY;
        let width = a.sqrt();
        for k in -20..=20 {
            let s = width * k as f64 / 5.0;
            best = best.max(eval(s)?.re);
        }
        best
    };
    let f = |s: f64| -> Result<Complex64> { Ok((eval(s)? - ref_log).exp()) };
    // the integrand is not conjugate-symmetric in s, so integrate both halves
    let scale = ref_log.exp() / (2.0 * PI * a23);
    let tol = quad.tol / scale.max(1e-300);
    let mut h = (a.sqrt().min(1.0) / quad.nodes_per_unit as f64).min(1.0 / quad.nodes_per_unit as f64);
    // singularities sit at distance |σ − aΔ| from the contour
    let dist = (a * delta - sigma).abs();
    h = h.min(2.0 * PI * dist / 40.0);
    let mut prev: Option<f64> = None;
    for _ in 0..12 {
        let mut sum = Compensated::default();
        let mut abs_sum = 0.0;
        for dir in [1.0, -1.0] {
            let mut k = if dir > 0.0 { 0 } else { 1 };
            let mut small = 0;
            loop {
                let s = dir * k as f64 * h;
                if s.abs() > quad.max_t {
                    return Err(Error::NonConvergence {
                        what: "soft kernel integral",
                        tail: f64::NAN,
                        tol: quad.tol,
                    });
                }
                let v = f(s)?;
                sum.add(v.re);
                abs_sum += v.norm();
                if v.norm() * h < 1e-3 * tol {
                    small += 1;
                    if small >= 4 {
                        break;
                    }
                } else {
                    small = 0;
                }
                k += 1;
            }
        }
        let est = sum.value() * h;
        let rounding = 1e-15 * abs_sum * h;
        if let Some(p) = prev {
            if (est - p).abs() <= tol.max(10.0 * rounding) {
                // heavy cancellation leaves no correct digits in f64
                if rounding * scale > SOFT_MAX_ROUNDING {
                    return Err(Error::PrecisionInsufficient { bits: f64::MANTISSA_DIGITS });
                }
                return Ok((est * scale, rounding * scale));
            }
        }
        prev = Some(est);
        h *= 0.5;
    }
    Err(Error::NonConvergence {
        what: "soft kernel step refinement",
        tail: f64::NAN,
        tol: quad.tol,
    })
}

/// Soft-edge interpolating kernel `K_soft(ξ, ζ; a)`.
///
/// The real-axis integral is moved to `Im t = σ < min(0, aΔ)`,
/// `Δ = (ξ−ζ)/a^{2/3}`, which keeps `|exp(−it/a − Δ)| < 1` and hence the
/// principal branch of `(1 − ·)^{it−1}` continuous. The value does not
/// depend on `σ`; this is checked by a second evaluation at a different
/// shift, and a disagreement beyond the larger of the tolerance and the
/// estimated rounding error is reported as [`Error::ContourSensitivity`].
pub fn soft_kernel(xi: f64, zeta: f64, params: &SoftKernelParams, quad: &QuadratureConfig) -> Result<f64> {
    quad.validate()?;
    let a = params.a;
    if !(a > 0.0) {
        return Err(Error::InvalidParameter("a must be positive".into()));
    }
    let a23 = a.powf(2.0 / 3.0);
    let delta = (xi - zeta) / a23;
    let c = 1.0 - a.ln() + 1.0 / (2.0 * a) + zeta / a23;
    let g = params.gaussian.coefficient();
    let sigma = soft_sigma(a, g, delta, c, quad);
    let (v1, r1) = soft_integral(xi, zeta, a, g, sigma, quad)?;
    let top = a * delta;
    let sigma2 = top - (top - sigma) * 0.6;
    let (v2, r2) = soft_integral(xi, zeta, a, g, sigma2, quad)?;
    let allowed = (10.0 * quad.tol).max(100.0 * (r1 + r2));
    if (v1 - v2).abs() > allowed {
        return Err(Error::ContourSensitivity { a: v1, b: v2 });
    }
    Ok(v1)
}

/// `ρ_soft(ξ; a) = K_soft(ξ, ξ; a)`.
pub fn soft_density(xi: f64, params: &SoftKernelParams, quad: &QuadratureConfig) -> Result<f64> {
    soft_kernel(xi, xi, params, quad)
}

// ---------------------------------------------------------------------------
// Limits

/// `sin(π(ξ−ζ)) / (π(ξ−ζ))`.
pub fn sine_kernel(xi: f64, zeta: f64) -> f64 {
    let d = xi - zeta;
    if d.abs() < 1e-8 {
        1.0 - (PI * d).powi(2) / 6.0
    } else {
        (PI * d).sin() / (PI * d)
    }
}

const CBRT_2: f64 = 1.259_921_049_894_873_2;

/// GUE Airy kernel in the normalisation whose density is [`airy_density`].
pub fn airy_kernel(xi: f64, zeta: f64) -> f64 {
    if (xi - zeta).abs() < 1e-6 {
        return airy_density(0.5 * (xi + zeta));
    }
    let (ax, dx) = airy_pair(CBRT_2 * xi);
    let (az, dz) = airy_pair(CBRT_2 * zeta);
    (ax * dz - az * dx) / (CBRT_2 * (xi - zeta))
}

/// `2^{1/3} Ai′(2^{1/3}ξ)² − 2^{2/3} ξ Ai(2^{1/3}ξ)²`.
pub fn airy_density(xi: f64) -> f64 {
    let (ai, aip) = airy_pair(CBRT_2 * xi);
    CBRT_2 * aip * aip - CBRT_2 * CBRT_2 * xi * ai * ai
}
