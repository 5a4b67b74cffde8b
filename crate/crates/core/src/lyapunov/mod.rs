//! Finite-time Lyapunov exponents of matrix products, and the Gaussian
//! theory of the Ginibre case.
//!
//! The exponents are the eigenvalues of `L = (1/2M) log Y†Y`. Three engines
//! are available:
//!
//! - [`Method::QrAccumulation`]: the discrete QR method started from the
//!   identity frame. Cheap, but for finite `M` each exponent carries an
//!   `O(1/M)` error that depends on the starting frame. For Ginibre factors
//!   the accumulated diagonals are exactly independent, so this engine
//!   reproduces the Gaussian comb and misses the level repulsion between
//!   neighbouring exponents.
//! - [`Method::QrRefined`]: keeps the triangular factors of the forward
//!   sweep and runs subspace iteration on `Y†Y = R†R` by alternating
//!   backward (`R_k†`) and forward (`R_k`) sweeps until the exponents stop
//!   moving. Converges to the singular-value exponents of `Y`; this is the
//!   production engine.
//! - [`Method::HighPrecisionSvd`]: forms `Y` in multiple precision and
//!   takes its singular values directly. An oracle for small `N` and `M`.

mod highprec;

pub use highprec::exact_lyapunov_highprec;

use serde::{Deserialize, Serialize};

use crate::ensembles::{factor_iter, ProductSpec};
use crate::error::{domain, Error, Result};
use crate::linalg::{qr_in_place, CMatrix, QrWork, UpperTriangular};
use crate::par::{map_indexed, Execution};
use crate::specfun::{digamma, trigamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    QrAccumulation,
    #[default]
    QrRefined,
    HighPrecisionSvd,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::QrAccumulation => "qr_accumulation",
            Method::QrRefined => "qr_refined",
            Method::HighPrecisionSvd => "high_precision_svd",
        }
    }

    /// Inverse of [`Method::name`].
    pub fn from_name(name: &str) -> Option<Self> {
        [Method::QrAccumulation, Method::QrRefined, Method::HighPrecisionSvd]
            .into_iter()
            .find(|m| m.name() == name)
    }
}

/// Sorted exponents of one sampled product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSpectrum {
    /// Ascending, in nats per factor.
    pub lambdas: Vec<f64>,
    pub n: usize,
    pub m: usize,
    pub method: Method,
    pub sample_index: u64,
    pub master_seed: u64,
}

/// Stopping rule and blocking for the refinement sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    /// Largest change of any exponent between two sweeps at convergence.
    pub tol: f64,
    /// Upper bound on sweeps after the initial forward one. When it is hit
    /// the last estimate is returned; only nearly degenerate pairs converge
    /// that slowly and their error is bounded by the pair's gap.
    pub max_sweeps: usize,
    /// Factors multiplied together between two orthogonalisations. The
    /// diagonal of a product of triangular factors is the product of their
    /// diagonals, so blocking is exact as long as one block does not
    /// exhaust the working precision.
    pub block: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_sweeps: 40,
            block: 5,
        }
    }
}

struct Sweep {
    v: CMatrix,
    z: CMatrix,
    r: UpperTriangular,
    work: QrWork,
    acc: Vec<f64>,
}

impl Sweep {
    fn new(n: usize) -> Self {
        Self {
            v: CMatrix::identity(n),
            z: CMatrix::zeros(n),
            r: UpperTriangular(CMatrix::zeros(n)),
            work: QrWork::new(n),
            acc: vec![0.0; n],
        }
    }

    /// QR of `self.z`, stores `Q` as the new frame and accumulates logs.
    fn absorb(&mut self, index: usize) -> Result<()> {
        qr_in_place(&mut self.z, &mut self.r, &mut self.work, index)?;
        std::mem::swap(&mut self.v, &mut self.z);
        for (a, d) in self.acc.iter_mut().zip(self.r.diagonal()) {
            *a += d.ln();
        }
        Ok(())
    }

    fn take_sorted(&mut self, m: usize) -> Vec<f64> {
        let mut out: Vec<f64> = self.acc.iter().map(|s| s / m as f64).collect();
        self.acc.fill(0.0);
        out.sort_by(f64::total_cmp);
        out
    }
}

/// Forward sweep from the identity frame, orthogonalising after every
/// `block` factors. Returns the exponents, the block triangular factors
/// (when `keep`) and `M`.
fn forward(
    factors: impl IntoIterator<Item = CMatrix>,
    n: usize,
    block: usize,
    keep: bool,
) -> Result<(Vec<f64>, Vec<UpperTriangular>, usize)> {
    let block = block.max(1);
    let mut sw = Sweep::new(n);
    let mut tmp = CMatrix::zeros(n);
    let mut rs = Vec::new();
    let mut m = 0;
    let mut pending = 0;
    for x in factors {
        if x.dim() != n {
            return Err(Error::InvalidParameter("factor dimensions differ".into()));
        }
        if pending == 0 {
            x.mul_into(&sw.v, &mut sw.z);
        } else {
            x.mul_into(&sw.z, &mut tmp);
            std::mem::swap(&mut sw.z, &mut tmp);
        }
        m += 1;
        pending += 1;
        if pending == block {
            sw.absorb(m)?;
            if keep {
                rs.push(sw.r.clone());
            }
            pending = 0;
        }
    }
    if m == 0 {
        return Err(Error::InvalidParameter("empty product".into()));
    }
    if pending > 0 {
        sw.absorb(m)?;
        if keep {
            rs.push(sw.r.clone());
        }
    }
    Ok((sw.take_sorted(m), rs, m))
}

/// Plain discrete-QR exponents of the product of `factors` (first factor
/// applied first), sorted ascending. Orthogonalises after every factor.
pub fn qr_exponents(factors: impl IntoIterator<Item = CMatrix>, n: usize) -> Result<Vec<f64>> {
    forward(factors, n, 1, false).map(|(l, _, _)| l)
}

/// Singular-value exponents via a forward QR sweep followed by
/// refinement sweeps.
pub fn refined_exponents(
    factors: impl IntoIterator<Item = CMatrix>,
    n: usize,
    cfg: RefineConfig,
) -> Result<Vec<f64>> {
    let (_, rs, m) = forward(factors, n, cfg.block, true)?;
    let mut sw = Sweep::new(n);
    let mut prev: Option<Vec<f64>> = None;
    for sweep in 0..cfg.max_sweeps {
        if sweep % 2 == 0 {
            for (k, r) in rs.iter().enumerate().rev() {
                r.adjoint_mul_into(&sw.v, &mut sw.z);
                sw.absorb(k + 1)?;
            }
        } else {
            for (k, r) in rs.iter().enumerate() {
                r.mul_into(&sw.v, &mut sw.z);
                sw.absorb(k + 1)?;
            }
        }
        let cur = sw.take_sorted(m);
        if let Some(p) = &prev {
            let change = p.iter().zip(&cur).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if change <= cfg.tol {
                return Ok(cur);
            }
        }
        prev = Some(cur);
    }
    Ok(prev.unwrap_or_default())
}

/// Plain discrete-QR exponents of one sampled product.
pub fn qr_lyapunov(spec: &ProductSpec, sample_index: u64, master_seed: u64) -> Result<LyapunovSpectrum> {
    lyapunov_spectrum(spec, sample_index, master_seed, Method::QrAccumulation)
}

/// Refined QR exponents of one sampled product; the production engine.
pub fn qr_lyapunov_refined(
    spec: &ProductSpec,
    sample_index: u64,
    master_seed: u64,
) -> Result<LyapunovSpectrum> {
    lyapunov_spectrum(spec, sample_index, master_seed, Method::QrRefined)
}

/// Digits used by [`Method::HighPrecisionSvd`] when called through
/// [`lyapunov_spectrum`].
pub fn recommended_digits(n: usize, m: usize) -> u32 {
    let psi = digamma(n as f64).unwrap_or(0.0);
    let d = 2.0 * m as f64 * (psi + 1.0) / std::f64::consts::LN_10;
    (d.ceil() as u32).max(20) + 20
}

pub fn lyapunov_spectrum(
    spec: &ProductSpec,
    sample_index: u64,
    master_seed: u64,
    method: Method,
) -> Result<LyapunovSpectrum> {
    spec.validate()?;
    let factors = factor_iter(*spec, sample_index, master_seed);
    let lambdas = match method {
        Method::QrAccumulation => qr_exponents(factors, spec.n)?,
        Method::QrRefined => refined_exponents(factors, spec.n, RefineConfig::default())?,
        Method::HighPrecisionSvd => {
            let digits = recommended_digits(spec.n, spec.m);
            return exact_lyapunov_highprec(spec, sample_index, master_seed, digits);
        }
    };
    Ok(LyapunovSpectrum {
        lambdas,
        n: spec.n,
        m: spec.m,
        method,
        sample_index,
        master_seed,
    })
}

/// Spectra of samples `0..count`, in sample order.
pub fn sample_spectra(
    spec: &ProductSpec,
    count: usize,
    master_seed: u64,
    method: Method,
    exec: Execution,
) -> Result<Vec<LyapunovSpectrum>> {
    map_indexed(count, exec, |i| lyapunov_spectrum(spec, i as u64, master_seed, method))
        .into_iter()
        .collect()
}

/// Mean and width of the `j`-th Ginibre exponent in the Gaussian regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianTheory {
    pub j: usize,
    pub mean: f64,
    pub sigma: f64,
}

pub fn gaussian_theory(j: usize, m: usize) -> Result<GaussianTheory> {
    if j == 0 || m == 0 {
        return Err(domain("gaussian_theory", format!("need j, m >= 1 (j = {j}, m = {m})")));
    }
    let x = j as f64;
    Ok(GaussianTheory {
        j,
        mean: digamma(x)? / 2.0,
        sigma: (trigamma(x)? / (4.0 * m as f64)).sqrt(),
    })
}

/// Width-to-spacing ratio `(σ_j + σ_{j-1}) / (2 (λ̄_j − λ̄_{j-1}))`.
pub fn wsr(j: usize, m: usize) -> Result<f64> {
    if j < 2 {
        return Err(domain("wsr", format!("need j >= 2, got {j}")));
    }
    let a = gaussian_theory(j - 1, m)?;
    let b = gaussian_theory(j, m)?;
    Ok((a.sigma + b.sigma) / (2.0 * (b.mean - a.mean)))
}

/// Large-`j` form `√(j/m)` of [`wsr`].
pub fn wsr_asymptotic(j: usize, m: usize) -> f64 {
    (j as f64 / m as f64).sqrt()
}

/// Sum of the `N` Gaussian approximations to the exponent densities.
pub fn gaussian_density(lambda: f64, n: usize, m: usize) -> Result<f64> {
    let mut total = 0.0;
    for j in 1..=n {
        let g = gaussian_theory(j, m)?;
        let z = (lambda - g.mean) / g.sigma;
        total += (-0.5 * z * z).exp() / (g.sigma * (2.0 * std::f64::consts::PI).sqrt());
    }
    Ok(total)
}
