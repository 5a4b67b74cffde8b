//! Dyson Brownian motion from equidistant initial conditions, realised at a
//! fixed time as the spectrum of `diag(1, …, n) + W` with `W` from GUE.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{CurveMeta, DensityCurve};
use crate::linalg::{hermitian_eigenvalues, CMatrix};
use crate::par::{map_indexed, Execution};
use crate::rng::{Domain, RngStream};
use crate::stats::{make_histogram, EmpiricalDensity, HistogramConfig};

/// Fewest samples accepted by [`dyson_histogram`].
pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DysonSpec {
    pub n: usize,
    /// Variance of every entry of `W` (`E|W_ij|²` off the diagonal).
    pub tau: f64,
    pub samples: usize,
    pub master_seed: u64,
}

impl DysonSpec {
    pub fn new(n: usize, tau: f64, samples: usize, master_seed: u64) -> Result<Self> {
        let s = Self {
            n,
            tau,
            samples,
            master_seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::InvalidParameter(format!("n must be at least 8, got {}", self.n)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

/// Sorted eigenvalues of `diag(1, …, n) + W` for one sample.
pub fn sample_dyson_spectrum(spec: &DysonSpec, sample_index: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok(spectrum_with_offset(spec, sample_index, 0.0))
}

fn spectrum_with_offset(spec: &DysonSpec, sample_index: u64, offset: f64) -> Vec<f64> {
    let n = spec.n;
    let mut rng = RngStream::new(spec.master_seed, sample_index, 0).rng_in(Domain::Dyson);
    let sd = spec.tau.sqrt();
    let off = sd * std::f64::consts::FRAC_1_SQRT_2;
    let mut h = CMatrix::zeros(n);
    for c in 0..n {
        let d: f64 = rng.sample(StandardNormal);
        h[(c, c)] = Complex64::new(c as f64 + 1.0 + offset + sd * d, 0.0);
        for r in 0..c {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = Complex64::new(off * re, off * im);
            h[(r, c)] = z;
            h[(c, r)] = z.conj();
        }
    }
    hermitian_eigenvalues(&h)
}

/// 0-based indices of the middle third of the spectrum.
pub fn central_indices(n: usize) -> std::ops::Range<usize> {
    n / 3..n - n / 3
}

/// `Σ_{i≠k} 1/(k − i)` over the initial pickets `1..=n`, for 0-based `k`.
fn edge_drift(n: usize, k: usize) -> f64 {
    (0..n).filter(|&i| i != k).map(|i| 1.0 / (k as f64 - i as f64)).sum()
}

/// Offsets of the central eigenvalues from their pickets, wrapped to
/// `[−1/2, 1/2)`.
///
/// Each eigenvalue is first moved back by `τ Σ_{i≠k} 1/(k − i)`, the mean
/// second-order shift caused by the finite number of pickets. It vanishes
/// for an infinite fence and is what the bulk kernel leaves out.
pub fn central_offsets(spec: &DysonSpec, eigenvalues: &[f64]) -> Vec<f64> {
    central_indices(spec.n)
        .map(|k| {
            let x = eigenvalues[k] - (k as f64 + 1.0) - spec.tau * edge_drift(spec.n, k);
            x - x.round()
        })
        .map(|x| if x >= 0.5 { x - 1.0 } else { x })
        .collect()
}

/// Histogram of [`central_offsets`] over all samples, on `[−1/2, 1/2)`.
pub fn dyson_histogram(spec: &DysonSpec, bin_width: f64, bootstrap_rounds: usize, exec: Execution) -> Result<EmpiricalDensity> {
    spec.validate()?;
    if spec.samples < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            got: spec.samples,
        });
    }
    let values = map_indexed(spec.samples, exec, |i| {
        central_offsets(spec, &spectrum_with_offset(spec, i as u64, 0.0))
    });
    let cfg = HistogramConfig {
        bin_width,
        window: Some((-0.5, 0.5)),
        bootstrap_rounds,
        seed: spec.master_seed,
    };
    make_histogram(&values, &cfg)
}

/// Local density around the central pickets, as a curve on the bin centres.
pub fn dyson_local_density(spec: &DysonSpec, bin_width: f64, exec: Execution) -> Result<DensityCurve> {
    let h = dyson_histogram(spec, bin_width, 0, exec)?;
    DensityCurve::new(
        h.centers(),
        h.normalized_values,
        CurveMeta::new("dyson")
            .with("n", spec.n as f64)
            .with("tau", spec.tau)
            .with("samples", spec.samples as f64),
    )
}
