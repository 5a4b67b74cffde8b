//! Random factor ensembles for products `Y = X_M ⋯ X_1`.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::rng::RngStream;

/// Which factor distribution to draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ensemble {
    /// Independent complex Gaussian entries with `E|x|² = 1`.
    Ginibre,
    /// Entries uniform on `{0, ±1, ±i, ±1±i}`; optionally rescaled to
    /// `E|x|² = 1`.
    Bernoulli { normalize_variance: bool },
    /// `X_j = A_j + A_{j-1}` with Ginibre `A_j` and `A_0 = 0`.
    CorrelatedSum,
    /// `X_j = (1 + γ dt) I + A_j √dt` with Ginibre `A_j`.
    DmpkStep { gamma: f64, dt: f64 },
}

impl Ensemble {
    pub fn name(&self) -> &'static str {
        match self {
            Ensemble::Ginibre => "ginibre",
            Ensemble::Bernoulli { .. } => "bernoulli",
            Ensemble::CorrelatedSum => "correlated_sum",
            Ensemble::DmpkStep { .. } => "dmpk_step",
        }
    }
}

/// One multiplicative process: ensemble plus dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductSpec {
    pub ensemble: Ensemble,
    pub n: usize,
    pub m: usize,
}

impl ProductSpec {
    pub fn new(ensemble: Ensemble, n: usize, m: usize) -> Result<Self> {
        let spec = Self { ensemble, n, m };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ginibre(n: usize, m: usize) -> Result<Self> {
        Self::new(Ensemble::Ginibre, n, m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if self.m == 0 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        if let Ensemble::DmpkStep { gamma, dt } = self.ensemble {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
            }
            if !gamma.is_finite() {
                return Err(Error::InvalidParameter("gamma must be finite".into()));
            }
        }
        Ok(())
    }
}

/// A drawn factor `X_j`, with `j` counted from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSample {
    pub entries: CMatrix,
    pub factor_index: usize,
}

fn ginibre(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(s * re, s * im)
    })
}

fn bernoulli(n: usize, normalize: bool, rng: &mut ChaCha8Rng) -> CMatrix {
    let scale = if normalize { (3.0f64 / 4.0).sqrt() } else { 1.0 };
    CMatrix::from_fn(n, |_, _| {
        // re and im independent on {-1, 0, 1} is exactly the 9-point set
        let re = rng.random_range(-1i32..=1) as f64;
        let im = rng.random_range(-1i32..=1) as f64;
        Complex64::new(scale * re, scale * im)
    })
}

fn ginibre_at(spec: &ProductSpec, factor_index: usize, stream: RngStream) -> CMatrix {
    let key = RngStream {
        factor_index: factor_index as u64,
        ..stream
    };
    ginibre(spec.n, &mut key.rng())
}

/// Draws factor `X_j`.
///
/// Only `master_seed` and `sample_index` of `stream` are used; the factor
/// index of the stream is replaced by `factor_index`. Correlated sums draw
/// `A_{j-1}` from its own stream, so no state is carried between calls.
pub fn sample_factor(
    spec: &ProductSpec,
    factor_index: usize,
    stream: RngStream,
) -> Result<MatrixSample> {
    spec.validate()?;
    if factor_index == 0 || factor_index > spec.m {
        return Err(Error::InvalidParameter(format!(
            "factor index {factor_index} outside 1..={}",
            spec.m
        )));
    }
    let n = spec.n;
    let key = RngStream {
        factor_index: factor_index as u64,
        ..stream
    };
    let entries = match spec.ensemble {
        Ensemble::Ginibre => ginibre(n, &mut key.rng()),
        Ensemble::Bernoulli { normalize_variance } => {
            bernoulli(n, normalize_variance, &mut key.rng())
        }
        Ensemble::CorrelatedSum => {
            let mut x = ginibre_at(spec, factor_index, stream);
            if factor_index > 1 {
                x.add_assign(&ginibre_at(spec, factor_index - 1, stream));
            }
            x
        }
        Ensemble::DmpkStep { gamma, dt } => dmpk(ginibre(n, &mut key.rng()), gamma, dt),
    };
    Ok(MatrixSample {
        entries,
        factor_index,
    })
}

fn dmpk(mut a: CMatrix, gamma: f64, dt: f64) -> CMatrix {
    a.scale(dt.sqrt());
    for i in 0..a.dim() {
        a[(i, i)] += 1.0 + gamma * dt;
    }
    a
}

/// Lazily yields `X_1, …, X_M` in multiplication order.
pub fn factor_iter(
    spec: ProductSpec,
    sample_index: u64,
    master_seed: u64,
) -> impl Iterator<Item = CMatrix> {
    let mut prev: Option<CMatrix> = None;
    (1..=spec.m).map(move |j| {
        let stream = RngStream::new(master_seed, sample_index, j as u64);
        match spec.ensemble {
            Ensemble::CorrelatedSum => {
                let a = ginibre(spec.n, &mut stream.rng());
                let mut x = a.clone();
                if let Some(p) = &prev {
                    x.add_assign(p);
                }
                prev = Some(a);
                x
            }
            Ensemble::Ginibre => ginibre(spec.n, &mut stream.rng()),
            Ensemble::Bernoulli { normalize_variance } => {
                bernoulli(spec.n, normalize_variance, &mut stream.rng())
            }
            Ensemble::DmpkStep { gamma, dt } => {
                dmpk(ginibre(spec.n, &mut stream.rng()), gamma, dt)
            }
        }
    })
}

/// All `M` factors of one sample, in multiplication order.
pub fn product_factors(
    spec: &ProductSpec,
    sample_index: u64,
    master_seed: u64,
) -> Result<Vec<MatrixSample>> {
    spec.validate()?;
    Ok(factor_iter(*spec, sample_index, master_seed)
        .enumerate()
        .map(|(k, entries)| MatrixSample {
            entries,
            factor_index: k + 1,
        })
        .collect())
}
