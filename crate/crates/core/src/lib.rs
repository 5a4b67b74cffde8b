//! Lyapunov spectra of random matrix products and the local kernels that
//! describe them.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfun`]: log-gamma, digamma, trigamma, erfi and Airy functions.
//! - [`ensembles`]: factor samplers keyed by `(seed, sample, factor)`.
//! - [`lyapunov`]: QR engines, a multiple-precision oracle, and the
//!   Gaussian theory for Ginibre products.
//! - [`kernels`]: the finite-size kernel, the bulk and soft-edge
//!   interpolating kernels and their sine, Airy and picket-fence limits.
//! - [`dyson`]: Dyson Brownian motion from an equidistant start.
//! - [`stats`]: unfolding, histograms with bootstrap errors, comparisons.
//! - [`io`]: CSV and JSON artefacts.

// `!(x > 0.0)` is how NaN is rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dyson;
pub mod ensembles;
pub mod error;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod lyapunov;
pub mod par;
pub mod rng;
pub mod specfun;
pub mod stats;

pub use error::{Error, Result};
