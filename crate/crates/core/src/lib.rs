//! Wavelet neural operator with randomized-prior ensembles.
//!
//! The crate provides, bottom to top:
//!
//! - [`tensor`]: dense row-major `f64` tensors.
//! - [`wavelet`]: periodized multi-level Daubechies transforms in 1D/2D.
//! - [`autodiff`] / [`adam`]: a define-by-run reverse-mode tape covering the
//!   operator network's op set, plus the Adam optimizer.
//! - [`wno`]: the operator network (lifting, wavelet blocks, projection).
//! - [`ensemble`]: trainable-plus-frozen-prior pairs, ensemble training, and
//!   prediction statistics.
//! - [`pde`]: Gaussian-random-field sampling, Burgers and Darcy solvers,
//!   dataset assembly, and the on-disk dataset container.
//! - [`metrics`]: evaluation metrics, kernel density estimates, and
//!   confidence-interval coverage.

pub mod adam;
pub mod autodiff;
pub mod error;
pub mod gradcheck;
pub mod metrics;
pub mod pde;
pub mod rng;
pub mod tensor;
pub mod wavelet;
pub mod wno;

pub mod ensemble;

pub use error::{CoreError, Result};
pub use tensor::Tensor;
