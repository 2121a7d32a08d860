//! Moment-matching estimation of the factor loading matrices of discrete,
//! non-Gaussian, and mixed CCA models.
//!
//! The estimation pipeline is: build a set of K×K target matrices sharing a
//! joint diagonalizer (from cross-cumulant projections or generalized
//! cross-covariance matrices evaluated at processing points), whiten them with
//! a whitening pair of the cross-covariance, jointly diagonalize by similarity
//! with a Jacobi-like shear/rotation algorithm (or the one-matrix spectral
//! shortcut), and map the diagonalizer back to the loading matrices.
//!
//! The crate also ships the synthetic generators and the normalized l1
//! evaluation metric used by the experiment harness in `cca-cli`.

pub mod error;
pub mod eval;
pub mod linalg;
pub mod moments;
pub mod nojd;
pub mod pipeline;
pub mod synthetic;
pub mod view;
pub mod whitening;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use view::ViewMatrix;
