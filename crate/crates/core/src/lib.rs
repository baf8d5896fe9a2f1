//! Rank selection for truncated-SVD and nonnegative matrix factorization
//! models by bi-cross-validation (BCV).
//!
//! A data matrix `X` is split into row groups and column groups. For each
//! held-out block `A` the remaining blocks
//!
//! ```text
//!     X = | A  B |
//!         | C  D |
//! ```
//!
//! predict `A` through a rank-`k` fit of `D`. Summing the squared
//! prediction error over all blocks gives `BCV(k)`, and the selected rank is
//! its minimizer. The crate also carries the comparison criteria (three
//! BIC-style penalties and an Eastment–Krzanowski style cross-validator),
//! closed-form random-matrix predictions for pure noise and weak rank-one
//! signals, and a seeded simulation harness.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the common `f64` case.

pub mod baselines;
pub mod bcv_svd;
pub mod curve;
pub mod error;
pub mod holdout;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod nmf;
pub mod parse;
pub mod random;
pub mod rng;
pub mod scalar;
pub mod simulation;
pub mod theory;

pub use curve::{BcvCurve, CurveMetadata};
pub use error::{Error, Result};
pub use holdout::{Blocks, Fold, HoldoutPlan};
pub use linalg::SvdFactors;
pub use matrix::Matrix;
pub use rng::Rng;
pub use scalar::Scalar;

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type SvdFactors64 = SvdFactors<f64>;
pub type SvdFactors32 = SvdFactors<f32>;
pub type Blocks64 = Blocks<f64>;
pub type NmfFactors64 = nmf::NmfFactors<f64>;
pub type NmfFactors32 = nmf::NmfFactors<f32>;
