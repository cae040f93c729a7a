//! Closed-form weighted least-squares alignment of unlabeled N-dimensional
//! point sets, and an iterative prune-and-realign registration loop built on it.
//!
//! Every candidate cross pair `(u_i, v_k)` carries a match weight `m_ik`. The
//! optimal rotation comes from the polar factor of the weighted
//! cross-covariance matrix `Z`, computed through the positive-definite square
//! root of `Z Zᵀ`. Translation and (optionally) a uniform scale follow in
//! closed form. [`registration::register`] repeatedly aligns, prunes pairs
//! whose residual exceeds a shrinking threshold, and reweights the survivors.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common case.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod align;
pub mod cli;
pub mod error;
pub mod io;
pub mod matrix;
pub mod registration;
pub mod report;
pub mod scalar;
pub mod stats;
pub mod symmat;
pub mod synth;

pub use align::{AlignOptions, AlignmentSolution, Mode, Transform};
pub use error::{Error, Result};
pub use matrix::SquareMatrix;
pub use registration::{RegistrationConfig, RegistrationResult, Termination};
pub use scalar::Real;
pub use stats::{MomentSummary, PairEntry, PairTable, PointSet, WellPosedness};
pub use symmat::{PolarRotation, SpectralDecomposition};

pub type Matrix64 = SquareMatrix<f64>;
pub type Matrix32 = SquareMatrix<f32>;
pub type PointSet64 = PointSet<f64>;
pub type PointSet32 = PointSet<f32>;
pub type PairTable64 = PairTable<f64>;
pub type PairTable32 = PairTable<f32>;
pub type Transform64 = Transform<f64>;
pub type Transform32 = Transform<f32>;
pub type AlignmentSolution64 = AlignmentSolution<f64>;
pub type AlignmentSolution32 = AlignmentSolution<f32>;
pub type RegistrationConfig64 = RegistrationConfig<f64>;
pub type RegistrationResult64 = RegistrationResult<f64>;
