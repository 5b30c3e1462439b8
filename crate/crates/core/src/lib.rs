//! Maximum-likelihood estimation of drift `μ` and volatility `σ²` for
//! `X_t = μt + σG_t`, `G` a zero-mean Gaussian process observed on a discrete
//! grid, together with exact and Monte Carlo verification of the estimators'
//! finite-sample and asymptotic behavior.
//!
//! The numerical core ([`kernels`], [`covmat`], [`sampler`], [`estimator`],
//! [`dist`]) is generic over [`Scalar`] (`f32` or `f64`). The experiment
//! harness and CLI run in `f64`; the aliases below name the `f64`
//! instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod covmat;
pub mod dist;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod fmt;
pub mod kernels;
pub mod linalg;
pub mod sampler;
pub mod scalar;

pub use error::{Error, Result};
pub use kernels::Family;
pub use scalar::Scalar;

pub type KernelSpec = kernels::KernelSpec<f64>;
pub type PowerLaw = kernels::PowerLaw<f64>;
pub type TimeGrid = covmat::TimeGrid<f64>;
pub type CovarianceModel = covmat::CovarianceModel<f64>;
pub type QuadForms = covmat::QuadForms<f64>;
pub type DenseMatrix = linalg::DenseMatrix<f64>;
pub type PathSample = sampler::PathSample<f64>;
pub type Estimates = estimator::Estimates<f64>;
pub type Standardized = estimator::Standardized<f64>;
pub type MomentOracle = estimator::MomentOracle<f64>;
