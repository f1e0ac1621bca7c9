//! Trimmed estimation of `E|<X, v>|^p` from an i.i.d. sample, with exact
//! checkers for the empirical ratio properties behind it.
//!
//! The order-statistic layer ([`trim`]) is generic over [`Scalar`], so it
//! runs on `f32`, `f64` and exact rationals alike. Laws, oracles and the
//! experiments work in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod experiment;
pub mod oracle;
pub mod params;
pub mod quadrature;
pub mod ratio;
pub mod sample;
pub mod scalar;
pub mod seed;
pub mod theory;
pub mod trim;

pub use distributions::{draw_sample, sphere_directions, true_p_moment, DistributionSpec, Law, MarginalCdf};
pub use error::{Error, Result};
pub use params::{derived_thetas, DerivedThetas, GateRule, RatioParams};
pub use ratio::RatioReport;
pub use sample::SampleMatrix;
pub use scalar::Scalar;
pub use theory::Verdict;
pub use trim::{empirical_hat_q, empirical_p_mean, nonincreasing_rearrangement, project_abs, psi, TrimSpec};

/// Exact rational scalar.
pub type Exact = num_rational::BigRational;

pub type Sample = SampleMatrix<f64>;
pub type Sample32 = SampleMatrix<f32>;
pub type ExactSample = SampleMatrix<Exact>;
