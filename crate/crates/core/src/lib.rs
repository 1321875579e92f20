//! Spectral-regularized kernel goodness-of-fit tests.
//!
//! The regularized statistic compares a sample X against a null law P₀ that is
//! only available through samples: X⁰ estimates the null mean embedding and an
//! independent Y⁰ estimates the null covariance operator, whose spectrum is
//! filtered by a regularizer g_λ. Decisions come either from a concentration
//! bound (SRCT) or from permutations of the pooled (X, X⁰) sample (SRPT).

pub mod distributions;
pub mod error;
pub mod harness;
pub mod hypothesis;
pub mod kernels;
pub mod pooled;
pub mod regularizers;
pub mod rng;
pub mod sample;
pub mod special;
pub mod spectral;
pub mod statistics;

pub use distributions::DistributionSpec;
pub use error::{GofError, Result};
pub use hypothesis::{Method, TestOutcome};
pub use kernels::Kernel;
pub use regularizers::Regularizer;
pub use sample::Sample;
