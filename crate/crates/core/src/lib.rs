//! Sparse episodic event records to independent latent sources and
//! per-instance Shapley effects.
//!
//! The pipeline runs in stages that mirror the modules below:
//!
//! 1. [`ingest`] parses event and demographics tables into [`ingest::PatientRecord`]s.
//! 2. [`curves`] turns each record into daily-resolution trajectories (a [`curves::Curveset`]).
//! 3. [`matrix`] samples random cross sections and stacks them into a standardized matrix `X`.
//! 4. [`ica`] whitens `X` and runs symmetric FastICA, giving `X = A S`.
//! 5. [`explain`] trains outcome models on source expressions and attributes
//!    each prediction to sources with interventional Shapley values.
//!
//! [`oracle`] generates linear non-Gaussian structural causal models with known
//! sources, mixing and outcome mechanism, and scores every stage against them.

pub mod curves;
pub mod error;
pub mod explain;
pub mod ica;
pub mod ingest;
pub mod matrix;
pub mod oracle;
pub mod stats;

pub use error::{Error, Result};

/// Days per year used for every day/year conversion.
pub const DAYS_PER_YEAR: f64 = 365.25;
