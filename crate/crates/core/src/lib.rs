//! Numerical laboratory for one-cut β-ensembles (the 1d log-gas).
//!
//! The crate computes the equilibrium measure of a polynomial potential and
//! its companion functions, samples the ensemble by a tridiagonal matrix
//! model and by Langevin MCMC, evaluates spectral observables on samples,
//! and turns rigidity, local-law and log-correlated CLT statements into
//! statistical experiments with predictions and standard errors.

// `!(x > 0.0)` is used deliberately so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod equilibrium;
pub mod error;
pub mod experiments;
pub mod observables;
pub mod oracle;
pub mod potential;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod tridiag;

pub use num_complex::Complex64;

pub use equilibrium::{Branch, EquilibriumMeasure, Scales, SupportInterval};
pub use error::{Error, Result};
pub use experiments::{ExperimentReport, LoopSource, Row};
pub use observables::FieldValue;
pub use oracle::{OracleSpec, OracleValue};
pub use potential::{Potential, PotentialKind};
pub use sampler::{
    run_chains, EnsembleConfig, McmcParams, Method, Preconditioner, Sample, SampleSet,
};
