//! Multi-method regression toolkit for multi-input, multi-output process data.
//!
//! Learners: a two-layer MLP trained by scaled conjugate gradient, a Gaussian
//! RBF network with two-stage training, averaging committees and bagging, a
//! Bayesian MLP sampled by Hybrid Monte Carlo, least-squares SVM regression,
//! and a first-order Sugeno ANFIS. The [`bench`] module wires them to the data
//! pipeline and report generation used by the `steamreg` CLI.

pub mod anfis;
pub mod bench;
pub mod cluster;
pub mod config;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod hmc;
pub mod linalg;
pub mod lssvm;
pub mod membership;
pub mod metrics;
pub mod mlp;
pub mod model;
pub mod optim;
pub mod rbf;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use model::Regressor;
