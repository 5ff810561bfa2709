//! Neural models of the conditional CDF of a scalar test statistic.
//!
//! A network `F̂(λ | θ)` is regressed on empirical-CDF (or indicator) targets
//! produced by a simulator; the sampling density of the statistic is then its
//! exact derivative with respect to the λ input, computed by tangent
//! propagation rather than finite differences. Uncertainty is quantified with
//! split-conformal bands, bootstrap ensembles and Gaussian weight fluctuation.
//!
//! Module map:
//! - [`nn`]: networks, activations, losses, optimizers, model files
//! - [`simulators`]: ON/OFF Poisson counting model and the SIR epidemic model
//! - [`statistics`]: ECDFs, quantiles, residual diagnostics, histogram densities
//! - [`datasets`]: training-set generators, splitting and CSV persistence
//! - [`training`]: training loop, random hyperparameter sweeps, multistage stacks
//! - [`uncertainty`]: CDF/pdf inference and the uncertainty methods
//! - [`cli`]: configuration, commands, manifests and reports behind the binary

pub mod cli;
pub mod datasets;
mod error;
pub mod nn;
pub mod seed;
pub mod simulators;
pub mod statistics;
pub mod training;
pub mod uncertainty;

pub use error::{Error, Result};
