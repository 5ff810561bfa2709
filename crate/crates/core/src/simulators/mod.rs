//! Data-generating mechanisms and their test statistics.

mod onoff;
mod poisson;
mod sir;

pub use onoff::{
    onoff_estimates, onoff_lambda, onoff_log_likelihood, OnOffObservation, OnOffParams,
};
pub use poisson::{ln_factorial, poisson_sample, sample_onoff, INVERSION_LIMIT};
pub use sir::{
    sir_lambda, sir_mean_trajectory, sir_simulate, EpidemicTrajectory, SirInit, SirParams,
    SirScenario, LAMBDA_PREFACTOR, MEAN_FLOOR,
};
