//! Regression training, random hyperparameter search and multistage fits.

mod msnn;
mod regressor;
mod sweep;

pub use msnn::{msnn_fit, msnn_predict, msnn_recipe, MsnnStack, MsnnStage};
pub use regressor::{
    train_regressor, Budget, LossCurve, LossPoint, Samples, Standardizer, TrainConfig, TrainOutcome,
    DIVERGENCE_FACTOR,
};
pub use sweep::{random_sweep, SweepOutcome, SweepSettings, SweepSpace, TrialConfig, TrialResult};
