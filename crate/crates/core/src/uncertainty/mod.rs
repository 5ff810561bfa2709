//! CDF and pdf inference from a trained model, with conformal bands and
//! ensemble-based spreads.

mod conformal;
mod curve;
mod ensemble;

pub use conformal::{
    calibrate_cdf_at_point, calibrate_pdf_at_point, conformal_band, conformal_calibrate, coverage_check,
    ConformalCalibration,
};
pub use curve::{cdf_eval, cdf_grid, ecdf_mae, linspace, pdf_eval, pdf_grid, CurveMeta, PdfCurve};
pub use ensemble::{
    bootstrap_ensemble, bootstrap_indices, ensemble_envelope, weight_fluctuate, Ensemble, Envelope,
    Provenance, Response,
};

/// Input column of the test statistic in `(θ₁, θ₂, λ)` models.
pub const LAMBDA_INDEX: usize = 2;
