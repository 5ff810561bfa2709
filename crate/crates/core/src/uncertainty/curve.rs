use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LAMBDA_INDEX;
use crate::datasets::meta_path;
use crate::nn::Network;
use crate::statistics::EcdfTable;
use crate::{Error, Result};

/// `F̂(λ | θ)`.
pub fn cdf_eval(net: &Network, theta: (f64, f64), lambda: f64) -> Result<f64> {
    net.forward(&[theta.0, theta.1, lambda])
}

/// `f̂(λ | θ) = ∂F̂/∂λ`, exact.
pub fn pdf_eval(net: &Network, theta: (f64, f64), lambda: f64) -> Result<f64> {
    net.grad_input(&[theta.0, theta.1, lambda], LAMBDA_INDEX)
}

fn rows(theta: (f64, f64), grid: &[f64]) -> Vec<f64> {
    grid.iter().flat_map(|&l| [theta.0, theta.1, l]).collect()
}

pub fn cdf_grid(net: &Network, theta: (f64, f64), grid: &[f64]) -> Result<Vec<f64>> {
    net.predict(&rows(theta, grid))
}

pub fn pdf_grid(net: &Network, theta: (f64, f64), grid: &[f64]) -> Result<Vec<f64>> {
    grid.iter().map(|&l| pdf_eval(net, theta, l)).collect()
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Mean absolute difference between the model CDF and the empirical CDF of
/// `samples`, evaluated at every sample.
pub fn ecdf_mae(net: &Network, theta: (f64, f64), samples: &[f64]) -> Result<f64> {
    let table = EcdfTable::new(samples)?;
    let model = cdf_grid(net, theta, samples)?;
    Ok(samples
        .iter()
        .zip(&model)
        .map(|(&l, f)| (f - table.eval(l)).abs())
        .sum::<f64>()
        / samples.len() as f64)
}

/// Description written next to an exported curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub theta: (f64, f64),
    pub method: Option<String>,
    pub alpha: Option<f64>,
    pub q_hat: Option<f64>,
    /// `"cdf"` or `"pdf"`: the column the band applies to.
    pub band_target: Option<String>,
    pub violation_rate: f64,
}

/// Model CDF and pdf on a λ grid at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdfCurve {
    pub theta: (f64, f64),
    pub lambda: Vec<f64>,
    pub cdf: Vec<f64>,
    /// Raw input derivative; negative where the model CDF decreases.
    pub pdf: Vec<f64>,
    pub band: Option<(Vec<f64>, Vec<f64>)>,
}

impl PdfCurve {
    pub fn evaluate(net: &Network, theta: (f64, f64), grid: &[f64]) -> Result<Self> {
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("λ grid must be strictly increasing"));
        }
        Ok(Self {
            theta,
            lambda: grid.to_vec(),
            cdf: cdf_grid(net, theta, grid)?,
            pdf: pdf_grid(net, theta, grid)?,
            band: None,
        })
    }

    /// Fraction of grid points where the pdf is negative.
    pub fn violation_rate(&self) -> f64 {
        if self.pdf.is_empty() {
            return 0.0;
        }
        self.pdf.iter().filter(|f| **f < 0.0).count() as f64 / self.pdf.len() as f64
    }

    /// Copy with negative pdf values replaced by zero.
    pub fn clamp_nonnegative(&self) -> Self {
        Self {
            pdf: self.pdf.iter().map(|f| f.max(0.0)).collect(),
            ..self.clone()
        }
    }

    /// Trapezoid integral of the pdf over the grid.
    pub fn pdf_integral(&self) -> f64 {
        self.lambda
            .windows(2)
            .zip(self.pdf.windows(2))
            .map(|(l, f)| 0.5 * (l[1] - l[0]) * (f[0] + f[1]))
            .sum()
    }

    /// CSV `lambda,F_hat,f_hat,band_lo,band_hi`; band columns are empty
    /// without a band.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["lambda", "F_hat", "f_hat", "band_lo", "band_hi"]).map_err(io)?;
        for k in 0..self.lambda.len() {
            let (lo, hi) = match &self.band {
                Some((lo, hi)) => (lo[k].to_string(), hi[k].to_string()),
                None => (String::new(), String::new()),
            };
            w.write_record([
                self.lambda[k].to_string(),
                self.cdf[k].to_string(),
                self.pdf[k].to_string(),
                lo,
                hi,
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path, meta: &CurveMeta) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)?;
        std::fs::write(meta_path(path), serde_json::to_string_pretty(meta)?)?;
        Ok(())
    }
}
