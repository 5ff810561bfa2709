use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Architecture, Generator, RunConfig};
use super::manifest::Artifacts;
use super::plot::{Panel, Series};
use super::Command;
use crate::datasets::{
    gen_alffi_onoff, gen_ecdf_onoff, gen_ecdf_sir, onoff_statistics, read_dataset, sir_statistics, split_dataset,
    write_dataset, Dataset, Problem, SirObservation, Split, FEATURES,
};
use crate::nn::{load_model, save_model, Loss, Network, NetworkSpec};
use crate::seed;
use crate::simulators::{OnOffParams, SirParams, SirScenario};
use crate::statistics::{empirical_quantile, histogram_density, Bins};
use crate::training::{
    msnn_fit, msnn_predict, msnn_recipe, random_sweep, train_regressor, Budget, LossCurve, LossPoint, Samples,
    TrainConfig, TrialResult,
};
use crate::uncertainty::{
    bootstrap_ensemble, conformal_band, conformal_calibrate, coverage_check, ecdf_mae, ensemble_envelope, linspace,
    weight_fluctuate, ConformalCalibration, CurveMeta, Ensemble, Envelope, PdfCurve, Provenance, Response,
};
use crate::{Error, Result};

const DATASET: &str = "data/dataset.csv";
const MODEL: &str = "model/model.txt";
const LOSS_CURVE: &str = "model/loss_curve.csv";
const TRAINING: &str = "model/training.json";
const SWEEP_BEST: &str = "sweep/best.json";
const CALIBRATION: &str = "conform/calibration.json";

/// Quantile of the dataset statistics used as the upper grid end by default.
const AUTO_LAMBDA_QUANTILE: f64 = 0.995;

const MODEL_COLOR: &str = "#d62728";
const TRUTH_COLOR: &str = "#333333";
const HIST_COLOR: &str = "#2ca02c";
const BAND_COLOR: &str = "#1f77b4";

type Timings = BTreeMap<String, f64>;

pub(super) fn dispatch(command: Command, cfg: &RunConfig, art: &mut Artifacts, timings: &mut Timings) -> Result<()> {
    match command {
        Command::Gen => gen(cfg, art, timings),
        Command::Train => train(cfg, art, timings),
        Command::Sweep => sweep(cfg, art, timings),
        Command::Eval => eval(cfg, art, timings),
        Command::Conform => conform(cfg, art, timings),
        Command::Bootstrap => bootstrap(cfg, art, timings),
        Command::Fluctuate => fluctuate(cfg, art, timings),
        Command::Msnn => msnn(cfg, art, timings),
        Command::Report => report(cfg, art, timings),
    }
}

fn timed<T>(timings: &mut Timings, phase: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let t = Instant::now();
    let out = f()?;
    timings.insert(phase.to_string(), t.elapsed().as_secs_f64());
    Ok(out)
}

fn require(root: &Path, rel: &str) -> Result<PathBuf> {
    let p = root.join(rel);
    if p.exists() {
        Ok(p)
    } else {
        Err(Error::Dependency(p))
    }
}

fn sidecar(rel: &str) -> String {
    format!("{rel}.meta.json")
}

/// Statistic sampler for the problem a dataset was generated for.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulator {
    pub problem: Problem,
    pub scenario: SirScenario,
}

impl Simulator {
    /// Taken from the dataset sidecar when present, else from the config.
    pub fn for_dataset(data: &Dataset, cfg: &RunConfig) -> Self {
        match &data.meta {
            Some(m) => Self {
                problem: m.problem,
                scenario: m.scenario.clone().unwrap_or_else(|| cfg.sir.scenario.clone()),
            },
            None => Self {
                problem: cfg.problem,
                scenario: cfg.sir.scenario.clone(),
            },
        }
    }

    pub fn statistics(&self, theta: (f64, f64), k: usize, rng: &mut seed::Rng) -> Result<Vec<f64>> {
        match self.problem {
            Problem::Onoff => onoff_statistics(OnOffParams::new(theta.0, theta.1)?, k, rng),
            Problem::Sir => sir_statistics(SirParams::new(theta.0, theta.1)?, k, &self.scenario, rng),
        }
    }
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    read_dataset(&require(&cfg.out, DATASET)?)
}

fn load_network(cfg: &RunConfig) -> Result<Network> {
    Ok(load_model(&require(&cfg.out, MODEL)?)?.0)
}

fn split(cfg: &RunConfig, data: &Dataset) -> Result<(Split, Samples, Samples)> {
    let s = split_dataset(data, &cfg.split)?;
    let train = Samples::from_dataset(&s.train);
    let val = Samples::from_dataset(&s.validation);
    Ok((s, train, val))
}

fn eval_points(cfg: &RunConfig) -> Vec<(f64, f64)> {
    if cfg.eval.points.is_empty() {
        cfg.data.prior.grid(cfg.eval.grid)
    } else {
        cfg.eval.points.clone()
    }
}

fn lambda_grid(cfg: &RunConfig, data: &Dataset) -> Result<Vec<f64>> {
    let lo = cfg.eval.lambda_min;
    let hi = match cfg.eval.lambda_max {
        Some(h) => h,
        None => {
            let lambdas: Vec<f64> = data.records.iter().map(|r| r.lambda).collect();
            let q = empirical_quantile(&lambdas, AUTO_LAMBDA_QUANTILE)?;
            if q > lo {
                q
            } else {
                lo + 1.0
            }
        }
    };
    Ok(linspace(lo, hi, cfg.eval.lambda_points))
}

/// Fresh statistics at evaluation point `index`; shared by `eval` and `report`.
fn truth_samples(cfg: &RunConfig, sim: &Simulator, theta: (f64, f64), index: usize) -> Result<Vec<f64>> {
    let mut rng = seed::stream(cfg.seed, "eval-truth", index as u64);
    sim.statistics(theta, cfg.eval.truth_samples, &mut rng)
}

/// Network and training settings of the main regressor.
fn architecture(cfg: &RunConfig) -> Result<(NetworkSpec, TrainConfig)> {
    match cfg.architecture {
        Architecture::Network => Ok((cfg.network_spec(), cfg.train.clone())),
        Architecture::Sweep => {
            let best: TrialResult = serde_json::from_slice(&std::fs::read(require(&cfg.out, SWEEP_BEST)?)?)?;
            let (spec, tc) = cfg.sweep.realize(best.trial, &best.config, FEATURES);
            Ok((
                spec,
                TrainConfig {
                    budget: cfg.train.budget,
                    seed: cfg.train.seed,
                    validation_every: cfg.train.validation_every,
                    ..tc
                },
            ))
        }
    }
}

fn gen(cfg: &RunConfig, art: &mut Artifacts, timings: &mut Timings) -> Result<()> {
    let path = art.claim(DATASET)?;
    art.claim(&sidecar(DATASET))?;
    let data = timed(timings, "generate", || match (cfg.problem, cfg.data.generator) {
        (Problem::Onoff, Generator::Ecdf) => gen_ecdf_onoff(cfg.data.points, cfg.data.k, cfg.data.prior, cfg.seed),
        (Problem::Onoff, Generator::Indicator) => gen_alffi_onoff(cfg.data.points, cfg.data.prior, cfg.seed),
        (Problem::Sir, _) => {
            let obs = SirObservation::generate(&cfg.sir.scenario, cfg.sir.truth, cfg.sir.observation_seed)?;
            gen_ecdf_sir(cfg.data.points, cfg.data.k, cfg.data.prior, &cfg.sir.scenario, &obs, cfg.seed)
        }
    })?;
    log::info!("generated {} records", data.len());
    write_dataset(&path, &data)
}

/// Summary written next to a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    /// Human-readable loss, e.g. `Huber(δ=0.7)`.
    pub loss_label: String,
    pub spec: NetworkSpec,
    pub config: TrainConfig,
    pub best_val_loss: f64,
    pub best_iteration: u64,
    pub iterations: u64,
    /// Validation MSE of the checkpoint, comparable across losses.
    pub val_mse: f64,
    pub train_rows: usize,
    pub val_rows: usize,
}

fn train(cfg: &RunConfig, art: &mut Artifacts, timings: &mut Timings) -> Result<()> {
    let data = load_dataset(cfg)?;
    let (spec, tc) = architecture(cfg)?;
    let (model_path, curve_path) = (art.claim(MODEL)?, art.claim(LOSS_CURVE)?);
    let (_, train, val) = split(cfg, &data)?;
    let out = timed(timings, "train", || train_regressor(&train, &val, &spec, &tc))?;
    save_model(&model_path, &out.network, tc.seed)?;
    out.curve.save_csv(&curve_path)?;
    let record = TrainingRecord {
        loss_label: tc.loss.label(),
        val_mse: out.network.mean_loss(&val.x, &val.y, &Loss::Mse)?,
        spec,
        config: tc,
        best_val_loss: out.best_val_loss,
        best_iteration: out.best_iteration,
        iterations: out.iterations,
        train_rows: train.len(),
        val_rows: val.len(),
    };
    log::info!("best validation loss {:.4e} at iteration {}", record.best_val_loss, record.best_iteration);
    art.write_json(TRAINING, &record)?;
    Ok(())
}

fn sweep(cfg: &RunConfig, art: &mut Artifacts, timings: &mut Timings) -> Result<()> {
    let data = load_dataset(cfg)?;
    let paths = [
        art.claim("sweep/trials.csv")?,
        art.claim("sweep/model.txt")?,
        art.claim("sweep/loss_curve.csv")?,
    ];
    let (_, train, val) = split(cfg, &data)?;
    let out = timed(timings, "sweep", || random_sweep(&cfg.sweep_space, &cfg.sweep, &train, &val))?;
    out.save_trial_log(&paths[0])?;
    save_model(&paths[1], &out.best_outcome.network, out.best_config.seed)?;
    out.best_outcome.curve.save_csv(&paths[2])?;
    art.write_json(SWEEP_BEST, &out.best)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PointSummary {
    index: usize,
    theta: (f64, f64),
    mae: f64,
    violation_rate: f64,
    pdf_integral: f64,
    cdf_span: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EvalSummary {
    points: Vec<PointSummary>,
    mean_mae: f64,
    max_mae: f64,
    truth_samples: usize,
}

fn eval(cfg: &RunConfig, art: &mut Artifacts, timings: &mut Timings) -> Result<()> {
    let net = load_network(cfg)?;
    let data = load_dataset(cfg)?;
    let sim = Simulator::for_dataset(&data, cfg);
    let grid = lambda_grid(cfg, &data)?;
    let points = eval_points(cfg);
    let mut summaries = Vec::with_capacity(points.len());
    let t = Instant::now();
    for (i, &theta) in points.iter().enumerate() {
        let rel = format!("eval/point_{i:02}.csv");
        let path = art.claim(&rel)?;
        art.claim(&sidecar(&rel))?;
        let curve = PdfCurve::evaluate(&net, theta, &grid)?;
        let truth = truth_samples(cfg, &sim, theta, i)?;
        let meta = CurveMeta {
            theta,
            method: None,
            alpha: None,
            q_hat: None,
            band_target: None,
            violation_rate: curve.violation_rate(),
        };
        curve.save(&path, &meta)?;
        summaries.push(PointSummary {
            index: i,
            theta,
            mae: ecdf_mae(&net, theta, &truth)?,
            violation_rate: meta.violation_rate,
            pdf_integral: curve.pdf_integral(),
            cdf_span: curve.cdf[curve.cdf.len() - 1] - curve.cdf[0],
        });
    }
    timings.insert("evaluate".into(), t.elapsed().as_secs_f64());
    let maes: Vec<f64> = summaries.iter().map(|s| s.mae).collect();
    let summary = EvalSummary {
        mean_mae: maes.iter().sum::<f64>() / maes.len() as f64,
        max_mae: maes.iter().copied().fold(0.0, f64::max),
        points: summaries,
        truth_samples: cfg.eval.truth_samples,
    };
    log::info!("mean MAE vs held-out ECDF {:.4}", summary.mean_mae);
    art.write_json("eval/summary.json", &summary)?;
    Ok(())
}

/// Conformal calibration as stored on disk (scores omitted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CalibrationRecord {
    alpha: f64,
    q_hat: f64,
    n: usize,
    unbounded: bool,
    validation_coverage: f64,
}

fn cdf_band(curve: &PdfCurve, q_hat: f64, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let calib = ConformalCalibration {
        scores: Vec::new(),
        alpha,
        q_hat,
        unbounded: false,
    };
    curve
        .cdf
        .iter()
        .map(|&f| conformal_band(f, &calib, Some((0.0, 1.0))))
        .unzip()
}

fn conform(cfg: &RunConfig, art: &mut Artifacts, timings: &mut Timings) -> Result<()> {
    let net = load_network(cfg)?;
    let data = load_dataset(cfg)?;
    let (s, _, val) = split(cfg, &data)?;
    let cal = Samples::from_dataset(&s.calibration);
    let calib = timed(timings, "calibrate", || conformal_calibrate(&net, &cal, cfg.uq.alpha))?;
    let coverage = coverage_check(&net, &calib, &val)?;
    log::info!("q_hat {:.4e}, validation coverage {coverage:.4}", calib.q_hat);
    let grid = lambda_grid(cfg, &data)?;
    for (i, &theta) in eval_points(cfg).iter().enumerate() {
        let rel = format!("conform/point_{i:02}.csv");
        let path = art.claim(&rel)?;
        art.claim(&sidecar(&rel))?;
        let mut curve = PdfCurve::evaluate(&net, theta, &grid)?;
        curve.band = Some(cdf_band(&curve, calib.q_hat, calib.alpha));
        let meta = CurveMeta {
            theta,
            method: Some("conformal".into()),
            alpha: Some(calib.alpha),
            q_hat: Some(calib.q_hat),
            band_target: Some("cdf".into()),
            violation_rate: curve.violation_rate(),
        };
        curve.save(&path, &meta)?;
    }
    art.write_json(
        CALIBRATION,
        &CalibrationRecord {
            alpha: calib.alpha,
            q_hat: calib.q_hat,
            n: calib.len(),
            unbounded: calib.unbounded,
            validation_coverage: coverage,
        },
    )?;
    Ok(())
}

fn write_envelope(path: &Path, env: &Envelope) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["lambda", "lo", "mean", "hi"]).map_err(io)?;
    for k in 0..env.lambda.len() {
        w.write_record([
            env.lambda[k].to_string(),
            env.lo[k].to_string(),
            env.mean[k].to_string(),
            env.hi[k].to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EnsembleRecord {
    provenance: Provenance,
    seed: u64,
    members: usize,
    level: f64,
    points: Vec<(f64, f64)>,
}

fn write_envelopes(cfg: &RunConfig, art: &mut Artifacts, dir: &str, ens: &Ensemble, grid: &[f64]) -> Result<()> {
    let points = eval_points(cfg);
    for (i, &theta) in points.iter().enumerate() {
        for (name, response) in [("cdf", Response::Cdf), ("pdf", Response::Pdf)] {
            let path = art.claim(&format!("{dir}/{name}_{i:02}.csv"))?;
            let env = ensemble_envelope(ens, theta, grid, cfg.uq.level, response)?;
            write_envelope(&path, &env)?;
        }
    }
    art.write_json(
        &format!("{dir}/ensemble.json"),
        &EnsembleRecord {
            provenance: ens.provenance.clone(),
            seed: ens.seed,
            members: ens.len(),
            level: cfg.uq.level,
            points,
        },
    )?;
    Ok(())
}

fn bootstrap(cfg: &RunConfig, art: &mut Artifacts, timings: &mut Timings) -> Result<()> {
    let data = load_dataset(cfg)?;
    let (spec, tc) = architecture(cfg)?;
    let (_, train, val) = split(cfg, &data)?;
    let k = cfg.uq.bootstrap_members;
    let paths = (0..k)
        .map(|i| art.claim(&format!("bootstrap/member_{i:03}.txt")))
        .collect::<Result<Vec<_>>>()?;
    let ens = timed(timings, "train", || {
        bootstrap_ensemble(&train, &val, &spec, &tc, k, cfg.seed, cfg.uq.shared_init)
    })?;
    for (p, net) in paths.iter().zip(&ens.members) {
        save_model(p, net, tc.seed)?;
    }
    let grid = lambda_grid(cfg, &data)?;
    timed(timings, "envelopes", || write_envelopes(cfg, art, "bootstrap", &ens, &grid))
}

fn fluctuate(cfg: &RunConfig, art: &mut Artifacts, timings: &mut Timings) -> Result<()> {
    let net = load_network(cfg)?;
    let data = load_dataset(cfg)?;
    let ens = weight_fluctuate(&net, cfg.uq.sigma, cfg.uq.fluctuations, cfg.seed)?;
    let grid = lambda_grid(cfg, &data)?;
    timed(timings, "envelopes", || write_envelopes(cfg, art, "fluctuate", &ens, &grid))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StackRecord {
    scales: Vec<f64>,
    residual_rms: Vec<f64>,
    final_rms: f64,
    validation_rms: f64,
}

fn msnn(cfg: &RunConfig, art: &mut Artifacts, timings: &mut Timings) -> Result<()> {
    let data = load_dataset(cfg)?;
    let (_, train, val) = split(cfg, &data)?;
    let m = &cfg.msnn;
    let base = TrainConfig {
        optimizer: m.optimizer,
        learning_rate: m.learning_rate,
        batch_size: cfg.train.batch_size,
        budget: Budget::Iterations(m.iterations),
        validation_every: cfg.train.validation_every,
        seed: 0,
        standardize: true,
        loss: Loss::Mse,
    };
    let stages = msnn_recipe(FEATURES, m.depth, m.width, m.stages, &base, cfg.seed);
    let paths = (0..stages.len())
        .map(|j| art.claim(&format!("msnn/stage_{j}.txt")))
        .collect::<Result<Vec<_>>>()?;
    let stack = timed(timings, "fit", || msnn_fit(&train, &stages))?;
    for ((p, net), stage) in paths.iter().zip(&stack.stages).zip(&stages) {
        save_model(p, net, stage.config.seed)?;
    }
    let sq: f64 = (0..val.len())
        .map(|i| msnn_predict(&stack, val.row(i)).map(|p| (p - val.y[i]).powi(2)))
        .sum::<Result<f64>>()?;
    art.write_json(
        "msnn/stack.json",
        &StackRecord {
            scales: stack.scales.clone(),
            residual_rms: stack.residual_rms(),
            final_rms: stack.final_rms,
            validation_rms: (sq / val.len() as f64).sqrt(),
        },
    )?;
    Ok(())
}

/// Everything a report needs besides the output registry.
pub struct ReportInputs<'a> {
    pub net: &'a Network,
    pub sim: &'a Simulator,
    pub grid: &'a [f64],
    pub loss_label: &'a str,
    /// Conformal `(q̂, α)` drawn as a CDF band when present.
    pub band: Option<(f64, f64)>,
    pub loss_curve: Option<&'a LossCurve>,
    pub truth_samples: usize,
    pub seed: u64,
}

fn fmt_param(v: f64) -> String {
    if v != 0.0 && v.abs() < 0.01 {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// ECDF of `samples`, restricted to `[lo, hi]`.
fn ecdf_series(samples: &[f64], lo: f64, hi: f64) -> Series {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let (x, y) = sorted
        .iter()
        .enumerate()
        .filter(|(_, l)| (lo..=hi).contains(*l))
        .map(|(k, &l)| (l, (k + 1) as f64 / n))
        .unzip();
    Series::Step { label: "ECDF (simulated)".into(), x, y, color: TRUTH_COLOR }
}

/// Per-point CSV, CDF and pdf panels, an optional loss panel, and an index
/// page, all under `report/`.
pub fn emit_report(inputs: &ReportInputs<'_>, points: &[(f64, f64)], art: &mut Artifacts) -> Result<()> {
    if points.is_empty() {
        return Err(Error::domain("report needs at least one parameter point"));
    }
    let mut rows = String::new();
    for (i, &theta) in points.iter().enumerate() {
        let csv_rel = format!("report/point_{i:02}.csv");
        let csv_path = art.claim(&csv_rel)?;
        art.claim(&sidecar(&csv_rel))?;
        let mut rng = seed::stream(inputs.seed, "eval-truth", i as u64);
        let truth = inputs.sim.statistics(theta, inputs.truth_samples, &mut rng)?;
        let mut curve = PdfCurve::evaluate(inputs.net, theta, inputs.grid)?;
        if let Some((q_hat, alpha)) = inputs.band {
            curve.band = Some(cdf_band(&curve, q_hat, alpha));
        }
        let meta = CurveMeta {
            theta,
            method: inputs.band.map(|_| "conformal".to_string()),
            alpha: inputs.band.map(|b| b.1),
            q_hat: inputs.band.map(|b| b.0),
            band_target: inputs.band.map(|_| "cdf".to_string()),
            violation_rate: curve.violation_rate(),
        };
        curve.save(&csv_path, &meta)?;

        let label = format!(
            "θ = ({}, {}) · loss: {}",
            fmt_param(theta.0),
            fmt_param(theta.1),
            inputs.loss_label
        );
        let mut cdf = Panel::new(format!("CDF {label}"), "λ", "F(λ | θ)");
        if let Some((lo, hi)) = &curve.band {
            cdf = cdf.with(Series::Band {
                label: format!("conformal band (α = {})", fmt_param(meta.alpha.unwrap_or(0.0))),
                x: curve.lambda.clone(),
                lo: lo.clone(),
                hi: hi.clone(),
                color: BAND_COLOR,
            });
        }
        let (lo, hi) = (inputs.grid[0], inputs.grid[inputs.grid.len() - 1]);
        let cdf = cdf.with(ecdf_series(&truth, lo, hi)).with(Series::Line {
            label: "model".into(),
            x: curve.lambda.clone(),
            y: curve.cdf.clone(),
            color: MODEL_COLOR,
        });
        let in_range: Vec<f64> = truth
            .iter()
            .copied()
            .filter(|l| (lo..=hi).contains(l))
            .collect();
        let mut pdf = Panel::new(format!("pdf {label}"), "λ", "f(λ | θ)");
        if in_range.len() >= 2 {
            let h = histogram_density(&in_range, &Bins::Sturges)?;
            pdf = pdf.with(Series::Bars {
                label: "histogram (simulated)".into(),
                edges: h.bin_edges,
                heights: h.densities,
                color: HIST_COLOR,
            });
        }
        let pdf = pdf.with(Series::Line {
            label: "model dF/dλ".into(),
            x: curve.lambda.clone(),
            y: curve.pdf.clone(),
            color: MODEL_COLOR,
        });
        let cdf_name = format!("cdf_{i:02}.svg");
        let pdf_name = format!("pdf_{i:02}.svg");
        art.write(&format!("report/{cdf_name}"), cdf.to_svg().as_bytes())?;
        art.write(&format!("report/{pdf_name}"), pdf.to_svg().as_bytes())?;
        let _ = writeln!(
            rows,
            "<tr><td>{i}</td><td>{}</td><td>{}</td><td>{:.4}</td><td><a href=\"{cdf_name}\"><img src=\"{cdf_name}\" width=\"320\"></a></td><td><a href=\"{pdf_name}\"><img src=\"{pdf_name}\" width=\"320\"></a></td><td><a href=\"point_{i:02}.csv\">csv</a></td></tr>",
            fmt_param(theta.0),
            fmt_param(theta.1),
            meta.violation_rate
        );
    }
    let mut loss_block = String::new();
    if let Some(curve) = inputs.loss_curve {
        let x: Vec<f64> = curve.points.iter().map(|p| p.iteration as f64).collect();
        let mut panel = Panel::new(format!("training curve · loss: {}", inputs.loss_label), "iteration", "loss")
            .with(Series::Line {
                label: "train".into(),
                x: x.clone(),
                y: curve.points.iter().map(|p| p.train_loss).collect(),
                color: BAND_COLOR,
            })
            .with(Series::Line {
                label: "validation".into(),
                x,
                y: curve.points.iter().map(|p| p.val_loss).collect(),
                color: MODEL_COLOR,
            });
        panel.log_y = true;
        art.write("report/loss.svg", panel.to_svg().as_bytes())?;
        loss_block = "<h2>Training</h2>\n<p><img src=\"loss.svg\"></p>\n".into();
    }
    let html = format!(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>cdf2pdf report</title></head>\n<body>\n<h1>Sampling distributions</h1>\n<p>loss: {}</p>\n{loss_block}<table border=\"1\" cellpadding=\"4\">\n<tr><th>#</th><th>θ₁</th><th>θ₂</th><th>violation rate</th><th>CDF</th><th>pdf</th><th>data</th></tr>\n{rows}</table>\n</body></html>\n",
        inputs.loss_label
    );
    art.write("report/index.html", html.as_bytes())?;
    Ok(())
}

fn read_loss_curve(path: &Path) -> Result<LossCurve> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let points = r
        .deserialize::<LossPoint>()
        .enumerate()
        .map(|(i, p)| {
            p.map_err(|e| Error::Parse {
                line: i as u64 + 2,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LossCurve { points })
}

fn report(cfg: &RunConfig, art: &mut Artifacts, timings: &mut Timings) -> Result<()> {
    let net = load_network(cfg)?;
    let data = load_dataset(cfg)?;
    let record: TrainingRecord = serde_json::from_slice(&std::fs::read(require(&cfg.out, TRAINING)?)?)?;
    let band = match cfg.out.join(CALIBRATION) {
        p if p.exists() => {
            let c: CalibrationRecord = serde_json::from_slice(&std::fs::read(p)?)?;
            Some((c.q_hat, c.alpha))
        }
        _ => None,
    };
    let loss_curve = match cfg.out.join(LOSS_CURVE) {
        p if p.exists() => Some(read_loss_curve(&p)?),
        _ => None,
    };
    let sim = Simulator::for_dataset(&data, cfg);
    let grid = lambda_grid(cfg, &data)?;
    let inputs = ReportInputs {
        net: &net,
        sim: &sim,
        grid: &grid,
        loss_label: &record.loss_label,
        band,
        loss_curve: loss_curve.as_ref(),
        truth_samples: cfg.eval.truth_samples,
        seed: cfg.seed,
    };
    timed(timings, "report", || emit_report(&inputs, &eval_points(cfg), art))
}
