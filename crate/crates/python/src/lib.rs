//! Python bindings: networks, dataset generators, training, the uncertainty
//! methods and the command runner.

use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyFileNotFoundError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use cdf2pdf::cli::{self, Command, Overrides};
use cdf2pdf::datasets::{self, PriorBox, SirObservation, SplitSpec};
use cdf2pdf::nn::{self, Activation, Loss, NetworkSpec, OptimizerKind};
use cdf2pdf::seed;
use cdf2pdf::simulators::{self as sims, OnOffObservation, OnOffParams, SirParams, SirScenario};
use cdf2pdf::training::{self, Budget, Samples, TrainConfig};
use cdf2pdf::uncertainty::{self as uq, Response};
use cdf2pdf::Error;

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Dependency(_) => PyFileNotFoundError::new_err(msg),
        Error::Io(_) => PyOSError::new_err(msg),
        e if e.is_numeric() => PyArithmeticError::new_err(msg),
        Error::Sweep(_) | Error::Ensemble { .. } => PyRuntimeError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for cdf2pdf::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().py()
}

/// Feed-forward regressor of `(θ₁, θ₂, λ)` or any fixed input width.
#[pyclass(module = "pycdf2pdf", skip_from_py_object)]
#[derive(Clone)]
struct Network {
    inner: nn::Network,
}

#[pymethods]
impl Network {
    /// Freshly initialized network with `layers` hidden layers of `width` units.
    #[new]
    #[pyo3(signature = (input_width=3, layers=6, width=12, activation="silu", output="sigmoid", seed=0))]
    fn new(input_width: usize, layers: usize, width: usize, activation: &str, output: &str, seed: u64) -> PyResult<Self> {
        let spec = NetworkSpec::uniform(input_width, layers, width, parse(activation)?, parse(output)?).with_seed(seed);
        Ok(Self { inner: nn::Network::init(&spec).py()? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: nn::load_model(&path).py()?.0 })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self { inner: nn::parse_model(text).py()?.0 })
    }

    #[pyo3(signature = (path, training_seed=0))]
    fn save(&self, path: PathBuf, training_seed: u64) -> PyResult<()> {
        nn::save_model(&path, &self.inner, training_seed).py()
    }

    #[pyo3(signature = (training_seed=0))]
    fn to_text(&self, training_seed: u64) -> String {
        nn::to_model_string(&self.inner, training_seed)
    }

    #[getter]
    fn input_width(&self) -> usize {
        self.inner.input_width()
    }

    #[getter]
    fn num_params(&self) -> usize {
        self.inner.num_params()
    }

    fn forward(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.forward(&x).py()
    }

    /// Model CDF at each λ.
    fn cdf(&self, theta1: f64, theta2: f64, lambdas: Vec<f64>) -> PyResult<Vec<f64>> {
        uq::cdf_grid(&self.inner, (theta1, theta2), &lambdas).py()
    }

    /// Exact derivative of the model CDF in λ.
    fn pdf(&self, theta1: f64, theta2: f64, lambdas: Vec<f64>) -> PyResult<Vec<f64>> {
        uq::pdf_grid(&self.inner, (theta1, theta2), &lambdas).py()
    }

    /// Mean absolute gap to the empirical CDF of `samples`.
    fn ecdf_mae(&self, theta1: f64, theta2: f64, samples: Vec<f64>) -> PyResult<f64> {
        uq::ecdf_mae(&self.inner, (theta1, theta2), &samples).py()
    }

    fn __eq__(&self, other: PyRef<'_, Network>) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let s = self.inner.spec();
        format!("Network(widths={:?}, params={})", s.layer_widths, self.inner.num_params())
    }
}

/// Rows `(theta1, theta2, lambda, target, group_id)` with their provenance.
#[pyclass(module = "pycdf2pdf", skip_from_py_object)]
#[derive(Clone)]
struct Dataset {
    inner: datasets::Dataset,
}

#[pymethods]
impl Dataset {
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: datasets::read_dataset(&path).py()? })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        datasets::write_dataset(&path, &self.inner).py()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Columns as a dict of lists.
    fn columns(&self) -> std::collections::BTreeMap<&'static str, Vec<f64>> {
        let r = &self.inner.records;
        [
            ("theta1", r.iter().map(|x| x.theta1).collect()),
            ("theta2", r.iter().map(|x| x.theta2).collect()),
            ("lambda", r.iter().map(|x| x.lambda).collect()),
            ("target", r.iter().map(|x| x.target).collect()),
            ("group_id", r.iter().map(|x| x.group_id as f64).collect()),
        ]
        .into_iter()
        .collect()
    }

    /// Seeded train / validation / calibration parts.
    #[pyo3(signature = (train=0.8, validation=0.1, calibration=0.1, group_aware=true, seed=0))]
    fn split(&self, train: f64, validation: f64, calibration: f64, group_aware: bool, seed: u64) -> PyResult<(Self, Self, Self)> {
        let spec = SplitSpec { train, validation, calibration, group_aware, seed };
        let s = datasets::split_dataset(&self.inner, &spec).py()?;
        Ok((Self { inner: s.train }, Self { inner: s.validation }, Self { inner: s.calibration }))
    }

    fn __repr__(&self) -> String {
        let generator = self.inner.meta.as_ref().map_or("unknown", |m| m.generator.as_str());
        format!("Dataset(rows={}, generator={generator})", self.inner.len())
    }
}

fn prior(theta1: Option<(f64, f64)>, theta2: Option<(f64, f64)>, default: PriorBox) -> PriorBox {
    PriorBox { theta1: theta1.unwrap_or(default.theta1), theta2: theta2.unwrap_or(default.theta2) }
}

/// ON/OFF empirical-CDF records: `b_points` parameter points × `k` experiments.
#[pyfunction]
#[pyo3(signature = (b_points, k, seed, mu_range=None, nu_range=None))]
fn gen_ecdf_onoff(
    py: Python<'_>,
    b_points: usize,
    k: usize,
    seed: u64,
    mu_range: Option<(f64, f64)>,
    nu_range: Option<(f64, f64)>,
) -> PyResult<Dataset> {
    let p = prior(mu_range, nu_range, PriorBox::ONOFF);
    let inner = py.detach(|| datasets::gen_ecdf_onoff(b_points, k, p, seed)).py()?;
    Ok(Dataset { inner })
}

/// ON/OFF indicator records.
#[pyfunction]
#[pyo3(signature = (b, seed, mu_range=None, nu_range=None))]
fn gen_alffi_onoff(
    py: Python<'_>,
    b: usize,
    seed: u64,
    mu_range: Option<(f64, f64)>,
    nu_range: Option<(f64, f64)>,
) -> PyResult<Dataset> {
    let p = prior(mu_range, nu_range, PriorBox::ONOFF);
    let inner = py.detach(|| datasets::gen_alffi_onoff(b, p, seed)).py()?;
    Ok(Dataset { inner })
}

fn scenario(population: u64, initial_infected: u64, horizon_days: usize) -> PyResult<SirScenario> {
    let s = SirScenario { population, initial_infected, horizon_days, ..SirScenario::default() };
    s.validate().py()?;
    Ok(s)
}

/// SIR empirical-CDF records against an observation simulated at `truth`.
#[pyfunction]
#[pyo3(signature = (
    b_points, k, seed, truth=(0.25, 6e-4), observation_seed=1,
    population=1000, initial_infected=1, horizon_days=50, alpha_range=None, beta_range=None,
))]
#[allow(clippy::too_many_arguments)]
fn gen_ecdf_sir(
    py: Python<'_>,
    b_points: usize,
    k: usize,
    seed: u64,
    truth: (f64, f64),
    observation_seed: u64,
    population: u64,
    initial_infected: u64,
    horizon_days: usize,
    alpha_range: Option<(f64, f64)>,
    beta_range: Option<(f64, f64)>,
) -> PyResult<Dataset> {
    let sc = scenario(population, initial_infected, horizon_days)?;
    let p = prior(alpha_range, beta_range, PriorBox::SIR);
    let inner = py
        .detach(|| {
            let obs = SirObservation::generate(&sc, SirParams::new(truth.0, truth.1)?, observation_seed)?;
            datasets::gen_ecdf_sir(b_points, k, p, &sc, &obs, seed)
        })
        .py()?;
    Ok(Dataset { inner })
}

/// Likelihood-ratio statistic of ON/OFF counts `(n, m)` at `(mu, nu)`.
#[pyfunction]
fn onoff_lambda(n: u64, m: u64, mu: f64, nu: f64) -> PyResult<f64> {
    sims::onoff_lambda(OnOffObservation::new(n, m), OnOffParams::new(mu, nu).py()?).py()
}

/// `k` ON/OFF statistics simulated at `(mu, nu)`.
#[pyfunction]
fn onoff_statistics(mu: f64, nu: f64, k: usize, seed: u64) -> PyResult<Vec<f64>> {
    let mut rng = seed::rng(seed);
    datasets::onoff_statistics(OnOffParams::new(mu, nu).py()?, k, &mut rng).py()
}

/// `k` SIR statistics simulated at `(alpha, beta)`.
#[pyfunction]
#[pyo3(signature = (alpha, beta, k, seed, population=1000, initial_infected=1, horizon_days=50))]
#[allow(clippy::too_many_arguments)]
fn sir_statistics(
    py: Python<'_>,
    alpha: f64,
    beta: f64,
    k: usize,
    seed: u64,
    population: u64,
    initial_infected: u64,
    horizon_days: usize,
) -> PyResult<Vec<f64>> {
    let sc = scenario(population, initial_infected, horizon_days)?;
    let params = SirParams::new(alpha, beta).py()?;
    py.detach(|| {
        let mut rng = seed::rng(seed);
        datasets::sir_statistics(params, k, &sc, &mut rng)
    })
    .py()
}

/// Daily mean infected counts from the ODE.
#[pyfunction]
#[pyo3(signature = (alpha, beta, population=1000, initial_infected=1, horizon_days=50))]
fn sir_mean_infected(alpha: f64, beta: f64, population: u64, initial_infected: u64, horizon_days: usize) -> PyResult<Vec<f64>> {
    scenario(population, initial_infected, horizon_days)?.mean_infected(SirParams::new(alpha, beta).py()?).py()
}

/// Outcome of a training run.
#[pyclass(module = "pycdf2pdf", get_all, skip_from_py_object)]
struct TrainResult {
    network: Py<Network>,
    best_val_loss: f64,
    best_iteration: u64,
    iterations: u64,
    /// `(iteration, train_loss, val_loss)` per validation.
    curve: Vec<(u64, f64, f64)>,
}

fn train_config(loss: &str, optimizer: &str, learning_rate: f64, batch_size: usize, iterations: u64, seed: u64) -> PyResult<TrainConfig> {
    let cfg = TrainConfig {
        loss: parse::<Loss>(loss)?,
        optimizer: parse::<OptimizerKind>(optimizer)?,
        learning_rate,
        batch_size,
        budget: Budget::Iterations(iterations),
        seed: seed::child_seed(seed, "train", 0),
        ..TrainConfig::default()
    };
    cfg.validate().py()?;
    Ok(cfg)
}

/// Train a `(θ₁, θ₂, λ)` regressor, keeping the checkpoint with the lowest
/// validation loss.
#[pyfunction]
#[pyo3(signature = (
    train, val, layers=6, width=12, activation="silu", output="sigmoid", loss="mse",
    optimizer="nadam", learning_rate=1e-3, batch_size=512, iterations=10_000, seed=0,
))]
#[allow(clippy::too_many_arguments)]
fn train(
    py: Python<'_>,
    train: PyRef<'_, Dataset>,
    val: PyRef<'_, Dataset>,
    layers: usize,
    width: usize,
    activation: &str,
    output: &str,
    loss: &str,
    optimizer: &str,
    learning_rate: f64,
    batch_size: usize,
    iterations: u64,
    seed: u64,
) -> PyResult<TrainResult> {
    let spec = NetworkSpec::uniform(3, layers, width, parse::<Activation>(activation)?, parse(output)?)
        .with_seed(seed::child_seed(seed, "init", 0));
    let cfg = train_config(loss, optimizer, learning_rate, batch_size, iterations, seed)?;
    let (tr, va) = (Samples::from_dataset(&train.inner), Samples::from_dataset(&val.inner));
    let out = py.detach(|| training::train_regressor(&tr, &va, &spec, &cfg)).py()?;
    Ok(TrainResult {
        network: Py::new(py, Network { inner: out.network })?,
        best_val_loss: out.best_val_loss,
        best_iteration: out.best_iteration,
        iterations: out.iterations,
        curve: out.curve.points.iter().map(|p| (p.iteration, p.train_loss, p.val_loss)).collect(),
    })
}

/// Multistage fit of a 1-D target; returns `(scales, final_rms)`.
#[pyfunction]
#[pyo3(signature = (x, y, stages=2, depth=2, width=32, iterations=5000, learning_rate=1e-3, seed=0))]
#[allow(clippy::too_many_arguments)]
fn msnn_fit(
    py: Python<'_>,
    x: Vec<f64>,
    y: Vec<f64>,
    stages: usize,
    depth: usize,
    width: usize,
    iterations: u64,
    learning_rate: f64,
    seed: u64,
) -> PyResult<(Vec<f64>, f64)> {
    let data = Samples::new(x, y, 1).py()?;
    let base = TrainConfig {
        optimizer: OptimizerKind::Adam,
        learning_rate,
        batch_size: data.len(),
        budget: Budget::Iterations(iterations),
        standardize: false,
        ..TrainConfig::default()
    };
    let recipe = training::msnn_recipe(1, depth, width, stages, &base, seed);
    let stack = py.detach(|| training::msnn_fit(&data, &recipe)).py()?;
    Ok((stack.scales, stack.final_rms))
}

/// Split-conformal calibration.
#[pyclass(module = "pycdf2pdf", skip_from_py_object)]
struct Calibration {
    inner: uq::ConformalCalibration,
}

#[pymethods]
impl Calibration {
    #[staticmethod]
    fn from_scores(scores: Vec<f64>, alpha: f64) -> PyResult<Self> {
        Ok(Self { inner: uq::ConformalCalibration::from_scores(&scores, alpha).py()? })
    }

    #[getter]
    fn q_hat(&self) -> f64 {
        self.inner.q_hat
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn unbounded(&self) -> bool {
        self.inner.unbounded
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// `(lo, hi)` around `prediction`, optionally clamped to `(a, b)`.
    #[pyo3(signature = (prediction, clamp=None))]
    fn band(&self, prediction: f64, clamp: Option<(f64, f64)>) -> (f64, f64) {
        uq::conformal_band(prediction, &self.inner, clamp)
    }

    /// Fraction of `data` targets inside their bands.
    fn coverage(&self, net: PyRef<'_, Network>, data: PyRef<'_, Dataset>) -> PyResult<f64> {
        uq::coverage_check(&net.inner, &self.inner, &Samples::from_dataset(&data.inner)).py()
    }
}

/// Pooled calibration on held-out rows.
#[pyfunction]
fn conformal_calibrate(net: PyRef<'_, Network>, calibration: PyRef<'_, Dataset>, alpha: f64) -> PyResult<Calibration> {
    let samples = Samples::from_dataset(&calibration.inner);
    Ok(Calibration { inner: uq::conformal_calibrate(&net.inner, &samples, alpha).py()? })
}

/// Bootstrap or weight-fluctuation ensemble.
#[pyclass(module = "pycdf2pdf", skip_from_py_object)]
struct Ensemble {
    inner: uq::Ensemble,
}

#[pymethods]
impl Ensemble {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn member(&self, i: usize) -> PyResult<Network> {
        self.inner
            .members
            .get(i)
            .map(|n| Network { inner: n.clone() })
            .ok_or_else(|| pyo3::exceptions::PyIndexError::new_err(format!("member {i} out of range")))
    }

    /// Dict with `lambda`, `lo`, `mean`, `hi` lists for `response` "cdf" or "pdf".
    #[pyo3(signature = (theta1, theta2, lambdas, level=0.68, response="cdf"))]
    fn envelope(
        &self,
        theta1: f64,
        theta2: f64,
        lambdas: Vec<f64>,
        level: f64,
        response: &str,
    ) -> PyResult<std::collections::BTreeMap<&'static str, Vec<f64>>> {
        let r = match response {
            "cdf" => Response::Cdf,
            "pdf" => Response::Pdf,
            other => return Err(PyValueError::new_err(format!("response must be `cdf` or `pdf`, got `{other}`"))),
        };
        let e = uq::ensemble_envelope(&self.inner, (theta1, theta2), &lambdas, level, r).py()?;
        Ok([("lambda", e.lambda), ("lo", e.lo), ("mean", e.mean), ("hi", e.hi)].into_iter().collect())
    }
}

/// `n` copies of `net` with Gaussian noise of scale `sigma` on every weight and bias.
#[pyfunction]
fn weight_fluctuate(net: PyRef<'_, Network>, sigma: f64, n: usize, seed: u64) -> PyResult<Ensemble> {
    Ok(Ensemble { inner: uq::weight_fluctuate(&net.inner, sigma, n, seed).py()? })
}

/// `k` networks trained on with-replacement resamples of `train`.
#[pyfunction]
#[pyo3(signature = (
    train, val, k=20, layers=5, width=10, activation="silu", output="sigmoid", optimizer="nadam",
    learning_rate=3e-4, batch_size=60, iterations=10_000, seed=0, shared_init=false,
))]
#[allow(clippy::too_many_arguments)]
fn bootstrap(
    py: Python<'_>,
    train: PyRef<'_, Dataset>,
    val: PyRef<'_, Dataset>,
    k: usize,
    layers: usize,
    width: usize,
    activation: &str,
    output: &str,
    optimizer: &str,
    learning_rate: f64,
    batch_size: usize,
    iterations: u64,
    seed: u64,
    shared_init: bool,
) -> PyResult<Ensemble> {
    let spec = NetworkSpec::uniform(3, layers, width, parse::<Activation>(activation)?, parse(output)?);
    let cfg = train_config("mse", optimizer, learning_rate, batch_size, iterations, seed)?;
    let (tr, va) = (Samples::from_dataset(&train.inner), Samples::from_dataset(&val.inner));
    let inner = py.detach(|| uq::bootstrap_ensemble(&tr, &va, &spec, &cfg, k, seed, shared_init)).py()?;
    Ok(Ensemble { inner })
}

/// Run one command of the command-line tool and return the manifest as JSON.
#[pyfunction]
#[pyo3(signature = (command, config=None, seed=None, out=None, set=Vec::new()))]
fn run(
    py: Python<'_>,
    command: &str,
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    set: Vec<String>,
) -> PyResult<String> {
    let command: Command = parse(command)?;
    let overrides = Overrides { seed, out, workers: None, set };
    let cfg = cli::parse_config(config.as_deref(), &overrides).py()?;
    let manifest = py.detach(|| cli::run_command(command, &cfg)).py()?;
    serde_json::to_string(&manifest).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Child seed derived from a master seed, a label and an index.
#[pyfunction]
fn child_seed(master: u64, label: &str, index: u64) -> u64 {
    seed::child_seed(master, label, index)
}

#[pymodule]
fn pycdf2pdf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Network>()?;
    m.add_class::<Dataset>()?;
    m.add_class::<TrainResult>()?;
    m.add_class::<Calibration>()?;
    m.add_class::<Ensemble>()?;
    m.add_function(wrap_pyfunction!(gen_ecdf_onoff, m)?)?;
    m.add_function(wrap_pyfunction!(gen_alffi_onoff, m)?)?;
    m.add_function(wrap_pyfunction!(gen_ecdf_sir, m)?)?;
    m.add_function(wrap_pyfunction!(onoff_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(onoff_statistics, m)?)?;
    m.add_function(wrap_pyfunction!(sir_statistics, m)?)?;
    m.add_function(wrap_pyfunction!(sir_mean_infected, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(msnn_fit, m)?)?;
    m.add_function(wrap_pyfunction!(conformal_calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(weight_fluctuate, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(child_seed, m)?)?;
    Ok(())
}
