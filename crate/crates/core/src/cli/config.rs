//! INI run configuration.
//!
//! Files hold `[section]` headers and `key = value` lines; `#` starts a
//! comment anywhere on a line and `;` at the start of one. Keys written
//! before the first header, and `--set` overrides without a `section.`
//! prefix, resolve to the one section that owns the key name.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::datasets::{PriorBox, Problem, SplitSpec, FEATURES};
use crate::nn::{InitScheme, Loss, NetworkSpec, OptimizerKind};
use crate::seed;
use crate::simulators::{SirParams, SirScenario};
use crate::training::{Budget, SweepSettings, SweepSpace, TrainConfig};
use crate::{Error, Result};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "CDF2PDF_OUT";
const DEFAULT_OUT_ROOT: &str = "runs";

const SCHEMA: &[(&str, &[&str])] = &[
    ("run", &["problem", "seed", "out", "workers"]),
    (
        "data",
        &["generator", "points", "k", "theta1_min", "theta1_max", "theta2_min", "theta2_max"],
    ),
    (
        "sir",
        &[
            "population",
            "initial_infected",
            "horizon_days",
            "ode_step",
            "floor_mean",
            "truth_alpha",
            "truth_beta",
            "observation_seed",
        ],
    ),
    ("split", &["train", "validation", "calibration", "group_aware"]),
    ("network", &["layers", "width", "activation", "output_activation", "init", "kappa"]),
    (
        "train",
        &[
            "architecture",
            "loss",
            "huber_delta",
            "optimizer",
            "learning_rate",
            "batch_size",
            "iterations",
            "validation_every",
            "standardize",
        ],
    ),
    (
        "sweep",
        &[
            "trials",
            "epochs",
            "layers_min",
            "layers_max",
            "width_min",
            "width_max",
            "lr_min",
            "lr_max",
            "batch_min",
            "batch_max",
            "optimizers",
            "activations",
        ],
    ),
    ("uq", &["alpha", "level", "bootstrap_members", "shared_init", "sigma", "fluctuations"]),
    ("eval", &["grid", "points", "lambda_min", "lambda_max", "lambda_points", "truth_samples"]),
    ("msnn", &["stages", "depth", "width", "iterations", "learning_rate", "optimizer"]),
];

fn defaults(problem: Problem, seed: u64) -> Vec<(&'static str, &'static str, String)> {
    let (prior, points, k) = match problem {
        Problem::Onoff => (PriorBox::ONOFF, 1000, 100),
        Problem::Sir => (PriorBox::SIR, 250, 400),
    };
    let root = std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT));
    let out = root.join(format!("{}-seed{seed}", problem.name()));
    let scenario = SirScenario::default();
    let space = SweepSpace::default();
    let sweep = SweepSettings::default();
    let train = TrainConfig::default();
    let list = |v: Vec<&str>| v.join(",");
    let epochs = match sweep.budget {
        Budget::Epochs(e) | Budget::Iterations(e) => e,
    };
    let iterations = match train.budget {
        Budget::Epochs(e) | Budget::Iterations(e) => e,
    };
    vec![
        ("run", "problem", problem.name().into()),
        ("run", "seed", seed.to_string()),
        ("run", "out", out.display().to_string()),
        ("run", "workers", "1".into()),
        ("data", "generator", "ecdf".into()),
        ("data", "points", points.to_string()),
        ("data", "k", k.to_string()),
        ("data", "theta1_min", prior.theta1.0.to_string()),
        ("data", "theta1_max", prior.theta1.1.to_string()),
        ("data", "theta2_min", prior.theta2.0.to_string()),
        ("data", "theta2_max", prior.theta2.1.to_string()),
        ("sir", "population", scenario.population.to_string()),
        ("sir", "initial_infected", scenario.initial_infected.to_string()),
        ("sir", "horizon_days", scenario.horizon_days.to_string()),
        ("sir", "ode_step", scenario.ode_step.to_string()),
        ("sir", "floor_mean", scenario.floor_mean.to_string()),
        ("sir", "truth_alpha", "0.25".into()),
        ("sir", "truth_beta", "0.0006".into()),
        ("sir", "observation_seed", "1".into()),
        ("split", "train", "0.8".into()),
        ("split", "validation", "0.1".into()),
        ("split", "calibration", "0.1".into()),
        ("split", "group_aware", "true".into()),
        ("network", "layers", "6".into()),
        ("network", "width", "12".into()),
        ("network", "activation", "silu".into()),
        ("network", "output_activation", "sigmoid".into()),
        ("network", "init", InitScheme::GlorotUniform.name().into()),
        ("network", "kappa", "1".into()),
        ("train", "architecture", "network".into()),
        ("train", "loss", "mse".into()),
        ("train", "huber_delta", crate::nn::DEFAULT_HUBER_DELTA.to_string()),
        ("train", "optimizer", train.optimizer.name().into()),
        ("train", "learning_rate", train.learning_rate.to_string()),
        ("train", "batch_size", train.batch_size.to_string()),
        ("train", "iterations", iterations.to_string()),
        ("train", "validation_every", train.validation_every.to_string()),
        ("train", "standardize", train.standardize.to_string()),
        ("sweep", "trials", sweep.trials.to_string()),
        ("sweep", "epochs", epochs.to_string()),
        ("sweep", "layers_min", space.layers.0.to_string()),
        ("sweep", "layers_max", space.layers.1.to_string()),
        ("sweep", "width_min", space.width.0.to_string()),
        ("sweep", "width_max", space.width.1.to_string()),
        ("sweep", "lr_min", space.learning_rate.0.to_string()),
        ("sweep", "lr_max", space.learning_rate.1.to_string()),
        ("sweep", "batch_min", space.batch_size.0.to_string()),
        ("sweep", "batch_max", space.batch_size.1.to_string()),
        ("sweep", "optimizers", list(space.optimizers.iter().map(|o| o.name()).collect())),
        ("sweep", "activations", list(space.activations.iter().map(|a| a.name()).collect())),
        ("uq", "alpha", "0.32".into()),
        ("uq", "level", "0.68".into()),
        ("uq", "bootstrap_members", "20".into()),
        ("uq", "shared_init", "true".into()),
        ("uq", "sigma", "0.01".into()),
        ("uq", "fluctuations", "100".into()),
        ("eval", "grid", "3".into()),
        ("eval", "points", String::new()),
        ("eval", "lambda_min", "0".into()),
        ("eval", "lambda_max", "auto".into()),
        ("eval", "lambda_points", "101".into()),
        ("eval", "truth_samples", "2000".into()),
        ("msnn", "stages", "2".into()),
        ("msnn", "depth", "3".into()),
        ("msnn", "width", "20".into()),
        ("msnn", "iterations", "5000".into()),
        ("msnn", "learning_rate", "0.001".into()),
        ("msnn", "optimizer", "adam".into()),
    ]
}

/// Where an effective value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Default,
    File,
    Flag,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEntry {
    pub section: &'static str,
    pub key: &'static str,
    pub value: String,
    pub origin: Origin,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    /// `section.key=value` or `key=value`.
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// Empirical-CDF targets, `points × k` rows.
    Ecdf,
    /// Indicator targets, one row per record.
    Indicator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub generator: Generator,
    pub points: usize,
    pub k: usize,
    pub prior: PriorBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SirConfig {
    pub scenario: SirScenario,
    pub truth: SirParams,
    pub observation_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    /// Use the `[network]` section.
    Network,
    /// Use the best trial of a previous `sweep`.
    Sweep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UqConfig {
    pub alpha: f64,
    pub level: f64,
    pub bootstrap_members: usize,
    pub shared_init: bool,
    pub sigma: f64,
    pub fluctuations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub grid: usize,
    /// Explicit parameter points; replace the grid when nonempty.
    pub points: Vec<(f64, f64)>,
    pub lambda_min: f64,
    /// `None` means the 99.5% quantile of the dataset statistics.
    pub lambda_max: Option<f64>,
    pub lambda_points: usize,
    pub truth_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsnnConfig {
    pub stages: usize,
    pub depth: usize,
    pub width: usize,
    pub iterations: u64,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
}

/// Fully validated configuration of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: Problem,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: usize,
    pub data: DataConfig,
    pub sir: SirConfig,
    pub split: SplitSpec,
    pub network: NetworkSpec,
    pub train: TrainConfig,
    pub architecture: Architecture,
    pub sweep_space: SweepSpace,
    pub sweep: SweepSettings,
    pub uq: UqConfig,
    pub eval: EvalConfig,
    pub msnn: MsnnConfig,
    entries: Vec<ConfigEntry>,
}

impl RunConfig {
    /// Every effective value, in schema order.
    pub fn entries(&self) -> &[ConfigEntry] {
        &self.entries
    }

    /// Effective configuration as INI text, marking values that were not
    /// set explicitly. The text parses back to the same configuration.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let mut current = "";
        for e in &self.entries {
            if e.section != current {
                if !current.is_empty() {
                    s.push('\n');
                }
                let _ = writeln!(s, "[{}]", e.section);
                current = e.section;
            }
            let note = match e.origin {
                Origin::Default => "  # default",
                Origin::File => "",
                Origin::Flag => "  # flag",
            };
            let _ = writeln!(s, "{} = {}{note}", e.key, e.value);
        }
        s
    }

    /// Network specification for the CDF regressor.
    pub fn network_spec(&self) -> NetworkSpec {
        self.network.clone()
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config_str("", &Overrides::default()).expect("defaults are valid")
    }
}

/// Parse a config file (or defaults only when `path` is `None`) and apply
/// the overrides.
pub fn parse_config(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", p.display())))?,
        None => String::new(),
    };
    parse_config_str(&text, overrides)
}

pub fn parse_config_str(text: &str, overrides: &Overrides) -> Result<RunConfig> {
    let mut values: BTreeMap<(&'static str, &'static str), (String, Origin)> = BTreeMap::new();
    for (section, key, value, line) in parse_ini(text)? {
        let id = resolve(section.as_deref(), &key).map_err(|e| match e {
            Error::Config(m) => Error::Parse { line, message: m },
            other => other,
        })?;
        values.insert(id, (value, Origin::File));
    }
    for item in &overrides.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override `{item}` is not key=value")))?;
        let (section, key) = match k.trim().split_once('.') {
            Some((s, k)) => (Some(s), k),
            None => (None, k.trim()),
        };
        values.insert(resolve(section, key)?, (v.trim().to_string(), Origin::Flag));
    }
    if let Some(s) = overrides.seed {
        values.insert(("run", "seed"), (s.to_string(), Origin::Flag));
    }
    if let Some(o) = &overrides.out {
        values.insert(("run", "out"), (o.display().to_string(), Origin::Flag));
    }
    if let Some(w) = overrides.workers {
        values.insert(("run", "workers"), (w.to_string(), Origin::Flag));
    }

    let problem: Problem = match values.get(&("run", "problem")) {
        Some((v, _)) => v
            .parse()
            .map_err(|_| Error::config(format!("invalid value `{v}` for `run.problem`: permitted onoff, sir")))?,
        None => Problem::Onoff,
    };
    let seed_value = match values.get(&("run", "seed")) {
        Some((v, _)) => v
            .parse::<u64>()
            .map_err(|_| Error::config(format!("invalid value `{v}` for `run.seed`: expected an integer in [0, 2^64)")))?,
        None => 0,
    };
    let mut entries = Vec::new();
    for (section, key, default) in defaults(problem, seed_value) {
        let (value, origin) = values
            .remove(&(section, key))
            .unwrap_or((default, Origin::Default));
        entries.push(ConfigEntry { section, key, value, origin });
    }
    debug_assert!(values.is_empty(), "schema and defaults disagree");
    build(problem, seed_value, entries)
}

type IniEntry = (Option<String>, String, String, u64);

fn parse_ini(text: &str) -> Result<Vec<IniEntry>> {
    let mut out = Vec::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("unterminated section header `{line}`"),
            })?;
            let name = name.trim().to_ascii_lowercase();
            if !SCHEMA.iter().any(|(s, _)| *s == name) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unknown section `[{name}]`"),
                });
            }
            section = Some(name);
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("expected `key = value`, found `{line}`"),
        })?;
        out.push((section.clone(), k.trim().to_ascii_lowercase(), v.trim().to_string(), line_no));
    }
    Ok(out)
}

fn resolve(section: Option<&str>, key: &str) -> Result<(&'static str, &'static str)> {
    let key = key.trim().to_ascii_lowercase();
    match section {
        Some(s) => {
            let s = s.trim().to_ascii_lowercase();
            let (sec, keys) = SCHEMA
                .iter()
                .find(|(name, _)| *name == s)
                .ok_or_else(|| Error::config(format!("unknown section `{s}` (key `{s}.{key}`)")))?;
            keys.iter()
                .find(|k| **k == key)
                .map(|k| (*sec, *k))
                .ok_or_else(|| Error::config(format!("unknown key `{s}.{key}`")))
        }
        None => {
            let owners: Vec<(&'static str, &'static str)> = SCHEMA
                .iter()
                .flat_map(|(s, keys)| keys.iter().filter(|k| **k == key).map(move |k| (*s, *k)))
                .collect();
            match owners.as_slice() {
                [one] => Ok(*one),
                [] => Err(Error::config(format!("unknown key `{key}`"))),
                many => Err(Error::config(format!(
                    "key `{key}` is ambiguous; qualify it as one of {}",
                    many.iter().map(|(s, k)| format!("{s}.{k}")).collect::<Vec<_>>().join(", ")
                ))),
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Bound {
    Open(f64),
    Closed(f64),
    Unbounded,
}

struct Range(Bound, Bound);

impl Range {
    fn contains(&self, v: f64) -> bool {
        let lo = match self.0 {
            Bound::Open(b) => v > b,
            Bound::Closed(b) => v >= b,
            Bound::Unbounded => true,
        };
        let hi = match self.1 {
            Bound::Open(b) => v < b,
            Bound::Closed(b) => v <= b,
            Bound::Unbounded => true,
        };
        lo && hi && v.is_finite()
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Bound::Open(b) => write!(f, "({b}, ")?,
            Bound::Closed(b) => write!(f, "[{b}, ")?,
            Bound::Unbounded => f.write_str("(-inf, ")?,
        }
        match self.1 {
            Bound::Open(b) => write!(f, "{b})"),
            Bound::Closed(b) => write!(f, "{b}]"),
            Bound::Unbounded => f.write_str("inf)"),
        }
    }
}

const POSITIVE: Range = Range(Bound::Open(0.0), Bound::Unbounded);
const NONNEGATIVE: Range = Range(Bound::Closed(0.0), Bound::Unbounded);
const UNIT_OPEN: Range = Range(Bound::Open(0.0), Bound::Open(1.0));

struct Reader {
    entries: BTreeMap<(&'static str, &'static str), String>,
}

impl Reader {
    fn raw(&self, section: &'static str, key: &'static str) -> &str {
        self.entries
            .get(&(section, key))
            .map(String::as_str)
            .unwrap_or_default()
    }

    fn real(&self, section: &'static str, key: &'static str, range: Range) -> Result<f64> {
        let raw = self.raw(section, key);
        let v: f64 = raw
            .parse()
            .map_err(|_| Error::config(format!("invalid value `{raw}` for `{section}.{key}`: expected a number in {range}")))?;
        if !range.contains(v) {
            return Err(Error::config(format!(
                "`{section}.{key}` = {raw} is outside the permitted range {range}"
            )));
        }
        Ok(v)
    }

    fn int(&self, section: &'static str, key: &'static str, min: u64, max: Option<u64>) -> Result<u64> {
        let raw = self.raw(section, key);
        let range = match max {
            Some(m) => format!("[{min}, {m}]"),
            None => format!("[{min}, inf)"),
        };
        let v: u64 = raw
            .parse()
            .map_err(|_| Error::config(format!("invalid value `{raw}` for `{section}.{key}`: expected an integer in {range}")))?;
        if v < min || max.is_some_and(|m| v > m) {
            return Err(Error::config(format!(
                "`{section}.{key}` = {raw} is outside the permitted range {range}"
            )));
        }
        Ok(v)
    }

    fn count(&self, section: &'static str, key: &'static str, min: u64) -> Result<usize> {
        Ok(self.int(section, key, min, None)? as usize)
    }

    fn flag(&self, section: &'static str, key: &'static str) -> Result<bool> {
        match self.raw(section, key).to_ascii_lowercase().as_str() {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            other => Err(Error::config(format!(
                "invalid value `{other}` for `{section}.{key}`: permitted true, false"
            ))),
        }
    }

    fn choice<T: FromStr>(&self, section: &'static str, key: &'static str, permitted: &str) -> Result<T> {
        let raw = self.raw(section, key);
        raw.parse().map_err(|_| {
            Error::config(format!("invalid value `{raw}` for `{section}.{key}`: permitted {permitted}"))
        })
    }

    fn list<T: FromStr>(&self, section: &'static str, key: &'static str, permitted: &str) -> Result<Vec<T>> {
        let raw = self.raw(section, key);
        let items = raw
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse().map_err(|_| {
                    Error::config(format!("invalid entry `{t}` in `{section}.{key}`: permitted {permitted}"))
                })
            })
            .collect::<Result<Vec<T>>>()?;
        if items.is_empty() {
            return Err(Error::config(format!("`{section}.{key}` must list at least one of {permitted}")));
        }
        Ok(items)
    }
}

const ACTIVATIONS: &str = "identity, sigmoid, tanh, silu, relu, leakyrelu, selu, prelu, sine";
const OPTIMIZERS: &str = "adam, nadam, rmsprop, sgd";

fn parse_points(raw: &str) -> Result<Vec<(f64, f64)>> {
    raw.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let bad = || Error::config(format!("invalid entry `{t}` in `eval.points`: expected theta1:theta2"));
            let (a, b) = t.split_once(':').ok_or_else(bad)?;
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            if !(a.is_finite() && b.is_finite()) {
                return Err(bad());
            }
            Ok((a, b))
        })
        .collect()
}

fn build(problem: Problem, seed_value: u64, entries: Vec<ConfigEntry>) -> Result<RunConfig> {
    let r = Reader {
        entries: entries
            .iter()
            .map(|e| ((e.section, e.key), e.value.clone()))
            .collect(),
    };

    let out = PathBuf::from(r.raw("run", "out"));
    if out.as_os_str().is_empty() {
        return Err(Error::config("`run.out` must name a directory"));
    }
    let workers = r.count("run", "workers", 1)?;

    let generator = match r.raw("data", "generator").to_ascii_lowercase().as_str() {
        "ecdf" => Generator::Ecdf,
        "indicator" | "alffi" => Generator::Indicator,
        other => {
            return Err(Error::config(format!(
                "invalid value `{other}` for `data.generator`: permitted ecdf, indicator"
            )))
        }
    };
    if generator == Generator::Indicator && problem == Problem::Sir {
        return Err(Error::config("`data.generator` = indicator is only available for problem onoff"));
    }
    let prior = PriorBox {
        theta1: (
            r.real("data", "theta1_min", NONNEGATIVE)?,
            r.real("data", "theta1_max", NONNEGATIVE)?,
        ),
        theta2: (
            r.real("data", "theta2_min", NONNEGATIVE)?,
            r.real("data", "theta2_max", NONNEGATIVE)?,
        ),
    };
    if prior.theta1.0 > prior.theta1.1 || prior.theta2.0 > prior.theta2.1 {
        return Err(Error::config(format!(
            "prior box is empty: theta1 [{}, {}], theta2 [{}, {}]",
            prior.theta1.0, prior.theta1.1, prior.theta2.0, prior.theta2.1
        )));
    }
    let data = DataConfig {
        generator,
        points: r.count("data", "points", 1)?,
        k: r.count("data", "k", 1)?,
        prior,
    };

    let population = r.int("sir", "population", 1, None)?;
    let scenario = SirScenario {
        population,
        initial_infected: r.int("sir", "initial_infected", 0, Some(population))?,
        horizon_days: r.count("sir", "horizon_days", 1)?,
        ode_step: r.real("sir", "ode_step", Range(Bound::Open(0.0), Bound::Closed(1.0)))?,
        floor_mean: r.flag("sir", "floor_mean")?,
    };
    let sir = SirConfig {
        scenario,
        truth: SirParams::new(
            r.real("sir", "truth_alpha", NONNEGATIVE)?,
            r.real("sir", "truth_beta", NONNEGATIVE)?,
        )?,
        observation_seed: r.int("sir", "observation_seed", 0, None)?,
    };

    let split = SplitSpec {
        train: r.real("split", "train", UNIT_OPEN)?,
        validation: r.real("split", "validation", UNIT_OPEN)?,
        calibration: r.real("split", "calibration", UNIT_OPEN)?,
        group_aware: r.flag("split", "group_aware")?,
        seed: seed_value,
    };
    split.validate()?;

    let init = r.raw("network", "init");
    let network = NetworkSpec::uniform(
        FEATURES,
        r.count("network", "layers", 1)?,
        r.count("network", "width", 1)?,
        r.choice("network", "activation", ACTIVATIONS)?,
        r.choice("network", "output_activation", ACTIVATIONS)?,
    )
    .with_scheme(InitScheme::parse(init).map_err(|_| {
        Error::config(format!(
            "invalid value `{init}` for `network.init`: permitted glorot_uniform, glorot_normal"
        ))
    })?)
    .with_kappa(r.real("network", "kappa", POSITIVE)?)
    .with_seed(seed::child_seed(seed_value, "init", 0));

    let loss = match r.raw("train", "loss").to_ascii_lowercase().as_str() {
        "mse" => Loss::Mse,
        "huber" => Loss::Huber {
            delta: r.real("train", "huber_delta", POSITIVE)?,
        },
        other => {
            return Err(Error::config(format!(
                "invalid value `{other}` for `train.loss`: permitted mse, huber"
            )))
        }
    };
    let architecture = match r.raw("train", "architecture").to_ascii_lowercase().as_str() {
        "network" => Architecture::Network,
        "sweep" => Architecture::Sweep,
        other => {
            return Err(Error::config(format!(
                "invalid value `{other}` for `train.architecture`: permitted network, sweep"
            )))
        }
    };
    let train = TrainConfig {
        loss,
        optimizer: r.choice("train", "optimizer", OPTIMIZERS)?,
        learning_rate: r.real("train", "learning_rate", Range(Bound::Open(0.0), Bound::Closed(10.0)))?,
        batch_size: r.count("train", "batch_size", 1)?,
        budget: Budget::Iterations(r.int("train", "iterations", 1, None)?),
        validation_every: r.int("train", "validation_every", 1, None)?,
        seed: seed::child_seed(seed_value, "train", 0),
        standardize: r.flag("train", "standardize")?,
    };

    let sweep_space = SweepSpace {
        layers: (r.count("sweep", "layers_min", 1)?, r.count("sweep", "layers_max", 1)?),
        width: (r.count("sweep", "width_min", 1)?, r.count("sweep", "width_max", 1)?),
        optimizers: r.list("sweep", "optimizers", OPTIMIZERS)?,
        learning_rate: (
            r.real("sweep", "lr_min", POSITIVE)?,
            r.real("sweep", "lr_max", POSITIVE)?,
        ),
        batch_size: (r.count("sweep", "batch_min", 1)?, r.count("sweep", "batch_max", 1)?),
        activations: r.list("sweep", "activations", ACTIVATIONS)?,
    };
    sweep_space.validate()?;
    let sweep = SweepSettings {
        trials: r.count("sweep", "trials", 1)?,
        budget: Budget::Epochs(r.int("sweep", "epochs", 1, None)?),
        loss,
        output_activation: network.output_activation,
        validation_every: train.validation_every,
        standardize: train.standardize,
        seed: seed_value,
    };

    let uq = UqConfig {
        alpha: r.real("uq", "alpha", UNIT_OPEN)?,
        level: r.real("uq", "level", UNIT_OPEN)?,
        bootstrap_members: r.count("uq", "bootstrap_members", 1)?,
        shared_init: r.flag("uq", "shared_init")?,
        sigma: r.real("uq", "sigma", NONNEGATIVE)?,
        fluctuations: r.count("uq", "fluctuations", 1)?,
    };

    let lambda_min = r.real("eval", "lambda_min", Range(Bound::Unbounded, Bound::Unbounded))?;
    let lambda_max = match r.raw("eval", "lambda_max") {
        "auto" => None,
        _ => Some(r.real("eval", "lambda_max", Range(Bound::Open(lambda_min), Bound::Unbounded))?),
    };
    let eval = EvalConfig {
        grid: r.count("eval", "grid", 1)?,
        points: parse_points(r.raw("eval", "points"))?,
        lambda_min,
        lambda_max,
        lambda_points: r.count("eval", "lambda_points", 2)?,
        truth_samples: r.count("eval", "truth_samples", 2)?,
    };

    let msnn = MsnnConfig {
        stages: r.count("msnn", "stages", 1)?,
        depth: r.count("msnn", "depth", 1)?,
        width: r.count("msnn", "width", 1)?,
        iterations: r.int("msnn", "iterations", 1, None)?,
        learning_rate: r.real("msnn", "learning_rate", Range(Bound::Open(0.0), Bound::Closed(10.0)))?,
        optimizer: r.choice("msnn", "optimizer", OPTIMIZERS)?,
    };

    Ok(RunConfig {
        problem,
        seed: seed_value,
        out,
        workers,
        data,
        sir,
        split,
        network,
        train,
        architecture,
        sweep_space,
        sweep,
        uq,
        eval,
        msnn,
        entries,
    })
}
