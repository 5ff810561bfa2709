use std::fmt::Display;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Prefactor of the SIR discrepancy statistic.
pub const LAMBDA_PREFACTOR: f64 = 1.0 / 50.0;
/// Lower bound applied to predicted means when flooring is enabled.
pub const MEAN_FLOOR: f64 = 1e-3;

/// Recovery rate `alpha` and per-infected transmission rate `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirParams {
    pub alpha: f64,
    pub beta: f64,
}

impl SirParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    /// Zero rates are accepted (they switch a channel off); negative ones are not.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Compartment sizes at the start of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirInit<T> {
    pub s: T,
    pub i: T,
    pub r: T,
}

/// Compartment paths on a time grid. `T` is `f64` for ODE means and `u64`
/// for stochastic realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpidemicTrajectory<T> {
    pub times: Vec<f64>,
    pub s: Vec<T>,
    pub i: Vec<T>,
    pub r: Vec<T>,
    pub population: T,
}

impl<T: Copy + Display> EpidemicTrajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with header `t,S,I,R`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "S", "I", "R"]).map_err(csv_err)?;
        for k in 0..self.len() {
            w.write_record([
                self.times[k].to_string(),
                self.s[k].to_string(),
                self.i[k].to_string(),
                self.r[k].to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Closed population, a few initial infections, daily observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SirScenario {
    pub population: u64,
    pub initial_infected: u64,
    pub horizon_days: usize,
    /// Upper bound on the RK4 step used for mean trajectories.
    pub ode_step: f64,
    pub floor_mean: bool,
}

impl Default for SirScenario {
    fn default() -> Self {
        Self {
            population: 1000,
            initial_infected: 1,
            horizon_days: 50,
            ode_step: 0.01,
            floor_mean: false,
        }
    }
}

impl SirScenario {
    pub fn validate(&self) -> Result<()> {
        if self.initial_infected > self.population {
            return Err(Error::domain("initial infected exceeds the population"));
        }
        if self.horizon_days == 0 {
            return Err(Error::domain("horizon must be at least one day"));
        }
        if !(self.ode_step > 0.0 && self.ode_step.is_finite()) {
            return Err(Error::domain(format!("ODE step must be positive, got {}", self.ode_step)));
        }
        Ok(())
    }

    pub fn initial_counts(&self) -> SirInit<u64> {
        SirInit {
            s: self.population - self.initial_infected,
            i: self.initial_infected,
            r: 0,
        }
    }

    pub fn initial_means(&self) -> SirInit<f64> {
        let c = self.initial_counts();
        SirInit {
            s: c.s as f64,
            i: c.i as f64,
            r: c.r as f64,
        }
    }

    /// Days `0, 1, …, horizon`.
    pub fn grid(&self) -> Vec<f64> {
        (0..=self.horizon_days).map(|d| d as f64).collect()
    }

    /// Mean infected on observation days `1..=horizon`.
    pub fn mean_infected(&self, params: SirParams) -> Result<Vec<f64>> {
        let traj = sir_mean_trajectory(params, self.initial_means(), &self.grid(), self.ode_step)?;
        Ok(traj.i[1..].to_vec())
    }

    /// One realization's infected counts on observation days `1..=horizon`.
    pub fn simulate_infected<R: Rng + ?Sized>(&self, params: SirParams, rng: &mut R) -> Result<Vec<f64>> {
        let traj = sir_simulate(params, self.initial_counts(), self.horizon_days, rng)?;
        Ok(traj.i[1..].iter().map(|&c| c as f64).collect())
    }

    /// Discrepancy between observed infected counts and the ODE means at `params`.
    pub fn lambda(&self, observed: &[f64], params: SirParams) -> Result<f64> {
        sir_lambda(observed, &self.mean_infected(params)?, self.floor_mean)
    }
}

fn rhs(p: SirParams, y: [f64; 3]) -> [f64; 3] {
    let infection = p.beta * y[0] * y[1];
    let recovery = p.alpha * y[1];
    [-infection, infection - recovery, recovery]
}

fn rk4_step(p: SirParams, y: [f64; 3], h: f64) -> [f64; 3] {
    let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    let k1 = rhs(p, y);
    let k2 = rhs(p, add(y, k1, h / 2.0));
    let k3 = rhs(p, add(y, k2, h / 2.0));
    let k4 = rhs(p, add(y, k3, h));
    std::array::from_fn(|c| y[c] + h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]))
}

/// RK4 solution of the SIR equations sampled on `grid`.
///
/// Each grid interval is split into `⌈Δ/max_step⌉` equal substeps, so grid
/// points are hit exactly.
pub fn sir_mean_trajectory(
    params: SirParams,
    init: SirInit<f64>,
    grid: &[f64],
    max_step: f64,
) -> Result<EpidemicTrajectory<f64>> {
    params.validate()?;
    if grid.is_empty() {
        return Err(Error::domain("empty time grid"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || !grid.iter().all(|t| t.is_finite()) {
        return Err(Error::domain("time grid must be finite and strictly increasing"));
    }
    if [init.s, init.i, init.r].iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::domain("initial compartments must be finite and >= 0"));
    }
    if !(max_step > 0.0 && max_step.is_finite()) {
        return Err(Error::domain(format!("step must be positive, got {max_step}")));
    }

    let n = grid.len();
    let mut out = EpidemicTrajectory {
        times: grid.to_vec(),
        s: Vec::with_capacity(n),
        i: Vec::with_capacity(n),
        r: Vec::with_capacity(n),
        population: init.s + init.i + init.r,
    };
    let mut y = [init.s, init.i, init.r];
    let mut push = |y: [f64; 3]| {
        out.s.push(y[0]);
        out.i.push(y[1]);
        out.r.push(y[2]);
    };
    push(y);
    for w in grid.windows(2) {
        let span = w[1] - w[0];
        let substeps = (span / max_step).ceil().max(1.0) as usize;
        let h = span / substeps as f64;
        for k in 0..substeps {
            y = rk4_step(params, y, h);
            if !y.iter().all(|v| v.is_finite()) {
                return Err(Error::Integration {
                    time: w[0] + (k + 1) as f64 * h,
                });
            }
        }
        push(y);
    }
    Ok(out)
}

/// Daily binomial-chain realization over `horizon` days.
///
/// Each day, new infections ~ Bin(S, 1 − e^(−β·I)) and recoveries
/// ~ Bin(I, 1 − e^(−α)), both drawn from the state at the start of the day.
pub fn sir_simulate<R: Rng + ?Sized>(
    params: SirParams,
    init: SirInit<u64>,
    horizon: usize,
    rng: &mut R,
) -> Result<EpidemicTrajectory<u64>> {
    params.validate()?;
    if horizon == 0 {
        return Err(Error::domain("horizon must be at least one day"));
    }
    let p_rec = -(-params.alpha).exp_m1();
    let n = horizon + 1;
    let mut out = EpidemicTrajectory {
        times: (0..n).map(|d| d as f64).collect(),
        s: Vec::with_capacity(n),
        i: Vec::with_capacity(n),
        r: Vec::with_capacity(n),
        population: init.s + init.i + init.r,
    };
    let (mut s, mut i, mut r) = (init.s, init.i, init.r);
    out.s.push(s);
    out.i.push(i);
    out.r.push(r);
    for _ in 0..horizon {
        let p_inf = -(-params.beta * i as f64).exp_m1();
        let infections = binomial(s, p_inf, rng)?;
        let recoveries = binomial(i, p_rec, rng)?;
        s -= infections;
        i = i + infections - recoveries;
        r += recoveries;
        out.s.push(s);
        out.i.push(i);
        out.r.push(r);
    }
    Ok(out)
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> Result<u64> {
    if n == 0 || p <= 0.0 {
        return Ok(0);
    }
    let dist = Binomial::new(n, p.min(1.0))
        .map_err(|e| Error::domain(format!("binomial({n}, {p}): {e}")))?;
    Ok(dist.sample(rng))
}

/// `(1/50)·sqrt(mean((x − I)²/I))` over paired observed and predicted counts.
///
/// With `floor_mean`, predicted values below [`MEAN_FLOOR`] are raised to it
/// (and logged) instead of being rejected.
pub fn sir_lambda(observed: &[f64], predicted: &[f64], floor_mean: bool) -> Result<f64> {
    if observed.len() != predicted.len() {
        return Err(Error::Shape {
            what: "predicted infected sequence",
            expected: observed.len(),
            got: predicted.len(),
        });
    }
    if observed.is_empty() {
        return Err(Error::domain("empty infected sequence"));
    }
    let mut floored = 0usize;
    let mut sum = 0.0;
    for (k, (&x, &mean)) in observed.iter().zip(predicted).enumerate() {
        let mean = if mean > 0.0 && !(floor_mean && mean < MEAN_FLOOR) {
            mean
        } else if floor_mean && !mean.is_nan() {
            floored += 1;
            MEAN_FLOOR
        } else {
            return Err(Error::domain(format!(
                "predicted mean at index {k} is {mean}, must be > 0"
            )));
        };
        sum += (x - mean).powi(2) / mean;
    }
    if floored > 0 {
        log::warn!("floored {floored} predicted means at {MEAN_FLOOR}");
    }
    Ok(LAMBDA_PREFACTOR * (sum / observed.len() as f64).sqrt())
}
