use serde::{Deserialize, Serialize};

use super::poisson::ln_factorial;
use crate::{Error, Result};

/// Mean signal `mu` and mean background `nu` of the two-region counting model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnOffParams {
    pub mu: f64,
    pub nu: f64,
}

impl OnOffParams {
    pub fn new(mu: f64, nu: f64) -> Result<Self> {
        let p = Self { mu, nu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu", self.mu), ("nu", self.nu)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// ON-region count `n` and OFF-region count `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OnOffObservation {
    pub n: u64,
    pub m: u64,
}

impl OnOffObservation {
    pub fn new(n: u64, m: u64) -> Self {
        Self { n, m }
    }
}

/// `k·ln(rate) − rate` with 0·ln 0 = 0.
fn poisson_kernel(k: u64, rate: f64, term: &str) -> Result<f64> {
    if k == 0 {
        return Ok(-rate);
    }
    if rate <= 0.0 {
        return Err(Error::domain(format!(
            "{term} rate is zero but its count is {k}"
        )));
    }
    Ok(k as f64 * rate.ln() - rate)
}

/// Log-likelihood without the factorial terms.
fn kernel(obs: OnOffObservation, params: OnOffParams) -> Result<f64> {
    params.validate()?;
    Ok(poisson_kernel(obs.n, params.mu + params.nu, "ON-region (mu+nu)")?
        + poisson_kernel(obs.m, params.nu, "OFF-region (nu)")?)
}

/// `ln[Poiss(N; μ+ν)·Poiss(M; ν)]`.
pub fn onoff_log_likelihood(obs: OnOffObservation, params: OnOffParams) -> Result<f64> {
    Ok(kernel(obs, params)? - ln_factorial(obs.n) - ln_factorial(obs.m))
}

/// Closed-form estimates: `(N−M, M)` when `N > M`, else `(0, (N+M)/2)`.
pub fn onoff_estimates(obs: OnOffObservation) -> OnOffParams {
    if obs.n > obs.m {
        OnOffParams {
            mu: (obs.n - obs.m) as f64,
            nu: obs.m as f64,
        }
    } else {
        OnOffParams {
            mu: 0.0,
            nu: (obs.n + obs.m) as f64 / 2.0,
        }
    }
}

/// Likelihood-ratio statistic `−2·[ln L(μ,ν) − ln L(μ̂,ν̂)]`.
///
/// The estimates maximize the likelihood over μ, ν ≥ 0, so the value is
/// non-negative; rounding residue below zero is clamped.
pub fn onoff_lambda(obs: OnOffObservation, params: OnOffParams) -> Result<f64> {
    let at_params = kernel(obs, params)?;
    let at_estimates = kernel(obs, onoff_estimates(obs))?;
    Ok((-2.0 * (at_params - at_estimates)).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(mu: f64, nu: f64) -> OnOffParams {
        OnOffParams { mu, nu }
    }

    fn o(n: u64, m: u64) -> OnOffObservation {
        OnOffObservation { n, m }
    }

    #[test]
    fn log_likelihood_closed_forms() {
        assert!((onoff_log_likelihood(o(0, 0), p(0.0, 1.0)).unwrap() + 2.0).abs() < 1e-15);
        assert_eq!(onoff_log_likelihood(o(0, 0), p(0.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn likelihood_normalizes() {
        let mut total = 0.0;
        for n in 0..=60 {
            for m in 0..=60 {
                total += onoff_log_likelihood(o(n, m), p(2.0, 3.0)).unwrap().exp();
            }
        }
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn zero_rate_with_counts_is_domain_error() {
        let err = onoff_log_likelihood(o(0, 2), p(1.0, 0.0)).unwrap_err();
        assert!(err.to_string().contains("OFF-region"), "{err}");
        let err = onoff_log_likelihood(o(1, 0), p(0.0, 0.0)).unwrap_err();
        assert!(err.to_string().contains("ON-region"), "{err}");
        assert!(onoff_log_likelihood(o(1, 0), p(-1.0, 2.0)).is_err());
    }

    #[test]
    fn estimates_branches() {
        assert_eq!(onoff_estimates(o(5, 3)), p(2.0, 3.0));
        assert_eq!(onoff_estimates(o(3, 5)), p(0.0, 4.0));
        assert_eq!(onoff_estimates(o(4, 4)), p(0.0, 4.0));
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(onoff_lambda(o(5, 3), p(2.0, 3.0)).unwrap(), 0.0);
        assert!((onoff_lambda(o(0, 0), p(1.0, 1.0)).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_vanishes_at_own_estimates() {
        for n in 0..=40 {
            for m in 0..=40 {
                let obs = o(n, m);
                assert_eq!(onoff_lambda(obs, onoff_estimates(obs)).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn lambda_is_non_negative_before_clamping() {
        // Direct difference of full log-likelihoods, independent of the kernel path.
        for n in 0..=30 {
            for m in 0..=30 {
                let obs = o(n, m);
                let best = onoff_log_likelihood(obs, onoff_estimates(obs)).unwrap();
                for i in 0..=20 {
                    for j in 0..=20 {
                        let params = p(i as f64, j as f64);
                        let Ok(ll) = onoff_log_likelihood(obs, params) else {
                            continue;
                        };
                        assert!(-2.0 * (ll - best) > -1e-9, "{obs:?} {params:?}");
                        assert!(onoff_lambda(obs, params).unwrap() >= 0.0);
                    }
                }
            }
        }
    }
}
