use rand::Rng;

use super::onoff::{OnOffObservation, OnOffParams};
use crate::{Error, Result};

/// Means below this use sequential-search inversion; larger means use PTRS.
pub const INVERSION_LIMIT: f64 = 30.0;

/// One Poisson draw with the given mean.
///
/// Inversion by sequential search for `mean < 30`; above that, Hörmann's
/// transformed rejection with squeeze (PTRS). Both are exact samplers.
pub fn poisson_sample<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if !(mean >= 0.0 && mean.is_finite()) {
        return Err(Error::domain(format!("Poisson mean must be finite and >= 0, got {mean}")));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    Ok(if mean < INVERSION_LIMIT {
        inversion(mean, rng)
    } else {
        ptrs(mean, rng)
    })
}

fn inversion<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= mean / k as f64;
        let next = cdf + p;
        // Past the mode the cumulative sum can stall just below 1.
        if next == cdf && k as f64 > mean {
            break;
        }
        cdf = next;
    }
    k
}

fn ptrs<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let smu = mean.sqrt();
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    let log_mean = mean.ln();
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mean + k * log_mean - ln_factorial(k as u64);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// ln(k!), exact summation for small k and a Stirling series above.
pub fn ln_factorial(k: u64) -> f64 {
    if k < 32 {
        return (2..=k).map(|i| (i as f64).ln()).sum();
    }
    let x = k as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// Draw `(N, M)` with `N ~ Poiss(μ + ν)` and `M ~ Poiss(ν)`, in that order.
pub fn sample_onoff<R: Rng + ?Sized>(params: OnOffParams, rng: &mut R) -> Result<OnOffObservation> {
    let n = poisson_sample(params.mu + params.nu, rng)?;
    let m = poisson_sample(params.nu, rng)?;
    Ok(OnOffObservation { n, m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn moments(mean: f64, draws: usize, s: u64) -> (f64, f64) {
        let mut rng = seed::rng(s);
        let xs: Vec<f64> = (0..draws)
            .map(|_| poisson_sample(mean, &mut rng).unwrap() as f64)
            .collect();
        let m = xs.iter().sum::<f64>() / draws as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (draws as f64 - 1.0);
        (m, v)
    }

    #[test]
    fn zero_mean_is_zero() {
        let mut rng = seed::rng(1);
        for _ in 0..100 {
            assert_eq!(poisson_sample(0.0, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn negative_mean_is_rejected() {
        let mut rng = seed::rng(1);
        assert!(poisson_sample(-0.1, &mut rng).is_err());
        assert!(poisson_sample(f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn mean_five() {
        let (m, _) = moments(5.0, 100_000, 2);
        assert!((m - 5.0).abs() < 0.05, "{m}");
    }

    #[test]
    fn moments_on_both_sides_of_the_switch() {
        // Mean within 3σ of the CLT bound, variance within 5%.
        for (i, mean) in [0.3, 2.0, 12.0, 29.9, 30.0, 40.0, 250.0].into_iter().enumerate() {
            let draws = 100_000;
            let (m, v) = moments(mean, draws, 10 + i as u64);
            assert!((m - mean).abs() < 3.0 * (mean / draws as f64).sqrt(), "{mean}: {m}");
            assert!((v / mean - 1.0).abs() < 0.05, "{mean}: var {v}");
        }
    }

    #[test]
    fn pmf_matches_for_ptrs_branch() {
        // Frequencies near the mode against the exact pmf, 4σ binomial bounds.
        let mean = 45.0;
        let draws = 200_000;
        let mut rng = seed::rng(5);
        let mut counts = vec![0usize; 200];
        for _ in 0..draws {
            let k = poisson_sample(mean, &mut rng).unwrap() as usize;
            counts[k.min(199)] += 1;
        }
        for k in 35..56u64 {
            let p = (-mean + k as f64 * mean.ln() - ln_factorial(k)).exp();
            let sd = (p * (1.0 - p) / draws as f64).sqrt();
            let f = counts[k as usize] as f64 / draws as f64;
            assert!((f - p).abs() < 4.0 * sd, "k={k}: {f} vs {p}");
        }
    }

    #[test]
    fn same_seed_same_draws() {
        let draw = |s| {
            let mut rng = seed::rng(s);
            (0..50).map(|_| poisson_sample(7.5, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
    }

    #[test]
    fn ln_factorial_matches_summation() {
        for k in [0u64, 1, 5, 31, 32, 33, 100, 170] {
            let exact: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
            assert!((ln_factorial(k) - exact).abs() < 1e-10 * exact.max(1.0), "{k}");
        }
    }
}
