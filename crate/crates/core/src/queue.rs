//! The natural alert queue: Poisson arrivals, deterministic batch service
//! per hour and the floored backlog recursion.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::seed::rng_from;

/// One point of a discrete service-rate factor distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuFactor {
    pub factor: f64,
    pub probability: f64,
}

/// How the effective hourly service rate deviates from nominal. The rate
/// can only degrade: every factor lies in `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DisturbanceModel {
    Fixed,
    HourlyMultiplicative { factors: Vec<MuFactor> },
}

impl DisturbanceModel {
    /// Full service w.p. 0.95, 97.5% service w.p. 0.05.
    pub fn mild() -> Self {
        DisturbanceModel::HourlyMultiplicative {
            factors: vec![
                MuFactor { factor: 1.0, probability: 0.95 },
                MuFactor { factor: 0.975, probability: 0.05 },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let DisturbanceModel::HourlyMultiplicative { factors } = self {
            if factors.is_empty() {
                return Err(Error::InvalidConfig("empty mu factor distribution".into()));
            }
            let mut total = 0.0;
            for f in factors {
                if !(f.factor > 0.0 && f.factor <= 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "mu factor {} outside (0, 1]",
                        f.factor
                    )));
                }
                if !(f.probability >= 0.0) {
                    return Err(Error::InvalidConfig("negative mu factor probability".into()));
                }
                total += f.probability;
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "mu factor probabilities sum to {total}, expected 1"
                )));
            }
        }
        Ok(())
    }

    /// Draws the factor for one hour. Fixed mode consumes no randomness.
    pub fn sample_factor<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DisturbanceModel::Fixed => 1.0,
            DisturbanceModel::HourlyMultiplicative { factors } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for f in factors {
                    acc += f.probability;
                    if u < acc {
                        return f.factor;
                    }
                }
                factors.last().map_or(1.0, |f| f.factor)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueParams {
    /// Nominal arrival rate, alerts/hour.
    pub lambda_nominal: f64,
    /// Nominal service rate, alerts/hour.
    pub mu_nominal: f64,
    pub disturbance: DisturbanceModel,
    pub initial_backlog: u64,
}

impl QueueParams {
    pub fn paper() -> Self {
        QueueParams {
            lambda_nominal: 1919.0,
            mu_nominal: 1920.0,
            disturbance: DisturbanceModel::mild(),
            initial_backlog: 1175,
        }
    }

    pub fn fixed(lambda: f64, mu: f64, initial_backlog: u64) -> Self {
        QueueParams {
            lambda_nominal: lambda,
            mu_nominal: mu,
            disturbance: DisturbanceModel::Fixed,
            initial_backlog,
        }
    }

    pub fn rho(&self) -> f64 {
        self.lambda_nominal / self.mu_nominal
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_nominal.is_finite() && self.lambda_nominal > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive and finite, got {}",
                self.lambda_nominal
            )));
        }
        if !(self.mu_nominal.is_finite() && self.mu_nominal > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "mu must be positive and finite, got {}",
                self.mu_nominal
            )));
        }
        if self.rho() >= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "unstable queue: rho = {} >= 1",
                self.rho()
            )));
        }
        self.disturbance.validate()
    }

    /// Whole alerts the analysts can clear this hour.
    pub fn sample_capacity<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let factor = self.disturbance.sample_factor(rng);
        (self.mu_nominal * factor).round() as u64
    }
}

/// A single hour of the natural queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HourOutcome {
    pub arrivals: u64,
    pub served: u64,
    pub capacity: u64,
    pub backlog_after: u64,
}

/// Exact Poisson sampler at a fixed rate. Small rates use inversion, large
/// rates the PTRS transformed-rejection method; neither is a normal
/// approximation.
#[derive(Debug, Clone, Copy)]
pub struct ArrivalSampler {
    dist: Poisson<f64>,
}

impl ArrivalSampler {
    pub fn new(rate: f64) -> Result<Self> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "poisson rate must be positive and finite, got {rate}"
            )));
        }
        let dist = Poisson::new(rate)
            .map_err(|e| Error::InvalidArgument(format!("poisson rate {rate}: {e}")))?;
        Ok(ArrivalSampler { dist })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.dist.sample(rng) as u64
    }
}

pub fn poisson_arrivals<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<u64> {
    Ok(ArrivalSampler::new(rate)?.sample(rng))
}

/// Floored backlog recursion for one hour.
pub fn step_backlog(prev_backlog: u64, arrivals: u64, capacity: u64) -> HourOutcome {
    let load = prev_backlog + arrivals;
    let served = load.min(capacity);
    HourOutcome {
        arrivals,
        served,
        capacity,
        backlog_after: load - served,
    }
}

/// Poisson log-pmf at `k`.
pub fn poisson_ln_pmf(lambda: f64, k: u64) -> f64 {
    let kf = k as f64;
    if k == 0 {
        return -lambda;
    }
    kf * lambda.ln() - lambda - ln_gamma(kf + 1.0)
}

/// Interior transition kernel `P(A - Z = delta)` for Poisson(`lambda`)
/// arrivals against `mu` deterministic services. Ignores the zero floor.
pub fn transition_pmf(lambda: f64, mu: u64, delta: i64) -> Result<f64> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "transition_pmf: lambda must be positive and finite, got {lambda}"
        )));
    }
    let k = delta + mu as i64;
    if k < 0 {
        return Ok(0.0);
    }
    Ok(poisson_ln_pmf(lambda, k as u64).exp())
}

/// Natural (attack-free, defence-free) trace of `horizon` hours.
pub fn simulate_natural_trace(
    params: &QueueParams,
    horizon: usize,
    seed: u64,
) -> Result<Vec<HourOutcome>> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let sampler = ArrivalSampler::new(params.lambda_nominal)?;
    let mut rng = rng_from(seed);
    let mut backlog = params.initial_backlog;
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let capacity = params.sample_capacity(&mut rng);
        let arrivals = sampler.sample(&mut rng);
        let hour = step_backlog(backlog, arrivals, capacity);
        backlog = hour.backlog_after;
        out.push(hour);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn step_backlog_examples() {
        let h = step_backlog(0, 0, 1920);
        assert_eq!((h.backlog_after, h.served), (0, 0));
        let h = step_backlog(100, 1900, 1920);
        assert_eq!((h.backlog_after, h.served), (80, 1920));
        let h = step_backlog(0, 2000, 1920);
        assert_eq!((h.backlog_after, h.served), (80, 1920));
    }

    #[test]
    fn rejects_bad_rates() {
        let mut rng = rng_from(1);
        assert!(poisson_arrivals(0.0, &mut rng).is_err());
        assert!(poisson_arrivals(-1.0, &mut rng).is_err());
        assert!(poisson_arrivals(f64::NAN, &mut rng).is_err());
        assert!(poisson_arrivals(f64::INFINITY, &mut rng).is_err());
        assert!(transition_pmf(f64::NAN, 3, 0).is_err());
    }

    #[test]
    fn vanishing_rate_gives_no_arrivals() {
        let mut rng = rng_from(2);
        for _ in 0..10_000 {
            assert_eq!(poisson_arrivals(1e-12, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn kernel_examples() {
        let lambda: f64 = 2.0;
        assert!((transition_pmf(lambda, 5, -5).unwrap() - (-lambda).exp()).abs() < 1e-15);
        assert_eq!(transition_pmf(lambda, 5, -6).unwrap(), 0.0);
        // 2^2 e^-2 / 2! = 2 e^-2
        let expected = 2.0 * (-2.0f64).exp();
        assert!((transition_pmf(2.0, 1, 1).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.27067).abs() < 1e-5);
    }

    #[test]
    fn kernel_normalises() {
        for &(lambda, mu) in &[(2.0, 1u64), (90.0, 96), (1919.0, 1920)] {
            let span = (lambda + 20.0 * f64::sqrt(lambda)).ceil() as i64;
            let total: f64 = (-(mu as i64)..=span)
                .map(|d| transition_pmf(lambda, mu, d).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-9, "lambda={lambda} total={total}");
        }
    }

    #[test]
    fn natural_trace_is_deterministic() {
        let p = QueueParams::paper();
        let a = simulate_natural_trace(&p, 336, 11).unwrap();
        let b = simulate_natural_trace(&p, 336, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, simulate_natural_trace(&p, 336, 12).unwrap());
    }

    #[test]
    fn tiny_rate_trace_stays_empty() {
        let p = QueueParams::fixed(1e-12, 5.0, 0);
        let t = simulate_natural_trace(&p, 1, 0).unwrap();
        assert_eq!(t[0].backlog_after, 0);
        assert!(simulate_natural_trace(&p, 0, 0).is_err());
    }

    #[test]
    fn disturbance_never_raises_capacity() {
        let p = QueueParams::paper();
        let mut rng = rng_from(3);
        let mut saw_low = false;
        for _ in 0..5000 {
            let c = p.sample_capacity(&mut rng);
            assert!(c <= 1920);
            saw_low |= c == 1872;
        }
        assert!(saw_low);
        let fixed = QueueParams::fixed(1919.0, 1920.0, 0);
        assert_eq!(fixed.sample_capacity(&mut rng), 1920);
    }

    #[test]
    fn validation() {
        assert!(QueueParams::paper().validate().is_ok());
        assert!(QueueParams::fixed(10.0, 10.0, 0).validate().is_err());
        assert!(QueueParams::fixed(0.0, 10.0, 0).validate().is_err());
        let bad = DisturbanceModel::HourlyMultiplicative {
            factors: vec![MuFactor { factor: 1.2, probability: 1.0 }],
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn backlog_nonnegative_and_conserved(
            lambda in 0.5f64..200.0,
            mu_extra in 0.1f64..50.0,
            initial in 0u64..500,
            seed in any::<u64>(),
        ) {
            let mut p = QueueParams::fixed(lambda, lambda + mu_extra, initial);
            p.disturbance = DisturbanceModel::mild();
            let trace = simulate_natural_trace(&p, 200, seed).unwrap();
            let arrivals: u64 = trace.iter().map(|h| h.arrivals).sum();
            let served: u64 = trace.iter().map(|h| h.served).sum();
            let last = trace.last().unwrap().backlog_after;
            prop_assert_eq!(arrivals + initial, served + last);
            let mut prev = initial;
            for h in &trace {
                prop_assert!(h.served <= h.capacity);
                prop_assert_eq!(h.backlog_after, prev + h.arrivals - h.served);
                prev = h.backlog_after;
            }
        }
    }
}
