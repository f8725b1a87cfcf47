//! Reproducible generation of simulated populations.
//!
//! Each individual draws four uniform variates in the fixed order
//! `(a, b, x0, vote)` from a single ChaCha8 stream seeded with a 64-bit
//! value (`SeedableRng::seed_from_u64`). A variate maps to its range as
//! `lo + (next_u64() >> 11) * 2^-53 * (hi - lo)`, so the stream layout is
//! part of the reproducibility contract: identical configuration yields
//! bit-identical populations. Minimization consumes no randomness.
//!
//! The latent state is the local minimum of the cusp potential reached
//! from the drawn initial guess, found by Nelder-Mead or, in exact mode,
//! by the closed-form cubic roots. The vote is a Bernoulli draw on the
//! logistic link of the latent state.

use crate::cusp::{CuspError, CuspParams, MinimizerConfig, Stability};
use crate::stats::stable_logistic;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the stationarity residual of a sampled latent state.
pub const STATIONARITY_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Number of individuals.
    pub n: usize,
    pub seed: u64,
    /// Steepness of the logistic link from latent state to vote probability.
    pub sigma: f64,
    pub a_range: (f64, f64),
    pub b_range: (f64, f64),
    pub x0_range: (f64, f64),
    pub minimizer: MinimizerConfig,
    /// Use the analytic cubic roots instead of Nelder-Mead.
    pub exact_mode: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            seed: 42,
            sigma: 10.0,
            a_range: (-1.0, 1.0),
            b_range: (-2.0, 4.0),
            x0_range: (-1.0, 1.0),
            minimizer: MinimizerConfig::default(),
            exact_mode: false,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n < 1 {
            return Err("n must be >= 1".into());
        }
        if !(self.sigma > 0.0) {
            return Err(format!("sigma must be > 0, got {}", self.sigma));
        }
        for (name, (lo, hi)) in [
            ("a_range", self.a_range),
            ("b_range", self.b_range),
            ("x0_range", self.x0_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(format!(
                    "{name} must satisfy lower < upper, got ({lo}, {hi})"
                ));
            }
        }
        self.minimizer.validate()
    }
}

/// One simulated individual.
///
/// `x0` is kept even though it is unobservable downstream; basin
/// consistency and hysteresis semantics are checked against it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Person {
    pub id: u64,
    /// Demographic index.
    pub a: f64,
    /// Behavior index.
    pub b: f64,
    /// Initial guess handed to the minimizer.
    pub x0: f64,
    /// Occupied local minimum of the potential (latent state).
    pub x: f64,
    /// Vote probability, `1 / (1 + e^(-sigma * x))`.
    pub p: f64,
    /// Sampled vote.
    pub y: u8,
}

impl Person {
    pub fn params(&self) -> CuspParams {
        CuspParams::new(self.a, self.b)
    }

    /// Check every per-person invariant against the generating config.
    pub fn validate(&self, cfg: &SamplerConfig) -> Result<(), String> {
        let in_range = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        if !in_range(self.a, cfg.a_range) {
            return Err(format!(
                "person {}: a = {} outside {:?}",
                self.id, self.a, cfg.a_range
            ));
        }
        if !in_range(self.b, cfg.b_range) {
            return Err(format!(
                "person {}: b = {} outside {:?}",
                self.id, self.b, cfg.b_range
            ));
        }
        if !in_range(self.x0, cfg.x0_range) {
            return Err(format!(
                "person {}: x0 = {} outside {:?}",
                self.id, self.x0, cfg.x0_range
            ));
        }
        let params = self.params();
        let residual = params.gradient(self.x);
        if residual.abs() > STATIONARITY_TOLERANCE {
            return Err(format!(
                "person {}: stationarity residual {residual:e}",
                self.id
            ));
        }
        if params.curvature(self.x) < -STATIONARITY_TOLERANCE {
            return Err(format!(
                "person {}: curvature {:e}",
                self.id,
                params.curvature(self.x)
            ));
        }
        if self.p != vote_probability(self.x, cfg.sigma) {
            return Err(format!("person {}: p is not recomputable from x", self.id));
        }
        if self.y > 1 {
            return Err(format!(
                "person {}: vote {} not in {{0, 1}}",
                self.id, self.y
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SampleError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("minimization failed for individual {index}: {source}")]
    Minimize { index: usize, source: CuspError },
    #[error("vote probability {0} outside [0, 1]")]
    ProbabilityDomain(f64),
}

/// Map one 64-bit word to a uniform double in `[lo, hi)`.
pub(crate) fn uniform_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let unit = (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0);
    lo + unit * (hi - lo)
}

/// Vote probability of a latent state: `1 / (1 + e^(-sigma * x))`.
pub fn vote_probability(x: f64, sigma: f64) -> f64 {
    stable_logistic(sigma * x)
}

/// Bernoulli draw by inversion: 1 iff `u < p`.
pub fn sample_vote(p: f64, u: f64) -> Result<u8, SampleError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SampleError::ProbabilityDomain(p));
    }
    Ok((u < p) as u8)
}

/// Generate a population of `cfg.n` individuals.
///
/// Draw order per individual is `(a, b, x0, vote)`; the vote variate is
/// consumed up front so minimization cannot perturb the stream.
pub fn sample_population(cfg: &SamplerConfig) -> Result<Vec<Person>, SampleError> {
    cfg.validate().map_err(SampleError::InvalidConfig)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut population = Vec::with_capacity(cfg.n);
    for index in 0..cfg.n {
        let a = uniform_in(&mut rng, cfg.a_range.0, cfg.a_range.1);
        let b = uniform_in(&mut rng, cfg.b_range.0, cfg.b_range.1);
        let x0 = uniform_in(&mut rng, cfg.x0_range.0, cfg.x0_range.1);
        let vote_variate = uniform_in(&mut rng, 0.0, 1.0);
        let params = CuspParams::new(a, b);
        let x = if cfg.exact_mode {
            params.critical_points().basin_minimum(x0)
        } else {
            params
                .local_minimum_from(x0, &cfg.minimizer)
                .map_err(|source| SampleError::Minimize { index, source })?
        };
        let p = vote_probability(x, cfg.sigma);
        let y = sample_vote(p, vote_variate)?;
        population.push(Person {
            id: index as u64,
            a,
            b,
            x0,
            x,
            p,
            y,
        });
    }
    Ok(population)
}

/// Fraction of individuals whose parameters fall in the bistable region.
pub fn bistable_fraction(population: &[Person]) -> f64 {
    let count = population
        .iter()
        .filter(|p| p.params().stability() == Stability::Bistable)
        .count();
    count as f64 / population.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::chi_square_independence;

    fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut vx = 0.0;
        let mut vy = 0.0;
        for (&x, &y) in xs.iter().zip(ys) {
            cov += (x - mx) * (y - my);
            vx += (x - mx) * (x - mx);
            vy += (y - my) * (y - my);
        }
        cov / (vx * vy).sqrt()
    }

    #[test]
    fn default_run_satisfies_person_invariants() {
        let cfg = SamplerConfig::default();
        let population = sample_population(&cfg).unwrap();
        assert_eq!(population.len(), 1000);
        for person in &population {
            person.validate(&cfg).unwrap();
        }
        // ids are unique and dense
        for (i, person) in population.iter().enumerate() {
            assert_eq!(person.id, i as u64);
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = SamplerConfig {
            n: 200,
            ..SamplerConfig::default()
        };
        let one = sample_population(&cfg).unwrap();
        let two = sample_population(&cfg).unwrap();
        assert_eq!(one, two);
        let other = sample_population(&SamplerConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(one, other);
    }

    #[test]
    fn exact_mode_matches_minimizer() {
        let cfg = SamplerConfig {
            n: 2000,
            ..SamplerConfig::default()
        };
        let minimized = sample_population(&cfg).unwrap();
        let exact = sample_population(&SamplerConfig {
            exact_mode: true,
            ..cfg
        })
        .unwrap();
        for (m, e) in minimized.iter().zip(&exact) {
            assert_eq!(m.a, e.a);
            assert_eq!(m.b, e.b);
            assert!((m.x - e.x).abs() <= 1e-6, "id {}: {} vs {}", m.id, m.x, e.x);
        }
    }

    #[test]
    fn vote_probability_reference_points() {
        assert_eq!(vote_probability(0.0, 10.0), 0.5);
        assert_eq!(vote_probability(0.0, 0.3), 0.5);
        assert!((vote_probability(1.0, 10.0) - 0.9999546021312976).abs() <= 1e-7);
        let anti = 1.0 - vote_probability(1.0, 10.0);
        assert!((vote_probability(-1.0, 10.0) - anti).abs() <= 1e-12);
    }

    #[test]
    fn vote_sampling_edges_and_mean() {
        assert_eq!(sample_vote(0.0, 0.3).unwrap(), 0);
        assert_eq!(sample_vote(1.0, 0.9999).unwrap(), 1);
        assert!(matches!(
            sample_vote(1.5, 0.1),
            Err(SampleError::ProbabilityDomain(_))
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut sum = 0u64;
        for _ in 0..n {
            let u = uniform_in(&mut rng, 0.0, 1.0);
            sum += sample_vote(0.3, u).unwrap() as u64;
        }
        let mean = sum as f64 / n as f64;
        assert!((mean - 0.3).abs() <= 0.01, "mean = {mean}");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad_sigma = SamplerConfig {
            sigma: -1.0,
            ..SamplerConfig::default()
        };
        assert!(
            matches!(sample_population(&bad_sigma), Err(SampleError::InvalidConfig(m)) if m.contains("sigma"))
        );
        let bad_range = SamplerConfig {
            b_range: (4.0, -2.0),
            ..SamplerConfig::default()
        };
        assert!(
            matches!(sample_population(&bad_range), Err(SampleError::InvalidConfig(m)) if m.contains("b_range"))
        );
        let bad_n = SamplerConfig {
            n: 0,
            ..SamplerConfig::default()
        };
        assert!(matches!(
            sample_population(&bad_n),
            Err(SampleError::InvalidConfig(_))
        ));
    }

    #[test]
    fn mirrored_population_still_satisfies_invariants() {
        let cfg = SamplerConfig {
            n: 2000,
            ..SamplerConfig::default()
        };
        let population = sample_population(&cfg).unwrap();
        for person in &population {
            let mirrored = Person {
                id: person.id,
                a: -person.a,
                b: person.b,
                x0: -person.x0,
                x: -person.x,
                p: vote_probability(-person.x, cfg.sigma),
                y: 1 - person.y,
            };
            mirrored.validate(&cfg).unwrap();
        }
    }

    #[test]
    fn bistable_fraction_matches_region_area() {
        // Area of the bistable region inside [-1,1] x [-2,4] over the total
        // area 12; the strip half-width is min(1, 2*(b/3)^(3/2)).
        let analytic = {
            let b_star = 3.0 / 2.0_f64.powf(2.0 / 3.0);
            let narrow = (8.0 / 5.0) * (b_star / 3.0).powf(1.5) * b_star;
            let full = 2.0 * (4.0 - b_star);
            (narrow + full) / 12.0
        };
        assert!((analytic - 0.478).abs() <= 0.001, "analytic = {analytic}");

        let cfg = SamplerConfig {
            n: 10_000,
            ..SamplerConfig::default()
        };
        let population = sample_population(&cfg).unwrap();
        let fraction = bistable_fraction(&population);
        assert!((fraction - analytic).abs() <= 0.02, "fraction = {fraction}");
    }

    #[test]
    fn marginal_independence_and_conditional_dependence() {
        let cfg = SamplerConfig {
            n: 10_000,
            ..SamplerConfig::default()
        };
        let population = sample_population(&cfg).unwrap();
        let b: Vec<f64> = population.iter().map(|p| p.b).collect();
        let a: Vec<f64> = population.iter().map(|p| p.a).collect();
        let y: Vec<u8> = population.iter().map(|p| p.y).collect();

        let test = chi_square_independence(&b, &y).unwrap();
        assert!(test.p_value > 0.01, "chi-square p = {}", test.p_value);

        let mean_y = y.iter().map(|&v| v as f64).sum::<f64>() / y.len() as f64;
        assert!((mean_y - 0.5).abs() <= 0.02, "mean(Y) = {mean_y}");

        let y_f: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        let corr = pearson(&a, &y_f);
        assert!(corr >= 0.4, "corr(A, Y) = {corr}");
    }

    #[test]
    fn region_conditional_vote_rates() {
        let cfg = SamplerConfig {
            n: 10_000,
            ..SamplerConfig::default()
        };
        let population = sample_population(&cfg).unwrap();

        let mean_y = |subset: Vec<&Person>| {
            subset.iter().map(|p| p.y as f64).sum::<f64>() / subset.len() as f64
        };
        let bistable: Vec<&Person> = population
            .iter()
            .filter(|p| p.params().stability() == Stability::Bistable)
            .collect();
        let coin = mean_y(bistable);
        assert!((0.45..=0.55).contains(&coin), "mean(Y | bistable) = {coin}");

        let positive: Vec<&Person> = population
            .iter()
            .filter(|p| p.params().stability() == Stability::Monostable && p.a > 0.5)
            .collect();
        let negative: Vec<&Person> = population
            .iter()
            .filter(|p| p.params().stability() == Stability::Monostable && p.a < -0.5)
            .collect();
        let up = mean_y(positive);
        let down = mean_y(negative);
        assert!(up >= 0.85, "mean(Y | monostable, a > 0.5) = {up}");
        assert!(down <= 0.15, "mean(Y | monostable, a < -0.5) = {down}");
    }
}
