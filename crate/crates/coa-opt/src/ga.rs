//! Real-coded genetic algorithm over the same bounded space and cost
//! function as the cuckoo engine, used as the comparison baseline.
//!
//! Generational loop: tournament selection, blend crossover, per-gene
//! Gaussian mutation, and copy-through elitism. Returns the shared
//! [`RunResult`] shape so traces and reports are interchangeable.

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::coa::{Incumbent, RunResult, Termination, TracePoint};
use crate::error::{Error, Result};
use crate::space::{inf_distance, SearchSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GAConfig {
    pub pop_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    /// Blend-crossover expansion: offspring genes are drawn uniformly from
    /// the parent interval widened by this fraction of its width on each side.
    pub blend_alpha: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Gaussian mutation sigma as a fraction of each dimension's range.
    pub mutation_sigma_fraction: f64,
    pub elite_count: usize,
    pub seed: u64,
}

impl Default for GAConfig {
    fn default() -> Self {
        GAConfig {
            pop_size: 30,
            generations: 200,
            tournament_size: 2,
            crossover_rate: 0.9,
            blend_alpha: 0.5,
            mutation_rate: 0.1,
            mutation_sigma_fraction: 0.1,
            elite_count: 1,
            seed: 0,
        }
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.pop_size < 2 {
            return fail(format!("pop_size must be at least 2 (got {})", self.pop_size));
        }
        if self.elite_count >= self.pop_size {
            return fail(format!(
                "elite_count ({}) must be below pop_size ({})",
                self.elite_count, self.pop_size
            ));
        }
        if self.generations == 0 {
            return fail("generations must be at least 1".into());
        }
        if self.tournament_size == 0 {
            return fail("tournament_size must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return fail(format!("crossover_rate must lie in [0, 1] (got {})", self.crossover_rate));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return fail(format!("mutation_rate must lie in [0, 1] (got {})", self.mutation_rate));
        }
        if !(self.blend_alpha.is_finite() && self.blend_alpha >= 0.0) {
            return fail(format!("blend_alpha must be >= 0 (got {})", self.blend_alpha));
        }
        if !(self.mutation_sigma_fraction.is_finite() && self.mutation_sigma_fraction >= 0.0) {
            return fail(format!(
                "mutation_sigma_fraction must be >= 0 (got {})",
                self.mutation_sigma_fraction
            ));
        }
        Ok(())
    }
}

struct Individual {
    genes: Vec<f64>,
    cost: f64,
}

/// Winner of one tournament: the cheapest of `k` draws (with replacement);
/// cost ties go to the lower population index.
fn tournament(population: &[Individual], k: usize, rng: &mut impl Rng) -> usize {
    let mut winner = rng.random_range(0..population.len());
    for _ in 1..k {
        let challenger = rng.random_range(0..population.len());
        let better = population[challenger].cost < population[winner].cost
            || (population[challenger].cost == population[winner].cost && challenger < winner);
        if better {
            winner = challenger;
        }
    }
    winner
}

fn blend_crossover(
    a: &[f64],
    b: &[f64],
    alpha: f64,
    space: &SearchSpace,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let mut child: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let (lo, hi) = (x.min(*y), x.max(*y));
            let spread = alpha * (hi - lo);
            rng.random_range(lo - spread..=hi + spread)
        })
        .collect();
    space.clip(&mut child);
    child
}

/// Runs the generational GA. Deterministic for a fixed config; the best-ever
/// individual is tracked outside the population, so the best-so-far trace is
/// monotone even without elitism.
pub fn run_ga<F: Fn(&[f64]) -> f64>(
    objective: F,
    space: &SearchSpace,
    config: &GAConfig,
) -> Result<RunResult> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut incumbent = Incumbent {
        habitat: Vec::new(),
        cost: f64::INFINITY,
    };
    let mut population: Vec<Individual> = Vec::with_capacity(config.pop_size);
    for _ in 0..config.pop_size {
        let genes = space.sample_uniform(&mut rng);
        let cost = incumbent.observe(&genes, objective(&genes), 0)?;
        population.push(Individual { genes, cost });
    }

    let mut trace = Vec::with_capacity(config.generations);
    for generation in 1..=config.generations {
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| {
            population[a]
                .cost
                .total_cmp(&population[b].cost)
                .then(a.cmp(&b))
        });

        let mut next: Vec<Individual> = order
            .iter()
            .take(config.elite_count)
            .map(|&i| Individual {
                genes: population[i].genes.clone(),
                cost: population[i].cost,
            })
            .collect();

        while next.len() < config.pop_size {
            let first = tournament(&population, config.tournament_size, &mut rng);
            let mut child = if rng.random_bool(config.crossover_rate) {
                let second = tournament(&population, config.tournament_size, &mut rng);
                blend_crossover(
                    &population[first].genes,
                    &population[second].genes,
                    config.blend_alpha,
                    space,
                    &mut rng,
                )
            } else {
                population[first].genes.clone()
            };
            for (j, gene) in child.iter_mut().enumerate() {
                if rng.random_bool(config.mutation_rate) {
                    let sigma = config.mutation_sigma_fraction * space.range(j);
                    if sigma > 0.0 {
                        let noise: f64 = Normal::new(0.0, sigma)
                            .expect("sigma is positive and finite")
                            .sample(&mut rng);
                        *gene += noise;
                    }
                }
            }
            space.clip(&mut child);
            let cost = incumbent.observe(&child, objective(&child), generation)?;
            next.push(Individual { genes: child, cost });
        }
        population = next;

        let mean_cost =
            population.iter().map(|p| p.cost).sum::<f64>() / population.len() as f64;
        let spread = population
            .iter()
            .map(|p| inf_distance(&p.genes, &incumbent.habitat))
            .fold(0.0, f64::max);
        trace.push(TracePoint {
            iteration: generation,
            best_cost_so_far: incumbent.cost,
            population_mean_cost: mean_cost,
            population_spread: spread,
        });
    }

    Ok(RunResult {
        best_habitat: incumbent.habitat,
        best_cost: incumbent.cost,
        iterations_used: trace.len(),
        terminated_by: Termination::MaxIterations,
        trace,
    })
}
