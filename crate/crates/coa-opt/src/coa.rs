//! The cuckoo optimization engine: population lifecycle over any objective on
//! a bounded real search space.
//!
//! One iteration runs init -> lay eggs within each bird's egg-laying radius ->
//! cull the worst fraction -> grow survivors into cuckoos -> cap the living
//! population -> cluster -> migrate everyone toward the best cluster's best
//! habitat -> convergence check. The best habitat ever evaluated is tracked
//! outside the population and is never lost.

use std::f64::consts::PI;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::clustering;
use crate::error::{Error, Result};
use crate::space::{inf_distance, SearchSpace};

/// One candidate solution: a habitat vector, how many eggs the bird lays this
/// season, and the cached objective value (minimization orientation).
#[derive(Debug, Clone, PartialEq)]
pub struct Cuckoo {
    pub habitat: Vec<f64>,
    pub eggs: usize,
    pub cost: f64,
}

/// Engine tunables. `Default` carries the stock parameter set: 7 initial
/// cuckoos laying 2..=4 eggs, a cap of 8 living birds, 3 clusters, and 200
/// iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct COAConfig {
    /// Initial population size.
    pub n_initial: usize,
    pub min_eggs: usize,
    pub max_eggs: usize,
    pub max_iterations: usize,
    /// Number of k-means groups used to pick the migration goal.
    pub k_clusters: usize,
    /// Hard cap on the living population after each iteration.
    pub max_living: usize,
    /// Egg-laying radius scale.
    pub alpha: f64,
    /// Fraction of each season's eggs destroyed, worst first.
    pub cull_fraction: f64,
    /// Migration step fraction is drawn uniformly from `[0, lambda_max]`.
    pub lambda_max: f64,
    /// Migration deflection angle is drawn uniformly from
    /// `[-phi_bound, phi_bound]` radians.
    pub phi_bound: f64,
    /// Stop once strictly more than this fraction of the population sits
    /// within `convergence_eps` of the incumbent best.
    pub convergence_ratio: f64,
    /// Range-normalized infinity-norm tolerance for the convergence test and
    /// for same-batch egg deduplication.
    pub convergence_eps: f64,
    pub seed: u64,
}

impl Default for COAConfig {
    fn default() -> Self {
        COAConfig {
            n_initial: 7,
            min_eggs: 2,
            max_eggs: 4,
            max_iterations: 200,
            k_clusters: 3,
            max_living: 8,
            alpha: 0.2,
            cull_fraction: 0.1,
            lambda_max: 1.0,
            phi_bound: PI / 6.0,
            convergence_ratio: 0.95,
            convergence_eps: 1e-4,
            seed: 0,
        }
    }
}

impl COAConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.min_eggs < 1 || self.min_eggs > self.max_eggs {
            return fail(format!(
                "egg counts must satisfy 1 <= min_eggs <= max_eggs (got {}..{})",
                self.min_eggs, self.max_eggs
            ));
        }
        if self.k_clusters < 2 || self.k_clusters > self.max_living {
            return fail(format!(
                "k_clusters must be in [2, max_living] (got k={}, max_living={})",
                self.k_clusters, self.max_living
            ));
        }
        if self.n_initial < self.k_clusters {
            return fail(format!(
                "n_initial ({}) must be at least k_clusters ({})",
                self.n_initial, self.k_clusters
            ));
        }
        if self.max_iterations == 0 {
            return fail("max_iterations must be at least 1".into());
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return fail(format!("alpha must be a positive real (got {})", self.alpha));
        }
        if !(0.0..1.0).contains(&self.cull_fraction) {
            return fail(format!(
                "cull_fraction must lie in [0, 1) (got {})",
                self.cull_fraction
            ));
        }
        if !(self.lambda_max.is_finite() && self.lambda_max >= 0.0) {
            return fail(format!("lambda_max must be >= 0 (got {})", self.lambda_max));
        }
        if !(self.phi_bound.is_finite() && self.phi_bound >= 0.0) {
            return fail(format!("phi_bound must be >= 0 (got {})", self.phi_bound));
        }
        if !(self.convergence_ratio > 0.0 && self.convergence_ratio <= 1.0) {
            return fail(format!(
                "convergence_ratio must lie in (0, 1] (got {})",
                self.convergence_ratio
            ));
        }
        if !(self.convergence_eps.is_finite() && self.convergence_eps > 0.0) {
            return fail(format!(
                "convergence_eps must be positive (got {})",
                self.convergence_eps
            ));
        }
        Ok(())
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
}

/// Per-iteration statistics backing convergence plots.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    /// 1-based iteration number.
    pub iteration: usize,
    pub best_cost_so_far: f64,
    pub population_mean_cost: f64,
    /// Max infinity-norm distance from any living cuckoo to the incumbent best.
    pub population_spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub best_habitat: Vec<f64>,
    /// Minimum cost over every habitat evaluated during the run.
    pub best_cost: f64,
    pub iterations_used: usize,
    pub terminated_by: Termination,
    pub trace: Vec<TracePoint>,
}

/// Tracks the best habitat ever evaluated; the guard against non-finite
/// objective values lives here so every evaluation path shares it.
pub(crate) struct Incumbent {
    pub(crate) habitat: Vec<f64>,
    pub(crate) cost: f64,
}

impl Incumbent {
    pub(crate) fn observe(&mut self, habitat: &[f64], cost: f64, iteration: usize) -> Result<f64> {
        if !cost.is_finite() {
            return Err(Error::ObjectiveEvaluation {
                iteration,
                habitat: habitat.to_vec(),
            });
        }
        // ties update too, so on cost plateaus the incumbent tracks the
        // collapsing population instead of pinning to the first habitat seen
        if cost <= self.cost {
            self.cost = cost;
            self.habitat = habitat.to_vec();
        }
        Ok(cost)
    }
}

/// Draws `n_initial` cuckoos uniformly within the space, assigns each a random
/// egg count from `[min_eggs, max_eggs]`, and evaluates their costs.
pub fn init_population<F: Fn(&[f64]) -> f64>(
    objective: &F,
    space: &SearchSpace,
    config: &COAConfig,
    rng: &mut impl Rng,
) -> Result<Vec<Cuckoo>> {
    config.validate()?;
    (0..config.n_initial)
        .map(|_| {
            let habitat = space.sample_uniform(rng);
            let eggs = rng.random_range(config.min_eggs..=config.max_eggs);
            let cost = objective(&habitat);
            if !cost.is_finite() {
                return Err(Error::ObjectiveEvaluation { iteration: 0, habitat });
            }
            Ok(Cuckoo { habitat, eggs, cost })
        })
        .collect()
}

/// Egg-laying radius per dimension: `alpha * (own / total) * (upper - lower)`.
pub fn compute_elr(
    own_eggs: usize,
    total_eggs: usize,
    alpha: f64,
    space: &SearchSpace,
) -> Result<Vec<f64>> {
    if total_eggs == 0 {
        return Err(Error::Domain("total egg count is zero".into()));
    }
    debug_assert!(own_eggs > 0 && own_eggs <= total_eggs);
    let share = own_eggs as f64 / total_eggs as f64;
    Ok((0..space.dim())
        .map(|j| alpha * share * space.range(j))
        .collect())
}

/// Lays `cuckoo.eggs` habitats, each coordinate uniform within
/// `habitat[j] +- radius[j]` and clipped to the bounds. An egg landing within
/// `dedup_eps` (infinity-norm) of an earlier egg in the same batch is re-drawn
/// once and then kept either way.
pub fn lay_eggs(
    cuckoo: &Cuckoo,
    radius: &[f64],
    space: &SearchSpace,
    dedup_eps: f64,
    rng: &mut impl Rng,
) -> Vec<Vec<f64>> {
    debug_assert!(radius.iter().all(|r| *r >= 0.0));
    let mut batch: Vec<Vec<f64>> = Vec::with_capacity(cuckoo.eggs);
    for _ in 0..cuckoo.eggs {
        let mut egg = draw_egg(cuckoo, radius, space, rng);
        if batch.iter().any(|laid| inf_distance(laid, &egg) <= dedup_eps) {
            egg = draw_egg(cuckoo, radius, space, rng);
        }
        batch.push(egg);
    }
    batch
}

fn draw_egg(cuckoo: &Cuckoo, radius: &[f64], space: &SearchSpace, rng: &mut impl Rng) -> Vec<f64> {
    let mut egg: Vec<f64> = cuckoo
        .habitat
        .iter()
        .zip(radius)
        .map(|(center, r)| rng.random_range(center - r..=center + r))
        .collect();
    space.clip(&mut egg);
    egg
}

/// Destroys the `floor(cull_fraction * n)` costliest eggs. Equal costs keep
/// the earlier batch index; survivor order is preserved.
pub fn cull_worst(eggs: Vec<(Vec<f64>, f64)>, cull_fraction: f64) -> Vec<(Vec<f64>, f64)> {
    debug_assert!((0.0..1.0).contains(&cull_fraction));
    let n = eggs.len();
    let destroy = (cull_fraction * n as f64).floor() as usize;
    if destroy == 0 {
        return eggs;
    }
    let mut order: Vec<usize> = (0..n).collect();
    // costliest first; on ties the later index is destroyed first
    order.sort_by(|&a, &b| eggs[b].1.total_cmp(&eggs[a].1).then(b.cmp(&a)));
    let mut doomed = vec![false; n];
    for &i in order.iter().take(destroy) {
        doomed[i] = true;
    }
    eggs.into_iter()
        .zip(doomed)
        .filter_map(|(egg, dead)| (!dead).then_some(egg))
        .collect()
}

/// The migration target: the cheapest member of the cluster with the lowest
/// mean cost. Ties on mean go to the lower cluster index, ties on member to
/// the lower population index.
pub fn select_goal(population: &[Cuckoo], assignments: &[usize]) -> Result<Vec<f64>> {
    if population.is_empty() {
        return Err(Error::Domain("cannot select a goal from an empty population".into()));
    }
    debug_assert_eq!(population.len(), assignments.len());
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (cuckoo, &label) in population.iter().zip(assignments) {
        sums[label] += cuckoo.cost;
        counts[label] += 1;
    }
    let mut best_cluster = None;
    for c in 0..k {
        if counts[c] == 0 {
            continue;
        }
        let mean = sums[c] / counts[c] as f64;
        if best_cluster.map_or(true, |(_, m)| mean < m) {
            best_cluster = Some((c, mean));
        }
    }
    let (cluster, _) = best_cluster.expect("at least one cluster is non-empty");
    let mut goal: Option<&Cuckoo> = None;
    for (cuckoo, &label) in population.iter().zip(assignments) {
        if label == cluster && goal.map_or(true, |g| cuckoo.cost < g.cost) {
            goal = Some(cuckoo);
        }
    }
    Ok(goal.expect("chosen cluster has a member").habitat.clone())
}

/// Deterministic core of the migration move: travel `lambda` of the way to
/// the goal, deflected by `phi`. In two or more dimensions the deflection
/// rotates the step within the plane it spans with `ortho`, a unit vector
/// orthogonal to the step; in one dimension it scales the step by `cos(phi)`.
/// A zero step returns `current` unchanged. The result is clipped to bounds.
pub fn migrate_step(
    current: &[f64],
    goal: &[f64],
    lambda: f64,
    phi: f64,
    ortho: Option<&[f64]>,
    space: &SearchSpace,
) -> Vec<f64> {
    let step: Vec<f64> = goal
        .iter()
        .zip(current)
        .map(|(g, c)| lambda * (g - c))
        .collect();
    if step.iter().all(|s| *s == 0.0) {
        return current.to_vec();
    }
    let rotated: Vec<f64> = if current.len() == 1 {
        vec![step[0] * phi.cos()]
    } else {
        let ortho = ortho.expect("dim >= 2 migration requires an orthogonal direction");
        let norm = step.iter().map(|s| s * s).sum::<f64>().sqrt();
        step.iter()
            .zip(ortho)
            .map(|(s, o)| phi.cos() * s + norm * phi.sin() * o)
            .collect()
    };
    let mut next: Vec<f64> = current.iter().zip(&rotated).map(|(c, r)| c + r).collect();
    space.clip(&mut next);
    next
}

/// Random-unit vector orthogonal to `v`: a standard-normal draw with its
/// projection on `v` removed, normalized. Falls back to an orthogonalized
/// basis vector in the vanishing-residual corner case.
fn random_orthogonal_unit(v: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    let dim = v.len();
    let v_norm2: f64 = v.iter().map(|x| x * x).sum();
    for _ in 0..8 {
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let proj: f64 = g.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / v_norm2;
        let residual: Vec<f64> = g.iter().zip(v).map(|(a, b)| a - proj * b).collect();
        let norm = residual.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return residual.iter().map(|x| x / norm).collect();
        }
    }
    // v is parallel to every draw only with probability zero; orthogonalize
    // the basis vector least aligned with v instead
    let k = (0..dim)
        .min_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
        .unwrap();
    let mut e = vec![0.0; dim];
    e[k] = 1.0;
    let proj = v[k] / v_norm2;
    let residual: Vec<f64> = e.iter().zip(v).map(|(a, b)| a - proj * b).collect();
    let norm = residual.iter().map(|x| x * x).sum::<f64>().sqrt();
    residual.iter().map(|x| x / norm).collect()
}

/// Moves one habitat toward the goal: draws the step fraction uniformly from
/// `[0, lambda_max]` and the deflection from `[-phi_bound, phi_bound]`, then
/// applies [`migrate_step`].
pub fn migrate(
    current: &[f64],
    goal: &[f64],
    config: &COAConfig,
    space: &SearchSpace,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let lambda = rng.random_range(0.0..=config.lambda_max);
    let phi = rng.random_range(-config.phi_bound..=config.phi_bound);
    let step: Vec<f64> = goal
        .iter()
        .zip(current)
        .map(|(g, c)| lambda * (g - c))
        .collect();
    let needs_ortho = current.len() >= 2 && step.iter().any(|s| *s != 0.0);
    let ortho = needs_ortho.then(|| random_orthogonal_unit(&step, rng));
    migrate_step(current, goal, lambda, phi, ortho.as_deref(), space)
}

/// Caps the population at `max_living`, keeping the cheapest cuckoos (ties by
/// earlier index) in their original relative order.
pub fn enforce_capacity(population: Vec<Cuckoo>, max_living: usize) -> Vec<Cuckoo> {
    if population.len() <= max_living {
        return population;
    }
    let mut order: Vec<usize> = (0..population.len()).collect();
    order.sort_by(|&a, &b| {
        population[a]
            .cost
            .total_cmp(&population[b].cost)
            .then(a.cmp(&b))
    });
    let mut keep = vec![false; population.len()];
    for &i in order.iter().take(max_living) {
        keep[i] = true;
    }
    population
        .into_iter()
        .zip(keep)
        .filter_map(|(cuckoo, kept)| kept.then_some(cuckoo))
        .collect()
}

/// True iff strictly more than `convergence_ratio` of the population lies
/// within `convergence_eps` of the incumbent best, measured in the
/// range-normalized infinity norm.
pub fn check_convergence(
    population: &[Cuckoo],
    incumbent_best: &[f64],
    space: &SearchSpace,
    config: &COAConfig,
) -> bool {
    debug_assert!(!population.is_empty());
    let within = population
        .iter()
        .filter(|c| {
            space.normalized_inf_distance(&c.habitat, incumbent_best) <= config.convergence_eps
        })
        .count();
    (within as f64) > config.convergence_ratio * population.len() as f64
}

/// Runs the full optimization loop until convergence or `max_iterations`.
///
/// The objective must be a pure function of its habitat argument; identical
/// `(objective, space, config)` inputs give bit-identical results.
pub fn run<F: Fn(&[f64]) -> f64>(
    objective: F,
    space: &SearchSpace,
    config: &COAConfig,
) -> Result<RunResult> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut population = init_population(&objective, space, config, &mut rng)?;

    let seed_best = population
        .iter()
        .min_by(|a, b| a.cost.total_cmp(&b.cost))
        .expect("n_initial >= 1");
    let mut incumbent = Incumbent {
        habitat: seed_best.habitat.clone(),
        cost: seed_best.cost,
    };

    let mut trace = Vec::new();
    let mut terminated_by = Termination::MaxIterations;
    for iteration in 1..=config.max_iterations {
        let total_eggs: usize = population.iter().map(|c| c.eggs).sum();

        let mut eggs: Vec<(Vec<f64>, f64)> = Vec::with_capacity(total_eggs);
        for cuckoo in &population {
            let radius = compute_elr(cuckoo.eggs, total_eggs, config.alpha, space)?;
            for habitat in lay_eggs(cuckoo, &radius, space, config.convergence_eps, &mut rng) {
                let cost = incumbent.observe(&habitat, objective(&habitat), iteration)?;
                eggs.push((habitat, cost));
            }
        }

        let survivors = cull_worst(eggs, config.cull_fraction);
        for (habitat, cost) in survivors {
            let egg_count = rng.random_range(config.min_eggs..=config.max_eggs);
            population.push(Cuckoo {
                habitat,
                eggs: egg_count,
                cost,
            });
        }
        population = enforce_capacity(population, config.max_living);

        let habitats: Vec<Vec<f64>> = population.iter().map(|c| c.habitat.clone()).collect();
        let grouping = clustering::kmeans(
            &habitats,
            config.k_clusters,
            clustering::DEFAULT_MAX_ITER,
            &mut rng,
        )?;
        let goal = select_goal(&population, &grouping.assignments)?;

        for cuckoo in &mut population {
            let moved = migrate(&cuckoo.habitat, &goal, config, space, &mut rng);
            cuckoo.cost = incumbent.observe(&moved, objective(&moved), iteration)?;
            cuckoo.habitat = moved;
        }

        let mean_cost =
            population.iter().map(|c| c.cost).sum::<f64>() / population.len() as f64;
        let spread = population
            .iter()
            .map(|c| inf_distance(&c.habitat, &incumbent.habitat))
            .fold(0.0, f64::max);
        trace.push(TracePoint {
            iteration,
            best_cost_so_far: incumbent.cost,
            population_mean_cost: mean_cost,
            population_spread: spread,
        });

        if check_convergence(&population, &incumbent.habitat, space, config) {
            terminated_by = Termination::Converged;
            break;
        }
    }

    Ok(RunResult {
        iterations_used: trace.len(),
        best_habitat: incumbent.habitat,
        best_cost: incumbent.cost,
        terminated_by,
        trace,
    })
}
