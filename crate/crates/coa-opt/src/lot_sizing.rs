//! Multi-product multi-period lot-sizing: instance data, decoding a habitat
//! into a production plan, simulating the inventory/backorder balance, and
//! penalizing capacity violations.
//!
//! Search variables are the production quantities only. Sales, inventory,
//! backorders, and setup indicators are derived from the forward recurrence,
//! so the balance and selling constraints hold by construction and the
//! penalty surface reduces to the storage and resource capacities.

use std::path::Path;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::space::SearchSpace;

/// Production below this level counts as no production at all: the decoded
/// quantity snaps to zero and the setup indicator stays off.
pub const SETUP_THRESHOLD: f64 = 1e-6;

/// Default weight on squared constraint violations.
pub const DEFAULT_PENALTY_WEIGHT: f64 = 1e6;

/// Schema tag written into instance files.
pub const INSTANCE_SCHEMA_VERSION: u32 = 1;

/// Instance data: dimensions, prices and costs per product and period,
/// demand, capacities, and the decoding bounds.
///
/// Indexing is `[product][period]` for the per-product-per-period tables,
/// `[product][resource]` for `resource_use`, and `[resource][period]` for
/// `resource_cap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LotSizingInstance {
    pub n_products: usize,
    pub n_periods: usize,
    pub n_resources: usize,
    /// Unit sales price.
    pub price: Vec<Vec<f64>>,
    /// Unit production cost.
    pub unit_cost: Vec<Vec<f64>>,
    /// Unit holding cost per period.
    pub holding_cost: Vec<Vec<f64>>,
    /// Fixed cost charged in any period with positive production.
    pub setup_cost: Vec<Vec<f64>>,
    /// Unit backorder cost.
    pub shortage_cost: Vec<Vec<f64>>,
    pub demand: Vec<Vec<f64>>,
    /// Resource units consumed per unit of product.
    pub resource_use: Vec<Vec<f64>>,
    /// Resource units available per resource and period.
    pub resource_cap: Vec<Vec<f64>>,
    /// Storage units occupied per unit of product held.
    pub storage_use: Vec<f64>,
    /// Storage units available per period.
    pub storage_cap: Vec<f64>,
    /// Fraction of last period's backorder carried into the current demand.
    pub carry_fraction: Vec<Vec<f64>>,
    /// Big-M linking production to the setup indicator.
    pub big_m: f64,
    /// Upper decoding bound for production per product and period.
    pub x_upper: Vec<Vec<f64>>,
}

/// Decision variables derived from a production plan.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DerivedSchedule {
    pub production: Vec<Vec<f64>>,
    pub sales: Vec<Vec<f64>>,
    pub inventory: Vec<Vec<f64>>,
    pub backorder: Vec<Vec<f64>>,
    pub setup: Vec<Vec<bool>>,
}

/// Non-negative violation amounts per constraint family.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Violations {
    /// Per period: storage load above capacity.
    pub storage: Vec<f64>,
    /// Per resource and period: resource load above capacity.
    pub resource: Vec<Vec<f64>>,
    /// Per product and period: production above `big_m * Z` (zero by
    /// construction of decode/derive; kept as a guard).
    pub setup: Vec<Vec<f64>>,
}

impl Violations {
    pub fn total(&self) -> f64 {
        self.storage.iter().sum::<f64>()
            + self.resource.iter().flatten().sum::<f64>()
            + self.setup.iter().flatten().sum::<f64>()
    }

    pub fn sum_squares(&self) -> f64 {
        self.storage.iter().map(|v| v * v).sum::<f64>()
            + self.resource.iter().flatten().map(|v| v * v).sum::<f64>()
            + self.setup.iter().flatten().map(|v| v * v).sum::<f64>()
    }

    pub fn is_zero(&self) -> bool {
        self.storage.iter().all(|v| *v == 0.0)
            && self.resource.iter().flatten().all(|v| *v == 0.0)
            && self.setup.iter().flatten().all(|v| *v == 0.0)
    }
}

/// Full evaluation of one habitat: raw objective, violations, and the
/// penalized cost handed to the optimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub raw_objective: f64,
    pub violations: Violations,
    pub penalized_cost: f64,
    pub feasible: bool,
}

/// Maps a habitat of length `n_products * n_periods` (row-major by product)
/// onto production quantities: clamp to `[0, x_upper]`, then snap anything
/// below [`SETUP_THRESHOLD`] to zero.
pub fn decode(habitat: &[f64], instance: &LotSizingInstance) -> Result<Vec<Vec<f64>>> {
    let (n, t) = (instance.n_products, instance.n_periods);
    if habitat.len() != n * t {
        return Err(Error::Domain(format!(
            "habitat length {} does not match n_products * n_periods = {}",
            habitat.len(),
            n * t
        )));
    }
    Ok((0..n)
        .map(|i| {
            (0..t)
                .map(|j| {
                    let v = habitat[i * t + j].clamp(0.0, instance.x_upper[i][j]);
                    if v < SETUP_THRESHOLD {
                        0.0
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect())
}

/// Simulates the inventory/backorder balance forward over the horizon,
/// starting from empty stock and no backorders.
///
/// Per product and period: effective demand is `D + r * B_prev`, available
/// stock is `x + I_prev`, sales are capped by both, the shortfall becomes
/// backorder and the surplus becomes inventory. In the shortfall branch the
/// sales figure is computed literally as `(D - B) + r * B_prev` so the
/// selling-balance identity holds bit for bit.
pub fn derive_schedule(x: &[Vec<f64>], instance: &LotSizingInstance) -> DerivedSchedule {
    let mut out = DerivedSchedule::default();
    derive_schedule_into(x, instance, &mut out);
    out
}

/// Buffer-reusing form of [`derive_schedule`] for tight enumeration loops.
pub fn derive_schedule_into(
    x: &[Vec<f64>],
    instance: &LotSizingInstance,
    out: &mut DerivedSchedule,
) {
    let (n, t) = (instance.n_products, instance.n_periods);
    resize_grid(&mut out.production, n, t, 0.0);
    resize_grid(&mut out.sales, n, t, 0.0);
    resize_grid(&mut out.inventory, n, t, 0.0);
    resize_grid(&mut out.backorder, n, t, 0.0);
    resize_grid(&mut out.setup, n, t, false);

    for i in 0..n {
        let mut inv_prev = 0.0;
        let mut back_prev = 0.0;
        for j in 0..t {
            let q = x[i][j];
            let carried = instance.carry_fraction[i][j] * back_prev;
            let effective_demand = instance.demand[i][j] + carried;
            let available = q + inv_prev;
            let (sold, back, inv);
            if available >= effective_demand {
                back = 0.0;
                sold = effective_demand;
                inv = available - effective_demand;
            } else {
                back = effective_demand - available;
                sold = ((instance.demand[i][j] - back) + carried).max(0.0);
                inv = (available - sold).max(0.0);
            }
            out.production[i][j] = q;
            out.sales[i][j] = sold;
            out.inventory[i][j] = inv;
            out.backorder[i][j] = back;
            out.setup[i][j] = q > SETUP_THRESHOLD;
            inv_prev = inv;
            back_prev = back;
        }
    }
}

fn resize_grid<T: Clone>(grid: &mut Vec<Vec<T>>, n: usize, t: usize, fill: T) {
    grid.resize(n, Vec::new());
    for row in grid.iter_mut() {
        row.clear();
        row.resize(t, fill.clone());
    }
}

impl DerivedSchedule {
    /// Residual of the holding-balance equation
    /// `x + B + I_prev - I - D - r * B_prev` for one product and period;
    /// zero (within float noise) for any derived schedule.
    pub fn balance_residual(&self, instance: &LotSizingInstance, i: usize, j: usize) -> f64 {
        let inv_prev = if j == 0 { 0.0 } else { self.inventory[i][j - 1] };
        let back_prev = if j == 0 { 0.0 } else { self.backorder[i][j - 1] };
        self.production[i][j] + self.backorder[i][j] + inv_prev
            - self.inventory[i][j]
            - instance.demand[i][j]
            - instance.carry_fraction[i][j] * back_prev
    }
}

/// Total cost of a schedule: negated sales revenue plus production, holding
/// (from the second period on), setup, and shortage costs.
pub fn objective(schedule: &DerivedSchedule, instance: &LotSizingInstance) -> f64 {
    let (n, t) = (instance.n_products, instance.n_periods);
    let mut revenue = 0.0;
    let mut production = 0.0;
    let mut holding = 0.0;
    let mut setup = 0.0;
    let mut shortage = 0.0;
    for i in 0..n {
        for j in 0..t {
            revenue += instance.price[i][j] * schedule.sales[i][j];
            production += instance.unit_cost[i][j] * schedule.production[i][j];
            if j >= 1 {
                holding += instance.holding_cost[i][j] * schedule.inventory[i][j];
            }
            if schedule.setup[i][j] {
                setup += instance.setup_cost[i][j];
            }
            shortage += instance.shortage_cost[i][j] * schedule.backorder[i][j];
        }
    }
    -revenue + production + holding + setup + shortage
}

/// Capacity violations of a schedule. The selling and holding balances hold
/// by construction and always report zero.
pub fn constraint_violations(
    schedule: &DerivedSchedule,
    instance: &LotSizingInstance,
) -> Violations {
    let mut out = Violations::default();
    constraint_violations_into(schedule, instance, &mut out);
    out
}

/// Buffer-reusing form of [`constraint_violations`].
pub fn constraint_violations_into(
    schedule: &DerivedSchedule,
    instance: &LotSizingInstance,
    out: &mut Violations,
) {
    let (n, t, m) = (instance.n_products, instance.n_periods, instance.n_resources);
    out.storage.clear();
    out.storage.resize(t, 0.0);
    resize_grid(&mut out.resource, m, t, 0.0);
    resize_grid(&mut out.setup, n, t, 0.0);

    for j in 0..t {
        let load: f64 = (0..n)
            .map(|i| instance.storage_use[i] * schedule.inventory[i][j])
            .sum();
        out.storage[j] = (load - instance.storage_cap[j]).max(0.0);
    }
    for r in 0..m {
        for j in 0..t {
            let load: f64 = (0..n)
                .map(|i| instance.resource_use[i][r] * schedule.production[i][j])
                .sum();
            out.resource[r][j] = (load - instance.resource_cap[r][j]).max(0.0);
        }
    }
    for i in 0..n {
        for j in 0..t {
            let cap = if schedule.setup[i][j] { instance.big_m } else { 0.0 };
            out.setup[i][j] = (schedule.production[i][j] - cap).max(0.0);
        }
    }
}

/// Decode, derive, and score one habitat: the penalized cost is the raw
/// objective plus `penalty_weight` times the sum of squared violations.
pub fn penalized_fitness(
    habitat: &[f64],
    instance: &LotSizingInstance,
    penalty_weight: f64,
) -> Result<Evaluation> {
    debug_assert!(penalty_weight > 0.0);
    let x = decode(habitat, instance)?;
    let schedule = derive_schedule(&x, instance);
    let raw_objective = objective(&schedule, instance);
    let violations = constraint_violations(&schedule, instance);
    let feasible = violations.is_zero();
    let penalized_cost = raw_objective + penalty_weight * violations.sum_squares();
    Ok(Evaluation {
        raw_objective,
        violations,
        penalized_cost,
        feasible,
    })
}

impl LotSizingInstance {
    /// The continuous search space the optimizers run in: one dimension per
    /// `(product, period)` cell, bounded by `[0, x_upper]`.
    pub fn search_space(&self) -> Result<SearchSpace> {
        let lower = vec![0.0; self.n_products * self.n_periods];
        let upper: Vec<f64> = self.x_upper.iter().flatten().copied().collect();
        SearchSpace::new(lower, upper)
    }

    /// Penalized cost function over habitats, suitable for handing to either
    /// optimizer. Evaluation failures surface as NaN and are caught by the
    /// engines' non-finite guard.
    pub fn penalized_cost_fn(&self, penalty_weight: f64) -> impl Fn(&[f64]) -> f64 + '_ {
        move |habitat| {
            penalized_fitness(habitat, self, penalty_weight)
                .map(|e| e.penalized_cost)
                .unwrap_or(f64::NAN)
        }
    }

    /// Hex SHA-256 of the canonical JSON serialization; identifies the
    /// instance in reports.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("instance serializes");
        let digest = Sha256::digest(json.as_bytes());
        let mut hex = String::with_capacity(digest.len() * 2);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }
}

/// Checks every instance invariant and reports each violation with the field
/// path. An empty list means the instance is valid.
pub fn validate_instance(instance: &LotSizingInstance) -> Vec<String> {
    let mut defects = Vec::new();
    let (n, t, m) = (instance.n_products, instance.n_periods, instance.n_resources);
    if n == 0 {
        defects.push("n_products: must be at least 1".to_string());
    }
    if t == 0 {
        defects.push("n_periods: must be at least 1".to_string());
    }
    if m == 0 {
        defects.push("n_resources: must be at least 1".to_string());
    }
    if n == 0 || t == 0 || m == 0 {
        return defects;
    }

    check_grid(&mut defects, "price", &instance.price, n, t, 0.0, f64::INFINITY);
    check_grid(&mut defects, "unit_cost", &instance.unit_cost, n, t, 0.0, f64::INFINITY);
    check_grid(&mut defects, "holding_cost", &instance.holding_cost, n, t, 0.0, f64::INFINITY);
    check_grid(&mut defects, "setup_cost", &instance.setup_cost, n, t, 0.0, f64::INFINITY);
    check_grid(&mut defects, "shortage_cost", &instance.shortage_cost, n, t, 0.0, f64::INFINITY);
    check_grid(&mut defects, "demand", &instance.demand, n, t, 0.0, f64::INFINITY);
    check_grid(&mut defects, "resource_use", &instance.resource_use, n, m, 0.0, f64::INFINITY);
    check_grid(&mut defects, "resource_cap", &instance.resource_cap, m, t, 0.0, f64::INFINITY);
    check_grid(&mut defects, "carry_fraction", &instance.carry_fraction, n, t, 0.0, 1.0);
    if instance.x_upper.len() != n {
        defects.push(format!("x_upper: expected {n} rows, found {}", instance.x_upper.len()));
    } else {
        for (i, row) in instance.x_upper.iter().enumerate() {
            if row.len() != t {
                defects.push(format!("x_upper[{i}]: expected {t} columns, found {}", row.len()));
                continue;
            }
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() || *v <= 0.0 {
                    defects.push(format!("x_upper[{i}][{j}]: value {v} must be positive"));
                }
            }
        }
    }
    check_row(&mut defects, "storage_use", &instance.storage_use, n, 0.0);
    check_row(&mut defects, "storage_cap", &instance.storage_cap, t, 0.0);

    if !instance.big_m.is_finite() || instance.big_m < 0.0 {
        defects.push(format!("big_m: must be a finite non-negative value (got {})", instance.big_m));
    } else {
        let max_upper = instance
            .x_upper
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max);
        if instance.big_m < max_upper {
            defects.push(format!(
                "big_m: must be at least the largest x_upper ({} < {})",
                instance.big_m, max_upper
            ));
        }
    }
    defects
}

fn check_grid(
    defects: &mut Vec<String>,
    name: &str,
    grid: &[Vec<f64>],
    rows: usize,
    cols: usize,
    min: f64,
    max: f64,
) {
    if grid.len() != rows {
        defects.push(format!("{name}: expected {rows} rows, found {}", grid.len()));
        return;
    }
    for (i, row) in grid.iter().enumerate() {
        if row.len() != cols {
            defects.push(format!("{name}[{i}]: expected {cols} columns, found {}", row.len()));
            continue;
        }
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() || *v < min || *v > max {
                defects.push(format!("{name}[{i}][{j}]: value {v} outside [{min}, {max}]"));
            }
        }
    }
}

fn check_row(defects: &mut Vec<String>, name: &str, row: &[f64], len: usize, min: f64) {
    if row.len() != len {
        defects.push(format!("{name}: expected {len} entries, found {}", row.len()));
        return;
    }
    for (i, v) in row.iter().enumerate() {
        if !v.is_finite() || *v < min {
            defects.push(format!("{name}[{i}]: value {v} below {min}"));
        }
    }
}

/// One closed interval used by the instance generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
}

impl Span {
    pub fn new(lo: f64, hi: f64) -> Self {
        Span { lo, hi }
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        rng.random_range(self.lo..=self.hi)
    }
}

/// Value ranges for [`generate_instance`]. Capacities are not drawn directly:
/// each one is the corresponding all-demand load times a slack factor, which
/// keeps every generated instance feasible for the produce-to-demand plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceRanges {
    pub price: Span,
    pub unit_cost: Span,
    pub holding_cost: Span,
    pub setup_cost: Span,
    pub shortage_cost: Span,
    pub demand: Span,
    pub resource_use: Span,
    pub storage_use: Span,
    pub carry_fraction: Span,
    /// Slack factor on capacities; must stay at or above 1.2.
    pub capacity_slack: Span,
}

impl Default for InstanceRanges {
    fn default() -> Self {
        InstanceRanges {
            price: Span::new(8.0, 15.0),
            unit_cost: Span::new(1.0, 4.0),
            holding_cost: Span::new(0.5, 2.0),
            setup_cost: Span::new(5.0, 20.0),
            shortage_cost: Span::new(2.0, 8.0),
            demand: Span::new(0.0, 10.0),
            resource_use: Span::new(0.5, 2.0),
            storage_use: Span::new(0.5, 2.0),
            carry_fraction: Span::new(1.0, 1.0),
            capacity_slack: Span::new(1.2, 1.6),
        }
    }
}

impl InstanceRanges {
    pub fn validate(&self) -> Result<()> {
        let named: [(&str, Span, f64, f64); 10] = [
            ("price", self.price, 0.0, f64::INFINITY),
            ("unit_cost", self.unit_cost, 0.0, f64::INFINITY),
            ("holding_cost", self.holding_cost, 0.0, f64::INFINITY),
            ("setup_cost", self.setup_cost, 0.0, f64::INFINITY),
            ("shortage_cost", self.shortage_cost, 0.0, f64::INFINITY),
            ("demand", self.demand, 0.0, f64::INFINITY),
            ("resource_use", self.resource_use, 0.0, f64::INFINITY),
            ("storage_use", self.storage_use, 0.0, f64::INFINITY),
            ("carry_fraction", self.carry_fraction, 0.0, 1.0),
            ("capacity_slack", self.capacity_slack, 1.2, f64::INFINITY),
        ];
        for (name, span, min, max) in named {
            if !span.lo.is_finite() || !span.hi.is_finite() || span.lo > span.hi {
                return Err(Error::Config(format!(
                    "range {name}: lo must not exceed hi (got [{}, {}])",
                    span.lo, span.hi
                )));
            }
            if span.lo < min || span.hi > max {
                return Err(Error::Config(format!(
                    "range {name}: [{}, {}] outside the allowed [{min}, {max}]",
                    span.lo, span.hi
                )));
            }
        }
        Ok(())
    }
}

/// Draws a random instance: every table is sampled uniformly from its range
/// in a fixed field order, then capacities are set to the all-demand load
/// times a slack factor of at least 1.2 so the produce-to-demand plan is
/// always feasible. Identical seeds give identical instances.
pub fn generate_instance(
    seed: u64,
    n_products: usize,
    n_periods: usize,
    n_resources: usize,
    ranges: &InstanceRanges,
) -> Result<LotSizingInstance> {
    if n_products == 0 || n_periods == 0 || n_resources == 0 {
        return Err(Error::Config(format!(
            "instance dimensions must be positive (got N={n_products}, T={n_periods}, M={n_resources})"
        )));
    }
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = |rng: &mut ChaCha8Rng, rows: usize, cols: usize, span: Span| -> Vec<Vec<f64>> {
        (0..rows)
            .map(|_| (0..cols).map(|_| span.draw(rng)).collect())
            .collect()
    };

    let price = grid(&mut rng, n_products, n_periods, ranges.price);
    let unit_cost = grid(&mut rng, n_products, n_periods, ranges.unit_cost);
    let holding_cost = grid(&mut rng, n_products, n_periods, ranges.holding_cost);
    let setup_cost = grid(&mut rng, n_products, n_periods, ranges.setup_cost);
    let shortage_cost = grid(&mut rng, n_products, n_periods, ranges.shortage_cost);
    let demand = grid(&mut rng, n_products, n_periods, ranges.demand);
    let resource_use = grid(&mut rng, n_products, n_resources, ranges.resource_use);
    let storage_use: Vec<f64> = (0..n_products)
        .map(|_| ranges.storage_use.draw(&mut rng))
        .collect();
    let carry_fraction = grid(&mut rng, n_products, n_periods, ranges.carry_fraction);

    let resource_cap: Vec<Vec<f64>> = (0..n_resources)
        .map(|m| {
            (0..n_periods)
                .map(|j| {
                    let load: f64 = (0..n_products)
                        .map(|i| resource_use[i][m] * demand[i][j])
                        .sum();
                    let slack = ranges.capacity_slack.draw(&mut rng);
                    slack * load.max(1.0)
                })
                .collect()
        })
        .collect();
    let storage_cap: Vec<f64> = (0..n_periods)
        .map(|_| {
            let peak: f64 = (0..n_products)
                .map(|i| {
                    let max_demand = demand[i].iter().copied().fold(0.0, f64::max);
                    storage_use[i] * max_demand
                })
                .sum();
            let slack = ranges.capacity_slack.draw(&mut rng);
            slack * peak.max(1.0)
        })
        .collect();

    let x_upper: Vec<Vec<f64>> = (0..n_products)
        .map(|i| {
            let max_demand = demand[i].iter().copied().fold(0.0, f64::max);
            vec![(2.0 * max_demand).max(1.0); n_periods]
        })
        .collect();
    let big_m = x_upper.iter().flatten().copied().fold(0.0, f64::max);

    let instance = LotSizingInstance {
        n_products,
        n_periods,
        n_resources,
        price,
        unit_cost,
        holding_cost,
        setup_cost,
        shortage_cost,
        demand,
        resource_use,
        resource_cap,
        storage_use,
        storage_cap,
        carry_fraction,
        big_m,
        x_upper,
    };
    debug_assert!(validate_instance(&instance).is_empty());
    Ok(instance)
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    schema_version: u32,
    #[serde(flatten)]
    instance: LotSizingInstance,
}

impl LotSizingInstance {
    /// Writes the instance as pretty-printed JSON with a schema-version tag.
    /// The same instance always produces byte-identical files.
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let doc = InstanceFile {
            schema_version: INSTANCE_SCHEMA_VERSION,
            instance: self.clone(),
        };
        let mut json = serde_json::to_string_pretty(&doc)
            .map_err(|e| Error::parse(path, e))?;
        json.push('\n');
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    /// Reads and fully validates an instance file, rejecting unknown schema
    /// versions, dimension mismatches, and out-of-range values.
    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: InstanceFile =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
        if doc.schema_version != INSTANCE_SCHEMA_VERSION {
            return Err(Error::parse(
                path,
                format!(
                    "unsupported schema_version {} (expected {})",
                    doc.schema_version, INSTANCE_SCHEMA_VERSION
                ),
            ));
        }
        let defects = validate_instance(&doc.instance);
        if !defects.is_empty() {
            return Err(Error::Validation {
                path: path.to_path_buf(),
                defects,
            });
        }
        Ok(doc.instance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// N=1, T=2 instance with uniform parameters and generous capacities.
    fn tiny(p: f64, c: f64, h: f64, a: f64, b: f64, demand: [f64; 2]) -> LotSizingInstance {
        LotSizingInstance {
            n_products: 1,
            n_periods: 2,
            n_resources: 1,
            price: vec![vec![p, p]],
            unit_cost: vec![vec![c, c]],
            holding_cost: vec![vec![h, h]],
            setup_cost: vec![vec![a, a]],
            shortage_cost: vec![vec![b, b]],
            demand: vec![demand.to_vec()],
            resource_use: vec![vec![1.0]],
            resource_cap: vec![vec![1000.0, 1000.0]],
            storage_use: vec![1.0],
            storage_cap: vec![1000.0, 1000.0],
            carry_fraction: vec![vec![1.0, 1.0]],
            big_m: 100.0,
            x_upper: vec![vec![100.0, 100.0]],
        }
    }

    #[test]
    fn decode_clamps_and_snaps() {
        let inst = tiny(10.0, 1.0, 2.0, 20.0, 3.0, [4.0, 6.0]);
        let x = decode(&[-0.5, 3.2], &inst).unwrap();
        assert_eq!(x[0][0], 0.0);
        assert_eq!(x[0][1], 3.2);
        let x = decode(&[250.0, 1e-9], &inst).unwrap();
        assert_eq!(x[0][0], 100.0); // clamped to x_upper
        assert_eq!(x[0][1], 0.0); // below the setup threshold
        assert!(decode(&[1.0], &inst).is_err());
    }

    #[test]
    fn schedule_with_surplus_builds_inventory() {
        let inst = tiny(10.0, 1.0, 2.0, 20.0, 3.0, [4.0, 6.0]);
        let s = derive_schedule(&[vec![5.0, 5.0]], &inst);
        assert_eq!(s.sales[0], vec![4.0, 6.0]);
        assert_eq!(s.inventory[0], vec![1.0, 0.0]);
        assert_eq!(s.backorder[0], vec![0.0, 0.0]);
        for j in 0..2 {
            assert!(s.balance_residual(&inst, 0, j).abs() <= 1e-9);
        }
    }

    #[test]
    fn schedule_with_shortage_carries_backorders() {
        let inst = tiny(10.0, 1.0, 2.0, 20.0, 3.0, [4.0, 6.0]);
        let s = derive_schedule(&[vec![3.0, 5.0]], &inst);
        assert_eq!(s.sales[0], vec![3.0, 5.0]);
        assert_eq!(s.backorder[0], vec![1.0, 2.0]);
        assert_eq!(s.inventory[0], vec![0.0, 0.0]);
        // second-period residual: 5 + 2 + 0 - 0 - 6 - 1 = 0
        assert_eq!(s.balance_residual(&inst, 0, 1), 0.0);
    }

    #[test]
    fn all_zero_stays_zero() {
        let inst = tiny(10.0, 1.0, 2.0, 20.0, 3.0, [0.0, 0.0]);
        let s = derive_schedule(&[vec![0.0, 0.0]], &inst);
        assert_eq!(s.sales[0], vec![0.0, 0.0]);
        assert_eq!(s.inventory[0], vec![0.0, 0.0]);
        assert_eq!(s.backorder[0], vec![0.0, 0.0]);
        assert_eq!(objective(&s, &inst), 0.0);
    }

    #[test]
    fn objective_matches_hand_computation() {
        // x=[3,5]: revenue 80, production 8, holding 0, setup 40, shortage 9
        let inst = tiny(10.0, 1.0, 2.0, 20.0, 3.0, [4.0, 6.0]);
        let s = derive_schedule(&[vec![3.0, 5.0]], &inst);
        assert_eq!(objective(&s, &inst), -23.0);
    }

    #[test]
    fn holding_cost_skips_first_period() {
        // x=[5,5]: inventory [1,0], so the t>=2 holding sum is zero
        let inst = tiny(10.0, 1.0, 2.0, 0.0, 3.0, [4.0, 6.0]);
        let s = derive_schedule(&[vec![5.0, 5.0]], &inst);
        // revenue 100, production 10, holding 0 (I[1]=0), no setup/shortage
        assert_eq!(objective(&s, &inst), -90.0);
    }

    #[test]
    fn doubling_prices_shifts_objective_by_revenue() {
        let mut inst = tiny(10.0, 1.0, 2.0, 20.0, 3.0, [4.0, 6.0]);
        let s = derive_schedule(&[vec![3.0, 5.0]], &inst);
        let before = objective(&s, &inst);
        let revenue: f64 = (0..2).map(|j| inst.price[0][j] * s.sales[0][j]).sum();
        for row in &mut inst.price {
            for p in row.iter_mut() {
                *p *= 2.0;
            }
        }
        let after = objective(&s, &inst);
        assert!((after - (before - revenue)).abs() < 1e-9);
    }

    #[test]
    fn violation_amounts() {
        let mut inst = tiny(10.0, 1.0, 2.0, 20.0, 3.0, [4.0, 6.0]);
        inst.resource_use = vec![vec![2.0]];
        inst.resource_cap = vec![vec![8.0, 8.0]];
        let s = derive_schedule(&[vec![5.0, 0.0]], &inst);
        let v = constraint_violations(&s, &inst);
        assert_eq!(v.resource[0][0], 2.0); // 2*5 - 8
        assert_eq!(v.resource[0][1], 0.0);
        assert!(!v.is_zero());

        // inventory 7 against storage cap 5
        let mut inst = tiny(10.0, 1.0, 2.0, 20.0, 3.0, [0.0, 0.0]);
        inst.storage_cap = vec![5.0, 5.0];
        inst.resource_cap = vec![vec![1000.0, 1000.0]];
        let s = derive_schedule(&[vec![7.0, 0.0]], &inst);
        let v = constraint_violations(&s, &inst);
        assert_eq!(v.storage[0], 2.0);

        // a comfortably feasible plan reports all zeros
        let inst = tiny(10.0, 1.0, 2.0, 20.0, 3.0, [4.0, 6.0]);
        let s = derive_schedule(&[vec![4.0, 6.0]], &inst);
        assert!(constraint_violations(&s, &inst).is_zero());
    }

    #[test]
    fn penalty_formula_and_monotonicity() {
        let inst = tiny(10.0, 1.0, 2.0, 20.0, 3.0, [4.0, 6.0]);
        let feasible = penalized_fitness(&[4.0, 6.0], &inst, 1e6).unwrap();
        assert!(feasible.feasible);
        assert_eq!(feasible.penalized_cost, feasible.raw_objective);

        let mut strained = tiny(10.0, 1.0, 2.0, 20.0, 3.0, [4.0, 6.0]);
        strained.resource_use = vec![vec![2.0]];
        strained.resource_cap = vec![vec![8.0, 1000.0]];
        // x=5 in period 1: violation 2 at weight 1000 adds 4000
        let eval = penalized_fitness(&[5.0, 0.0], &strained, 1000.0).unwrap();
        assert!(!eval.feasible);
        assert_eq!(eval.penalized_cost, eval.raw_objective + 4000.0);
        let heavier = penalized_fitness(&[5.0, 0.0], &strained, 2000.0).unwrap();
        assert!(heavier.penalized_cost > eval.penalized_cost);
    }

    #[test]
    fn generated_defaults_are_three_products_five_periods() {
        let inst = generate_instance(7, 3, 5, 2, &InstanceRanges::default()).unwrap();
        assert_eq!(inst.n_products, 3);
        assert_eq!(inst.n_periods, 5);
        assert_eq!(inst.n_resources, 2);
        assert!(validate_instance(&inst).is_empty());
        let again = generate_instance(7, 3, 5, 2, &InstanceRanges::default()).unwrap();
        assert_eq!(inst, again);
        let different = generate_instance(8, 3, 5, 2, &InstanceRanges::default()).unwrap();
        assert_ne!(inst, different);
    }

    #[test]
    fn produce_to_demand_is_feasible_on_generated_instances() {
        for seed in 0..20 {
            let inst = generate_instance(seed, 3, 5, 2, &InstanceRanges::default()).unwrap();
            let x = inst.demand.clone();
            let s = derive_schedule(&x, &inst);
            let v = constraint_violations(&s, &inst);
            assert!(v.is_zero(), "seed {seed}: {v:?}");
        }
    }

    #[test]
    fn zero_demand_makes_the_zero_plan_optimal() {
        let mut ranges = InstanceRanges::default();
        ranges.demand = Span::new(0.0, 0.0);
        let inst = generate_instance(3, 2, 3, 1, &ranges).unwrap();
        let zero = penalized_fitness(&vec![0.0; 6], &inst, 1e6).unwrap();
        assert!(zero.feasible);
        assert_eq!(zero.penalized_cost, 0.0);
        // nothing sells, so any production only adds cost
        let busy = penalized_fitness(&vec![1.0; 6], &inst, 1e6).unwrap();
        assert!(busy.penalized_cost > 0.0);
    }

    #[test]
    fn generator_rejects_bad_input() {
        let mut ranges = InstanceRanges::default();
        ranges.demand = Span::new(5.0, 2.0);
        let err = generate_instance(1, 3, 5, 2, &ranges).unwrap_err();
        assert!(err.to_string().contains("demand"), "{err}");
        assert!(generate_instance(1, 0, 5, 2, &InstanceRanges::default()).is_err());
        let mut slack = InstanceRanges::default();
        slack.capacity_slack = Span::new(1.0, 1.6);
        assert!(generate_instance(1, 3, 5, 2, &slack).is_err());
    }

    #[test]
    fn validator_names_defective_fields() {
        let mut inst = generate_instance(9, 2, 2, 1, &InstanceRanges::default()).unwrap();
        assert!(validate_instance(&inst).is_empty());
        inst.demand[1][0] = -3.0;
        inst.big_m = 0.5;
        let defects = validate_instance(&inst);
        assert!(defects.iter().any(|d| d.starts_with("demand[1][0]")), "{defects:?}");
        assert!(defects.iter().any(|d| d.starts_with("big_m")), "{defects:?}");
    }

    #[test]
    fn instance_file_round_trips_byte_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("instance.json");
        let inst = generate_instance(21, 3, 5, 2, &InstanceRanges::default()).unwrap();
        inst.write_json(&path).unwrap();
        let read = LotSizingInstance::read_json(&path).unwrap();
        assert_eq!(inst, read);
        let bytes_a = std::fs::read(&path).unwrap();
        read.write_json(&path).unwrap();
        let bytes_b = std::fs::read(&path).unwrap();
        assert_eq!(bytes_a, bytes_b);
        assert_eq!(inst.content_hash(), read.content_hash());
    }

    #[test]
    fn reader_rejects_dimension_mismatch_and_bad_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("instance.json");
        let inst = generate_instance(4, 2, 3, 1, &InstanceRanges::default()).unwrap();

        let mut broken = inst.clone();
        broken.demand.pop();
        broken.write_json(&path).unwrap();
        match LotSizingInstance::read_json(&path) {
            Err(Error::Validation { defects, .. }) => {
                assert!(defects.iter().any(|d| d.starts_with("demand")), "{defects:?}")
            }
            other => panic!("expected validation failure, got {other:?}"),
        }

        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("\"schema_version\": 1", "\"schema_version\": 99"))
            .unwrap();
        match LotSizingInstance::read_json(&path) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("schema_version")),
            other => panic!("expected parse failure, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn random_habitats_satisfy_balance_and_sales_identity(seed in 0u64..200) {
            use rand::{RngExt, SeedableRng};
            let inst = generate_instance(11, 2, 4, 1, &InstanceRanges::default()).unwrap();
            let space = inst.search_space().unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let habitat: Vec<f64> = (0..space.dim())
                .map(|j| rng.random_range(space.lower()[j] - 2.0..=space.upper()[j] + 2.0))
                .collect();
            let x = decode(&habitat, &inst).unwrap();
            let s = derive_schedule(&x, &inst);
            for i in 0..inst.n_products {
                let mut back_prev = 0.0;
                for j in 0..inst.n_periods {
                    prop_assert!(s.balance_residual(&inst, i, j).abs() <= 1e-9);
                    prop_assert!(s.sales[i][j] >= 0.0 && s.inventory[i][j] >= 0.0 && s.backorder[i][j] >= 0.0);
                    let expected = if s.backorder[i][j] == 0.0 {
                        inst.demand[i][j] + inst.carry_fraction[i][j] * back_prev
                    } else {
                        (inst.demand[i][j] - s.backorder[i][j])
                            + inst.carry_fraction[i][j] * back_prev
                    };
                    prop_assert_eq!(s.sales[i][j], expected.max(0.0));
                    back_prev = s.backorder[i][j];
                }
            }
        }

        #[test]
        fn penalized_never_below_raw(seed in 0u64..200) {
            use rand::{RngExt, SeedableRng};
            let mut ranges = InstanceRanges::default();
            ranges.capacity_slack = Span::new(1.2, 1.2);
            let inst = generate_instance(13, 2, 3, 2, &ranges).unwrap();
            let space = inst.search_space().unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let habitat = space.sample_uniform(&mut rng);
            let eval = penalized_fitness(&habitat, &inst, DEFAULT_PENALTY_WEIGHT).unwrap();
            prop_assert!(eval.penalized_cost >= eval.raw_objective);
            prop_assert_eq!(eval.feasible, eval.penalized_cost == eval.raw_objective);
            prop_assert_eq!(eval.feasible, eval.violations.is_zero());
        }
    }
}
