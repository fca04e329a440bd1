//! Environment parameterization.
//!
//! Vertex numbering is shared by every per-vertex field and by the trace
//! export: vertex `0` is the warehouse and vertex `v + 1` is store `v`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ConfigError;

/// Poisson means inside this closed range are the reference demand regime.
pub const DEFAULT_DEMAND_RANGE: (f64, f64) = (10.0, 1000.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub num_stores: usize,
    pub num_products: usize,
    /// Periods per episode.
    pub horizon: usize,
    /// `[store]`, periods.
    pub store_lead_times: Vec<usize>,
    pub warehouse_lead_time: usize,
    /// Number of past periods visible in the warehouse observation.
    pub history_len: usize,
    /// `[store][product]`, units.
    pub store_capacity: Vec<Vec<i64>>,
    /// `[product]`, units.
    pub warehouse_capacity: Vec<i64>,
    /// `[product][store]`, currency per unit sold.
    pub selling_price: Vec<Vec<f64>>,
    /// `[product][vertex]`, currency per unit held; vertex 0 is the warehouse.
    pub holding_cost: Vec<Vec<f64>>,
    /// `[product]`, currency per unit received by the warehouse.
    pub procurement_cost: Vec<f64>,
    pub unfulfilled_penalty_coeff: f64,
    /// `[store][product]`, Poisson mean per period.
    pub demand_mean: Vec<Vec<f64>>,
    /// Highest order level; levels run over `0..=action_levels`.
    pub action_levels: usize,
    /// Units per order level.
    pub batch_size: i64,
    /// `[vertex][product]`, units on hand at `t = 0`; vertex 0 is the warehouse.
    pub initial_inventory: Vec<Vec<i64>>,
}

impl ChainConfig {
    /// A divergent chain with homogeneous stores and products.
    ///
    /// Defaults: `T = 30`, every lead time 2, `m` = largest lead time,
    /// Poisson mean 10, store shelves of 60 units, warehouse shelves of
    /// `50 * N`, price 10, procurement cost 4, holding cost 0.1 and an
    /// unfulfilled penalty of `50 * 0.1`. `n = 20` order levels with the
    /// batch size picked so that `n * b` is about twice the largest capacity.
    pub fn divergent(num_stores: usize, num_products: usize) -> Self {
        let n = num_stores;
        let k = num_products;
        let holding = 0.1;
        let store_cap = 60;
        let wh_cap = 50 * n as i64;
        let mut cfg = Self {
            num_stores: n,
            num_products: k,
            horizon: 30,
            store_lead_times: vec![2; n],
            warehouse_lead_time: 2,
            history_len: 2,
            store_capacity: vec![vec![store_cap; k]; n],
            warehouse_capacity: vec![wh_cap; k],
            selling_price: vec![vec![10.0; n]; k],
            holding_cost: vec![vec![holding; n + 1]; k],
            procurement_cost: vec![4.0; k],
            unfulfilled_penalty_coeff: 50.0 * holding,
            demand_mean: vec![vec![10.0; k]; n],
            action_levels: 20,
            batch_size: 1,
            initial_inventory: std::iter::once(vec![20 * n as i64; k])
                .chain(std::iter::repeat_n(vec![20; k], n))
                .collect(),
        };
        cfg.batch_size = default_batch_size(&cfg);
        cfg
    }

    pub fn max_lead_time(&self) -> usize {
        self.store_lead_times
            .iter()
            .copied()
            .chain(std::iter::once(self.warehouse_lead_time))
            .max()
            .unwrap_or(0)
    }

    /// Largest order expressible on the action grid.
    pub fn max_order(&self) -> i64 {
        self.action_levels as i64 * self.batch_size
    }

    pub fn num_vertices(&self) -> usize {
        self.num_stores + 1
    }

    /// Checks every structural and numeric invariant; the first violation
    /// found is reported.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = self.num_stores;
        let k = self.num_products;
        if n == 0 {
            return Err(ConfigError::new("num_stores", "must be at least 1"));
        }
        if k == 0 {
            return Err(ConfigError::new("num_products", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(ConfigError::new("horizon", "must be at least 1"));
        }
        check_len("store_lead_times", self.store_lead_times.len(), n)?;
        for (v, &l) in self.store_lead_times.iter().enumerate() {
            if l == 0 {
                return Err(ConfigError::new(
                    format!("store_lead_times[{v}]"),
                    "lead time must be at least 1",
                ));
            }
        }
        if self.warehouse_lead_time == 0 {
            return Err(ConfigError::new(
                "warehouse_lead_time",
                "lead time must be at least 1",
            ));
        }
        if self.history_len < self.max_lead_time() {
            return Err(ConfigError::new(
                "history_len",
                format!(
                    "{} is shorter than the largest lead time {}",
                    self.history_len,
                    self.max_lead_time()
                ),
            ));
        }
        check_matrix("store_capacity", &self.store_capacity, n, k, |c| *c > 0, "capacity must be positive")?;
        check_vector("warehouse_capacity", &self.warehouse_capacity, k, |c| *c > 0, "capacity must be positive")?;
        check_matrix("selling_price", &self.selling_price, k, n, positive_real, "price must be positive and finite")?;
        check_matrix("holding_cost", &self.holding_cost, k, n + 1, positive_real, "cost must be positive and finite")?;
        check_vector("procurement_cost", &self.procurement_cost, k, positive_real, "cost must be positive and finite")?;
        if !(self.unfulfilled_penalty_coeff.is_finite() && self.unfulfilled_penalty_coeff >= 0.0) {
            return Err(ConfigError::new(
                "unfulfilled_penalty_coeff",
                "must be finite and non-negative",
            ));
        }
        check_matrix(
            "demand_mean",
            &self.demand_mean,
            n,
            k,
            |m| m.is_finite() && *m >= 0.0 && *m <= MAX_DEMAND_MEAN,
            "Poisson mean must be finite, non-negative and at most 1e9",
        )?;
        if self.batch_size < 1 {
            return Err(ConfigError::new("batch_size", "must be at least 1"));
        }
        if (self.action_levels as i128) * (self.batch_size as i128) > MAX_ORDER as i128 {
            return Err(ConfigError::new(
                "batch_size",
                "action_levels * batch_size exceeds the supported order size",
            ));
        }
        check_len("initial_inventory", self.initial_inventory.len(), n + 1)?;
        for (w, row) in self.initial_inventory.iter().enumerate() {
            check_len(&format!("initial_inventory[{w}]"), row.len(), k)?;
            for (p, &x) in row.iter().enumerate() {
                let cap = if w == 0 {
                    self.warehouse_capacity[p]
                } else {
                    self.store_capacity[w - 1][p]
                };
                if x < 0 || x > cap {
                    return Err(ConfigError::new(
                        format!("initial_inventory[{w}][{p}]"),
                        format!("{x} is outside [0, {cap}]"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Positions `(store, product)` whose Poisson mean lies outside the
    /// reference range `[10, 1000]`. Such means are accepted but flagged.
    pub fn nondefault_demand(&self) -> Vec<(usize, usize)> {
        let (lo, hi) = DEFAULT_DEMAND_RANGE;
        let mut out = Vec::new();
        for (v, row) in self.demand_mean.iter().enumerate() {
            for (k, &mu) in row.iter().enumerate() {
                if !(lo..=hi).contains(&mu) {
                    out.push((v, k));
                }
            }
        }
        out
    }

    /// Hex SHA-256 of the canonical TOML rendering. Checkpoints carry this
    /// to refuse loading against a different environment.
    pub fn fingerprint(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Batch size such that `n * b` is roughly twice the largest shelf capacity.
pub fn default_batch_size(cfg: &ChainConfig) -> i64 {
    let max_cap = cfg
        .store_capacity
        .iter()
        .flatten()
        .chain(cfg.warehouse_capacity.iter())
        .copied()
        .max()
        .unwrap_or(1);
    let n = cfg.action_levels.max(1) as i64;
    ((2 * max_cap + n - 1) / n).max(1)
}

const MAX_ORDER: i64 = 1 << 40;
const MAX_DEMAND_MEAN: f64 = 1e9;

fn positive_real(x: &f64) -> bool {
    x.is_finite() && *x > 0.0
}

fn check_len(field: &str, got: usize, want: usize) -> Result<(), ConfigError> {
    if got != want {
        return Err(ConfigError::new(
            field,
            format!("expected {want} entries, found {got}"),
        ));
    }
    Ok(())
}

fn check_vector<T: std::fmt::Debug>(
    field: &str,
    values: &[T],
    len: usize,
    ok: impl Fn(&T) -> bool,
    reason: &str,
) -> Result<(), ConfigError> {
    check_len(field, values.len(), len)?;
    for (i, x) in values.iter().enumerate() {
        if !ok(x) {
            return Err(ConfigError::new(
                format!("{field}[{i}]"),
                format!("{reason} (got {x:?})"),
            ));
        }
    }
    Ok(())
}

fn check_matrix<T: std::fmt::Debug>(
    field: &str,
    values: &[Vec<T>],
    rows: usize,
    cols: usize,
    ok: impl Fn(&T) -> bool,
    reason: &str,
) -> Result<(), ConfigError> {
    check_len(field, values.len(), rows)?;
    for (i, row) in values.iter().enumerate() {
        check_vector(&format!("{field}[{i}]"), row, cols, &ok, reason)?;
    }
    Ok(())
}
