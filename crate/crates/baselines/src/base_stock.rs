//! Echelon base-stock ordering.
//!
//! Every vertex `w` orders `max(0, z_w - position_w)`, rounded to the action
//! grid. A store's position is its own on-hand plus in-transit minus the
//! demand it has failed to serve so far this episode. The warehouse's
//! position adds every store position to its own on-hand plus in-transit
//! minus the store requests it has failed to fill. The warehouse ships what
//! is requested and lets the environment ration.

use serde::{Deserialize, Serialize};

use echelon_core::tables::{STORE, WAREHOUSE};
use echelon_core::{ActionSet, ChainConfig, Env, Policy};

/// Base-stock levels `z[vertex][product]`, vertex 0 being the warehouse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseStockParams {
    pub z: Vec<Vec<f64>>,
}

impl BaseStockParams {
    /// Mean demand over one lead time plus one review period for stores;
    /// the warehouse covers its own lead time over total store demand on
    /// top of the store levels.
    pub fn initial(cfg: &ChainConfig) -> Self {
        let k = cfg.num_products;
        let mut z = vec![vec![0.0; k]; cfg.num_vertices()];
        for v in 0..cfg.num_stores {
            for p in 0..k {
                let mu = cfg.demand_mean[v][p];
                z[v + 1][p] = mu * (cfg.store_lead_times[v] + 1) as f64;
                z[0][p] += mu * (cfg.warehouse_lead_time + 1) as f64 + z[v + 1][p];
            }
        }
        Self { z }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.z.iter().flatten().copied().collect()
    }

    pub fn from_flat(cfg: &ChainConfig, flat: &[f64]) -> Self {
        assert_eq!(flat.len(), cfg.num_vertices() * cfg.num_products);
        Self {
            z: flat.chunks(cfg.num_products).map(<[f64]>::to_vec).collect(),
        }
    }

    pub fn validate(&self, cfg: &ChainConfig) -> Result<(), String> {
        if self.z.len() != cfg.num_vertices() || self.z.iter().any(|r| r.len() != cfg.num_products) {
            return Err(format!(
                "base_stock.z must be {} rows of {} levels",
                cfg.num_vertices(),
                cfg.num_products
            ));
        }
        for (w, row) in self.z.iter().enumerate() {
            for (p, &z) in row.iter().enumerate() {
                if !(z.is_finite() && z >= 0.0) {
                    return Err(format!("base_stock.z.{w}.{p} must be finite and non-negative, got {z}"));
                }
            }
        }
        Ok(())
    }
}

/// `max(0, z - position)` rounded to the nearest multiple of `batch` and
/// clamped to `[0, levels * batch]`.
pub fn base_stock_order(z: f64, position: f64, batch: i64, levels: usize) -> i64 {
    let gap = (z - position).max(0.0);
    let steps = (gap / batch as f64).round().min(levels as f64);
    steps as i64 * batch
}

/// Stateful policy: tracks unmet demand since the last reset.
#[derive(Debug, Clone)]
pub struct BaseStockPolicy {
    params: BaseStockParams,
    /// Cumulative unmet quantity per `[vertex][product]`.
    unmet: Vec<Vec<i64>>,
    /// Periods already folded into `unmet`.
    seen: usize,
}

impl BaseStockPolicy {
    pub fn new(params: BaseStockParams) -> Self {
        let unmet = params.z.iter().map(|r| vec![0; r.len()]).collect();
        Self {
            params,
            unmet,
            seen: 0,
        }
    }

    pub fn params(&self) -> &BaseStockParams {
        &self.params
    }

    pub fn unmet(&self) -> &[Vec<i64>] {
        &self.unmet
    }

    fn absorb(&mut self, env: &Env) {
        let tables = env.tables();
        if tables.clock < self.seen {
            self.reset();
        }
        let cfg = env.config();
        for t in self.seen..tables.clock {
            for v in 0..cfg.num_stores {
                for p in 0..cfg.num_products {
                    let lost = tables.demand.get(t, v, p) - tables.sales.get(t, v, STORE, p);
                    let short = tables.requested.get(t, v, STORE, p) - tables.accepted.get(t, v, STORE, p);
                    self.unmet[v + 1][p] += lost;
                    self.unmet[0][p] += short;
                }
            }
        }
        self.seen = tables.clock;
    }
}

impl Policy for BaseStockPolicy {
    fn reset(&mut self) {
        self.unmet.iter_mut().flatten().for_each(|u| *u = 0);
        self.seen = 0;
    }

    fn act(&mut self, env: &Env) -> ActionSet {
        self.absorb(env);
        let cfg = env.config();
        let tables = env.tables();
        let t = tables.clock;
        let (n, k) = (cfg.num_stores, cfg.num_products);
        let mut store_requests = vec![0; n * k];
        let mut warehouse_request = vec![0; k];
        for p in 0..k {
            let mut echelon = 0.0;
            for v in 0..n {
                let pos = (tables.on_hand.get(t, v, STORE, p) + tables.in_transit.get(t, v, STORE, p)
                    - self.unmet[v + 1][p]) as f64;
                echelon += pos;
                store_requests[v * k + p] =
                    base_stock_order(self.params.z[v + 1][p], pos, cfg.batch_size, cfg.action_levels);
            }
            let own = (tables.on_hand.get(t, 0, WAREHOUSE, p) + tables.in_transit.get(t, 0, WAREHOUSE, p)
                - self.unmet[0][p]) as f64;
            warehouse_request[p] =
                base_stock_order(self.params.z[0][p], own + echelon, cfg.batch_size, cfg.action_levels);
        }
        ActionSet::pass_through(store_requests, warehouse_request)
    }
}
