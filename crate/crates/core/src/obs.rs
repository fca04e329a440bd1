//! Per-agent observation vectors.
//!
//! Every observation is a sequence of `K`-wide blocks, so a single product's
//! view is recovered by taking entry `k` of each block ([`product_slice`]).
//! Store blocks are scaled by the store's shelf capacity, warehouse blocks
//! by the warehouse capacity.

use crate::config::ChainConfig;
use crate::tables::{EnvTables, STORE, WAREHOUSE};

/// What the warehouse agent sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WarehouseView {
    /// On-hand, own order history and every store's request history.
    #[default]
    Enhanced,
    /// On-hand and own order history only.
    Limited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ObsLayout {
    pub warehouse: WarehouseView,
    /// Stores additionally see the demand that will materialize one lead
    /// time ahead.
    pub oracle_demand: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservationSet {
    pub warehouse: Vec<f64>,
    pub stores: Vec<Vec<f64>>,
}

pub fn store_observation_len(cfg: &ChainConfig, store: usize, oracle: bool) -> usize {
    cfg.num_products * (1 + cfg.store_lead_times[store] + oracle as usize)
}

pub fn warehouse_observation_len(cfg: &ChainConfig, view: WarehouseView) -> usize {
    let m = cfg.history_len;
    match view {
        WarehouseView::Enhanced => cfg.num_products * (1 + m + cfg.num_stores * m),
        WarehouseView::Limited => cfg.num_products * (1 + m),
    }
}

/// `[x_v(t); r_v(t-1); ...; r_v(t-l_v)]`, plus `D(t + l_v)` for the oracle.
/// History before `t = 0` and demand past the horizon read as zero.
pub fn build_store_observation(
    cfg: &ChainConfig,
    tables: &EnvTables,
    store: usize,
    oracle: bool,
    out: &mut Vec<f64>,
) {
    let t = tables.clock;
    let caps = &cfg.store_capacity[store];
    let scaled = |q: i64, p: usize| q as f64 / caps[p] as f64;
    out.clear();
    out.extend(
        tables
            .on_hand
            .slice(t, store, STORE)
            .iter()
            .enumerate()
            .map(|(p, &x)| scaled(x, p)),
    );
    for i in 1..=cfg.store_lead_times[store] {
        push_history(out, t, i, cfg.num_products, |s| {
            tables.accepted.slice(s, store, STORE)
        }, caps);
    }
    if oracle {
        let ahead = t + cfg.store_lead_times[store];
        if ahead < tables.horizon() {
            out.extend(
                tables
                    .demand
                    .row(ahead, store)
                    .iter()
                    .enumerate()
                    .map(|(p, &d)| scaled(d, p)),
            );
        } else {
            out.extend(std::iter::repeat_n(0.0, cfg.num_products));
        }
    }
}

/// `[x_wh(t); r_wh(t-1..t-m); r̂_v(t-1..t-m) for each store]`, the last group
/// only for [`WarehouseView::Enhanced`].
pub fn build_warehouse_observation(
    cfg: &ChainConfig,
    tables: &EnvTables,
    view: WarehouseView,
    out: &mut Vec<f64>,
) {
    let t = tables.clock;
    let caps = &cfg.warehouse_capacity;
    let k = cfg.num_products;
    out.clear();
    out.extend(
        tables
            .on_hand
            .slice(t, 0, WAREHOUSE)
            .iter()
            .enumerate()
            .map(|(p, &x)| x as f64 / caps[p] as f64),
    );
    for i in 1..=cfg.history_len {
        push_history(out, t, i, k, |s| tables.accepted.slice(s, 0, WAREHOUSE), caps);
    }
    if view == WarehouseView::Enhanced {
        for v in 0..cfg.num_stores {
            for i in 1..=cfg.history_len {
                push_history(out, t, i, k, |s| tables.requested.slice(s, v, STORE), caps);
            }
        }
    }
}

pub fn build_observations(cfg: &ChainConfig, tables: &EnvTables, layout: ObsLayout) -> ObservationSet {
    let mut set = ObservationSet {
        warehouse: Vec::with_capacity(warehouse_observation_len(cfg, layout.warehouse)),
        stores: Vec::with_capacity(cfg.num_stores),
    };
    build_warehouse_observation(cfg, tables, layout.warehouse, &mut set.warehouse);
    for v in 0..cfg.num_stores {
        let mut obs = Vec::with_capacity(store_observation_len(cfg, v, layout.oracle_demand));
        build_store_observation(cfg, tables, v, layout.oracle_demand, &mut obs);
        set.stores.push(obs);
    }
    set
}

/// Entry `product` of every `num_products`-wide block.
pub fn product_slice(obs: &[f64], num_products: usize, product: usize) -> Vec<f64> {
    obs.iter()
        .skip(product)
        .step_by(num_products)
        .copied()
        .collect()
}

fn push_history<'a>(
    out: &mut Vec<f64>,
    t: usize,
    lag: usize,
    k: usize,
    read: impl FnOnce(usize) -> &'a [i64],
    caps: &[i64],
) {
    if t >= lag {
        out.extend(
            read(t - lag)
                .iter()
                .zip(caps)
                .map(|(&q, &c)| q as f64 / c as f64),
        );
    } else {
        out.extend(std::iter::repeat_n(0.0, k));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, k: usize, lead: usize, m: usize) -> ChainConfig {
        let mut c = ChainConfig::divergent(n, k);
        c.store_lead_times = vec![lead; n];
        c.warehouse_lead_time = lead;
        c.history_len = m;
        c
    }

    #[test]
    fn store_lengths() {
        assert_eq!(store_observation_len(&cfg(1, 1, 2, 2), 0, false), 3);
        assert_eq!(store_observation_len(&cfg(1, 10, 2, 2), 0, false), 30);
        assert_eq!(store_observation_len(&cfg(1, 1, 2, 2), 0, true), 4);
    }

    #[test]
    fn warehouse_lengths() {
        let c = cfg(10, 1, 2, 2);
        assert_eq!(warehouse_observation_len(&c, WarehouseView::Enhanced), 23);
        assert_eq!(warehouse_observation_len(&c, WarehouseView::Limited), 3);
    }

    #[test]
    fn cold_start_history_is_zero() {
        let c = cfg(3, 2, 2, 3);
        let tables = EnvTables::new(c.horizon, 3, 2);
        let mut out = Vec::new();
        build_warehouse_observation(&c, &tables, WarehouseView::Enhanced, &mut out);
        assert_eq!(out.len(), warehouse_observation_len(&c, WarehouseView::Enhanced));
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn slices_pick_one_product() {
        let obs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(product_slice(&obs, 2, 0), vec![1.0, 3.0, 5.0]);
        assert_eq!(product_slice(&obs, 2, 1), vec![2.0, 4.0, 6.0]);
    }
}
