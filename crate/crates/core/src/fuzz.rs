//! Random configurations and actions for property tests and fuzz campaigns.

use rand::Rng;

use crate::action::ActionSet;
use crate::config::ChainConfig;

/// A small random but valid chain. Economic constants are drawn from
/// continuous ranges so reward sums exercise real rounding.
pub fn random_config<R: Rng + ?Sized>(rng: &mut R) -> ChainConfig {
    let n = rng.random_range(1..=5);
    let k = rng.random_range(1..=5);
    let store_lead_times: Vec<usize> = (0..n).map(|_| rng.random_range(1..=4)).collect();
    let warehouse_lead_time = rng.random_range(1..=4);
    let max_lead = *store_lead_times.iter().max().unwrap().max(&warehouse_lead_time);
    let store_capacity: Vec<Vec<i64>> = (0..n)
        .map(|_| (0..k).map(|_| rng.random_range(1..=80)).collect())
        .collect();
    let warehouse_capacity: Vec<i64> = (0..k).map(|_| rng.random_range(1..=200)).collect();
    let mut initial_inventory = vec![warehouse_capacity.iter().map(|&c| rng.random_range(0..=c)).collect::<Vec<_>>()];
    for caps in &store_capacity {
        initial_inventory.push(caps.iter().map(|&c| rng.random_range(0..=c)).collect());
    }
    let cfg = ChainConfig {
        num_stores: n,
        num_products: k,
        horizon: rng.random_range(1..=12),
        store_lead_times,
        warehouse_lead_time,
        history_len: max_lead + rng.random_range(0..=2),
        store_capacity,
        warehouse_capacity,
        selling_price: (0..k).map(|_| (0..n).map(|_| rng.random_range(0.1..20.0)).collect()).collect(),
        holding_cost: (0..k).map(|_| (0..=n).map(|_| rng.random_range(0.01..2.0)).collect()).collect(),
        procurement_cost: (0..k).map(|_| rng.random_range(0.1..10.0)).collect(),
        unfulfilled_penalty_coeff: rng.random_range(0.0..50.0),
        demand_mean: (0..n).map(|_| (0..k).map(|_| rng.random_range(0.0..40.0)).collect()).collect(),
        action_levels: rng.random_range(0..=8),
        batch_size: rng.random_range(1..=6),
        initial_inventory,
    };
    debug_assert!(cfg.validate().is_ok());
    cfg
}

/// Uniform levels for every head of every agent.
pub fn random_action<R: Rng + ?Sized>(cfg: &ChainConfig, rng: &mut R) -> ActionSet {
    let nk = cfg.num_stores * cfg.num_products;
    let mut levels = |len: usize| -> Vec<usize> {
        (0..len).map(|_| rng.random_range(0..=cfg.action_levels)).collect()
    };
    let store = levels(nk);
    let wh = levels(cfg.num_products);
    let alloc = levels(nk);
    ActionSet::from_levels(&store, &wh, &alloc, cfg.batch_size)
}
