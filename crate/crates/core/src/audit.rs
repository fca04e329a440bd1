//! Invariant checks over completed periods.

use crate::config::ChainConfig;
use crate::reward::sum_rewards;
use crate::tables::{EnvTables, VertexTable, STORE, WAREHOUSE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Invariant {
    Conservation,
    InTransitIdentity,
    AllocationFeasibility,
    WarehouseReplication,
    RewardDecomposition,
    NonNegativity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub invariant: Invariant,
    pub t: usize,
    pub detail: String,
}

/// Checks every invariant that involves period `t` (which must be
/// completed, i.e. `t < tables.clock`).
pub fn check_period(cfg: &ChainConfig, tables: &EnvTables, t: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = cfg.num_stores;
    let k = cfg.num_products;
    let mut fail = |invariant, detail: String| out.push(Violation { invariant, t, detail });

    for p in 0..k {
        // Allocation feasibility.
        let stock = tables.on_hand.get(t, 0, WAREHOUSE, p);
        let mut shipped = 0;
        for v in 0..n {
            let r = tables.accepted.get(t, v, STORE, p);
            let req = tables.requested.get(t, v, STORE, p);
            if r > req {
                fail(Invariant::AllocationFeasibility, format!("store {v} product {p}: accepted {r} > requested {req}"));
            }
            shipped += r;
        }
        if shipped > stock {
            fail(Invariant::AllocationFeasibility, format!("product {p}: shipped {shipped} > stock {stock}"));
        }

        // Conservation, stores.
        for v in 0..n {
            let lead = cfg.store_lead_times[v];
            let arrival = if t >= lead { tables.accepted.get(t - lead, v, STORE, p) } else { 0 };
            let expected = (tables.on_hand.get(t, v, STORE, p) - tables.sales.get(t, v, STORE, p) + arrival)
                .min(cfg.store_capacity[v][p]);
            let got = tables.on_hand.get(t + 1, v, STORE, p);
            if got != expected {
                fail(Invariant::Conservation, format!("store {v} product {p}: {got} != {expected}"));
            }
            let total = got + tables.discarded.get(t, v, STORE, p);
            let raw = tables.on_hand.get(t, v, STORE, p) - tables.sales.get(t, v, STORE, p) + arrival;
            if total != raw {
                fail(Invariant::Conservation, format!("store {v} product {p}: kept + discarded {total} != {raw}"));
            }
        }
        // Conservation, warehouse.
        let lead = cfg.warehouse_lead_time;
        let arrival = if t >= lead { tables.accepted.get(t - lead, 0, WAREHOUSE, p) } else { 0 };
        let raw = stock - shipped + arrival;
        let got = tables.on_hand.get(t + 1, 0, WAREHOUSE, p);
        if got != raw.min(cfg.warehouse_capacity[p]) || got + tables.discarded.get(t, 0, WAREHOUSE, p) != raw {
            fail(Invariant::Conservation, format!("warehouse product {p}: {got} from raw {raw}"));
        }
    }

    // In-transit identity at t + 1.
    let s = t + 1;
    let window = |table: &VertexTable, row, col, p, lead: usize| -> i64 {
        (1..=lead).filter(|&i| s >= i).map(|i| table.get(s - i, row, col, p)).sum()
    };
    for p in 0..k {
        for v in 0..n {
            let want = window(&tables.accepted, v, STORE, p, cfg.store_lead_times[v]);
            let got = tables.in_transit.get(s, v, STORE, p);
            if got != want {
                fail(Invariant::InTransitIdentity, format!("store {v} product {p}: {got} != {want}"));
            }
        }
        let want = window(&tables.accepted, 0, WAREHOUSE, p, cfg.warehouse_lead_time);
        let got = tables.in_transit.get(s, 0, WAREHOUSE, p);
        if got != want {
            fail(Invariant::InTransitIdentity, format!("warehouse product {p}: {got} != {want}"));
        }
    }

    // Warehouse replication across rows, for both t and t + 1.
    for table in [&tables.on_hand, &tables.in_transit, &tables.requested, &tables.accepted] {
        for time in [t, t + 1] {
            let first = table.slice(time, 0, WAREHOUSE);
            for v in 1..n {
                if table.slice(time, v, WAREHOUSE) != first {
                    fail(Invariant::WarehouseReplication, format!("row {v} differs at t = {time}"));
                }
            }
        }
    }

    // Reward decomposition, bit-exact.
    let locals = tables.local_rewards_at(t);
    let sum = sum_rewards(locals);
    if sum.to_bits() != tables.reward[t].to_bits() {
        fail(Invariant::RewardDecomposition, format!("sum of locals {sum} != shared {}", tables.reward[t]));
    }
    let eq7 = tables.components[t].shared_reward();
    if (eq7 - tables.reward[t]).abs() > 1e-12 * eq7.abs().max(1.0) {
        fail(Invariant::RewardDecomposition, format!("components give {eq7}, shared is {}", tables.reward[t]));
    }

    // Non-negativity over the rows this period touched.
    let rows: [(&str, &VertexTable, usize); 6] = [
        ("on_hand", &tables.on_hand, t + 1),
        ("in_transit", &tables.in_transit, t + 1),
        ("requested", &tables.requested, t),
        ("accepted", &tables.accepted, t),
        ("sales", &tables.sales, t),
        ("discarded", &tables.discarded, t),
    ];
    for (name, table, time) in rows {
        for v in 0..n {
            for col in [WAREHOUSE, STORE] {
                if table.slice(time, v, col).iter().any(|&x| x < 0) {
                    fail(Invariant::NonNegativity, format!("{name} row {v} col {col}"));
                }
            }
        }
    }
    if tables.demand.row(t, 0).iter().chain((1..n).flat_map(|v| tables.demand.row(t, v))).any(|&d| d < 0) {
        fail(Invariant::NonNegativity, "demand".into());
    }
    out
}

/// All completed periods.
pub fn check_episode(cfg: &ChainConfig, tables: &EnvTables) -> Vec<Violation> {
    (0..tables.clock).flat_map(|t| check_period(cfg, tables, t)).collect()
}
