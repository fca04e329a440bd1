//! Element-at-a-time reference implementation of [`Env::step`].
//!
//! Every quantity is read and written through the four-index table
//! accessors with explicit `(store, product)` loops and no shared helpers
//! from the batched path. Floating-point sums follow the same index order as
//! [`crate::reward`], so the two paths must agree bit for bit.

use crate::action::ActionSet;
use crate::env::{Env, StepOutcome};
use crate::error::EnvError;
use crate::obs::{ObservationSet, WarehouseView};
use crate::reward::RewardComponents;
use crate::tables::{STORE, WAREHOUSE};

/// Advances `env` by one period using plain nested loops.
pub fn scalar_reference_step(env: &mut Env, actions: &ActionSet) -> Result<StepOutcome, EnvError> {
    let cfg = env.cfg.clone();
    let n = cfg.num_stores;
    let k = cfg.num_products;
    let t = env.tables.clock;
    if t >= cfg.horizon {
        return Err(EnvError::EpisodeComplete { horizon: cfg.horizon });
    }
    actions.validate(&cfg)?;
    let tb = &mut env.tables;

    // Sales.
    for v in 0..n {
        for p in 0..k {
            let x = tb.on_hand.get(t, v, STORE, p);
            let d = tb.demand.get(t, v, p);
            tb.sales.set(t, v, STORE, p, if d < x { d } else { x });
        }
    }

    // Allocation, one product at a time.
    let mut accepted = vec![vec![0i64; k]; n];
    for p in 0..k {
        let stock = tb.on_hand.get(t, 0, WAREHOUSE, p);
        let mut total = 0i64;
        for v in 0..n {
            let req = actions.store_requests[v * k + p];
            let prop = actions.warehouse_allocations[v * k + p];
            accepted[v][p] = if prop < req { prop } else { req };
            total += accepted[v][p];
        }
        if total > stock {
            let mut rem = vec![0i128; n];
            let mut granted = 0i64;
            for v in 0..n {
                let num = accepted[v][p] as i128 * stock as i128;
                accepted[v][p] = (num / total as i128) as i64;
                rem[v] = num % total as i128;
                granted += accepted[v][p];
            }
            let mut taken = vec![false; n];
            for _ in 0..(stock - granted) {
                let mut best: Option<usize> = None;
                for v in 0..n {
                    if taken[v] {
                        continue;
                    }
                    match best {
                        Some(b) if rem[v] <= rem[b] => {}
                        _ => best = Some(v),
                    }
                }
                let b = best.expect("leftover units never exceed store count");
                taken[b] = true;
                accepted[b][p] += 1;
            }
        }
    }

    for v in 0..n {
        for p in 0..k {
            tb.requested.set(t, v, STORE, p, actions.store_requests[v * k + p]);
            tb.accepted.set(t, v, STORE, p, accepted[v][p]);
            tb.sales.set(t, v, WAREHOUSE, p, accepted[v][p]);
            tb.requested.set(t, v, WAREHOUSE, p, actions.warehouse_request[p]);
            tb.accepted.set(t, v, WAREHOUSE, p, actions.warehouse_request[p]);
        }
    }

    // Stores.
    for v in 0..n {
        let lead = cfg.store_lead_times[v];
        for p in 0..k {
            let arrival = if t >= lead { tb.accepted.get(t - lead, v, STORE, p) } else { 0 };
            let raw = tb.on_hand.get(t, v, STORE, p) - tb.sales.get(t, v, STORE, p) + arrival;
            let cap = cfg.store_capacity[v][p];
            let kept = if raw > cap { cap } else { raw };
            tb.on_hand.set(t + 1, v, STORE, p, kept);
            tb.discarded.set(t, v, STORE, p, raw - kept);
            let transit = tb.in_transit.get(t, v, STORE, p) - arrival + tb.accepted.get(t, v, STORE, p);
            assert!(transit >= 0, "in-transit inventory went negative at store {v}, t = {t}");
            tb.in_transit.set(t + 1, v, STORE, p, transit);
        }
    }

    // Warehouse, written to every row.
    let wh_lead = cfg.warehouse_lead_time;
    for p in 0..k {
        let mut shipped = 0i64;
        for v in 0..n {
            shipped += tb.accepted.get(t, v, STORE, p);
        }
        let arrival = if t >= wh_lead { tb.accepted.get(t - wh_lead, 0, WAREHOUSE, p) } else { 0 };
        let raw = tb.on_hand.get(t, 0, WAREHOUSE, p) - shipped + arrival;
        let cap = cfg.warehouse_capacity[p];
        let kept = if raw > cap { cap } else { raw };
        let transit = tb.in_transit.get(t, 0, WAREHOUSE, p) - arrival + actions.warehouse_request[p];
        assert!(transit >= 0, "in-transit inventory went negative at the warehouse, t = {t}");
        for v in 0..n {
            tb.on_hand.set(t + 1, v, WAREHOUSE, p, kept);
            tb.discarded.set(t, v, WAREHOUSE, p, raw - kept);
            tb.in_transit.set(t + 1, v, WAREHOUSE, p, transit);
        }
    }

    // Reward terms.
    let theta_u = cfg.unfulfilled_penalty_coeff;
    let wh_arrival = |p: usize| if t >= wh_lead { tb.accepted.get(t - wh_lead, 0, WAREHOUSE, p) } else { 0 };

    let mut revenue = 0.0;
    for v in 0..n {
        for p in 0..k {
            revenue += tb.sales.get(t, v, STORE, p) as f64 * cfg.selling_price[p][v];
        }
    }
    let mut holding = 0.0;
    for p in 0..k {
        holding += tb.on_hand.get(t + 1, 0, WAREHOUSE, p) as f64 * cfg.holding_cost[p][0];
    }
    for v in 0..n {
        for p in 0..k {
            holding += tb.on_hand.get(t + 1, v, STORE, p) as f64 * cfg.holding_cost[p][v + 1];
        }
    }
    let mut procurement = 0.0;
    for p in 0..k {
        procurement += wh_arrival(p) as f64 * cfg.procurement_cost[p];
    }
    let mut excess = 0i64;
    for p in 0..k {
        let mut requested = 0i64;
        for v in 0..n {
            requested += tb.requested.get(t, v, STORE, p);
        }
        let gap = requested - tb.on_hand.get(t, 0, WAREHOUSE, p);
        if gap > 0 {
            excess += gap;
        }
    }
    let mut lost = 0i64;
    for v in 0..n {
        for p in 0..k {
            lost += tb.demand.get(t, v, p) - tb.sales.get(t, v, STORE, p);
        }
    }
    let components = RewardComponents {
        sales_revenue: revenue,
        holding_cost: holding,
        procurement_cost: procurement,
        unfulfilled_penalty: theta_u * excess as f64 + theta_u * lost as f64,
    };

    let mut locals = vec![0.0; n + 1];
    let mut wh_hold = 0.0;
    for p in 0..k {
        wh_hold += tb.on_hand.get(t + 1, 0, WAREHOUSE, p) as f64 * cfg.holding_cost[p][0];
    }
    locals[0] = -((procurement + wh_hold) + theta_u * excess as f64);
    for v in 0..n {
        let mut rev = 0.0;
        let mut hold = 0.0;
        let mut short = 0i64;
        for p in 0..k {
            rev += tb.sales.get(t, v, STORE, p) as f64 * cfg.selling_price[p][v];
            hold += tb.on_hand.get(t + 1, v, STORE, p) as f64 * cfg.holding_cost[p][v + 1];
            short += tb.demand.get(t, v, p) - tb.sales.get(t, v, STORE, p);
        }
        locals[v + 1] = rev - hold - theta_u * short as f64;
    }
    let mut shared = 0.0;
    for &r in &locals {
        shared += r;
    }

    tb.components[t] = components;
    tb.reward[t] = shared;
    let w = n + 1;
    tb.local_rewards[t * w..(t + 1) * w].copy_from_slice(&locals);
    tb.clock = t + 1;

    let observations = scalar_observations(env);
    Ok(StepOutcome {
        shared_reward: shared,
        local_rewards: locals,
        components,
        done: env.tables.clock >= cfg.horizon,
        observations,
    })
}

/// Observations built entry by entry.
pub fn scalar_observations(env: &Env) -> ObservationSet {
    let cfg = &env.cfg;
    let tb = &env.tables;
    let t = tb.clock;
    let k = cfg.num_products;
    let m = cfg.history_len;
    let lagged = |lag: usize, read: &dyn Fn(usize) -> i64| if t >= lag { read(t - lag) } else { 0 };

    let mut warehouse = Vec::new();
    for p in 0..k {
        warehouse.push(tb.on_hand.get(t, 0, WAREHOUSE, p) as f64 / cfg.warehouse_capacity[p] as f64);
    }
    for i in 1..=m {
        for p in 0..k {
            let q = lagged(i, &|s| tb.accepted.get(s, 0, WAREHOUSE, p));
            warehouse.push(q as f64 / cfg.warehouse_capacity[p] as f64);
        }
    }
    if env.layout.warehouse == WarehouseView::Enhanced {
        for v in 0..cfg.num_stores {
            for i in 1..=m {
                for p in 0..k {
                    let q = lagged(i, &|s| tb.requested.get(s, v, STORE, p));
                    warehouse.push(q as f64 / cfg.warehouse_capacity[p] as f64);
                }
            }
        }
    }

    let mut stores = Vec::new();
    for v in 0..cfg.num_stores {
        let mut obs = Vec::new();
        let cap = |p: usize| cfg.store_capacity[v][p] as f64;
        for p in 0..k {
            obs.push(tb.on_hand.get(t, v, STORE, p) as f64 / cap(p));
        }
        for i in 1..=cfg.store_lead_times[v] {
            for p in 0..k {
                obs.push(lagged(i, &|s| tb.accepted.get(s, v, STORE, p)) as f64 / cap(p));
            }
        }
        if env.layout.oracle_demand {
            let ahead = t + cfg.store_lead_times[v];
            for p in 0..k {
                let d = if ahead < cfg.horizon { tb.demand.get(ahead, v, p) } else { 0 };
                obs.push(d as f64 / cap(p));
            }
        }
        stores.push(obs);
    }
    ObservationSet { warehouse, stores }
}
