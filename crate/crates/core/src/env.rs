//! The environment and its batched step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::action::ActionSet;
use crate::allocation::resolve_allocation_into;
use crate::config::ChainConfig;
use crate::error::{ConfigError, EnvError};
use crate::obs::{build_observations, ObsLayout, ObservationSet};
use crate::reward::{self, Economics, PeriodFlows, RewardComponents};
use crate::tables::{EnvTables, STORE, WAREHOUSE};

/// Result of one period.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub shared_reward: f64,
    /// Warehouse first, then stores in order.
    pub local_rewards: Vec<f64>,
    pub components: RewardComponents,
    pub done: bool,
    pub observations: ObservationSet,
}

#[derive(Debug, Clone)]
pub struct Env {
    pub(crate) cfg: ChainConfig,
    pub(crate) econ: Economics,
    /// `(N, K)` store shelf capacities.
    pub(crate) store_capacity: Vec<i64>,
    pub(crate) tables: EnvTables,
    pub(crate) layout: ObsLayout,
    rng: ChaCha8Rng,
    demand_dists: Vec<Option<Poisson<f64>>>,
    scratch: Scratch,
}

#[derive(Debug, Clone, Default)]
struct Scratch {
    sales: Vec<i64>,
    demand: Vec<i64>,
    accepted: Vec<i64>,
    store_end: Vec<i64>,
    wh_start: Vec<i64>,
    wh_end: Vec<i64>,
    wh_arrivals: Vec<i64>,
    shipped: Vec<i64>,
    store_discard: Vec<i64>,
    transit: Vec<i64>,
    wh_discard: Vec<i64>,
    wh_transit: Vec<i64>,
    zeros: Vec<i64>,
}

impl Env {
    /// Validates `cfg`, allocates zeroed tables, seeds the demand stream and
    /// pre-draws the episode's demand.
    pub fn new(cfg: ChainConfig, seed: u64) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let (n, k) = (cfg.num_stores, cfg.num_products);
        let demand_dists = cfg
            .demand_mean
            .iter()
            .flatten()
            .map(|&mu| (mu > 0.0).then(|| Poisson::new(mu).expect("validated mean")))
            .collect();
        let scratch = Scratch {
            sales: vec![0; n * k],
            demand: vec![0; n * k],
            accepted: vec![0; n * k],
            store_end: vec![0; n * k],
            wh_start: vec![0; k],
            wh_end: vec![0; k],
            wh_arrivals: vec![0; k],
            shipped: vec![0; k],
            store_discard: vec![0; n * k],
            transit: vec![0; n * k],
            wh_discard: vec![0; k],
            wh_transit: vec![0; k],
            zeros: vec![0; k],
        };
        let mut env = Self {
            econ: Economics::from_config(&cfg),
            store_capacity: cfg.store_capacity.iter().flatten().copied().collect(),
            tables: EnvTables::new(cfg.horizon, n, k),
            layout: ObsLayout::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            demand_dists,
            scratch,
            cfg,
        };
        env.reset(seed);
        Ok(env)
    }

    /// Rewinds to `t = 0` with a fresh demand stream for `seed`.
    pub fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.tables.clear_dynamics();
        let wh = &self.cfg.initial_inventory[0];
        self.tables.on_hand.fill_warehouse(0, wh);
        for v in 0..self.cfg.num_stores {
            self.tables
                .on_hand
                .slice_mut(0, v, STORE)
                .copy_from_slice(&self.cfg.initial_inventory[v + 1]);
        }
        for t in 0..self.cfg.horizon {
            self.sample_demand(t);
        }
    }

    /// Draws `D(t)` from the env stream, stores-major then products.
    pub fn sample_demand(&mut self, t: usize) -> &[i64] {
        let row = self.tables.demand.period_mut(t);
        for (d, dist) in row.iter_mut().zip(&self.demand_dists) {
            *d = match dist {
                Some(p) => p.sample(&mut self.rng) as i64,
                None => 0,
            };
        }
        self.tables.demand.period(t)
    }

    pub fn config(&self) -> &ChainConfig {
        &self.cfg
    }

    pub fn tables(&self) -> &EnvTables {
        &self.tables
    }

    pub fn economics(&self) -> &Economics {
        &self.econ
    }

    pub fn clock(&self) -> usize {
        self.tables.clock
    }

    pub fn is_done(&self) -> bool {
        self.tables.clock >= self.cfg.horizon
    }

    pub fn layout(&self) -> ObsLayout {
        self.layout
    }

    pub fn set_layout(&mut self, layout: ObsLayout) {
        self.layout = layout;
    }

    /// Observations at the current clock.
    pub fn observations(&self) -> ObservationSet {
        build_observations(&self.cfg, &self.tables, self.layout)
    }

    /// Runs one period and returns the reward with the next observations.
    pub fn step(&mut self, actions: &ActionSet) -> Result<StepOutcome, EnvError> {
        self.advance(actions)?;
        let t = self.tables.clock - 1;
        Ok(StepOutcome {
            shared_reward: self.tables.reward[t],
            local_rewards: self.tables.local_rewards_at(t).to_vec(),
            components: self.tables.components[t],
            done: self.is_done(),
            observations: self.observations(),
        })
    }

    /// The dynamics of [`Env::step`] without building observations.
    ///
    /// Period order: sales against demand, allocation repair, supplier
    /// acceptance, inventory update with arrivals, shelf clamp, in-transit
    /// update, reward, clock.
    pub fn advance(&mut self, actions: &ActionSet) -> Result<f64, EnvError> {
        let horizon = self.cfg.horizon;
        let t = self.tables.clock;
        if t >= horizon {
            return Err(EnvError::EpisodeComplete { horizon });
        }
        actions.validate(&self.cfg)?;

        let k = self.cfg.num_products;
        let n = self.cfg.num_stores;
        let s = &mut self.scratch;
        let tb = &mut self.tables;

        s.demand.copy_from_slice(tb.demand.period(t));
        s.wh_start.copy_from_slice(tb.on_hand.slice(t, 0, WAREHOUSE));

        // Sales.
        for v in 0..n {
            let r = v * k..(v + 1) * k;
            let x = tb.on_hand.slice(t, v, STORE);
            for ((sold, &d), &x) in s.sales[r.clone()].iter_mut().zip(&s.demand[r.clone()]).zip(x) {
                *sold = d.min(x);
            }
            tb.sales.slice_mut(t, v, STORE).copy_from_slice(&s.sales[r]);
        }

        // Allocation and supplier acceptance.
        resolve_allocation_into(
            &actions.store_requests,
            &actions.warehouse_allocations,
            &s.wh_start,
            &mut s.accepted,
        );
        for v in 0..n {
            let r = v * k..(v + 1) * k;
            tb.requested
                .slice_mut(t, v, STORE)
                .copy_from_slice(&actions.store_requests[r.clone()]);
            tb.accepted.slice_mut(t, v, STORE).copy_from_slice(&s.accepted[r.clone()]);
            tb.sales.slice_mut(t, v, WAREHOUSE).copy_from_slice(&s.accepted[r]);
        }
        tb.requested.fill_warehouse(t, &actions.warehouse_request);
        tb.accepted.fill_warehouse(t, &actions.warehouse_request);

        // Stores: update, clamp, in-transit.
        for v in 0..n {
            let r = v * k..(v + 1) * k;
            let lead = self.cfg.store_lead_times[v];
            let arrivals: &[i64] = if t >= lead {
                tb.accepted.slice(t - lead, v, STORE)
            } else {
                &s.zeros
            };
            let x = tb.on_hand.slice(t, v, STORE);
            let caps = &self.store_capacity[r.clone()];
            for (((end, lost), &x), ((&sold, &arrival), &cap)) in s.store_end[r.clone()]
                .iter_mut()
                .zip(&mut s.store_discard[r.clone()])
                .zip(x)
                .zip(s.sales[r.clone()].iter().zip(arrivals).zip(caps))
            {
                let raw = x - sold + arrival;
                *end = raw.min(cap);
                *lost = raw - *end;
            }
            let transit = tb.in_transit.slice(t, v, STORE);
            let placed = tb.accepted.slice(t, v, STORE);
            for ((next, &x), (&arrival, &q)) in s.transit[r.clone()]
                .iter_mut()
                .zip(transit)
                .zip(arrivals.iter().zip(placed))
            {
                *next = x - arrival + q;
            }
            assert!(
                s.transit[r.clone()].iter().all(|&x| x >= 0),
                "in-transit inventory went negative at store {v}, t = {t}"
            );
            tb.on_hand.slice_mut(t + 1, v, STORE).copy_from_slice(&s.store_end[r.clone()]);
            tb.discarded.slice_mut(t, v, STORE).copy_from_slice(&s.store_discard[r.clone()]);
            tb.in_transit.slice_mut(t + 1, v, STORE).copy_from_slice(&s.transit[r]);
        }

        // Warehouse: update, clamp, in-transit.
        let wh_lead = self.cfg.warehouse_lead_time;
        s.shipped.fill(0);
        for v in 0..n {
            for (acc, &a) in s.shipped.iter_mut().zip(&s.accepted[v * k..(v + 1) * k]) {
                *acc += a;
            }
        }
        if t >= wh_lead {
            s.wh_arrivals.copy_from_slice(tb.accepted.slice(t - wh_lead, 0, WAREHOUSE));
        } else {
            s.wh_arrivals.fill(0);
        }
        for p in 0..k {
            let raw = s.wh_start[p] - s.shipped[p] + s.wh_arrivals[p];
            s.wh_end[p] = raw.min(self.cfg.warehouse_capacity[p]);
            s.wh_discard[p] = raw - s.wh_end[p];
            s.wh_transit[p] = tb.in_transit.get(t, 0, WAREHOUSE, p) - s.wh_arrivals[p]
                + actions.warehouse_request[p];
        }
        assert!(
            s.wh_transit.iter().all(|&x| x >= 0),
            "in-transit inventory went negative at the warehouse, t = {t}"
        );
        tb.on_hand.fill_warehouse(t + 1, &s.wh_end);
        tb.discarded.fill_warehouse(t, &s.wh_discard);
        tb.in_transit.fill_warehouse(t + 1, &s.wh_transit);

        // Reward.
        let flows = PeriodFlows {
            sales: &s.sales,
            demand: &s.demand,
            requests: &actions.store_requests,
            store_on_hand: &s.store_end,
            warehouse_start: &s.wh_start,
            warehouse_on_hand: &s.wh_end,
            warehouse_arrivals: &s.wh_arrivals,
        };
        tb.components[t] = reward::components(&flows, &self.econ);
        reward::local_rewards(&flows, &self.econ, tb.local_rewards_at_mut(t));
        let shared = reward::sum_rewards(tb.local_rewards_at(t));
        tb.reward[t] = shared;
        tb.clock = t + 1;
        Ok(shared)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(lead: usize) -> ChainConfig {
        let mut cfg = ChainConfig::divergent(1, 1);
        cfg.store_lead_times = vec![lead];
        cfg.warehouse_lead_time = lead;
        cfg.history_len = lead;
        cfg.batch_size = 1;
        cfg
    }

    #[test]
    fn table_shapes_follow_horizon_and_topology() {
        let env = Env::new(ChainConfig::divergent(1, 1), 7).unwrap();
        assert_eq!(env.tables().on_hand.shape(), (31, 1, 2, 1));
        assert_eq!(env.clock(), 0);
        let env = Env::new(ChainConfig::divergent(10, 10), 7).unwrap();
        assert_eq!(env.tables().on_hand.shape(), (31, 10, 2, 10));
        assert_eq!(env.tables().demand.shape(), (30, 10, 10));
    }

    #[test]
    fn same_seed_same_demand() {
        let cfg = ChainConfig::divergent(3, 2);
        let a = Env::new(cfg.clone(), 11).unwrap();
        let b = Env::new(cfg.clone(), 11).unwrap();
        assert_eq!(a.tables().demand, b.tables().demand);
        let c = Env::new(cfg, 12).unwrap();
        assert_ne!(a.tables().demand, c.tables().demand);
    }

    #[test]
    fn zero_mean_gives_zero_demand() {
        let mut cfg = ChainConfig::divergent(2, 3);
        cfg.demand_mean = vec![vec![0.0; 3]; 2];
        let env = Env::new(cfg, 1).unwrap();
        assert!(env.tables().demand.as_slice().iter().all(|&d| d == 0));
    }

    #[test]
    fn invalid_config_names_field() {
        let mut cfg = ChainConfig::divergent(1, 1);
        cfg.warehouse_capacity = vec![0];
        let err = Env::new(cfg, 0).unwrap_err();
        assert_eq!(err.field, "warehouse_capacity[0]");
    }

    #[test]
    fn order_arrives_after_lead_time() {
        let mut cfg = single(2);
        cfg.demand_mean = vec![vec![0.0]];
        cfg.initial_inventory = vec![vec![50], vec![0]];
        let mut env = Env::new(cfg.clone(), 3).unwrap();
        let mut order = ActionSet::zeros(&cfg);
        order.store_requests[0] = 5;
        order.warehouse_allocations[0] = 5;
        env.step(&order).unwrap();
        let idle = ActionSet::zeros(&cfg);
        env.step(&idle).unwrap();
        // Not yet on the shelf after the t = 1 update.
        assert_eq!(env.tables().on_hand.get(2, 0, STORE, 0), 0);
        env.step(&idle).unwrap();
        assert_eq!(env.tables().on_hand.get(3, 0, STORE, 0), 5);
    }

    #[test]
    fn lost_sales_and_penalty() {
        let mut cfg = single(1);
        cfg.initial_inventory = vec![vec![0], vec![3]];
        cfg.unfulfilled_penalty_coeff = 100.0;
        let mut env = Env::new(cfg.clone(), 0).unwrap();
        env.tables.demand.period_mut(0)[0] = 5;
        let out = env.step(&ActionSet::zeros(&cfg)).unwrap();
        assert_eq!(env.tables().on_hand.get(1, 0, STORE, 0), 0);
        assert_eq!(out.components.unfulfilled_penalty, 200.0);
    }

    #[test]
    fn capacity_clamp_discards() {
        let mut cfg = single(1);
        cfg.store_capacity = vec![vec![10]];
        cfg.demand_mean = vec![vec![0.0]];
        cfg.initial_inventory = vec![vec![50], vec![9]];
        let mut env = Env::new(cfg.clone(), 0).unwrap();
        let mut a = ActionSet::zeros(&cfg);
        a.store_requests[0] = 4;
        a.warehouse_allocations[0] = 4;
        env.step(&a).unwrap();
        // Arrives in the t = 1 update: 9 + 4 = 13, clamped to 10.
        env.step(&ActionSet::zeros(&cfg)).unwrap();
        assert_eq!(env.tables().on_hand.get(2, 0, STORE, 0), 10);
        assert_eq!(env.tables().discarded.get(1, 0, STORE, 0), 3);
    }

    #[test]
    fn finished_episode_rejects_steps() {
        let mut cfg = single(1);
        cfg.horizon = 2;
        let mut env = Env::new(cfg.clone(), 0).unwrap();
        let a = ActionSet::zeros(&cfg);
        assert!(!env.step(&a).unwrap().done);
        assert!(env.step(&a).unwrap().done);
        assert_eq!(
            env.step(&a).unwrap_err(),
            EnvError::EpisodeComplete { horizon: 2 }
        );
    }

    #[test]
    fn in_transit_single_order() {
        let mut cfg = single(3);
        cfg.demand_mean = vec![vec![0.0]];
        cfg.initial_inventory = vec![vec![50], vec![0]];
        let mut env = Env::new(cfg.clone(), 0).unwrap();
        let mut a = ActionSet::zeros(&cfg);
        a.store_requests[0] = 5;
        a.warehouse_allocations[0] = 5;
        env.step(&a).unwrap();
        let idle = ActionSet::zeros(&cfg);
        for _ in 0..4 {
            env.step(&idle).unwrap();
        }
        let transit: Vec<i64> = (0..=5).map(|t| env.tables().in_transit.get(t, 0, STORE, 0)).collect();
        assert_eq!(transit, vec![0, 5, 5, 5, 0, 0]);
    }

    #[test]
    fn in_transit_overlapping_orders() {
        let mut cfg = single(2);
        cfg.demand_mean = vec![vec![0.0]];
        cfg.initial_inventory = vec![vec![50], vec![0]];
        let mut env = Env::new(cfg.clone(), 0).unwrap();
        let order = |q| {
            let mut a = ActionSet::zeros(&cfg);
            a.store_requests[0] = q;
            a.warehouse_allocations[0] = q;
            a
        };
        env.step(&order(5)).unwrap();
        env.step(&order(7)).unwrap();
        env.step(&order(0)).unwrap();
        assert_eq!(env.tables().in_transit.get(2, 0, STORE, 0), 12);
        assert_eq!(env.tables().in_transit.get(3, 0, STORE, 0), 7);
    }

    #[test]
    fn no_orders_keep_transit_empty() {
        let cfg = ChainConfig::divergent(2, 2);
        let mut env = Env::new(cfg.clone(), 0).unwrap();
        while !env.is_done() {
            env.step(&ActionSet::zeros(&cfg)).unwrap();
        }
        assert!(env.tables().in_transit.as_slice().iter().all(|&x| x == 0));
    }
}
