//! Per-period reward terms.
//!
//! Store quantities are flat `(N, K)` slices, store-major. All sums are left
//! folds starting at `0.0` in index order, so any implementation that
//! follows the same order reproduces the result bit for bit.

use crate::config::ChainConfig;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RewardComponents {
    pub sales_revenue: f64,
    pub holding_cost: f64,
    pub procurement_cost: f64,
    pub unfulfilled_penalty: f64,
}

impl RewardComponents {
    /// Revenue minus the three cost terms.
    pub fn shared_reward(&self) -> f64 {
        shared_reward(self)
    }

    pub fn bit_eq(&self, other: &Self) -> bool {
        self.sales_revenue.to_bits() == other.sales_revenue.to_bits()
            && self.holding_cost.to_bits() == other.holding_cost.to_bits()
            && self.procurement_cost.to_bits() == other.procurement_cost.to_bits()
            && self.unfulfilled_penalty.to_bits() == other.unfulfilled_penalty.to_bits()
    }

    pub fn accumulate(&mut self, other: &Self) {
        self.sales_revenue += other.sales_revenue;
        self.holding_cost += other.holding_cost;
        self.procurement_cost += other.procurement_cost;
        self.unfulfilled_penalty += other.unfulfilled_penalty;
    }
}

/// Flattened economic constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Economics {
    /// `(N, K)` store selling prices.
    pub price: Vec<f64>,
    /// `(N, K)` store holding costs.
    pub store_holding: Vec<f64>,
    /// `(K,)` warehouse holding costs.
    pub warehouse_holding: Vec<f64>,
    /// `(K,)` procurement costs.
    pub procurement: Vec<f64>,
    pub unfulfilled_coeff: f64,
}

impl Economics {
    pub fn from_config(cfg: &ChainConfig) -> Self {
        let (n, k) = (cfg.num_stores, cfg.num_products);
        let mut price = Vec::with_capacity(n * k);
        let mut store_holding = Vec::with_capacity(n * k);
        for v in 0..n {
            for p in 0..k {
                price.push(cfg.selling_price[p][v]);
                store_holding.push(cfg.holding_cost[p][v + 1]);
            }
        }
        Self {
            price,
            store_holding,
            warehouse_holding: (0..k).map(|p| cfg.holding_cost[p][0]).collect(),
            procurement: cfg.procurement_cost.clone(),
            unfulfilled_coeff: cfg.unfulfilled_penalty_coeff,
        }
    }
}

/// Everything the reward of one period depends on.
#[derive(Debug, Clone, Copy)]
pub struct PeriodFlows<'a> {
    /// `(N, K)` realized sales.
    pub sales: &'a [i64],
    /// `(N, K)` customer demand.
    pub demand: &'a [i64],
    /// `(N, K)` requested store replenishment.
    pub requests: &'a [i64],
    /// `(N, K)` store on-hand after the period's update and clamp.
    pub store_on_hand: &'a [i64],
    /// `(K,)` warehouse on-hand at period start.
    pub warehouse_start: &'a [i64],
    /// `(K,)` warehouse on-hand after the period's update and clamp.
    pub warehouse_on_hand: &'a [i64],
    /// `(K,)` supplier deliveries arriving this period.
    pub warehouse_arrivals: &'a [i64],
}

/// Total store revenue. The warehouse sells nothing.
pub fn sales_revenue(sales: &[i64], price: &[f64]) -> f64 {
    sales
        .iter()
        .zip(price)
        .fold(0.0, |acc, (&s, &p)| acc + s as f64 * p)
}

/// Warehouse holding (counted once) followed by every store.
pub fn holding_cost(
    warehouse_on_hand: &[i64],
    warehouse_cost: &[f64],
    store_on_hand: &[i64],
    store_cost: &[f64],
) -> f64 {
    let wh = warehouse_on_hand
        .iter()
        .zip(warehouse_cost)
        .fold(0.0, |acc, (&x, &h)| acc + x as f64 * h);
    store_on_hand
        .iter()
        .zip(store_cost)
        .fold(wh, |acc, (&x, &h)| acc + x as f64 * h)
}

/// Cost of supplier deliveries arriving this period.
pub fn procurement_cost(arrivals: &[i64], cost: &[f64]) -> f64 {
    arrivals
        .iter()
        .zip(cost)
        .fold(0.0, |acc, (&a, &c)| acc + a as f64 * c)
}

/// Units by which total store requests exceed warehouse stock, summed over
/// products.
pub fn request_excess(requests: &[i64], warehouse_start: &[i64]) -> i64 {
    let mut totals = vec![0i64; warehouse_start.len()];
    for row in requests.chunks_exact(totals.len()) {
        for (t, &r) in totals.iter_mut().zip(row) {
            *t += r;
        }
    }
    totals.iter().zip(warehouse_start).map(|(t, x)| (t - x).max(0)).sum()
}

/// Warehouse shortfall against store requests plus lost customer demand,
/// both weighted by `coeff`.
pub fn unfulfilled_penalty(
    requests: &[i64],
    warehouse_start: &[i64],
    demand: &[i64],
    sales: &[i64],
    coeff: f64,
) -> f64 {
    let lost: i64 = demand.iter().zip(sales).map(|(d, s)| d - s).sum();
    coeff * request_excess(requests, warehouse_start) as f64 + coeff * lost as f64
}

pub fn shared_reward(c: &RewardComponents) -> f64 {
    c.sales_revenue - (c.procurement_cost + c.holding_cost + c.unfulfilled_penalty)
}

pub fn components(flows: &PeriodFlows<'_>, econ: &Economics) -> RewardComponents {
    RewardComponents {
        sales_revenue: sales_revenue(flows.sales, &econ.price),
        holding_cost: holding_cost(
            flows.warehouse_on_hand,
            &econ.warehouse_holding,
            flows.store_on_hand,
            &econ.store_holding,
        ),
        procurement_cost: procurement_cost(flows.warehouse_arrivals, &econ.procurement),
        unfulfilled_penalty: unfulfilled_penalty(
            flows.requests,
            flows.warehouse_start,
            flows.demand,
            flows.sales,
            econ.unfulfilled_coeff,
        ),
    }
}

/// Splits the period reward by term ownership, warehouse first.
///
/// A store owns its revenue, its holding cost and its lost demand. The
/// warehouse owns procurement, its holding cost and the request shortfall.
/// The shared reward of the period is defined as the left fold of this
/// vector, see [`sum_rewards`].
pub fn local_rewards(flows: &PeriodFlows<'_>, econ: &Economics, out: &mut [f64]) {
    let k = flows.warehouse_start.len();
    let n = flows.sales.len() / k;
    debug_assert_eq!(out.len(), n + 1);

    let procurement = procurement_cost(flows.warehouse_arrivals, &econ.procurement);
    let holding = holding_cost(flows.warehouse_on_hand, &econ.warehouse_holding, &[], &[]);
    let excess = request_excess(flows.requests, flows.warehouse_start);
    out[0] = -((procurement + holding) + econ.unfulfilled_coeff * excess as f64);

    for v in 0..n {
        let r = v * k..(v + 1) * k;
        let revenue = sales_revenue(&flows.sales[r.clone()], &econ.price[r.clone()]);
        let holding = holding_cost(&[], &[], &flows.store_on_hand[r.clone()], &econ.store_holding[r.clone()]);
        let lost: i64 = flows.demand[r.clone()]
            .iter()
            .zip(&flows.sales[r])
            .map(|(d, s)| d - s)
            .sum();
        out[v + 1] = revenue - holding - econ.unfulfilled_coeff * lost as f64;
    }
}

/// Left fold from `0.0`: the canonical sum of local rewards.
pub fn sum_rewards(locals: &[f64]) -> f64 {
    locals.iter().fold(0.0, |acc, &r| acc + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn revenue_examples() {
        assert_eq!(sales_revenue(&[0, 0], &[3.0, 4.0]), 0.0);
        assert_eq!(sales_revenue(&[3], &[2.5]), 7.5);
        assert_eq!(sales_revenue(&[1, 2], &[10.0, 10.0]), 30.0);
    }

    #[test]
    fn holding_examples() {
        assert_eq!(holding_cost(&[0], &[0.1], &[0], &[0.1]), 0.0);
        assert_eq!(holding_cost(&[10], &[0.1], &[5], &[0.1]), 1.5);
        // Two stores, warehouse once.
        assert_eq!(holding_cost(&[1], &[1.0], &[1, 1], &[1.0, 1.0]), 3.0);
    }

    #[test]
    fn procurement_examples() {
        assert_eq!(procurement_cost(&[20], &[1.5]), 30.0);
        assert_eq!(procurement_cost(&[0], &[1.5]), 0.0);
    }

    #[test]
    fn unfulfilled_examples() {
        // Requests covered and demand met.
        assert_eq!(unfulfilled_penalty(&[4, 5], &[9], &[3, 3], &[3, 3], 100.0), 0.0);
        // Requests 12 against 9 on hand.
        assert_eq!(unfulfilled_penalty(&[6, 6], &[9], &[0, 0], &[0, 0], 100.0), 300.0);
        // Lost demand 2.
        assert_eq!(unfulfilled_penalty(&[0], &[0], &[5], &[3], 100.0), 200.0);
    }

    #[test]
    fn shared_examples() {
        let c = |r, h, p, u| RewardComponents {
            sales_revenue: r,
            holding_cost: h,
            procurement_cost: p,
            unfulfilled_penalty: u,
        };
        assert_eq!(shared_reward(&c(0.0, 0.0, 0.0, 0.0)), 0.0);
        assert_eq!(shared_reward(&c(100.0, 10.0, 20.0, 5.0)), 65.0);
        assert_eq!(shared_reward(&c(0.0, 10.0, 0.0, 0.0)), -10.0);
    }

    #[test]
    fn request_excess_is_per_product() {
        // Two stores, two products: product 0 short by 3, product 1 covered.
        assert_eq!(request_excess(&[5, 1, 4, 1], &[6, 10]), 3);
    }

    #[test]
    fn store_meeting_demand_with_empty_shelf_keeps_its_revenue() {
        let econ = Economics {
            price: vec![2.5],
            store_holding: vec![0.3],
            warehouse_holding: vec![0.1],
            procurement: vec![1.0],
            unfulfilled_coeff: 7.0,
        };
        let flows = PeriodFlows {
            sales: &[4],
            demand: &[4],
            requests: &[0],
            store_on_hand: &[0],
            warehouse_start: &[3],
            warehouse_on_hand: &[3],
            warehouse_arrivals: &[0],
        };
        let mut out = [0.0; 2];
        local_rewards(&flows, &econ, &mut out);
        assert_eq!(out[1], sales_revenue(&[4], &[2.5]));
        assert_eq!(out[0], -(3.0 * 0.1));
        let c = components(&flows, &econ);
        assert!((sum_rewards(&out) - c.shared_reward()).abs() <= 1e-12 * c.shared_reward().abs());
    }

    #[test]
    fn all_zero_period_gives_zero_locals() {
        let econ = Economics {
            price: vec![1.0, 1.0],
            store_holding: vec![1.0, 1.0],
            warehouse_holding: vec![1.0],
            procurement: vec![1.0],
            unfulfilled_coeff: 1.0,
        };
        let z = [0i64; 2];
        let flows = PeriodFlows {
            sales: &z,
            demand: &z,
            requests: &z,
            store_on_hand: &z,
            warehouse_start: &z[..1],
            warehouse_on_hand: &z[..1],
            warehouse_arrivals: &z[..1],
        };
        let mut out = [1.0; 3];
        local_rewards(&flows, &econ, &mut out);
        assert!(out.iter().all(|&r| r == 0.0));
    }
}
