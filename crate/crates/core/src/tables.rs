//! Dense state tables.
//!
//! Every vertex table uses a `(time, store row, column, product)` layout
//! with the product index fastest. Column [`WAREHOUSE`] repeats the
//! warehouse quantity on each of the `N` rows, column [`STORE`] holds the
//! store on that row.

use crate::reward::RewardComponents;

pub const WAREHOUSE: usize = 0;
pub const STORE: usize = 1;

/// Row-major `(T', N, 2, K)` integer table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexTable {
    data: Vec<i64>,
    periods: usize,
    rows: usize,
    products: usize,
}

impl VertexTable {
    pub fn zeros(periods: usize, rows: usize, products: usize) -> Self {
        Self {
            data: vec![0; periods * rows * 2 * products],
            periods,
            rows,
            products,
        }
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.periods, self.rows, 2, self.products)
    }

    #[inline]
    pub fn index(&self, t: usize, row: usize, col: usize, k: usize) -> usize {
        debug_assert!(t < self.periods && row < self.rows && col < 2 && k < self.products);
        ((t * self.rows + row) * 2 + col) * self.products + k
    }

    #[inline]
    pub fn get(&self, t: usize, row: usize, col: usize, k: usize) -> i64 {
        self.data[self.index(t, row, col, k)]
    }

    #[inline]
    pub fn set(&mut self, t: usize, row: usize, col: usize, k: usize, value: i64) {
        let i = self.index(t, row, col, k);
        self.data[i] = value;
    }

    /// The `K` products of one `(t, row, col)` cell.
    #[inline]
    pub fn slice(&self, t: usize, row: usize, col: usize) -> &[i64] {
        let start = self.index(t, row, col, 0);
        &self.data[start..start + self.products]
    }

    #[inline]
    pub fn slice_mut(&mut self, t: usize, row: usize, col: usize) -> &mut [i64] {
        let start = self.index(t, row, col, 0);
        &mut self.data[start..start + self.products]
    }

    /// Writes `values` into the warehouse column of every row at `t`.
    pub fn fill_warehouse(&mut self, t: usize, values: &[i64]) {
        for row in 0..self.rows {
            self.slice_mut(t, row, WAREHOUSE).copy_from_slice(values);
        }
    }

    /// Quantity for `vertex` (0 = warehouse, `v + 1` = store `v`).
    pub fn vertex(&self, t: usize, vertex: usize) -> &[i64] {
        if vertex == 0 {
            self.slice(t, 0, WAREHOUSE)
        } else {
            self.slice(t, vertex - 1, STORE)
        }
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.data
    }

    pub(crate) fn clear(&mut self) {
        self.data.fill(0);
    }
}

/// Row-major `(T, N, K)` store demand table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandTable {
    data: Vec<i64>,
    periods: usize,
    rows: usize,
    products: usize,
}

impl DemandTable {
    pub fn zeros(periods: usize, rows: usize, products: usize) -> Self {
        Self {
            data: vec![0; periods * rows * products],
            periods,
            rows,
            products,
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.periods, self.rows, self.products)
    }

    #[inline]
    pub fn get(&self, t: usize, row: usize, k: usize) -> i64 {
        self.data[(t * self.rows + row) * self.products + k]
    }

    /// All `(N, K)` entries of period `t`, store-major.
    pub fn period(&self, t: usize) -> &[i64] {
        let w = self.rows * self.products;
        &self.data[t * w..(t + 1) * w]
    }

    pub fn period_mut(&mut self, t: usize) -> &mut [i64] {
        let w = self.rows * self.products;
        &mut self.data[t * w..(t + 1) * w]
    }

    pub fn row(&self, t: usize, row: usize) -> &[i64] {
        let start = (t * self.rows + row) * self.products;
        &self.data[start..start + self.products]
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.data
    }
}

/// All per-episode state.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvTables {
    /// On-hand inventory, `(T+1, N, 2, K)`.
    pub on_hand: VertexTable,
    /// In-transit inventory, `(T+1, N, 2, K)`.
    pub in_transit: VertexTable,
    /// Requested orders, `(T+1, N, 2, K)`.
    pub requested: VertexTable,
    /// Accepted orders, `(T+1, N, 2, K)`.
    pub accepted: VertexTable,
    /// Customer demand, `(T, N, K)`.
    pub demand: DemandTable,
    /// `(T, N, 2, K)`: column 0 holds the accepted store replenishment,
    /// column 1 the realized store sales.
    pub sales: VertexTable,
    /// Units lost to the shelf-capacity clamp when forming `t + 1`,
    /// `(T, N, 2, K)` with the warehouse column replicated.
    pub discarded: VertexTable,
    /// Shared reward per period.
    pub reward: Vec<f64>,
    /// Per-period reward breakdown.
    pub components: Vec<RewardComponents>,
    /// Per-period local rewards, `(T, N + 1)`, warehouse first.
    pub local_rewards: Vec<f64>,
    /// Number of completed periods.
    pub clock: usize,
}

impl EnvTables {
    pub fn new(horizon: usize, stores: usize, products: usize) -> Self {
        Self {
            on_hand: VertexTable::zeros(horizon + 1, stores, products),
            in_transit: VertexTable::zeros(horizon + 1, stores, products),
            requested: VertexTable::zeros(horizon + 1, stores, products),
            accepted: VertexTable::zeros(horizon + 1, stores, products),
            demand: DemandTable::zeros(horizon, stores, products),
            sales: VertexTable::zeros(horizon, stores, products),
            discarded: VertexTable::zeros(horizon, stores, products),
            reward: vec![0.0; horizon],
            components: vec![RewardComponents::default(); horizon],
            local_rewards: vec![0.0; horizon * (stores + 1)],
            clock: 0,
        }
    }

    pub fn horizon(&self) -> usize {
        self.reward.len()
    }

    pub fn local_rewards_at(&self, t: usize) -> &[f64] {
        let w = self.on_hand.rows + 1;
        &self.local_rewards[t * w..(t + 1) * w]
    }

    pub(crate) fn local_rewards_at_mut(&mut self, t: usize) -> &mut [f64] {
        let w = self.on_hand.rows + 1;
        &mut self.local_rewards[t * w..(t + 1) * w]
    }

    /// Zeroes every table except demand and rewinds the clock.
    pub(crate) fn clear_dynamics(&mut self) {
        self.on_hand.clear();
        self.in_transit.clear();
        self.requested.clear();
        self.accepted.clear();
        self.sales.clear();
        self.discarded.clear();
        self.reward.fill(0.0);
        self.components.fill(RewardComponents::default());
        self.local_rewards.fill(0.0);
        self.clock = 0;
    }

    /// Completed `(store, product, period)` triples that opened with an
    /// empty shelf while customers arrived.
    pub fn stockouts(&self) -> usize {
        let (_, n, _, k) = self.on_hand.shape();
        let mut count = 0;
        for t in 0..self.clock {
            for v in 0..n {
                let shelf = self.on_hand.slice(t, v, STORE);
                let demand = self.demand.row(t, v);
                count += (0..k).filter(|&p| shelf[p] == 0 && demand[p] > 0).count();
            }
        }
        count
    }

    /// Reward bits and integer tables agree exactly.
    pub fn bit_identical(&self, other: &EnvTables) -> bool {
        let bits = |xs: &[f64]| xs.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        self.on_hand == other.on_hand
            && self.in_transit == other.in_transit
            && self.requested == other.requested
            && self.accepted == other.accepted
            && self.demand == other.demand
            && self.sales == other.sales
            && self.discarded == other.discarded
            && self.clock == other.clock
            && bits(&self.reward) == bits(&other.reward)
            && bits(&self.local_rewards) == bits(&other.local_rewards)
            && self
                .components
                .iter()
                .zip(&other.components)
                .all(|(a, b)| a.bit_eq(b))
    }
}
