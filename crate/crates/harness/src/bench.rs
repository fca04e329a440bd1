//! Step-time scaling in the number of products.

use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use echelon_core::config::default_batch_size;
use echelon_core::exec::derive_seed;
use echelon_core::fuzz::random_action;
use echelon_core::reference::scalar_reference_step;
use echelon_core::{ChainConfig, Env};

use crate::error::RunError;
use crate::policy::streams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub products: usize,
    pub steps: usize,
    /// Median seconds per step.
    pub vectorized: f64,
    pub scalar: f64,
}

impl BenchRow {
    pub fn ratio(&self) -> f64 {
        self.vectorized / self.scalar
    }
}

/// `cfg` with every per-product field widened to `k` copies of product 0.
pub fn with_products(cfg: &ChainConfig, k: usize) -> ChainConfig {
    let widen_rows = |rows: &Vec<Vec<i64>>| rows.iter().map(|r| vec![r[0]; k]).collect();
    let mut out = cfg.clone();
    out.num_products = k;
    out.store_capacity = widen_rows(&cfg.store_capacity);
    out.initial_inventory = widen_rows(&cfg.initial_inventory);
    out.warehouse_capacity = vec![cfg.warehouse_capacity[0]; k];
    out.selling_price = vec![cfg.selling_price[0].clone(); k];
    out.holding_cost = vec![cfg.holding_cost[0].clone(); k];
    out.procurement_cost = vec![cfg.procurement_cost[0]; k];
    out.demand_mean = cfg.demand_mean.iter().map(|r| vec![r[0]; k]).collect();
    out.batch_size = default_batch_size(&out);
    out
}

/// Median wall time per step of the vectorized and scalar paths, in that
/// order. Two environments run in lockstep on the same random actions, so
/// both paths see the same states and the same machine conditions. Actions
/// are drawn and finished episodes reset outside the timed region.
pub fn median_step_times(cfg: &ChainConfig, steps: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fast = Env::new(cfg.clone(), seed).expect("bench config is valid");
    let mut slow = fast.clone();
    let mut episode = 0;
    let mut fast_times = Vec::with_capacity(steps);
    let mut slow_times = Vec::with_capacity(steps);
    for _ in 0..steps {
        if fast.is_done() {
            episode += 1;
            let s = derive_seed(seed, streams::BENCH, episode);
            fast.reset(s);
            slow.reset(s);
        }
        let a = random_action(cfg, &mut rng);
        let t = Instant::now();
        let out = fast.step(&a).expect("random actions lie on the grid");
        fast_times.push(t.elapsed().as_secs_f64());
        drop(out);
        let t = Instant::now();
        let out = scalar_reference_step(&mut slow, &a).expect("random actions lie on the grid");
        slow_times.push(t.elapsed().as_secs_f64());
        drop(out);
    }
    (median(&mut fast_times), median(&mut slow_times))
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

pub fn bench_step(cfg: &ChainConfig, products: &[usize], steps: usize, seed: u64) -> Vec<BenchRow> {
    products
        .iter()
        .map(|&k| {
            let (vectorized, scalar) = median_step_times(&with_products(cfg, k), steps, seed);
            BenchRow {
                products: k,
                steps,
                vectorized,
                scalar,
            }
        })
        .collect()
}

pub fn write_bench_csv(rows: &[BenchRow], path: &Path) -> Result<(), RunError> {
    let io = |e| RunError::io(path, e);
    let mut f = File::create(path).map_err(io)?;
    writeln!(f, "products,steps,vectorized_seconds,scalar_seconds,ratio").map_err(io)?;
    for r in rows {
        writeln!(f, "{},{},{},{},{}", r.products, r.steps, r.vectorized, r.scalar, r.ratio()).map_err(io)?;
    }
    Ok(())
}
