//! Base-stock tuning by simulation with common random numbers.

use echelon_core::exec::map_indexed;
use echelon_core::ChainConfig;

use crate::base_stock::{BaseStockParams, BaseStockPolicy};
use crate::eval::{mean_return, play};
use crate::powell::{powell_minimize, NonFiniteObjective, PowellOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct Tuned {
    pub params: BaseStockParams,
    /// Mean return over the tuning seeds.
    pub mean_return: f64,
    pub evaluations: usize,
}

/// Default search options for base-stock levels: steps of a few units and
/// levels kept non-negative.
pub fn default_options(cfg: &ChainConfig) -> PowellOptions {
    let mean = cfg.demand_mean.iter().flatten().copied().fold(0.0, f64::max);
    PowellOptions {
        step: (mean).max(cfg.batch_size as f64).max(1.0),
        lower_bound: Some(0.0),
        xtol: 1e-6,
        ..PowellOptions::default()
    }
}

/// Mean episode return of base-stock `params` over `seeds`, in seed order.
pub fn evaluate_base_stock(cfg: &ChainConfig, params: &BaseStockParams, seeds: &[u64]) -> f64 {
    let outcomes: Vec<_> = seeds
        .iter()
        .map(|&s| play(cfg, &mut BaseStockPolicy::new(params.clone()), s))
        .collect();
    mean_return(&outcomes)
}

fn evaluate_parallel(cfg: &ChainConfig, params: &BaseStockParams, seeds: &[u64]) -> f64 {
    let outcomes = map_indexed(seeds.len(), |i| {
        play(cfg, &mut BaseStockPolicy::new(params.clone()), seeds[i])
    });
    mean_return(&outcomes)
}

/// Powell search over every `z[vertex][product]`, starting from
/// [`BaseStockParams::initial`], maximizing mean return on `seeds`.
pub fn optimize_base_stock(
    cfg: &ChainConfig,
    seeds: &[u64],
    opts: &PowellOptions,
) -> Result<Tuned, NonFiniteObjective> {
    let x0 = BaseStockParams::initial(cfg).flatten();
    let objective = |x: &[f64]| -evaluate_parallel(cfg, &BaseStockParams::from_flat(cfg, x), seeds);
    let r = powell_minimize(objective, &x0, opts)?;
    Ok(Tuned {
        params: BaseStockParams::from_flat(cfg, &r.x),
        mean_return: -r.f,
        evaluations: r.evaluations,
    })
}

/// Exhaustive search over `values` for every coordinate. Ties go to the
/// first point in row-major order.
pub fn grid_search_base_stock(cfg: &ChainConfig, seeds: &[u64], values: &[f64]) -> Tuned {
    let dim = cfg.num_vertices() * cfg.num_products;
    let total = values.len().pow(dim as u32);
    let point = |mut i: usize| -> Vec<f64> {
        let mut x = vec![0.0; dim];
        for d in (0..dim).rev() {
            x[d] = values[i % values.len()];
            i /= values.len();
        }
        x
    };
    let returns = map_indexed(total, |i| {
        evaluate_base_stock(cfg, &BaseStockParams::from_flat(cfg, &point(i)), seeds)
    });
    let mut best = 0;
    for (i, &r) in returns.iter().enumerate() {
        if r > returns[best] {
            best = i;
        }
    }
    Tuned {
        params: BaseStockParams::from_flat(cfg, &point(best)),
        mean_return: returns[best],
        evaluations: total,
    }
}
