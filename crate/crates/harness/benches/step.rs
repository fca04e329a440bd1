//! Vectorized `Env::step` against the element-wise reference step across
//! product counts, 10 stores.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use echelon_core::fuzz::random_action;
use echelon_core::reference::scalar_reference_step;
use echelon_core::{ChainConfig, Env};
use echelon_harness::bench::with_products;

fn step_scaling(c: &mut Criterion) {
    let base = ChainConfig::divergent(10, 1);
    let mut group = c.benchmark_group("step");
    for k in [1, 10, 100, 1000] {
        let cfg = with_products(&base, k);
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let actions: Vec<_> = (0..64).map(|_| random_action(&cfg, &mut rng)).collect();
        for (name, scalar) in [("vectorized", false), ("scalar", true)] {
            let mut env = Env::new(cfg.clone(), 1).unwrap();
            let mut i = 0;
            group.bench_function(BenchmarkId::new(name, k), |b| {
                b.iter(|| {
                    if env.is_done() {
                        env.reset(i as u64);
                    }
                    let a = &actions[i % actions.len()];
                    i += 1;
                    if scalar {
                        scalar_reference_step(&mut env, a).unwrap();
                    } else {
                        env.step(a).unwrap();
                    }
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, step_scaling);
criterion_main!(benches);
