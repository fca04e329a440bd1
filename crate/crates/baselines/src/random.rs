//! Uniform-random floor baseline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use echelon_core::{ActionSet, ChainConfig, Env, Policy};

/// Draws every head's level uniformly from `{0, ..., n}` using its own
/// stream. The stream is not rewound on reset.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn draw(&mut self, cfg: &ChainConfig) -> ActionSet {
        let nk = cfg.num_stores * cfg.num_products;
        let n = cfg.action_levels;
        let rng = &mut self.rng;
        let mut levels = |len: usize| -> Vec<usize> { (0..len).map(|_| rng.random_range(0..=n)).collect() };
        let store = levels(nk);
        let warehouse = levels(cfg.num_products);
        let alloc = levels(nk);
        ActionSet::from_levels(&store, &warehouse, &alloc, cfg.batch_size)
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, env: &Env) -> ActionSet {
        self.draw(env.config())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_levels_give_zero_actions() {
        let mut cfg = ChainConfig::divergent(2, 3);
        cfg.action_levels = 0;
        let mut p = RandomPolicy::new(5);
        assert_eq!(p.draw(&cfg), ActionSet::zeros(&cfg));
    }

    #[test]
    fn fixed_seed_reproduces_sequence() {
        let cfg = ChainConfig::divergent(2, 2);
        let (mut a, mut b) = (RandomPolicy::new(9), RandomPolicy::new(9));
        for _ in 0..20 {
            assert_eq!(a.draw(&cfg), b.draw(&cfg));
        }
        assert_ne!(RandomPolicy::new(10).draw(&cfg), RandomPolicy::new(9).draw(&cfg));
    }

    #[test]
    fn levels_are_uniform_within_three_sigma() {
        let mut cfg = ChainConfig::divergent(1, 1);
        cfg.batch_size = 1;
        let n = 20;
        let draws = 10_000;
        let mut counts = vec![0usize; n + 1];
        let mut p = RandomPolicy::new(123);
        for _ in 0..draws {
            counts[p.draw(&cfg).warehouse_request[0] as usize] += 1;
        }
        let prob = 1.0 / (n + 1) as f64;
        let mean = draws as f64 * prob;
        let sigma = (draws as f64 * prob * (1.0 - prob)).sqrt();
        for (level, &c) in counts.iter().enumerate() {
            assert!((c as f64 - mean).abs() <= 3.0 * sigma, "level {level}: {c}");
        }
    }

    #[test]
    fn actions_are_on_grid() {
        let cfg = ChainConfig::divergent(3, 2);
        let mut p = RandomPolicy::new(0);
        for _ in 0..100 {
            p.draw(&cfg).validate(&cfg).unwrap();
        }
    }
}
