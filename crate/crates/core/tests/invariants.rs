use echelon_core::audit::check_episode;
use echelon_core::fuzz::{random_action, random_config};
use echelon_core::Env;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn every_period_satisfies_invariants(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = random_config(&mut rng);
        let mut env = Env::new(cfg.clone(), seed).unwrap();
        while !env.is_done() {
            env.step(&random_action(&cfg, &mut rng)).unwrap();
        }
        let violations = check_episode(&cfg, env.tables());
        prop_assert!(violations.is_empty(), "{:?}", violations);
    }

    #[test]
    fn same_seed_same_tables(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = random_config(&mut rng);
        let actions: Vec<_> = (0..cfg.horizon).map(|_| random_action(&cfg, &mut rng)).collect();
        let run = || {
            let mut env = Env::new(cfg.clone(), seed).unwrap();
            for a in &actions {
                env.step(a).unwrap();
            }
            env.tables().clone()
        };
        prop_assert!(run().bit_identical(&run()));
    }
}
