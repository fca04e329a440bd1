//! Running hand-written policies over seeded episodes.

use echelon_core::exec::map_indexed;
use echelon_core::{ChainConfig, Env, Policy, RewardComponents};

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub ret: f64,
    pub components: RewardComponents,
    pub stockouts: usize,
}

/// Plays `policy` for one full episode on a fresh environment.
pub fn play<P: Policy + ?Sized>(cfg: &ChainConfig, policy: &mut P, seed: u64) -> EpisodeOutcome {
    let mut env = Env::new(cfg.clone(), seed).expect("config validated by caller");
    play_env(&mut env, policy)
}

/// Plays the rest of the episode in `env`.
pub fn play_env<P: Policy + ?Sized>(env: &mut Env, policy: &mut P) -> EpisodeOutcome {
    policy.reset();
    let mut ret = 0.0;
    let mut components = RewardComponents::default();
    while !env.is_done() {
        let a = policy.act(env);
        ret += env.advance(&a).expect("policy actions lie on the grid");
        components.accumulate(&env.tables().components[env.clock() - 1]);
    }
    EpisodeOutcome {
        ret,
        components,
        stockouts: env.tables().stockouts(),
    }
}

/// One episode per seed, each with a policy from `make(i)`, in seed order.
pub fn play_many<P, F>(cfg: &ChainConfig, seeds: &[u64], make: F) -> Vec<EpisodeOutcome>
where
    P: Policy,
    F: Fn(usize) -> P + Sync + Send,
{
    map_indexed(seeds.len(), |i| {
        let mut policy = make(i);
        play(cfg, &mut policy, seeds[i])
    })
}

/// Mean return, summed in seed order.
pub fn mean_return(outcomes: &[EpisodeOutcome]) -> f64 {
    outcomes.iter().fold(0.0, |acc, o| acc + o.ret) / outcomes.len().max(1) as f64
}
