//! Episode collection and the per-network PPO learner.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use echelon_core::exec::{derive_seed, map_indexed};
use echelon_core::{ChainConfig, Env, RewardComponents};

use crate::agents::AgentSystem;
use crate::gae::{compute_gae, normalize};
use crate::net::ActMode;
use crate::ppo::{ppo_update, Adam, PpoConfig, Sample, UpdateAborted, UpdateStats};

/// Transitions of one slot over one episode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<usize>>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub env_seed: u64,
    /// Sum of the shared reward over the horizon.
    pub ret: f64,
    pub components: RewardComponents,
    pub stockouts: usize,
    /// One per slot; empty unless recording was requested.
    pub trajectories: Vec<Trajectory>,
}

/// Plays one episode from `env_seed`. Sampling randomness comes from
/// `policy_seed`.
pub fn run_episode(
    system: &AgentSystem,
    cfg: &ChainConfig,
    env_seed: u64,
    policy_seed: u64,
    mode: ActMode,
    record: bool,
) -> Episode {
    let mut env = Env::new(cfg.clone(), env_seed).expect("config validated by caller");
    env.set_layout(system.layout());
    let mut rng = ChaCha8Rng::seed_from_u64(policy_seed);
    let slots = system.slots();
    let mut trajectories = vec![Trajectory::default(); if record { slots.len() } else { 0 }];
    let mut obs = env.observations();
    let mut ret = 0.0;
    let mut components = RewardComponents::default();
    while !env.is_done() {
        let (actions, decisions) = system.act(&obs, mode, &mut rng);
        let out = env.step(&actions).expect("agent actions lie on the grid");
        ret += out.shared_reward;
        components.accumulate(&out.components);
        if record {
            for ((traj, slot), (input, d)) in trajectories.iter_mut().zip(slots).zip(decisions) {
                traj.obs.push(input);
                traj.actions.push(d.levels);
                traj.log_probs.push(d.log_prob);
                traj.values.push(d.value);
                traj.rewards.push(system.slot_reward(slot, out.shared_reward, &out.local_rewards));
                traj.dones.push(out.done);
            }
        }
        obs = out.observations;
    }
    Episode {
        env_seed,
        ret,
        components,
        stockouts: env.tables().stockouts(),
        trajectories,
    }
}

/// Episodes for every seed pair, possibly in parallel, returned in input
/// order.
pub fn collect(
    system: &AgentSystem,
    cfg: &ChainConfig,
    seeds: &[(u64, u64)],
    mode: ActMode,
    record: bool,
) -> Vec<Episode> {
    map_indexed(seeds.len(), |i| {
        let (env_seed, policy_seed) = seeds[i];
        run_episode(system, cfg, env_seed, policy_seed, mode, record)
    })
}

/// Owns the agents plus one optimizer per network.
#[derive(Debug, Clone)]
pub struct Learner {
    pub system: AgentSystem,
    pub cfg: PpoConfig,
    adams: Vec<Adam>,
    updates: u64,
    seed: u64,
    lr_scale: f64,
}

impl Learner {
    pub fn new(system: AgentSystem, cfg: PpoConfig, seed: u64) -> Self {
        let adams = system.nets().iter().map(|n| Adam::new(n.params.len())).collect();
        Self {
            system,
            cfg,
            adams,
            updates: 0,
            seed,
            lr_scale: 1.0,
        }
    }

    /// Tells the learner how much of the training budget is spent, in
    /// `[0, 1]`. With `anneal_lr` the step size shrinks linearly to zero.
    pub fn set_progress(&mut self, fraction: f64) {
        if self.cfg.anneal_lr {
            self.lr_scale = (1.0 - fraction).clamp(0.0, 1.0);
        }
    }

    /// GAE per slot trajectory, then advantages normalized over everything
    /// destined for the same network.
    pub fn samples(&self, episodes: &[Episode]) -> Vec<Vec<Sample>> {
        let mut per_net: Vec<Vec<Sample>> = vec![Vec::new(); self.system.nets().len()];
        for ep in episodes {
            for (slot, traj) in self.system.slots().iter().zip(&ep.trajectories) {
                let rewards: Vec<f64> = traj.rewards.iter().map(|r| r * self.cfg.reward_scale).collect();
                let (adv, ret) = compute_gae(&rewards, &traj.values, &traj.dones, self.cfg.gamma, self.cfg.lambda);
                for t in 0..traj.len() {
                    per_net[slot.net].push(Sample {
                        obs: traj.obs[t].clone(),
                        actions: traj.actions[t].clone(),
                        old_log_prob: traj.log_probs[t],
                        advantage: adv[t],
                        ret: ret[t],
                    });
                }
            }
        }
        for samples in per_net.iter_mut() {
            let mut adv: Vec<f64> = samples.iter().map(|s| s.advantage).collect();
            normalize(&mut adv);
            for (s, a) in samples.iter_mut().zip(adv) {
                s.advantage = a;
            }
        }
        per_net
    }

    /// One PPO update of every network from recorded episodes.
    pub fn update(&mut self, episodes: &[Episode]) -> Vec<Result<UpdateStats, UpdateAborted>> {
        let batches = self.samples(episodes);
        let update_index = self.updates;
        self.updates += 1;
        let mut out = Vec::with_capacity(batches.len());
        let cfg = PpoConfig { lr: self.cfg.lr * self.lr_scale, ..self.cfg.clone() };
        for (i, samples) in batches.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, 0x5050 + i as u64, update_index));
            let net = &mut self.system.nets_mut()[i];
            out.push(ppo_update(net, &mut self.adams[i], samples, &cfg, &mut rng));
        }
        out
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use echelon_core::{RewardMode, Variant};

    fn system(variant: Variant, cfg: &ChainConfig) -> AgentSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        AgentSystem::new(variant, cfg, &[16], &mut rng).unwrap()
    }

    #[test]
    fn shared_reward_trajectories_agree() {
        let cfg = ChainConfig::divergent(2, 1);
        let s = system(Variant::Cmarl, &cfg);
        let ep = run_episode(&s, &cfg, 4, 5, ActMode::Sample, true);
        for traj in &ep.trajectories[1..] {
            assert_eq!(traj.rewards, ep.trajectories[0].rewards);
        }
        let total: f64 = ep.trajectories[0].rewards.iter().sum();
        assert!((total - ep.ret).abs() < 1e-9 * ep.ret.abs().max(1.0));
    }

    #[test]
    fn local_rewards_sum_to_shared_sequence() {
        let cfg = ChainConfig::divergent(3, 2);
        let loc = system(Variant::EnWhLocRwd, &cfg);
        assert_eq!(Variant::EnWhLocRwd.reward_mode(), RewardMode::Local);
        let ep = run_episode(&loc, &cfg, 9, 1, ActMode::Sample, true);
        let sum: f64 = ep.trajectories.iter().flat_map(|t| t.rewards.iter()).sum();
        assert!((sum - ep.ret).abs() < 1e-9 * ep.ret.abs().max(1.0));
        assert_ne!(ep.trajectories[0].rewards, ep.trajectories[1].rewards);
    }

    #[test]
    fn collection_is_deterministic_and_ordered() {
        let cfg = ChainConfig::divergent(1, 1);
        let s = system(Variant::Cmarl, &cfg);
        let seeds = [(1, 2), (3, 4), (5, 6)];
        let a = collect(&s, &cfg, &seeds, ActMode::Sample, true);
        let b = collect(&s, &cfg, &seeds, ActMode::Sample, true);
        assert_eq!(a, b);
        assert_eq!(a[1], run_episode(&s, &cfg, 3, 4, ActMode::Sample, true));
    }

    #[test]
    fn shpol_records_one_trajectory_per_product_and_agent() {
        let cfg = ChainConfig::divergent(1, 3);
        let s = system(Variant::ShPol, &cfg);
        let ep = run_episode(&s, &cfg, 0, 0, ActMode::Sample, true);
        assert_eq!(ep.trajectories.len(), 6);
        let learner = Learner::new(s, PpoConfig::default(), 0);
        let batches = learner.samples(&[ep]);
        assert_eq!(batches[0].len(), 3 * 30);
        assert_eq!(batches[1].len(), 3 * 30);
    }

    #[test]
    fn update_changes_every_network() {
        let cfg = ChainConfig::divergent(2, 1);
        let s = system(Variant::Cmarl, &cfg);
        let before = s.clone();
        let mut learner = Learner::new(s, PpoConfig { hidden: vec![16], ..PpoConfig::default() }, 7);
        let seeds: Vec<_> = (0..2).map(|i| (i, 100 + i)).collect();
        let eps = collect(&learner.system, &cfg, &seeds, ActMode::Sample, true);
        for r in learner.update(&eps) {
            r.unwrap();
        }
        for (a, b) in learner.system.nets().iter().zip(before.nets()) {
            assert_ne!(a.params, b.params);
        }
        assert_eq!(learner.updates(), 1);
    }
}
