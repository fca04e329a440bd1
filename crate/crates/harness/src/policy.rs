//! Policies of every variant behind one type: loading, saving, evaluation
//! and single-episode traces.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use echelon_baselines::{play_many, BaseStockParams, BaseStockPolicy, EpisodeOutcome, RandomPolicy};
use echelon_core::exec::derive_seed;
use echelon_core::{ChainConfig, EnvTables, Env, Policy, RewardComponents, Variant};
use echelon_rl::checkpoint::{read_manifest, MAGIC};
use echelon_rl::{collect, read_checkpoint, write_checkpoint, ActMode, AgentSystem};

use crate::error::RunError;

/// Stream tags for [`derive_seed`].
pub mod streams {
    pub const TRAIN_ENV: u64 = 1;
    pub const TRAIN_POLICY: u64 = 2;
    pub const INIT: u64 = 3;
    pub const LEARNER: u64 = 4;
    pub const EVAL_ENV: u64 = 5;
    pub const EVAL_POLICY: u64 = 6;
    pub const TUNE: u64 = 7;
    pub const BENCH: u64 = 8;
}

#[derive(Debug, Clone)]
pub enum TrainedPolicy {
    Agents(AgentSystem),
    BaseStock(BaseStockParams),
    Random,
}

impl TrainedPolicy {
    pub fn variant(&self) -> Variant {
        match self {
            TrainedPolicy::Agents(s) => s.variant(),
            TrainedPolicy::BaseStock(_) => Variant::Bsp,
            TrainedPolicy::Random => Variant::Random,
        }
    }

    pub fn save(&self, cfg: &ChainConfig, path: &Path) -> Result<(), RunError> {
        let file = File::create(path).map_err(|e| RunError::io(path, e))?;
        let mut out = BufWriter::new(file);
        let written = match self {
            TrainedPolicy::Agents(s) => write_checkpoint(s, cfg, &mut out),
            TrainedPolicy::BaseStock(p) => write_flat(&mut out, Variant::Bsp, cfg, &p.flatten()),
            TrainedPolicy::Random => write_flat(&mut out, Variant::Random, cfg, &[]),
        };
        written.and_then(|_| out.flush()).map_err(|e| RunError::io(path, e))
    }

    /// Refuses files written for another variant or chain config.
    pub fn load(variant: Variant, cfg: &ChainConfig, path: &Path) -> Result<Self, RunError> {
        let file = File::open(path).map_err(|e| RunError::io(path, e))?;
        let mut input = BufReader::new(file);
        let refuse = |msg: String| RunError::Runtime(format!("{}: {msg}", path.display()));
        if variant.is_learned() {
            let system = read_checkpoint(input, variant, cfg).map_err(|e| refuse(e.to_string()))?;
            return Ok(TrainedPolicy::Agents(system));
        }
        let m = read_manifest(&mut input).map_err(|e| refuse(e.to_string()))?;
        if m.variant != variant.tag() {
            return Err(refuse(format!("checkpoint is for variant {}, expected {variant}", m.variant)));
        }
        if m.config_hash != cfg.fingerprint() {
            return Err(refuse("checkpoint was written for a different chain config".into()));
        }
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes).map_err(|e| RunError::io(path, e))?;
        if !m.nets.is_empty() || bytes.len() != 8 * m.params {
            return Err(refuse("checkpoint payload does not match its manifest".into()));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        match variant {
            Variant::Random if values.is_empty() => Ok(TrainedPolicy::Random),
            Variant::Bsp if values.len() == cfg.num_vertices() * cfg.num_products => {
                let params = BaseStockParams::from_flat(cfg, &values);
                params.validate(cfg).map_err(refuse)?;
                Ok(TrainedPolicy::BaseStock(params))
            }
            _ => Err(refuse(format!("{} values do not fit variant {variant}", values.len()))),
        }
    }
}

fn write_flat<W: Write>(out: &mut W, variant: Variant, cfg: &ChainConfig, values: &[f64]) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "variant {}", variant.tag())?;
    writeln!(out, "config {}", cfg.fingerprint())?;
    writeln!(out, "nets 0")?;
    writeln!(out, "params {}", values.len())?;
    writeln!(out, "end")?;
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// The common evaluation seed set: `count` environment seeds derived from
/// `base`.
pub fn eval_seeds(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| derive_seed(base, streams::EVAL_ENV, i)).collect()
}

/// One episode per environment seed, greedy for learned agents. `policy_seed`
/// feeds the random baseline only.
pub fn evaluate(policy: &TrainedPolicy, cfg: &ChainConfig, seeds: &[u64], policy_seed: u64) -> Vec<EpisodeOutcome> {
    match policy {
        TrainedPolicy::Agents(system) => {
            let pairs: Vec<(u64, u64)> = seeds.iter().map(|&s| (s, 0)).collect();
            collect(system, cfg, &pairs, ActMode::Greedy, false)
                .into_iter()
                .map(|e| EpisodeOutcome {
                    ret: e.ret,
                    components: e.components,
                    stockouts: e.stockouts,
                })
                .collect()
        }
        TrainedPolicy::BaseStock(p) => play_many(cfg, seeds, |_| BaseStockPolicy::new(p.clone())),
        TrainedPolicy::Random => play_many(cfg, seeds, |i| {
            RandomPolicy::new(derive_seed(policy_seed, streams::EVAL_POLICY, i as u64))
        }),
    }
}

/// Plays one episode and returns the filled tables.
pub fn trace(policy: &TrainedPolicy, cfg: &ChainConfig, env_seed: u64, policy_seed: u64) -> EnvTables {
    let mut env = Env::new(cfg.clone(), env_seed).expect("config validated by caller");
    match policy {
        TrainedPolicy::Agents(system) => {
            env.set_layout(system.layout());
            let mut rng = ChaCha8Rng::seed_from_u64(policy_seed);
            let mut obs = env.observations();
            while !env.is_done() {
                let (actions, _) = system.act(&obs, ActMode::Greedy, &mut rng);
                obs = env.step(&actions).expect("agent actions lie on the grid").observations;
            }
        }
        TrainedPolicy::BaseStock(p) => drive(&mut env, &mut BaseStockPolicy::new(p.clone())),
        TrainedPolicy::Random => drive(&mut env, &mut RandomPolicy::new(policy_seed)),
    }
    env.tables().clone()
}

fn drive<P: Policy>(env: &mut Env, policy: &mut P) {
    policy.reset();
    while !env.is_done() {
        let a = policy.act(env);
        env.advance(&a).expect("policy actions lie on the grid");
    }
}

/// Mean and spread of evaluation episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub episodes: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single episode.
    pub stdev: f64,
    /// Per-episode means.
    pub components: RewardComponents,
    pub stockouts_per_episode: f64,
    /// Stock-outs over all store-product periods.
    pub stockout_rate: f64,
}

impl EvalSummary {
    pub fn new(cfg: &ChainConfig, outcomes: &[EpisodeOutcome]) -> Self {
        let n = outcomes.len();
        let denom = n.max(1) as f64;
        let mean = outcomes.iter().fold(0.0, |a, o| a + o.ret) / denom;
        let var = if n > 1 {
            outcomes.iter().fold(0.0, |a, o| a + (o.ret - mean).powi(2)) / (n - 1) as f64
        } else {
            0.0
        };
        let mut components = RewardComponents::default();
        for o in outcomes {
            components.accumulate(&o.components);
        }
        components.sales_revenue /= denom;
        components.holding_cost /= denom;
        components.procurement_cost /= denom;
        components.unfulfilled_penalty /= denom;
        let stockouts: usize = outcomes.iter().map(|o| o.stockouts).sum();
        let cells = cfg.horizon * cfg.num_stores * cfg.num_products;
        Self {
            episodes: n,
            mean,
            stdev: var.sqrt(),
            components,
            stockouts_per_episode: stockouts as f64 / denom,
            stockout_rate: stockouts as f64 / (denom * cells.max(1) as f64),
        }
    }

    pub fn report(&self, label: &str) -> String {
        let c = &self.components;
        format!(
            "{label}: {} episodes, return {:.3} +/- {:.3}\n  revenue {:.3}  holding {:.3}  procurement {:.3}  unfulfilled {:.3}\n  stock-out rate {:.4} ({:.2} per episode)\n",
            self.episodes,
            self.mean,
            self.stdev,
            c.sales_revenue,
            c.holding_cost,
            c.procurement_cost,
            c.unfulfilled_penalty,
            self.stockout_rate,
            self.stockouts_per_episode
        )
    }
}
