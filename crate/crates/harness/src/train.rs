//! Training runs for every variant.
//!
//! Learned variants alternate collection of `episodes_per_update` sampled
//! episodes with one PPO update per network. `BSP` tunes its levels first
//! (unless fixed levels are given) and `RANDOM` has nothing to fit; both
//! still play the full budget so their metrics line up with the learners'.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use echelon_baselines::tune::default_options;
use echelon_baselines::{optimize_base_stock, play_many, BaseStockParams, BaseStockPolicy, EpisodeOutcome, RandomPolicy};
use echelon_core::exec::derive_seed;
use echelon_core::{ChainConfig, Variant};
use echelon_rl::{collect, ActMode, AgentSystem, Learner, PpoConfig};

use crate::config::RunConfig;
use crate::error::RunError;
use crate::metrics::{MetricsRow, MetricsWriter, RollingMean, ROLLING_WINDOW};
use crate::policy::{streams, TrainedPolicy};

/// Consecutive aborted updates after which a run is halted.
pub const MAX_CONSECUTIVE_ABORTS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub variant: Variant,
    pub chain: ChainConfig,
    pub ppo: PpoConfig,
    pub episodes: usize,
    /// Episodes between metric flushes and best-checkpoint checks.
    pub eval_every: usize,
    pub seed: u64,
    pub tune_episodes: usize,
    /// Fixed base-stock levels; tuned when absent.
    pub base_stock: Option<BaseStockParams>,
    /// Where metrics and checkpoints go; nothing is written when absent.
    pub out_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn from_config(cfg: &RunConfig, out_dir: Option<PathBuf>) -> Self {
        let e = &cfg.experiment;
        Self {
            variant: e.variant,
            chain: cfg.chain.clone(),
            ppo: cfg.ppo.clone(),
            episodes: e.episodes,
            eval_every: e.eval_every,
            seed: e.seed,
            tune_episodes: e.tune_episodes,
            base_stock: cfg.base_stock_params(),
            out_dir,
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Config(m));
        if let Err(e) = self.chain.validate() {
            return bad(e.to_string());
        }
        if let Err(e) = self.ppo.validate() {
            return bad(e);
        }
        if self.eval_every == 0 || self.episodes < self.eval_every {
            return bad(format!(
                "episode budget {} must be at least the evaluation cadence {} (and the cadence positive)",
                self.episodes, self.eval_every
            ));
        }
        if self.tune_episodes == 0 {
            return bad("tune_episodes must be positive".into());
        }
        Ok(())
    }
}

/// One PPO update of one network, for `updates.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateRecord {
    pub update: u64,
    pub net: usize,
    pub aborted: bool,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub final_policy: TrainedPolicy,
    pub best_policy: TrainedPolicy,
    pub metrics: Vec<MetricsRow>,
    pub updates: Vec<UpdateRecord>,
    /// Rolling mean at the best checkpoint.
    pub best_rolling_mean: f64,
}

/// Live progress, called after every batch of episodes.
pub struct Progress<'a> {
    pub episodes_done: usize,
    pub rolling_mean: f64,
    pub rows: &'a [MetricsRow],
}

struct Outputs {
    dir: PathBuf,
    metrics: MetricsWriter,
    timing: File,
    updates: File,
}

impl Outputs {
    fn create(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
        let open = |name: &str, header: &str| -> Result<File, RunError> {
            let path = dir.join(name);
            let mut f = File::create(&path).map_err(|e| RunError::io(&path, e))?;
            writeln!(f, "{header}").map_err(|e| RunError::io(&path, e))?;
            Ok(f)
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            metrics: MetricsWriter::create(&dir.join("metrics.csv"))?,
            timing: open("timing.csv", "episode,wall_seconds")?,
            updates: open(
                "updates.csv",
                "update,net,aborted,policy_loss,value_loss,entropy,kl,clip_fraction,grad_norm",
            )?,
        })
    }

    fn io(&self, name: &str) -> impl Fn(std::io::Error) -> RunError + '_ {
        let path = self.dir.join(name);
        move |e| RunError::io(&path, e)
    }
}

/// Seeds of training episode `i`: environment, then policy sampling.
pub fn episode_seeds(seed: u64, i: usize) -> (u64, u64) {
    (
        derive_seed(seed, streams::TRAIN_ENV, i as u64),
        derive_seed(seed, streams::TRAIN_POLICY, i as u64),
    )
}

/// Seeds averaged by the base-stock search.
pub fn tune_seeds(seed: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| derive_seed(seed, streams::TUNE, i)).collect()
}

enum Learning {
    Agents(Box<Learner>),
    BaseStock(BaseStockParams),
    Random,
}

impl Learning {
    fn policy(&self) -> TrainedPolicy {
        match self {
            Learning::Agents(l) => TrainedPolicy::Agents(l.system.clone()),
            Learning::BaseStock(p) => TrainedPolicy::BaseStock(p.clone()),
            Learning::Random => TrainedPolicy::Random,
        }
    }
}

pub fn train(spec: &ExperimentSpec, mut progress: impl FnMut(&Progress<'_>)) -> Result<TrainOutcome, RunError> {
    spec.validate()?;
    let cfg = &spec.chain;
    let mut out = spec.out_dir.as_deref().map(Outputs::create).transpose()?;

    let mut learning = match spec.variant {
        Variant::Random => Learning::Random,
        Variant::Bsp => Learning::BaseStock(match &spec.base_stock {
            Some(p) => p.clone(),
            None => {
                let seeds = tune_seeds(spec.seed, spec.tune_episodes);
                optimize_base_stock(cfg, &seeds, &default_options(cfg))
                    .map_err(|e| RunError::Runtime(format!("base-stock search failed: {e}")))?
                    .params
            }
        }),
        v => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, streams::INIT, 0));
            let system = AgentSystem::new(v, cfg, &spec.ppo.hidden, &mut rng)
                .map_err(|e| RunError::Runtime(format!("cannot build agents: {e}")))?;
            let learner_seed = derive_seed(spec.seed, streams::LEARNER, 0);
            Learning::Agents(Box::new(Learner::new(system, spec.ppo.clone(), learner_seed)))
        }
    };

    let store_periods = cfg.horizon * cfg.num_stores * cfg.num_products;
    let mut rolling = RollingMean::new(ROLLING_WINDOW);
    let mut rows = Vec::with_capacity(spec.episodes);
    let mut updates = Vec::new();
    let mut best: Option<(f64, TrainedPolicy)> = None;
    let mut aborts_in_a_row = 0;
    let mut next_check = spec.eval_every;
    let batch = spec.ppo.episodes_per_update;
    let mut done = 0;
    let mut updates_written = 0;

    while done < spec.episodes {
        let n = batch.min(spec.episodes - done);
        let seeds: Vec<(u64, u64)> = (done..done + n).map(|i| episode_seeds(spec.seed, i)).collect();
        let started = Instant::now();
        let outcomes: Vec<EpisodeOutcome> = match &mut learning {
            Learning::Agents(learner) => {
                learner.set_progress(done as f64 / spec.episodes as f64);
                let episodes = collect(&learner.system, cfg, &seeds, ActMode::Sample, true);
                let results = learner.update(&episodes);
                let index = learner.updates() - 1;
                let mut aborted = false;
                for (net, r) in results.iter().enumerate() {
                    let s = r.clone().unwrap_or_default();
                    aborted |= r.is_err();
                    updates.push(UpdateRecord {
                        update: index,
                        net,
                        aborted: r.is_err(),
                        policy_loss: s.policy_loss,
                        value_loss: s.value_loss,
                        entropy: s.entropy,
                        kl: s.kl,
                        clip_fraction: s.clip_fraction,
                        grad_norm: s.grad_norm,
                    });
                }
                aborts_in_a_row = if aborted { aborts_in_a_row + 1 } else { 0 };
                episodes
                    .into_iter()
                    .map(|e| EpisodeOutcome {
                        ret: e.ret,
                        components: e.components,
                        stockouts: e.stockouts,
                    })
                    .collect()
            }
            Learning::BaseStock(p) => {
                let env_seeds: Vec<u64> = seeds.iter().map(|s| s.0).collect();
                play_many(cfg, &env_seeds, |_| BaseStockPolicy::new(p.clone()))
            }
            Learning::Random => {
                let env_seeds: Vec<u64> = seeds.iter().map(|s| s.0).collect();
                play_many(cfg, &env_seeds, |i| RandomPolicy::new(seeds[i].1))
            }
        };
        let per_episode = started.elapsed().as_secs_f64() / n as f64;

        let first_new = rows.len();
        for (i, o) in outcomes.iter().enumerate() {
            let c = &o.components;
            rows.push(MetricsRow {
                episode: done + i,
                ret: o.ret,
                rolling_mean: rolling.push(o.ret),
                sales_revenue: c.sales_revenue,
                holding_cost: c.holding_cost,
                procurement_cost: c.procurement_cost,
                unfulfilled_penalty: c.unfulfilled_penalty,
                stockouts: o.stockouts,
                store_periods,
            });
        }
        done += n;

        if let Some(out) = out.as_mut() {
            for row in &rows[first_new..] {
                out.metrics.write(row)?;
                writeln!(out.timing, "{},{per_episode}", row.episode).map_err(out.io("timing.csv"))?;
            }
            for u in &updates[updates_written..] {
                writeln!(
                    out.updates,
                    "{},{},{},{},{},{},{},{},{}",
                    u.update, u.net, u.aborted as u8, u.policy_loss, u.value_loss, u.entropy, u.kl, u.clip_fraction, u.grad_norm
                )
                .map_err(out.io("updates.csv"))?;
            }
        }

        updates_written = updates.len();

        if aborts_in_a_row >= MAX_CONSECUTIVE_ABORTS {
            if let Some(out) = out.as_mut() {
                out.metrics.flush()?;
            }
            return Err(RunError::Runtime(format!(
                "training halted after {MAX_CONSECUTIVE_ABORTS} consecutive aborted updates (non-finite loss) at episode {done}"
            )));
        }

        if done >= next_check || done == spec.episodes {
            while next_check <= done {
                next_check += spec.eval_every;
            }
            let mean = rolling.mean();
            if best.as_ref().is_none_or(|(b, _)| mean > *b) {
                let policy = learning.policy();
                if let Some(out) = out.as_ref() {
                    policy.save(cfg, &out.dir.join("checkpoint_best.bin"))?;
                }
                best = Some((mean, policy));
            }
            if let Some(out) = out.as_mut() {
                out.metrics.flush()?;
                out.timing.flush().map_err(out.io("timing.csv"))?;
                out.updates.flush().map_err(out.io("updates.csv"))?;
            }
        }
        progress(&Progress {
            episodes_done: done,
            rolling_mean: rolling.mean(),
            rows: &rows,
        });
    }

    let final_policy = learning.policy();
    if let Some(out) = out.as_mut() {
        final_policy.save(cfg, &out.dir.join("checkpoint_final.bin"))?;
        out.metrics.flush()?;
    }
    let (best_rolling_mean, best_policy) = best.expect("at least one cadence point");
    Ok(TrainOutcome {
        final_policy,
        best_policy,
        metrics: rows,
        updates,
        best_rolling_mean,
    })
}
