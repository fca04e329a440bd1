//! Run configuration files.
//!
//! A config is a TOML document. Environment fields sit at the top level;
//! `[ppo]`, `[experiment]` and `[base_stock]` hold the rest. Anything left
//! out takes the defaults of a divergent chain with the given `num_stores`
//! and `num_products` (both default to 1). Unknown keys are rejected.
//!
//! Overrides address any existing key by dotted path, with array indices as
//! path segments: `demand_mean.0.0=12`, `ppo.hidden.1=32`,
//! `experiment.variant=SARL`.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use echelon_baselines::BaseStockParams;
use echelon_core::config::default_batch_size;
use echelon_core::{ChainConfig, Variant};
use echelon_rl::PpoConfig;

use crate::error::RunError;

pub const SECTIONS: [&str; 3] = ["ppo", "experiment", "base_stock"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub variant: Variant,
    /// Training budget.
    pub episodes: usize,
    /// Episodes between metric flushes and best-checkpoint checks.
    pub eval_every: usize,
    pub eval_episodes: usize,
    /// Base of the evaluation seed set shared by every compared policy.
    pub eval_seed: u64,
    pub seed: u64,
    /// Episodes averaged per objective call of the base-stock search.
    pub tune_episodes: usize,
    /// Checkpoint read by `eval` and `trace`: `final`, `best` or a path.
    pub checkpoint: String,
    pub bench_products: Vec<usize>,
    pub bench_steps: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Cmarl,
            episodes: 10_000,
            eval_every: 100,
            eval_episodes: 50,
            eval_seed: 9000,
            seed: 0,
            tune_episodes: 50,
            checkpoint: "final".into(),
            bench_products: vec![1, 10, 100, 1000],
            bench_steps: 1000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaseStockConfig {
    /// Fixed levels `z[vertex][product]`; tuned by search when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub chain: ChainConfig,
    pub ppo: PpoConfig,
    pub experiment: ExperimentConfig,
    pub base_stock: BaseStockConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            chain: ChainConfig::divergent(1, 1),
            ppo: PpoConfig::default(),
            experiment: ExperimentConfig::default(),
            base_stock: BaseStockConfig::default(),
        }
    }
}

/// One `KEY=VALUE` override.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Override {
    pub key: String,
    pub value: String,
}

impl Override {
    pub fn new(key: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            value: value.into(),
        }
    }

    pub fn parse(token: &str) -> Result<Self, RunError> {
        match token.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => Ok(Self::new(k.trim(), v.trim())),
            _ => Err(RunError::Usage(format!("--set expects KEY=VALUE, got `{token}`"))),
        }
    }
}

fn config_err(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

fn to_table<T: Serialize>(value: &T) -> Table {
    Table::try_from(value).expect("config types serialize to TOML tables")
}

impl RunConfig {
    /// Reads, merges, overrides and validates.
    pub fn load(path: Option<&Path>, overrides: &[Override]) -> Result<Self, RunError> {
        let text = match path {
            Some(p) => fs::read_to_string(p).map_err(|e| config_err(format!("cannot read config `{}`: {e}", p.display())))?,
            None => String::new(),
        };
        let origin = path.map_or_else(|| "<defaults>".to_string(), |p| p.display().to_string());
        Self::parse(&text, &origin, overrides)
    }

    pub fn parse(text: &str, origin: &str, overrides: &[Override]) -> Result<Self, RunError> {
        let mut doc: Table = text
            .parse()
            .map_err(|e| config_err(format!("config `{origin}` is not valid TOML: {e}")))?;

        let mut sections = Vec::with_capacity(SECTIONS.len());
        for name in SECTIONS {
            match doc.remove(name) {
                Some(Value::Table(t)) => sections.push(t),
                Some(_) => return Err(config_err(format!("config key `{name}` must be a table"))),
                None => sections.push(Table::new()),
            }
        }

        let shape = |key: &str| -> Result<usize, RunError> {
            let raw = match overrides.iter().rev().find(|o| o.key == key) {
                Some(o) => parse_value(&o.value),
                None => doc.get(key).cloned().unwrap_or(Value::Integer(1)),
            };
            raw.as_integer()
                .and_then(|i| usize::try_from(i).ok())
                .ok_or_else(|| config_err(format!("`{key}` must be a non-negative integer, got `{raw}`")))
        };
        let base = ChainConfig::divergent(shape("num_stores")?, shape("num_products")?);

        let mut root = to_table(&base);
        let mut user_keys = BTreeSet::new();
        for (key, value) in doc {
            if !root.contains_key(&key) {
                return Err(config_err(format!("unknown config key `{key}` in `{origin}`")));
            }
            user_keys.insert(key.clone());
            root.insert(key, value);
        }
        let defaults = [
            to_table(&PpoConfig::default()),
            to_table(&ExperimentConfig::default()),
            to_table(&BaseStockConfig::default()),
        ];
        for ((name, mut merged), given) in SECTIONS.iter().zip(defaults).zip(sections) {
            for (key, value) in given {
                if *name != "base_stock" && !merged.contains_key(&key) {
                    return Err(config_err(format!("unknown config key `{name}.{key}` in `{origin}`")));
                }
                merged.insert(key, value);
            }
            root.insert(name.to_string(), Value::Table(merged));
        }

        for o in overrides {
            apply_override(&mut root, o)?;
            user_keys.insert(o.key.split('.').next().unwrap_or_default().to_string());
        }

        let mut take = |name: &str| match root.remove(name) {
            Some(Value::Table(t)) => t,
            _ => Table::new(),
        };
        let ppo: PpoConfig = take("ppo").try_into().map_err(|e| config_err(format!("[ppo]: {e}")))?;
        let experiment: ExperimentConfig = take("experiment")
            .try_into()
            .map_err(|e| config_err(format!("[experiment]: {e}")))?;
        let base_stock: BaseStockConfig = take("base_stock")
            .try_into()
            .map_err(|e| config_err(format!("[base_stock]: {e}")))?;
        let mut chain: ChainConfig = root.try_into().map_err(|e| config_err(format!("chain config: {e}")))?;
        if !user_keys.contains("history_len") {
            chain.history_len = chain.max_lead_time();
        }
        if !user_keys.contains("batch_size") {
            chain.batch_size = default_batch_size(&chain);
        }

        let cfg = Self {
            chain,
            ppo,
            experiment,
            base_stock,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        self.chain.validate().map_err(|e| config_err(e.to_string()))?;
        self.ppo.validate().map_err(config_err)?;
        let e = &self.experiment;
        if e.episodes == 0 || e.eval_every == 0 || e.eval_episodes == 0 || e.tune_episodes == 0 || e.bench_steps == 0 {
            return Err(config_err(
                "experiment.episodes, eval_every, eval_episodes, tune_episodes and bench_steps must be positive",
            ));
        }
        if e.episodes < e.eval_every {
            return Err(config_err(format!(
                "experiment.episodes ({}) must be at least experiment.eval_every ({})",
                e.episodes, e.eval_every
            )));
        }
        if e.bench_products.is_empty() || e.bench_products.contains(&0) {
            return Err(config_err("experiment.bench_products needs positive product counts"));
        }
        if let Some(params) = self.base_stock_params() {
            params.validate(&self.chain).map_err(config_err)?;
        }
        Ok(())
    }

    pub fn base_stock_params(&self) -> Option<BaseStockParams> {
        self.base_stock.z.clone().map(|z| BaseStockParams { z })
    }

    /// The full effective configuration, loadable as a config file.
    pub fn render(&self) -> String {
        let mut out = toml::to_string(&self.chain).expect("chain config serializes");
        for (name, body) in [
            ("ppo", toml::to_string(&self.ppo)),
            ("experiment", toml::to_string(&self.experiment)),
            ("base_stock", toml::to_string(&self.base_stock)),
        ] {
            out.push_str(&format!("\n[{name}]\n"));
            out.push_str(&body.expect("config section serializes"));
        }
        out
    }
}

/// A TOML literal when the text is one, otherwise the raw text as a string.
fn parse_value(text: &str) -> Value {
    format!("v = {text}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}

fn apply_override(root: &mut Table, o: &Override) -> Result<(), RunError> {
    let unknown = || config_err(format!("--set {}: no config key `{}`", o.key, o.key));
    let mut segments = o.key.split('.');
    let first = segments.next().ok_or_else(unknown)?;
    let mut slot = root.get_mut(first).ok_or_else(unknown)?;
    for seg in segments {
        slot = match slot {
            Value::Table(t) => t.get_mut(seg).ok_or_else(unknown)?,
            Value::Array(a) => {
                let i: usize = seg.parse().map_err(|_| unknown())?;
                a.get_mut(i).ok_or_else(unknown)?
            }
            _ => return Err(unknown()),
        };
    }
    let malformed = |want: &str| {
        config_err(format!(
            "--set {}: malformed value `{}` (expected {want})",
            o.key, o.value
        ))
    };
    let given = parse_value(&o.value);
    let new = match (&*slot, given) {
        (Value::Float(_), Value::Integer(i)) => Value::Float(i as f64),
        (Value::Float(_), v @ Value::Float(_)) => v,
        (Value::Float(_), _) => return Err(malformed("a number")),
        (Value::Integer(_), v @ Value::Integer(_)) => v,
        (Value::Integer(_), _) => return Err(malformed("an integer")),
        (Value::Boolean(_), v @ Value::Boolean(_)) => v,
        (Value::Boolean(_), _) => return Err(malformed("true or false")),
        (Value::String(_), Value::String(s)) => Value::String(s),
        (Value::String(_), _) => Value::String(o.value.clone()),
        (Value::Array(_), v @ Value::Array(_)) => v,
        (Value::Array(_), _) => return Err(malformed("an array")),
        (Value::Table(_), _) => return Err(malformed("a table; address one of its keys instead")),
        (Value::Datetime(_), _) => return Err(malformed("a datetime")),
    };
    *slot = new;
    Ok(())
}
