//! The `echelon` command line.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use echelon_baselines::tune::default_options;
use echelon_baselines::{optimize_base_stock, BaseStockParams};
use echelon_core::trace::write_trace_csv;
use echelon_core::Variant;

use crate::bench::{bench_step, write_bench_csv};
use crate::config::{Override, RunConfig};
use crate::error::RunError;
use crate::metrics::summarize;
use crate::policy::{eval_seeds, evaluate, trace, EvalSummary, TrainedPolicy};
use crate::train::{train, tune_seeds, ExperimentSpec};

#[derive(Debug, Parser)]
#[command(name = "echelon", version, about = "Multi-echelon inventory experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a variant and write metrics and checkpoints.
    Train(Common),
    /// Evaluate a checkpoint (or baseline) greedily on the common seed set.
    Eval(Common),
    /// Tune base-stock levels and compare them with the random policy.
    Baseline(Common),
    /// Play one greedy episode and write its per-period trace.
    Trace(Common),
    /// Time vectorized and scalar steps across product counts.
    Bench(Common),
    /// Check a config and print it fully resolved.
    Validate(Common),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML config; defaults are used for everything it leaves out.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Sets experiment.seed.
    #[arg(long, value_name = "INT")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Dotted-path override of any config key, e.g. demand_mean.0.0=12.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Sets experiment.variant.
    #[arg(long, value_name = "TAG", value_parser = parse_variant)]
    pub variant: Option<Variant>,
    /// Training budget for train, evaluation episodes for eval and
    /// baseline, timed steps per product count for bench.
    #[arg(long, value_name = "INT")]
    pub episodes: Option<usize>,
    /// Only errors on stderr.
    #[arg(long)]
    pub quiet: bool,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: echelon_core::variant::UnknownVariant| e.to_string())
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match dispatch(cli.command, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn overrides(cmd: &str, c: &Common) -> Result<Vec<Override>, RunError> {
    let mut out = Vec::new();
    if let Some(seed) = c.seed {
        out.push(Override::new("experiment.seed", seed.to_string()));
    }
    if let Some(v) = c.variant {
        out.push(Override::new("experiment.variant", v.tag()));
    }
    if let Some(n) = c.episodes {
        let key = match cmd {
            "train" => "experiment.episodes",
            "eval" | "baseline" => "experiment.eval_episodes",
            "bench" => "experiment.bench_steps",
            _ => return Err(RunError::Usage(format!("--episodes has no meaning for `{cmd}`"))),
        };
        out.push(Override::new(key, n.to_string()));
    }
    for token in &c.set {
        out.push(Override::parse(token)?);
    }
    Ok(out)
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    quiet: bool,
}

impl Ctx {
    fn load(cmd: &str, c: &Common) -> Result<Self, RunError> {
        let sets = overrides(cmd, c)?;
        let cfg = RunConfig::load(c.config.as_deref(), &sets)?;
        let out = c.out.clone().unwrap_or_else(|| {
            PathBuf::from("runs").join(format!("{}-seed{}", cfg.experiment.variant.tag(), cfg.experiment.seed))
        });
        Ok(Self {
            cfg,
            out,
            quiet: c.quiet,
        })
    }

    fn warn_nondefault_demand(&self) {
        let flagged = self.cfg.chain.nondefault_demand();
        if !self.quiet && !flagged.is_empty() {
            eprintln!(
                "warning: {} demand means lie outside the reference range [10, 1000]",
                flagged.len()
            );
        }
    }

    /// Creates the output directory and echoes the resolved config there.
    fn prepare_out(&self) -> Result<(), RunError> {
        fs::create_dir_all(&self.out).map_err(|e| RunError::io(&self.out, e))?;
        let path = self.out.join("spec.resolved");
        fs::write(&path, self.cfg.render()).map_err(|e| RunError::io(&path, e))
    }

    fn checkpoint_path(&self) -> PathBuf {
        match self.cfg.experiment.checkpoint.as_str() {
            "final" => self.out.join("checkpoint_final.bin"),
            "best" => self.out.join("checkpoint_best.bin"),
            other => PathBuf::from(other),
        }
    }

    /// The policy to evaluate or trace. Learned variants need a checkpoint;
    /// BSP falls back to configured or freshly tuned levels.
    fn policy(&self) -> Result<TrainedPolicy, RunError> {
        let variant = self.cfg.experiment.variant;
        let chain = &self.cfg.chain;
        let path = self.checkpoint_path();
        match variant {
            Variant::Random => Ok(TrainedPolicy::Random),
            Variant::Bsp if !path.exists() => Ok(TrainedPolicy::BaseStock(self.base_stock()?)),
            v => TrainedPolicy::load(v, chain, &path),
        }
    }

    fn base_stock(&self) -> Result<BaseStockParams, RunError> {
        if let Some(p) = self.cfg.base_stock_params() {
            return Ok(p);
        }
        let chain = &self.cfg.chain;
        let seeds = tune_seeds(self.cfg.experiment.seed, self.cfg.experiment.tune_episodes);
        optimize_base_stock(chain, &seeds, &default_options(chain))
            .map(|t| t.params)
            .map_err(|e| RunError::Runtime(format!("base-stock search failed: {e}")))
    }
}

fn emit(stdout: &mut dyn Write, text: &str) -> Result<(), RunError> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| RunError::Runtime(format!("stdout: {e}")))
}

pub fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<(), RunError> {
    match command {
        Command::Train(c) => cmd_train(Ctx::load("train", &c)?, stdout),
        Command::Eval(c) => cmd_eval(Ctx::load("eval", &c)?, stdout),
        Command::Baseline(c) => cmd_baseline(Ctx::load("baseline", &c)?, stdout),
        Command::Trace(c) => cmd_trace(Ctx::load("trace", &c)?, stdout),
        Command::Bench(c) => cmd_bench(Ctx::load("bench", &c)?, stdout),
        Command::Validate(c) => {
            let ctx = Ctx::load("validate", &c)?;
            ctx.warn_nondefault_demand();
            emit(stdout, &ctx.cfg.render())
        }
    }
}

fn cmd_train(ctx: Ctx, stdout: &mut dyn Write) -> Result<(), RunError> {
    ctx.warn_nondefault_demand();
    ctx.prepare_out()?;
    let spec = ExperimentSpec::from_config(&ctx.cfg, Some(ctx.out.clone()));
    let cadence = spec.eval_every;
    let quiet = ctx.quiet;
    let mut next_report = cadence;
    train(&spec, |p| {
        if !quiet && p.episodes_done >= next_report {
            eprintln!("episode {:>7}  rolling mean {:.3}", p.episodes_done, p.rolling_mean);
            while next_report <= p.episodes_done {
                next_report += cadence;
            }
        }
    })?;
    if !ctx.quiet {
        emit(stdout, &format!("{} on {}\n", spec.variant, ctx.out.display()))?;
        emit(stdout, &summarize(&ctx.out)?)?;
    }
    Ok(())
}

fn eval_csv(path: &Path, seeds: &[u64], outcomes: &[echelon_baselines::EpisodeOutcome]) -> Result<(), RunError> {
    let io = |e| RunError::io(path, e);
    let mut f = BufWriter::new(fs::File::create(path).map_err(io)?);
    writeln!(f, "episode,seed,return,sales_revenue,holding_cost,procurement_cost,unfulfilled_penalty,stockouts").map_err(io)?;
    for (i, (s, o)) in seeds.iter().zip(outcomes).enumerate() {
        let c = &o.components;
        writeln!(
            f,
            "{i},{s},{},{},{},{},{},{}",
            o.ret, c.sales_revenue, c.holding_cost, c.procurement_cost, c.unfulfilled_penalty, o.stockouts
        )
        .map_err(io)?;
    }
    f.flush().map_err(io)
}

fn cmd_eval(ctx: Ctx, stdout: &mut dyn Write) -> Result<(), RunError> {
    ctx.warn_nondefault_demand();
    let policy = ctx.policy()?;
    ctx.prepare_out()?;
    let e = &ctx.cfg.experiment;
    let seeds = eval_seeds(e.eval_seed, e.eval_episodes);
    let outcomes = evaluate(&policy, &ctx.cfg.chain, &seeds, e.seed);
    eval_csv(&ctx.out.join("eval.csv"), &seeds, &outcomes)?;
    if !ctx.quiet {
        let s = EvalSummary::new(&ctx.cfg.chain, &outcomes);
        emit(stdout, &s.report(policy.variant().tag()))?;
    }
    Ok(())
}

fn cmd_baseline(ctx: Ctx, stdout: &mut dyn Write) -> Result<(), RunError> {
    ctx.warn_nondefault_demand();
    ctx.prepare_out()?;
    let chain = &ctx.cfg.chain;
    let e = &ctx.cfg.experiment;
    let params = ctx.base_stock()?;
    let seeds = eval_seeds(e.eval_seed, e.eval_episodes);
    let rows = [
        ("BSP", EvalSummary::new(chain, &evaluate(&TrainedPolicy::BaseStock(params.clone()), chain, &seeds, e.seed))),
        ("RANDOM", EvalSummary::new(chain, &evaluate(&TrainedPolicy::Random, chain, &seeds, e.seed))),
    ];
    let path = ctx.out.join("baseline.csv");
    let io = |err| RunError::io(&path, err);
    let mut f = fs::File::create(&path).map_err(io)?;
    writeln!(
        f,
        "policy,episodes,mean_return,stdev_return,sales_revenue,holding_cost,procurement_cost,unfulfilled_penalty,stockout_rate"
    )
    .map_err(io)?;
    for (tag, s) in &rows {
        let c = &s.components;
        writeln!(
            f,
            "{tag},{},{},{},{},{},{},{},{}",
            s.episodes, s.mean, s.stdev, c.sales_revenue, c.holding_cost, c.procurement_cost, c.unfulfilled_penalty, s.stockout_rate
        )
        .map_err(io)?;
    }
    let levels = format!("[base_stock]\nz = {:?}\n", params.z);
    let lpath = ctx.out.join("base_stock.toml");
    fs::write(&lpath, &levels).map_err(|err| RunError::io(&lpath, err))?;
    if !ctx.quiet {
        emit(stdout, &levels)?;
        for (tag, s) in &rows {
            emit(stdout, &s.report(tag))?;
        }
    }
    Ok(())
}

fn cmd_trace(ctx: Ctx, stdout: &mut dyn Write) -> Result<(), RunError> {
    ctx.warn_nondefault_demand();
    let policy = ctx.policy()?;
    ctx.prepare_out()?;
    let seed = ctx.cfg.experiment.seed;
    let tables = trace(&policy, &ctx.cfg.chain, seed, seed);
    let path = ctx.out.join("trace.csv");
    let file = fs::File::create(&path).map_err(|e| RunError::io(&path, e))?;
    let mut w = BufWriter::new(file);
    write_trace_csv(&tables, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| RunError::io(&path, e))?;
    if !ctx.quiet {
        let ret: f64 = tables.reward[..tables.clock].iter().sum();
        emit(
            stdout,
            &format!(
                "{}: return {ret:.3}, {} stock-outs, trace in {}\n",
                policy.variant(),
                tables.stockouts(),
                path.display()
            ),
        )?;
    }
    Ok(())
}

fn cmd_bench(ctx: Ctx, stdout: &mut dyn Write) -> Result<(), RunError> {
    ctx.prepare_out()?;
    let e = &ctx.cfg.experiment;
    let rows = bench_step(&ctx.cfg.chain, &e.bench_products, e.bench_steps, e.seed);
    write_bench_csv(&rows, &ctx.out.join("bench.csv"))?;
    if !ctx.quiet {
        emit(stdout, &format!("{:>8} {:>14} {:>14} {:>8}\n", "products", "vectorized_us", "scalar_us", "ratio"))?;
        for r in &rows {
            emit(
                stdout,
                &format!(
                    "{:>8} {:>14.3} {:>14.3} {:>8.3}\n",
                    r.products,
                    r.vectorized * 1e6,
                    r.scalar * 1e6,
                    r.ratio()
                ),
            )?;
        }
    }
    Ok(())
}
