//! End-to-end acceptance checks. Each test prints one PASS/FAIL line on
//! stderr, bypassing output capture, then asserts.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use echelon_baselines::tune::default_options;
use echelon_baselines::{grid_search_base_stock, optimize_base_stock};
use echelon_core::allocation::resolve_allocation;
use echelon_core::audit::check_episode;
use echelon_core::fuzz::{random_action, random_config};
use echelon_core::reference::scalar_reference_step;
use echelon_core::reward::{self, Economics, PeriodFlows, RewardComponents};
use echelon_core::{ChainConfig, Env, ObsLayout, Variant, WarehouseView};
use echelon_harness::bench::bench_step;
use echelon_harness::config::{Override, RunConfig};
use echelon_harness::policy::{eval_seeds, evaluate, EvalSummary, TrainedPolicy};
use echelon_harness::train::{train, tune_seeds, ExperimentSpec};
use echelon_rl::gradcheck::gradient_check;
use echelon_rl::ppo::{ppo_loss, LossCoeffs, Sample};
use echelon_rl::{ActMode, PolicyNet};

const TRAIN_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const EVAL_SEED: u64 = 9000;

fn report(criterion: usize, pass: bool, name: &str, detail: &str, elapsed: Duration) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "acceptance {criterion:>2} {verdict} {name}: {detail} [{:.1}s]",
        elapsed.as_secs_f64()
    );
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn majority(wins: usize, of: usize) -> bool {
    2 * wins > of
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Chain {
    /// One store, one product, mean demand 10.
    Smoke,
    /// Three stores, one product, warehouse capacity 60.
    ThreeStore,
}

fn run_config(chain: Chain, variant: Variant, seed: u64) -> RunConfig {
    let mut sets = vec![
        Override::new("experiment.variant", variant.tag()),
        Override::new("experiment.seed", seed.to_string()),
        Override::new("experiment.episodes", "10000"),
        Override::new("ppo.hidden", "[64, 64]"),
        Override::new("ppo.lr", "0.001"),
    ];
    if chain == Chain::ThreeStore {
        sets.push(Override::new("num_stores", "3"));
        sets.push(Override::new("warehouse_capacity", "[60]"));
    }
    RunConfig::load(None, &sets).expect("acceptance config is valid")
}

type Slot = Arc<OnceLock<TrainedPolicy>>;

/// Final policy of a training run, trained once per process.
fn trained(chain: Chain, variant: Variant, seed: u64) -> TrainedPolicy {
    static RUNS: OnceLock<Mutex<HashMap<(Chain, Variant, u64), Slot>>> = OnceLock::new();
    let slot = RUNS
        .get_or_init(Default::default)
        .lock()
        .unwrap()
        .entry((chain, variant, seed))
        .or_default()
        .clone();
    slot.get_or_init(|| {
        let cfg = run_config(chain, variant, seed);
        let spec = ExperimentSpec::from_config(&cfg, None);
        train(&spec, |_| {}).expect("training completes").final_policy
    })
    .clone()
}

fn eval_summary(chain: Chain, policy: &TrainedPolicy, episodes: usize) -> EvalSummary {
    let cfg = run_config(chain, policy.variant(), 0).chain;
    let outcomes = evaluate(policy, &cfg, &eval_seeds(EVAL_SEED, episodes), 0);
    EvalSummary::new(&cfg, &outcomes)
}

#[test]
fn c01_vectorized_step_matches_scalar_reference() {
    let start = Instant::now();
    let mut mismatches = 0;
    let mut steps = 0;
    for episode in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + episode);
        let cfg = random_config(&mut rng);
        let mut fast = Env::new(cfg.clone(), episode).unwrap();
        fast.set_layout(ObsLayout {
            warehouse: if episode % 2 == 0 { WarehouseView::Enhanced } else { WarehouseView::Limited },
            oracle_demand: episode % 3 == 0,
        });
        let mut slow = fast.clone();
        let mut same = true;
        while !fast.is_done() {
            let a = random_action(&cfg, &mut rng);
            let x = fast.step(&a).unwrap();
            let y = scalar_reference_step(&mut slow, &a).unwrap();
            same &= x.shared_reward.to_bits() == y.shared_reward.to_bits()
                && x.components.bit_eq(&y.components)
                && x.local_rewards.iter().map(|r| r.to_bits()).eq(y.local_rewards.iter().map(|r| r.to_bits()))
                && x.observations == y.observations;
            steps += 1;
        }
        same &= fast.tables().bit_identical(slow.tables());
        mismatches += usize::from(!same);
    }
    let elapsed = start.elapsed();
    let pass = mismatches == 0 && elapsed < Duration::from_secs(120);
    report(
        1,
        pass,
        "oracle equivalence",
        &format!("1000 fuzzed episodes, {steps} steps, {mismatches} divergent"),
        elapsed,
    );
    assert!(pass);
}

#[test]
fn c02_invariants_hold_on_random_steps() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xa0d1);
    let mut steps = 0;
    let mut violations = Vec::new();
    let mut episode = 0;
    while steps < 10_000 {
        let cfg = random_config(&mut rng);
        let mut env = Env::new(cfg.clone(), episode).unwrap();
        while !env.is_done() {
            env.step(&random_action(&cfg, &mut rng)).unwrap();
            steps += 1;
        }
        violations.extend(check_episode(&cfg, env.tables()));
        episode += 1;
    }
    let pass = violations.is_empty();
    report(
        2,
        pass,
        "invariant suite",
        &format!("{steps} steps over {episode} episodes, {} violations", violations.len()),
        start.elapsed(),
    );
    assert!(pass, "{:?}", &violations[..violations.len().min(5)]);
}

#[test]
fn c03_reward_formulas_reproduce_hand_examples() {
    let start = Instant::now();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1e-300);
    let components = |r, h, p, u| RewardComponents {
        sales_revenue: r,
        holding_cost: h,
        procurement_cost: p,
        unfulfilled_penalty: u,
    };
    let mut checks: Vec<(&str, bool)> = vec![
        ("revenue, no sales", reward::sales_revenue(&[0, 0], &[3.0, 4.0]) == 0.0),
        ("revenue, one store", reward::sales_revenue(&[3], &[2.5]) == 7.5),
        ("revenue, two stores", close(reward::sales_revenue(&[1, 2], &[10.0, 10.0]), 30.0)),
        ("holding, empty", reward::holding_cost(&[0], &[0.1], &[0], &[0.1]) == 0.0),
        ("holding, warehouse and store", close(reward::holding_cost(&[10], &[0.1], &[5], &[0.1]), 1.5)),
        ("holding, warehouse once", close(reward::holding_cost(&[1], &[1.0], &[1, 1], &[1.0, 1.0]), 3.0)),
        ("procurement, arrival", reward::procurement_cost(&[20], &[1.5]) == 30.0),
        ("procurement, nothing arrives", reward::procurement_cost(&[0], &[1.5]) == 0.0),
        (
            "unfulfilled, all met",
            reward::unfulfilled_penalty(&[4, 5], &[9], &[3, 3], &[3, 3], 100.0) == 0.0,
        ),
        (
            "unfulfilled, request excess",
            reward::unfulfilled_penalty(&[6, 6], &[9], &[0, 0], &[0, 0], 100.0) == 300.0,
        ),
        (
            "unfulfilled, lost demand",
            reward::unfulfilled_penalty(&[0], &[0], &[5], &[3], 100.0) == 200.0,
        ),
        ("shared, zero", reward::shared_reward(&components(0.0, 0.0, 0.0, 0.0)) == 0.0),
        ("shared, mixed", close(reward::shared_reward(&components(100.0, 10.0, 20.0, 5.0)), 65.0)),
        ("shared, pure penalty", reward::shared_reward(&components(0.0, 10.0, 0.0, 0.0)) == -10.0),
    ];

    let econ = Economics {
        price: vec![2.5, 4.0],
        store_holding: vec![0.3, 0.2],
        warehouse_holding: vec![0.1],
        procurement: vec![1.5],
        unfulfilled_coeff: 7.0,
    };
    let flows = PeriodFlows {
        sales: &[4, 2],
        demand: &[4, 5],
        requests: &[0, 6],
        store_on_hand: &[0, 3],
        warehouse_start: &[5],
        warehouse_on_hand: &[5],
        warehouse_arrivals: &[2],
    };
    let mut locals = [0.0; 3];
    reward::local_rewards(&flows, &econ, &mut locals);
    let c = reward::components(&flows, &econ);
    checks.push(("store meeting demand keeps its revenue", locals[1] == 10.0));
    checks.push((
        "locals sum to the shared reward",
        close(reward::sum_rewards(&locals), c.shared_reward()),
    ));
    checks.push(("allocation tie to the lower store", resolve_allocation(&[10, 10], &[10, 10], &[9]) == [5, 4]));

    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let pass = failed.is_empty();
    report(
        3,
        pass,
        "reward hand examples",
        &format!("{} of {} examples exact", checks.len() - failed.len(), checks.len()),
        start.elapsed(),
    );
    assert!(pass, "{failed:?}");
}

#[test]
fn c04_ppo_loss_gradient_matches_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut net = PolicyNet::new(3, &[5, 4], 2, 3, &mut rng);
    for p in net.params.iter_mut() {
        *p += rng.random_range(-0.3..0.3);
    }
    let samples: Vec<Sample> = (0..12)
        .map(|_| {
            let obs: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
            let d = net.act(&obs, ActMode::Sample, &mut rng).unwrap();
            Sample {
                obs,
                actions: d.levels,
                old_log_prob: d.log_prob + rng.random_range(-0.1..0.1),
                advantage: rng.random_range(-2.0..2.0),
                ret: rng.random_range(-2.0..2.0),
            }
        })
        .collect();
    let idx: Vec<usize> = (0..samples.len()).collect();
    let coeffs = LossCoeffs {
        clip: 0.2,
        value_coeff: 0.5,
        entropy_coeff: 0.01,
    };
    let err = gradient_check(&net.params, |p, g| ppo_loss(&net, p, &samples, &idx, coeffs, g).total);
    let elapsed = start.elapsed();
    let pass = err < 1e-4 && elapsed < Duration::from_secs(30);
    report(
        4,
        pass,
        "PPO loss gradient",
        &format!("{} parameters, max relative error {err:.3e}", net.params.len()),
        elapsed,
    );
    assert!(pass);
}

#[test]
fn c05_powell_matches_grid_search() {
    let start = Instant::now();
    let cfg = ChainConfig::divergent(1, 1);
    let seeds: Vec<u64> = (0..50).map(|i| 1000 + i).collect();
    let powell = optimize_base_stock(&cfg, &seeds, &default_options(&cfg)).unwrap();
    let values: Vec<f64> = (0..=100).map(f64::from).collect();
    let grid = grid_search_base_stock(&cfg, &seeds, &values);
    let gap = (grid.mean_return - powell.mean_return).abs() / grid.mean_return.abs();
    let elapsed = start.elapsed();
    let pass = gap <= 0.02 && elapsed < Duration::from_secs(600);
    report(
        5,
        pass,
        "base-stock oracle",
        &format!(
            "powell z={:?} return {:.2}, grid z={:?} return {:.2}, gap {:.3}%",
            powell.params.z,
            powell.mean_return,
            grid.params.z,
            grid.mean_return,
            100.0 * gap
        ),
        elapsed,
    );
    assert!(pass);
}

#[test]
fn c06_cmarl_beats_random_and_approaches_base_stock() {
    let start = Instant::now();
    let chain = run_config(Chain::Smoke, Variant::Cmarl, 1).chain;
    let cmarl = eval_summary(Chain::Smoke, &trained(Chain::Smoke, Variant::Cmarl, 1), 50).mean;
    let bsp_params = optimize_base_stock(&chain, &tune_seeds(1, 50), &default_options(&chain))
        .unwrap()
        .params;
    let bsp = eval_summary(Chain::Smoke, &TrainedPolicy::BaseStock(bsp_params), 50).mean;
    let random = eval_summary(Chain::Smoke, &TrainedPolicy::Random, 50).mean;
    // "1.5x random" read as half a magnitude above random, since random loses money.
    let random_bar = random + 0.5 * random.abs();
    let bsp_bar = bsp - 0.1 * bsp.abs();
    let pass = cmarl >= random_bar && cmarl >= bsp_bar;
    report(
        6,
        pass,
        "learning smoke test",
        &format!("CMARL {cmarl:.1}, BSP {bsp:.1} (bar {bsp_bar:.1}), random {random:.1} (bar {random_bar:.1})"),
        start.elapsed(),
    );
    assert!(pass);
}

#[test]
fn c07_cmarl_at_least_matches_limited_warehouse_view() {
    let start = Instant::now();
    let mut cmarl = Vec::new();
    let mut limited = Vec::new();
    for &seed in &TRAIN_SEEDS {
        cmarl.push(eval_summary(Chain::ThreeStore, &trained(Chain::ThreeStore, Variant::Cmarl, seed), 50).mean);
        limited.push(
            eval_summary(Chain::ThreeStore, &trained(Chain::ThreeStore, Variant::LimWhShRwd, seed), 50).mean,
        );
    }
    let wins = cmarl.iter().zip(&limited).filter(|(c, l)| c >= l).count();
    let (mc, ml) = (median(&cmarl), median(&limited));
    let pass = mc >= ml && majority(wins, TRAIN_SEEDS.len());
    report(
        7,
        pass,
        "ablation ordering",
        &format!(
            "median CMARL {mc:.1} vs LimWh-ShRwd {ml:.1}, CMARL ahead on {wins}/{} seeds; CMARL {cmarl:.1?} LimWh-ShRwd {limited:.1?}",
            TRAIN_SEEDS.len()
        ),
        start.elapsed(),
    );
    assert!(pass);
}

#[test]
fn c08_oracle_demand_gives_no_large_advantage() {
    let start = Instant::now();
    let mut within = 0;
    let mut pairs = Vec::new();
    for &seed in &TRAIN_SEEDS {
        let c = eval_summary(Chain::Smoke, &trained(Chain::Smoke, Variant::Cmarl, seed), 50).mean;
        let o = eval_summary(Chain::Smoke, &trained(Chain::Smoke, Variant::OracleCmarl, seed), 50).mean;
        within += usize::from(o <= c + 0.25 * c.abs());
        pairs.push((c, o));
    }
    let pass = majority(within, TRAIN_SEEDS.len());
    report(
        8,
        pass,
        "oracle parity",
        &format!(
            "O-CMARL within 25% of CMARL on {within}/{} seeds; (CMARL, O-CMARL) {pairs:.1?}",
            TRAIN_SEEDS.len()
        ),
        start.elapsed(),
    );
    assert!(pass);
}

#[test]
fn c09_cmarl_stocks_out_less_than_local_rewards() {
    let start = Instant::now();
    let mut fewer = 0;
    let mut rates = Vec::new();
    for &seed in &TRAIN_SEEDS {
        let c = eval_summary(Chain::ThreeStore, &trained(Chain::ThreeStore, Variant::Cmarl, seed), 20);
        let l = eval_summary(Chain::ThreeStore, &trained(Chain::ThreeStore, Variant::LimWhLocRwd, seed), 20);
        fewer += usize::from(c.stockout_rate < l.stockout_rate);
        rates.push((c.stockout_rate, l.stockout_rate));
    }
    let pass = majority(fewer, TRAIN_SEEDS.len());
    report(
        9,
        pass,
        "stock-out contrast",
        &format!(
            "CMARL below LimWh-LocRwd on {fewer}/{} seeds; (CMARL, LimWh-LocRwd) rates {rates:.4?}",
            TRAIN_SEEDS.len()
        ),
        start.elapsed(),
    );
    assert!(pass);
}

#[test]
fn c10_step_time_scales_sublinearly() {
    let start = Instant::now();
    let rows = bench_step(&ChainConfig::divergent(10, 1), &[1000], 1000, 0);
    let r = rows[0];
    let pass = r.vectorized < 5e-3 && r.ratio() < 0.5;
    report(
        10,
        pass,
        "step-time benchmark",
        &format!(
            "K=1000 N=10 median vectorized {:.3} ms, scalar {:.3} ms, ratio {:.3}",
            1e3 * r.vectorized,
            1e3 * r.scalar,
            r.ratio()
        ),
        start.elapsed(),
    );
    assert!(pass);
}

fn cli(args: &[&str], cwd: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_echelon"))
        .args(args)
        .current_dir(cwd)
        .status()
        .expect("binary runs")
        .success()
}

#[test]
fn c11_cli_runs_are_bitwise_reproducible() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let small = [
        "--seed",
        "21",
        "--quiet",
        "--set",
        "num_stores=2",
        "--set",
        "ppo.hidden=[16]",
    ];
    let mut ok = true;
    for out in ["a", "b"] {
        for (cmd, extra) in [
            ("train", &["--episodes", "200"][..]),
            ("trace", &[][..]),
            ("eval", &["--episodes", "5"][..]),
            ("baseline", &["--episodes", "5", "--set", "experiment.tune_episodes=5"][..]),
        ] {
            let mut args = vec![cmd, "--out", out];
            args.extend_from_slice(&small);
            args.extend_from_slice(extra);
            ok &= cli(&args, dir.path());
        }
    }
    let files = ["metrics.csv", "trace.csv", "eval.csv", "baseline.csv", "checkpoint_final.bin"];
    let same: Vec<bool> = files
        .iter()
        .map(|f| {
            let a = fs::read(dir.path().join("a").join(f));
            let b = fs::read(dir.path().join("b").join(f));
            matches!((a, b), (Ok(a), Ok(b)) if a == b && !a.is_empty())
        })
        .collect();
    let pass = ok && same.iter().all(|&s| s);
    let detail: Vec<String> = files
        .iter()
        .zip(&same)
        .map(|(f, s)| format!("{f} {}", if *s { "identical" } else { "differs" }))
        .collect();
    report(11, pass, "CLI determinism", &detail.join(", "), start.elapsed());
    assert!(pass);
}

#[test]
fn means_and_medians() {
    assert_eq!(mean(&[1.0, 2.0, 6.0]), 3.0);
    assert_eq!(median(&[5.0, 1.0, 3.0]), 3.0);
    assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    assert!(majority(3, 5) && !majority(2, 4));
}
