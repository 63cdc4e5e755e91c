//! Experiment driver. Exit code 0 iff every enabled verdict passes.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hedgelab::config::{self, defaults, Condition1Params, DensityParams, Lemma31Params};
use hedgelab::experiment::{
    bench_rows, hedge_bench, run_condition_check, run_density_check, run_experiment,
    schedule_oracle,
};
use hedgelab::report::{emit_csv, SchemaId};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hedgelab", version, about = "Blockwise infinite-expert Hedge laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Experiment config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed (overrides the config's seed list)
    #[arg(long)]
    seed: Option<u64>,
    /// Number of consecutive seeds starting at --seed
    #[arg(long)]
    seeds: Option<u64>,
    /// Horizon override
    #[arg(long)]
    horizon: Option<usize>,
    /// Output directory for CSV artifacts
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment: per-seed learner runs, CSV artifacts,
    /// and one verdict per enabled bound check
    Run(CommonOpts),
    /// Violation-frequency audit of the finite Hedge regret bound
    HedgeBench {
        #[command(flatten)]
        common: CommonOpts,
        /// Steps per trial
        #[arg(long, default_value_t = defaults::LEMMA31_N)]
        n: usize,
        /// Expert count
        #[arg(long, default_value_t = defaults::LEMMA31_EXPERTS)]
        experts: usize,
        /// Failure probability budget
        #[arg(long, default_value_t = defaults::LEMMA31_DELTA)]
        delta: f64,
        /// Independent trials
        #[arg(long, default_value_t = defaults::LEMMA31_TRIALS)]
        trials: usize,
    },
    /// Shrinking-set condition profile for the configured process
    ConditionCheck(CommonOpts),
    /// Family-prefix approximation profile for the configured comparator
    DensityCheck(CommonOpts),
    /// Closed-form block index vs the recurrence-unrolled oracle
    ScheduleOracle {
        /// Largest time step to verify
        #[arg(long, default_value_t = 100_000)]
        max_n: u64,
    },
}

fn load_config(common: &CommonOpts) -> Result<config::ExperimentConfig> {
    let path = common
        .config
        .as_ref()
        .context("this subcommand needs --config <path>")?;
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config `{}`", path.display()))?;
    let parsed = config::parse_config(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut cfg = parsed.resolve(base)?;

    if let Some(h) = common.horizon {
        if h == 0 {
            bail!("--horizon must be at least 1");
        }
        cfg.horizon = h;
    }
    match (common.seed, common.seeds) {
        (None, None) => {}
        (base_seed, count) => {
            let base_seed = base_seed.unwrap_or(0);
            let count = count.unwrap_or(1);
            if count == 0 {
                bail!("--seeds must be at least 1");
            }
            cfg.seeds = (0..count).map(|k| base_seed.wrapping_add(k)).collect();
        }
    }
    if let Some(out) = &common.out {
        cfg.out_dir = Some(out.clone());
    }
    Ok(cfg)
}

fn ensure_out_dir(dir: &Option<PathBuf>) -> Result<Option<PathBuf>> {
    if let Some(d) = dir {
        std::fs::create_dir_all(d)
            .with_context(|| format!("cannot create output directory `{}`", d.display()))?;
    }
    Ok(dir.clone())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(common) => {
            let cfg = load_config(&common)?;
            let summary = run_experiment(&cfg, common.out.as_deref())?;
            print!("{}", summary.render());
            Ok(summary.all_pass())
        }
        Command::HedgeBench { common, n, experts, delta, trials } => {
            let params = Lemma31Params { n, experts, delta, trials };
            let report = hedge_bench(&params, common.seed.unwrap_or(0))?;
            if let Some(dir) = ensure_out_dir(&common.out)? {
                emit_csv(SchemaId::HedgeBench, &bench_rows(&report), &dir.join("hedge_bench.csv"))?;
            }
            println!(
                "hedge-bench {} violation_frequency={:.6} threshold={:.6} trials={}",
                if report.pass { "PASS" } else { "FAIL" },
                report.frequency,
                report.threshold,
                trials,
            );
            Ok(report.pass)
        }
        Command::ConditionCheck(common) => {
            let cfg = load_config(&common)?;
            let params = cfg.checks.condition1.clone().unwrap_or(Condition1Params {
                sets: config::ShrinkingFamily::Intervals { k_max: defaults::CONDITION1_K_MAX },
                threshold: defaults::CONDITION1_THRESHOLD,
            });
            let out = ensure_out_dir(&common.out)?;
            let report = run_condition_check(&cfg, &params, out.as_deref())?;
            for (k, v) in &report.profile {
                println!("k={k} mean_tail_max={v:.6}");
            }
            println!(
                "condition-check {} (heuristic, finite-horizon) threshold={:.4}",
                if report.pass { "PASS" } else { "FAIL" },
                report.threshold,
            );
            Ok(report.pass)
        }
        Command::DensityCheck(common) => {
            let cfg = load_config(&common)?;
            let params = cfg
                .checks
                .density
                .clone()
                .unwrap_or(DensityParams { m_grid: Vec::new(), threshold: defaults::DENSITY_THRESHOLD });
            let out = ensure_out_dir(&common.out)?;
            let report = run_density_check(&cfg, &params, out.as_deref())?;
            for (m, v) in &report.profile {
                println!("M={m} best_avg_loss={v:.6}");
            }
            println!(
                "density-check {} statistic={:.6} threshold={:.6}",
                if report.pass { "PASS" } else { "FAIL" },
                report.statistic,
                params.threshold,
            );
            Ok(report.pass)
        }
        Command::ScheduleOracle { max_n } => {
            let report = schedule_oracle(max_n);
            match report.first_mismatch {
                None => println!("schedule-oracle PASS checked=1..{}", report.checked),
                Some(n) => println!("schedule-oracle FAIL first_mismatch={n}"),
            }
            Ok(report.pass())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
