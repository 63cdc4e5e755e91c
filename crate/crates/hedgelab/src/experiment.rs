//! Seeded experiment driver: runs the learner over generated streams, emits
//! CSV artifacts, and turns the enabled bound checks into verdicts.
//!
//! Seeds fan out to independent workers; per-seed artifacts are written by
//! the seed's own worker and the summary is aggregated after the join, so
//! outputs are byte-identical across repetitions regardless of scheduling.
//! A failing seed aborts only itself and is recorded in the summary.

use crate::config::{
    BoundChecks, ComparatorSpec, Condition1Params, ConsistencyParams, Corollary32Params,
    DensityParams, ExperimentConfig, Lemma31Params, ShrinkingFamily,
};
use crate::epoch::{
    self, comparator_pool, regret_envelope, ClosedLoopStream, EpochError, MaterializedExperts,
    RunComparator, RunOutput,
};
use crate::experts::{density_profile, DyadicExpert, DyadicFamily, ExpertError};
use crate::hedge::{self, HedgeConfig, HedgeState};
use crate::loss::{LossError, Outcome};
use crate::process::{
    self, excess_loss_curve, interval_sets, tail_statistic, tail_sets, Input, ProcessError,
    ProcessKind, ProcessStream, ShrinkingSet,
};
use crate::report::{
    emit_csv, format_real, indexed_rows, run_rows, CheckVerdict, ReportError, SchemaId,
    SummaryReport,
};
use crate::schedule;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("no output directory: set `out` in the config or pass --out")]
    MissingOutDir,
    #[error("{0}")]
    BadConfig(String),
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error(transparent)]
    Expert(#[from] ExpertError),
    #[error(transparent)]
    Epoch(#[from] EpochError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

/// SplitMix64 finalizer, used to derive independent sub-seeds from a run seed.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic sub-seed for a named role under a base seed.
pub fn derive_seed(base: u64, role: u64) -> u64 {
    splitmix64(base ^ splitmix64(role))
}

const ROLE_PROCESS: u64 = 0;
const ROLE_LEARNER: u64 = 1;
const ROLE_BENCH: u64 = 2;

// ---------------------------------------------------------------------------
// Lemma 3.1 bench
// ---------------------------------------------------------------------------

/// One audited trial of the finite Hedge bound.
#[derive(Debug, Clone, Copy)]
pub struct BenchTrial {
    pub learner_loss: f64,
    pub best_expert_loss: f64,
    pub bound: f64,
    pub violated: bool,
}

/// Violation-frequency report for the finite Hedge regret bound.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub trials: Vec<BenchTrial>,
    pub frequency: f64,
    /// `delta + 3 sqrt(delta (1-delta) / trials)`: the binomial slack on the
    /// observed violation frequency.
    pub threshold: f64,
    pub pass: bool,
}

/// Runs `trials` independent adversary-free instances: per expert an i.i.d.
/// Bernoulli loss column with a uniformly drawn rate, the forecaster sampling
/// against them, and the bound audited at the end of each trial.
pub fn hedge_bench(
    params: &Lemma31Params,
    seed: u64,
) -> Result<BenchReport, ExperimentError> {
    let Lemma31Params { n, experts, delta, trials } = *params;
    if trials < 100 {
        return Err(ExperimentError::BadConfig("hedge bench needs at least 100 trials".into()));
    }
    let config = HedgeConfig::new(n, experts)
        .map_err(|e| ExperimentError::BadConfig(e.to_string()))?;
    let bound = hedge::regret_bound(n, experts, delta)
        .map_err(|e| ExperimentError::BadConfig(e.to_string()))?;

    let rows: Vec<BenchTrial> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, ROLE_BENCH ^ (trial << 8)));
            let rates: Vec<f64> = (0..experts).map(|_| rng.random::<f64>()).collect();
            let mut state = HedgeState::new(experts);
            let mut learner_loss = 0.0;
            let mut step = vec![0.0; experts];
            for _ in 0..n {
                let weights = state.weights(&config);
                let pick = hedge::sample_index(&weights, rng.random::<f64>());
                for (l, &p) in step.iter_mut().zip(&rates) {
                    *l = f64::from(rng.random::<f64>() < p);
                }
                learner_loss += step[pick];
                state.observe(&step);
            }
            let best_expert_loss =
                state.cum_loss.iter().copied().fold(f64::INFINITY, f64::min);
            BenchTrial {
                learner_loss,
                best_expert_loss,
                bound,
                violated: learner_loss > best_expert_loss + bound,
            }
        })
        .collect();

    let violations = rows.iter().filter(|t| t.violated).count();
    let frequency = violations as f64 / trials as f64;
    let threshold = delta + 3.0 * (delta * (1.0 - delta) / trials as f64).sqrt();
    Ok(BenchReport { trials: rows, frequency, threshold, pass: frequency <= threshold })
}

pub fn bench_rows(report: &BenchReport) -> Vec<Vec<String>> {
    report
        .trials
        .iter()
        .enumerate()
        .map(|(i, t)| {
            vec![
                (i + 1).to_string(),
                format_real(t.learner_loss),
                format_real(t.best_expert_loss),
                format_real(t.bound),
                u8::from(t.violated).to_string(),
            ]
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Schedule oracle
// ---------------------------------------------------------------------------

/// Result of replaying the closed-form block index against the unrolled
/// recurrence over `1..=max_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleOracleReport {
    pub checked: u64,
    pub first_mismatch: Option<u64>,
}

impl ScheduleOracleReport {
    pub fn pass(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

/// Walks `t_{j+1} = t_j + j` and demands exact agreement at every step; the
/// walk itself certifies that the blocks partition `[1, max_n]` with
/// `|T_j| = j`.
pub fn schedule_oracle(max_n: u64) -> ScheduleOracleReport {
    let (mut j, mut start) = (1u64, 1u64);
    for n in 1..=max_n {
        if n == start + j {
            start += j;
            j += 1;
            debug_assert_eq!(start, schedule::block_start(j));
        }
        if schedule::block_index(n) != Ok(j) {
            return ScheduleOracleReport { checked: n, first_mismatch: Some(n) };
        }
    }
    ScheduleOracleReport { checked: max_n, first_mismatch: None }
}

// ---------------------------------------------------------------------------
// Comparators
// ---------------------------------------------------------------------------

enum ResolvedComparator {
    Fixed(Box<dyn Fn(&Input) -> Outcome + Sync>),
    BestOfPool(usize),
}

fn fixed_fn(expert: DyadicExpert) -> Box<dyn Fn(&Input) -> Outcome + Sync> {
    Box::new(move |x: &Input| match x {
        Input::Point(p) => expert.evaluate(p).expect("comparator input validated upstream"),
        Input::Nat(_) => unreachable!("comparators pair with cube-domain processes only"),
    })
}

fn resolve_comparator(
    spec: &ComparatorSpec,
    family: &DyadicFamily,
    horizon: usize,
) -> Result<ResolvedComparator, ExperimentError> {
    Ok(match spec {
        ComparatorSpec::Member(i) => ResolvedComparator::Fixed(fixed_fn(family.expert(*i)?)),
        ComparatorSpec::Table { resolution, values } => {
            ResolvedComparator::Fixed(fixed_fn(DyadicExpert {
                index: 0,
                resolution: *resolution,
                dimension: family.config().dimension,
                cells: values.clone(),
            }))
        }
        ComparatorSpec::Threshold(c) => {
            let (lo, hi) = crate::config::two_point(family.space())
                .map_err(|e| ExperimentError::BadConfig(e.to_string()))?;
            let cutoff = *c;
            ResolvedComparator::Fixed(Box::new(move |x: &Input| match x {
                Input::Point(p) => {
                    if p[0] > cutoff {
                        hi
                    } else {
                        lo
                    }
                }
                Input::Nat(_) => unreachable!("comparators pair with cube-domain processes only"),
            }))
        }
        ComparatorSpec::BestMember(m) => {
            let m = if *m == 0 { comparator_pool(horizon as u64) } else { *m };
            ResolvedComparator::BestOfPool(m)
        }
    })
}

// ---------------------------------------------------------------------------
// Full experiment
// ---------------------------------------------------------------------------

/// Everything the cross-seed checks need from one seed's run.
#[derive(Debug, Clone)]
pub struct SeedStatistics {
    pub seed: u64,
    /// Partial averages of (learner loss - comparator loss).
    pub excess_curve: Vec<f64>,
    /// Learner cumulative loss at each step.
    pub learner_cum: Vec<f64>,
    /// `min over i <= pool(t) of` cumulative loss of expert `i` at each step,
    /// where `pool(t) = max(1, ⌊t^(1/4)⌋)`.
    pub min_pool_cum: Vec<f64>,
    pub truncated: bool,
}

/// The tracked comparator pool for a config: at least the envelope's
/// horizon pool, wider if a hindsight comparator asks for more.
fn tracked_pool(
    cfg: &ExperimentConfig,
    family: &DyadicFamily,
) -> Result<usize, ExperimentError> {
    Ok(match resolve_comparator(&cfg.comparator, family, cfg.horizon)? {
        ResolvedComparator::BestOfPool(m) => m.max(comparator_pool(cfg.horizon as u64)),
        ResolvedComparator::Fixed(_) => comparator_pool(cfg.horizon as u64),
    })
}

fn compute_seed_run(
    cfg: &ExperimentConfig,
    family: &DyadicFamily,
    source: &MaterializedExperts,
    seed: u64,
    pool: usize,
) -> Result<(Vec<crate::epoch::RunRecord>, SeedStatistics), ExperimentError> {
    let comparator = resolve_comparator(&cfg.comparator, family, cfg.horizon)?;
    let run_comparator = match &comparator {
        ResolvedComparator::Fixed(f) => RunComparator::Fixed(f.as_ref()),
        ResolvedComparator::BestOfPool(m) => RunComparator::BestOfPool(*m),
    };

    let mut stream = ProcessStream::new(&cfg.process, derive_seed(seed, ROLE_PROCESS))?;
    let mut loop_stream = ClosedLoopStream::new(&mut stream);
    let RunOutput { records, truncated, pool_step_losses } = epoch::run_learner(
        source,
        &mut loop_stream,
        cfg.horizon,
        derive_seed(seed, ROLE_LEARNER),
        run_comparator,
        &cfg.outcome,
        pool,
    )?;

    let step_losses: Vec<f64> = records.iter().map(|r| r.step_loss).collect();
    let comparator_losses: Vec<f64> = records.iter().map(|r| r.comparator_loss).collect();
    let excess_curve = excess_loss_curve(&step_losses, &comparator_losses);

    let learner_cum: Vec<f64> = records.iter().map(|r| r.cum_loss).collect();
    let mut prefix = vec![0.0f64; pool];
    let mut min_pool_cum = Vec::with_capacity(records.len());
    for t in 0..records.len() {
        for (acc, series) in prefix.iter_mut().zip(&pool_step_losses) {
            *acc += series[t];
        }
        let k = comparator_pool(t as u64 + 1).min(pool.max(1));
        let m = prefix[..k].iter().copied().fold(f64::INFINITY, f64::min);
        min_pool_cum.push(m);
    }

    let stats = SeedStatistics { seed, excess_curve, learner_cum, min_pool_cum, truncated };
    Ok((records, stats))
}

/// One seed's learner run without artifact emission: the statistics the
/// envelope and consistency checks are computed from.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedStatistics, ExperimentError> {
    let family = DyadicFamily::new(cfg.outcome.clone(), cfg.expert)?;
    let j_max = schedule::block_index(cfg.horizon as u64).expect("horizon >= 1") as usize;
    let pool = tracked_pool(cfg, &family)?;
    let source = MaterializedExperts::from_family(&family, j_max.max(pool))?;
    compute_seed_run(cfg, &family, &source, seed, pool).map(|(_, stats)| stats)
}

fn run_one_seed(
    cfg: &ExperimentConfig,
    family: &DyadicFamily,
    source: &MaterializedExperts,
    seed: u64,
    pool: usize,
    out_dir: &Path,
) -> Result<SeedStatistics, ExperimentError> {
    let (records, stats) = compute_seed_run(cfg, family, source, seed, pool)?;
    emit_csv(SchemaId::Run, &run_rows(&records), &out_dir.join(format!("run_seed{seed}.csv")))?;
    emit_csv(
        SchemaId::ExcessCurve,
        &indexed_rows(stats.excess_curve.iter().enumerate().map(|(i, &v)| (i as u64 + 1, v))),
        &out_dir.join(format!("curve_seed{seed}.csv")),
    )?;
    Ok(stats)
}

fn check_corollary32(params: &Corollary32Params, runs: &[SeedStatistics]) -> (f64, bool) {
    // statistic: worst signed margin (learner - comparator-min - envelope);
    // nonpositive everywhere means the envelope held at every horizon
    let mut worst = f64::NEG_INFINITY;
    for run in runs {
        let n_max = run.learner_cum.len() as u64;
        for n in params.start..=n_max {
            let idx = (n - 1) as usize;
            let envelope = regret_envelope(n, params.n_hat).expect("start >= 2");
            let margin = run.learner_cum[idx] - run.min_pool_cum[idx] - envelope;
            worst = worst.max(margin);
        }
    }
    (worst, worst <= 0.0)
}

fn check_consistency(params: &ConsistencyParams, runs: &[SeedStatistics]) -> (f64, bool) {
    let passing = runs
        .iter()
        .filter(|r| !r.excess_curve.is_empty() && tail_statistic(&r.excess_curve) < params.threshold)
        .count();
    let fraction = passing as f64 / runs.len().max(1) as f64;
    (fraction, fraction >= params.min_pass_fraction)
}

fn shrinking_sets(family: &ShrinkingFamily) -> Vec<ShrinkingSet> {
    match family {
        ShrinkingFamily::Intervals { k_max } => interval_sets(*k_max),
        ShrinkingFamily::Tails { k_max } => tail_sets(*k_max),
    }
}

fn default_m_grid(family: &DyadicFamily, cap: usize) -> Vec<usize> {
    let mut grid = Vec::new();
    for tier in 0..=family.config().max_tier {
        let count = family.cumulative_count(tier);
        if count > cap as u128 {
            break;
        }
        grid.push(count as usize);
    }
    if grid.is_empty() {
        grid.push(1);
    }
    grid
}

/// Family-prefix approximation result for a fixed comparator.
#[derive(Debug, Clone)]
pub struct DensityReport {
    pub profile: Vec<(usize, f64)>,
    /// The profile's final value, compared against the threshold.
    pub statistic: f64,
    pub pass: bool,
}

/// Density check: how well family prefixes approximate the configured
/// comparator on inputs drawn from the configured process. Needs a fixed
/// comparator and a cube-domain process. Writes the profile CSV when an
/// output directory is given.
pub fn run_density_check(
    cfg: &ExperimentConfig,
    params: &DensityParams,
    out_dir: Option<&Path>,
) -> Result<DensityReport, ExperimentError> {
    let family = DyadicFamily::new(cfg.outcome.clone(), cfg.expert)?;
    let comparator = resolve_comparator(&cfg.comparator, &family, cfg.horizon)?;
    let ResolvedComparator::Fixed(f0) = comparator else {
        return Err(ExperimentError::BadConfig(
            "the density check needs a fixed comparator (member/threshold/table)".into(),
        ));
    };
    let xs: Vec<Vec<f64>> =
        process::generate(&cfg.process, cfg.horizon, derive_seed(cfg.seeds[0], ROLE_PROCESS))?
            .into_iter()
            .map(|(x, _)| match x {
                Input::Point(p) => Ok(p),
                Input::Nat(_) => Err(ExperimentError::BadConfig(
                    "the density check needs a cube-domain process".into(),
                )),
            })
            .collect::<Result<_, _>>()?;
    let m_grid =
        if params.m_grid.is_empty() { default_m_grid(&family, 256) } else { params.m_grid.clone() };
    let f0_fn = |x: &[f64]| f0(&Input::Point(x.to_vec()));
    let profile = density_profile(&family, &f0_fn, &xs, &m_grid)?;
    if let Some(dir) = out_dir {
        emit_csv(
            SchemaId::DensityProfile,
            &indexed_rows(profile.iter().map(|&(m, v)| (m as u64, v))),
            &dir.join("density_profile.csv"),
        )?;
    }
    let statistic = profile.last().map(|&(_, v)| v).unwrap_or(1.0);
    Ok(DensityReport { profile, statistic, pass: statistic <= params.threshold })
}

/// Shrinking-set condition check over the configured process, horizon and
/// seeds. Writes the profile CSV when an output directory is given.
pub fn run_condition_check(
    cfg: &ExperimentConfig,
    params: &Condition1Params,
    out_dir: Option<&Path>,
) -> Result<process::ConditionReport, ExperimentError> {
    let sets = shrinking_sets(&params.sets);
    let report =
        process::condition_check(&cfg.process, &sets, cfg.horizon, &cfg.seeds, params.threshold)?;
    if let Some(dir) = out_dir {
        emit_csv(
            SchemaId::ConditionProfile,
            &indexed_rows(report.profile.iter().map(|&(k, v)| (k as u64, v))),
            &dir.join("condition_profile.csv"),
        )?;
    }
    Ok(report)
}

fn learner_checks_enabled(checks: &BoundChecks) -> bool {
    checks.corollary32.is_some() || checks.consistency.is_some()
}

/// Runs the configured experiment into `out_dir` (falling back to the
/// config's `out`): one run CSV and one excess-curve CSV per seed, one
/// profile CSV per enabled profile check, and a rendered summary with one
/// verdict row per enabled check. Identical configs reproduce byte-identical
/// CSV artifacts.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: Option<&Path>,
) -> Result<SummaryReport, ExperimentError> {
    let out_dir: PathBuf = out_dir
        .map(Path::to_path_buf)
        .or_else(|| cfg.out_dir.clone())
        .ok_or(ExperimentError::MissingOutDir)?;
    std::fs::create_dir_all(&out_dir).map_err(|source| {
        ExperimentError::Report(ReportError::Io { path: out_dir.display().to_string(), source })
    })?;

    let mut summary = SummaryReport::default();
    let cube_process = !matches!(cfg.process.kind, ProcessKind::Drift);
    if !cube_process && (learner_checks_enabled(&cfg.checks) || cfg.checks.density.is_some()) {
        return Err(ExperimentError::BadConfig(
            "drift streams cannot drive the learner; enable only condition1 for them".into(),
        ));
    }

    // learner phase: per-seed runs and artifacts
    let mut runs: Vec<SeedStatistics> = Vec::new();
    if cube_process {
        let family = DyadicFamily::new(cfg.outcome.clone(), cfg.expert)?;
        let j_max = schedule::block_index(cfg.horizon as u64).expect("horizon >= 1") as usize;
        let pool = tracked_pool(cfg, &family)?;
        let source = MaterializedExperts::from_family(&family, j_max.max(pool))?;

        let started = Instant::now();
        let results: Vec<(u64, Result<SeedStatistics, ExperimentError>)> = cfg
            .seeds
            .par_iter()
            .map(|&seed| (seed, run_one_seed(cfg, &family, &source, seed, pool, &out_dir)))
            .collect();
        let run_wall = started.elapsed();

        for (seed, result) in results {
            match result {
                Ok(run) => runs.push(run),
                Err(e) => summary.seed_errors.push((seed, e.to_string())),
            }
        }
        runs.sort_by_key(|r| r.seed);
        for run in &runs {
            summary.artifacts.push(out_dir.join(format!("run_seed{}.csv", run.seed)));
            summary.artifacts.push(out_dir.join(format!("curve_seed{}.csv", run.seed)));
            if run.truncated {
                summary.notes.push(format!(
                    "seed {}: stream ended after {} of {} steps",
                    run.seed,
                    run.learner_cum.len(),
                    cfg.horizon
                ));
            }
        }

        if let Some(params) = &cfg.checks.corollary32 {
            let (statistic, pass) = check_corollary32(params, &runs);
            summary.verdicts.push(CheckVerdict {
                check: "corollary32",
                pass,
                statistic,
                threshold: 0.0,
                seeds: runs.len(),
                wall_clock: run_wall,
            });
        }
        if let Some(params) = &cfg.checks.consistency {
            let (fraction, pass) = check_consistency(params, &runs);
            summary.verdicts.push(CheckVerdict {
                check: "consistency",
                pass,
                statistic: fraction,
                threshold: params.min_pass_fraction,
                seeds: runs.len(),
                wall_clock: run_wall,
            });
        }
    }

    if let Some(params) = &cfg.checks.lemma31 {
        let started = Instant::now();
        let report = hedge_bench(params, derive_seed(cfg.seeds[0], ROLE_BENCH))?;
        emit_csv(SchemaId::HedgeBench, &bench_rows(&report), &out_dir.join("hedge_bench.csv"))?;
        summary.artifacts.push(out_dir.join("hedge_bench.csv"));
        summary.verdicts.push(CheckVerdict {
            check: "lemma31",
            pass: report.pass,
            statistic: report.frequency,
            threshold: report.threshold,
            seeds: params.trials,
            wall_clock: started.elapsed(),
        });
    }

    if let Some(params) = &cfg.checks.condition1 {
        let started = Instant::now();
        let report = run_condition_check(cfg, params, Some(&out_dir))?;
        summary.artifacts.push(out_dir.join("condition_profile.csv"));
        summary.verdicts.push(CheckVerdict {
            check: "condition1",
            pass: report.pass,
            statistic: report.profile.last().map(|&(_, v)| v).unwrap_or(1.0),
            threshold: params.threshold,
            seeds: cfg.seeds.len(),
            wall_clock: started.elapsed(),
        });
    }

    if let Some(params) = &cfg.checks.density {
        let started = Instant::now();
        let report = run_density_check(cfg, params, Some(&out_dir))?;
        summary.artifacts.push(out_dir.join("density_profile.csv"));
        summary.verdicts.push(CheckVerdict {
            check: "density",
            pass: report.pass,
            statistic: report.statistic,
            threshold: params.threshold,
            seeds: 1,
            wall_clock: started.elapsed(),
        });
    }

    summary.seed_errors.sort_by_key(|&(seed, _)| seed);
    let summary_path = out_dir.join("summary.txt");
    std::fs::write(&summary_path, summary.render()).map_err(|source| {
        ExperimentError::Report(ReportError::Io { path: summary_path.display().to_string(), source })
    })?;

    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn resolved(text: &str) -> ExperimentConfig {
        parse_config(text).unwrap().resolve(Path::new(".")).unwrap()
    }

    #[test]
    fn sub_seed_roles_are_distinct() {
        let base = 42;
        let a = derive_seed(base, ROLE_PROCESS);
        let b = derive_seed(base, ROLE_LEARNER);
        let c = derive_seed(base, ROLE_BENCH);
        assert!(a != b && b != c && a != c);
        assert_eq!(derive_seed(base, ROLE_PROCESS), a);
    }

    #[test]
    fn schedule_oracle_agrees_on_a_large_prefix() {
        let report = schedule_oracle(200_000);
        assert!(report.pass(), "first mismatch at {:?}", report.first_mismatch);
        assert_eq!(report.checked, 200_000);
    }

    #[test]
    fn single_expert_bench_never_violates() {
        let params = Lemma31Params { n: 50, experts: 1, delta: 0.5, trials: 200 };
        let report = hedge_bench(&params, 3).unwrap();
        assert_eq!(report.frequency, 0.0);
        assert!(report.pass);
    }

    #[test]
    fn bench_violation_frequency_respects_the_binomial_slack() {
        let params = Lemma31Params { n: 60, experts: 5, delta: 0.2, trials: 400 };
        let report = hedge_bench(&params, 8).unwrap();
        assert!(report.pass, "frequency {} vs threshold {}", report.frequency, report.threshold);
        assert!((report.threshold - (0.2 + 3.0 * (0.2f64 * 0.8 / 400.0).sqrt())).abs() < 1e-12);
    }

    #[test]
    fn experiment_is_byte_identical_across_reruns() {
        let text = "\
outcome = binary
process = coin-mixture:0.2,0.8
comparator = best-member:5
horizon = 800
seeds = 3,9
check.consistency = on
consistency.threshold = 0.2
";
        let cfg = resolved(text);
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let sum_a = run_experiment(&cfg, Some(dir_a.path())).unwrap();
        let sum_b = run_experiment(&cfg, Some(dir_b.path())).unwrap();
        assert_eq!(sum_a.verdicts.len(), 1);
        assert_eq!(sum_a.all_pass(), sum_b.all_pass());
        for name in
            ["run_seed3.csv", "run_seed9.csv", "curve_seed3.csv", "curve_seed9.csv"]
        {
            let a = std::fs::read(dir_a.path().join(name)).unwrap();
            let b = std::fs::read(dir_b.path().join(name)).unwrap();
            assert!(!a.is_empty());
            assert_eq!(a, b, "artifact {name} differs between reruns");
        }
    }

    #[test]
    fn horizon_one_yields_single_row_artifact() {
        let cfg = resolved(
            "outcome = binary\nprocess = iid-uniform\nprocess.y = constant:0\nhorizon = 1\nseeds = 5\n",
        );
        let dir = tempfile::tempdir().unwrap();
        run_experiment(&cfg, Some(dir.path())).unwrap();
        let text = std::fs::read_to_string(dir.path().join("run_seed5.csv")).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("t,block,x,expert_index,y_hat,y,"));
    }

    #[test]
    fn drift_configs_run_condition_checks_only() {
        let ok = resolved(
            "outcome = binary\nprocess = drift\nhorizon = 500\nseeds = 1\ncheck.condition1 = on\ncondition1.sets = tails:5\n",
        );
        let dir = tempfile::tempdir().unwrap();
        let summary = run_experiment(&ok, Some(dir.path())).unwrap();
        assert_eq!(summary.verdicts.len(), 1);
        assert!(!summary.verdicts[0].pass, "drift must fail the shrinking-set condition");

        let bad = resolved(
            "outcome = binary\nprocess = drift\nhorizon = 500\nseeds = 1\ncheck.consistency = on\n",
        );
        assert!(matches!(
            run_experiment(&bad, Some(dir.path())),
            Err(ExperimentError::BadConfig(_))
        ));
    }

    #[test]
    fn closed_loop_adversary_still_satisfies_the_envelope() {
        let cfg = resolved(
            "outcome = binary\nprocess = adversarial:flip\nhorizon = 2000\nseeds = 2\ncheck.corollary32 = on\ncorollary32.start = 100\ncorollary32.n_hat = 0\n",
        );
        let dir = tempfile::tempdir().unwrap();
        let summary = run_experiment(&cfg, Some(dir.path())).unwrap();
        let verdict = summary.verdicts.iter().find(|v| v.check == "corollary32").unwrap();
        assert!(verdict.pass, "margin {}", verdict.statistic);
    }

    #[test]
    fn density_check_rejects_hindsight_comparators() {
        let cfg = resolved(
            "outcome = binary\nprocess = iid-uniform\nhorizon = 200\nseeds = 1\ncheck.density = on\n",
        );
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            run_experiment(&cfg, Some(dir.path())),
            Err(ExperimentError::BadConfig(_))
        ));
    }

    #[test]
    fn planted_member_density_check_passes_at_zero() {
        let cfg = resolved(
            "outcome = binary\nprocess = iid-uniform\ncomparator = member:4\nhorizon = 400\nseeds = 2\ncheck.density = on\ndensity.m_grid = 1,2,4,8,16\ndensity.threshold = 0\n",
        );
        let dir = tempfile::tempdir().unwrap();
        let summary = run_experiment(&cfg, Some(dir.path())).unwrap();
        let verdict = summary.verdicts.iter().find(|v| v.check == "density").unwrap();
        assert!(verdict.pass);
        assert_eq!(verdict.statistic, 0.0);
        let profile = std::fs::read_to_string(dir.path().join("density_profile.csv")).unwrap();
        assert!(profile.lines().count() > 1);
    }
}
