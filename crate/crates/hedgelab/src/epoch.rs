//! The blockwise infinite-expert learner.
//!
//! Inside block `j` (time steps `t_j .. t_j + j - 1`) the learner runs a
//! fresh Hedge instance over the first `j` experts at rate
//! `eta_j = sqrt((8/j) ln j)`: block-local cumulative losses start at zero,
//! weights are uniform at every block start, and losses from earlier blocks
//! are discarded, never carried over. Predictions are made by sampling an
//! active expert from the current weights with a fresh uniform draw, so the
//! randomness used at distinct times is conditionally independent given the
//! history. Expert predictions are materialized lazily: at time `t` only the
//! first `block_index(t)` experts are ever consulted.
//!
//! The per-run log ([`RunRecord`]) carries everything the statistical
//! harness needs, including the raw uniform draw behind each sampled index,
//! so a (seed, stream, expert source) triple replays bit-identically.

use crate::experts::{DyadicExpert, DyadicFamily, ExpertError};
use crate::hedge;
use crate::loss::{LossError, Outcome, OutcomeSpace};
use crate::process::{Input, ProcessStream};
use crate::schedule::{BlockSchedule, ScheduleError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EpochError {
    #[error("expected predictions for {expected} active experts, got {got}")]
    PredictionArity { expected: usize, got: usize },
    #[error("envelope is defined for horizons n >= 2, got {0}")]
    EnvelopeHorizon(u64),
    #[error(transparent)]
    Expert(#[from] ExpertError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Additive slack of the blockwise learner over the best of the first
/// `⌊n^(1/4)⌋` experts: `19 n^(3/4) sqrt(ln n) + n_hat`.
pub fn regret_envelope(n: u64, n_hat: u64) -> Result<f64, EpochError> {
    if n < 2 {
        return Err(EpochError::EnvelopeHorizon(n));
    }
    let nf = n as f64;
    Ok(19.0 * nf.powf(0.75) * nf.ln().sqrt() + n_hat as f64)
}

/// `max(1, ⌊n^(1/4)⌋)`, the comparator class size at horizon `n`, with the
/// float root corrected against exact fourth powers.
pub fn comparator_pool(n: u64) -> usize {
    let mut k = ((n as f64).powf(0.25) as u64).max(1);
    while (k + 1).checked_pow(4).is_some_and(|p| p <= n) {
        k += 1;
    }
    while k > 1 && k.pow(4) > n {
        k -= 1;
    }
    k as usize
}

/// Enumerated expert family exposed to the learner. Indices are 1-based,
/// matching the enumeration order.
pub trait ExpertSource {
    fn predict(&self, index: usize, x: &Input) -> Result<Outcome, ExpertError>;
}

/// Eagerly enumerated family prefix; the runner sizes it from the horizon.
pub struct MaterializedExperts {
    experts: Vec<DyadicExpert>,
}

impl MaterializedExperts {
    pub fn from_family(family: &DyadicFamily, count: usize) -> Result<Self, ExpertError> {
        Ok(Self { experts: family.materialize(count)? })
    }

    pub fn len(&self) -> usize {
        self.experts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experts.is_empty()
    }
}

impl ExpertSource for MaterializedExperts {
    fn predict(&self, index: usize, x: &Input) -> Result<Outcome, ExpertError> {
        let expert = self
            .experts
            .get(index.checked_sub(1).ok_or(ExpertError::ZeroIndex)?)
            .ok_or(ExpertError::TierCapExceeded {
                index,
                max_tier: 0,
                available: self.experts.len() as u128,
            })?;
        match x {
            Input::Point(p) => expert.evaluate(p),
            Input::Nat(_) => Err(ExpertError::DimensionMismatch { got: 0, expected: expert.dimension }),
        }
    }
}

/// Learner state: global time, current block, block-local cumulative losses
/// for the active experts, and the sampling generator.
pub struct EpochHedge {
    t: u64,
    block: BlockSchedule,
    block_cum_loss: Vec<f64>,
    rng: ChaCha8Rng,
}

impl EpochHedge {
    pub fn new(seed: u64) -> Self {
        Self {
            t: 1,
            block: BlockSchedule::for_block(1).expect("block 1 exists"),
            block_cum_loss: vec![0.0],
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn block(&self) -> &BlockSchedule {
        &self.block
    }

    /// Number of active experts, equal to the current block index.
    pub fn active_experts(&self) -> usize {
        self.block.j as usize
    }

    /// Current sampling distribution over the active experts.
    pub fn weights(&self) -> Vec<f64> {
        hedge::weights(&self.block_cum_loss, self.block.eta)
    }

    /// Samples an active expert and returns its prediction, the sampled
    /// 1-based index and the uniform draw that produced it. Does not touch
    /// loss accounting; each call consumes exactly one generator draw.
    pub fn predict(&mut self, expert_predictions: &[Outcome]) -> Result<(Outcome, usize, f64), EpochError> {
        if expert_predictions.len() != self.active_experts() {
            return Err(EpochError::PredictionArity {
                expected: self.active_experts(),
                got: expert_predictions.len(),
            });
        }
        let weights = self.weights();
        let u = self.rng.random::<f64>();
        let pos = hedge::sample_index(&weights, u);
        Ok((expert_predictions[pos], pos + 1, u))
    }

    /// Absorbs the revealed response: accumulates each active expert's loss,
    /// advances time, and on a block boundary restarts with `j + 1` zeroed
    /// losses and the new rate.
    pub fn update(
        &mut self,
        space: &OutcomeSpace,
        expert_predictions: &[Outcome],
        y: &Outcome,
    ) -> Result<(), EpochError> {
        if expert_predictions.len() != self.active_experts() {
            return Err(EpochError::PredictionArity {
                expected: self.active_experts(),
                got: expert_predictions.len(),
            });
        }
        for (cum, z) in self.block_cum_loss.iter_mut().zip(expert_predictions) {
            *cum += space.loss(z, y)?;
        }
        self.t += 1;
        if !self.block.contains(self.t) {
            self.block = BlockSchedule::for_block(self.block.j + 1)?;
            debug_assert!(self.block.is_block_start(self.t));
            self.block_cum_loss = vec![0.0; self.block.j as usize];
        }
        Ok(())
    }
}

/// One step of the per-run log. `u` is the raw uniform draw behind the
/// sampled index; the CSV artifact schema carries the other ten fields.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub t: u64,
    pub block: u64,
    pub x: Input,
    pub expert_index: usize,
    pub y_hat: Outcome,
    pub y: Outcome,
    pub step_loss: f64,
    pub comparator_loss: f64,
    pub cum_loss: f64,
    pub cum_comparator_loss: f64,
    pub u: f64,
}

/// Comparator wiring for a run.
pub enum RunComparator<'a> {
    /// A fixed function of the input, logged step by step.
    Fixed(&'a (dyn Fn(&Input) -> Outcome + Sync)),
    /// Hindsight-best among the first `M` tracked experts; the comparator
    /// columns are filled in after the run, ties to the smallest index.
    BestOfPool(usize),
}

/// Data feed for the runner; `respond` sees the learner's prediction so
/// closed-loop adversaries can react to it.
pub trait LearnStream {
    fn next_input(&mut self) -> Option<Input>;
    fn respond(&mut self, prediction: &Outcome) -> Outcome;
}

/// Replays a pre-generated open-loop sequence.
pub struct SliceStream<'a> {
    data: &'a [(Input, Outcome)],
    pos: usize,
}

impl<'a> SliceStream<'a> {
    pub fn new(data: &'a [(Input, Outcome)]) -> Self {
        Self { data, pos: 0 }
    }
}

impl LearnStream for SliceStream<'_> {
    fn next_input(&mut self) -> Option<Input> {
        let x = self.data.get(self.pos).map(|(x, _)| x.clone());
        if x.is_some() {
            self.pos += 1;
        }
        x
    }

    fn respond(&mut self, _prediction: &Outcome) -> Outcome {
        self.data[self.pos - 1].1
    }
}

/// Drives a live process, passing each prediction through to the response
/// phase (closed loop).
pub struct ClosedLoopStream<'a> {
    inner: &'a mut ProcessStream,
}

impl<'a> ClosedLoopStream<'a> {
    pub fn new(inner: &'a mut ProcessStream) -> Self {
        Self { inner }
    }
}

impl LearnStream for ClosedLoopStream<'_> {
    fn next_input(&mut self) -> Option<Input> {
        Some(self.inner.next_input())
    }

    fn respond(&mut self, prediction: &Outcome) -> Outcome {
        self.inner.next_response(Some(prediction))
    }
}

/// A completed run: the log, a truncation flag (stream ended before the
/// horizon — reported, not an error), and per-step losses of the first
/// `pool` experts for envelope and hindsight-comparator accounting.
pub struct RunOutput {
    pub records: Vec<RunRecord>,
    pub truncated: bool,
    pub pool_step_losses: Vec<Vec<f64>>,
}

/// Runs the learner for `horizon` steps over `stream`.
///
/// Per step: materialize predictions of the active experts (indices
/// `1..=j` only), sample a prediction, reveal the response, log, update.
/// `pool` extra leading experts are scored on the side for comparator and
/// envelope checks. Deterministic given `(seed, stream, source)`.
pub fn run_learner<S: ExpertSource>(
    source: &S,
    stream: &mut dyn LearnStream,
    horizon: usize,
    seed: u64,
    comparator: RunComparator<'_>,
    space: &OutcomeSpace,
    pool: usize,
) -> Result<RunOutput, EpochError> {
    let mut learner = EpochHedge::new(seed);
    let mut records = Vec::with_capacity(horizon);
    let mut pool_step_losses: Vec<Vec<f64>> = vec![Vec::with_capacity(horizon); pool];
    let mut truncated = false;
    let mut cum_loss = 0.0;
    let mut cum_comparator = 0.0;
    let mut preds: Vec<Outcome> = Vec::new();

    for t in 1..=horizon as u64 {
        let Some(x) = stream.next_input() else {
            truncated = true;
            break;
        };
        let block = learner.block().j;
        let active = learner.active_experts();
        preds.clear();
        for i in 1..=active {
            preds.push(source.predict(i, &x)?);
        }
        let (y_hat, expert_index, u) = learner.predict(&preds)?;
        let y = stream.respond(&y_hat);

        let step_loss = space.loss(&y_hat, &y)?;
        cum_loss += step_loss;
        for (i, side) in pool_step_losses.iter_mut().enumerate() {
            let z = if i < active { preds[i] } else { source.predict(i + 1, &x)? };
            side.push(space.loss(&z, &y)?);
        }
        let comparator_loss = match &comparator {
            RunComparator::Fixed(f) => space.loss(&f(&x), &y)?,
            RunComparator::BestOfPool(_) => 0.0, // filled after the run
        };
        cum_comparator += comparator_loss;

        learner.update(space, &preds, &y)?;
        records.push(RunRecord {
            t,
            block,
            x,
            expert_index,
            y_hat,
            y,
            step_loss,
            comparator_loss,
            cum_loss,
            cum_comparator_loss: cum_comparator,
            u,
        });
    }

    if let RunComparator::BestOfPool(m) = comparator {
        let m = m.min(pool);
        if m >= 1 {
            let best = (0..m)
                .min_by(|&a, &b| {
                    let (sa, sb) = (
                        pool_step_losses[a].iter().sum::<f64>(),
                        pool_step_losses[b].iter().sum::<f64>(),
                    );
                    sa.partial_cmp(&sb).expect("losses are finite")
                })
                .expect("m >= 1");
            let mut cum = 0.0;
            for (rec, &l) in records.iter_mut().zip(&pool_step_losses[best]) {
                rec.comparator_loss = l;
                cum += l;
                rec.cum_comparator_loss = cum;
            }
        }
    }

    Ok(RunOutput { records, truncated, pool_step_losses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experts::FamilyConfig;
    use crate::process::{Marginal, ProcessKind, ProcessSpec, ResponseRule};
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn binary_family_source(count: usize) -> MaterializedExperts {
        let fam = DyadicFamily::new(OutcomeSpace::Binary, FamilyConfig { dimension: 1, max_tier: 6 })
            .unwrap();
        MaterializedExperts::from_family(&fam, count).unwrap()
    }

    #[test]
    fn envelope_frozen_values() {
        // oracle: mpmath — 19 * 16^(3/4) * sqrt(ln 16) = 253.096601791940118
        assert!((regret_envelope(16, 0).unwrap() - 253.09660179194012).abs() < 1e-9);
        // 19 * 1e5^(3/4) * sqrt(ln 1e5) = 362532.083923372231
        assert!((regret_envelope(100_000, 0).unwrap() - 362532.08392337223).abs() < 1e-6);
        // the n_hat term is exactly additive
        let base = regret_envelope(5000, 0).unwrap();
        assert_eq!(regret_envelope(5000, 137).unwrap() - base, 137.0);
        assert!(regret_envelope(1, 0).is_err());
    }

    #[test]
    fn comparator_pool_is_exact_fourth_root() {
        assert_eq!(comparator_pool(1), 1);
        assert_eq!(comparator_pool(15), 1);
        assert_eq!(comparator_pool(16), 2);
        assert_eq!(comparator_pool(624), 4);
        assert_eq!(comparator_pool(625), 5);
        assert_eq!(comparator_pool(100_000), 17);
        for n in 1..=10_000u64 {
            let k = comparator_pool(n) as u64;
            assert!(k.pow(4) <= n || k == 1);
            assert!((k + 1).pow(4) > n);
        }
    }

    #[test]
    fn block_one_returns_the_single_expert() {
        let mut learner = EpochHedge::new(0);
        let (y_hat, idx, _) = learner.predict(&[Outcome::Label(1)]).unwrap();
        assert_eq!(y_hat, Outcome::Label(1));
        assert_eq!(idx, 1);
        assert_eq!(learner.weights(), vec![1.0]);
    }

    #[test]
    fn weights_are_exactly_uniform_at_block_starts() {
        let space = OutcomeSpace::Binary;
        let mut learner = EpochHedge::new(3);
        let mut preds = vec![Outcome::Label(0)];
        for _ in 1..200u64 {
            let t = learner.time();
            if learner.block.is_block_start(t) {
                let j = learner.active_experts();
                let w = learner.weights();
                assert!(w.iter().all(|&v| v == 1.0 / j as f64), "t={t}: {w:?}");
            }
            // feed losses that differ across experts so mid-block weights move
            let y = Outcome::Label((t % 2) as usize);
            learner.update(&space, &preds, &y).unwrap();
            preds = (0..learner.active_experts())
                .map(|i| Outcome::Label(i % 2))
                .collect();
        }
    }

    #[test]
    fn update_crossing_boundary_resets_and_extends() {
        let space = OutcomeSpace::Binary;
        let mut learner = EpochHedge::new(1);
        assert_eq!(learner.block().j, 1);
        learner.update(&space, &[Outcome::Label(0)], &Outcome::Label(1)).unwrap();
        // t=2 opens block 2 with two zeroed experts
        assert_eq!(learner.time(), 2);
        assert_eq!(learner.block().j, 2);
        assert_eq!(learner.block_cum_loss, vec![0.0, 0.0]);
        let preds = [Outcome::Label(0), Outcome::Label(1)];
        learner.update(&space, &preds, &Outcome::Label(1)).unwrap();
        assert_eq!(learner.block_cum_loss, vec![1.0, 0.0]);
        learner.update(&space, &preds, &Outcome::Label(1)).unwrap();
        // t=4 opens block 3
        assert_eq!(learner.block().j, 3);
        assert_eq!(learner.block_cum_loss, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn in_block_weights_match_hand_computed_value() {
        // block 2 state with losses (0,1): v1 = 1/(1+e^{-eta_2}),
        // eta_2 = sqrt(4 ln 2); oracle value 0.840922663688670525
        let space = OutcomeSpace::Binary;
        let mut learner = EpochHedge::new(5);
        learner.update(&space, &[Outcome::Label(0)], &Outcome::Label(0)).unwrap();
        let preds = [Outcome::Label(0), Outcome::Label(1)];
        learner.update(&space, &preds, &Outcome::Label(0)).unwrap();
        assert_eq!(learner.block_cum_loss, vec![0.0, 1.0]);
        let w = learner.weights();
        assert!((w[0] - 0.8409226636886705).abs() < 1e-15, "{w:?}");
        assert!((w[1] - 0.1590773363113295).abs() < 1e-15);
    }

    #[test]
    fn identical_experts_stay_identically_weighted() {
        let space = OutcomeSpace::Binary;
        let mut learner = EpochHedge::new(7);
        for t in 1..100u64 {
            let j = learner.active_experts();
            let preds = vec![Outcome::Label((t % 2) as usize); j];
            learner.update(&space, &preds, &Outcome::Label(0)).unwrap();
            let w = learner.weights();
            assert!(w.iter().all(|&v| v.to_bits() == w[0].to_bits()));
        }
    }

    #[test]
    fn arity_mismatch_is_a_contract_error() {
        let mut learner = EpochHedge::new(0);
        assert_eq!(
            learner.predict(&[Outcome::Label(0), Outcome::Label(1)]),
            Err(EpochError::PredictionArity { expected: 1, got: 2 })
        );
    }

    #[test]
    fn horizon_one_logs_expert_one() {
        let source = binary_family_source(4);
        let data = vec![(Input::Point(vec![0.3]), Outcome::Label(0))];
        let mut stream = SliceStream::new(&data);
        let out = run_learner(
            &source,
            &mut stream,
            1,
            42,
            RunComparator::BestOfPool(1),
            &OutcomeSpace::Binary,
            1,
        )
        .unwrap();
        assert_eq!(out.records.len(), 1);
        assert!(!out.truncated);
        let rec = &out.records[0];
        assert_eq!(rec.expert_index, 1);
        // expert 1 is the constant-0 function
        assert_eq!(rec.y_hat, Outcome::Label(0));
        assert_eq!(rec.step_loss, 0.0);
    }

    #[test]
    fn short_stream_reports_truncation() {
        let source = binary_family_source(4);
        let data = vec![(Input::Point(vec![0.1]), Outcome::Label(0)); 3];
        let mut stream = SliceStream::new(&data);
        let out = run_learner(
            &source,
            &mut stream,
            10,
            1,
            RunComparator::BestOfPool(1),
            &OutcomeSpace::Binary,
            1,
        )
        .unwrap();
        assert!(out.truncated);
        assert_eq!(out.records.len(), 3);
    }

    /// Expert 1 always right, everyone else always wrong.
    struct OneGoodExpert;

    impl ExpertSource for OneGoodExpert {
        fn predict(&self, index: usize, _x: &Input) -> Result<Outcome, ExpertError> {
            Ok(Outcome::Label(usize::from(index != 1)))
        }
    }

    #[test]
    fn uniquely_perfect_expert_dominates_late_blocks() {
        let data = vec![(Input::Point(vec![0.4]), Outcome::Label(0)); 600];
        let mut stream = SliceStream::new(&data);
        let out = run_learner(
            &OneGoodExpert,
            &mut stream,
            600,
            4,
            RunComparator::BestOfPool(1),
            &OutcomeSpace::Binary,
            1,
        )
        .unwrap();
        assert!(out.pool_step_losses[0].iter().all(|&l| l == 0.0));
        // in the last complete block the zero-loss expert carries nearly all
        // weight once the first few uniform-start steps have passed
        let last_full = out.records.last().unwrap().block - 1;
        let in_block: Vec<&RunRecord> =
            out.records.iter().filter(|r| r.block == last_full).collect();
        assert_eq!(in_block.len() as u64, last_full);
        let hits = in_block.iter().filter(|r| r.expert_index == 1).count();
        assert!(
            hits as f64 >= 0.6 * in_block.len() as f64,
            "expert 1 sampled {hits}/{} in block {last_full}",
            in_block.len()
        );
    }

    #[test]
    fn constant_stream_keeps_family_expert_one_lossless() {
        let source = binary_family_source(50);
        let spec = ProcessSpec::new(ProcessKind::Iid {
            marginal: Marginal::Uniform { dimension: 1 },
            response: ResponseRule::Constant(Outcome::Label(0)),
        });
        let data = crate::process::generate(&spec, 600, 4).unwrap();
        let mut stream = SliceStream::new(&data);
        let out = run_learner(
            &source,
            &mut stream,
            600,
            4,
            RunComparator::BestOfPool(1),
            &OutcomeSpace::Binary,
            1,
        )
        .unwrap();
        // the constant-0 member is exactly right every step, and the learner's
        // late average loss is small even though other agreeing experts share
        // the weight with it
        assert!(out.pool_step_losses[0].iter().all(|&l| l == 0.0));
        let half = out.records.len() / 2;
        let late: f64 =
            out.records[half..].iter().map(|r| r.step_loss).sum::<f64>() / half as f64;
        assert!(late < 0.25, "late average loss {late}");
    }

    #[test]
    fn runs_replay_bit_identically() {
        let source = binary_family_source(30);
        let spec = ProcessSpec::new(ProcessKind::Iid {
            marginal: Marginal::Uniform { dimension: 1 },
            response: ResponseRule::Threshold {
                cutoff: 0.5,
                lo: Outcome::Label(0),
                hi: Outcome::Label(1),
            },
        });
        let data = crate::process::generate(&spec, 300, 9).unwrap();
        let run = |seed| {
            let mut stream = SliceStream::new(&data);
            run_learner(
                &source,
                &mut stream,
                300,
                seed,
                RunComparator::BestOfPool(4),
                &OutcomeSpace::Binary,
                4,
            )
            .unwrap()
        };
        let (a, b) = (run(11), run(11));
        assert_eq!(a.records, b.records);
        assert_ne!(run(11).records, run(12).records);
    }

    struct CountingSource {
        inner: MaterializedExperts,
        max_seen: AtomicUsize,
    }

    impl ExpertSource for CountingSource {
        fn predict(&self, index: usize, x: &Input) -> Result<Outcome, ExpertError> {
            self.max_seen.fetch_max(index, Ordering::Relaxed);
            self.inner.predict(index, x)
        }
    }

    #[test]
    fn learner_never_consults_beyond_the_active_block() {
        let horizon = 500usize;
        let j_max = crate::schedule::block_index(horizon as u64).unwrap() as usize;
        let source =
            CountingSource { inner: binary_family_source(j_max), max_seen: AtomicUsize::new(0) };
        let data = vec![(Input::Point(vec![0.4]), Outcome::Label(1)); horizon];
        let mut stream = SliceStream::new(&data);
        // pool = 0: no side accounting, only the learner's own lazy queries
        run_learner(
            &source,
            &mut stream,
            horizon,
            2,
            RunComparator::BestOfPool(1),
            &OutcomeSpace::Binary,
            0,
        )
        .unwrap();
        assert_eq!(source.max_seen.load(Ordering::Relaxed), j_max);
    }
}
