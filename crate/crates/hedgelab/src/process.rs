//! Input/response process generators and long-run frequency estimators.
//!
//! The generators cover the regimes the learner is meant to face: i.i.d.
//! draws, stationary Markov chains started from their stationary law,
//! stationary non-ergodic mixtures whose hidden component is drawn exactly
//! once, a conditionally-i.i.d.-given-label family, history-dependent
//! adversarial responses (optionally closed-loop on the learner's own
//! predictions), and a deterministic drifting sequence `x_t = t` that
//! escapes every compact set — the canonical violator for the shrinking-set
//! condition checked by [`condition_check`].
//!
//! Long-run functionals are estimated pathwise: the limsup of empirical
//! frequencies is proxied by the maximum running mean over the tail window
//! `[n/2, n]` (an at-horizon mean under-reports oscillation, a full-prefix
//! max over-reports transients). Every verdict derived from it is heuristic
//! and advisory; nothing in the learner's code path depends on one.

use crate::hedge::sample_index;
use crate::loss::Outcome;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// An input point: a cube point for learnable streams, a natural number for
/// the drifting domain. Only cube inputs pair with the dyadic expert family.
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Point(Vec<f64>),
    Nat(u64),
}

#[derive(Debug, Error, PartialEq)]
pub enum ProcessError {
    #[error("noise is undefined for the {0} kind (its responses are not sampled)")]
    NoiseRejected(&'static str),
    #[error("noise rate {0} outside [0,1]")]
    BadNoiseRate(f64),
    #[error("mixture needs matching nonempty components and weights summing to 1")]
    BadMixture,
    #[error("transition matrix must be square and row-stochastic: {0}")]
    BadTransition(String),
    #[error("probability {0} outside [0,1]")]
    BadProbability(f64),
    #[error("point mass coordinates must lie in the unit cube")]
    PointOutsideCube,
    #[error("label sequence must be nonempty with labels in {{0,1}}")]
    BadLabelSequence,
    #[error("shrinking sets not nested at k={k}: a probe point lies in A_{} but not A_{k}", k + 1)]
    NotNested { k: usize },
    #[error("condition check needs at least one set and one seed")]
    EmptyConditionCheck,
}

/// Response rule for kinds whose `y` is derived from the drawn input.
/// `lo`/`hi` are the space-appropriate encodings of the two-point responses.
#[derive(Debug, Clone, PartialEq)]
pub enum ResponseRule {
    Constant(Outcome),
    /// `hi` if the first coordinate exceeds the cutoff, else `lo`.
    Threshold { cutoff: f64, lo: Outcome, hi: Outcome },
    /// `hi` with probability `p`, independently each step.
    Bernoulli { p: f64, lo: Outcome, hi: Outcome },
}

/// Marginal law of the inputs for i.i.d.-style kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum Marginal {
    Uniform { dimension: usize },
    PointMass(Vec<f64>),
}

/// Response attached to the hidden Markov state.
#[derive(Debug, Clone, PartialEq)]
pub enum StateResponse {
    /// `y` is the state index itself (discrete outcome spaces).
    Label,
    /// `hi` when the state lies in the listed set, else `lo`.
    Indicator { states: Vec<usize>, lo: Outcome, hi: Outcome },
}

/// Label driver for the conditionally-i.i.d.-given-label kind.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelSequence {
    /// Deterministic repetition of a {0,1} pattern.
    Periodic(Vec<usize>),
    /// Independent labels, `1` with the given probability.
    Iid { bias: f64 },
}

/// History-dependent response rules; `FlipPrediction` is the closed-loop
/// stress case, answering with the outcome the learner did not predict.
#[derive(Debug, Clone, PartialEq)]
pub enum AdversarialRule {
    Alternate { lo: Outcome, hi: Outcome },
    Constant(Outcome),
    FlipPrediction { lo: Outcome, hi: Outcome },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProcessKind {
    Iid { marginal: Marginal, response: ResponseRule },
    /// Finite chain on states `0..S`, started from its stationary law;
    /// state `s` is exposed as the cube point `(s + 1/2) / S`.
    MarkovStationary { transition: Vec<Vec<f64>>, response: StateResponse },
    /// The hidden component is drawn exactly once, before the first step,
    /// and kept forever: stationary when the components are, but not ergodic.
    Mixture { components: Vec<ProcessSpec>, weights: Vec<f64> },
    /// `x_t = t` on the naturals; the deterministic compact-set escaper.
    Drift,
    /// Labels from the driver; `x_t` uniform on `[y/2, (y+1)/2)`, so the
    /// label is a deterministic function of the input.
    ConditionalIid { labels: LabelSequence, lo: Outcome, hi: Outcome },
    Adversarial { marginal: Marginal, rule: AdversarialRule },
}

/// A process kind plus optional response corruption.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    /// With this probability a sampled response is corrupted: labels flip,
    /// reals are replaced by a fresh uniform draw.
    pub noise: Option<f64>,
}

impl ProcessSpec {
    pub fn new(kind: ProcessKind) -> Self {
        Self { kind, noise: None }
    }

    pub fn with_noise(kind: ProcessKind, rate: f64) -> Self {
        Self { kind, noise: Some(rate) }
    }

    /// Equal-weight Bernoulli mixture on uniform inputs: the textbook
    /// stationary non-ergodic stream.
    pub fn coin_mixture(biases: &[f64], lo: Outcome, hi: Outcome) -> Self {
        let w = 1.0 / biases.len() as f64;
        let components = biases
            .iter()
            .map(|&p| {
                ProcessSpec::new(ProcessKind::Iid {
                    marginal: Marginal::Uniform { dimension: 1 },
                    response: ResponseRule::Bernoulli { p, lo, hi },
                })
            })
            .collect();
        ProcessSpec::new(ProcessKind::Mixture { components, weights: vec![w; biases.len()] })
    }

    pub fn validate(&self) -> Result<(), ProcessError> {
        if let Some(rate) = self.noise {
            if !(0.0..=1.0).contains(&rate) {
                return Err(ProcessError::BadNoiseRate(rate));
            }
            match &self.kind {
                ProcessKind::Drift => return Err(ProcessError::NoiseRejected("drift")),
                ProcessKind::Adversarial { .. } => {
                    return Err(ProcessError::NoiseRejected("adversarial"))
                }
                _ => {}
            }
        }
        match &self.kind {
            ProcessKind::Iid { marginal, response } => {
                validate_marginal(marginal)?;
                if let ResponseRule::Bernoulli { p, .. } = response {
                    if !(0.0..=1.0).contains(p) {
                        return Err(ProcessError::BadProbability(*p));
                    }
                }
                Ok(())
            }
            ProcessKind::Adversarial { marginal, .. } => validate_marginal(marginal),
            ProcessKind::MarkovStationary { transition, .. } => validate_transition(transition),
            ProcessKind::Mixture { components, weights } => {
                if components.is_empty() || components.len() != weights.len() {
                    return Err(ProcessError::BadMixture);
                }
                let sum: f64 = weights.iter().sum();
                if weights.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > 1e-9 {
                    return Err(ProcessError::BadMixture);
                }
                components.iter().try_for_each(|c| c.validate())
            }
            ProcessKind::Drift => Ok(()),
            ProcessKind::ConditionalIid { labels, .. } => match labels {
                LabelSequence::Periodic(p) => {
                    if p.is_empty() || p.iter().any(|&l| l > 1) {
                        Err(ProcessError::BadLabelSequence)
                    } else {
                        Ok(())
                    }
                }
                LabelSequence::Iid { bias } => {
                    if (0.0..=1.0).contains(bias) {
                        Ok(())
                    } else {
                        Err(ProcessError::BadProbability(*bias))
                    }
                }
            },
        }
    }
}

fn validate_marginal(m: &Marginal) -> Result<(), ProcessError> {
    match m {
        Marginal::Uniform { dimension } => {
            if *dimension == 0 {
                Err(ProcessError::PointOutsideCube)
            } else {
                Ok(())
            }
        }
        Marginal::PointMass(x) => {
            if x.is_empty() || x.iter().any(|v| !(0.0..=1.0).contains(v)) {
                Err(ProcessError::PointOutsideCube)
            } else {
                Ok(())
            }
        }
    }
}

fn validate_transition(t: &[Vec<f64>]) -> Result<(), ProcessError> {
    let s = t.len();
    if s == 0 {
        return Err(ProcessError::BadTransition("empty matrix".into()));
    }
    for (i, row) in t.iter().enumerate() {
        if row.len() != s {
            return Err(ProcessError::BadTransition(format!("row {i} has length {}", row.len())));
        }
        if row.iter().any(|&p| p < 0.0) {
            return Err(ProcessError::BadTransition(format!("row {i} has a negative entry")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ProcessError::BadTransition(format!("row {i} sums to {sum}")));
        }
    }
    Ok(())
}

/// Stationary distribution by power iteration; the matrix must already be
/// validated. Deterministic: fixed starting point and sweep order.
pub fn stationary_distribution(transition: &[Vec<f64>]) -> Vec<f64> {
    let s = transition.len();
    let mut pi = vec![1.0 / s as f64; s];
    for _ in 0..200_000 {
        let mut next = vec![0.0; s];
        for (i, row) in transition.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                next[j] += pi[i] * p;
            }
        }
        let delta: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pi = next;
        if delta < 1e-14 {
            break;
        }
    }
    pi
}

enum KindState {
    Iid { marginal: Marginal, response: ResponseRule, x0: f64 },
    Markov { transition: Vec<Vec<f64>>, response: StateResponse, state: usize },
    Mixture(Box<KindState>),
    Drift,
    ConditionalIid { labels: LabelSequence, lo: Outcome, hi: Outcome, current: usize },
    Adversarial { marginal: Marginal, rule: AdversarialRule },
}

impl KindState {
    fn init(kind: &ProcessKind, rng: &mut ChaCha8Rng) -> Self {
        match kind {
            ProcessKind::Iid { marginal, response } => KindState::Iid {
                marginal: marginal.clone(),
                response: response.clone(),
                x0: 0.0,
            },
            ProcessKind::MarkovStationary { transition, response } => {
                let pi = stationary_distribution(transition);
                let state = sample_index(&pi, rng.random::<f64>());
                KindState::Markov { transition: transition.clone(), response: response.clone(), state }
            }
            ProcessKind::Mixture { components, weights } => {
                // the single component draw that makes the mixture non-ergodic
                let chosen = sample_index(weights, rng.random::<f64>());
                KindState::Mixture(Box::new(Self::init(&components[chosen].kind, rng)))
            }
            ProcessKind::Drift => KindState::Drift,
            ProcessKind::ConditionalIid { labels, lo, hi } => KindState::ConditionalIid {
                labels: labels.clone(),
                lo: *lo,
                hi: *hi,
                current: 0,
            },
            ProcessKind::Adversarial { marginal, rule } => {
                KindState::Adversarial { marginal: marginal.clone(), rule: rule.clone() }
            }
        }
    }

    fn input(&mut self, t: u64, rng: &mut ChaCha8Rng) -> Input {
        match self {
            KindState::Iid { marginal, x0, .. } => {
                let x = draw_marginal(marginal, rng);
                if let Input::Point(p) = &x {
                    *x0 = p[0];
                }
                x
            }
            KindState::Adversarial { marginal, .. } => draw_marginal(marginal, rng),
            KindState::Markov { transition, state, .. } => {
                if t > 1 {
                    *state = sample_index(&transition[*state], rng.random::<f64>());
                }
                let s = transition.len() as f64;
                Input::Point(vec![(*state as f64 + 0.5) / s])
            }
            KindState::Mixture(inner) => inner.input(t, rng),
            KindState::Drift => Input::Nat(t),
            KindState::ConditionalIid { labels, current, .. } => {
                *current = match labels {
                    LabelSequence::Periodic(p) => p[((t - 1) as usize) % p.len()],
                    LabelSequence::Iid { bias } => usize::from(rng.random::<f64>() < *bias),
                };
                Input::Point(vec![*current as f64 * 0.5 + 0.5 * rng.random::<f64>()])
            }
        }
    }

    fn response(&mut self, t: u64, rng: &mut ChaCha8Rng, prediction: Option<&Outcome>) -> Outcome {
        match self {
            KindState::Iid { response, x0, .. } => match response {
                ResponseRule::Constant(y) => *y,
                ResponseRule::Threshold { cutoff, lo, hi } => {
                    if *x0 > *cutoff {
                        *hi
                    } else {
                        *lo
                    }
                }
                ResponseRule::Bernoulli { p, lo, hi } => {
                    if rng.random::<f64>() < *p {
                        *hi
                    } else {
                        *lo
                    }
                }
            },
            KindState::Markov { response, state, .. } => match response {
                StateResponse::Label => Outcome::Label(*state),
                StateResponse::Indicator { states, lo, hi } => {
                    if states.contains(state) {
                        *hi
                    } else {
                        *lo
                    }
                }
            },
            KindState::Mixture(inner) => inner.response(t, rng, prediction),
            KindState::Drift => Outcome::Label(0),
            KindState::ConditionalIid { current, lo, hi, .. } => {
                if *current == 1 {
                    *hi
                } else {
                    *lo
                }
            }
            KindState::Adversarial { rule, .. } => match rule {
                AdversarialRule::Constant(y) => *y,
                AdversarialRule::Alternate { lo, hi } => {
                    if t % 2 == 1 {
                        *lo
                    } else {
                        *hi
                    }
                }
                AdversarialRule::FlipPrediction { lo, hi } => match prediction {
                    Some(p) if p == hi => *lo,
                    Some(_) => *hi,
                    None => *lo,
                },
            },
        }
    }
}

fn draw_marginal(m: &Marginal, rng: &mut ChaCha8Rng) -> Input {
    match m {
        Marginal::Uniform { dimension } => {
            Input::Point((0..*dimension).map(|_| rng.random::<f64>()).collect())
        }
        Marginal::PointMass(x) => Input::Point(x.clone()),
    }
}

/// A seeded realization of a process, stepped in two phases so closed-loop
/// response rules can see the learner's prediction for the current step.
pub struct ProcessStream {
    state: KindState,
    rng: ChaCha8Rng,
    t: u64,
    noise: Option<f64>,
}

impl ProcessStream {
    /// All randomness comes from one ChaCha8 stream seeded with `seed`; the
    /// draw order is fixed, so a (spec, seed) pair replays bit-identically.
    pub fn new(spec: &ProcessSpec, seed: u64) -> Result<Self, ProcessError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = KindState::init(&spec.kind, &mut rng);
        Ok(Self { state, rng, t: 0, noise: spec.noise })
    }

    /// Draws `x_t`, advancing hidden state where applicable.
    pub fn next_input(&mut self) -> Input {
        self.t += 1;
        self.state.input(self.t, &mut self.rng)
    }

    /// Reveals `y_t` for the step whose input was just drawn. `prediction`
    /// is consulted only by closed-loop adversarial rules.
    pub fn next_response(&mut self, prediction: Option<&Outcome>) -> Outcome {
        let y = self.state.response(self.t, &mut self.rng, prediction);
        match self.noise {
            Some(rate) if rate > 0.0 && self.rng.random::<f64>() < rate => match y {
                Outcome::Label(l) => Outcome::Label(usize::from(l == 0)),
                Outcome::Real(_) => Outcome::Real(self.rng.random::<f64>()),
            },
            _ => y,
        }
    }
}

/// Open-loop realization of length `n`.
pub fn generate(spec: &ProcessSpec, n: usize, seed: u64) -> Result<Vec<(Input, Outcome)>, ProcessError> {
    let mut stream = ProcessStream::new(spec, seed)?;
    Ok((0..n)
        .map(|_| {
            let x = stream.next_input();
            let y = stream.next_response(None);
            (x, y)
        })
        .collect())
}

/// Finite-horizon estimate of a set's pathwise upper frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalMuEstimate {
    /// Mean of the indicator over the whole prefix.
    pub running_mean: f64,
    /// Max of running means over the window `[ceil(n/2), n]` — the
    /// finite-horizon limsup proxy.
    pub tail_max: f64,
    pub horizon: usize,
}

/// Empirical upper-frequency estimate of `indicator` along `xs`.
pub fn empirical_mu(xs: &[Input], indicator: &dyn Fn(&Input) -> bool) -> EmpiricalMuEstimate {
    let n = xs.len();
    assert!(n >= 2, "empirical_mu needs at least two observations");
    let window_start = n.div_ceil(2);
    let mut hits = 0usize;
    let mut tail_max = 0.0f64;
    let mut running_mean = 0.0;
    for (i, x) in xs.iter().enumerate() {
        hits += usize::from(indicator(x));
        let m = i + 1;
        running_mean = hits as f64 / m as f64;
        if m >= window_start {
            tail_max = tail_max.max(running_mean);
        }
    }
    EmpiricalMuEstimate { running_mean, tail_max, horizon: n }
}

/// One member of a nested shrinking family `A_1 ⊇ A_2 ⊇ ...`.
pub struct ShrinkingSet {
    pub name: String,
    pub contains: Box<dyn Fn(&Input) -> bool + Sync>,
}

/// `A_k = (0, 1/k)` on the first coordinate.
pub fn interval_sets(k_max: usize) -> Vec<ShrinkingSet> {
    (1..=k_max)
        .map(|k| ShrinkingSet {
            name: format!("(0,1/{k})"),
            contains: Box::new(move |x| match x {
                Input::Point(p) => p[0] > 0.0 && p[0] < 1.0 / k as f64,
                Input::Nat(_) => false,
            }),
        })
        .collect()
}

/// `A_k = {k, k+1, ...}` on the natural-number domain.
pub fn tail_sets(k_max: usize) -> Vec<ShrinkingSet> {
    (1..=k_max)
        .map(|k| ShrinkingSet {
            name: format!("[{k},inf)"),
            contains: Box::new(move |x| match x {
                Input::Nat(m) => *m >= k as u64,
                Input::Point(_) => false,
            }),
        })
        .collect()
}

/// Profile and verdict of the shrinking-set condition on one process.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    /// `k ↦ mean over seeds of tail_max(A_k)`.
    pub profile: Vec<(usize, f64)>,
    pub threshold: f64,
    pub pass: bool,
    /// Always true: a finite-horizon profile can only suggest the limit.
    pub heuristic: bool,
}

/// Estimates `E[μ̂(A_k)]` for each set by seed-averaged tail maxima and
/// compares the profile's final value against `threshold`.
///
/// The sets are first verified nested on a probe prefix of the first seed's
/// realization; a violation is a contract error, not data.
pub fn condition_check(
    spec: &ProcessSpec,
    sets: &[ShrinkingSet],
    n: usize,
    seeds: &[u64],
    threshold: f64,
) -> Result<ConditionReport, ProcessError> {
    if sets.is_empty() || seeds.is_empty() {
        return Err(ProcessError::EmptyConditionCheck);
    }
    let probe: Vec<Input> = generate(spec, n.min(1_000), seeds[0])?
        .into_iter()
        .map(|(x, _)| x)
        .collect();
    for k in 0..sets.len() - 1 {
        let outer = &sets[k].contains;
        let inner = &sets[k + 1].contains;
        if probe.iter().any(|x| inner(x) && !outer(x)) {
            return Err(ProcessError::NotNested { k: k + 1 });
        }
    }

    let mut profile = Vec::with_capacity(sets.len());
    let mut realizations = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let xs: Vec<Input> = generate(spec, n, seed)?.into_iter().map(|(x, _)| x).collect();
        realizations.push(xs);
    }
    for (k, set) in sets.iter().enumerate() {
        let mean = realizations
            .iter()
            .map(|xs| empirical_mu(xs, &*set.contains).tail_max)
            .sum::<f64>()
            / seeds.len() as f64;
        profile.push((k + 1, mean));
    }
    let pass = profile.last().map(|&(_, v)| v <= threshold).unwrap_or(false);
    Ok(ConditionReport { profile, threshold, pass, heuristic: true })
}

/// Partial averages `(1/T) Σ_{t≤T} (step_loss_t - comparator_loss_t)`.
pub fn excess_loss_curve(step_losses: &[f64], comparator_losses: &[f64]) -> Vec<f64> {
    assert_eq!(step_losses.len(), comparator_losses.len());
    let mut acc = 0.0;
    step_losses
        .iter()
        .zip(comparator_losses)
        .enumerate()
        .map(|(i, (l, c))| {
            acc += l - c;
            acc / (i + 1) as f64
        })
        .collect()
}

/// Max of a curve over the tail window `[ceil(n/2), n]`: the limsup proxy
/// reported as the consistency statistic.
pub fn tail_statistic(curve: &[f64]) -> f64 {
    let n = curve.len();
    assert!(n >= 1);
    let start = n.div_ceil(2) - 1;
    curve[start..].iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
