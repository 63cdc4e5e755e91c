//! Plain-text experiment configuration.
//!
//! The format is line-oriented `key = value` with `#` comments and dotted
//! section keys (`expert.dimension`, `check.lemma31`, ...). Parsing is pure:
//! `markov:<file>` and `ryabko:<file>` process values are recorded as
//! directives and only read from disk in [`ParsedConfig::resolve`], so every
//! grammar here can be driven from untrusted bytes without touching I/O.
//!
//! Errors always name the offending key.

use crate::experts::FamilyConfig;
use crate::loss::{Outcome, OutcomeSpace};
use crate::process::{
    AdversarialRule, LabelSequence, Marginal, ProcessKind, ProcessSpec, ResponseRule,
    StateResponse,
};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown config key `{key}`")]
    UnknownKey { key: String },
    #[error("duplicate config key `{key}`")]
    DuplicateKey { key: String },
    #[error("missing required key `{key}`")]
    MissingKey { key: &'static str },
    #[error("bad value for `{key}`: {reason}")]
    BadValue { key: String, reason: String },
    #[error("line {line} is not `key = value`")]
    Malformed { line: usize },
    #[error("cannot read `{path}`: {reason}")]
    Io { path: String, reason: String },
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue { key: key.to_string(), reason: reason.into() }
}

/// Spec-pinned defaults for the bound checks.
pub mod defaults {
    pub const LEMMA31_N: usize = 100;
    pub const LEMMA31_EXPERTS: usize = 10;
    pub const LEMMA31_DELTA: f64 = 0.1;
    pub const LEMMA31_TRIALS: usize = 2000;
    pub const COROLLARY32_N_HAT: u64 = 1000;
    pub const COROLLARY32_START: u64 = 1000;
    pub const CONSISTENCY_THRESHOLD: f64 = 0.05;
    pub const CONSISTENCY_MIN_PASS_FRACTION: f64 = 0.9;
    pub const CONDITION1_K_MAX: usize = 10;
    pub const CONDITION1_THRESHOLD: f64 = 0.15;
    pub const DENSITY_THRESHOLD: f64 = 1.0;
}

/// The comparator `f0` an experiment measures excess loss against.
#[derive(Debug, Clone, PartialEq)]
pub enum ComparatorSpec {
    /// Family member at the given 1-based index.
    Member(usize),
    /// `hi` iff the first coordinate exceeds the cutoff.
    Threshold(f64),
    /// Hindsight-best family member among the first `M`; `0` means the
    /// horizon-derived pool `max(1, ⌊n^(1/4)⌋)`.
    BestMember(usize),
    /// Explicit dyadic cell table at the given resolution.
    Table { resolution: u32, values: Vec<Outcome> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma31Params {
    pub n: usize,
    pub experts: usize,
    pub delta: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corollary32Params {
    /// Additive allowance `n_hat` in the envelope.
    pub n_hat: u64,
    /// First horizon at which the envelope is enforced.
    pub start: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyParams {
    pub threshold: f64,
    pub min_pass_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShrinkingFamily {
    /// `A_k = (0, 1/k)` on the first coordinate.
    Intervals { k_max: usize },
    /// `A_k = {k, k+1, ...}` on the natural-number domain.
    Tails { k_max: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition1Params {
    pub sets: ShrinkingFamily,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityParams {
    /// Ascending prefix sizes to profile; empty means the family's tier
    /// exhaustion counts up to `expert.max_tier` capped at 256 experts.
    pub m_grid: Vec<usize>,
    pub threshold: f64,
}

/// Which bound checks an experiment runs, each with its parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundChecks {
    pub lemma31: Option<Lemma31Params>,
    pub corollary32: Option<Corollary32Params>,
    pub consistency: Option<ConsistencyParams>,
    pub condition1: Option<Condition1Params>,
    pub density: Option<DensityParams>,
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub outcome: OutcomeSpace,
    pub process: ProcessSpec,
    pub comparator: ComparatorSpec,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub out_dir: Option<PathBuf>,
    pub expert: FamilyConfig,
    pub checks: BoundChecks,
}

/// Parse result before process files are loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConfig {
    pub outcome: OutcomeSpace,
    pub process: ProcessDirective,
    pub comparator: ComparatorSpec,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub out_dir: Option<PathBuf>,
    pub expert: FamilyConfig,
    pub checks: BoundChecks,
}

/// Process value as written: inline kinds are complete, file-backed kinds
/// still need their definition text.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessDirective {
    Ready(ProcessSpec),
    MarkovFile(String),
    RyabkoFile(String),
}

impl ParsedConfig {
    /// Loads any file-backed process definition relative to `base_dir`.
    pub fn resolve(self, base_dir: &Path) -> Result<ExperimentConfig, ConfigError> {
        let read = |rel: &str| -> Result<String, ConfigError> {
            let path = base_dir.join(rel);
            std::fs::read_to_string(&path).map_err(|e| ConfigError::Io {
                path: path.display().to_string(),
                reason: e.to_string(),
            })
        };
        let process = match self.process {
            ProcessDirective::Ready(spec) => spec,
            ProcessDirective::MarkovFile(rel) => parse_markov_file(&read(&rel)?, &self.outcome)?,
            ProcessDirective::RyabkoFile(rel) => parse_ryabko_file(&read(&rel)?, &self.outcome)?,
        };
        Ok(ExperimentConfig {
            outcome: self.outcome,
            process,
            comparator: self.comparator,
            horizon: self.horizon,
            seeds: self.seeds,
            out_dir: self.out_dir,
            expert: self.expert,
            checks: self.checks,
        })
    }
}

/// The canonical two-point responses of a space, used wherever a rule needs
/// a "0" and a "1" outcome.
pub fn two_point(space: &OutcomeSpace) -> Result<(Outcome, Outcome), ConfigError> {
    match space {
        OutcomeSpace::Interval => Ok((Outcome::Real(0.0), Outcome::Real(1.0))),
        labelled => {
            if labelled.label_count().unwrap_or(0) >= 2 {
                Ok((Outcome::Label(0), Outcome::Label(1)))
            } else {
                Err(bad("outcome", "space has fewer than two points"))
            }
        }
    }
}

fn parse_outcome_value(key: &str, s: &str, space: &OutcomeSpace) -> Result<Outcome, ConfigError> {
    let y = match space {
        OutcomeSpace::Interval => Outcome::Real(
            s.parse::<f64>().map_err(|_| bad(key, format!("`{s}` is not a real")))?,
        ),
        _ => Outcome::Label(
            s.parse::<usize>().map_err(|_| bad(key, format!("`{s}` is not a label index")))?,
        ),
    };
    if !space.contains(&y) {
        return Err(bad(key, format!("outcome `{s}` outside the carrier")));
    }
    Ok(y)
}

/// `binary | interval | discrete:<k>` — the outcome space grammar.
pub fn parse_outcome_spec(s: &str) -> Result<OutcomeSpace, ConfigError> {
    match s.split_once(':') {
        None => match s {
            "binary" => Ok(OutcomeSpace::Binary),
            "interval" => Ok(OutcomeSpace::Interval),
            other => Err(bad("outcome", format!("unknown kind `{other}`"))),
        },
        Some(("discrete", k)) => {
            let labels =
                k.parse::<usize>().map_err(|_| bad("outcome", format!("`{k}` is not a count")))?;
            if labels < 2 {
                return Err(bad("outcome", "discrete spaces need at least 2 labels"));
            }
            Ok(OutcomeSpace::Discrete { labels })
        }
        Some((other, _)) => Err(bad("outcome", format!("unknown kind `{other}`"))),
    }
}

fn parse_f64_list(key: &str, s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad(key, format!("`{p}` is not a real"))))
        .collect()
}

/// The `process` grammar:
/// `iid-uniform | iid-point:<x,..> | coin-mixture:<b,..> | drift |
///  markov:<file> | ryabko:<file> | adversarial:<rule>`.
pub fn parse_process_spec(
    s: &str,
    space: &OutcomeSpace,
    dimension: usize,
) -> Result<ProcessDirective, ConfigError> {
    const KEY: &str = "process";
    let (kind, rest) = match s.split_once(':') {
        Some((k, r)) => (k, Some(r)),
        None => (s, None),
    };
    let ready = |k: ProcessKind| Ok(ProcessDirective::Ready(ProcessSpec::new(k)));
    match (kind, rest) {
        ("iid-uniform", None) => {
            let (lo, hi) = two_point(space)?;
            ready(ProcessKind::Iid {
                marginal: Marginal::Uniform { dimension },
                response: ResponseRule::Threshold { cutoff: 0.5, lo, hi },
            })
        }
        ("iid-point", Some(coords)) => {
            let x = parse_f64_list(KEY, coords)?;
            if x.len() != dimension {
                return Err(bad(KEY, format!("point has {} coordinates, expected {dimension}", x.len())));
            }
            let (lo, hi) = two_point(space)?;
            ready(ProcessKind::Iid {
                marginal: Marginal::PointMass(x),
                response: ResponseRule::Threshold { cutoff: 0.5, lo, hi },
            })
        }
        ("coin-mixture", Some(biases)) => {
            let biases = parse_f64_list(KEY, biases)?;
            if biases.is_empty() || biases.iter().any(|b| !(0.0..=1.0).contains(b)) {
                return Err(bad(KEY, "coin-mixture needs biases in [0,1]"));
            }
            let (lo, hi) = two_point(space)?;
            Ok(ProcessDirective::Ready(ProcessSpec::coin_mixture(&biases, lo, hi)))
        }
        ("drift", None) => ready(ProcessKind::Drift),
        ("markov", Some(path)) if !path.is_empty() => {
            Ok(ProcessDirective::MarkovFile(path.to_string()))
        }
        ("ryabko", Some(path)) if !path.is_empty() => {
            Ok(ProcessDirective::RyabkoFile(path.to_string()))
        }
        ("adversarial", Some(rule)) => {
            let (lo, hi) = two_point(space)?;
            let marginal = Marginal::Uniform { dimension };
            let rule = match rule.split_once(':') {
                None if rule == "alternate" => AdversarialRule::Alternate { lo, hi },
                None if rule == "flip" => AdversarialRule::FlipPrediction { lo, hi },
                Some(("constant", v)) => {
                    AdversarialRule::Constant(parse_outcome_value(KEY, v, space)?)
                }
                _ => return Err(bad(KEY, format!("unknown adversarial rule `{rule}`"))),
            };
            ready(ProcessKind::Adversarial { marginal, rule })
        }
        _ => Err(bad(KEY, format!("unknown process kind `{s}`"))),
    }
}

/// The `process.y` override for i.i.d. kinds:
/// `constant:<v> | threshold:<c> | bernoulli:<p>`.
pub fn parse_response_rule(s: &str, space: &OutcomeSpace) -> Result<ResponseRule, ConfigError> {
    const KEY: &str = "process.y";
    let Some((kind, arg)) = s.split_once(':') else {
        return Err(bad(KEY, format!("unknown response rule `{s}`")));
    };
    match kind {
        "constant" => Ok(ResponseRule::Constant(parse_outcome_value(KEY, arg, space)?)),
        "threshold" => {
            let cutoff =
                arg.parse::<f64>().map_err(|_| bad(KEY, format!("`{arg}` is not a real")))?;
            if !(0.0..=1.0).contains(&cutoff) {
                return Err(bad(KEY, "threshold cutoff must lie in [0,1]"));
            }
            let (lo, hi) = two_point(space)?;
            Ok(ResponseRule::Threshold { cutoff, lo, hi })
        }
        "bernoulli" => {
            let p = arg.parse::<f64>().map_err(|_| bad(KEY, format!("`{arg}` is not a real")))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(bad(KEY, "bernoulli rate must lie in [0,1]"));
            }
            let (lo, hi) = two_point(space)?;
            Ok(ResponseRule::Bernoulli { p, lo, hi })
        }
        other => Err(bad(KEY, format!("unknown response rule `{other}`"))),
    }
}

/// The `comparator` grammar:
/// `member:<i> | threshold:<c> | best-member:<M> | table:<m>:<v,..>`.
pub fn parse_comparator_spec(
    s: &str,
    space: &OutcomeSpace,
    dimension: usize,
) -> Result<ComparatorSpec, ConfigError> {
    const KEY: &str = "comparator";
    let Some((kind, arg)) = s.split_once(':') else {
        return Err(bad(KEY, format!("unknown comparator `{s}`")));
    };
    match kind {
        "member" => {
            let i =
                arg.parse::<usize>().map_err(|_| bad(KEY, format!("`{arg}` is not an index")))?;
            if i == 0 {
                return Err(bad(KEY, "member indices start at 1"));
            }
            Ok(ComparatorSpec::Member(i))
        }
        "best-member" => {
            let m =
                arg.parse::<usize>().map_err(|_| bad(KEY, format!("`{arg}` is not a count")))?;
            Ok(ComparatorSpec::BestMember(m))
        }
        "threshold" => {
            let c = arg.parse::<f64>().map_err(|_| bad(KEY, format!("`{arg}` is not a real")))?;
            if !(0.0..=1.0).contains(&c) {
                return Err(bad(KEY, "threshold cutoff must lie in [0,1]"));
            }
            two_point(space)?;
            Ok(ComparatorSpec::Threshold(c))
        }
        "table" => {
            let Some((res, vals)) = arg.split_once(':') else {
                return Err(bad(KEY, "table comparators are `table:<resolution>:<v,..>`"));
            };
            let resolution =
                res.parse::<u32>().map_err(|_| bad(KEY, format!("`{res}` is not a depth")))?;
            if resolution as usize * dimension > 22 {
                return Err(bad(KEY, "table resolution exceeds the cell budget"));
            }
            let expected = 1usize << (resolution as usize * dimension);
            let values: Vec<Outcome> = vals
                .split(',')
                .map(|v| parse_outcome_value(KEY, v.trim(), space))
                .collect::<Result<_, _>>()?;
            if values.len() != expected {
                return Err(bad(
                    KEY,
                    format!("table needs {expected} cell values, got {}", values.len()),
                ));
            }
            Ok(ComparatorSpec::Table { resolution, values })
        }
        other => Err(bad(KEY, format!("unknown comparator `{other}`"))),
    }
}

/// Markov process definition file:
/// `states = <S>`, `S` lines `row = p1 p2 ...`, optional
/// `y = label | indicator:<s,..>`.
pub fn parse_markov_file(text: &str, space: &OutcomeSpace) -> Result<ProcessSpec, ConfigError> {
    const KEY: &str = "markov";
    let mut states: Option<usize> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut response: Option<StateResponse> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or(ConfigError::Malformed { line: idx + 1 })?;
        match (key.trim(), value.trim()) {
            ("states", v) => {
                let s =
                    v.parse::<usize>().map_err(|_| bad(KEY, format!("`{v}` is not a count")))?;
                if s == 0 || s > 64 {
                    return Err(bad(KEY, "states must lie in 1..=64"));
                }
                states = Some(s);
            }
            ("row", v) => {
                rows.push(
                    v.split_whitespace()
                        .map(|p| {
                            p.parse::<f64>().map_err(|_| bad(KEY, format!("`{p}` is not a real")))
                        })
                        .collect::<Result<_, _>>()?,
                );
            }
            ("y", v) => {
                response = Some(match v.split_once(':') {
                    None if v == "label" => StateResponse::Label,
                    Some(("indicator", list)) => {
                        let states: Vec<usize> = list
                            .split(',')
                            .map(|p| {
                                p.trim().parse::<usize>().map_err(|_| {
                                    bad(KEY, format!("`{p}` is not a state index"))
                                })
                            })
                            .collect::<Result<_, _>>()?;
                        let (lo, hi) = two_point(space)?;
                        StateResponse::Indicator { states, lo, hi }
                    }
                    _ => return Err(bad(KEY, format!("unknown y rule `{v}`"))),
                });
            }
            (other, _) => return Err(ConfigError::UnknownKey { key: other.to_string() }),
        }
    }
    let states = states.ok_or(ConfigError::MissingKey { key: "states" })?;
    if rows.len() != states {
        return Err(bad(KEY, format!("expected {states} rows, got {}", rows.len())));
    }
    let response = match response {
        Some(StateResponse::Label) => {
            if space.label_count().is_none_or(|k| k < states) {
                return Err(bad(KEY, "y = label needs an outcome space covering every state"));
            }
            StateResponse::Label
        }
        Some(r) => r,
        None => {
            let (lo, hi) = two_point(space)?;
            StateResponse::Indicator { states: (states / 2..states).collect(), lo, hi }
        }
    };
    let spec =
        ProcessSpec::new(ProcessKind::MarkovStationary { transition: rows, response });
    spec.validate().map_err(|e| bad(KEY, e.to_string()))?;
    Ok(spec)
}

/// Conditionally-i.i.d.-given-label definition file:
/// `labels = periodic:<l,..> | iid:<bias>`.
pub fn parse_ryabko_file(text: &str, space: &OutcomeSpace) -> Result<ProcessSpec, ConfigError> {
    const KEY: &str = "ryabko";
    let mut labels: Option<LabelSequence> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or(ConfigError::Malformed { line: idx + 1 })?;
        match (key.trim(), value.trim()) {
            ("labels", v) => {
                labels = Some(match v.split_once(':') {
                    Some(("periodic", list)) => LabelSequence::Periodic(
                        list.split(',')
                            .map(|p| {
                                p.trim()
                                    .parse::<usize>()
                                    .map_err(|_| bad(KEY, format!("`{p}` is not a label")))
                            })
                            .collect::<Result<_, _>>()?,
                    ),
                    Some(("iid", b)) => LabelSequence::Iid {
                        bias: b
                            .parse::<f64>()
                            .map_err(|_| bad(KEY, format!("`{b}` is not a real")))?,
                    },
                    _ => return Err(bad(KEY, format!("unknown label driver `{v}`"))),
                });
            }
            (other, _) => return Err(ConfigError::UnknownKey { key: other.to_string() }),
        }
    }
    let labels = labels.ok_or(ConfigError::MissingKey { key: "labels" })?;
    let (lo, hi) = two_point(space)?;
    let spec = ProcessSpec::new(ProcessKind::ConditionalIid { labels, lo, hi });
    spec.validate().map_err(|e| bad(KEY, e.to_string()))?;
    Ok(spec)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => line[..pos].trim(),
        None => line.trim(),
    }
}

fn parse_toggle(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        other => Err(bad(key, format!("`{other}` is not on/off"))),
    }
}

/// Parses an experiment config from text. Pure; file-backed process values
/// stay unresolved directives.
pub fn parse_config(text: &str) -> Result<ParsedConfig, ConfigError> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or(ConfigError::Malformed { line: idx + 1 })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if map.insert(key.clone(), value).is_some() {
            return Err(ConfigError::DuplicateKey { key });
        }
    }

    const KNOWN: &[&str] = &[
        "outcome",
        "process",
        "process.y",
        "process.noise",
        "comparator",
        "horizon",
        "seeds",
        "seed",
        "seed_count",
        "out",
        "expert.dimension",
        "expert.max_tier",
        "check.lemma31",
        "check.corollary32",
        "check.consistency",
        "check.condition1",
        "check.density",
        "lemma31.n",
        "lemma31.experts",
        "lemma31.delta",
        "lemma31.trials",
        "corollary32.n_hat",
        "corollary32.start",
        "consistency.threshold",
        "consistency.min_pass_fraction",
        "condition1.sets",
        "condition1.threshold",
        "density.m_grid",
        "density.threshold",
    ];
    if let Some(key) = map.keys().find(|k| !KNOWN.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey { key: key.clone() });
    }

    let get = |key: &str| map.get(key).map(String::as_str);
    let parse_num = |key: &'static str| -> Result<Option<u64>, ConfigError> {
        get(key)
            .map(|v| v.parse::<u64>().map_err(|_| bad(key, format!("`{v}` is not an integer"))))
            .transpose()
    };
    let parse_real = |key: &'static str| -> Result<Option<f64>, ConfigError> {
        get(key)
            .map(|v| v.parse::<f64>().map_err(|_| bad(key, format!("`{v}` is not a real"))))
            .transpose()
    };

    let outcome = parse_outcome_spec(get("outcome").ok_or(ConfigError::MissingKey { key: "outcome" })?)?;

    let dimension = parse_num("expert.dimension")?.unwrap_or(1) as usize;
    if dimension == 0 {
        return Err(bad("expert.dimension", "dimension must be at least 1"));
    }
    let max_tier = parse_num("expert.max_tier")?.unwrap_or(8) as u32;
    let expert = FamilyConfig { dimension, max_tier };

    let mut process = parse_process_spec(
        get("process").ok_or(ConfigError::MissingKey { key: "process" })?,
        &outcome,
        dimension,
    )?;
    if let Some(rule) = get("process.y") {
        let rule = parse_response_rule(rule, &outcome)?;
        match &mut process {
            ProcessDirective::Ready(spec) => match &mut spec.kind {
                ProcessKind::Iid { response, .. } => *response = rule,
                _ => return Err(bad("process.y", "response override applies to i.i.d. kinds only")),
            },
            _ => return Err(bad("process.y", "response override applies to i.i.d. kinds only")),
        }
    }
    if let Some(rate) = parse_real("process.noise")? {
        if let ProcessDirective::Ready(spec) = &mut process {
            spec.noise = Some(rate);
            spec.validate().map_err(|e| bad("process.noise", e.to_string()))?;
        } else {
            return Err(bad("process.noise", "noise on file-backed kinds goes in the file"));
        }
    }

    let horizon = parse_num("horizon")?.ok_or(ConfigError::MissingKey { key: "horizon" })? as usize;
    if horizon == 0 {
        return Err(bad("horizon", "horizon must be at least 1"));
    }

    let seeds: Vec<u64> = match (get("seeds"), parse_num("seed")?, parse_num("seed_count")?) {
        (Some(list), None, None) => list
            .split(',')
            .map(|p| {
                p.trim().parse::<u64>().map_err(|_| bad("seeds", format!("`{p}` is not a seed")))
            })
            .collect::<Result<_, _>>()?,
        (None, base, count) => {
            let base = base.unwrap_or(0);
            let count = count.unwrap_or(1);
            if count == 0 {
                return Err(bad("seed_count", "seed list must be nonempty"));
            }
            (0..count).map(|k| base.wrapping_add(k)).collect()
        }
        (Some(_), _, _) => {
            return Err(bad("seeds", "give either `seeds` or `seed`/`seed_count`, not both"))
        }
    };
    if seeds.is_empty() {
        return Err(bad("seeds", "seed list must be nonempty"));
    }

    let comparator = match get("comparator") {
        Some(s) => parse_comparator_spec(s, &outcome, dimension)?,
        None => ComparatorSpec::BestMember(0),
    };

    let mut checks = BoundChecks::default();
    if parse_toggle("check.lemma31", get("check.lemma31").unwrap_or("off"))? {
        checks.lemma31 = Some(Lemma31Params {
            n: parse_num("lemma31.n")?.unwrap_or(defaults::LEMMA31_N as u64) as usize,
            experts: parse_num("lemma31.experts")?.unwrap_or(defaults::LEMMA31_EXPERTS as u64)
                as usize,
            delta: parse_real("lemma31.delta")?.unwrap_or(defaults::LEMMA31_DELTA),
            trials: parse_num("lemma31.trials")?.unwrap_or(defaults::LEMMA31_TRIALS as u64)
                as usize,
        });
        let p = checks.lemma31.as_ref().expect("just set");
        if p.n == 0 || p.experts == 0 {
            return Err(bad("lemma31.n", "the finite instance must be nonempty"));
        }
        if !(p.delta > 0.0 && p.delta < 1.0) {
            return Err(bad("lemma31.delta", "delta must lie in (0,1)"));
        }
        if p.trials < 100 {
            return Err(bad("lemma31.trials", "need at least 100 trials"));
        }
    }
    if parse_toggle("check.corollary32", get("check.corollary32").unwrap_or("off"))? {
        checks.corollary32 = Some(Corollary32Params {
            n_hat: parse_num("corollary32.n_hat")?.unwrap_or(defaults::COROLLARY32_N_HAT),
            start: parse_num("corollary32.start")?.unwrap_or(defaults::COROLLARY32_START).max(2),
        });
    }
    if parse_toggle("check.consistency", get("check.consistency").unwrap_or("off"))? {
        checks.consistency = Some(ConsistencyParams {
            threshold: parse_real("consistency.threshold")?
                .unwrap_or(defaults::CONSISTENCY_THRESHOLD),
            min_pass_fraction: parse_real("consistency.min_pass_fraction")?
                .unwrap_or(defaults::CONSISTENCY_MIN_PASS_FRACTION),
        });
    }
    if parse_toggle("check.condition1", get("check.condition1").unwrap_or("off"))? {
        let sets = match get("condition1.sets") {
            None => ShrinkingFamily::Intervals { k_max: defaults::CONDITION1_K_MAX },
            Some(s) => match s.split_once(':') {
                Some(("intervals", k)) => ShrinkingFamily::Intervals {
                    k_max: k
                        .parse::<usize>()
                        .map_err(|_| bad("condition1.sets", format!("`{k}` is not a count")))?,
                },
                Some(("tails", k)) => ShrinkingFamily::Tails {
                    k_max: k
                        .parse::<usize>()
                        .map_err(|_| bad("condition1.sets", format!("`{k}` is not a count")))?,
                },
                _ => return Err(bad("condition1.sets", format!("unknown set family `{s}`"))),
            },
        };
        match &sets {
            ShrinkingFamily::Intervals { k_max } | ShrinkingFamily::Tails { k_max } => {
                if *k_max == 0 {
                    return Err(bad("condition1.sets", "need at least one set"));
                }
            }
        }
        checks.condition1 = Some(Condition1Params {
            sets,
            threshold: parse_real("condition1.threshold")?
                .unwrap_or(defaults::CONDITION1_THRESHOLD),
        });
    }
    if parse_toggle("check.density", get("check.density").unwrap_or("off"))? {
        let m_grid = match get("density.m_grid") {
            None => Vec::new(),
            Some(list) => {
                let grid: Vec<usize> = list
                    .split(',')
                    .map(|p| {
                        p.trim()
                            .parse::<usize>()
                            .map_err(|_| bad("density.m_grid", format!("`{p}` is not a count")))
                    })
                    .collect::<Result<_, _>>()?;
                if grid.is_empty()
                    || grid[0] == 0
                    || grid.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(bad("density.m_grid", "grid must be ascending and start at 1+"));
                }
                grid
            }
        };
        checks.density = Some(DensityParams {
            m_grid,
            threshold: parse_real("density.threshold")?.unwrap_or(defaults::DENSITY_THRESHOLD),
        });
    }

    Ok(ParsedConfig {
        outcome,
        process,
        comparator,
        horizon,
        seeds,
        out_dir: get("out").map(PathBuf::from),
        expert,
        checks,
    })
}
