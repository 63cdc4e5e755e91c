//! Outcome spaces and their bounded metric losses.
//!
//! Every other module only relies on this contract: a loss is a metric on
//! the outcome set with `sup ℓ ≤ 1`. Built-in kinds are the 0-1 loss on
//! binary or finite label sets and the absolute loss on `[0,1]`; arbitrary
//! finite metric spaces can be supplied as an explicit table, which
//! [`validate_metric`] checks axiom by axiom.

use thiserror::Error;

/// A point of the outcome set: a label index or a real in `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Label(usize),
    Real(f64),
}

impl Outcome {
    /// Bit-level equality, usable as a hash/dedup key.
    pub fn key(&self) -> (u8, u64) {
        match self {
            Outcome::Label(k) => (0, *k as u64),
            Outcome::Real(v) => (1, v.to_bits()),
        }
    }
}

/// Explicit metric on a finite point set, stored row-major.
///
/// Construction only checks the shape; the metric axioms are data to be
/// checked by [`validate_metric`], not construction-time errors.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    points: usize,
    entries: Vec<f64>,
}

impl MetricTable {
    pub fn new(points: usize, entries: Vec<f64>) -> Result<Self, LossError> {
        if points == 0 || entries.len() != points * points {
            return Err(LossError::BadTableShape {
                points,
                entries: entries.len(),
            });
        }
        Ok(Self { points, entries })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn entry(&self, a: usize, b: usize) -> f64 {
        self.entries[a * self.points + b]
    }
}

/// The response space together with its loss.
///
/// The diameter bound is 1 for every kind; tables that break it are
/// reported by [`validate_metric`] rather than rejected up front.
#[derive(Debug, Clone, PartialEq)]
pub enum OutcomeSpace {
    /// Labels {0,1} with 0-1 loss.
    Binary,
    /// Reals in [0,1] with absolute loss.
    Interval,
    /// Labels {0,..,labels-1} with 0-1 loss.
    Discrete { labels: usize },
    /// Finite point set with an explicit metric matrix.
    Table(MetricTable),
}

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("outcome {outcome:?} outside the carrier of {space} space")]
    OutsideCarrier { space: &'static str, outcome: Outcome },
    #[error("metric table needs points^2 entries, got {entries} for {points} points")]
    BadTableShape { points: usize, entries: usize },
}

impl OutcomeSpace {
    fn name(&self) -> &'static str {
        match self {
            OutcomeSpace::Binary => "binary",
            OutcomeSpace::Interval => "interval",
            OutcomeSpace::Discrete { .. } => "discrete",
            OutcomeSpace::Table(_) => "custom-table",
        }
    }

    /// Number of labels for label-carrier kinds, `None` for the interval.
    pub fn label_count(&self) -> Option<usize> {
        match self {
            OutcomeSpace::Binary => Some(2),
            OutcomeSpace::Discrete { labels } => Some(*labels),
            OutcomeSpace::Table(t) => Some(t.points()),
            OutcomeSpace::Interval => None,
        }
    }

    /// Checks that `y` lies in this space's carrier set.
    pub fn contains(&self, y: &Outcome) -> bool {
        match (self, y) {
            (OutcomeSpace::Binary, Outcome::Label(k)) => *k < 2,
            (OutcomeSpace::Discrete { labels }, Outcome::Label(k)) => k < labels,
            (OutcomeSpace::Table(t), Outcome::Label(k)) => *k < t.points(),
            (OutcomeSpace::Interval, Outcome::Real(v)) => (0.0..=1.0).contains(v),
            _ => false,
        }
    }

    /// The metric loss `ℓ(a, b)`, in `[0,1]` for valid tables.
    pub fn loss(&self, a: &Outcome, b: &Outcome) -> Result<f64, LossError> {
        let reject = |y: &Outcome| LossError::OutsideCarrier {
            space: self.name(),
            outcome: *y,
        };
        if !self.contains(a) {
            return Err(reject(a));
        }
        if !self.contains(b) {
            return Err(reject(b));
        }
        Ok(match (self, a, b) {
            (OutcomeSpace::Binary | OutcomeSpace::Discrete { .. }, Outcome::Label(i), Outcome::Label(j)) => {
                if i == j {
                    0.0
                } else {
                    1.0
                }
            }
            (OutcomeSpace::Interval, Outcome::Real(u), Outcome::Real(v)) => (u - v).abs(),
            (OutcomeSpace::Table(t), Outcome::Label(i), Outcome::Label(j)) => t.entry(*i, *j),
            _ => unreachable!("contains() admitted a mismatched variant"),
        })
    }
}

/// One failed metric axiom with its witnessing outcomes.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricViolation {
    /// ℓ(a,a) ≠ 0, or ℓ(a,b) = 0 with a ≠ b for table spaces.
    Identity { a: Outcome, b: Outcome, value: f64 },
    /// ℓ(a,b) ≠ ℓ(b,a).
    Symmetry { a: Outcome, b: Outcome, forward: f64, backward: f64 },
    /// ℓ(a,c) > ℓ(a,b) + ℓ(b,c).
    Triangle { a: Outcome, b: Outcome, c: Outcome, direct: f64, via: f64 },
    /// ℓ(a,b) outside [0,1].
    Bound { a: Outcome, b: Outcome, value: f64 },
}

/// Axiom-check report; empty means no violation was found on the sample.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub violations: Vec<MetricViolation>,
}

impl MetricReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks identity, symmetry, triangle and the unit bound on every pair and
/// triple drawn from `sample`. Violations are data, not errors; outcomes
/// outside the carrier are skipped.
pub fn validate_metric(space: &OutcomeSpace, sample: &[Outcome]) -> MetricReport {
    let mut report = MetricReport::default();
    let pts: Vec<&Outcome> = sample.iter().filter(|y| space.contains(y)).collect();
    let l = |a: &Outcome, b: &Outcome| space.loss(a, b).expect("carrier-checked");

    for &a in &pts {
        let v = l(a, a);
        if v != 0.0 {
            report.violations.push(MetricViolation::Identity { a: *a, b: *a, value: v });
        }
    }
    for &a in &pts {
        for &b in &pts {
            let fwd = l(a, b);
            if !(0.0..=1.0).contains(&fwd) {
                report.violations.push(MetricViolation::Bound { a: *a, b: *b, value: fwd });
            }
            if a.key() != b.key() {
                if fwd == 0.0 {
                    report.violations.push(MetricViolation::Identity { a: *a, b: *b, value: fwd });
                }
                let bwd = l(b, a);
                if fwd != bwd {
                    report.violations.push(MetricViolation::Symmetry {
                        a: *a,
                        b: *b,
                        forward: fwd,
                        backward: bwd,
                    });
                }
            }
        }
    }
    for &a in &pts {
        for &b in &pts {
            for &c in &pts {
                let direct = l(a, c);
                let via = l(a, b) + l(b, c);
                if direct > via {
                    report.violations.push(MetricViolation::Triangle {
                        a: *a,
                        b: *b,
                        c: *c,
                        direct,
                        via,
                    });
                }
            }
        }
    }
    report
}
