//! Online learning by blockwise Hedge over a countably infinite expert family,
//! plus the laboratory needed to check its guarantees at desk scale.
//!
//! The library has three layers:
//!
//! - **Learner**: [`loss`] defines bounded metric outcome spaces, [`hedge`]
//!   the fixed-horizon exponentially weighted forecaster, [`schedule`] the
//!   growing-block time partition, and [`epoch`] the blockwise learner that
//!   runs a fresh Hedge instance over the first `j` experts inside block `j`.
//! - **Expert family**: [`experts`] enumerates a countable family of dyadic
//!   histogram functions on `[0,1]^d` and profiles how well its prefixes
//!   approximate a comparator on observed inputs.
//! - **Lab**: [`process`] generates stationary, non-ergodic, drifting and
//!   adversarial input/response streams and estimates long-run frequency
//!   functionals; [`experiment`] wires everything into seeded, reproducible
//!   experiments with CSV artifacts ([`report`]) driven by plain-text
//!   configs ([`config`]).

pub mod config;
pub mod epoch;
pub mod experiment;
pub mod experts;
pub mod hedge;
pub mod loss;
pub mod process;
pub mod report;
pub mod schedule;

pub use config::ExperimentConfig;
pub use epoch::{EpochHedge, RunRecord};
pub use experts::DyadicFamily;
pub use loss::{Outcome, OutcomeSpace};
pub use process::ProcessSpec;
