//! Online stochastic matching with timeouts.
//!
//! The crate builds the benchmark LP for an instance, rounds per-arrival star
//! solutions with dependent rounding, probes them with a black box, and wraps
//! the black box in the three attenuation frameworks (edge attenuation, vertex
//! attenuation, and both combined). Attenuation factors are calibrated by
//! simulation. Exact oracles (an optimal online DP and an enumeration of star
//! probe probabilities) and an experiment harness sit on top for validation.
//!
//! Module map:
//! - [`instance`]: instance data model, validation, generators, JSON format.
//! - [`lp`]: benchmark LP, dense simplex, star induction.
//! - [`rounding`]: dependent rounding on stars.
//! - [`blackbox`]: probing strategies on a star (`BB_UR`).
//! - [`calibration`]: target schedules and simulation-based vertex attenuation.
//! - [`frameworks`]: the online algorithms and their analytic ratios.
//! - [`oracle`]: brute-force baselines for tiny inputs.
//! - [`harness`]: experiments, reports and CSV sweeps.

pub mod blackbox;
pub mod calibration;
mod error;
pub mod frameworks;
pub mod harness;
pub mod instance;
pub mod lp;
pub mod oracle;
pub mod rng;
pub mod rounding;
pub mod stats;

pub use blackbox::{BlackBox, BlackBoxProfile, ProbeOutcome, UniformRandom};
pub use calibration::{AttenuationTable, Framework, Schedule};
pub use error::{Error, Result};
pub use frameworks::{RunOptions, Simulator, TrialRecord};
pub use harness::{ExperimentConfig, ExperimentReport};
pub use instance::{EdgeId, Graph, Instance, StarEdge, StarProblem, Violation};
pub use lp::LpSolution;
pub use rng::SimRng;
