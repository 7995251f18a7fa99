//! Learning-based admission control for Erlang-B (M/M/k/k) loss systems
//! whose service rate is unknown to the dispatcher.
//!
//! - [`model`]: parameters and observation records.
//! - [`streams`]: seeded, independently advanceable random streams.
//! - [`sim`]: arrival-sampled simulator (event and thinning modes) and coupling.
//! - [`policy`]: the likelihood-comparison dispatcher and exploration schedules.
//! - [`general`]: explicit MLE, threshold policies, general-reward learning loop.
//! - [`baselines`]: Thompson sampling, R-learning, static policies.
//! - [`oracles`]: closed-form drift quantities and Erlang-B.
//! - [`harness`]: coupled regret measurement, sweeps, CSV and config I/O.

pub mod baselines;
pub mod error;
pub mod general;
pub mod harness;
pub mod model;
pub mod oracles;
pub mod policy;
pub mod sim;
pub mod streams;

pub use error::{Error, Result};
pub use model::{validate_params, ArrivalRecord, ModelParams};
pub use sim::{couple_systems, CoupledPair, SimMode, Simulator, StepOutcome};
pub use streams::RandomStreams;
