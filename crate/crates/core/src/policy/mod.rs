//! Admission policies driven by arrival-time observations.

pub mod mle;
pub mod schedule;

use crate::error::Result;
use crate::model::ArrivalRecord;

pub use mle::{g, h, MlePolicy, PolicyState, Variant};
pub use schedule::{f_eval, ExplorationSchedule};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    /// The system as seen by a new arrival.
    Arrival(ArrivalRecord),
    /// An intermediate sample between arrivals (fixed-duration variant).
    Sample(ArrivalRecord),
}

impl Observation {
    pub fn record(&self) -> &ArrivalRecord {
        match self {
            Observation::Arrival(r) | Observation::Sample(r) => r,
        }
    }
}

/// A dispatcher that sees the system only through observation records.
///
/// The harness calls `decide` at every arrival (starting with arrival 0 on an
/// empty system), applies the action, then feeds the observations leading up
/// to the next arrival.
pub trait AdmissionPolicy: Send {
    fn observe(&mut self, obs: Observation) -> Result<()>;

    /// Returns 1 to admit, 0 to block. Must return 0 when `busy >= servers`.
    fn decide(&mut self, busy: u32, servers: u32) -> u8;

    /// Service time of the job just admitted. Only baselines granted that
    /// (fictitious) information use it.
    fn reveal_service(&mut self, _service: f64) {}

    fn name(&self) -> &'static str;
}
