//! Continuous-time M/M/k/k trajectory sampled at arrivals.
//!
//! Two interchangeable modes:
//! - [`SimMode::Event`] keeps one absolute completion time per busy server.
//!   Required for coupling and for revealing service times.
//! - [`SimMode::Thinning`] keeps only the busy count and draws the departures
//!   of an interval as `Binomial(N, 1 - exp(-mu T))`, exact by memorylessness.

use std::str::FromStr;

use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::model::{ArrivalRecord, ModelParams};
use crate::streams::{RandomStreams, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    Event,
    Thinning,
}

impl FromStr for SimMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "event" => Ok(SimMode::Event),
            "thinning" => Ok(SimMode::Thinning),
            other => Err(Error::Config(format!(
                "unknown sim mode '{other}' (expected event|thinning)"
            ))),
        }
    }
}

/// A job in service: the arrival ordinal that brought it and its absolute
/// completion time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub id: u64,
    pub completion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub record: ArrivalRecord,
    pub system_empty: bool,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    params: ModelParams,
    mode: SimMode,
    streams: RandomStreams,
    arrival_rng: StreamRng,
    inter_arrival: Exp<f64>,
    now: f64,
    arrival_index: u64,
    // Event mode: sorted by completion time, smallest first.
    jobs: Vec<Job>,
    // Thinning mode busy count. Unused in event mode.
    count: u32,
    admitted_current: bool,
}

impl Simulator {
    /// Empty system at time 0, positioned at arrival 0.
    pub fn new(params: ModelParams, mode: SimMode, streams: RandomStreams) -> Self {
        Self {
            params,
            mode,
            streams,
            arrival_rng: streams.arrivals(),
            inter_arrival: Exp::new(params.lambda()).expect("validated"),
            now: 0.0,
            arrival_index: 0,
            jobs: Vec::with_capacity(params.servers() as usize),
            count: 0,
            admitted_current: false,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn mode(&self) -> SimMode {
        self.mode
    }

    pub fn streams(&self) -> &RandomStreams {
        &self.streams
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Ordinal of the arrival the system is currently positioned at.
    pub fn arrival_index(&self) -> u64 {
        self.arrival_index
    }

    pub fn busy(&self) -> u32 {
        match self.mode {
            SimMode::Event => self.jobs.len() as u32,
            SimMode::Thinning => self.count,
        }
    }

    pub fn is_full(&self) -> bool {
        self.busy() >= self.params.servers()
    }

    /// Jobs in service (event mode; empty in thinning mode).
    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    /// Admits the current arrival. Returns the service duration in event
    /// mode; thinning mode has no per-job service time.
    pub fn admit_job(&mut self) -> Result<Option<f64>> {
        self.check_can_admit()?;
        match self.mode {
            SimMode::Event => {
                let service = self
                    .streams
                    .service_time(self.arrival_index, self.params.mu());
                self.insert_job(Job {
                    id: self.arrival_index,
                    completion: self.now + service,
                });
                Ok(Some(service))
            }
            SimMode::Thinning => {
                self.count += 1;
                self.admitted_current = true;
                Ok(None)
            }
        }
    }

    fn check_can_admit(&self) -> Result<()> {
        if self.admitted_current {
            return Err(Error::Domain(format!(
                "arrival {} already admitted",
                self.arrival_index
            )));
        }
        if self.is_full() {
            return Err(Error::SystemFull(self.params.servers()));
        }
        Ok(())
    }

    fn insert_job(&mut self, job: Job) {
        let pos = self.jobs.partition_point(|j| j.completion <= job.completion);
        self.jobs.insert(pos, job);
        self.admitted_current = true;
    }

    fn check_action(&self, prev_action: u8) -> Result<()> {
        let actual = u8::from(self.admitted_current);
        if prev_action != actual {
            return Err(Error::ActionMismatch {
                recorded: prev_action,
                actual,
            });
        }
        Ok(())
    }

    /// Removes the jobs finishing by `until` (event mode) or thins the busy
    /// count over an interval of length `dt` (thinning mode).
    fn depart(&mut self, until: f64, dt: f64, sub: u64) -> u32 {
        match self.mode {
            SimMode::Event => {
                let done = self.jobs.partition_point(|j| j.completion <= until);
                self.jobs.drain(..done);
                done as u32
            }
            SimMode::Thinning => {
                let p = -(-self.params.mu() * dt).exp_m1();
                let m = self.streams.thinned_departures(
                    self.arrival_index + 1,
                    sub,
                    self.count,
                    p,
                );
                self.count -= m;
                m
            }
        }
    }

    fn finish_step(&mut self, inter_arrival: f64, prev_action: u8, departures: u32) -> StepOutcome {
        self.arrival_index += 1;
        self.admitted_current = false;
        let busy = self.busy();
        StepOutcome {
            record: ArrivalRecord {
                index: self.arrival_index,
                inter_arrival,
                busy_before: busy,
                prev_action,
                departures,
            },
            system_empty: busy == 0,
        }
    }

    /// Moves to the next arrival and returns its observation record.
    ///
    /// `prev_action` must match whether the current arrival was admitted.
    pub fn advance_to_next_arrival(&mut self, prev_action: u8) -> Result<StepOutcome> {
        self.check_action(prev_action)?;
        let t = self.inter_arrival.sample(&mut self.arrival_rng);
        let end = self.now + t;
        let m = self.depart(end, t, 0);
        self.now = end;
        Ok(self.finish_step(t, prev_action, m))
    }

    /// Moves to the next arrival, emitting an observation every `d` time
    /// units while no arrival has occurred. Each record covers the interval
    /// since the previous observation. `d = +inf` is plain arrival sampling.
    pub fn advance_with_sampling(
        &mut self,
        d: f64,
        prev_action: u8,
    ) -> Result<(Vec<ArrivalRecord>, StepOutcome)> {
        if d.is_nan() || d <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "sampling interval must be > 0 (got {d})"
            )));
        }
        self.check_action(prev_action)?;
        let t = self.inter_arrival.sample(&mut self.arrival_rng);
        let start = self.now;
        let end = start + t;
        let mut samples = Vec::new();
        let mut last = start;
        let mut action = prev_action;
        let mut j = 1u64;
        while d.is_finite() {
            let at = start + j as f64 * d;
            if at >= end {
                break;
            }
            let m = self.depart(at, at - last, j - 1);
            samples.push(ArrivalRecord {
                index: self.arrival_index + 1,
                inter_arrival: at - last,
                busy_before: self.busy(),
                prev_action: action,
                departures: m,
            });
            action = 0;
            last = at;
            j += 1;
        }
        let tail = if samples.is_empty() { t } else { end - last };
        let m = self.depart(end, tail, j - 1);
        self.now = end;
        let outcome = self.finish_step(tail, action, m);
        Ok((samples, outcome))
    }

    /// Admit (if asked) and advance in one call.
    pub fn step(&mut self, admit: bool) -> Result<StepOutcome> {
        if admit {
            self.admit_job()?;
        }
        self.advance_to_next_arrival(u8::from(admit))
    }
}

/// Two systems driven by the same arrival epochs and service randomness.
///
/// When both admit an arrival they receive the identical keyed service draw.
/// When only one admits while the other is full, the admitting system takes
/// over the residual service of the lowest-id job it does not already share
/// with the full system (memorylessness keeps the law exact); otherwise it
/// uses its own keyed draw. Under this rule the job set of any policy stays a
/// subset of the always-admit-if-room system's job set.
#[derive(Debug, Clone)]
pub struct CoupledPair {
    pub a: Simulator,
    pub b: Simulator,
}

/// Builds a coupled pair, checking both systems share parameters and streams.
pub fn couple_systems(a: Simulator, b: Simulator) -> Result<CoupledPair> {
    if a.params != b.params {
        return Err(Error::Coupling("mismatched parameters".into()));
    }
    if a.streams != b.streams {
        return Err(Error::Coupling("systems must share the random streams".into()));
    }
    if a.mode != SimMode::Event || b.mode != SimMode::Event {
        return Err(Error::Coupling("coupling requires event mode".into()));
    }
    if a.arrival_index != b.arrival_index || a.now != b.now {
        return Err(Error::Coupling("systems are not at the same arrival".into()));
    }
    Ok(CoupledPair { a, b })
}

impl CoupledPair {
    /// Applies the admission decisions for the current arrival. Returns the
    /// service duration assigned on each side that admitted.
    pub fn admit(&mut self, admit_a: bool, admit_b: bool) -> Result<(Option<f64>, Option<f64>)> {
        let sa = if admit_a {
            Some(admit_coupled(&mut self.a, &self.b, admit_b)?)
        } else {
            None
        };
        let sb = if admit_b {
            Some(admit_coupled(&mut self.b, &self.a, admit_a)?)
        } else {
            None
        };
        Ok((sa, sb))
    }

    /// Advances both systems to the next arrival.
    pub fn advance(&mut self, prev_a: u8, prev_b: u8) -> Result<(StepOutcome, StepOutcome)> {
        let oa = self.a.advance_to_next_arrival(prev_a)?;
        let ob = self.b.advance_to_next_arrival(prev_b)?;
        debug_assert_eq!(oa.record.inter_arrival, ob.record.inter_arrival);
        Ok((oa, ob))
    }
}

fn admit_coupled(sys: &mut Simulator, other: &Simulator, other_admits: bool) -> Result<f64> {
    sys.check_can_admit()?;
    if !other_admits && other.is_full() {
        let borrowed = other
            .jobs
            .iter()
            .filter(|j| !sys.jobs.iter().any(|own| own.id == j.id))
            .min_by_key(|j| j.id)
            .copied();
        if let Some(job) = borrowed {
            let service = job.completion - sys.now;
            sys.insert_job(job);
            return Ok(service);
        }
    }
    Ok(sys.admit_job()?.expect("event mode"))
}
