//! The likelihood-comparison dispatcher.
//!
//! The sign of `mu_hat - c/R` equals the sign of `sum g(T, M, c/R) - sum h(T, N)`
//! because the `g` sum is strictly decreasing in the rate while the `h` sum
//! does not depend on it. The policy therefore never solves for `mu_hat`; it
//! keeps the two running sums at the reference rate `c/R`.

use crate::error::{Error, Result};
use crate::model::ArrivalRecord;
use crate::policy::schedule::ExplorationSchedule;
use crate::policy::{AdmissionPolicy, Observation};
use crate::streams::StreamRng;
use rand::Rng;

/// Below this value of `mu * t` the closed form of `g` is replaced by its
/// Laurent expansion.
const SMALL_RATE_TIME: f64 = 1e-8;

pub(crate) fn g_raw(t: f64, m: u32, mu: f64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let x = mu * t;
    let per_departure = if x < SMALL_RATE_TIME {
        t * (1.0 / x - 0.5 + x / 12.0)
    } else {
        t / x.exp_m1()
    };
    f64::from(m) * per_departure
}

/// `g(t, m, mu) = m t e^{-mu t} / (1 - e^{-mu t})`.
pub fn g(t: f64, m: u32, mu: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) || mu.is_nan() || mu <= 0.0 {
        return Err(Error::Domain(format!("g requires t > 0 and mu > 0 (t={t}, mu={mu})")));
    }
    Ok(g_raw(t, m, mu))
}

/// `h(t, n, mu) = n t`; the rate argument is ignored.
pub fn h(t: f64, n: u32, _mu: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("h requires t > 0 (t={t})")));
    }
    Ok(f64::from(n) * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Decide from the sums frozen at the last arrival that found the system empty.
    Alg1,
    /// Decide from the live sums at every arrival.
    Alg2,
}

/// Running sufficient statistics of the dispatcher.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    theta: f64,
    pub sum_g: f64,
    pub sum_h: f64,
    pub alpha: u64,
    pub snapshot_g: f64,
    pub snapshot_h: f64,
    /// `X` at the most recent acceptance that found the system empty.
    pub last_diff_at_acceptance: Option<f64>,
    arrivals_seen: u64,
    last_arrival_busy: u32,
    le_at_last_arrival: bool,
    admitted_last_arrival: bool,
    live_diff_before_samples: f64,
    acceptance_diffs: Option<Vec<f64>>,
}

impl PolicyState {
    /// Fresh state at arrival 0 (`N_0 = 0`, `alpha_0 = 0`, empty sums).
    pub fn new(theta: f64) -> Self {
        Self {
            theta,
            sum_g: 0.0,
            sum_h: 0.0,
            alpha: 0,
            snapshot_g: 0.0,
            snapshot_h: 0.0,
            last_diff_at_acceptance: None,
            arrivals_seen: 0,
            last_arrival_busy: 0,
            le_at_last_arrival: true,
            admitted_last_arrival: false,
            live_diff_before_samples: 0.0,
            acceptance_diffs: None,
        }
    }

    /// Keep every `Y_n` (sum difference at empty-system acceptances).
    pub fn track_acceptance_diffs(mut self) -> Self {
        self.acceptance_diffs = Some(Vec::new());
        self
    }

    pub fn acceptance_diffs(&self) -> Option<&[f64]> {
        self.acceptance_diffs.as_deref()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Number of arrival records consumed (the current arrival ordinal).
    pub fn arrivals_seen(&self) -> u64 {
        self.arrivals_seen
    }

    /// `X_n = sum g - sum h` over everything observed so far.
    pub fn live_diff(&self) -> f64 {
        self.sum_g - self.sum_h
    }

    fn accumulate(&mut self, r: &ArrivalRecord, variant: Variant) {
        self.sum_g += g_raw(r.inter_arrival, r.departures, self.theta);
        self.sum_h += f64::from(r.busy_before) * r.inter_arrival;
        if variant == Variant::Alg2 || r.busy_before == 0 {
            self.snapshot_g = self.sum_g;
            self.snapshot_h = self.sum_h;
        }
    }

    fn check_record(&self, r: &ArrivalRecord) -> Result<()> {
        let expected = self.arrivals_seen + 1;
        if r.index != expected {
            return Err(Error::OutOfOrder {
                expected,
                got: r.index,
            });
        }
        if !(r.inter_arrival > 0.0 && r.inter_arrival.is_finite()) {
            return Err(Error::Domain(format!(
                "record {}: inter-arrival time must be > 0",
                r.index
            )));
        }
        Ok(())
    }

    /// Consumes the record of the next arrival.
    ///
    /// `alpha` advances when the previous arrival was admitted from the
    /// exploration branch: the live sums then satisfied `sum g <= sum h`, and
    /// (Alg1 only) the system was empty.
    pub fn update(&mut self, record: &ArrivalRecord, variant: Variant) -> Result<()> {
        self.check_record(record)?;
        let admitted = self.admitted_last_arrival || record.prev_action == 1;
        if admitted && self.last_arrival_busy == 0 {
            let y = self.live_diff_before_samples;
            self.last_diff_at_acceptance = Some(y);
            if let Some(trace) = self.acceptance_diffs.as_mut() {
                trace.push(y);
            }
        }
        let empty_clause = variant == Variant::Alg2 || self.last_arrival_busy == 0;
        if admitted && self.le_at_last_arrival && empty_clause {
            self.alpha += 1;
        }
        self.accumulate(record, variant);
        self.arrivals_seen += 1;
        self.last_arrival_busy = record.busy_before;
        self.le_at_last_arrival = self.sum_g <= self.sum_h;
        self.live_diff_before_samples = self.live_diff();
        self.admitted_last_arrival = false;
        Ok(())
    }

    /// Consumes an intermediate (non-arrival) sample. Sums and snapshots are
    /// refreshed; `alpha` never moves on a sample.
    pub fn update_sample(&mut self, record: &ArrivalRecord, variant: Variant) -> Result<()> {
        self.check_record(record)?;
        if record.prev_action == 1 {
            self.admitted_last_arrival = true;
        }
        self.accumulate(record, variant);
        Ok(())
    }

    /// Sums the decision is based on: the snapshot at `S(n)`.
    pub fn decision_sums(&self) -> (f64, f64) {
        (self.snapshot_g, self.snapshot_h)
    }

    /// Admission decision given a uniform `coin` in `[0, 1)`.
    pub fn decide(&self, busy: u32, servers: u32, schedule: &ExplorationSchedule, coin: f64) -> u8 {
        if busy >= servers {
            return 0;
        }
        if self.snapshot_g > self.snapshot_h {
            return 1;
        }
        u8::from(coin < schedule.admit_probability(self.alpha))
    }
}

/// The dispatcher as a runnable policy.
#[derive(Debug, Clone)]
pub struct MlePolicy {
    state: PolicyState,
    variant: Variant,
    schedule: ExplorationSchedule,
    coins: StreamRng,
}

impl MlePolicy {
    pub fn new(theta: f64, variant: Variant, schedule: ExplorationSchedule, coins: StreamRng) -> Self {
        Self {
            state: PolicyState::new(theta),
            variant,
            schedule,
            coins,
        }
    }

    pub fn with_state(mut self, state: PolicyState) -> Self {
        self.state = state;
        self
    }

    pub fn state(&self) -> &PolicyState {
        &self.state
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }
}

impl AdmissionPolicy for MlePolicy {
    fn observe(&mut self, obs: Observation) -> Result<()> {
        match obs {
            Observation::Arrival(r) => self.state.update(&r, self.variant),
            Observation::Sample(r) => self.state.update_sample(&r, self.variant),
        }
    }

    fn decide(&mut self, busy: u32, servers: u32) -> u8 {
        if busy >= servers {
            return 0;
        }
        // The coin is drawn only in the exploration branch so the stream
        // advances identically for both variants when they agree.
        if self.state.snapshot_g > self.state.snapshot_h {
            return 1;
        }
        let coin: f64 = self.coins.gen();
        self.state.decide(busy, servers, &self.schedule, coin)
    }

    fn name(&self) -> &'static str {
        match self.variant {
            Variant::Alg1 => "alg1",
            Variant::Alg2 => "alg2",
        }
    }
}
