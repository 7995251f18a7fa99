//! Comparison policies: two-point Thompson sampling, tabular R-learning with
//! revealed service times, and static policies.

use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{ArrivalRecord, ModelParams};
use crate::policy::{AdmissionPolicy, Observation};
use crate::streams::StreamRng;

/// Posterior over the support `{c/(2R), 3c/(2R)}`, kept as log-weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointPosterior {
    pub support: [f64; 2],
    pub log_weights: [f64; 2],
}

impl TwoPointPosterior {
    /// Uniform prior on the two-point support around `theta = c/R`.
    pub fn new(theta: f64) -> Self {
        Self {
            support: [0.5 * theta, 1.5 * theta],
            log_weights: [0.5f64.ln(); 2],
        }
    }

    pub fn weights(&self) -> [f64; 2] {
        [self.log_weights[0].exp(), self.log_weights[1].exp()]
    }

    /// Log-likelihood of one record at rate `mu` (binomial constant dropped).
    pub fn record_log_likelihood(r: &ArrivalRecord, mu: f64) -> f64 {
        let x = mu * r.inter_arrival;
        let departed = if r.departures == 0 {
            0.0
        } else {
            f64::from(r.departures) * (-(-x).exp_m1()).ln()
        };
        departed - x * f64::from(r.busy_before)
    }
}

pub fn thompson_update(post: &mut TwoPointPosterior, record: &ArrivalRecord) {
    for j in 0..2 {
        post.log_weights[j] += TwoPointPosterior::record_log_likelihood(record, post.support[j]);
    }
    let top = post.log_weights[0].max(post.log_weights[1]);
    let lse = top
        + ((post.log_weights[0] - top).exp() + (post.log_weights[1] - top).exp()).ln();
    for w in &mut post.log_weights {
        *w -= lse;
    }
}

/// Samples a rate from the posterior with `coin` and admits (if room) when the
/// sampled rate exceeds `theta`.
pub fn thompson_decide(post: &TwoPointPosterior, theta: f64, busy: u32, servers: u32, coin: f64) -> u8 {
    if busy >= servers {
        return 0;
    }
    let sampled = if coin < post.weights()[1] {
        post.support[1]
    } else {
        post.support[0]
    };
    u8::from(sampled > theta)
}

#[derive(Debug, Clone)]
pub struct ThompsonPolicy {
    posterior: TwoPointPosterior,
    theta: f64,
    rng: StreamRng,
}

impl ThompsonPolicy {
    pub fn new(theta: f64, rng: StreamRng) -> Self {
        Self {
            posterior: TwoPointPosterior::new(theta),
            theta,
            rng,
        }
    }

    pub fn posterior(&self) -> &TwoPointPosterior {
        &self.posterior
    }
}

impl AdmissionPolicy for ThompsonPolicy {
    fn observe(&mut self, obs: Observation) -> Result<()> {
        thompson_update(&mut self.posterior, obs.record());
        Ok(())
    }

    fn decide(&mut self, busy: u32, servers: u32) -> u8 {
        if busy >= servers {
            return 0;
        }
        let coin: f64 = self.rng.gen();
        thompson_decide(&self.posterior, self.theta, busy, servers, coin)
    }

    fn name(&self) -> &'static str {
        "thompson"
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RLearningConfig {
    pub step_q: f64,
    pub step_rho: f64,
    /// Initial exploration rate; decays as `epsilon / sqrt(t)`.
    pub epsilon: f64,
}

impl Default for RLearningConfig {
    fn default() -> Self {
        Self {
            step_q: 0.05,
            step_rho: 0.01,
            epsilon: 0.1,
        }
    }
}

/// Tabular average-reward Q-values over busy count `0..=k` and action.
#[derive(Debug, Clone, PartialEq)]
pub struct RLearningState {
    pub q: Vec<[f64; 2]>,
    pub rho: f64,
    pub config: RLearningConfig,
}

impl RLearningState {
    pub fn new(servers: u32, config: RLearningConfig) -> Self {
        Self {
            q: vec![[0.0; 2]; servers as usize + 1],
            rho: 0.0,
            config,
        }
    }

    fn servers(&self) -> u32 {
        (self.q.len() - 1) as u32
    }

    /// Max over feasible actions (blocking only at `k`).
    pub fn max_q(&self, s: u32) -> f64 {
        let row = self.q[s as usize];
        if s == self.servers() {
            row[0]
        } else {
            row[0].max(row[1])
        }
    }

    /// Greedy action; ties block.
    pub fn greedy(&self, s: u32) -> u8 {
        let row = self.q[s as usize];
        u8::from(s < self.servers() && row[1] > row[0])
    }

    /// One R-learning update. `rho` moves only on greedy steps.
    pub fn step(&mut self, s: u32, a: u8, reward: f64, s_next: u32, greedy: bool) -> Result<()> {
        if a == 1 && s >= self.servers() {
            return Err(Error::Domain("admission in a full state".into()));
        }
        let next = self.max_q(s_next);
        let q = &mut self.q[s as usize][a as usize];
        *q += self.config.step_q * (reward - self.rho + next - *q);
        if greedy {
            let here = self.max_q(s);
            self.rho += self.config.step_rho * (reward + next - here - self.rho);
        }
        Ok(())
    }
}

/// Free-function form of [`RLearningState::step`].
pub fn rlearning_step(
    state: &mut RLearningState,
    s: u32,
    a: u8,
    observed_reward: f64,
    s_next: u32,
    greedy: bool,
) -> Result<()> {
    state.step(s, a, observed_reward, s_next, greedy)
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    state: u32,
    action: u8,
    greedy: bool,
    reward: Option<f64>,
}

/// R-learning on the arrival-sampled chain; the reward of an admission is
/// `R - c * service` with the service time revealed on admission.
#[derive(Debug, Clone)]
pub struct RLearningPolicy {
    table: RLearningState,
    reward: f64,
    cost: f64,
    steps: u64,
    pending: Option<Pending>,
    rng: StreamRng,
}

impl RLearningPolicy {
    pub fn new(params: &ModelParams, config: RLearningConfig, rng: StreamRng) -> Self {
        Self {
            table: RLearningState::new(params.servers(), config),
            reward: params.reward(),
            cost: params.cost(),
            steps: 0,
            pending: None,
            rng,
        }
    }

    pub fn with_table(mut self, table: RLearningState) -> Self {
        self.table = table;
        self
    }

    pub fn table(&self) -> &RLearningState {
        &self.table
    }
}

impl AdmissionPolicy for RLearningPolicy {
    fn observe(&mut self, obs: Observation) -> Result<()> {
        let Observation::Arrival(r) = obs else {
            return Ok(());
        };
        if let Some(p) = self.pending.take() {
            let reward = match (p.action, p.reward) {
                (0, _) => 0.0,
                (_, Some(v)) => v,
                (_, None) => {
                    return Err(Error::Domain(
                        "R-learning needs revealed service times (use event mode)".into(),
                    ))
                }
            };
            self.table.step(p.state, p.action, reward, r.busy_before, p.greedy)?;
        }
        Ok(())
    }

    fn decide(&mut self, busy: u32, servers: u32) -> u8 {
        self.steps += 1;
        let greedy_action = self.table.greedy(busy);
        let eps = self.table.config.epsilon / (self.steps as f64).sqrt();
        let explore = busy < servers && self.rng.gen::<f64>() < eps;
        let action = if explore {
            u8::from(self.rng.gen::<bool>())
        } else {
            greedy_action
        };
        self.pending = Some(Pending {
            state: busy,
            action,
            greedy: action == greedy_action,
            reward: None,
        });
        action
    }

    fn reveal_service(&mut self, service: f64) {
        if let Some(p) = self.pending.as_mut() {
            p.reward = Some(self.reward - self.cost * service);
        }
    }

    fn name(&self) -> &'static str {
        "rlearning"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StaticKind {
    /// Admit if room iff the true `mu > c/R`.
    Oracle,
    AlwaysAdmit,
    NeverAdmit,
}

impl FromStr for StaticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(StaticKind::Oracle),
            "always-admit" => Ok(StaticKind::AlwaysAdmit),
            "never-admit" => Ok(StaticKind::NeverAdmit),
            other => Err(Error::Config(format!("unknown static policy '{other}'"))),
        }
    }
}

pub fn static_policy(kind: StaticKind, params: &ModelParams, busy: u32) -> u8 {
    let room = busy < params.servers();
    match kind {
        StaticKind::Oracle => u8::from(room && params.admitting_is_optimal()),
        StaticKind::AlwaysAdmit => u8::from(room),
        StaticKind::NeverAdmit => 0,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StaticPolicy {
    pub kind: StaticKind,
    params: ModelParams,
}

impl StaticPolicy {
    pub fn new(kind: StaticKind, params: ModelParams) -> Self {
        Self { kind, params }
    }
}

impl AdmissionPolicy for StaticPolicy {
    fn observe(&mut self, _obs: Observation) -> Result<()> {
        Ok(())
    }

    fn decide(&mut self, busy: u32, _servers: u32) -> u8 {
        static_policy(self.kind, &self.params, busy)
    }

    fn name(&self) -> &'static str {
        match self.kind {
            StaticKind::Oracle => "oracle",
            StaticKind::AlwaysAdmit => "always-admit",
            StaticKind::NeverAdmit => "never-admit",
        }
    }
}
