//! Regret measurement: each replication runs the candidate policy coupled
//! with the full-information optimal policy on shared arrival and service
//! randomness and records the cumulative action difference at checkpoints.

pub mod config;
pub mod io;

use std::str::FromStr;

use rayon::prelude::*;

use crate::baselines::{
    static_policy, RLearningConfig, RLearningPolicy, StaticKind, StaticPolicy, ThompsonPolicy,
};
use crate::error::{Error, Result};
use crate::model::{ArrivalRecord, ModelParams};
use crate::policy::{AdmissionPolicy, ExplorationSchedule, MlePolicy, Observation, Variant};
use crate::sim::{couple_systems, SimMode, Simulator};
use crate::streams::{hash_words, RandomStreams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    Alg1,
    Alg2,
    /// Alg1 with extra observations every `d` time units between arrivals.
    Sampled(f64),
    ThompsonTwoPoint,
    RLearning(RLearningConfig),
    Oracle,
    AlwaysAdmit,
    NeverAdmit,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Alg1 => "alg1",
            PolicyKind::Alg2 => "alg2",
            PolicyKind::Sampled(_) => "sampled",
            PolicyKind::ThompsonTwoPoint => "thompson",
            PolicyKind::RLearning(_) => "rlearning",
            PolicyKind::Oracle => "oracle",
            PolicyKind::AlwaysAdmit => "always-admit",
            PolicyKind::NeverAdmit => "never-admit",
        }
    }

    /// Parses a policy name; `sampled` needs the sampling interval.
    pub fn parse(name: &str, sample_interval: Option<f64>) -> Result<Self> {
        Ok(match name {
            "alg1" => PolicyKind::Alg1,
            "alg2" => PolicyKind::Alg2,
            "sampled" => PolicyKind::Sampled(sample_interval.ok_or_else(|| {
                Error::Config("policy 'sampled' requires a sample interval".into())
            })?),
            "thompson" => PolicyKind::ThompsonTwoPoint,
            "rlearning" => PolicyKind::RLearning(RLearningConfig::default()),
            other => match StaticKind::from_str(other) {
                Ok(StaticKind::Oracle) => PolicyKind::Oracle,
                Ok(StaticKind::AlwaysAdmit) => PolicyKind::AlwaysAdmit,
                Ok(StaticKind::NeverAdmit) => PolicyKind::NeverAdmit,
                Err(_) => {
                    return Err(Error::Config(format!(
                        "unknown policy '{other}' (expected alg1|alg2|sampled|thompson|rlearning|oracle|always-admit|never-admit)"
                    )))
                }
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub policy: PolicyKind,
    pub schedule: ExplorationSchedule,
    pub horizon: u64,
    pub replications: u32,
    pub base_seed: u64,
    pub checkpoints: Vec<u64>,
    pub sim_mode: SimMode,
    /// Keep every replication's signed trace in the result.
    pub keep_runs: bool,
}

impl RunConfig {
    /// Config with the default geometric checkpoint grid.
    pub fn new(params: ModelParams, policy: PolicyKind, schedule: ExplorationSchedule, horizon: u64, replications: u32, base_seed: u64) -> Self {
        Self {
            params,
            policy,
            schedule,
            horizon,
            replications,
            base_seed,
            checkpoints: default_checkpoints(horizon),
            sim_mode: SimMode::Event,
            keep_runs: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if self.replications < 1 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.checkpoints.is_empty() {
            return Err(Error::Config("at least one checkpoint required".into()));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("checkpoints must be strictly increasing".into()));
        }
        if self.checkpoints[0] < 1 || *self.checkpoints.last().unwrap() > self.horizon {
            return Err(Error::Config("checkpoints must lie in [1, horizon]".into()));
        }
        self.schedule.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let PolicyKind::Sampled(d) = self.policy {
            if d.is_nan() || d <= 0.0 {
                return Err(Error::Config(format!("sample interval must be > 0 (got {d})")));
            }
        }
        if self.sim_mode == SimMode::Thinning {
            if self.params.admitting_is_optimal() {
                return Err(Error::Config(
                    "mu > c/R needs the coupled regret estimator; use sim_mode = event".into(),
                ));
            }
            if matches!(self.policy, PolicyKind::RLearning(_)) {
                return Err(Error::Config(
                    "rlearning observes service times; use sim_mode = event".into(),
                ));
            }
        }
        Ok(())
    }
}

/// `{10^2, 10^2.25, ...}` below the horizon, then the horizon itself.
pub fn default_checkpoints(horizon: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut e = 2.0f64;
    loop {
        let c = 10f64.powf(e).round() as u64;
        if c >= horizon {
            break;
        }
        if out.last() != Some(&c) {
            out.push(c);
        }
        e += 0.25;
    }
    out.push(horizon);
    out
}

/// Seed of replication `rep` of config `config_index`.
pub fn replication_seed(base_seed: u64, config_index: u64, rep: u64) -> u64 {
    base_seed ^ hash_words(&[config_index, rep])
}

pub fn build_policy(cfg: &RunConfig, streams: &RandomStreams) -> Box<dyn AdmissionPolicy> {
    let theta = cfg.params.theta();
    match cfg.policy {
        PolicyKind::Alg1 | PolicyKind::Sampled(_) => Box::new(MlePolicy::new(
            theta,
            Variant::Alg1,
            cfg.schedule,
            streams.exploration(),
        )),
        PolicyKind::Alg2 => Box::new(MlePolicy::new(
            theta,
            Variant::Alg2,
            cfg.schedule,
            streams.exploration(),
        )),
        PolicyKind::ThompsonTwoPoint => Box::new(ThompsonPolicy::new(theta, streams.baseline())),
        PolicyKind::RLearning(rc) => {
            Box::new(RLearningPolicy::new(&cfg.params, rc, streams.baseline()))
        }
        PolicyKind::Oracle => Box::new(StaticPolicy::new(StaticKind::Oracle, cfg.params)),
        PolicyKind::AlwaysAdmit => Box::new(StaticPolicy::new(StaticKind::AlwaysAdmit, cfg.params)),
        PolicyKind::NeverAdmit => Box::new(StaticPolicy::new(StaticKind::NeverAdmit, cfg.params)),
    }
}

fn sampling_interval(policy: PolicyKind) -> Option<f64> {
    match policy {
        PolicyKind::Sampled(d) => Some(d),
        _ => None,
    }
}

/// Advances `sim` to its next arrival, feeding intermediate samples (if any)
/// and the arrival record to the policy.
fn advance_observed(sim: &mut Simulator, policy: &mut dyn AdmissionPolicy, action: u8, sampling: Option<f64>) -> Result<ArrivalRecord> {
    let out = match sampling {
        Some(d) => {
            let (samples, out) = sim.advance_with_sampling(d, action)?;
            for s in samples {
                policy.observe(Observation::Sample(s))?;
            }
            out
        }
        None => sim.advance_to_next_arrival(action)?,
    };
    policy.observe(Observation::Arrival(out.record))?;
    Ok(out.record)
}

struct CheckpointRecorder<'a> {
    checkpoints: &'a [u64],
    next: usize,
    values: Vec<f64>,
}

impl<'a> CheckpointRecorder<'a> {
    fn new(checkpoints: &'a [u64]) -> Self {
        Self {
            checkpoints,
            next: 0,
            values: Vec::with_capacity(checkpoints.len()),
        }
    }

    /// `arrivals` decisions have been made so far with cumulative `diff`.
    fn record(&mut self, arrivals: u64, diff: i64) {
        while self.next < self.checkpoints.len() && self.checkpoints[self.next] == arrivals {
            self.values.push(diff as f64);
            self.next += 1;
        }
    }
}

/// Signed cumulative `sum (A_i - A*_i)` at each checkpoint, candidate and
/// oracle coupled in event mode.
pub fn run_replication_coupled(cfg: &RunConfig, seed: u64) -> Result<Vec<f64>> {
    let streams = RandomStreams::new(seed);
    let params = cfg.params;
    let k = params.servers();
    let oracle = if params.admitting_is_optimal() {
        StaticKind::AlwaysAdmit
    } else {
        StaticKind::NeverAdmit
    };
    let mut pair = couple_systems(
        Simulator::new(params, SimMode::Event, streams),
        Simulator::new(params, SimMode::Event, streams),
    )?;
    let mut policy = build_policy(cfg, &streams);
    let sampling = sampling_interval(cfg.policy);
    let mut rec = CheckpointRecorder::new(&cfg.checkpoints);
    let mut diff = 0i64;
    for i in 0..cfg.horizon {
        let a = policy.decide(pair.a.busy(), k);
        let b = static_policy(oracle, &params, pair.b.busy());
        diff += i64::from(a) - i64::from(b);
        rec.record(i + 1, diff);
        if i + 1 == cfg.horizon {
            break;
        }
        let (service, _) = pair.admit(a == 1, b == 1)?;
        if let Some(s) = service {
            policy.reveal_service(s);
        }
        advance_observed(&mut pair.a, policy.as_mut(), a, sampling)?;
        pair.b.advance_to_next_arrival(b)?;
    }
    Ok(rec.values)
}

/// Count of candidate admissions at each checkpoint: the regret when the
/// optimal policy admits nothing (`mu <= c/R`). Runs in either sim mode.
pub fn run_replication_uncoupled(cfg: &RunConfig, seed: u64) -> Result<Vec<f64>> {
    if cfg.params.admitting_is_optimal() {
        return Err(Error::Config(
            "acceptance-count regret only applies when mu <= c/R".into(),
        ));
    }
    let streams = RandomStreams::new(seed);
    let k = cfg.params.servers();
    let mut sim = Simulator::new(cfg.params, cfg.sim_mode, streams);
    let mut policy = build_policy(cfg, &streams);
    let sampling = sampling_interval(cfg.policy);
    let mut rec = CheckpointRecorder::new(&cfg.checkpoints);
    let mut accepted = 0i64;
    for i in 0..cfg.horizon {
        let a = policy.decide(sim.busy(), k);
        accepted += i64::from(a);
        rec.record(i + 1, accepted);
        if i + 1 == cfg.horizon {
            break;
        }
        if a == 1 {
            if let Some(s) = sim.admit_job()? {
                policy.reveal_service(s);
            }
        }
        advance_observed(&mut sim, policy.as_mut(), a, sampling)?;
    }
    Ok(rec.values)
}

/// The candidate's arrival records over the horizon (no coupling).
pub fn record_trajectory(cfg: &RunConfig, seed: u64) -> Result<Vec<ArrivalRecord>> {
    let streams = RandomStreams::new(seed);
    let k = cfg.params.servers();
    let mut sim = Simulator::new(cfg.params, cfg.sim_mode, streams);
    let mut policy = build_policy(cfg, &streams);
    let sampling = sampling_interval(cfg.policy);
    let mut out = Vec::with_capacity(cfg.horizon as usize);
    for _ in 1..cfg.horizon {
        let a = policy.decide(sim.busy(), k);
        if a == 1 {
            if let Some(s) = sim.admit_job()? {
                policy.reveal_service(s);
            }
        }
        out.push(advance_observed(&mut sim, policy.as_mut(), a, sampling)?);
    }
    Ok(out)
}

fn run_replication(cfg: &RunConfig, seed: u64) -> Result<Vec<f64>> {
    match cfg.sim_mode {
        SimMode::Event => run_replication_coupled(cfg, seed),
        SimMode::Thinning => run_replication_uncoupled(cfg, seed),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub checkpoints: Vec<u64>,
    /// `|mean of signed cumulative difference|` across replications.
    pub mean_regret: Vec<f64>,
    /// Sample standard deviation of the signed per-run differences.
    pub std_regret: Vec<f64>,
    pub runs: Option<Vec<Vec<f64>>>,
}

impl RegretTrace {
    pub fn from_runs(checkpoints: Vec<u64>, runs: Vec<Vec<f64>>, keep_runs: bool) -> Self {
        let n = runs.len() as f64;
        let mut mean_regret = Vec::with_capacity(checkpoints.len());
        let mut std_regret = Vec::with_capacity(checkpoints.len());
        for c in 0..checkpoints.len() {
            let mean = runs.iter().map(|r| r[c]).sum::<f64>() / n;
            let var = if runs.len() > 1 {
                runs.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            mean_regret.push(mean.abs());
            std_regret.push(var.sqrt());
        }
        Self {
            checkpoints,
            mean_regret,
            std_regret,
            runs: keep_runs.then_some(runs),
        }
    }

    /// Mean regret at the given checkpoint, if recorded.
    pub fn at(&self, checkpoint: u64) -> Option<f64> {
        self.checkpoints
            .iter()
            .position(|&c| c == checkpoint)
            .map(|i| self.mean_regret[i])
    }

    pub fn final_mean(&self) -> f64 {
        *self.mean_regret.last().expect("non-empty trace")
    }
}

/// Regret trace of one config (config index 0 for seed derivation).
pub fn measure_regret(cfg: &RunConfig) -> Result<RegretTrace> {
    measure_regret_indexed(cfg, 0)
}

pub fn measure_regret_indexed(cfg: &RunConfig, config_index: u64) -> Result<RegretTrace> {
    cfg.validate()?;
    let runs = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| run_replication(cfg, replication_seed(cfg.base_seed, config_index, u64::from(rep))))
        .collect::<Result<Vec<_>>>()?;
    Ok(RegretTrace::from_runs(cfg.checkpoints.clone(), runs, cfg.keep_runs))
}

/// Runs every config; a failing config yields its error without stopping
/// the others.
pub fn sweep(cfgs: &[RunConfig]) -> Result<Vec<Result<RegretTrace>>> {
    if cfgs.is_empty() {
        return Err(Error::Config("empty sweep".into()));
    }
    Ok(cfgs
        .par_iter()
        .enumerate()
        .map(|(i, cfg)| measure_regret_indexed(cfg, i as u64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(mu: f64) -> ModelParams {
        ModelParams::new(5.0, mu, 5, 1.0, 1.3).unwrap()
    }

    fn cfg(mu: f64, policy: PolicyKind, horizon: u64, reps: u32) -> RunConfig {
        RunConfig::new(params(mu), policy, ExplorationSchedule::ExpPower(0.4), horizon, reps, 11)
    }

    #[test]
    fn checkpoint_grid() {
        assert_eq!(default_checkpoints(1000), vec![100, 178, 316, 562, 1000]);
        assert_eq!(default_checkpoints(50), vec![50]);
        assert_eq!(default_checkpoints(100), vec![100]);
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(2.05, PolicyKind::Alg1, 1000, 2);
        c.validate().unwrap();
        c.checkpoints = vec![10, 5];
        assert!(c.validate().is_err());
        c.checkpoints = vec![2000];
        assert!(c.validate().is_err());
        let mut t = cfg(2.05, PolicyKind::Alg1, 1000, 2);
        t.sim_mode = SimMode::Thinning;
        assert!(t.validate().is_err());
        let mut z = cfg(1.05, PolicyKind::Alg1, 1000, 0);
        assert!(z.validate().is_err());
        z.replications = 1;
        z.policy = PolicyKind::Sampled(0.0);
        assert!(z.validate().is_err());
    }

    #[test]
    fn oracle_has_zero_regret() {
        for mu in [2.05, 1.05] {
            let t = measure_regret(&cfg(mu, PolicyKind::Oracle, 2000, 4)).unwrap();
            assert!(t.mean_regret.iter().all(|&r| r == 0.0));
            assert!(t.std_regret.iter().all(|&r| r == 0.0));
        }
    }

    #[test]
    fn never_admit_regret_counts_oracle_admissions() {
        let c = cfg(2.05, PolicyKind::NeverAdmit, 3000, 1);
        let seed = replication_seed(c.base_seed, 0, 0);
        let run = run_replication_coupled(&c, seed).unwrap();
        // Independent count: always-admit-if-room alone on the same seed.
        let mut sim = Simulator::new(c.params, SimMode::Event, RandomStreams::new(seed));
        let mut admitted = 0u64;
        let mut counts = Vec::new();
        for i in 0..c.horizon {
            let a = !sim.is_full();
            admitted += u64::from(a);
            if c.checkpoints.contains(&(i + 1)) {
                counts.push(admitted as f64);
            }
            if i + 1 < c.horizon {
                sim.step(a).unwrap();
            }
        }
        let neg: Vec<f64> = run.iter().map(|v| -v).collect();
        assert_eq!(neg, counts);
    }

    #[test]
    fn coupled_and_count_paths_agree_below_threshold() {
        for policy in [PolicyKind::Alg1, PolicyKind::Alg2, PolicyKind::ThompsonTwoPoint, PolicyKind::Sampled(0.1)] {
            let c = cfg(1.05, policy, 5000, 1);
            for rep in 0..5 {
                let seed = replication_seed(3, 0, rep);
                assert_eq!(
                    run_replication_coupled(&c, seed).unwrap(),
                    run_replication_uncoupled(&c, seed).unwrap()
                );
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let c = cfg(2.05, PolicyKind::Alg1, 3000, 6);
        assert_eq!(measure_regret(&c).unwrap(), measure_regret(&c).unwrap());
    }

    #[test]
    fn std_is_sample_std() {
        let t = RegretTrace::from_runs(vec![1], vec![vec![-1.0], vec![-3.0]], false);
        assert_eq!(t.mean_regret, vec![2.0]);
        assert!((t.std_regret[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn empty_sweep_is_an_error() {
        assert!(sweep(&[]).is_err());
    }

    #[test]
    fn sweep_isolates_failures() {
        let good = cfg(2.05, PolicyKind::Alg1, 500, 2);
        let mut bad = good.clone();
        bad.horizon = 0;
        let out = sweep(&[good.clone(), bad, good.clone()]).unwrap();
        assert!(out[0].is_ok() && out[1].is_err() && out[2].is_ok());
        assert_eq!(out[0].as_ref().unwrap(), &measure_regret_indexed(&good, 0).unwrap());
        assert_eq!(out[2].as_ref().unwrap(), &measure_regret_indexed(&good, 2).unwrap());
    }
}
