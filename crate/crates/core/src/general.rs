//! General-reward machinery: explicit rate estimates, threshold-policy
//! stationary distributions, average reward, and the certainty-equivalent
//! learning loop with forced exploration.

use crate::error::{Error, Result};
use crate::model::ArrivalRecord;
use crate::policy::mle::g_raw;
use crate::policy::schedule::ExplorationSchedule;
use crate::policy::{AdmissionPolicy, Observation};
use crate::streams::StreamRng;
use rand::Rng;

/// Sequence of observation records, oldest first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub records: Vec<ArrivalRecord>,
}

impl History {
    pub fn new(records: Vec<ArrivalRecord>) -> Self {
        Self { records }
    }

    pub fn push(&mut self, r: ArrivalRecord) {
        self.records.push(r);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `sum g(T_i, M_i, mu)`.
    pub fn sum_g(&self, mu: f64) -> f64 {
        self.records
            .iter()
            .map(|r| g_raw(r.inter_arrival, r.departures, mu))
            .sum()
    }

    /// `sum h(T_i, N_i) = sum N_i T_i`.
    pub fn sum_h(&self) -> f64 {
        self.records
            .iter()
            .map(|r| f64::from(r.busy_before) * r.inter_arrival)
            .sum()
    }
}

/// Log-likelihood of the departure observations at rate `mu`, without the
/// binomial-coefficient constant (it does not depend on `mu`).
pub fn log_likelihood(hist: &History, mu: f64) -> Result<f64> {
    if mu.is_nan() || mu <= 0.0 {
        return Err(Error::Domain(format!("mu must be > 0 (got {mu})")));
    }
    Ok(hist
        .records
        .iter()
        .map(|r| {
            let x = mu * r.inter_arrival;
            let departed = if r.departures == 0 {
                0.0
            } else {
                f64::from(r.departures) * (-(-x).exp_m1()).ln()
            };
            departed - x * f64::from(r.busy_before)
        })
        .sum())
}

/// Maximum-likelihood service rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuHat {
    /// No departure ever observed: likelihood maximized at rate 0.
    Zero,
    Finite(f64),
    /// No busy server ever observed: likelihood increases without bound.
    Infinity,
}

impl MuHat {
    pub fn finite(self) -> Option<f64> {
        match self {
            MuHat::Finite(v) => Some(v),
            _ => None,
        }
    }
}

const REL_TOL: f64 = 1e-10;
const BRACKET_LO: f64 = 1e-9;

/// Solves `sum g(T, M, mu) = sum h(T, N)` by bracketing and bisection.
pub fn solve_mu_hat(hist: &History) -> Result<MuHat> {
    if hist.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let any_departure = hist.records.iter().any(|r| r.departures > 0);
    let any_busy = hist.records.iter().any(|r| r.busy_before > 0);
    if !any_departure {
        return Ok(MuHat::Zero);
    }
    if !any_busy {
        return Ok(MuHat::Infinity);
    }
    let target = hist.sum_h();
    let excess = |mu: f64| hist.sum_g(mu) - target;

    let mut lo = BRACKET_LO;
    while excess(lo) < 0.0 {
        lo *= 0.5;
    }
    let mut hi = 1.0f64;
    while excess(hi) >= 0.0 {
        lo = lo.max(hi);
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= REL_TOL * lo {
            break;
        }
    }
    Ok(MuHat::Finite(0.5 * (lo + hi)))
}

/// `n / sum T_i` over the arrival records of the history.
pub fn lambda_hat(hist: &History) -> Result<f64> {
    if hist.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let total: f64 = hist.records.iter().map(|r| r.inter_arrival).sum();
    Ok(hist.len() as f64 / total)
}

/// Stationary distribution over `0..=k` of the chain under threshold `i_star`.
pub fn stationary_dist(lambda: f64, mu: f64, i_star: u32, k: u32) -> Result<Vec<f64>> {
    if !(lambda > 0.0 && mu > 0.0) || !lambda.is_finite() || !mu.is_finite() {
        return Err(Error::Domain("rates must be finite and > 0".into()));
    }
    if i_star > k {
        return Err(Error::Domain(format!("threshold {i_star} exceeds {k} servers")));
    }
    let rho = lambda / mu;
    let mut w = vec![0.0; k as usize + 1];
    w[0] = 1.0;
    for i in 1..=i_star as usize {
        w[i] = w[i - 1] * rho / i as f64;
    }
    // Rescale if the weights overflowed for large rho.
    if !w.iter().all(|x| x.is_finite()) {
        let log_w: Vec<f64> = (0..=i_star as usize)
            .map(|i| i as f64 * rho.ln() - ln_factorial(i))
            .collect();
        let top = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (i, lw) in log_w.iter().enumerate() {
            w[i] = (lw - top).exp();
        }
    }
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

/// Expected one-step rewards `r(s, a)` for `s` in `0..=k`. `r(k, 1)` is infeasible.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTable {
    rows: Vec<[f64; 2]>,
}

impl RewardTable {
    /// `rows[s] = [r(s, 0), r(s, 1)]`; the admit entry of the last row is ignored.
    pub fn new(mut rows: Vec<[f64; 2]>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Domain("reward table needs at least k = 1".into()));
        }
        let last = rows.len() - 1;
        rows[last][1] = f64::NAN;
        Ok(Self { rows })
    }

    pub fn servers(&self) -> u32 {
        (self.rows.len() - 1) as u32
    }

    pub fn get(&self, s: u32, a: u8) -> f64 {
        debug_assert!(!(s == self.servers() && a == 1), "r(k,1) is infeasible");
        self.rows[s as usize][a as usize]
    }

    fn scale(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter())
            .filter(|x| x.is_finite())
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Reward model whose table is re-evaluated at each rate estimate.
pub trait GeneralRewardModel {
    fn table(&self, lambda: f64, mu: f64, k: u32) -> RewardTable;
}

impl<F> GeneralRewardModel for F
where
    F: Fn(f64, f64, u32) -> RewardTable,
{
    fn table(&self, lambda: f64, mu: f64, k: u32) -> RewardTable {
        self(lambda, mu, k)
    }
}

/// Fixed reward `R` per admission and cost `c` per unit service time:
/// `r(i,1) = R - c(i+1)/(lambda+mu)`, `r(i,0) = -c i/(lambda+mu)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearReward {
    pub reward: f64,
    pub cost: f64,
}

impl GeneralRewardModel for LinearReward {
    fn table(&self, lambda: f64, mu: f64, k: u32) -> RewardTable {
        let rate = lambda + mu;
        let rows = (0..=k)
            .map(|i| {
                let i = f64::from(i);
                [-self.cost * i / rate, self.reward - self.cost * (i + 1.0) / rate]
            })
            .collect();
        RewardTable::new(rows).expect("k >= 1")
    }
}

/// Table that ignores the rates.
impl GeneralRewardModel for RewardTable {
    fn table(&self, _lambda: f64, _mu: f64, k: u32) -> RewardTable {
        assert_eq!(k, self.servers(), "reward table sized for a different k");
        self.clone()
    }
}

/// Long-run average reward of a threshold-`i_star` policy.
pub fn average_reward(r: &RewardTable, pi: &[f64], i_star: u32) -> f64 {
    let below: f64 = (0..i_star).map(|i| r.get(i, 1) * pi[i as usize]).sum();
    below + r.get(i_star, 0) * pi[i_star as usize]
}

/// Best threshold and its value.
///
/// Thresholds are compared through the exact difference of their averages,
/// written over the unnormalized weights `w_i = rho^i / i!` so that gains
/// carried by tiny stationary masses are not lost against the total.
/// Differences within `1e-12` of the magnitude of their terms count as ties
/// and resolve to the smaller threshold.
pub fn optimal_threshold(r: &RewardTable, lambda: f64, mu: f64) -> Result<(u32, f64)> {
    let k = r.servers();
    // Proportional to w_i for every i, normalized so nothing overflows.
    let w = stationary_dist(lambda, mu, k, k)?;
    let k = k as usize;
    let mut prefix_w = vec![0.0; k + 1];
    let mut prefix_admit = vec![0.0; k + 1];
    let (mut acc_w, mut acc_admit) = (0.0, 0.0);
    for i in 0..=k {
        acc_w += w[i];
        prefix_w[i] = acc_w;
        // sum_{l<i} r(l,1) w_l
        prefix_admit[i] = acc_admit;
        if i < k {
            acc_admit += r.get(i as u32, 1) * w[i];
        }
    }
    let mut best = 0usize;
    for j in 1..=k {
        let b = best;
        let wb = prefix_w[b];
        let nb = prefix_admit[b] + r.get(b as u32, 0) * w[b];
        let admits = prefix_admit[j] - prefix_admit[b];
        let admits_abs: f64 = (b..j).map(|l| (r.get(l as u32, 1) * w[l]).abs()).sum();
        let extra_w = prefix_w[j] - prefix_w[b];
        let inner = -r.get(b as u32, 0) * w[b] + admits + r.get(j as u32, 0) * w[j];
        let inner_abs = (r.get(b as u32, 0) * w[b]).abs() + admits_abs + (r.get(j as u32, 0) * w[j]).abs();
        let diff = wb * inner - nb * extra_w;
        let scale = wb * inner_abs + nb.abs() * extra_w;
        if diff > 1e-12 * scale {
            best = j;
        }
    }
    let pi = stationary_dist(lambda, mu, best as u32, k as u32)?;
    Ok((best as u32, average_reward(r, &pi, best as u32)))
}

fn best_threshold(r: &RewardTable, values: &[f64]) -> (u32, f64) {
    let tol = 1e-12 * r.scale().max(f64::MIN_POSITIVE);
    let mut best = (0u32, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 + tol {
            best = (i as u32, v);
        }
    }
    best
}

/// Threshold chosen from estimates that may sit at the boundary. At rate 0
/// the chain piles up at the threshold; at infinite rate it never leaves 0.
fn threshold_for_estimate(r: &RewardTable, lambda: f64, mu: MuHat) -> Result<u32> {
    let k = r.servers();
    match mu {
        MuHat::Finite(m) => Ok(optimal_threshold(r, lambda, m)?.0),
        MuHat::Zero => {
            let values: Vec<f64> = (0..=k).map(|i| r.get(i, 0)).collect();
            Ok(best_threshold(r, &values).0)
        }
        MuHat::Infinity => {
            let values: Vec<f64> = (0..=k)
                .map(|i| if i == 0 { r.get(0, 0) } else { r.get(0, 1) })
                .collect();
            Ok(best_threshold(r, &values).0)
        }
    }
}

/// One decision of the certainty-equivalent loop: explore with the full
/// threshold `k` when `coin < p_n`, else act on the threshold optimal for the
/// current `(lambda_hat, mu_hat)`. States above the threshold admit if room.
pub fn general_policy_step(
    hist: &History,
    model: &dyn GeneralRewardModel,
    k: u32,
    p_n: f64,
    busy: u32,
    coin: f64,
) -> Result<u8> {
    if !(0.0..=1.0).contains(&p_n) {
        return Err(Error::Domain(format!("exploration probability {p_n} not in [0,1]")));
    }
    if busy >= k {
        return Ok(0);
    }
    if coin < p_n || hist.is_empty() {
        return Ok(1);
    }
    let lam = lambda_hat(hist)?;
    let mu = solve_mu_hat(hist)?;
    // Boundary estimates only need the shape of the table; evaluate it at a
    // representative finite rate.
    let eval_mu = mu.finite().unwrap_or(lam);
    let table = model.table(lam, eval_mu, k);
    let i_star = threshold_for_estimate(&table, lam, mu)?;
    Ok(u8::from(busy != i_star))
}

/// The general loop as a runnable policy, with `p_n = 1 / f(n)`.
pub struct GeneralPolicy<M> {
    model: M,
    schedule: ExplorationSchedule,
    history: History,
    coins: StreamRng,
}

impl<M: GeneralRewardModel> GeneralPolicy<M> {
    pub fn new(model: M, schedule: ExplorationSchedule, coins: StreamRng) -> Self {
        Self {
            model,
            schedule,
            history: History::default(),
            coins,
        }
    }

    pub fn history(&self) -> &History {
        &self.history
    }
}

impl<M: GeneralRewardModel + Send> AdmissionPolicy for GeneralPolicy<M> {
    fn observe(&mut self, obs: Observation) -> Result<()> {
        if let Observation::Arrival(r) = obs {
            self.history.push(r);
        }
        Ok(())
    }

    fn decide(&mut self, busy: u32, servers: u32) -> u8 {
        let coin: f64 = self.coins.gen();
        let p_n = self.schedule.admit_probability(self.history.len() as u64);
        general_policy_step(&self.history, &self.model, servers, p_n, busy, coin)
            .expect("history produced by the simulator is valid")
    }

    fn name(&self) -> &'static str {
        "general"
    }
}
