//! Shared domain types: ground-truth parameters and the per-arrival
//! observation record seen by the dispatcher.

use crate::error::{Error, Result};

/// Ground-truth parameters of an M/M/k/k system with linear admission reward.
///
/// Construct through [`ModelParams::new`]; fields are private so the derived
/// threshold can never drift from `cost / reward`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    lambda: f64,
    mu: f64,
    servers: u32,
    reward: f64,
    cost: f64,
    theta: f64,
}

impl ModelParams {
    pub fn new(lambda: f64, mu: f64, servers: u32, reward: f64, cost: f64) -> Result<Self> {
        validate_params(Self {
            lambda,
            mu,
            servers,
            reward,
            cost,
            theta: cost / reward,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// True service rate. Learning policies must never read this.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn servers(&self) -> u32 {
        self.servers
    }

    pub fn reward(&self) -> f64 {
        self.reward
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// The decision boundary `c / R` on the service rate.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Same system with a different true service rate.
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::new(self.lambda, mu, self.servers, self.reward, self.cost)
    }

    /// Whether the full-information optimal policy admits (when room).
    pub fn admitting_is_optimal(&self) -> bool {
        self.mu > self.theta
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!("{name} must be > 0 (got {v})")))
    }
}

/// Returns `p` unchanged if every constraint holds, else the first violation.
pub fn validate_params(p: ModelParams) -> Result<ModelParams> {
    check_positive("lambda", p.lambda)?;
    check_positive("mu", p.mu)?;
    if p.servers < 1 {
        return Err(Error::InvalidParam("servers must be >= 1".into()));
    }
    check_positive("reward", p.reward)?;
    check_positive("cost", p.cost)?;
    if p.theta != p.cost / p.reward {
        return Err(Error::InvalidParam("theta must equal cost / reward".into()));
    }
    Ok(p)
}

/// One observation `(T_i, N_i, A_{i-1}, M_i)` taken at arrival `i >= 1`.
///
/// Intermediate samples of the fixed-duration variant reuse this layout; their
/// `index` is the ordinal of the arrival that closes the interval, and
/// `inter_arrival` is the time since the previous observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalRecord {
    pub index: u64,
    pub inter_arrival: f64,
    pub busy_before: u32,
    pub prev_action: u8,
    pub departures: u32,
}

impl ArrivalRecord {
    /// Checks `N_{i-1} + A_{i-1} = M_i + N_i` against the previous busy count.
    pub fn conserves(&self, prev_busy: u32) -> bool {
        prev_busy + u32::from(self.prev_action) == self.departures + self.busy_before
    }

    /// Structural checks that do not need the previous record.
    pub fn validate(&self, servers: u32) -> Result<()> {
        if !(self.inter_arrival.is_finite() && self.inter_arrival > 0.0) {
            return Err(Error::Domain(format!(
                "record {}: inter-arrival time must be > 0",
                self.index
            )));
        }
        if self.busy_before > servers {
            return Err(Error::Domain(format!(
                "record {}: busy count {} exceeds {servers} servers",
                self.index, self.busy_before
            )));
        }
        if self.prev_action > 1 {
            return Err(Error::Domain(format!(
                "record {}: action must be 0 or 1",
                self.index
            )));
        }
        Ok(())
    }
}

/// Checks conservation and feasibility over a whole sequence starting from an
/// empty system (`N_0 = 0`).
pub fn check_history(records: &[ArrivalRecord], servers: u32) -> Result<()> {
    let mut prev_busy = 0u32;
    for r in records {
        r.validate(servers)?;
        if r.prev_action == 1 && prev_busy >= servers {
            return Err(Error::Domain(format!(
                "record {}: admission recorded while all servers were busy",
                r.index
            )));
        }
        if !r.conserves(prev_busy) {
            return Err(Error::Domain(format!(
                "record {}: conservation violated",
                r.index
            )));
        }
        prev_busy = r.busy_before;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_configurations_validate() {
        let p = ModelParams::new(5.0, 2.0, 5, 1.0, 1.3).unwrap();
        assert_eq!(p.theta(), 1.3);
        let q = ModelParams::new(2.0, 0.6, 2, 1.0, 1.5).unwrap();
        assert_eq!(q.theta(), 1.5);
        assert!(!q.admitting_is_optimal());
    }

    #[test]
    fn zero_lambda_rejected() {
        let err = ModelParams::new(0.0, 2.0, 5, 1.0, 1.3).unwrap_err();
        assert!(err.to_string().contains("lambda must be > 0"), "{err}");
    }

    #[test]
    fn first_violation_reported() {
        let err = ModelParams::new(1.0, -1.0, 0, 1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("mu must be > 0"));
        let err = ModelParams::new(1.0, 1.0, 0, 1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("servers"));
        let err = ModelParams::new(1.0, 1.0, 1, 1.0, f64::NAN).unwrap_err();
        assert!(err.to_string().contains("cost"));
    }

    #[test]
    fn theta_is_exact_ratio() {
        let p = ModelParams::new(1.0, 1.0, 3, 3.0, 1.0).unwrap();
        assert_eq!(p.theta(), 1.0 / 3.0);
    }

    #[test]
    fn history_conservation_checked() {
        let good = [
            ArrivalRecord { index: 1, inter_arrival: 0.5, busy_before: 1, prev_action: 1, departures: 0 },
            ArrivalRecord { index: 2, inter_arrival: 0.5, busy_before: 0, prev_action: 0, departures: 1 },
        ];
        check_history(&good, 2).unwrap();
        let bad = [ArrivalRecord { index: 1, inter_arrival: 0.5, busy_before: 1, prev_action: 0, departures: 0 }];
        assert!(check_history(&bad, 2).is_err());
    }
}
