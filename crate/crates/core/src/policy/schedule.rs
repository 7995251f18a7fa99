//! Exploration schedules `f(n)`; the explore-branch admission probability is
//! `1 / f(alpha)`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExplorationSchedule {
    /// `max(1, n^p)`.
    PolyPower(f64),
    /// `exp(n^(1 - eps))`.
    ExpPower(f64),
    /// `exp(n)`.
    ExpLinear,
    /// `exp(n^(1 - eps_n))` with `eps_n = eps_bar / sqrt(1 + ln(n + 1))`.
    ExpPowerDecaying(f64),
}

impl ExplorationSchedule {
    pub fn validate(self) -> Result<Self> {
        match self {
            ExplorationSchedule::PolyPower(p) if !(p.is_finite() && p > 0.0) => Err(
                Error::InvalidParam(format!("poly power must be > 0 (got {p})")),
            ),
            ExplorationSchedule::ExpPower(e) if !(e > 0.0 && e < 1.0) => Err(
                Error::InvalidParam(format!("epsilon must be in (0,1) (got {e})")),
            ),
            ExplorationSchedule::ExpPowerDecaying(e) if !(e > 0.0 && e < 1.0) => Err(
                Error::InvalidParam(format!("epsilon_bar must be in (0,1) (got {e})")),
            ),
            s => Ok(s),
        }
    }

    /// `f(n)`, clamped below at 1. May be `+inf` for large `n`.
    pub fn eval(&self, n: u64) -> f64 {
        let x = n as f64;
        let raw = match *self {
            ExplorationSchedule::PolyPower(p) => x.powf(p),
            ExplorationSchedule::ExpPower(eps) => x.powf(1.0 - eps).exp(),
            ExplorationSchedule::ExpLinear => x.exp(),
            ExplorationSchedule::ExpPowerDecaying(eps_bar) => {
                let eps_n = eps_bar / (1.0 + (x + 1.0).ln()).sqrt();
                x.powf(1.0 - eps_n).exp()
            }
        };
        raw.max(1.0)
    }

    /// Explore-branch admission probability `1 / f(n)`.
    pub fn admit_probability(&self, n: u64) -> f64 {
        1.0 / self.eval(n)
    }
}

/// Checked evaluation of `f(n)`.
pub fn f_eval(schedule: ExplorationSchedule, n: u64) -> Result<f64> {
    Ok(schedule.validate()?.eval(n))
}

impl fmt::Display for ExplorationSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExplorationSchedule::PolyPower(p) => write!(f, "n^{p}"),
            ExplorationSchedule::ExpPower(e) => write!(f, "exp(n^{})", 1.0 - e),
            ExplorationSchedule::ExpLinear => write!(f, "exp(n)"),
            ExplorationSchedule::ExpPowerDecaying(e) => write!(f, "exp(n^(1-eps_n)), eps_bar={e}"),
        }
    }
}
