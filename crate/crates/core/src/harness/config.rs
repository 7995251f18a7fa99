//! Key-value config documents (TOML syntax). Keys mirror [`RunConfig`]:
//!
//! ```toml
//! lambda = 5.0
//! servers = 5
//! reward = 1.0
//! cost = 1.3
//! horizon = 100000
//! runs = 500
//! seed = 1
//! schedule = "exp-power"
//! epsilon = 0.4
//!
//! [above]
//! mu = 2.05
//!
//! [below]
//! mu = 1.05
//! ```
//!
//! Top-level keys are defaults; each table is one run of a sweep.

use std::fs;
use std::path::Path;

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::harness::{default_checkpoints, PolicyKind, RunConfig};
use crate::model::ModelParams;
use crate::policy::ExplorationSchedule;
use crate::sim::SimMode;

/// Partially specified run; unset fields fall back to defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSpec {
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub servers: Option<u32>,
    pub reward: Option<f64>,
    pub cost: Option<f64>,
    pub horizon: Option<u64>,
    pub runs: Option<u32>,
    pub seed: Option<u64>,
    pub policy: Option<String>,
    pub schedule: Option<String>,
    pub epsilon: Option<f64>,
    pub epsilon_bar: Option<f64>,
    pub poly_power: Option<f64>,
    pub sample_interval: Option<f64>,
    pub sim_mode: Option<String>,
    pub checkpoints: Option<Vec<u64>>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RunSpec {
    /// Fields set in `other` override those in `self`.
    pub fn merge(&mut self, other: &RunSpec) {
        merge_fields!(
            self, other, lambda, mu, servers, reward, cost, horizon, runs, seed, policy,
            schedule, epsilon, epsilon_bar, poly_power, sample_interval, sim_mode, checkpoints
        );
    }

    pub fn from_table(t: &Table) -> Result<Self> {
        let mut s = RunSpec::default();
        for (key, v) in t {
            match key.as_str() {
                "lambda" => s.lambda = Some(as_f64(key, v)?),
                "mu" => s.mu = Some(as_f64(key, v)?),
                "servers" => s.servers = Some(as_uint(key, v)? as u32),
                "reward" => s.reward = Some(as_f64(key, v)?),
                "cost" => s.cost = Some(as_f64(key, v)?),
                "horizon" => s.horizon = Some(as_uint(key, v)?),
                "runs" => s.runs = Some(as_uint(key, v)? as u32),
                "seed" => s.seed = Some(as_uint(key, v)?),
                "policy" => s.policy = Some(as_str(key, v)?),
                "schedule" => s.schedule = Some(as_str(key, v)?),
                "epsilon" => s.epsilon = Some(as_f64(key, v)?),
                "epsilon_bar" => s.epsilon_bar = Some(as_f64(key, v)?),
                "poly_power" => s.poly_power = Some(as_f64(key, v)?),
                "sample_interval" => s.sample_interval = Some(as_f64(key, v)?),
                "sim_mode" => s.sim_mode = Some(as_str(key, v)?),
                "checkpoints" => s.checkpoints = Some(as_checkpoints(key, v)?),
                other => return Err(Error::Config(format!("unknown key '{other}'"))),
            }
        }
        Ok(s)
    }

    pub fn into_config(self) -> Result<RunConfig> {
        let mu = self
            .mu
            .ok_or_else(|| Error::Config("mu is required".into()))?;
        let params = ModelParams::new(
            self.lambda.unwrap_or(5.0),
            mu,
            self.servers.unwrap_or(5),
            self.reward.unwrap_or(1.0),
            self.cost.unwrap_or(1.3),
        )
        .map_err(|e| Error::Config(e.to_string()))?;
        let schedule = parse_schedule(
            self.schedule.as_deref().unwrap_or("exp-power"),
            self.epsilon.unwrap_or(0.4),
            self.epsilon_bar.unwrap_or(0.2),
            self.poly_power.unwrap_or(2.5),
        )?;
        let policy = PolicyKind::parse(self.policy.as_deref().unwrap_or("alg1"), self.sample_interval)?;
        let horizon = self.horizon.unwrap_or(100_000);
        let sim_mode = self.sim_mode.as_deref().unwrap_or("event").parse::<SimMode>()?;
        let cfg = RunConfig {
            params,
            policy,
            schedule,
            horizon,
            replications: self.runs.unwrap_or(100),
            base_seed: self.seed.unwrap_or(1),
            checkpoints: self
                .checkpoints
                .unwrap_or_else(|| default_checkpoints(horizon)),
            sim_mode,
            keep_runs: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_schedule(name: &str, epsilon: f64, epsilon_bar: f64, poly_power: f64) -> Result<ExplorationSchedule> {
    let s = match name {
        "poly" => ExplorationSchedule::PolyPower(poly_power),
        "exp-power" => ExplorationSchedule::ExpPower(epsilon),
        "exp-linear" => ExplorationSchedule::ExpLinear,
        "exp-decaying" => ExplorationSchedule::ExpPowerDecaying(epsilon_bar),
        other => {
            return Err(Error::Config(format!(
                "unknown schedule '{other}' (expected poly|exp-power|exp-linear|exp-decaying)"
            )))
        }
    };
    s.validate().map_err(|e| Error::Config(e.to_string()))
}

/// Comma-separated list of arrival counts.
pub fn parse_checkpoint_list(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|p| {
            let p = p.trim();
            p.parse::<u64>()
                .or_else(|_| p.parse::<f64>().map(|f| f as u64))
                .map_err(|_| Error::Config(format!("bad checkpoint '{p}'")))
        })
        .collect()
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Config(format!("'{key}' must be a number"))),
    }
}

fn as_uint(key: &str, v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        Value::Float(f) if *f >= 0.0 && f.fract() == 0.0 => Ok(*f as u64),
        _ => Err(Error::Config(format!("'{key}' must be a non-negative integer"))),
    }
}

fn as_str(key: &str, v: &Value) -> Result<String> {
    v.as_str()
        .map(str::to_owned)
        .ok_or_else(|| Error::Config(format!("'{key}' must be a string")))
}

fn as_checkpoints(key: &str, v: &Value) -> Result<Vec<u64>> {
    match v {
        Value::Array(items) => items.iter().map(|x| as_uint(key, x)).collect(),
        Value::String(s) => parse_checkpoint_list(s),
        _ => Err(Error::Config(format!("'{key}' must be a list of integers"))),
    }
}

fn load(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.parse::<Table>().map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(0),
        msg: e.message().to_string(),
    })
}

/// Single-run file: top-level keys only.
pub fn parse_run_file(path: &Path) -> Result<RunSpec> {
    let table = load(path)?;
    if let Some((name, _)) = table.iter().find(|(_, v)| v.is_table()) {
        return Err(Error::Config(format!(
            "section [{name}] not allowed in a single-run config"
        )));
    }
    RunSpec::from_table(&table)
}

/// Sweep file: top-level defaults, one `[section]` per run, in file order.
pub fn parse_sweep_str(text: &str) -> Result<Vec<(String, RunSpec)>> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
    let mut defaults = Table::new();
    let mut sections = Vec::new();
    for (key, v) in &table {
        match v {
            Value::Table(t) => sections.push((key.clone(), t.clone())),
            other => {
                defaults.insert(key.clone(), other.clone());
            }
        }
    }
    let base = RunSpec::from_table(&defaults)?;
    let mut out = Vec::new();
    for (name, t) in sections {
        let mut spec = base.clone();
        spec.merge(&RunSpec::from_table(&t)?);
        out.push((name, spec));
    }
    // Sections keep their order of appearance in the document.
    out.sort_by_key(|(name, _)| text.find(&format!("[{name}]")).unwrap_or(usize::MAX));
    Ok(out)
}

pub fn parse_sweep_file(path: &Path) -> Result<Vec<(String, RunSpec)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sweep_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SWEEP: &str = r#"
lambda = 5
servers = 5
cost = 1.3
horizon = 1000
runs = 4
schedule = "exp-power"
epsilon = 0.4

[mu_205]
mu = 2.05

[mu_105]
mu = 1.05
schedule = "poly"
poly_power = 2.5
checkpoints = [10, 100, 1000]
"#;

    #[test]
    fn sweep_sections_inherit_defaults() {
        let runs = parse_sweep_str(SWEEP).unwrap();
        let names: Vec<&str> = runs.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["mu_205", "mu_105"]);
        let a = runs[0].1.clone().into_config().unwrap();
        assert_eq!(a.params.mu(), 2.05);
        assert_eq!(a.schedule, ExplorationSchedule::ExpPower(0.4));
        assert_eq!(a.checkpoints, default_checkpoints(1000));
        let b = runs[1].1.clone().into_config().unwrap();
        assert_eq!(b.schedule, ExplorationSchedule::PolyPower(2.5));
        assert_eq!(b.checkpoints, vec![10, 100, 1000]);
        assert_eq!(b.replications, 4);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(parse_sweep_str("lamda = 5\n[a]\nmu = 1\n").is_err());
    }

    #[test]
    fn missing_mu_rejected() {
        let runs = parse_sweep_str("[a]\nlambda = 2\n").unwrap();
        assert!(runs[0].1.clone().into_config().is_err());
    }

    #[test]
    fn checkpoint_list_parsing() {
        assert_eq!(parse_checkpoint_list("100, 1e3,5000").unwrap(), vec![100, 1000, 5000]);
        assert!(parse_checkpoint_list("x").is_err());
    }
}
