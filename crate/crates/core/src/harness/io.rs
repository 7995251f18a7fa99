//! CSV files: regret traces, plot data, and trajectory dumps.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::RegretTrace;
use crate::model::ArrivalRecord;

pub const TRACE_HEADER: &str = "checkpoint,mean_regret,std_regret";
pub const TRAJECTORY_HEADER: &str = "index,T,N,A_prev,M";
pub const PLOT_HEADER: &str =
    "checkpoint,mean_regret,std_regret,band_lo,band_hi,log_x,loglog_x,log_y,axes";

pub fn trace_to_csv(trace: &RegretTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for i in 0..trace.checkpoints.len() {
        let _ = writeln!(
            out,
            "{},{},{}",
            trace.checkpoints[i], trace.mean_regret[i], trace.std_regret[i]
        );
    }
    out
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `checkpoint,mean_regret,std_regret`, one row per checkpoint. Floats
/// use the shortest representation that parses back to the same value.
pub fn emit_csv(trace: &RegretTrace, path: &Path) -> Result<()> {
    write(path, &trace_to_csv(trace))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, s: Option<&str>, what: &str) -> Result<T> {
    s.ok_or_else(|| parse_err(path, line, format!("missing {what}")))?
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("bad {what}")))
}

pub fn parse_csv(path: &Path) -> Result<RegretTrace> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(TRACE_HEADER) {
        return Err(parse_err(path, 1, "unexpected header"));
    }
    let mut trace = RegretTrace {
        checkpoints: Vec::new(),
        mean_regret: Vec::new(),
        std_regret: Vec::new(),
        runs: None,
    };
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let mut cols = line.split(',');
        trace.checkpoints.push(field(path, lineno, cols.next(), "checkpoint")?);
        trace.mean_regret.push(field(path, lineno, cols.next(), "mean_regret")?);
        trace.std_regret.push(field(path, lineno, cols.next(), "std_regret")?);
        if cols.next().is_some() {
            return Err(parse_err(path, lineno, "too many columns"));
        }
    }
    Ok(trace)
}

/// Plot-ready rows with `mean +- std` band and axis transforms. `axes` is
/// `logx` when admitting is optimal and `loglogx-logy` otherwise.
pub fn emit_plot_data(trace: &RegretTrace, admitting_optimal: bool, path: &Path) -> Result<()> {
    let axes = if admitting_optimal { "logx" } else { "loglogx-logy" };
    let mut out = String::from(PLOT_HEADER);
    out.push('\n');
    for i in 0..trace.checkpoints.len() {
        let x = trace.checkpoints[i] as f64;
        let m = trace.mean_regret[i];
        let s = trace.std_regret[i];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            trace.checkpoints[i],
            m,
            s,
            m - s,
            m + s,
            x.ln(),
            x.ln().ln(),
            m.ln(),
            axes
        );
    }
    write(path, &out)
}

pub fn write_trajectory(records: &[ArrivalRecord], path: &Path) -> Result<()> {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.index, r.inter_arrival, r.busy_before, r.prev_action, r.departures
        );
    }
    write(path, &out)
}

pub fn read_trajectory(path: &Path) -> Result<Vec<ArrivalRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(TRAJECTORY_HEADER) {
        return Err(parse_err(path, 1, format!("expected header '{TRAJECTORY_HEADER}'")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let r = ArrivalRecord {
            index: field(path, lineno, cols.next(), "index")?,
            inter_arrival: field(path, lineno, cols.next(), "T")?,
            busy_before: field(path, lineno, cols.next(), "N")?,
            prev_action: field(path, lineno, cols.next(), "A_prev")?,
            departures: field(path, lineno, cols.next(), "M")?,
        };
        out.push(r);
    }
    Ok(out)
}
