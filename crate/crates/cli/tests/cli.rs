use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn erlangb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_erlangb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_prints_trace_csv() {
    let o = erlangb(&["run", "--mu", "2.05", "--horizon", "1000", "--runs", "8", "--checkpoints", "10,100,1000"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "checkpoint,mean_regret,std_regret");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("1000,"));
}

#[test]
fn run_is_deterministic() {
    let args = ["run", "--mu", "1.05", "--horizon", "2000", "--runs", "6", "--seed", "9"];
    assert_eq!(stdout(&erlangb(&args)), stdout(&erlangb(&args)));
}

#[test]
fn oracle_policy_has_zero_regret() {
    let o = erlangb(&["run", "--mu", "2.05", "--policy", "oracle", "--horizon", "500", "--runs", "3"]);
    assert_eq!(o.status.code(), Some(0));
    for line in stdout(&o).lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1], "0");
        assert_eq!(fields[2], "0");
    }
}

#[test]
fn config_errors_exit_1() {
    assert_eq!(erlangb(&["run"]).status.code(), Some(1));
    assert_eq!(erlangb(&["run", "--mu", "-1"]).status.code(), Some(1));
    assert_eq!(erlangb(&["run", "--mu", "2", "--schedule", "sometimes"]).status.code(), Some(1));
    assert_eq!(erlangb(&["run", "--mu", "2", "--policy", "sampled"]).status.code(), Some(1));
    assert_eq!(erlangb(&["run", "--mu", "2", "--horizon", "10", "--checkpoints", "50"]).status.code(), Some(1));
    assert_eq!(erlangb(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn help_exits_0() {
    let o = erlangb(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("sweep"));
}

#[test]
fn thinning_rejected_above_threshold() {
    let o = erlangb(&["run", "--mu", "2.05", "--sim-mode", "thinning", "--horizon", "100", "--runs", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_with_files_and_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "mu = 2.0\nhorizon = 20000\nruns = 2\npolicy = \"always-admit\"\n").unwrap();
    let out = dir.path().join("trace.csv");
    let plot = dir.path().join("plot.csv");
    let traj = dir.path().join("traj.csv");
    let o = erlangb(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--lambda",
        "4",
        "--out",
        out.to_str().unwrap(),
        "--plot-data",
        plot.to_str().unwrap(),
        "--trajectory",
        traj.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(&out).unwrap().starts_with("checkpoint,mean_regret,std_regret\n"));
    assert!(fs::read_to_string(&plot).unwrap().lines().nth(1).unwrap().ends_with(",logx"));
    assert!(fs::read_to_string(&traj).unwrap().starts_with("index,T,N,A_prev,M\n"));

    let e = erlangb(&["estimate", "--trajectory", traj.to_str().unwrap()]);
    assert_eq!(e.status.code(), Some(0));
    let text = stdout(&e);
    let value = |key: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(key)).unwrap();
        line.split_whitespace().nth(1).unwrap().parse().unwrap()
    };
    assert!((value("lambda_hat") - 4.0).abs() < 0.15);
    assert!((value("mu_hat") - 2.0).abs() < 0.1);
}

#[test]
fn estimate_missing_file_is_runtime_error() {
    let o = erlangb(&["estimate", "--trajectory", "/definitely/not/here.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/definitely/not/here.csv"));
}

#[test]
fn sweep_writes_one_csv_per_section() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(
        &cfg,
        "horizon = 1000\nruns = 4\n\n[above]\nmu = 2.05\n\n[below]\nmu = 1.05\nschedule = \"poly\"\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = erlangb(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--runs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["above", "below"] {
        assert!(Path::new(&out.join(format!("{name}.csv"))).exists());
    }
}

#[test]
fn sweep_without_sections_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(&cfg, "mu = 2.0\n").unwrap();
    let o = erlangb(&["sweep", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn oracle_prints_values() {
    let o = erlangb(&["oracle", "--lambda", "1", "--mu", "1", "--servers", "1", "--cost", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("erlang_b")).unwrap();
    assert_eq!(line.split_whitespace().nth(1).unwrap(), "0.5");
    let delta = text.lines().find(|l| l.starts_with("delta_tilde")).unwrap();
    let v: f64 = delta.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(v.abs() < 1e-10);
}
