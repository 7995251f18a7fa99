use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use erlangb_learn::general::{lambda_hat, solve_mu_hat, History, MuHat};
use erlangb_learn::harness::config::{parse_checkpoint_list, parse_run_file, parse_sweep_file, RunSpec};
use erlangb_learn::harness::io::{emit_csv, emit_plot_data, read_trajectory, trace_to_csv, write_trajectory};
use erlangb_learn::harness::{measure_regret_indexed, record_trajectory, RunConfig};
use erlangb_learn::oracles::{delta_tilde, erlang_b, single_server_drift};
use erlangb_learn::{Error, ModelParams};

#[derive(Parser)]
#[command(name = "erlangb", version, about = "Learning admission control for Erlang-B loss systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure the regret of one configuration.
    #[command(allow_negative_numbers = true)]
    Run {
        #[command(flatten)]
        spec: SpecArgs,
        /// Key-value config file; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Regret CSV destination (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write plot data with axis-transform hints.
        #[arg(long)]
        plot_data: Option<PathBuf>,
        /// Also dump the first replication's arrival records.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Run every section of a sweep config file.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
        /// Output directory; one `<section>.csv` per run.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the analytic drift and blocking values.
    #[command(allow_negative_numbers = true)]
    Oracle {
        #[arg(long, default_value_t = 5.0)]
        lambda: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 5)]
        servers: u32,
        #[arg(long, default_value_t = 1.0)]
        reward: f64,
        #[arg(long, default_value_t = 1.3)]
        cost: f64,
    },
    /// Estimate rates from a trajectory dump.
    Estimate {
        #[arg(long)]
        trajectory: PathBuf,
    },
}

#[derive(Args, Default)]
struct SpecArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    servers: Option<u32>,
    #[arg(long)]
    reward: Option<f64>,
    #[arg(long)]
    cost: Option<f64>,
    /// Arrivals per replication.
    #[arg(long)]
    horizon: Option<u64>,
    /// Number of replications.
    #[arg(long)]
    runs: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// alg1|alg2|sampled|thompson|rlearning|oracle|always-admit|never-admit
    #[arg(long)]
    policy: Option<String>,
    /// poly|exp-power|exp-linear|exp-decaying
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    epsilon_bar: Option<f64>,
    #[arg(long)]
    poly_power: Option<f64>,
    #[arg(long)]
    sample_interval: Option<f64>,
    /// event|thinning
    #[arg(long)]
    sim_mode: Option<String>,
    /// Comma-separated arrival counts.
    #[arg(long)]
    checkpoints: Option<String>,
}

impl SpecArgs {
    fn to_spec(&self) -> Result<RunSpec, Error> {
        Ok(RunSpec {
            lambda: self.lambda,
            mu: self.mu,
            servers: self.servers,
            reward: self.reward,
            cost: self.cost,
            horizon: self.horizon,
            runs: self.runs,
            seed: self.seed,
            policy: self.policy.clone(),
            schedule: self.schedule.clone(),
            epsilon: self.epsilon,
            epsilon_bar: self.epsilon_bar,
            poly_power: self.poly_power,
            sample_interval: self.sample_interval,
            sim_mode: self.sim_mode.clone(),
            checkpoints: self.checkpoints.as_deref().map(parse_checkpoint_list).transpose()?,
        })
    }
}

fn run(
    spec: &SpecArgs,
    config: Option<&Path>,
    out: Option<&Path>,
    plot: Option<&Path>,
    trajectory: Option<&Path>,
) -> Result<(), Error> {
    let mut merged = match config {
        Some(path) => parse_run_file(path)?,
        None => RunSpec::default(),
    };
    merged.merge(&spec.to_spec()?);
    let cfg = merged.into_config()?;
    let trace = measure_regret_indexed(&cfg, 0)?;
    match out {
        Some(path) => emit_csv(&trace, path)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            // A closed pipe is not worth an error exit.
            let _ = stdout.write_all(trace_to_csv(&trace).as_bytes());
        }
    }
    if let Some(path) = plot {
        emit_plot_data(&trace, cfg.params.admitting_is_optimal(), path)?;
    }
    if let Some(path) = trajectory {
        let records = record_trajectory(&cfg, cfg.base_seed)?;
        write_trajectory(&records, path)?;
    }
    Ok(())
}

fn sweep(config: &Path, spec: &SpecArgs, out: &Path) -> Result<bool, Error> {
    let sections = parse_sweep_file(config)?;
    if sections.is_empty() {
        return Err(Error::Config(format!("{}: no [sections] to run", config.display())));
    }
    let overrides = spec.to_spec()?;
    let mut cfgs: Vec<(String, RunConfig)> = Vec::with_capacity(sections.len());
    for (name, mut s) in sections {
        s.merge(&overrides);
        let cfg = s
            .into_config()
            .map_err(|e| Error::Config(format!("[{name}]: {e}")))?;
        cfgs.push((name, cfg));
    }
    fs::create_dir_all(out).map_err(|e| Error::Io { path: out.to_path_buf(), source: e })?;
    let mut all_ok = true;
    for (i, (name, cfg)) in cfgs.iter().enumerate() {
        let path = out.join(format!("{name}.csv"));
        match measure_regret_indexed(cfg, i as u64).and_then(|t| emit_csv(&t, &path)) {
            Ok(()) => eprintln!("[{name}] wrote {}", path.display()),
            Err(e) => {
                eprintln!("[{name}] failed: {e}");
                all_ok = false;
            }
        }
    }
    Ok(all_ok)
}

fn oracle(lambda: f64, mu: f64, servers: u32, reward: f64, cost: f64) -> Result<(), Error> {
    ModelParams::new(lambda, mu, servers, reward, cost)?;
    let theta = cost / reward;
    println!("theta = c/R            {theta}");
    println!("single_server_drift    {}", single_server_drift(lambda, mu, theta));
    println!("delta_tilde            {}", delta_tilde(lambda, mu, theta));
    println!("erlang_b               {}", erlang_b(lambda, mu, servers));
    Ok(())
}

fn estimate(path: &Path) -> Result<(), Error> {
    let hist = History::new(read_trajectory(path)?);
    println!("records     {}", hist.len());
    println!("lambda_hat  {}", lambda_hat(&hist)?);
    let mu = match solve_mu_hat(&hist)? {
        MuHat::Finite(v) => v.to_string(),
        MuHat::Zero => "0 (no departures observed)".into(),
        MuHat::Infinity => "inf (no busy servers observed)".into(),
    };
    println!("mu_hat      {mu}");
    Ok(())
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    if e.is_config() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Run { spec, config, out, plot_data, trajectory } => run(
            spec,
            config.as_deref(),
            out.as_deref(),
            plot_data.as_deref(),
            trajectory.as_deref(),
        ),
        Command::Sweep { config, spec, out } => match sweep(config, spec, out) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(2),
            Err(e) => Err(e),
        },
        Command::Oracle { lambda, mu, servers, reward, cost } => oracle(*lambda, *mu, *servers, *reward, *cost),
        Command::Estimate { trajectory } => estimate(trajectory),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => exit_for(&e),
    }
}
