use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use asep_core::config::{
    ConvergeConfig, LiggettConfig, SimulateConfig, SolveConfig, StationaryConfig, TracesConfig,
    ViscousSweepConfig,
};
use asep_hydro::{
    run_converge, run_liggett, run_simulate, run_solve, run_stationary, run_traces,
    run_viscous_sweep, write_field_csv, write_trajectory_csv,
};

#[derive(Parser)]
#[command(name = "asep-hydro", about = "Open-boundary ASEP simulator and PDE solver toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json and CSV files.
    #[arg(long)]
    out: PathBuf,
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replica fan-out.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Skip the standard parameter-range validation.
    #[arg(long)]
    unsafe_params: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// One microscopic trajectory; emits trajectory.csv and coarse.csv.
    Simulate(Common),
    /// One entropy solution; emits field.csv.
    Solve(Common),
    /// Viscosity sweep: critical and slow regimes against their limits.
    ViscousSweep(Common),
    /// Convergence study across lattice sizes; asserts monotone L1 decrease
    /// for the theorem scenarios.
    Converge(Common),
    /// Long-run simulation against the predicted single-shock profile.
    Stationary(Common),
    /// Boundary-trace estimation and admissible-set checks.
    Traces(Common),
    /// Reservoir-rate identity check and boundary-value calculators.
    Liggett(Common),
}

fn load<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_report<T: Serialize>(out: &Path, report: &T) -> anyhow::Result<()> {
    fs::create_dir_all(out)?;
    let path = out.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(report)?)?;
    println!("report: {}", path.display());
    Ok(())
}

fn run(cmd: &Cmd) -> anyhow::Result<bool> {
    match cmd {
        Cmd::Simulate(c) => {
            let mut cfg: SimulateConfig = load(&c.config)?;
            if let Some(seed) = c.seed {
                cfg.seed = seed;
            }
            let (report, sim, field) = run_simulate(&cfg, c.unsafe_params)?;
            fs::create_dir_all(&c.out)?;
            write_trajectory_csv(&c.out.join("trajectory.csv"), &sim)?;
            write_field_csv(&c.out.join("coarse.csv"), &field)?;
            write_report(&c.out, &report)?;
            Ok(report.passed)
        }
        Cmd::Solve(c) => {
            let cfg: SolveConfig = load(&c.config)?;
            let (report, field) = run_solve(&cfg)?;
            fs::create_dir_all(&c.out)?;
            write_field_csv(&c.out.join("field.csv"), &field)?;
            write_report(&c.out, &report)?;
            Ok(report.passed)
        }
        Cmd::ViscousSweep(c) => {
            let cfg: ViscousSweepConfig = load(&c.config)?;
            let report = run_viscous_sweep(&cfg)?;
            fs::create_dir_all(&c.out)?;
            let mut w = csv::Writer::from_path(c.out.join("sweep.csv"))?;
            w.write_record(["regime", "epsilon", "l1"])?;
            for (regime, entries) in [("critical", &report.critical), ("slow", &report.slow)] {
                for e in entries {
                    w.write_record([regime, &e.epsilon.to_string(), &e.l1.to_string()])?;
                }
            }
            w.flush()?;
            write_report(&c.out, &report)?;
            Ok(report.passed)
        }
        Cmd::Converge(c) => {
            let mut cfg: ConvergeConfig = load(&c.config)?;
            if let Some(seed) = c.seed {
                cfg.seed = seed;
            }
            let report = run_converge(&cfg, c.workers, c.unsafe_params)?;
            fs::create_dir_all(&c.out)?;
            let mut w = csv::Writer::from_path(c.out.join("converge.csv"))?;
            w.write_record(["n", "l1_mean", "l1_sem"])?;
            for e in &report.per_n {
                w.write_record([e.n.to_string(), e.l1_mean.to_string(), e.l1_sem.to_string()])?;
            }
            w.flush()?;
            write_report(&c.out, &report)?;
            Ok(report.passed)
        }
        Cmd::Stationary(c) => {
            let mut cfg: StationaryConfig = load(&c.config)?;
            if let Some(seed) = c.seed {
                cfg.seed = seed;
            }
            let report = run_stationary(&cfg, c.unsafe_params)?;
            write_report(&c.out, &report)?;
            Ok(report.passed)
        }
        Cmd::Traces(c) => {
            let mut cfg: TracesConfig = load(&c.config)?;
            if let Some(seed) = c.seed {
                cfg.sim.seed = seed;
            }
            let report = run_traces(&cfg, c.unsafe_params)?;
            fs::create_dir_all(&c.out)?;
            let mut w = csv::Writer::from_path(c.out.join("traces.csv"))?;
            w.write_record(["t", "u_minus", "u_plus"])?;
            for i in 0..report.estimate.times.len() {
                w.write_record([
                    report.estimate.times[i].to_string(),
                    report.estimate.u_minus[i].to_string(),
                    report.estimate.u_plus[i].to_string(),
                ])?;
            }
            w.flush()?;
            write_report(&c.out, &report)?;
            Ok(report.passed)
        }
        Cmd::Liggett(c) => {
            let cfg: LiggettConfig = load(&c.config)?;
            let report = run_liggett(&cfg)?;
            write_report(&c.out, &report)?;
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("asserted properties failed; see report.json");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
