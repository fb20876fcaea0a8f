use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use linbandit::diagnostics::estimate_event_rates;
use linbandit::harness::{
    log_log_slope, run_equivalence_suite, run_to_dir, sweep, DrawSharing, Execution,
    ExperimentConfig, SweepParam,
};

#[derive(Parser)]
#[command(name = "linbandit", version, about = "Linear bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run Monte-Carlo replications and write trace.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `run.base_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `run.replications`.
        #[arg(long)]
        reps: Option<usize>,
        /// Overrides `run.out_dir`. Defaults to `./out`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run replications on the calling thread only.
        #[arg(long)]
        serial: bool,
    },
    /// Check that round-robin ensemble sampling with m = T replays LinPHE.
    Equivalence {
        #[arg(long)]
        config: PathBuf,
    },
    /// Estimate event frequencies over live runs.
    Rates {
        #[arg(long)]
        config: PathBuf,
    },
    /// Repeat a Monte-Carlo study over values of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = parse_param)]
        param: SweepParam,
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        values: Vec<u64>,
        /// Also write the sweep as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_param(s: &str) -> Result<SweepParam, String> {
    s.parse().map_err(|e: linbandit::Error| e.to_string())
}

fn load(path: &Path) -> Result<ExperimentConfig, String> {
    ExperimentConfig::load(path).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Run {
            config,
            seed,
            reps,
            out,
            serial,
        } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.run.base_seed = s;
            }
            if let Some(r) = reps {
                cfg.run.replications = r;
            }
            let dir = out
                .or_else(|| cfg.run.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            let exec = if serial {
                Execution::Serial
            } else {
                Execution::Parallel
            };
            let (summary, trace, json) = run_to_dir(&cfg, &dir, exec).map_err(|e| e.to_string())?;
            let last = summary.checkpoints.last().expect("horizon is at least one");
            println!(
                "{} replications, T = {}: mean regret {:.4} (median {:.4}, q10 {:.4}, q90 {:.4})",
                summary.replications, summary.horizon, last.mean, last.median, last.q10, last.q90
            );
            if let Some(m) = summary.ensemble_size {
                println!("ensemble size {m}");
            }
            println!("regret bound {:.6e}", summary.theoretical_regret_bound);
            println!("wrote {} and {}", trace.display(), json.display());
            Ok(true)
        }
        Command::Equivalence { config } => {
            let cfg = load(&config)?;
            let report =
                run_equivalence_suite(&cfg, DrawSharing::Shared).map_err(|e| e.to_string())?;
            println!(
                "{} {}/{} seeds matched at T = {}",
                if report.passed() { "PASS" } else { "FAIL" },
                report.matched,
                report.seeds,
                report.horizon
            );
            if let Some(d) = &report.first_divergence {
                println!(
                    "first divergence: {}",
                    serde_json::to_string_pretty(d).map_err(|e| e.to_string())?
                );
            }
            Ok(report.passed())
        }
        Command::Rates { config } => {
            let cfg = load(&config)?;
            let report = estimate_event_rates(&cfg, cfg.run.replications, Execution::Parallel)
                .map_err(|e| e.to_string())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?
            );
            Ok(true)
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            let cfg = load(&config)?;
            let points =
                sweep(&cfg, param, &values, Execution::Parallel).map_err(|e| e.to_string())?;
            println!("value,mean_regret,std_error,regret_bound");
            let mut curve = Vec::new();
            for p in &points {
                let mean = p.summary.checkpoints.last().map_or(0.0, |c| c.mean);
                println!(
                    "{},{:.6e},{:.6e},{:.6e}",
                    p.value,
                    mean,
                    p.summary.final_regret_std_error,
                    p.summary.theoretical_regret_bound
                );
                curve.push((p.value as f64, mean));
            }
            if curve.len() >= 2 && curve.iter().all(|&(x, y)| x > 0.0 && y > 0.0) {
                println!("log-log slope {:.4}", log_log_slope(&curve));
            }
            if let Some(path) = out {
                let text = serde_json::to_string_pretty(&points).map_err(|e| e.to_string())?;
                std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
