//! Experiment orchestration: configuration, seeded replications, Monte-Carlo
//! aggregation and persistence.
//!
//! # Seeding
//!
//! Every random quantity is a pure function of the base seed and a key, via
//! [`derive_seed`](crate::perturb::stream::derive_seed):
//!
//! | stream | key |
//! |---|---|
//! | replication `r` seed | `[REPLICATION, r]` under the base seed |
//! | reward noise at step `t` | `[NOISE, t]` under the replication seed |
//! | model sampling at step `t` | `[SAMPLER, t]` (`[THOMPSON, t]` for LinTS) |
//! | perturbation stream | `[PERTURBATION]` under the replication seed |
//! | random arms and `θ*` | `[ENVIRONMENT]` under `env.seed`, else the base seed |

mod config;
mod equivalence;
mod montecarlo;
mod output;
mod sim;
mod sweep;

pub use config::{
    ArmMode, AutoOr, EnvConfig, ExperimentConfig, PolicyConfig, PolicyKind, RunConfig,
};
pub use equivalence::{run_equivalence_suite, Divergence, DrawSharing, EquivalenceReport};
pub use montecarlo::{
    checkpoints, quantile, run_monte_carlo, run_replications, summarize, Checkpoint, Digest,
    Execution, MonitorRates, MonteCarlo, Summary,
};
pub use output::{
    read_summary_json, run_to_dir, summary_json, trace_header, write_summary_json, write_trace_csv,
    write_trace_rows, SUMMARY_FILE, TRACE_FILE,
};
pub use sim::{
    is_perturbed, run_replication, run_replication_in, simulate, MonitorCounts, RunRecord,
    RunSummary, StepFlags, StepRecord,
};
pub use sweep::{log_log_slope, sweep, SweepParam, SweepPoint};
