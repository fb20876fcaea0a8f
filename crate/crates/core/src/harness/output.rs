//! Trace CSV and summary JSON.
//!
//! Reals are written in scientific notation with 17 significant digits, so
//! every value parses back to the same `f64`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc::sync_channel;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::montecarlo::{checkpoints, summarize, Digest, Execution, Summary};
use super::sim::{run_replication_in, RunRecord};
use crate::{Error, Result};

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";

const BASE_COLUMNS: &str = "replication,t,arm,model,reward,instant_regret,cum_regret";
const MONITOR_COLUMNS: &str = ",conc_ok,anticonc_ok,optimism_ok";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn trace_header(with_monitors: bool) -> String {
    if with_monitors {
        format!("{BASE_COLUMNS}{MONITOR_COLUMNS}")
    } else {
        BASE_COLUMNS.to_string()
    }
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trace_rows<W: Write>(
    out: &mut W,
    record: &RunRecord,
    with_monitors: bool,
) -> std::io::Result<()> {
    for s in &record.steps {
        let model = s.model.map_or(-1, |m| m as i64);
        write!(
            out,
            "{},{},{},{},{},{},{}",
            record.replication,
            s.t,
            s.arm,
            model,
            real(s.reward),
            real(s.instant_regret),
            real(s.cum_regret)
        )?;
        if with_monitors {
            let f = s.flags.unwrap_or(super::sim::StepFlags {
                concentration_ok: false,
                perturb_concentration_ok: false,
                anti_conc_ok: false,
                optimism_ok: false,
            });
            write!(
                out,
                ",{},{},{}",
                f.concentration_ok as u8, f.anti_conc_ok as u8, f.optimism_ok as u8
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_trace_csv(path: &Path, records: &[RunRecord], with_monitors: bool) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{}", trace_header(with_monitors)).map_err(io_err(path))?;
    for r in records {
        write_trace_rows(&mut out, r, with_monitors).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

pub fn summary_json(summary: &Summary) -> String {
    let mut text = serde_json::to_string_pretty(summary).expect("summary serializes");
    text.push('\n');
    text
}

pub fn write_summary_json(path: &Path, summary: &Summary) -> Result<()> {
    std::fs::write(path, summary_json(summary)).map_err(io_err(path))
}

pub fn read_summary_json(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Runs every replication and writes `trace.csv` and `summary.json` under
/// `dir`. Replications are produced by the work pool and handed through a
/// bounded queue to one writer thread, which restores replication order.
pub fn run_to_dir(
    config: &ExperimentConfig,
    dir: &Path,
    execution: Execution,
) -> Result<(Summary, PathBuf, PathBuf)> {
    config.validate()?;
    let env = config.build_env()?;
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let trace_path = dir.join(TRACE_FILE);
    let summary_path = dir.join(SUMMARY_FILE);
    let with_monitors = config.run.diagnostics.enabled();
    let grid = checkpoints(config.run.horizon);
    let reps = config.run.replications;

    let (tx, rx) = sync_channel::<(usize, RunRecord)>(16);
    let digests = std::thread::scope(|scope| -> Result<Vec<Digest>> {
        let writer = scope.spawn(|| -> Result<Vec<Digest>> {
            let file = File::create(&trace_path).map_err(io_err(&trace_path))?;
            let mut out = BufWriter::new(file);
            writeln!(out, "{}", trace_header(with_monitors)).map_err(io_err(&trace_path))?;
            let mut pending = BTreeMap::new();
            let mut next = 0usize;
            let mut digests = Vec::with_capacity(reps);
            for (rep, record) in rx {
                pending.insert(rep, record);
                while let Some(record) = pending.remove(&next) {
                    write_trace_rows(&mut out, &record, with_monitors)
                        .map_err(io_err(&trace_path))?;
                    digests.push(Digest::of(&record, &grid));
                    next += 1;
                }
            }
            out.flush().map_err(io_err(&trace_path))?;
            Ok(digests)
        });
        let produced = match execution {
            Execution::Serial => (0..reps).try_for_each(|rep| {
                let rec = run_replication_in(config, &env, rep)?;
                tx.send((rep, rec))
                    .map_err(|_| Error::InvalidState("trace writer stopped".into()))
            }),
            Execution::Parallel => {
                (0..reps)
                    .into_par_iter()
                    .try_for_each_with(tx.clone(), |tx, rep| {
                        let rec = run_replication_in(config, &env, rep)?;
                        tx.send((rep, rec))
                            .map_err(|_| Error::InvalidState("trace writer stopped".into()))
                    })
            }
        };
        drop(tx);
        let written = writer.join().expect("writer thread panicked");
        produced?;
        written
    })?;
    if digests.len() != reps {
        return Err(Error::InvalidState(format!(
            "wrote {} of {reps} replications",
            digests.len()
        )));
    }
    let summary = summarize(config, &digests)?;
    write_summary_json(&summary_path, &summary)?;
    Ok((summary, trace_path, summary_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::montecarlo::run_monte_carlo;

    fn cfg(diagnostics: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(&format!(
            r#"
[env]
dim = 2
arm_count = 4
sigma = 1.0

[policy]
kind = "phe"

[run]
horizon = 20
replications = 5
base_seed = 1
diagnostics = "{diagnostics}"
"#
        ))
        .unwrap()
    }

    #[test]
    fn headers_follow_diagnostics() {
        let dir = tempfile::tempdir().unwrap();
        run_to_dir(&cfg("off"), dir.path(), Execution::Serial).unwrap();
        let text = std::fs::read_to_string(dir.path().join(TRACE_FILE)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), BASE_COLUMNS);
        assert_eq!(lines.next().unwrap().split(',').count(), 7);
        assert_eq!(text.lines().count(), 1 + 5 * 20);

        run_to_dir(&cfg("monitors"), dir.path(), Execution::Serial).unwrap();
        let text = std::fs::read_to_string(dir.path().join(TRACE_FILE)).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "replication,t,arm,model,reward,instant_regret,cum_regret,conc_ok,anticonc_ok,optimism_ok"
        );
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 10);
    }

    #[test]
    fn reals_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            assert_eq!(real(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn summary_parses_back() {
        let dir = tempfile::tempdir().unwrap();
        let (summary, _, path) =
            run_to_dir(&cfg("monitors"), dir.path(), Execution::Parallel).unwrap();
        assert_eq!(read_summary_json(&path).unwrap(), summary);
    }

    #[test]
    fn streaming_writer_matches_batch_writer() {
        let dir = tempfile::tempdir().unwrap();
        let config = cfg("monitors");
        run_to_dir(&config, dir.path(), Execution::Parallel).unwrap();
        let streamed = std::fs::read(dir.path().join(TRACE_FILE)).unwrap();
        let mc = run_monte_carlo(&config, Execution::Serial).unwrap();
        let batch = dir.path().join("batch.csv");
        write_trace_csv(&batch, &mc.records, true).unwrap();
        assert_eq!(streamed, std::fs::read(&batch).unwrap());
        let summary = std::fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
        assert_eq!(summary, summary_json(&mc.summary));
    }
}
