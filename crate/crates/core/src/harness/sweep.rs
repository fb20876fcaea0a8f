use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::{AutoOr, ExperimentConfig};
use super::montecarlo::{run_monte_carlo, Execution, Summary};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    /// Horizon.
    T,
    /// Dimension.
    D,
    /// Ensemble size.
    M,
    /// Number of arms.
    K,
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" => Ok(SweepParam::T),
            "d" => Ok(SweepParam::D),
            "m" => Ok(SweepParam::M),
            "K" => Ok(SweepParam::K),
            other => Err(Error::InvalidArgument(format!(
                "unknown sweep parameter {other:?}; expected one of T, d, m, K"
            ))),
        }
    }
}

impl SweepParam {
    pub fn apply(self, config: &ExperimentConfig, value: u64) -> Result<ExperimentConfig> {
        let mut c = config.clone();
        match self {
            SweepParam::T => c.run.horizon = value,
            SweepParam::D => c.env.dim = value as usize,
            SweepParam::M => c.policy.ensemble_size = AutoOr::Value(value as usize),
            SweepParam::K => c.env.arm_count = value as usize,
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: u64,
    pub summary: Summary,
}

/// One Monte-Carlo study per value, all other settings held fixed.
pub fn sweep(
    config: &ExperimentConfig,
    param: SweepParam,
    values: &[u64],
    execution: Execution,
) -> Result<Vec<SweepPoint>> {
    values
        .iter()
        .map(|&value| {
            let c = param.apply(config, value)?;
            log::info!("sweep {param:?} = {value}");
            Ok(SweepPoint {
                value,
                summary: run_monte_carlo(&c, execution)?.summary,
            })
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_params() {
        assert_eq!("T".parse::<SweepParam>().unwrap(), SweepParam::T);
        assert_eq!("d".parse::<SweepParam>().unwrap(), SweepParam::D);
        assert!("x".parse::<SweepParam>().is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&x: &f64| (x, 3.0 * x.powf(0.5)))
            .collect();
        assert!((log_log_slope(&pts) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sweep_over_horizon() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
[env]
dim = 2
arm_count = 4
sigma = 0.5
[policy]
kind = "ensemble"
ensemble_size = 4
[run]
horizon = 10
replications = 3
"#,
        )
        .unwrap();
        let pts = sweep(&cfg, SweepParam::T, &[5, 20], Execution::Serial).unwrap();
        assert_eq!(pts[0].summary.horizon, 5);
        assert_eq!(pts[1].summary.horizon, 20);
        assert!(SweepParam::M.apply(&cfg, 0).is_err());
    }
}
