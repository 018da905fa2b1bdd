//! Distribution and regression summary of a sweep.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use swarm_core::BehaviorParams;

use crate::stats::{ols_standardized, Coefficient, StatsError};
use crate::trial::TrialResult;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigSummary {
    pub config_id: u32,
    pub params: BehaviorParams,
    pub trials: usize,
    pub timeouts: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub trials: usize,
    /// Trials that hit the limit; they enter every statistic at `limit`.
    pub timeouts: usize,
    pub limit: f64,
    pub configs: Vec<ConfigSummary>,
    /// Mean of the per-config means.
    pub grand_mean: f64,
    pub min_config_mean: f64,
    pub max_config_mean: f64,
    pub fastest_trial: f64,
    pub slowest_trial: f64,
    /// Completion time on z-scored speed, separation and broadcast; a
    /// parameter held fixed across the results has no row.
    pub regression: Vec<Coefficient>,
    pub r_squared: f64,
}

impl SweepSummary {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.regression.iter().find(|c| c.name == name)
    }
}

/// Summarizes `results`, censoring timeouts at `limit` seconds.
pub fn fit_performance_model(results: &[TrialResult], limit: f64) -> Result<SweepSummary, StatsError> {
    let time = |r: &TrialResult| r.completion_time.unwrap_or(limit);
    let mut groups: BTreeMap<u32, Vec<&TrialResult>> = BTreeMap::new();
    for r in results {
        groups.entry(r.config_id).or_default().push(r);
    }
    let configs: Vec<ConfigSummary> = groups
        .into_iter()
        .map(|(config_id, rows)| {
            let times: Vec<f64> = rows.iter().map(|r| time(r)).collect();
            ConfigSummary {
                config_id,
                params: rows[0].params,
                trials: rows.len(),
                timeouts: rows.iter().filter(|r| r.timed_out()).count(),
                mean: times.iter().sum::<f64>() / times.len() as f64,
                min: times.iter().copied().fold(f64::INFINITY, f64::min),
                max: times.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();

    let y: Vec<f64> = results.iter().map(time).collect();
    let speed: Vec<f64> = results.iter().map(|r| r.params.speed).collect();
    let separation: Vec<f64> = results.iter().map(|r| r.params.separation).collect();
    let broadcast: Vec<f64> = results.iter().map(|r| r.params.broadcast).collect();
    // a custom grid may hold a parameter fixed; it is left out of the model
    let predictors: Vec<(&str, &[f64])> = [
        ("speed", speed.as_slice()),
        ("separation", separation.as_slice()),
        ("broadcast", broadcast.as_slice()),
    ]
    .into_iter()
    .filter(|(_, x)| x.iter().any(|&v| v != x[0]))
    .collect();
    let (regression, r_squared) = if predictors.is_empty() {
        (Vec::new(), 0.0)
    } else {
        let fit = ols_standardized(&y, &predictors)?;
        (fit.coefficients, fit.r_squared)
    };

    let means: Vec<f64> = configs.iter().map(|c| c.mean).collect();
    Ok(SweepSummary {
        trials: results.len(),
        timeouts: results.iter().filter(|r| r.timed_out()).count(),
        limit,
        grand_mean: means.iter().sum::<f64>() / means.len() as f64,
        min_config_mean: means.iter().copied().fold(f64::INFINITY, f64::min),
        max_config_mean: means.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        fastest_trial: y.iter().copied().fold(f64::INFINITY, f64::min),
        slowest_trial: y.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        configs,
        regression,
        r_squared,
    })
}

impl fmt::Display for SweepSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "trials {}  configs {}  timeouts {} (counted at {:.0} s)",
            self.trials,
            self.configs.len(),
            self.timeouts,
            self.limit
        )?;
        writeln!(
            f,
            "per-config mean completion: min {:.1} s  max {:.1} s  grand mean {:.1} s",
            self.min_config_mean, self.max_config_mean, self.grand_mean
        )?;
        writeln!(
            f,
            "single trials: fastest {:.1} s  slowest {:.1} s",
            self.fastest_trial, self.slowest_trial
        )?;
        if self.regression.is_empty() {
            return write!(f, "no parameter varies; regression skipped");
        }
        writeln!(f)?;
        writeln!(f, "{:<12} {:>10} {:>9} {:>9} {:>11}", "term", "estimate", "std.err", "t", "p")?;
        for c in &self.regression {
            writeln!(
                f,
                "{:<12} {:>10.3} {:>9.3} {:>9.2} {:>11.3e}",
                c.name, c.estimate, c.std_error, c.t, c.p
            )?;
        }
        write!(f, "R² = {:.3}", self.r_squared)
    }
}
