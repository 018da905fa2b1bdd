//! Parameter sweeps over the configuration grid, with a resumable CSV store.
//!
//! Trial seeds are a pure function of (master seed, config id, repetition),
//! and rows are always written in plan order, so the output bytes do not
//! depend on thread scheduling or on how often a sweep was interrupted.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use swarm_core::config::{BROADCAST_LEVELS, SEPARATION_LEVELS, SPEED_LEVELS};
use swarm_core::rng::mix;
use swarm_core::{BehaviorParams, SwarmConfig};

use crate::trial::{run_trial_with_id, TrialResult};
use crate::HarnessError;

/// Robots per team, and therefore per-robot columns per row.
pub const ROBOT_COLUMNS: usize = 10;

/// One team configuration in a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub config_id: u32,
    pub params: BehaviorParams,
}

/// Cartesian product of parameter levels. Points on the standard grid keep
/// their grid id; anything else is numbered from 125 upward.
pub fn grid(speeds: &[f64], separations: &[f64], broadcasts: &[f64]) -> Vec<GridPoint> {
    let mut next_custom = 125;
    let mut points = Vec::new();
    for &v in speeds {
        for &d in separations {
            for &t in broadcasts {
                let params = BehaviorParams::new(v, d, t);
                let config_id = params.grid_id().unwrap_or_else(|| {
                    next_custom += 1;
                    next_custom - 1
                });
                points.push(GridPoint { config_id, params });
            }
        }
    }
    points.sort_by_key(|p| p.config_id);
    points
}

/// All 125 configurations.
pub fn full_grid() -> Vec<GridPoint> {
    grid(&SPEED_LEVELS, &SEPARATION_LEVELS, &BROADCAST_LEVELS)
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub grid: Vec<GridPoint>,
    pub seeds_per_config: u32,
    pub master_seed: u64,
    pub max_trial_duration: f64,
}

impl SweepSpec {
    pub fn new(grid: Vec<GridPoint>, seeds_per_config: u32, master_seed: u64) -> Self {
        Self {
            grid,
            seeds_per_config,
            master_seed,
            max_trial_duration: SwarmConfig::HEADLESS_LIMIT,
        }
    }

    /// Every trial of the sweep, in output order.
    pub fn plan(&self) -> Vec<(GridPoint, u64)> {
        self.grid
            .iter()
            .flat_map(|point| {
                (0..self.seeds_per_config).map(move |rep| (*point, trial_seed(self.master_seed, point.config_id, rep)))
            })
            .collect()
    }

    fn config(&self, point: &GridPoint, seed: u64) -> SwarmConfig {
        SwarmConfig::new(point.params, seed).with_limit(self.max_trial_duration)
    }
}

pub fn trial_seed(master: u64, config_id: u32, rep: u32) -> u64 {
    mix(mix(master, config_id as u64), rep as u64)
}

fn run_one(spec: &SweepSpec, point: &GridPoint, seed: u64) -> Result<TrialResult, HarnessError> {
    Ok(run_trial_with_id(&spec.config(point, seed), point.config_id)?)
}

/// Runs the whole sweep in memory.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<TrialResult>, HarnessError> {
    if spec.seeds_per_config == 0 {
        return Err(HarnessError::Invalid("seeds per config must be at least 1".into()));
    }
    spec.plan()
        .par_iter()
        .map(|(point, seed)| run_one(spec, point, *seed))
        .collect()
}

/// What a resumable sweep did.
#[derive(Debug, Clone)]
pub struct SweepRun {
    /// Every row now in the file, in output order.
    pub results: Vec<TrialResult>,
    /// Trials found in the file and not re-run.
    pub reused: usize,
    pub ran: usize,
}

/// Runs the trials of `spec` that `path` does not already hold, appending each
/// one as it finishes, then rewrites the file in plan order.
pub fn run_sweep_to_csv(spec: &SweepSpec, path: &Path) -> Result<SweepRun, HarnessError> {
    if spec.seeds_per_config == 0 {
        return Err(HarnessError::Invalid("seeds per config must be at least 1".into()));
    }
    let existing = if path.exists() { read_csv(File::open(path)?)? } else { Vec::new() };
    let mut done: BTreeMap<(u32, u64), TrialResult> =
        existing.into_iter().map(|r| ((r.config_id, r.seed), r)).collect();
    let plan = spec.plan();
    let todo: Vec<&(GridPoint, u64)> = plan
        .iter()
        .filter(|(p, seed)| !done.contains_key(&(p.config_id, *seed)))
        .collect();
    let reused = plan.len() - todo.len();

    let needs_header = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if needs_header {
        writer.write_record(header())?;
        writer.flush()?;
    }
    let writer = Mutex::new(writer);
    let fresh: Vec<TrialResult> = todo
        .par_iter()
        .map(|(point, seed)| {
            let result = run_one(spec, point, *seed)?;
            let mut w = writer.lock().expect("writer lock");
            w.write_record(record(&result))?;
            w.flush()?;
            Ok(result)
        })
        .collect::<Result<_, HarnessError>>()?;
    drop(writer);
    let ran = fresh.len();
    for r in fresh {
        done.insert((r.config_id, r.seed), r);
    }

    let mut results: Vec<TrialResult> = plan
        .iter()
        .filter_map(|(p, seed)| done.remove(&(p.config_id, *seed)))
        .collect();
    // rows from other sweeps sharing the file are kept after the plan
    results.extend(done.into_values());

    let tmp = path.with_extension("csv.tmp");
    write_csv(&results, File::create(&tmp)?)?;
    fs::rename(&tmp, path)?;
    Ok(SweepRun { results, reused, ran })
}

pub fn header() -> Vec<String> {
    let mut h: Vec<String> = [
        "config_id",
        "speed_cmps",
        "separation_cm",
        "broadcast_s",
        "seed",
        "completion_s",
    ]
    .map(String::from)
    .to_vec();
    h.extend((0..ROBOT_COLUMNS).map(|i| format!("informed_at_{i}")));
    h.extend((0..ROBOT_COLUMNS).map(|i| format!("entry_at_{i}")));
    h
}

fn seconds(t: Option<f64>) -> String {
    t.map(|t| format!("{t:.1}")).unwrap_or_default()
}

fn record(r: &TrialResult) -> Vec<String> {
    let mut row = vec![
        r.config_id.to_string(),
        r.params.speed.to_string(),
        r.params.separation.to_string(),
        r.params.broadcast.to_string(),
        r.seed.to_string(),
        seconds(r.completion_time),
    ];
    let column = |xs: &[Option<f64>], i: usize| seconds(xs.get(i).copied().flatten());
    row.extend((0..ROBOT_COLUMNS).map(|i| column(&r.informed_at, i)));
    row.extend((0..ROBOT_COLUMNS).map(|i| column(&r.entry_at, i)));
    row
}

pub fn write_csv(results: &[TrialResult], out: impl Write) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header())?;
    for r in results {
        w.write_record(record(r))?;
    }
    w.flush()?;
    Ok(())
}

fn bad_row(line: u64, what: &str) -> HarnessError {
    HarnessError::Invalid(format!("results row {line}: {what}"))
}

pub fn read_csv(input: impl Read) -> Result<Vec<TrialResult>, HarnessError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i as u64 + 2;
        if row.len() != 6 + 2 * ROBOT_COLUMNS {
            return Err(bad_row(line, "wrong number of columns"));
        }
        let num = |k: usize| -> Result<f64, HarnessError> {
            row[k].parse().map_err(|_| bad_row(line, "malformed number"))
        };
        let opt = |k: usize| -> Result<Option<f64>, HarnessError> {
            if row[k].is_empty() {
                Ok(None)
            } else {
                num(k).map(Some)
            }
        };
        out.push(TrialResult {
            config_id: row[0].parse().map_err(|_| bad_row(line, "malformed config id"))?,
            params: BehaviorParams::new(num(1)?, num(2)?, num(3)?),
            seed: row[4].parse().map_err(|_| bad_row(line, "malformed seed"))?,
            completion_time: opt(5)?,
            informed_at: (0..ROBOT_COLUMNS).map(|i| opt(6 + i)).collect::<Result<_, _>>()?,
            entry_at: (0..ROBOT_COLUMNS)
                .map(|i| opt(6 + ROBOT_COLUMNS + i))
                .collect::<Result<_, _>>()?,
            deliveries: 0,
        });
    }
    Ok(out)
}
