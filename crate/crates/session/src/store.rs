//! Per-session record files under `<data_dir>/sessions/<id>/`:
//!
//! - `plan.json`: the round plan, written once
//! - `state.json`: progress through the plan, replaced atomically
//! - `outcomes.jsonl`: one [`OutcomeRecord`] per completed round
//! - `ratings.jsonl`: one [`RatingRecord`] per rated round
//! - `inputs.jsonl`: one [`AttemptRecord`] per round attempt, including
//!   attempts abandoned on disconnect
//!
//! The `.jsonl` files are only ever appended to.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::round::{LoggedInput, RoundOutcome, RoundSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub session_id: String,
    pub round_index: u32,
    pub config_id: Option<u32>,
    pub warmth: u8,
    pub competence: u8,
    pub joint_effort: u8,
    /// Server receive time, ms since the Unix epoch.
    pub submitted_at: u64,
}

/// A finished round together with the exact spec it was played with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub spec: RoundSpec,
    pub outcome: RoundOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptStatus {
    Completed,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub round_index: u32,
    /// How many earlier attempts of this round were abandoned.
    pub restart: u32,
    pub seed: u64,
    pub status: AttemptStatus,
    pub ticks: u64,
    /// Largest deviation of a tick interval from nominal, ms.
    pub max_jitter_ms: f64,
    pub inputs: Vec<LoggedInput>,
}

#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

impl SessionStore {
    pub fn create(root: &Path, id: &str) -> io::Result<Self> {
        let dir = root.join("sessions").join(id);
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn open(dir: PathBuf) -> Self {
        Self { dir }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_json(&self, name: &str, value: &impl Serialize) -> io::Result<()> {
        let tmp = self.dir.join(format!("{name}.tmp"));
        let mut f = File::create(&tmp)?;
        serde_json::to_writer_pretty(&mut f, value)?;
        f.write_all(b"\n")?;
        f.sync_all()?;
        fs::rename(tmp, self.dir.join(name))
    }

    pub fn read_json<T: DeserializeOwned>(&self, name: &str) -> io::Result<T> {
        let f = File::open(self.dir.join(name))?;
        Ok(serde_json::from_reader(BufReader::new(f))?)
    }

    pub fn append(&self, name: &str, value: &impl Serialize) -> io::Result<()> {
        let mut line = serde_json::to_vec(value)?;
        line.push(b'\n');
        let mut f = OpenOptions::new().create(true).append(true).open(self.dir.join(name))?;
        f.write_all(&line)?;
        f.sync_data()
    }

    pub fn read_lines<T: DeserializeOwned>(&self, name: &str) -> io::Result<Vec<T>> {
        let f = match File::open(self.dir.join(name)) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        let mut out = Vec::new();
        for line in BufReader::new(f).lines() {
            let line = line?;
            if !line.trim().is_empty() {
                out.push(serde_json::from_str(&line)?);
            }
        }
        Ok(out)
    }
}

pub const PLAN: &str = "plan.json";
pub const STATE: &str = "state.json";
pub const OUTCOMES: &str = "outcomes.jsonl";
pub const RATINGS: &str = "ratings.jsonl";
pub const INPUTS: &str = "inputs.jsonl";
