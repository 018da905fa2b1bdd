//! Single headless trials.

use std::io::Write;

use serde::{Deserialize, Serialize};
use swarm_core::{BehaviorParams, HumanInput, SimError, SwarmConfig, World};

use crate::trajectory::Frame;

/// Outcome of one autonomous trial. Times are seconds since trial start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub config_id: u32,
    pub params: BehaviorParams,
    pub seed: u64,
    /// `None` when the trial hit its time limit.
    pub completion_time: Option<f64>,
    pub informed_at: Vec<Option<f64>>,
    pub entry_at: Vec<Option<f64>>,
    /// Total target reports delivered; not part of the CSV.
    #[serde(skip)]
    pub deliveries: u64,
}

impl TrialResult {
    pub fn timed_out(&self) -> bool {
        self.completion_time.is_none()
    }
}

/// Steps `world` until completion or the configured limit.
pub fn run_world(world: &mut World, mut on_tick: impl FnMut(&World)) -> Option<u64> {
    let limit = world.config().max_ticks();
    on_tick(world);
    while world.completed_at().is_none() && world.tick() < limit {
        world.step(HumanInput::default());
        on_tick(world);
    }
    world.completed_at()
}

pub fn result_from_world(world: &World, config_id: u32) -> TrialResult {
    let c = world.constants();
    let secs = |t: Option<u64>| t.map(|t| c.tick_to_seconds(t));
    TrialResult {
        config_id,
        params: world.config().params,
        seed: world.config().seed,
        completion_time: secs(world.completed_at()),
        informed_at: world.robots().iter().map(|r| secs(r.informed_at)).collect(),
        entry_at: world.entered_at().iter().map(|&t| secs(t)).collect(),
        deliveries: world.messages_delivered(),
    }
}

fn config_id(config: &SwarmConfig) -> u32 {
    config.params.grid_id().unwrap_or(u32::MAX)
}

/// Runs one fully autonomous trial.
pub fn run_trial(config: &SwarmConfig) -> Result<TrialResult, SimError> {
    run_trial_with_id(config, config_id(config))
}

pub fn run_trial_with_id(config: &SwarmConfig, id: u32) -> Result<TrialResult, SimError> {
    let mut world = World::new(config.clone())?;
    run_world(&mut world, |_| {});
    Ok(result_from_world(&world, id))
}

/// Runs a trial and writes one JSON line per tick to `out`.
pub fn run_trial_recorded(config: &SwarmConfig, out: &mut impl Write) -> Result<TrialResult, crate::HarnessError> {
    let mut world = World::new(config.clone())?;
    let mut io_error = None;
    run_world(&mut world, |w| {
        if io_error.is_none() {
            let line = serde_json::to_string(&Frame::capture(w)).expect("frame serializes");
            if let Err(e) = writeln!(out, "{line}") {
                io_error = Some(e);
            }
        }
    });
    if let Some(e) = io_error {
        return Err(e.into());
    }
    Ok(result_from_world(&world, config_id(config)))
}
