//! One operator round: a world with a human-controlled robot, advanced one
//! tick at a time from the inputs received during that tick.
//!
//! The live server and [`run_round`] share [`RoundRunner`], so a stored
//! input log replays to the same outcome.

use serde::{Deserialize, Serialize};
use swarm_core::{HumanInput, OperatorAction, Rejection, SimError, SwarmConfig, Turn, World};

use crate::protocol::{snapshot_encode, InputKind, Key, OperatorInput, Snapshot};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSpec {
    pub round_index: u32,
    pub config: SwarmConfig,
    pub human_robot_id: usize,
    /// Seconds.
    pub time_limit: f64,
}

impl RoundSpec {
    pub const STUDY_TIME_LIMIT: f64 = 60.0;

    pub fn config_id(&self) -> Option<u32> {
        self.config.params.grid_id()
    }

    pub fn validate(&self) -> Result<(), String> {
        let mut cfg = self.config.clone();
        cfg.max_trial_duration = self.time_limit;
        cfg.validate().map_err(|e| format!("round {}: {e}", self.round_index))?;
        if self.human_robot_id >= cfg.world.swarm_size {
            return Err(format!(
                "round {}: human robot {} does not exist",
                self.round_index, self.human_robot_id
            ));
        }
        Ok(())
    }
}

/// An operator event stamped with the tick it was applied on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedInput {
    pub tick: u64,
    pub input: OperatorInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round_index: u32,
    pub seed: u64,
    /// All robots inside the target before the limit.
    pub success: bool,
    pub completion_time: Option<f64>,
    pub input_log: Vec<LoggedInput>,
    pub snapshot_count: u64,
}

/// Steering derived from key edges: the most recently pressed key that is
/// still held wins.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HeldKeys {
    held: Vec<Key>,
}

impl HeldKeys {
    pub fn apply(&mut self, input: &OperatorInput) {
        let Some(key) = input.key else { return };
        self.held.retain(|k| *k != key);
        if input.kind == InputKind::KeyDown {
            self.held.push(key);
        }
    }

    pub fn steer(&self) -> Turn {
        match self.held.last() {
            Some(Key::Left) => Turn::Left,
            Some(Key::Right) => Turn::Right,
            None => Turn::None,
        }
    }
}

/// Reduces the events of one tick to the world's per-tick operator input.
/// Key edges update `held`; the last button press of the tick wins.
pub fn sample_tick(held: &mut HeldKeys, inputs: &[OperatorInput]) -> HumanInput {
    let mut action = None;
    for input in inputs.iter().filter(|i| i.is_well_formed()) {
        match input.kind {
            InputKind::KeyDown | InputKind::KeyUp => held.apply(input),
            InputKind::ShareTarget => action = Some(OperatorAction::ShareTarget),
            InputKind::MoveToTarget => action = Some(OperatorAction::MoveToTarget),
        }
    }
    HumanInput {
        steer: held.steer(),
        action,
    }
}

/// What one tick produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub rejection: Option<Rejection>,
    pub finished: bool,
}

pub struct RoundRunner {
    spec: RoundSpec,
    world: World,
    held: HeldKeys,
    log: Vec<LoggedInput>,
    snapshots: u64,
    limit: u64,
}

impl RoundRunner {
    pub fn new(spec: RoundSpec) -> Result<Self, SimError> {
        let mut config = spec.config.clone();
        config.max_trial_duration = spec.time_limit;
        let limit = config.max_ticks();
        let mut world = World::new(config)?;
        world.set_operator(spec.human_robot_id)?;
        Ok(Self {
            spec,
            world,
            held: HeldKeys::default(),
            log: Vec::new(),
            // the initial state counts as the first snapshot
            snapshots: 1,
            limit,
        })
    }

    pub fn spec(&self) -> &RoundSpec {
        &self.spec
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn tick(&self) -> u64 {
        self.world.tick()
    }

    pub fn is_finished(&self) -> bool {
        self.world.completed_at().is_some() || self.world.tick() >= self.limit
    }

    pub fn snapshot(&self, hide_until_informed: bool) -> Snapshot {
        snapshot_encode(&self.world, self.spec.round_index, self.spec.time_limit, hide_until_informed)
    }

    /// Applies the events received since the previous tick and advances the
    /// world once. Does nothing after the round has finished.
    pub fn step(&mut self, inputs: Vec<OperatorInput>) -> TickOutput {
        if self.is_finished() {
            return TickOutput {
                rejection: None,
                finished: true,
            };
        }
        let tick = self.world.tick();
        let human = sample_tick(&mut self.held, &inputs);
        self.log.extend(inputs.into_iter().map(|input| LoggedInput { tick, input }));
        let report = self.world.step(human);
        self.snapshots += 1;
        TickOutput {
            rejection: report.rejection,
            finished: self.is_finished(),
        }
    }

    pub fn input_log(&self) -> &[LoggedInput] {
        &self.log
    }

    pub fn outcome(&self) -> RoundOutcome {
        let completion_time = self.world.completion_time();
        RoundOutcome {
            round_index: self.spec.round_index,
            seed: self.spec.config.seed,
            success: completion_time.is_some_and(|t| t <= self.spec.time_limit),
            completion_time,
            input_log: self.log.clone(),
            snapshot_count: self.snapshots,
        }
    }
}

/// Replays a round offline from its input log.
pub fn run_round(spec: &RoundSpec, log: &[LoggedInput]) -> Result<RoundOutcome, SimError> {
    let mut runner = RoundRunner::new(spec.clone())?;
    let mut next = 0;
    while !runner.is_finished() {
        let tick = runner.tick();
        let start = next;
        while next < log.len() && log[next].tick <= tick {
            next += 1;
        }
        let inputs = log[start..next].iter().map(|l| l.input.clone()).collect();
        runner.step(inputs);
    }
    Ok(runner.outcome())
}
