//! World constants, behavior parameters and trial configuration.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Speed levels of the experiment grid, cm/s.
pub const SPEED_LEVELS: [f64; 5] = [5.0, 7.5, 10.0, 12.5, 15.0];
/// Separation levels of the experiment grid, cm.
pub const SEPARATION_LEVELS: [f64; 5] = [4.0, 12.0, 20.0, 28.0, 36.0];
/// Broadcast duration levels of the experiment grid, s.
pub const BROADCAST_LEVELS: [f64; 5] = [0.0, 4.0, 8.0, 12.0, 16.0];

/// Physical constants shared by every robot and trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConstants {
    pub arena_side: f64,
    pub robot_diameter: f64,
    /// Center-to-center range of the range-and-bearing board.
    pub comm_range: f64,
    /// Reach of the proximity sensors, measured from the body perimeter.
    pub proximity_range: f64,
    pub proximity_sensor_count: usize,
    pub target_radius: f64,
    pub target_appear_time: f64,
    pub swarm_size: usize,
    pub tick_duration: f64,
    /// Rotation-in-place rate, rad/s.
    pub angular_speed: f64,
    /// Largest tolerated pairwise interpenetration after collision resolution.
    pub overlap_tolerance: f64,
}

impl Default for WorldConstants {
    fn default() -> Self {
        Self {
            arena_side: 150.0,
            robot_diameter: 7.0,
            comm_range: 36.0,
            proximity_range: 10.0,
            proximity_sensor_count: 8,
            target_radius: 25.0,
            target_appear_time: 3.0,
            swarm_size: 10,
            tick_duration: 0.1,
            angular_speed: PI,
            overlap_tolerance: 0.1,
        }
    }
}

impl WorldConstants {
    pub fn robot_radius(&self) -> f64 {
        self.robot_diameter / 2.0
    }

    /// Number of whole ticks covering `seconds` (rounded up).
    pub fn ticks_ceil(&self, seconds: f64) -> u64 {
        let ratio = seconds / self.tick_duration;
        // absorb representation error, e.g. 8.0 / 0.1 = 80.00000000000001
        let rounded = ratio.round();
        if (ratio - rounded).abs() < 1e-9 {
            rounded.max(0.0) as u64
        } else {
            ratio.ceil().max(0.0) as u64
        }
    }

    pub fn ticks_round(&self, seconds: f64) -> u64 {
        (seconds / self.tick_duration).round().max(0.0) as u64
    }

    /// Seconds at `tick`. With a whole number of ticks per second this is the
    /// double nearest the exact decimal, so printed times parse back bit-exact.
    pub fn tick_to_seconds(&self, tick: u64) -> f64 {
        let rate = (1.0 / self.tick_duration).round();
        if rate >= 1.0 && (rate * self.tick_duration - 1.0).abs() < 1e-12 {
            tick as f64 / rate
        } else {
            tick as f64 * self.tick_duration
        }
    }

    pub fn appear_tick(&self) -> u64 {
        self.ticks_ceil(self.target_appear_time)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("arena_side", self.arena_side),
            ("robot_diameter", self.robot_diameter),
            ("comm_range", self.comm_range),
            ("proximity_range", self.proximity_range),
            ("target_radius", self.target_radius),
            ("tick_duration", self.tick_duration),
            ("angular_speed", self.angular_speed),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::NotPositive(name));
            }
        }
        if !(self.target_appear_time.is_finite() && self.target_appear_time >= 0.0) {
            return Err(ConfigError::NotPositive("target_appear_time"));
        }
        if !(self.overlap_tolerance.is_finite() && self.overlap_tolerance >= 0.0) {
            return Err(ConfigError::NotPositive("overlap_tolerance"));
        }
        if self.swarm_size == 0 {
            return Err(ConfigError::NotPositive("swarm_size"));
        }
        if self.proximity_sensor_count == 0 {
            return Err(ConfigError::NotPositive("proximity_sensor_count"));
        }
        if self.comm_range <= self.robot_diameter {
            return Err(ConfigError::Inconsistent(
                "comm_range must exceed robot_diameter",
            ));
        }
        if self.target_radius >= self.arena_side / 2.0 {
            return Err(ConfigError::Inconsistent("target region does not fit the arena"));
        }
        if self.robot_diameter >= self.arena_side {
            return Err(ConfigError::Inconsistent("robot does not fit the arena"));
        }
        Ok(())
    }
}

/// The three team parameters varied across the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorParams {
    /// Forward speed v, cm/s.
    pub speed: f64,
    /// Desired separation d, cm (center to center).
    pub separation: f64,
    /// Broadcast duration T, s.
    pub broadcast: f64,
}

impl BehaviorParams {
    pub fn new(speed: f64, separation: f64, broadcast: f64) -> Self {
        Self {
            speed,
            separation,
            broadcast,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.speed.is_finite() && self.speed > 0.0) {
            return Err(ConfigError::NotPositive("speed"));
        }
        if !(self.separation.is_finite() && self.separation > 0.0) {
            return Err(ConfigError::NotPositive("separation"));
        }
        if !(self.broadcast.is_finite() && self.broadcast >= 0.0) {
            return Err(ConfigError::NotPositive("broadcast"));
        }
        Ok(())
    }

    /// Grid position `(speed, separation, broadcast)` level indices, when on the grid.
    pub fn grid_levels(&self) -> Option<(usize, usize, usize)> {
        let find = |levels: &[f64; 5], value: f64| {
            levels.iter().position(|&l| (l - value).abs() < 1e-9)
        };
        Some((
            find(&SPEED_LEVELS, self.speed)?,
            find(&SEPARATION_LEVELS, self.separation)?,
            find(&BROADCAST_LEVELS, self.broadcast)?,
        ))
    }

    /// Identifier in `0..125` for configurations on the experiment grid.
    pub fn grid_id(&self) -> Option<u32> {
        let (s, d, t) = self.grid_levels()?;
        Some((s * 25 + d * 5 + t) as u32)
    }

    pub fn from_grid_id(id: u32) -> Option<Self> {
        if id >= 125 {
            return None;
        }
        let id = id as usize;
        Some(Self::new(
            SPEED_LEVELS[id / 25],
            SEPARATION_LEVELS[(id / 5) % 5],
            BROADCAST_LEVELS[id % 5],
        ))
    }

    /// All 125 grid configurations ordered by id.
    pub fn full_grid() -> Vec<Self> {
        (0..125).filter_map(Self::from_grid_id).collect()
    }
}

/// Constants of the potential-field controller used in move-to-target mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlockingGains {
    /// Attraction gain toward the target center.
    pub attraction: f64,
    /// Repulsion gain, cm².
    pub repulsion: f64,
    /// Repulsion cutoff range, cm.
    pub repulsion_range: f64,
    /// Attraction vanishes within this distance of the target center, cm.
    pub settle_radius: f64,
    /// Proportional heading gain, 1/s.
    pub heading_gain: f64,
    /// Turn-rate cap, rad/s.
    pub max_turn_rate: f64,
}

impl Default for FlockingGains {
    fn default() -> Self {
        Self {
            attraction: 1.0,
            repulsion: 50.0,
            repulsion_range: 14.0,
            settle_radius: 5.0,
            heading_gain: 4.0,
            max_turn_rate: PI,
        }
    }
}

/// Exploration turn law: turn angle drawn uniformly in `[min, max]` radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurnLaw {
    pub min_angle: f64,
    pub max_angle: f64,
    /// Half-width of the bearing cone, rad, in which a searching peer closer
    /// than the separation distance triggers a turn. Peers in the rear
    /// blind sector are ignored so that a robot can always drive clear.
    #[serde(default = "default_spacing_cone")]
    pub spacing_cone: f64,
}

fn default_spacing_cone() -> f64 {
    5.0 * PI / 6.0
}

impl Default for TurnLaw {
    fn default() -> Self {
        Self {
            min_angle: PI / 12.0,
            max_angle: PI,
            spacing_cone: default_spacing_cone(),
        }
    }
}

fn headless_limit() -> f64 {
    SwarmConfig::HEADLESS_LIMIT
}

/// Everything needed to reproduce one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmConfig {
    pub params: BehaviorParams,
    pub seed: u64,
    #[serde(default = "headless_limit")]
    pub max_trial_duration: f64,
    #[serde(default)]
    pub world: WorldConstants,
    #[serde(default)]
    pub flocking: FlockingGains,
    #[serde(default)]
    pub turn: TurnLaw,
}

impl SwarmConfig {
    pub const HEADLESS_LIMIT: f64 = 180.0;
    pub const SESSION_LIMIT: f64 = 60.0;

    pub fn new(params: BehaviorParams, seed: u64) -> Self {
        Self {
            params,
            seed,
            max_trial_duration: Self::HEADLESS_LIMIT,
            world: WorldConstants::default(),
            flocking: FlockingGains::default(),
            turn: TurnLaw::default(),
        }
    }

    pub fn with_limit(mut self, seconds: f64) -> Self {
        self.max_trial_duration = seconds;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.world.validate()?;
        self.params.validate()?;
        if !(self.max_trial_duration.is_finite()
            && self.max_trial_duration > self.world.target_appear_time)
        {
            return Err(ConfigError::Inconsistent(
                "max_trial_duration must exceed the target appearance time",
            ));
        }
        let t = &self.turn;
        if !(t.min_angle > 0.0 && t.max_angle >= t.min_angle && t.max_angle.is_finite()) {
            return Err(ConfigError::Inconsistent("turn angle range is empty"));
        }
        if !(t.spacing_cone >= 0.0 && t.spacing_cone < PI) {
            return Err(ConfigError::Inconsistent("spacing cone must leave a rear blind sector"));
        }
        let f = &self.flocking;
        if !(f.attraction >= 0.0
            && f.repulsion >= 0.0
            && f.repulsion_range > 0.0
            && f.settle_radius >= 0.0
            && f.heading_gain > 0.0
            && f.max_turn_rate > 0.0)
        {
            return Err(ConfigError::Inconsistent("flocking gains out of range"));
        }
        Ok(())
    }

    pub fn max_ticks(&self) -> u64 {
        self.world.ticks_round(self.max_trial_duration)
    }
}
