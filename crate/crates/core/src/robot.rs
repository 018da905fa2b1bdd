use serde::{Deserialize, Serialize};

use crate::geometry::{Pose, Vec2};

/// Behavior mode; the simulated analogue of the robot's LED pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Explore,
    ShareTarget,
    MoveToTarget,
}

impl Mode {
    /// Position along the autonomous mode sequence.
    pub fn rank(self) -> u8 {
        match self {
            Mode::Explore => 0,
            Mode::ShareTarget => 1,
            Mode::MoveToTarget => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Control {
    Autonomous,
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Turn {
    None,
    Left,
    Right,
}

impl Turn {
    /// +1 for counter-clockwise (left), -1 for clockwise.
    pub fn sign(self) -> f64 {
        match self {
            Turn::None => 0.0,
            Turn::Left => 1.0,
            Turn::Right => -1.0,
        }
    }
}

/// Differential-drive command expressed as body velocities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WheelCommand {
    /// cm/s along the heading, never negative.
    pub linear: f64,
    /// rad/s, positive counter-clockwise.
    pub angular: f64,
}

impl WheelCommand {
    pub const STOP: WheelCommand = WheelCommand {
        linear: 0.0,
        angular: 0.0,
    };

    pub fn forward(speed: f64) -> Self {
        Self {
            linear: speed,
            angular: 0.0,
        }
    }

    pub fn rotate(turn: Turn, angular_speed: f64) -> Self {
        Self {
            linear: 0.0,
            angular: turn.sign() * angular_speed,
        }
    }

    pub fn turn(&self) -> Turn {
        if self.angular > 0.0 {
            Turn::Left
        } else if self.angular < 0.0 {
            Turn::Right
        } else {
            Turn::None
        }
    }

    pub fn is_forward(&self) -> bool {
        self.linear > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub id: usize,
    pub pose: Pose,
    /// Linear speed commanded on the last tick, cm/s.
    pub linear_speed: f64,
    pub turn_command: Turn,
    pub mode: Mode,
    /// Tick at which the robot first learned the target position.
    pub informed_at: Option<u64>,
    /// Exclusive tick bound of the broadcast window. `u64::MAX` marks an
    /// operator-enabled broadcast that lasts until switched off.
    pub broadcast_until: Option<u64>,
    pub known_target: Option<Vec2>,
    pub control: Control,
}

impl RobotState {
    pub fn new(id: usize, pose: Pose) -> Self {
        Self {
            id,
            pose,
            linear_speed: 0.0,
            turn_command: Turn::None,
            mode: Mode::Explore,
            informed_at: None,
            broadcast_until: None,
            known_target: None,
            control: Control::Autonomous,
        }
    }

    pub fn position(&self) -> Vec2 {
        self.pose.position
    }

    pub fn is_informed(&self) -> bool {
        self.known_target.is_some()
    }

    pub fn is_human(&self) -> bool {
        self.control == Control::Human
    }

    /// Whether the robot relays its known target on `tick`.
    pub fn is_broadcasting(&self, tick: u64) -> bool {
        self.mode == Mode::ShareTarget
            && self.known_target.is_some()
            && self.broadcast_until.is_some_and(|until| tick < until)
    }

    /// Checks the field-level invariants of a robot record.
    pub fn invariants_hold(&self) -> bool {
        let informed_consistent = self.known_target.is_some() == self.informed_at.is_some();
        let broadcast_consistent = self.broadcast_until.is_none() || self.known_target.is_some();
        let move_consistent = self.mode != Mode::MoveToTarget || self.known_target.is_some();
        informed_consistent && broadcast_consistent && move_consistent
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetRegion {
    pub center: Vec2,
    pub radius: f64,
    /// Seconds after trial start at which the region becomes detectable.
    pub appear_time: f64,
}

impl TargetRegion {
    pub fn contains(&self, point: Vec2) -> bool {
        point.distance_sq(self.center) <= self.radius * self.radius
    }
}
