//! Per-robot controllers: ballistic exploration, target sharing,
//! potential-field convergence, and operator steering.
//!
//! Controllers are evaluated against the pre-tick snapshot of the world, so
//! the order in which robots are visited never matters.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{BehaviorParams, FlockingGains, TurnLaw, WorldConstants};
use crate::geometry::{wrap_angle, Vec2};
use crate::robot::{Control, Mode, RobotState, Turn, WheelCommand};
use crate::sensing::{sensor_angle, Obstacle, SenseFrame};

/// Exploration state carried between ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ControllerState {
    pub rotate_ticks_remaining: u32,
    /// Only meaningful while `rotate_ticks_remaining > 0`.
    pub rotate_direction: Option<Turn>,
}

impl ControllerState {
    pub fn is_rotating(&self) -> bool {
        self.rotate_ticks_remaining > 0
    }
}

/// Something the explorer should turn away from.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Stimulus {
    /// Free space between the body and the obstacle, cm.
    gap: f64,
    bearing: f64,
}

/// Obstacles that block forward motion: walls seen by the forward-facing
/// proximity sensors, and searching peers outside the rear blind sector that
/// are closer than the separation distance. Robots already converging on the target do not take
/// part in the spacing rule; only collisions keep explorers off them.
fn blocking_stimuli(
    sense: &SenseFrame,
    params: &BehaviorParams,
    constants: &WorldConstants,
    turn: &TurnLaw,
) -> Vec<Stimulus> {
    let count = sense.proximity.len();
    let walls = sense.proximity.iter().enumerate().filter_map(|(k, hit)| {
        let bearing = sensor_angle(k, count);
        let hit = (*hit)?;
        (hit.obstacle == Obstacle::Wall && bearing.abs() < FRAC_PI_2).then_some(Stimulus {
            gap: hit.distance,
            bearing,
        })
    });
    let peers = sense
        .neighbors
        .iter()
        .filter(|n| n.mode != Mode::MoveToTarget)
        .filter(|n| n.range < params.separation && n.bearing.abs() < turn.spacing_cone)
        .map(|n| Stimulus {
            gap: n.range - constants.robot_diameter,
            bearing: n.bearing,
        });
    walls.chain(peers).collect()
}

fn turn_away(stimuli: &[Stimulus], rng: &mut impl Rng) -> Turn {
    let nearest = stimuli
        .iter()
        .min_by(|a, b| a.gap.total_cmp(&b.gap))
        .expect("at least one stimulus");
    let side = if nearest.bearing != 0.0 {
        nearest.bearing
    } else {
        stimuli.iter().map(|s| s.bearing.sin()).sum()
    };
    if side > 0.0 {
        Turn::Right
    } else if side < 0.0 {
        Turn::Left
    } else if rng.random_bool(0.5) {
        Turn::Left
    } else {
        Turn::Right
    }
}

/// Number of ticks for a freshly drawn exploration turn.
pub fn draw_turn_ticks(turn: &TurnLaw, constants: &WorldConstants, rng: &mut impl Rng) -> u32 {
    let angle = if turn.max_angle > turn.min_angle {
        rng.random_range(turn.min_angle..=turn.max_angle)
    } else {
        turn.min_angle
    };
    let per_tick = constants.angular_speed * constants.tick_duration;
    ((angle / per_tick).round() as u32).max(1)
}

/// Ballistic motion: drive straight at `v`, and on meeting an obstacle
/// rotate in place away from it for a random duration.
pub fn explore_step(
    sense: &SenseFrame,
    ctl: ControllerState,
    params: &BehaviorParams,
    constants: &WorldConstants,
    turn: &TurnLaw,
    rng: &mut impl Rng,
) -> (WheelCommand, ControllerState) {
    if ctl.is_rotating() {
        let direction = ctl.rotate_direction.unwrap_or(Turn::Left);
        let next = ControllerState {
            rotate_ticks_remaining: ctl.rotate_ticks_remaining - 1,
            rotate_direction: Some(direction),
        };
        return (WheelCommand::rotate(direction, constants.angular_speed), next);
    }
    let stimuli = blocking_stimuli(sense, params, constants, turn);
    if stimuli.is_empty() {
        return (WheelCommand::forward(params.speed), ControllerState::default());
    }
    let direction = turn_away(&stimuli, rng);
    let ticks = draw_turn_ticks(turn, constants, rng);
    let next = ControllerState {
        rotate_ticks_remaining: ticks - 1,
        rotate_direction: Some(direction),
    };
    (WheelCommand::rotate(direction, constants.angular_speed), next)
}

/// Applies detections and received reports to the robot's information
/// state. Returns `true` when the robot became informed on this tick.
///
/// Autonomous robots relay for `⌈T / tick⌉` ticks and then converge; the
/// operator's robot only records what it learned and waits for a command.
pub fn update_information_state(
    robot: &mut RobotState,
    sense: &SenseFrame,
    params: &BehaviorParams,
    constants: &WorldConstants,
    tick: u64,
) -> bool {
    let mut newly = false;
    if robot.known_target.is_none() {
        let learned = sense
            .target_center
            .filter(|_| sense.in_target)
            .or_else(|| sense.inbox.first().map(|m| m.target));
        if let Some(target) = learned {
            robot.known_target = Some(target);
            robot.informed_at = Some(tick);
            newly = true;
            if robot.control == Control::Autonomous {
                let window = constants.ticks_ceil(params.broadcast);
                if window > 0 {
                    robot.broadcast_until = Some(tick + window);
                    robot.mode = Mode::ShareTarget;
                } else {
                    robot.mode = Mode::MoveToTarget;
                }
            }
        }
    }
    if robot.mode == Mode::ShareTarget && robot.broadcast_until.is_some_and(|until| tick >= until) {
        robot.mode = Mode::MoveToTarget;
    }
    newly
}

/// Virtual force on a robot in move-to-target mode, world frame.
pub fn flocking_force(sense: &SenseFrame, robot: &RobotState, gains: &FlockingGains) -> Vec2 {
    let Some(target) = robot.known_target else {
        return Vec2::ZERO;
    };
    let position = robot.position();
    let to_target = target - position;
    let mut force = if to_target.norm() > gains.settle_radius {
        to_target.normalized().unwrap_or(Vec2::ZERO) * gains.attraction
    } else {
        Vec2::ZERO
    };
    for n in &sense.neighbors {
        if n.range < gains.repulsion_range && n.range > 0.0 {
            let magnitude = gains.repulsion * (1.0 / n.range - 1.0 / gains.repulsion_range);
            let toward = Vec2::from_angle(robot.pose.heading + n.bearing);
            force -= toward * magnitude;
        }
    }
    force
}

/// Potential-field convergence: attraction to the shared target center plus
/// short-range mutual repulsion, tracked by a rate-capped heading controller.
pub fn move_to_target_step(
    sense: &SenseFrame,
    robot: &RobotState,
    params: &BehaviorParams,
    gains: &FlockingGains,
) -> WheelCommand {
    let force = flocking_force(sense, robot, gains);
    let magnitude = force.norm();
    if magnitude < 1e-9 {
        return WheelCommand::STOP;
    }
    let error = wrap_angle(force.angle() - robot.pose.heading);
    let angular = (gains.heading_gain * error).clamp(-gains.max_turn_rate, gains.max_turn_rate);
    let linear = params.speed * magnitude.min(1.0) * error.cos().max(0.0);
    WheelCommand { linear, angular }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorAction {
    ShareTarget,
    MoveToTarget,
}

/// Operator input applied to the human robot on one tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanInput {
    pub steer: Turn,
    pub action: Option<OperatorAction>,
}

impl Default for HumanInput {
    fn default() -> Self {
        Self {
            steer: Turn::None,
            action: None,
        }
    }
}

/// Why an operator command was not applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    /// The robot does not know the target yet.
    NotInformed,
    /// The robot already navigates autonomously to the target.
    AlreadyMoving,
}

impl Rejection {
    pub fn code(self) -> &'static str {
        match self {
            Rejection::NotInformed => "not_informed",
            Rejection::AlreadyMoving => "already_moving",
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            Rejection::NotInformed => "Your robot has not discovered the target yet.",
            Rejection::AlreadyMoving => "Your robot is already moving to the target.",
        }
    }
}

/// Steering of the operator's robot. Keys rotate it in place, otherwise it
/// drives straight at the team speed. Once sent to the target it converges
/// autonomously for the rest of the round.
pub fn human_step(
    input: HumanInput,
    robot: &mut RobotState,
    sense: &SenseFrame,
    params: &BehaviorParams,
    gains: &FlockingGains,
    constants: &WorldConstants,
) -> (WheelCommand, Option<Rejection>) {
    let mut rejection = None;
    if let Some(action) = input.action {
        if robot.mode == Mode::MoveToTarget {
            rejection = Some(Rejection::AlreadyMoving);
        } else if !robot.is_informed() {
            rejection = Some(Rejection::NotInformed);
        } else {
            match action {
                OperatorAction::ShareTarget => {
                    robot.mode = Mode::ShareTarget;
                    robot.broadcast_until = Some(u64::MAX);
                }
                OperatorAction::MoveToTarget => {
                    robot.mode = Mode::MoveToTarget;
                    robot.broadcast_until = None;
                }
            }
        }
    }
    let command = if robot.mode == Mode::MoveToTarget {
        move_to_target_step(sense, robot, params, gains)
    } else {
        match input.steer {
            Turn::None => WheelCommand::forward(params.speed),
            turn => WheelCommand::rotate(turn, constants.angular_speed),
        }
    };
    (command, rejection)
}
