//! Fixed-timestep world model.
//!
//! One call to [`World::step`] advances the clock by one tick:
//!
//! 1. every robot senses the pre-tick snapshot, including the messages
//!    delivered on the previous tick;
//! 2. information states are updated (detection, relayed reports, end of
//!    broadcast windows);
//! 3. broadcasting robots deliver their report to everyone in range, to be
//!    read on the next tick;
//! 4. controllers produce wheel commands;
//! 5. kinematics and collision resolution move the robots, and the clock
//!    advances;
//! 6. target entries and completion are recorded for the new clock.

use std::f64::consts::PI;

use rand::Rng;

use crate::behavior::{
    explore_step, human_step, move_to_target_step, update_information_state, ControllerState,
    HumanInput, Rejection,
};
use crate::config::{SwarmConfig, WorldConstants};
use crate::error::SimError;
use crate::geometry::{Pose, Vec2};
use crate::rng::{stream, SimRng, WORLD_STREAM};
use crate::robot::{Control, Mode, RobotState, TargetRegion, WheelCommand};
use crate::sensing::{neighbors_of, proximity_readings, Message, SenseFrame};

const PLACEMENT_ATTEMPTS: usize = 10_000;
const COLLISION_PASSES: usize = 64;

/// What happened during one tick.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    /// Number of (sender, receiver) deliveries made this tick.
    pub deliveries: usize,
    /// Robots that learned the target position this tick.
    pub newly_informed: Vec<usize>,
    /// Operator command refused this tick.
    pub rejection: Option<Rejection>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    config: SwarmConfig,
    tick: u64,
    robots: Vec<RobotState>,
    controllers: Vec<ControllerState>,
    rngs: Vec<SimRng>,
    target: TargetRegion,
    /// Messages delivered on the last tick, read by the next sense.
    inboxes: Vec<Vec<Message>>,
    entered_at: Vec<Option<u64>>,
    completed_at: Option<u64>,
    messages_delivered: u64,
}

impl World {
    /// Random initial placement: robots uniformly inside the arena without
    /// overlap, headings uniform, target uniformly among positions that keep
    /// the region inside the arena.
    pub fn new(config: SwarmConfig) -> Result<Self, SimError> {
        config.validate()?;
        let w = &config.world;
        let radius = w.robot_radius();
        let mut rngs: Vec<SimRng> = (0..w.swarm_size).map(|id| stream(config.seed, id as u64)).collect();
        let mut poses: Vec<Pose> = Vec::with_capacity(w.swarm_size);
        for (id, rng) in rngs.iter_mut().enumerate() {
            let position = (0..PLACEMENT_ATTEMPTS)
                .map(|_| {
                    Vec2::new(
                        rng.random_range(radius..=w.arena_side - radius),
                        rng.random_range(radius..=w.arena_side - radius),
                    )
                })
                .find(|p| poses.iter().all(|q| q.position.distance(*p) >= w.robot_diameter))
                .ok_or(SimError::Placement {
                    robot: id,
                    attempts: PLACEMENT_ATTEMPTS,
                })?;
            let heading = rng.random_range(-PI..PI);
            poses.push(Pose::new(position, heading));
        }
        let mut world_rng = stream(config.seed, WORLD_STREAM);
        let lo = w.target_radius;
        let hi = w.arena_side - w.target_radius;
        let target = Vec2::new(world_rng.random_range(lo..=hi), world_rng.random_range(lo..=hi));
        Ok(Self::assemble(config, poses, target, rngs))
    }

    /// Scripted initial state with explicit poses and target center.
    pub fn from_layout(config: SwarmConfig, poses: Vec<Pose>, target_center: Vec2) -> Result<Self, SimError> {
        config.validate()?;
        let w = &config.world;
        if poses.len() != w.swarm_size {
            return Err(SimError::LayoutSize {
                expected: w.swarm_size,
                got: poses.len(),
            });
        }
        let radius = w.robot_radius();
        let fits = |v: f64, margin: f64| v >= margin - 1e-9 && v <= w.arena_side - margin + 1e-9;
        for (i, p) in poses.iter().enumerate() {
            if !(p.position.is_finite() && fits(p.position.x, radius) && fits(p.position.y, radius)) {
                return Err(SimError::Layout(format!("robot {i} is outside the arena")));
            }
            for (j, q) in poses.iter().enumerate().skip(i + 1) {
                if p.position.distance(q.position) < w.robot_diameter - w.overlap_tolerance {
                    return Err(SimError::Layout(format!("robots {i} and {j} overlap")));
                }
            }
        }
        if !(fits(target_center.x, w.target_radius) && fits(target_center.y, w.target_radius)) {
            return Err(SimError::Layout("target region leaves the arena".into()));
        }
        let rngs = (0..w.swarm_size).map(|id| stream(config.seed, id as u64)).collect();
        let poses = poses.into_iter().map(|p| Pose::new(p.position, p.heading)).collect();
        Ok(Self::assemble(config, poses, target_center, rngs))
    }

    fn assemble(config: SwarmConfig, poses: Vec<Pose>, center: Vec2, rngs: Vec<SimRng>) -> Self {
        let n = poses.len();
        let target = TargetRegion {
            center,
            radius: config.world.target_radius,
            appear_time: config.world.target_appear_time,
        };
        let mut world = Self {
            robots: poses.into_iter().enumerate().map(|(id, pose)| RobotState::new(id, pose)).collect(),
            controllers: vec![ControllerState::default(); n],
            rngs,
            target,
            inboxes: vec![Vec::new(); n],
            entered_at: vec![None; n],
            completed_at: None,
            messages_delivered: 0,
            tick: 0,
            config,
        };
        world.observe();
        world
    }

    /// Hands robot `id` to the operator.
    pub fn set_operator(&mut self, id: usize) -> Result<(), SimError> {
        let robot = self.robots.get_mut(id).ok_or(SimError::UnknownRobot(id))?;
        robot.control = Control::Human;
        Ok(())
    }

    /// Marks robot `id` as already knowing the true target center, in `mode`.
    /// Used for scripted scenarios; the informed tick is the current tick.
    pub fn preset_informed(&mut self, id: usize, mode: Mode) -> Result<(), SimError> {
        let tick = self.tick;
        let window = self.config.world.ticks_ceil(self.config.params.broadcast);
        let center = self.target.center;
        let robot = self.robots.get_mut(id).ok_or(SimError::UnknownRobot(id))?;
        robot.known_target = Some(center);
        robot.informed_at = Some(tick);
        robot.mode = mode;
        robot.broadcast_until = (mode == Mode::ShareTarget).then_some(tick + window);
        Ok(())
    }

    pub fn config(&self) -> &SwarmConfig {
        &self.config
    }

    pub fn constants(&self) -> &WorldConstants {
        &self.config.world
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Simulated time in seconds.
    pub fn clock(&self) -> f64 {
        self.config.world.tick_to_seconds(self.tick)
    }

    pub fn robots(&self) -> &[RobotState] {
        &self.robots
    }

    pub fn controllers(&self) -> &[ControllerState] {
        &self.controllers
    }

    pub fn target(&self) -> &TargetRegion {
        &self.target
    }

    pub fn is_target_visible(&self) -> bool {
        self.tick >= self.config.world.appear_tick()
    }

    pub fn completed_at(&self) -> Option<u64> {
        self.completed_at
    }

    pub fn completion_time(&self) -> Option<f64> {
        self.completed_at.map(|t| self.config.world.tick_to_seconds(t))
    }

    /// First tick at which each robot's center was inside the visible target.
    pub fn entered_at(&self) -> &[Option<u64>] {
        &self.entered_at
    }

    /// Total (sender, receiver) deliveries since the start of the trial.
    pub fn messages_delivered(&self) -> u64 {
        self.messages_delivered
    }

    pub fn inbox(&self, id: usize) -> &[Message] {
        &self.inboxes[id]
    }

    pub fn operator(&self) -> Option<&RobotState> {
        self.robots.iter().find(|r| r.is_human())
    }

    /// Perception of robot `id` at the current tick.
    pub fn sense(&self, id: usize) -> Result<SenseFrame, SimError> {
        let robot = self.robots.get(id).ok_or(SimError::UnknownRobot(id))?;
        let w = &self.config.world;
        let others = self.robots.iter().filter(|r| r.id != id).map(|r| (r.id, r.position()));
        let in_target = self.is_target_visible() && self.target.contains(robot.position());
        Ok(SenseFrame {
            proximity: proximity_readings(&robot.pose, others, w),
            neighbors: neighbors_of(
                id,
                &robot.pose,
                self.robots.iter().map(|r| (r.id, r.position(), r.mode)),
                w.comm_range,
            ),
            in_target,
            target_center: in_target.then_some(self.target.center),
            inbox: self.inboxes[id].clone(),
        })
    }

    /// Inboxes produced by every robot currently broadcasting, each ordered
    /// by sender id.
    pub fn deliver_messages(&self) -> Vec<Vec<Message>> {
        let range_sq = self.config.world.comm_range.powi(2);
        let mut inboxes = vec![Vec::new(); self.robots.len()];
        for sender in self.robots.iter().filter(|r| r.is_broadcasting(self.tick)) {
            let Some(target) = sender.known_target else { continue };
            for receiver in &self.robots {
                if receiver.id != sender.id
                    && receiver.position().distance_sq(sender.position()) <= range_sq
                {
                    inboxes[receiver.id].push(Message {
                        sender: sender.id,
                        target,
                    });
                }
            }
        }
        inboxes
    }

    /// Advances one tick with every robot under its own controller; `human`
    /// drives the operator's robot if there is one.
    pub fn step(&mut self, human: HumanInput) -> StepReport {
        let (frames, mut report) = self.exchange_information();
        let params = self.config.params;
        let w = self.config.world.clone();
        let mut commands = Vec::with_capacity(self.robots.len());
        for (i, frame) in frames.iter().enumerate() {
            let robot = &mut self.robots[i];
            let command = match (robot.control, robot.mode) {
                (Control::Human, _) => {
                    let (command, rejection) =
                        human_step(human, robot, frame, &params, &self.config.flocking, &w);
                    if rejection.is_some() {
                        report.rejection = rejection;
                    }
                    command
                }
                (Control::Autonomous, Mode::MoveToTarget) => {
                    move_to_target_step(frame, robot, &params, &self.config.flocking)
                }
                (Control::Autonomous, _) => {
                    let (command, next) = explore_step(
                        frame,
                        self.controllers[i],
                        &params,
                        &w,
                        &self.config.turn,
                        &mut self.rngs[i],
                    );
                    self.controllers[i] = next;
                    command
                }
            };
            commands.push(command);
        }
        if let Some(i) = self.robots.iter().position(|r| r.is_human()) {
            // operator steering preempts any exploration turn in progress
            self.controllers[i] = ControllerState::default();
        }
        self.step_kinematics(&commands);
        report
    }

    /// Advances one tick with externally supplied wheel commands; sensing
    /// and information exchange still run.
    pub fn step_scripted(&mut self, commands: &[WheelCommand]) -> StepReport {
        let (_, report) = self.exchange_information();
        self.step_kinematics(commands);
        report
    }

    fn exchange_information(&mut self) -> (Vec<SenseFrame>, StepReport) {
        let frames: Vec<SenseFrame> = (0..self.robots.len())
            .map(|i| self.sense(i).expect("index in range"))
            .collect();
        let mut report = StepReport::default();
        let params = self.config.params;
        for (robot, frame) in self.robots.iter_mut().zip(&frames) {
            if update_information_state(robot, frame, &params, &self.config.world, self.tick) {
                report.newly_informed.push(robot.id);
            }
        }
        let inboxes = self.deliver_messages();
        report.deliveries = inboxes.iter().map(Vec::len).sum();
        self.messages_delivered += report.deliveries as u64;
        self.inboxes = inboxes;
        (frames, report)
    }

    /// Moves every robot by its command for one tick, resolves collisions,
    /// and advances the clock. Missing commands mean stop.
    pub fn step_kinematics(&mut self, commands: &[WheelCommand]) {
        let dt = self.config.world.tick_duration;
        for (i, robot) in self.robots.iter_mut().enumerate() {
            let command = commands.get(i).copied().unwrap_or(WheelCommand::STOP);
            let linear = command.linear.max(0.0);
            robot.pose.position += robot.pose.forward() * (linear * dt);
            robot.pose.rotate(command.angular * dt);
            robot.linear_speed = linear;
            robot.turn_command = command.turn();
        }
        self.resolve_collisions();
        self.tick += 1;
        self.observe();
    }

    fn clamp_to_arena(&mut self) {
        let lo = self.config.world.robot_radius();
        let hi = self.config.world.arena_side - lo;
        for r in &mut self.robots {
            r.pose.position.x = r.pose.position.x.clamp(lo, hi);
            r.pose.position.y = r.pose.position.y.clamp(lo, hi);
        }
    }

    /// Positional projection: walls clamp, overlapping pairs are pushed
    /// apart symmetrically along their center line.
    fn resolve_collisions(&mut self) {
        let diameter = self.config.world.robot_diameter;
        self.clamp_to_arena();
        for _ in 0..COLLISION_PASSES {
            let mut moved = false;
            for i in 0..self.robots.len() {
                for j in i + 1..self.robots.len() {
                    let delta = self.robots[j].position() - self.robots[i].position();
                    let dist = delta.norm();
                    if dist >= diameter {
                        continue;
                    }
                    let axis = delta.normalized().unwrap_or_else(|| {
                        Vec2::from_angle(i as f64 * 2.399_963_229_728_653 + j as f64)
                    });
                    let push = axis * ((diameter - dist) / 2.0);
                    self.robots[i].pose.position -= push;
                    self.robots[j].pose.position += push;
                    moved = true;
                }
            }
            self.clamp_to_arena();
            if !moved {
                break;
            }
        }
    }

    fn observe(&mut self) {
        if !self.is_target_visible() {
            return;
        }
        let mut all_inside = true;
        for (robot, entered) in self.robots.iter().zip(self.entered_at.iter_mut()) {
            if self.target.contains(robot.position()) {
                entered.get_or_insert(self.tick);
            } else {
                all_inside = false;
            }
        }
        self.check_completion(all_inside);
    }

    fn check_completion(&mut self, all_inside: bool) -> Option<u64> {
        if self.completed_at.is_none() && all_inside {
            self.completed_at = Some(self.tick);
        }
        self.completed_at
    }

    /// Smallest pairwise center distance.
    pub fn min_pair_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.robots.iter().enumerate() {
            for b in &self.robots[i + 1..] {
                best = best.min(a.position().distance(b.position()));
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::BehaviorParams;
    use crate::robot::Turn;

    fn config(seed: u64) -> SwarmConfig {
        SwarmConfig::new(BehaviorParams::new(15.0, 20.0, 8.0), seed)
    }

    fn small_config(n: usize, params: BehaviorParams) -> SwarmConfig {
        let mut c = SwarmConfig::new(params, 3);
        c.world.swarm_size = n;
        c
    }

    #[test]
    fn same_seed_same_world() {
        assert_eq!(World::new(config(42)).unwrap(), World::new(config(42)).unwrap());
        assert_ne!(World::new(config(42)).unwrap(), World::new(config(43)).unwrap());
    }

    #[test]
    fn initial_placement_is_feasible() {
        for seed in 0..200 {
            let w = World::new(config(seed)).unwrap();
            assert!(w.min_pair_distance() >= 7.0);
            for r in w.robots() {
                let p = r.position();
                assert!(p.x >= 3.5 && p.x <= 146.5 && p.y >= 3.5 && p.y <= 146.5);
                assert!((-PI..PI).contains(&r.pose.heading));
                assert_eq!(r.mode, Mode::Explore);
                assert!(!r.is_informed());
            }
            let c = w.target().center;
            assert!((25.0..=125.0).contains(&c.x) && (25.0..=125.0).contains(&c.y));
            assert_eq!(w.tick(), 0);
        }
    }

    #[test]
    fn crowded_arena_fails_placement() {
        let mut c = config(1);
        c.world.swarm_size = 1000;
        assert!(matches!(World::new(c), Err(SimError::Placement { .. })));
    }

    #[test]
    fn forward_motion_advances_by_speed_times_tick() {
        let c = small_config(1, BehaviorParams::new(15.0, 20.0, 8.0));
        let mut w = World::from_layout(c, vec![Pose::new(Vec2::new(50.0, 50.0), 0.0)], Vec2::new(100.0, 100.0)).unwrap();
        w.step_scripted(&[WheelCommand::forward(15.0)]);
        assert!((w.robots()[0].position().x - 51.5).abs() < 1e-12);
        assert!((w.clock() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rotation_keeps_position() {
        let c = small_config(1, BehaviorParams::new(15.0, 20.0, 8.0));
        let mut w = World::from_layout(c, vec![Pose::new(Vec2::new(50.0, 50.0), 0.0)], Vec2::new(100.0, 100.0)).unwrap();
        for _ in 0..10 {
            w.step_scripted(&[WheelCommand::rotate(Turn::Left, PI)]);
        }
        assert_eq!(w.robots()[0].position(), Vec2::new(50.0, 50.0));
        assert!((w.robots()[0].pose.heading.abs() - PI).abs() < 1e-9);
    }

    #[test]
    fn wall_clamps_center() {
        let c = small_config(1, BehaviorParams::new(15.0, 20.0, 8.0));
        let mut w = World::from_layout(c, vec![Pose::new(Vec2::new(5.0, 50.0), PI)], Vec2::new(100.0, 100.0)).unwrap();
        w.step_scripted(&[WheelCommand::forward(15.0)]);
        assert_eq!(w.robots()[0].position().x, 3.5);
    }

    #[test]
    fn overlapping_pair_is_separated_symmetrically() {
        let c = small_config(2, BehaviorParams::new(15.0, 20.0, 8.0));
        let poses = vec![
            Pose::new(Vec2::new(50.0, 50.0), 0.0),
            Pose::new(Vec2::new(58.0, 50.0), PI),
        ];
        let mut w = World::from_layout(c, poses, Vec2::new(100.0, 100.0)).unwrap();
        w.step_scripted(&[WheelCommand::forward(15.0), WheelCommand::forward(15.0)]);
        let a = w.robots()[0].position();
        let b = w.robots()[1].position();
        assert!((b.distance(a) - 7.0).abs() < 1e-9);
        assert!(((a.x + b.x) / 2.0 - 54.0).abs() < 1e-9);
    }

    #[test]
    fn target_hidden_before_appearance() {
        let c = small_config(1, BehaviorParams::new(15.0, 20.0, 8.0));
        let center = Vec2::new(75.0, 75.0);
        let mut w = World::from_layout(c, vec![Pose::new(center, 0.0)], center).unwrap();
        for _ in 0..29 {
            w.step_scripted(&[WheelCommand::STOP]);
        }
        assert!((w.clock() - 2.9).abs() < 1e-12);
        let frame = w.sense(0).unwrap();
        assert!(!frame.in_target);
        assert!(frame.target_center.is_none());
        w.step_scripted(&[WheelCommand::STOP]);
        assert!(w.sense(0).unwrap().in_target);
    }

    #[test]
    fn broadcaster_reaches_only_robots_in_range() {
        let c = small_config(3, BehaviorParams::new(10.0, 20.0, 8.0));
        let poses = vec![
            Pose::new(Vec2::new(40.0, 40.0), 0.0),
            Pose::new(Vec2::new(76.0, 40.0), 0.0),
            Pose::new(Vec2::new(40.0, 76.1), 0.0),
        ];
        let mut w = World::from_layout(c, poses, Vec2::new(100.0, 100.0)).unwrap();
        assert!(w.deliver_messages().iter().all(Vec::is_empty));
        w.preset_informed(0, Mode::ShareTarget).unwrap();
        let inboxes = w.deliver_messages();
        assert_eq!(inboxes[1].len(), 1);
        assert!(inboxes[0].is_empty() && inboxes[2].is_empty());
    }

    #[test]
    fn full_neighborhood_receives() {
        let c = small_config(10, BehaviorParams::new(10.0, 20.0, 8.0));
        let poses = (0..10)
            .map(|i| {
                let a = i as f64 * PI / 5.0;
                if i == 0 {
                    Pose::new(Vec2::new(75.0, 75.0), 0.0)
                } else {
                    Pose::new(Vec2::new(75.0, 75.0) + Vec2::from_angle(a) * 20.0, 0.0)
                }
            })
            .collect();
        let mut w = World::from_layout(c, poses, Vec2::new(100.0, 100.0)).unwrap();
        w.preset_informed(0, Mode::ShareTarget).unwrap();
        let inboxes = w.deliver_messages();
        assert_eq!(inboxes.iter().filter(|b| b.len() == 1).count(), 9);
    }

    #[test]
    fn relay_chain_takes_one_tick_per_hop() {
        let c = small_config(3, BehaviorParams::new(10.0, 20.0, 8.0));
        let poses = vec![
            Pose::new(Vec2::new(30.0, 100.0), 0.0),
            Pose::new(Vec2::new(60.0, 100.0), 0.0),
            Pose::new(Vec2::new(90.0, 100.0), 0.0),
        ];
        // A sits inside the target, B and C do not
        let mut w = World::from_layout(c, poses, Vec2::new(30.0, 40.0)).unwrap();
        let stop = [WheelCommand::STOP; 3];
        w.preset_informed(0, Mode::ShareTarget).unwrap();
        let k = w.tick();
        for _ in 0..5 {
            w.step_scripted(&stop);
        }
        let informed: Vec<_> = w.robots().iter().map(|r| r.informed_at).collect();
        assert_eq!(informed, vec![Some(k), Some(k + 1), Some(k + 2)]);
    }

    fn clustered_world() -> World {
        let c = config(7);
        let center = Vec2::new(75.0, 75.0);
        let poses = (0..10)
            .map(|i| {
                let a = i as f64 * PI / 5.0;
                let r = if i == 0 { 0.0 } else { 12.0 };
                Pose::new(center + Vec2::from_angle(a) * r, a)
            })
            .collect();
        let mut w = World::from_layout(c, poses, center).unwrap();
        for i in 0..10 {
            w.preset_informed(i, Mode::MoveToTarget).unwrap();
        }
        w
    }

    #[test]
    fn completion_fires_when_target_appears() {
        let mut w = clustered_world();
        while w.completed_at().is_none() && w.tick() < 100 {
            w.step(HumanInput::default());
        }
        assert_eq!(w.completed_at(), Some(30));
        assert!((w.completion_time().unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn completion_requires_everyone() {
        let mut w = clustered_world();
        // drag robot 9 far away and hold it there
        let mut commands = vec![WheelCommand::STOP; 10];
        commands[9] = WheelCommand::forward(50.0);
        while w.tick() < 40 {
            w.step_scripted(&commands);
        }
        assert!(!w.target().contains(w.robots()[9].position()));
        assert_eq!(w.completed_at(), None);
    }

    #[test]
    fn completion_latches() {
        let mut w = clustered_world();
        let mut commands = vec![WheelCommand::STOP; 10];
        while w.tick() < 30 {
            w.step_scripted(&commands);
        }
        assert_eq!(w.completed_at(), Some(30));
        commands[9] = WheelCommand::forward(50.0);
        for _ in 0..20 {
            w.step_scripted(&commands);
        }
        assert!(!w.target().contains(w.robots()[9].position()));
        assert_eq!(w.completed_at(), Some(30));
    }

    #[test]
    fn operator_rejection_is_reported() {
        let mut w = World::new(config(3)).unwrap();
        w.set_operator(4).unwrap();
        let report = w.step(HumanInput {
            steer: Turn::None,
            action: Some(crate::behavior::OperatorAction::ShareTarget),
        });
        assert_eq!(report.rejection, Some(Rejection::NotInformed));
        assert!(w.set_operator(10).is_err());
    }
}
