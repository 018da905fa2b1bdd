//! Deterministic 2D swarm simulator for a collective search task.
//!
//! Ten differential-drive robots explore a square arena with ballistic
//! motion, relay the position of a target region to neighbors for a bounded
//! time once they learn it, and converge on it with a potential-field
//! controller. One robot may be handed to a human operator.
//!
//! Everything is a pure function of the [`SwarmConfig`] (including its seed)
//! and, for operator-driven runs, the per-tick [`HumanInput`] sequence.

pub mod behavior;
pub mod config;
pub mod error;
pub mod geometry;
pub mod rng;
pub mod robot;
pub mod sensing;
pub mod world;

pub use behavior::{ControllerState, HumanInput, OperatorAction, Rejection};
pub use config::{BehaviorParams, FlockingGains, SwarmConfig, TurnLaw, WorldConstants};
pub use error::{ConfigError, SimError};
pub use geometry::{Pose, Vec2};
pub use robot::{Control, Mode, RobotState, TargetRegion, Turn, WheelCommand};
pub use sensing::{Message, Neighbor, Obstacle, ProximityHit, SenseFrame};
pub use world::{StepReport, World};
