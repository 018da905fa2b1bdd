//! Proximity rays, range-and-bearing and target detection.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::config::WorldConstants;
use crate::geometry::{ray_circle, ray_square_exit, wrap_angle, Pose, Vec2};
use crate::robot::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: usize,
    /// Center-to-center distance, cm.
    pub range: f64,
    /// Body-frame bearing, positive to the left.
    pub bearing: f64,
    /// Behavior mode announced by the neighbor's range-and-bearing beacon.
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Obstacle {
    Wall,
    Robot(usize),
}

/// A proximity-sensor return.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProximityHit {
    /// Distance from the body perimeter along the ray, cm.
    pub distance: f64,
    pub obstacle: Obstacle,
}

/// A received target report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub sender: usize,
    pub target: Vec2,
}

/// Everything a robot perceives on one tick.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SenseFrame {
    /// One reading per sensor: the first wall or robot along the ray, `None`
    /// when beyond sensor reach.
    pub proximity: Vec<Option<ProximityHit>>,
    pub neighbors: Vec<Neighbor>,
    pub in_target: bool,
    /// Center of the target region, reported only while `in_target`.
    pub target_center: Option<Vec2>,
    /// Messages delivered on the previous tick, ordered by sender id.
    pub inbox: Vec<Message>,
}

/// Body-frame angle of proximity sensor `index` out of `count` evenly spaced
/// sensors; sensor 0 faces forward, indices increase counter-clockwise.
pub fn sensor_angle(index: usize, count: usize) -> f64 {
    wrap_angle(TAU * index as f64 / count as f64)
}

/// Casts every proximity ray of a robot at `pose` against the arena walls and
/// the bodies of robots centered at `others`.
pub fn proximity_readings(
    pose: &Pose,
    others: impl Iterator<Item = (usize, Vec2)> + Clone,
    constants: &WorldConstants,
) -> Vec<Option<ProximityHit>> {
    let radius = constants.robot_radius();
    (0..constants.proximity_sensor_count)
        .map(|k| {
            let dir = Vec2::from_angle(pose.heading + sensor_angle(k, constants.proximity_sensor_count));
            let origin = pose.position + dir * radius;
            let inside = Vec2::new(
                origin.x.clamp(0.0, constants.arena_side),
                origin.y.clamp(0.0, constants.arena_side),
            );
            let mut nearest = ProximityHit {
                distance: ray_square_exit(inside, dir, constants.arena_side),
                obstacle: Obstacle::Wall,
            };
            for (id, center) in others.clone() {
                match ray_circle(origin, dir, center, radius) {
                    Some(d) if d < nearest.distance => {
                        nearest = ProximityHit {
                            distance: d,
                            obstacle: Obstacle::Robot(id),
                        }
                    }
                    _ => {}
                }
            }
            (nearest.distance <= constants.proximity_range).then_some(nearest)
        })
        .collect()
}

/// Robots whose centers lie within communication range of `pose`.
pub fn neighbors_of(
    id: usize,
    pose: &Pose,
    robots: impl Iterator<Item = (usize, Vec2, Mode)>,
    comm_range: f64,
) -> Vec<Neighbor> {
    let range_sq = comm_range * comm_range;
    robots
        .filter(|&(other, _, _)| other != id)
        .filter_map(|(other, position, mode)| {
            let d_sq = pose.position.distance_sq(position);
            (d_sq <= range_sq).then(|| Neighbor {
                id: other,
                range: d_sq.sqrt(),
                bearing: pose.bearing_to(position),
                mode,
            })
        })
        .collect()
}
