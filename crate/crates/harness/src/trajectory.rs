//! Per-tick trajectory records (`traj.jsonl`), replayable by the operator UI.

use serde::{Deserialize, Serialize};
use swarm_core::{Mode, World};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotFrame {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetFrame {
    pub visible: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub center: Option<[f64; 2]>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub clock: f64,
    pub robots: Vec<RobotFrame>,
    pub target: TargetFrame,
}

impl Frame {
    pub fn capture(world: &World) -> Self {
        let visible = world.is_target_visible();
        let target = world.target();
        Self {
            clock: world.clock(),
            robots: world
                .robots()
                .iter()
                .map(|r| RobotFrame {
                    id: r.id,
                    x: r.pose.position.x,
                    y: r.pose.position.y,
                    heading: r.pose.heading,
                    mode: r.mode,
                })
                .collect(),
            target: TargetFrame {
                visible,
                center: visible.then_some([target.center.x, target.center.y]),
                radius: target.radius,
            },
        }
    }
}
