//! Messages exchanged with the operator client. Every message is one JSON
//! text frame tagged by `type`; lengths in cm, angles in radians, times in
//! seconds unless a field name says otherwise.

use serde::{Deserialize, Serialize};
use swarm_core::{Mode, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    KeyDown,
    KeyUp,
    ShareTarget,
    MoveToTarget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Key {
    Left,
    Right,
}

/// One operator event as sent by the client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorInput {
    pub kind: InputKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<Key>,
    /// Client clock when the event happened, ms.
    #[serde(default)]
    pub client_time: f64,
}

impl OperatorInput {
    pub fn key_down(key: Key) -> Self {
        Self {
            kind: InputKind::KeyDown,
            key: Some(key),
            client_time: 0.0,
        }
    }

    pub fn key_up(key: Key) -> Self {
        Self {
            kind: InputKind::KeyUp,
            key: Some(key),
            client_time: 0.0,
        }
    }

    pub fn button(kind: InputKind) -> Self {
        Self {
            kind,
            key: None,
            client_time: 0.0,
        }
    }

    /// A key event must name its key; a button press must not.
    pub fn is_well_formed(&self) -> bool {
        match self.kind {
            InputKind::KeyDown | InputKind::KeyUp => self.key.is_some(),
            InputKind::ShareTarget | InputKind::MoveToTarget => self.key.is_none(),
        }
    }
}

/// Ratings as submitted by the client; the server fills in the rest of the
/// stored record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingInput {
    pub round_index: u32,
    #[serde(default)]
    pub config_id: Option<u32>,
    pub warmth: i64,
    pub competence: i64,
    pub joint_effort: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Input {
        #[serde(flatten)]
        input: OperatorInput,
        /// When present and not the running round, the input is dropped.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        round_index: Option<u32>,
    },
    Rating(RatingInput),
    Ready,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotView {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub mode: Mode,
    pub is_human: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetView {
    pub visible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub round_index: u32,
    pub clock: f64,
    pub remaining: f64,
    pub robots: Vec<RobotView>,
    pub target: TargetView,
    pub comm_range: f64,
    pub human_informed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Snapshot(Snapshot),
    RoundStart {
        round_index: u32,
        time_limit_s: f64,
    },
    RoundEnd {
        round_index: u32,
        success: bool,
        completion_s: Option<f64>,
    },
    Notice {
        code: String,
        text: String,
    },
    RatingAck {
        round_index: u32,
    },
}

impl ServerMessage {
    pub fn notice(code: &str, text: impl Into<String>) -> Self {
        ServerMessage::Notice {
            code: code.to_string(),
            text: text.into(),
        }
    }

    pub fn is_snapshot(&self) -> bool {
        matches!(self, ServerMessage::Snapshot(_))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}

/// Builds the per-tick view of `world` for the operator. The target center
/// is withheld until the region has appeared, and, with
/// `hide_until_informed`, until the operator's robot knows where it is.
pub fn snapshot_encode(world: &World, round_index: u32, time_limit: f64, hide_until_informed: bool) -> Snapshot {
    let human_informed = world.operator().is_some_and(|r| r.is_informed());
    let visible = world.is_target_visible() && (!hide_until_informed || human_informed);
    let target = world.target();
    let clock = world.clock();
    Snapshot {
        round_index,
        clock,
        remaining: (time_limit - clock).max(0.0),
        robots: world
            .robots()
            .iter()
            .map(|r| RobotView {
                id: r.id,
                x: r.pose.position.x,
                y: r.pose.position.y,
                heading: r.pose.heading,
                mode: r.mode,
                is_human: r.is_human(),
            })
            .collect(),
        target: TargetView {
            visible,
            center: visible.then_some([target.center.x, target.center.y]),
            radius: target.radius,
        },
        comm_range: world.constants().comm_range,
        human_informed,
    }
}
