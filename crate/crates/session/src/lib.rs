//! Real-time operator sessions: one human steers a robot of the swarm over a
//! WebSocket while the server runs the simulation, enforces the round time
//! limit, and stores outcomes and per-round ratings.

pub mod outbox;
pub mod protocol;
pub mod round;
pub mod server;
pub mod session;
pub mod store;
pub mod teams;

pub use protocol::{snapshot_encode, ClientMessage, InputKind, Key, OperatorInput, ServerMessage, Snapshot};
pub use round::{run_round, LoggedInput, RoundOutcome, RoundRunner, RoundSpec};
pub use server::{router, serve, spawn, AppState, ServerConfig};
pub use session::{Phase, Session, SessionExport};
pub use store::RatingRecord;
pub use teams::{load_teams, study_plan, Team};
