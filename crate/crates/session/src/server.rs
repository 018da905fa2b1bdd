//! HTTP and WebSocket front end.
//!
//! - `POST /sessions`: create a session from a round plan, or from
//!   `{"mode": "study", "seed": N}` using the loaded teams
//! - `GET /sessions/{id}/export`: plan, progress, outcomes, ratings and
//!   attempt logs as one JSON document
//! - `GET /session?id=...`: the operator socket

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio::sync::mpsc::{self, error::TryRecvError};
use tokio::time::MissedTickBehavior;
use tracing::{debug, info, warn};

use crate::outbox::Outbox;
use crate::protocol::{ClientMessage, ServerMessage};
use crate::round::{RoundRunner, RoundSpec};
use crate::session::{validate_plan, Phase, Session};
use crate::store::SessionStore;
use crate::teams::{study_plan, Team};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub data_dir: PathBuf,
    pub teams: Vec<Team>,
    /// Wall-clock time per simulation tick.
    pub tick_interval: Duration,
    /// Withhold the target from the operator until their robot knows it.
    pub hide_target_until_informed: bool,
    pub outbox_capacity: usize,
}

impl ServerConfig {
    pub fn new(data_dir: PathBuf, teams: Vec<Team>) -> Self {
        Self {
            data_dir,
            teams,
            tick_interval: Duration::from_millis(100),
            hide_target_until_informed: false,
            outbox_capacity: 64,
        }
    }
}

struct Slot {
    session: tokio::sync::Mutex<Session>,
    connected: AtomicBool,
}

pub struct AppState {
    config: ServerConfig,
    sessions: Mutex<HashMap<String, Arc<Slot>>>,
}

impl AppState {
    /// Opens every session already stored under the data directory.
    pub fn load(config: ServerConfig) -> std::io::Result<Arc<Self>> {
        let mut sessions = HashMap::new();
        let root = config.data_dir.join("sessions");
        if root.is_dir() {
            for entry in std::fs::read_dir(&root)? {
                let entry = entry?;
                let id = entry.file_name().to_string_lossy().into_owned();
                match Session::load(SessionStore::open(entry.path()), id.clone()) {
                    Ok(s) => {
                        sessions.insert(id, slot(s));
                    }
                    Err(e) => warn!(session = %id, error = %e, "skipping unreadable session"),
                }
            }
        }
        info!(count = sessions.len(), "sessions loaded");
        Ok(Arc::new(Self {
            config,
            sessions: Mutex::new(sessions),
        }))
    }

    fn get(&self, id: &str) -> Option<Arc<Slot>> {
        self.sessions.lock().expect("session map lock").get(id).cloned()
    }
}

fn slot(session: Session) -> Arc<Slot> {
    Arc::new(Slot {
        session: tokio::sync::Mutex::new(session),
        connected: AtomicBool::new(false),
    })
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/export", get(export_session))
        .route("/session", get(socket))
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, config: ServerConfig) -> std::io::Result<()> {
    let state = AppState::load(config)?;
    info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state)).await
}

/// Binds `addr` and serves in the background; returns the bound address.
pub async fn spawn(addr: SocketAddr, config: ServerConfig) -> std::io::Result<SocketAddr> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let state = AppState::load(config)?;
    tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, router(state)).await {
            warn!(error = %e, "server stopped");
        }
    });
    Ok(local)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CreateRequest {
    Study { mode: String, seed: u64 },
    Plan { rounds: Vec<RoundSpec> },
    Bare(Vec<RoundSpec>),
}

async fn create_session(State(state): State<Arc<AppState>>, Json(body): Json<Value>) -> Response {
    let request: CreateRequest = match serde_json::from_value(body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed session request: {e}")),
    };
    let plan = match request {
        CreateRequest::Study { mode, seed } if mode == "study" => match study_plan(&state.config.teams, seed) {
            Ok(plan) => plan,
            Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, e),
        },
        CreateRequest::Study { mode, .. } => {
            return error(StatusCode::BAD_REQUEST, format!("unknown session mode `{mode}`"))
        }
        CreateRequest::Plan { rounds } | CreateRequest::Bare(rounds) => rounds,
    };
    if let Err(e) = validate_plan(&plan) {
        return error(StatusCode::BAD_REQUEST, e);
    }
    let id = uuid::Uuid::new_v4().to_string();
    let rounds = plan.len();
    let session = match Session::create(&state.config.data_dir, id.clone(), plan) {
        Ok(s) => s,
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    };
    state
        .sessions
        .lock()
        .expect("session map lock")
        .insert(id.clone(), slot(session));
    info!(session = %id, rounds, "session created");
    (StatusCode::CREATED, Json(json!({ "session_id": id, "rounds": rounds }))).into_response()
}

async fn export_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let Some(slot) = state.get(&id) else {
        return error(StatusCode::NOT_FOUND, "no such session");
    };
    let session = slot.session.lock().await;
    match session.export() {
        Ok(export) => Json(export).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

#[derive(Deserialize)]
struct SocketQuery {
    id: String,
}

async fn socket(
    State(state): State<Arc<AppState>>,
    Query(query): Query<SocketQuery>,
    upgrade: WebSocketUpgrade,
) -> Response {
    let Some(slot) = state.get(&query.id) else {
        return error(StatusCode::NOT_FOUND, "no such session");
    };
    if slot.connected.swap(true, Ordering::SeqCst) {
        return error(StatusCode::CONFLICT, "session already has an operator connected");
    }
    let config = state.config.clone();
    upgrade.on_upgrade(move |ws| async move {
        connection(ws, slot.clone(), config).await;
        slot.connected.store(false, Ordering::SeqCst);
    })
}

async fn connection(ws: WebSocket, slot: Arc<Slot>, config: ServerConfig) {
    let (mut sink, mut stream) = ws.split();
    let outbox = Arc::new(Outbox::new(config.outbox_capacity));
    let writer = {
        let outbox = outbox.clone();
        tokio::spawn(async move {
            while let Some(message) = outbox.pop().await {
                if sink.send(Message::Text(message.to_json().into())).await.is_err() {
                    break;
                }
            }
            let _ = sink.close().await;
        })
    };
    let (tx, rx) = mpsc::unbounded_channel();
    let reader = {
        let outbox = outbox.clone();
        tokio::spawn(async move {
            while let Some(Ok(frame)) = stream.next().await {
                match frame {
                    Message::Text(text) => match serde_json::from_str::<ClientMessage>(&text) {
                        Ok(m) => {
                            if tx.send(m).is_err() {
                                break;
                            }
                        }
                        Err(e) => outbox.push(ServerMessage::notice("malformed_message", e.to_string())),
                    },
                    Message::Close(_) => break,
                    _ => {}
                }
            }
        })
    };

    drive(&slot, rx, &outbox, &config).await;

    reader.abort();
    outbox.close();
    let _ = writer.await;
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Handles one operator connection until it goes away.
async fn drive(
    slot: &Slot,
    mut rx: mpsc::UnboundedReceiver<ClientMessage>,
    outbox: &Outbox,
    config: &ServerConfig,
) {
    {
        let session = slot.session.lock().await;
        let state = session.state();
        outbox.push(ServerMessage::notice(
            "connected",
            json!({
                "session_id": session.id(),
                "phase": state.phase,
                "round_index": session.current_round_index(),
                "rounds": session.plan().len(),
            })
            .to_string(),
        ));
    }
    while let Some(message) = rx.recv().await {
        match message {
            ClientMessage::Ready => {
                let spec = match slot.session.lock().await.begin_round() {
                    Ok(spec) => spec,
                    Err(refusal) => {
                        outbox.push(ServerMessage::notice(refusal.code, refusal.text));
                        continue;
                    }
                };
                if !play_round(slot, spec, &mut rx, outbox, config).await {
                    return;
                }
            }
            ClientMessage::Rating(rating) => {
                let mut session = slot.session.lock().await;
                match session.submit_rating(&rating, now_ms()) {
                    Ok(record) => {
                        info!(session = %session.id(), round = record.round_index, "rating stored");
                        outbox.push(ServerMessage::RatingAck {
                            round_index: record.round_index,
                        });
                        if session.state().phase == Phase::Done {
                            outbox.push(ServerMessage::notice("session_complete", "all rounds have been played"));
                        }
                    }
                    Err(refusal) => outbox.push(ServerMessage::notice(refusal.code, refusal.text)),
                }
            }
            ClientMessage::Input { .. } => debug!("input outside a running round ignored"),
        }
    }
}

/// Tracks how far tick boundaries drift from the nominal interval.
struct Jitter {
    nominal: Duration,
    last: Option<Instant>,
    max_ms: f64,
}

impl Jitter {
    fn record(&mut self, now: Instant) {
        if let Some(last) = self.last {
            let deviation = (now - last).as_secs_f64() - self.nominal.as_secs_f64();
            self.max_ms = self.max_ms.max(deviation.abs() * 1000.0);
        }
        self.last = Some(now);
    }
}

/// Runs one round in real time. Returns `false` if the client went away.
async fn play_round(
    slot: &Slot,
    spec: RoundSpec,
    rx: &mut mpsc::UnboundedReceiver<ClientMessage>,
    outbox: &Outbox,
    config: &ServerConfig,
) -> bool {
    let round_index = spec.round_index;
    let mut runner = match RoundRunner::new(spec.clone()) {
        Ok(r) => r,
        Err(e) => {
            warn!(round = round_index, error = %e, "round could not start");
            outbox.push(ServerMessage::notice("round_failed", e.to_string()));
            let _ = slot.session.lock().await.abort_round(&[], 0, 0.0);
            return true;
        }
    };
    outbox.push(ServerMessage::RoundStart {
        round_index,
        time_limit_s: spec.time_limit,
    });
    let hide = config.hide_target_until_informed;
    outbox.push(ServerMessage::Snapshot(runner.snapshot(hide)));

    let mut ticker = tokio::time::interval(config.tick_interval);
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
    ticker.tick().await;
    let mut jitter = Jitter {
        nominal: config.tick_interval,
        last: Some(Instant::now()),
        max_ms: 0.0,
    };
    loop {
        ticker.tick().await;
        jitter.record(Instant::now());
        let mut inputs = Vec::new();
        loop {
            match rx.try_recv() {
                Ok(ClientMessage::Input { input, round_index: r }) => {
                    if r.is_some_and(|r| r != round_index) {
                        debug!(round = round_index, sent_for = r, "input for another round ignored");
                    } else if !input.is_well_formed() {
                        outbox.push(ServerMessage::notice("malformed_input", "key events need a key, buttons must not have one"));
                    } else {
                        inputs.push(input);
                    }
                }
                Ok(ClientMessage::Rating(_)) => {
                    outbox.push(ServerMessage::notice("round_in_progress", "ratings are accepted after the round"))
                }
                Ok(ClientMessage::Ready) => {}
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => {
                    let mut session = slot.session.lock().await;
                    info!(session = %session.id(), round = round_index, tick = runner.tick(), "client left; round discarded");
                    if let Err(e) = session.abort_round(runner.input_log(), runner.tick(), jitter.max_ms) {
                        warn!(error = %e, "could not record abandoned round");
                    }
                    return false;
                }
            }
        }
        let out = runner.step(inputs);
        if let Some(rejection) = out.rejection {
            outbox.push(ServerMessage::notice(rejection.code(), rejection.text()));
        }
        outbox.push(ServerMessage::Snapshot(runner.snapshot(hide)));
        if out.finished {
            break;
        }
    }
    let outcome = runner.outcome();
    let mut session = slot.session.lock().await;
    if let Err(e) = session.finish_round(&spec, &outcome, jitter.max_ms) {
        warn!(error = %e, "could not store round outcome");
        outbox.push(ServerMessage::notice("storage_error", e.to_string()));
    }
    info!(
        session = %session.id(),
        round = round_index,
        success = outcome.success,
        max_jitter_ms = jitter.max_ms,
        dropped_snapshots = outbox.dropped(),
        "round finished"
    );
    outbox.push(ServerMessage::RoundEnd {
        round_index,
        success: outcome.success,
        completion_s: outcome.completion_time,
    });
    true
}
