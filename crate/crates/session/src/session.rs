//! Session progress: which round is next, whether it is being played, and
//! whether its rating is in. Every transition is persisted before it is
//! acknowledged.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use swarm_core::rng::mix;

use crate::protocol::RatingInput;
use crate::round::{LoggedInput, RoundOutcome, RoundSpec};
use crate::store::{
    AttemptRecord, AttemptStatus, OutcomeRecord, RatingRecord, SessionStore, INPUTS, OUTCOMES, PLAN, RATINGS, STATE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    AwaitingReady,
    Running,
    AwaitingRating,
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    /// Position in the plan of the round being played or rated.
    pub current: usize,
    pub phase: Phase,
    /// Abandoned attempts per plan entry.
    pub restarts: Vec<u32>,
}

/// Why a client request was not carried out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refusal {
    pub code: &'static str,
    pub text: String,
}

impl Refusal {
    fn new(code: &'static str, text: impl Into<String>) -> Self {
        Self {
            code,
            text: text.into(),
        }
    }
}

pub fn validate_plan(plan: &[RoundSpec]) -> Result<(), String> {
    if plan.is_empty() {
        return Err("round plan is empty".into());
    }
    for (i, round) in plan.iter().enumerate() {
        if round.round_index != i as u32 + 1 {
            return Err(format!(
                "round {} is at position {}; rounds must be numbered 1..n in order",
                round.round_index,
                i + 1
            ));
        }
        round.validate()?;
    }
    Ok(())
}

pub struct Session {
    id: String,
    plan: Vec<RoundSpec>,
    state: SessionState,
    store: SessionStore,
}

impl Session {
    pub fn create(root: &Path, id: String, plan: Vec<RoundSpec>) -> io::Result<Self> {
        let store = SessionStore::create(root, &id)?;
        let state = SessionState {
            current: 0,
            phase: Phase::AwaitingReady,
            restarts: vec![0; plan.len()],
        };
        store.write_json(PLAN, &plan)?;
        store.write_json(STATE, &state)?;
        Ok(Self { id, plan, state, store })
    }

    /// Reopens a stored session. A round that was running when the server
    /// stopped counts as abandoned.
    pub fn load(store: SessionStore, id: String) -> io::Result<Self> {
        let plan = store.read_json(PLAN)?;
        let state = store.read_json(STATE)?;
        let mut session = Self { id, plan, state, store };
        if session.state.phase == Phase::Running {
            session.abort_round(&[], 0, 0.0)?;
        }
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn plan(&self) -> &[RoundSpec] {
        &self.plan
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    pub fn current_round_index(&self) -> Option<u32> {
        self.plan.get(self.state.current).map(|r| r.round_index)
    }

    /// The current round as it will actually be played: restarted rounds
    /// get a fresh world seed so the target is somewhere new.
    pub fn effective_spec(&self) -> Option<RoundSpec> {
        let mut spec = self.plan.get(self.state.current)?.clone();
        let restarts = self.state.restarts[self.state.current];
        if restarts > 0 {
            spec.config.seed = mix(spec.config.seed, restarts as u64);
        }
        Some(spec)
    }

    fn save_state(&self) -> io::Result<()> {
        self.store.write_json(STATE, &self.state)
    }

    pub fn begin_round(&mut self) -> Result<RoundSpec, Refusal> {
        match self.state.phase {
            Phase::AwaitingReady => {}
            Phase::Running => return Err(Refusal::new("round_in_progress", "a round is already running")),
            Phase::AwaitingRating => {
                return Err(Refusal::new(
                    "rating_required",
                    format!("rate round {} before starting the next one", self.plan[self.state.current].round_index),
                ))
            }
            Phase::Done => return Err(Refusal::new("session_complete", "all rounds have been played")),
        }
        let spec = self.effective_spec().expect("current round exists while awaiting ready");
        self.state.phase = Phase::Running;
        self.save_state()
            .map_err(|e| Refusal::new("storage_error", e.to_string()))?;
        Ok(spec)
    }

    pub fn finish_round(
        &mut self,
        spec: &RoundSpec,
        outcome: &RoundOutcome,
        max_jitter_ms: f64,
    ) -> io::Result<()> {
        self.store.append(
            INPUTS,
            &AttemptRecord {
                round_index: spec.round_index,
                restart: self.state.restarts[self.state.current],
                seed: spec.config.seed,
                status: AttemptStatus::Completed,
                ticks: outcome.snapshot_count - 1,
                max_jitter_ms,
                inputs: outcome.input_log.clone(),
            },
        )?;
        self.store.append(
            OUTCOMES,
            &OutcomeRecord {
                spec: spec.clone(),
                outcome: outcome.clone(),
            },
        )?;
        self.state.phase = Phase::AwaitingRating;
        self.save_state()
    }

    /// Discards the running round; the next `ready` replays it with a new
    /// seed.
    pub fn abort_round(&mut self, inputs: &[LoggedInput], ticks: u64, max_jitter_ms: f64) -> io::Result<()> {
        let Some(spec) = self.effective_spec() else { return Ok(()) };
        self.store.append(
            INPUTS,
            &AttemptRecord {
                round_index: spec.round_index,
                restart: self.state.restarts[self.state.current],
                seed: spec.config.seed,
                status: AttemptStatus::Aborted,
                ticks,
                max_jitter_ms,
                inputs: inputs.to_vec(),
            },
        )?;
        self.state.restarts[self.state.current] += 1;
        self.state.phase = Phase::AwaitingReady;
        self.save_state()
    }

    pub fn submit_rating(&mut self, input: &RatingInput, submitted_at: u64) -> Result<RatingRecord, Refusal> {
        let in_range = |v: i64| (1..=7).contains(&v);
        if !(in_range(input.warmth) && in_range(input.competence) && in_range(input.joint_effort)) {
            return Err(Refusal::new("rating_out_of_range", "ratings must be integers from 1 to 7"));
        }
        let rated = self.rated_rounds();
        if rated.contains(&input.round_index) {
            return Err(Refusal::new(
                "rating_conflict",
                format!("round {} has already been rated", input.round_index),
            ));
        }
        let current = &self.plan[self.state.current.min(self.plan.len() - 1)];
        if self.state.phase != Phase::AwaitingRating || input.round_index != current.round_index {
            return Err(Refusal::new(
                "rating_not_expected",
                format!("round {} is not waiting for a rating", input.round_index),
            ));
        }
        if input.config_id.is_some() && input.config_id != current.config_id() {
            return Err(Refusal::new("rating_wrong_team", "config_id does not match the round"));
        }
        let record = RatingRecord {
            session_id: self.id.clone(),
            round_index: input.round_index,
            config_id: current.config_id(),
            warmth: input.warmth as u8,
            competence: input.competence as u8,
            joint_effort: input.joint_effort as u8,
            submitted_at,
        };
        self.store
            .append(RATINGS, &record)
            .map_err(|e| Refusal::new("storage_error", e.to_string()))?;
        self.state.current += 1;
        self.state.phase = if self.state.current == self.plan.len() {
            Phase::Done
        } else {
            Phase::AwaitingReady
        };
        self.save_state()
            .map_err(|e| Refusal::new("storage_error", e.to_string()))?;
        Ok(record)
    }

    fn rated_rounds(&self) -> Vec<u32> {
        self.plan[..self.state.current].iter().map(|r| r.round_index).collect()
    }

    pub fn export(&self) -> io::Result<SessionExport> {
        Ok(SessionExport {
            session_id: self.id.clone(),
            plan: self.plan.clone(),
            state: self.state.clone(),
            outcomes: self.store.read_lines(OUTCOMES)?,
            ratings: self.store.read_lines(RATINGS)?,
            attempts: self.store.read_lines(INPUTS)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionExport {
    pub session_id: String,
    pub plan: Vec<RoundSpec>,
    pub state: SessionState,
    pub outcomes: Vec<OutcomeRecord>,
    pub ratings: Vec<RatingRecord>,
    pub attempts: Vec<AttemptRecord>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::round::run_round;
    use swarm_core::{BehaviorParams, SwarmConfig};

    fn plan(n: u32) -> Vec<RoundSpec> {
        (1..=n)
            .map(|i| RoundSpec {
                round_index: i,
                config: SwarmConfig::new(BehaviorParams::new(15.0, 4.0, 4.0), i as u64),
                human_robot_id: 0,
                time_limit: 4.0,
            })
            .collect()
    }

    fn rating(round_index: u32, warmth: i64) -> RatingInput {
        RatingInput {
            round_index,
            config_id: None,
            warmth,
            competence: 4,
            joint_effort: 4,
        }
    }

    fn play(s: &mut Session) -> RoundSpec {
        let spec = s.begin_round().unwrap();
        let outcome = run_round(&spec, &[]).unwrap();
        s.finish_round(&spec, &outcome, 0.0).unwrap();
        spec
    }

    #[test]
    fn plans_are_checked() {
        assert!(validate_plan(&[]).is_err());
        let mut p = plan(2);
        assert!(validate_plan(&p).is_ok());
        p[1].round_index = 5;
        assert!(validate_plan(&p).is_err());
        let mut p = plan(1);
        p[0].human_robot_id = 10;
        assert!(validate_plan(&p).is_err());
    }

    #[test]
    fn next_round_waits_for_rating() {
        let root = tempfile::tempdir().unwrap();
        let mut s = Session::create(root.path(), "s1".into(), plan(2)).unwrap();
        play(&mut s);
        assert_eq!(s.begin_round().unwrap_err().code, "rating_required");
        assert_eq!(s.submit_rating(&rating(1, 8), 0).unwrap_err().code, "rating_out_of_range");
        assert_eq!(s.submit_rating(&rating(1, 0), 0).unwrap_err().code, "rating_out_of_range");
        assert_eq!(s.submit_rating(&rating(2, 4), 0).unwrap_err().code, "rating_not_expected");
        s.submit_rating(&rating(1, 7), 5).unwrap();
        assert_eq!(s.submit_rating(&rating(1, 7), 6).unwrap_err().code, "rating_conflict");
        play(&mut s);
        s.submit_rating(&rating(2, 1), 7).unwrap();
        assert_eq!(s.state().phase, Phase::Done);
        assert_eq!(s.begin_round().unwrap_err().code, "session_complete");
        let export = s.export().unwrap();
        assert_eq!(export.outcomes.len(), 2);
        assert_eq!(export.ratings.iter().map(|r| r.warmth).collect::<Vec<_>>(), vec![7, 1]);
    }

    #[test]
    fn abandoned_round_restarts_with_new_seed() {
        let root = tempfile::tempdir().unwrap();
        let mut s = Session::create(root.path(), "s2".into(), plan(1)).unwrap();
        let first = s.begin_round().unwrap();
        s.abort_round(&[], 12, 3.0).unwrap();
        let second = s.begin_round().unwrap();
        assert_eq!(first.round_index, second.round_index);
        assert_ne!(first.config.seed, second.config.seed);
        let attempts = s.export().unwrap().attempts;
        assert_eq!(attempts.len(), 1);
        assert_eq!(attempts[0].status, AttemptStatus::Aborted);
        assert_eq!(attempts[0].ticks, 12);
    }

    #[test]
    fn reload_resumes_at_current_round() {
        let root = tempfile::tempdir().unwrap();
        let mut s = Session::create(root.path(), "s3".into(), plan(3)).unwrap();
        play(&mut s);
        s.submit_rating(&rating(1, 3), 0).unwrap();
        s.begin_round().unwrap();
        let dir = s.store().dir().to_path_buf();
        drop(s);
        let s = Session::load(SessionStore::open(dir), "s3".into()).unwrap();
        assert_eq!(s.state().current, 1);
        assert_eq!(s.state().phase, Phase::AwaitingReady);
        assert_eq!(s.state().restarts, vec![0, 1, 0]);
    }
}
