//! Interactive sessions where a person answers the preference queries.
//!
//! [`SessionStore`] holds the sessions and implements the loop; [`router`]
//! exposes it over HTTP with JSON bodies:
//!
//! | method | path                      | body / response                 |
//! |--------|---------------------------|---------------------------------|
//! | POST   | `/sessions`               | [`SessionRequest`] → [`SessionSummary`] |
//! | GET    | `/sessions/{id}`          | → [`SessionSummary`]            |
//! | POST   | `/sessions/{id}/answer`   | [`AnswerRequest`] → [`SessionSummary`] |
//! | GET    | `/sessions/{id}/result`   | → [`SessionResult`]             |

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::preference::{CandidateScores, PairPredictor, TaskEmbedding};
use crate::strategies::{anole_select, sample_query_batch, Selection};
use crate::tasksim::{
    build_experience_pool, candidate_pool_size, decode_task, evaluate_adapted_policy, make_training_tasks,
    perfect_scores, rollout_task, sample_candidate_pool, sample_task, EnvConfig, PointTask, TaskFamily, Trajectory,
};
use crate::ulam::{BudgetConfig, Order, SearchState};

/// Sessions idle for longer than this are dropped.
pub const SESSION_TTL: Duration = Duration::from_secs(3600);
/// Rollouts used to score the final pick.
pub const RESULT_EVAL_EPISODES: usize = 20;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("session {0} not found")]
    NotFound(String),
    #[error("session is {actual:?}, operation needs {expected:?}")]
    WrongPhase { expected: Phase, actual: Phase },
    #[error("stale round: expected round {expected}, got {got}")]
    StaleRound { expected: u32, got: u32 },
    #[error(transparent)]
    Engine(#[from] Error),
}

impl SessionError {
    pub fn status(&self) -> StatusCode {
        match self {
            SessionError::NotFound(_) => StatusCode::NOT_FOUND,
            SessionError::WrongPhase { .. } | SessionError::StaleRound { .. } => StatusCode::CONFLICT,
            SessionError::Engine(Error::Config(_)) => StatusCode::BAD_REQUEST,
            SessionError::Engine(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for SessionError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.to_string() });
        (self.status(), Json(body)).into_response()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    AwaitingAnswer,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preferred {
    First,
    Second,
}

impl From<Preferred> for Order {
    fn from(p: Preferred) -> Self {
        match p {
            Preferred::First => Order::FirstPreferred,
            Preferred::Second => Order::SecondPreferred,
        }
    }
}

fn default_session_family() -> String {
    TaskFamily::RandDir.name().to_string()
}

/// Body of `POST /sessions`; every field but `family` is an override.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionRequest {
    #[serde(default = "default_session_family")]
    pub family: String,
    #[serde(rename = "K", default)]
    pub total_queries: Option<u32>,
    #[serde(rename = "K_E", default)]
    pub lie_budget: Option<u32>,
    #[serde(rename = "M", default)]
    pub pool_size: Option<usize>,
    #[serde(rename = "B", default)]
    pub batch_size: Option<usize>,
    #[serde(rename = "N", default)]
    pub training_tasks: Option<usize>,
    #[serde(default)]
    pub experience_size: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Make one pooled candidate's decoded task the assigned goal.
    #[serde(default)]
    pub plant_true_task: bool,
}

impl SessionRequest {
    pub fn new(family: TaskFamily) -> Self {
        SessionRequest {
            family: family.name().to_string(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalView {
    pub kind: String,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryView {
    pub first: Vec<[f64; 2]>,
    pub second: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateView {
    pub x: f64,
    pub y: f64,
    pub mismatches: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub phase: Phase,
    pub round: u32,
    pub total_rounds: u32,
    pub total_volume: u64,
    pub goal: GoalView,
    pub query: Option<QueryView>,
    pub candidates: Vec<CandidateView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<usize>,
    /// Noise-free rollout of the chosen policy once the session is done.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preview: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRequest {
    pub round_index: u32,
    pub preferred: Preferred,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub selected_index: usize,
    pub mismatches: u32,
    pub mean_return: f64,
    pub volume_trace: Vec<u64>,
    pub selected_embedding: TaskEmbedding,
}

/// One interactive inference loop.
#[derive(Debug)]
pub struct Session {
    id: String,
    family: TaskFamily,
    env: EnvConfig,
    true_task: PointTask,
    pool: Vec<TaskEmbedding>,
    experience: Vec<Trajectory>,
    predictor: CandidateScores,
    batch_size: usize,
    state: SearchState,
    pending: Option<Selection>,
    result: Option<SessionResult>,
    rng: ChaCha8Rng,
}

/// Polyline for display; forward/backward motion is drawn against the timestep.
fn render(family: TaskFamily, traj: &Trajectory) -> Vec<[f64; 2]> {
    match family {
        TaskFamily::FwdBack => traj
            .positions
            .iter()
            .enumerate()
            .map(|(t, p)| [t as f64, p[0]])
            .collect(),
        _ => traj.polyline(),
    }
}

impl Session {
    fn create(id: String, req: &SessionRequest) -> Result<Session, Error> {
        let family: TaskFamily = req.family.parse()?;
        let budget = BudgetConfig::new(req.total_queries.unwrap_or(10), req.lie_budget.unwrap_or(2))?;
        let pool_size = req.pool_size.unwrap_or_else(|| candidate_pool_size(&budget));
        let batch_size = req.batch_size.unwrap_or(crate::strategies::DEFAULT_BATCH_SIZE);
        let experience_size = req.experience_size.unwrap_or(1000);
        if pool_size == 0 || batch_size == 0 || experience_size < 2 {
            return Err(Error::Config("M, B must be positive and experience_size at least 2".into()));
        }
        let seed = req.seed.unwrap_or_else(|| rand::rng().random());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = EnvConfig::default();
        let training = make_training_tasks(family, req.training_tasks.unwrap_or(10), rng.random())?;
        let pool = sample_candidate_pool(&training, pool_size, &mut rng);
        let true_task = if req.plant_true_task {
            let idx = rng.random_range(0..pool.len());
            decode_task(family, &pool[idx])?
        } else {
            sample_task(family, &mut rng)
        };
        let experience = build_experience_pool(&training, &env, experience_size, &mut rng)?;
        let predictor = perfect_scores(family, &pool, &experience)?;
        let state = SearchState::new(budget, pool.len())?;
        let mut session = Session {
            id,
            family,
            env,
            true_task,
            pool,
            experience,
            predictor,
            batch_size,
            state,
            pending: None,
            result: None,
            rng,
        };
        session.propose()?;
        Ok(session)
    }

    fn propose(&mut self) -> Result<(), Error> {
        let batch = sample_query_batch(self.experience.len(), self.batch_size, &mut self.rng)?;
        self.pending = Some(anole_select(&batch, &self.predictor, &self.state)?);
        Ok(())
    }

    pub fn phase(&self) -> Phase {
        if self.result.is_some() {
            Phase::Done
        } else {
            Phase::AwaitingAnswer
        }
    }

    /// One-based index of the round awaiting an answer (`K` once done).
    pub fn round(&self) -> u32 {
        match self.phase() {
            Phase::AwaitingAnswer => self.state.round() + 1,
            Phase::Done => self.state.round(),
        }
    }

    pub fn true_task(&self) -> &PointTask {
        &self.true_task
    }

    /// Branch volumes of the pending query.
    pub fn pending_volumes(&self) -> Option<(u64, u64)> {
        self.pending.and_then(|s| s.volumes)
    }

    fn goal(&self) -> GoalView {
        let kind = match self.family {
            TaskFamily::FwdBack => "sign",
            TaskFamily::RandVel => "velocity",
            TaskFamily::RandDir => "direction",
            TaskFamily::RandGoal => "point",
        };
        GoalView {
            kind: kind.to_string(),
            vector: self.true_task.param.clone(),
        }
    }

    fn preview(&self, selected: usize) -> Result<Vec<[f64; 2]>, Error> {
        let task = decode_task(self.family, &self.pool[selected])?;
        let mut quiet = ChaCha8Rng::seed_from_u64(0);
        Ok(render(self.family, &rollout_task(&task, &self.env.noiseless(), &mut quiet)))
    }

    pub fn summary(&self) -> Result<SessionSummary, Error> {
        let query = self.pending.filter(|_| self.phase() == Phase::AwaitingAnswer).map(|s| QueryView {
            first: render(self.family, &self.experience[s.pair.0]),
            second: render(self.family, &self.experience[s.pair.1]),
        });
        let candidates = self
            .pool
            .iter()
            .zip(self.state.mismatches())
            .map(|(z, &mismatches)| CandidateView {
                x: z.0.first().copied().unwrap_or(0.0),
                y: z.0.get(1).copied().unwrap_or(0.0),
                mismatches,
            })
            .collect();
        let decision = self.result.as_ref().map(|r| r.selected_index);
        let preview = decision.map(|d| self.preview(d)).transpose()?;
        Ok(SessionSummary {
            session_id: self.id.clone(),
            phase: self.phase(),
            round: self.round(),
            total_rounds: self.state.budget().total_queries(),
            total_volume: self.state.total_volume(),
            goal: self.goal(),
            query,
            candidates,
            decision,
            preview,
        })
    }

    pub fn submit(&mut self, round_index: u32, preferred: Preferred) -> Result<SessionSummary, SessionError> {
        if self.phase() != Phase::AwaitingAnswer {
            return Err(SessionError::WrongPhase {
                expected: Phase::AwaitingAnswer,
                actual: self.phase(),
            });
        }
        if round_index != self.round() {
            return Err(SessionError::StaleRound {
                expected: self.round(),
                got: round_index,
            });
        }
        let selection = self.pending.expect("a query is pending while awaiting an answer");
        let (first, second) = selection.pair;
        let bits = self.predictor.bits(first, second);
        self.state.record(first, second, preferred.into(), &bits)?;
        if self.state.is_finished() {
            let selected = self.state.decision();
            let mean_return = evaluate_adapted_policy(
                self.family,
                &self.pool[selected],
                &self.true_task,
                &self.env,
                RESULT_EVAL_EPISODES,
                &mut self.rng,
            )?;
            self.pending = None;
            self.result = Some(SessionResult {
                selected_index: selected,
                mismatches: self.state.mismatches()[selected],
                mean_return,
                volume_trace: self.state.volume_trace().to_vec(),
                selected_embedding: self.pool[selected].clone(),
            });
        } else {
            self.propose()?;
        }
        Ok(self.summary()?)
    }

    pub fn result(&self) -> Result<SessionResult, SessionError> {
        self.result.clone().ok_or(SessionError::WrongPhase {
            expected: Phase::Done,
            actual: self.phase(),
        })
    }
}

struct Entry {
    session: Arc<Mutex<Session>>,
    last_access: Instant,
}

/// Registry of live sessions with idle expiry.
pub struct SessionStore {
    sessions: Mutex<HashMap<String, Entry>>,
    ttl: Duration,
}

impl Default for SessionStore {
    fn default() -> Self {
        Self::new(SESSION_TTL)
    }
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        SessionStore {
            sessions: Mutex::new(HashMap::new()),
            ttl,
        }
    }

    fn expire(&self, map: &mut HashMap<String, Entry>) {
        let now = Instant::now();
        map.retain(|_, e| now.duration_since(e.last_access) <= self.ttl);
    }

    fn lookup(&self, id: &str) -> Result<Arc<Mutex<Session>>, SessionError> {
        let mut map = self.sessions.lock().expect("registry lock poisoned");
        self.expire(&mut map);
        let entry = map.get_mut(id).ok_or_else(|| SessionError::NotFound(id.to_string()))?;
        entry.last_access = Instant::now();
        Ok(entry.session.clone())
    }

    pub fn len(&self) -> usize {
        let mut map = self.sessions.lock().expect("registry lock poisoned");
        self.expire(&mut map);
        map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn create(&self, req: &SessionRequest) -> Result<SessionSummary, SessionError> {
        let id = uuid::Uuid::new_v4().to_string();
        let session = Session::create(id.clone(), req)?;
        let summary = session.summary()?;
        let mut map = self.sessions.lock().expect("registry lock poisoned");
        self.expire(&mut map);
        map.insert(
            id,
            Entry {
                session: Arc::new(Mutex::new(session)),
                last_access: Instant::now(),
            },
        );
        Ok(summary)
    }

    pub fn get_state(&self, id: &str) -> Result<SessionSummary, SessionError> {
        let session = self.lookup(id)?;
        let guard = session.lock().expect("session lock poisoned");
        Ok(guard.summary()?)
    }

    pub fn submit_answer(&self, id: &str, round_index: u32, preferred: Preferred) -> Result<SessionSummary, SessionError> {
        let session = self.lookup(id)?;
        let mut guard = session.lock().expect("session lock poisoned");
        guard.submit(round_index, preferred)
    }

    pub fn get_result(&self, id: &str) -> Result<SessionResult, SessionError> {
        let session = self.lookup(id)?;
        let guard = session.lock().expect("session lock poisoned");
        guard.result()
    }

    /// Runs `f` with exclusive access to a session.
    pub fn with_session<T>(&self, id: &str, f: impl FnOnce(&Session) -> T) -> Result<T, SessionError> {
        let session = self.lookup(id)?;
        let guard = session.lock().expect("session lock poisoned");
        Ok(f(&guard))
    }
}

async fn create_handler(
    State(store): State<Arc<SessionStore>>,
    Json(req): Json<SessionRequest>,
) -> Result<(StatusCode, Json<SessionSummary>), SessionError> {
    let summary = tokio::task::spawn_blocking(move || store.create(&req))
        .await
        .map_err(|e| Error::Contract(e.to_string()))??;
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn state_handler(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
) -> Result<Json<SessionSummary>, SessionError> {
    store.get_state(&id).map(Json)
}

async fn answer_handler(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    Json(body): Json<AnswerRequest>,
) -> Result<Json<SessionSummary>, SessionError> {
    let summary = tokio::task::spawn_blocking(move || store.submit_answer(&id, body.round_index, body.preferred))
        .await
        .map_err(|e| Error::Contract(e.to_string()))??;
    Ok(Json(summary))
}

async fn result_handler(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
) -> Result<Json<SessionResult>, SessionError> {
    store.get_result(&id).map(Json)
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/sessions", post(create_handler))
        .route("/sessions/{id}", get(state_handler))
        .route("/sessions/{id}/answer", post(answer_handler))
        .route("/sessions/{id}/result", get(result_handler))
        .with_state(store)
}

/// Serves the session API until the process is stopped.
pub async fn serve(addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(Arc::new(SessionStore::default()))).await
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasksim::true_return;

    fn small(family: TaskFamily) -> SessionRequest {
        SessionRequest {
            experience_size: Some(200),
            batch_size: Some(40),
            seed: Some(7),
            ..SessionRequest::new(family)
        }
    }

    fn truthful(summary: &SessionSummary, task: &PointTask, family: TaskFamily) -> Preferred {
        let q = summary.query.as_ref().unwrap();
        // rebuild displacements from the polylines
        let ret = |line: &Vec<[f64; 2]>| {
            let positions: Vec<[f64; 2]> = match family {
                TaskFamily::FwdBack => line.iter().map(|p| [p[1], 0.0]).collect(),
                _ => line.clone(),
            };
            let actions = positions.windows(2).map(|w| [w[1][0] - w[0][0], w[1][1] - w[0][1]]).collect();
            true_return(task, &Trajectory::from_actions(positions[0], actions, EnvConfig::default().dt))
        };
        if ret(&q.first) >= ret(&q.second) {
            Preferred::First
        } else {
            Preferred::Second
        }
    }

    #[test]
    fn create_defaults_and_distinct_ids() {
        let store = SessionStore::default();
        let a = store.create(&SessionRequest::new(TaskFamily::RandDir)).unwrap();
        assert_eq!((a.round, a.total_rounds, a.total_volume), (1, 10, 1008));
        assert_eq!(a.phase, Phase::AwaitingAnswer);
        assert_eq!(a.candidates.len(), 18);
        assert!(a.query.is_some());
        let b = store.create(&small(TaskFamily::RandGoal)).unwrap();
        assert_ne!(a.session_id, b.session_id);
        let bad = SessionRequest { family: "Walker".into(), ..Default::default() };
        assert!(matches!(store.create(&bad), Err(SessionError::Engine(Error::Config(_)))));
        assert_eq!(store.get_state(&a.session_id).unwrap().round, 1);
        assert!(matches!(store.get_state("nope"), Err(SessionError::NotFound(_))));
    }

    #[test]
    fn full_loop_with_guards() {
        let store = SessionStore::default();
        let s = store.create(&SessionRequest { plant_true_task: true, ..small(TaskFamily::RandDir) }).unwrap();
        let id = s.session_id.clone();
        let task = store.with_session(&id, |s| s.true_task().clone()).unwrap();
        assert!(matches!(store.get_result(&id), Err(SessionError::WrongPhase { .. })));
        let mut summary = s;
        for round in 1..=10 {
            let (v1, v2) = store.with_session(&id, |s| s.pending_volumes().unwrap()).unwrap();
            let answer = truthful(&summary, &task, TaskFamily::RandDir);
            let next = store.submit_answer(&id, round, answer).unwrap();
            assert_eq!(next.total_volume, if answer == Preferred::First { v1 } else { v2 });
            let stale = store.submit_answer(&id, round, answer);
            if round < 10 {
                assert!(matches!(stale, Err(SessionError::StaleRound { .. })));
            } else {
                assert!(matches!(stale, Err(SessionError::WrongPhase { .. })));
            }
            assert_eq!(store.get_state(&id).unwrap(), next);
            summary = next;
        }
        assert_eq!(summary.phase, Phase::Done);
        assert!(summary.preview.is_some());
        assert!(matches!(store.submit_answer(&id, 11, Preferred::First), Err(SessionError::WrongPhase { .. })));
        let result = store.get_result(&id).unwrap();
        assert_eq!(result.volume_trace.len(), 11);
        let mism: Vec<u32> = summary.candidates.iter().map(|c| c.mismatches).collect();
        assert_eq!(Some(result.selected_index), summary.decision);
        assert_eq!(result.selected_index, crate::ulam::final_decision(&mism).unwrap());
        assert_eq!(result.mismatches, 0);
    }

    #[test]
    fn fwd_back_renders_against_time() {
        let store = SessionStore::default();
        let s = store.create(&small(TaskFamily::FwdBack)).unwrap();
        let q = s.query.unwrap();
        assert_eq!(q.first.len(), 65);
        assert!(q.first.iter().enumerate().all(|(t, p)| p[0] == t as f64));
        assert_eq!(s.goal.kind, "sign");
    }

    #[test]
    fn idle_sessions_expire() {
        let store = SessionStore::new(Duration::from_millis(0));
        let s = store.create(&small(TaskFamily::RandVel)).unwrap();
        std::thread::sleep(Duration::from_millis(5));
        assert!(matches!(store.get_state(&s.session_id), Err(SessionError::NotFound(_))));
        assert!(store.is_empty());
    }
}
