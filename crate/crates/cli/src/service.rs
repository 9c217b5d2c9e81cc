//! Local JSON-over-HTTP game service with a per-game event stream.

use std::collections::HashMap;
use std::convert::Infallible;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use mirrormode::demos::{record_decision, DemoDataset, DemoHeader};
use mirrormode::encoding::action_masks;
use mirrormode::engine::{
    new_game, ActionTriple, ActionType, CombatForecast, Event, GameConfig, GameMode, GameState, Team, TeamMember,
    UnitRef,
};
use mirrormode::metrics::{write_metrics, EpisodeRecorder, Role};
use mirrormode::mirror::{MirrorAgent, RepairStats};
use mirrormode::neural::load_checkpoint;
use mirrormode::play::play_phase;
use mirrormode::sim::STANDARD_LABEL;
use mirrormode::standard_ai::{next_unit, run_phase};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;
use tokio::sync::broadcast;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Conflict(String),
    #[error("illegal action: {0}")]
    Illegal(mirrormode::engine::IllegalReason),
    #[error("{0}")]
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::Illegal(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut body = json!({ "error": self.to_string() });
        if let ApiError::Illegal(r) = self {
            body["reason"] = json!(r);
        }
        (status, Json(body)).into_response()
    }
}

impl From<mirrormode::engine::EngineError> for ApiError {
    fn from(e: mirrormode::engine::EngineError) -> Self {
        match e {
            mirrormode::engine::EngineError::Illegal(r) => ApiError::Illegal(r),
            mirrormode::engine::EngineError::Config(m) => ApiError::BadRequest(m),
            other => ApiError::Internal(other.to_string()),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Where the service finds checkpoints and writes finished-game files.
#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub game: GameConfig,
    pub models_dir: PathBuf,
    pub data_dir: PathBuf,
}

struct Session {
    mode: GameMode,
    state: GameState,
    agent: Option<MirrorAgent>,
    model: Option<String>,
    demos: DemoDataset,
    step: u32,
    recorder: EpisodeRecorder,
    history: Vec<Event>,
    tx: broadcast::Sender<Event>,
    flushed: bool,
}

#[derive(Default)]
struct Registry {
    sessions: HashMap<String, Session>,
    created: u64,
}

#[derive(Clone)]
pub struct AppState {
    config: Arc<ServiceConfig>,
    registry: Arc<Mutex<Registry>>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        AppState { config: Arc::new(config), registry: Arc::new(Mutex::new(Registry::default())) }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/games", post(create_game))
        .route("/games/{id}", get(get_game))
        .route("/games/{id}/legal", get(legal))
        .route("/games/{id}/actions", post(submit_action))
        .route("/games/{id}/end-phase", post(end_phase))
        .route("/games/{id}/events", get(events))
        .route("/demos/{session}", get(download_demos))
        .route("/models", get(list_models))
        .with_state(state)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateGame {
    #[serde(default)]
    pub mode: GameMode,
    pub seed: Option<u64>,
    pub team: Option<Vec<TeamMember>>,
    pub model: Option<String>,
    /// Label for the player in metrics files.
    pub player: Option<String>,
}

#[derive(Serialize)]
struct GameView<'a> {
    game_id: &'a str,
    mode: GameMode,
    model: Option<&'a str>,
    state: &'a GameState,
    demo_records: usize,
    repairs: Option<RepairStats>,
}

fn view<'a>(id: &'a str, s: &'a Session) -> GameView<'a> {
    GameView {
        game_id: id,
        mode: s.mode,
        model: s.model.as_deref(),
        state: &s.state,
        demo_records: s.demos.records.len(),
        repairs: s.agent.as_ref().map(|a| a.stats),
    }
}

fn checked_name(name: &str) -> ApiResult<&str> {
    if name.is_empty() || name.contains(['/', '\\']) || name.contains("..") {
        return Err(ApiError::BadRequest(format!("invalid name `{name}`")));
    }
    Ok(name)
}

/// Resolves a model name to a checkpoint: `<name>`, `<name>.mmck`, or `<name>/checkpoint.mmck`.
fn model_path(dir: &Path, name: &str) -> Option<PathBuf> {
    [dir.join(name), dir.join(format!("{name}.mmck")), dir.join(name).join("checkpoint.mmck")]
        .into_iter()
        .find(|p| p.is_file())
}

async fn create_game(State(app): State<AppState>, Json(req): Json<CreateGame>) -> ApiResult<Response> {
    let cfg = &app.config;
    let (agent, model) = match (req.mode, &req.model) {
        (GameMode::Mirror, Some(name)) => {
            let name = checked_name(name)?;
            let path = model_path(&cfg.models_dir, name)
                .ok_or_else(|| ApiError::NotFound(format!("no model named `{name}`")))?;
            let ck = load_checkpoint(&path).map_err(|e| ApiError::BadRequest(format!("model `{name}`: {e}")))?;
            let agent = MirrorAgent::new(ck, &cfg.game, req.seed.unwrap_or(0))
                .map_err(|e| ApiError::Conflict(e.to_string()))?;
            (Some(agent), Some(name.to_string()))
        }
        (GameMode::Mirror, None) => return Err(ApiError::BadRequest("mirror games need a `model`".into())),
        (GameMode::Standard, Some(_)) => return Err(ApiError::BadRequest("standard games take no `model`".into())),
        (GameMode::Standard, None) => (None, None),
    };
    let mut reg = app.registry.lock().expect("registry lock");
    reg.created += 1;
    let id = format!("g{}", reg.created);
    let seed = req.seed.unwrap_or(reg.created);
    let state = new_game(&cfg.game, req.mode, req.team.as_deref(), seed)?;
    let player = req.player.unwrap_or_else(|| "player".into());
    let roles = match req.mode {
        GameMode::Standard => [(Role::Player, STANDARD_LABEL.to_string()), (Role::Opponent, player)],
        GameMode::Mirror => [(Role::Player, model.clone().unwrap_or_default()), (Role::Agent, player)],
    };
    let session = Session {
        mode: req.mode,
        state,
        agent,
        model,
        demos: DemoDataset::new(DemoHeader::for_config(&cfg.game)),
        step: 0,
        recorder: EpisodeRecorder::new(roles),
        history: Vec::new(),
        tx: broadcast::channel(256).0,
        flushed: false,
    };
    let body = serde_json::to_value(view(&id, &session)).expect("view serializes");
    reg.sessions.insert(id, session);
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

fn with_session<T>(app: &AppState, id: &str, f: impl FnOnce(&mut Session) -> ApiResult<T>) -> ApiResult<T> {
    let mut reg = app.registry.lock().expect("registry lock");
    let s = reg.sessions.get_mut(id).ok_or_else(|| ApiError::NotFound(format!("no game `{id}`")))?;
    f(s)
}

async fn get_game(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<serde_json::Value>> {
    with_session(&app, &id, |s| Ok(Json(serde_json::to_value(view(&id, s)).expect("view serializes"))))
}

#[derive(Deserialize)]
struct LegalQuery {
    unit: usize,
}

#[derive(Serialize)]
struct AttackDetail {
    target: usize,
    launch_tiles: Vec<usize>,
    forecast: CombatForecast,
}

async fn legal(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<LegalQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    with_session(&app, &id, |s| {
        let st = &s.state;
        let team = st.phase;
        if q.unit >= st.team(team).len() {
            return Err(ApiError::BadRequest(format!("unit {} out of range", q.unit)));
        }
        let u = st.unit(team, q.unit);
        if !u.alive() || u.acted {
            return Err(ApiError::Conflict(format!("{team} unit {} cannot act", q.unit)));
        }
        let masks = action_masks(st, team, q.unit)?;
        let reach = st.reachable_tiles(team, q.unit)?;
        let mut attacks = Vec::new();
        for o in st.attackable_targets(team, q.unit)? {
            attacks.push(AttackDetail {
                target: o.target,
                launch_tiles: o.launch_tiles.iter().collect(),
                forecast: st.combat_forecast(UnitRef::new(team, q.unit), UnitRef::new(team.opponent(), o.target))?,
            });
        }
        Ok(Json(json!({
            "unit": q.unit,
            "team": team,
            "masks": {
                "action_type": masks.action_type,
                "tiles": masks.tile.iter().collect::<Vec<_>>(),
                "targets": masks.target,
            },
            "reachable": reach.iter().collect::<Vec<_>>(),
            "attacks": attacks,
        })))
    })
}

/// Action kind by index (0 wait, 1 move, 2 attack) or by name.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum KindField {
    Index(u8),
    Name(String),
}

impl KindField {
    fn resolve(&self) -> ApiResult<ActionType> {
        let found = match self {
            KindField::Index(i) => ActionType::ALL.get(*i as usize).copied(),
            KindField::Name(n) => match n.to_ascii_lowercase().as_str() {
                "wait" => Some(ActionType::Wait),
                "move" => Some(ActionType::Move),
                "attack" => Some(ActionType::Attack),
                _ => None,
            },
        };
        found.ok_or_else(|| ApiError::BadRequest(format!("unknown action_type {self:?}")))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionRequest {
    pub unit: usize,
    pub action_type: KindField,
    pub tile: usize,
    #[serde(default)]
    pub target: usize,
}

fn publish(s: &mut Session, events: &[Event], data_dir: &Path, id: &str) -> ApiResult<()> {
    for e in events {
        s.recorder.observe(e);
        s.history.push(e.clone());
        let _ = s.tx.send(e.clone());
    }
    if s.state.outcome.is_over() && !s.flushed {
        s.flushed = true;
        flush(s, data_dir, id).map_err(|e| ApiError::Internal(format!("writing session files: {e}")))?;
    }
    Ok(())
}

/// Writes the finished game's demonstrations (standard mode) and metrics.
fn flush(s: &Session, dir: &Path, id: &str) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    if s.mode == GameMode::Standard {
        s.demos.save(&dir.join(format!("{id}.jsonl")))?;
    }
    let f = std::fs::File::create(dir.join(format!("{id}-metrics.csv")))?;
    write_metrics(std::io::BufWriter::new(f), &s.recorder.rows)?;
    Ok(())
}

fn player_turn(s: &Session) -> ApiResult<()> {
    if s.state.outcome.is_over() {
        return Err(ApiError::Conflict("the game is over".into()));
    }
    if s.state.phase != Team::Blue {
        return Err(ApiError::Conflict("it is not the player's phase".into()));
    }
    Ok(())
}

async fn submit_action(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<ActionRequest>,
) -> ApiResult<Json<serde_json::Value>> {
    let data_dir = app.config.data_dir.clone();
    with_session(&app, &id, |s| {
        player_turn(s)?;
        let action = ActionTriple { action_type: req.action_type.resolve()?, tile: req.tile, target: req.target };
        s.state.check_action(req.unit, &action).map_err(ApiError::Illegal)?;
        if s.mode == GameMode::Standard {
            let recs = record_decision(&id, 0, s.step, &s.state, req.unit, action)
                .map_err(|e| ApiError::Internal(e.to_string()))?;
            s.demos.records.extend(recs);
            s.step += 1;
        }
        let events = s.state.apply_in_place(req.unit, action)?;
        publish(s, &events, &data_dir, &id)?;
        Ok(Json(json!({ "events": events, "state": view(&id, s) })))
    })
}

/// Ends the player's phase (units that have not acted wait in place), then
/// plays the whole enemy phase.
async fn end_phase(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<serde_json::Value>> {
    let cfg = app.config.clone();
    with_session(&app, &id, |s| {
        player_turn(s)?;
        let mut events = Vec::new();
        while let Some(slot) = next_unit(&s.state) {
            let here = s.state.unit(Team::Blue, slot).position;
            events.extend(s.state.apply_in_place(slot, ActionTriple::wait(here))?);
            if s.state.outcome.is_over() {
                break;
            }
        }
        if !s.state.outcome.is_over() {
            events.push(s.state.advance_phase_in_place()?);
            match s.agent.as_mut() {
                Some(agent) => events.extend(play_phase(&mut s.state, agent, &mut |_| {})?),
                None => events.extend(run_phase(&mut s.state, cfg.game.standard_ai.movement)?),
            }
        }
        publish(s, &events, &cfg.data_dir, &id)?;
        Ok(Json(json!({ "events": events, "state": view(&id, s) })))
    })
}

/// Server-sent events: the game's history so far, then live events.
async fn events(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Sse<impl Stream<Item = Result<SseEvent, Infallible>>>> {
    let (history, rx) = with_session(&app, &id, |s| Ok((s.history.clone(), s.tx.subscribe())))?;
    let live = stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(e) => return Some((e, rx)),
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    let all = stream::iter(history).chain(live).map(|e| Ok(to_sse(&e)));
    Ok(Sse::new(all).keep_alive(KeepAlive::default()))
}

fn to_sse(e: &Event) -> SseEvent {
    let v = serde_json::to_value(e).expect("event serializes");
    let name = v["event"].as_str().unwrap_or("event").to_string();
    SseEvent::default().event(name).data(v.to_string())
}

async fn download_demos(State(app): State<AppState>, UrlPath(session): UrlPath<String>) -> ApiResult<Response> {
    let name = checked_name(&session)?.to_string();
    let live = {
        let reg = app.registry.lock().expect("registry lock");
        reg.sessions.get(&name).map(|s| (s.mode, s.demos.to_bytes()))
    };
    let bytes = match live {
        Some((GameMode::Standard, b)) => b,
        Some((GameMode::Mirror, _)) => {
            return Err(ApiError::NotFound(format!("`{name}` is a mirror game and records no demonstrations")))
        }
        None => std::fs::read(app.config.data_dir.join(format!("{name}.jsonl")))
            .map_err(|_| ApiError::NotFound(format!("no demonstrations for `{name}`")))?,
    };
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], bytes).into_response())
}

#[derive(Serialize)]
struct ModelInfo {
    name: String,
    step: u64,
    preset: Option<String>,
    value_signals: Vec<String>,
    compatible: bool,
}

async fn list_models(State(app): State<AppState>) -> ApiResult<Json<serde_json::Value>> {
    let dir = &app.config.models_dir;
    let mut models = Vec::new();
    let entries = match std::fs::read_dir(dir) {
        Ok(e) => e,
        Err(_) => return Ok(Json(json!({ "models": models }))),
    };
    let mut names: Vec<String> = entries.filter_map(|e| e.ok()).filter_map(|e| e.file_name().into_string().ok()).collect();
    names.sort();
    for name in names {
        let Some(path) = model_path(dir, &name) else { continue };
        let Ok(ck) = load_checkpoint(&path) else { continue };
        models.push(ModelInfo {
            name: name.trim_end_matches(".mmck").to_string(),
            step: ck.manifest.step,
            preset: ck.manifest.training_config.get("preset").and_then(|v| v.as_str()).map(str::to_string),
            value_signals: ck.manifest.value_signals.clone(),
            compatible: ck.config_warnings(&app.config.game).is_empty(),
        });
    }
    Ok(Json(json!({ "models": models })))
}

/// Binds and serves until the process is stopped.
pub async fn serve(config: ServiceConfig, addr: std::net::SocketAddr) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| anyhow::anyhow!("cannot bind {addr}: {e}"))?;
    eprintln!("serving on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(config))).await?;
    Ok(())
}
