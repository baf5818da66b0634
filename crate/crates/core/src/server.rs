//! JSON-over-HTTP session service with a server-sent event stream per
//! session. The server owns all game state; clients only render it.

use std::collections::HashMap;
use std::convert::Infallible;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::{broadcast, Mutex, RwLock};
use tokio_stream::wrappers::BroadcastStream;
use tower_http::services::ServeDir;

use crate::grid::{Difficulty, GridLevel, MapTheme};
use crate::pcg::{
    fingerprint_hex, generate_level, level_fingerprint, level_stream, DifficultyProfile, ProfileSet,
};
use crate::repair::{
    generate_problem, grade, maybe_trigger_repair, RepairBank, RepairProblem, RepairSubmission,
    DEFAULT_REPAIR_PROBABILITY,
};
use crate::rng::GameRng;
use crate::robot::{
    build_complete, compute_stats, purchase, BuildFile, Catalog, Inventory, RobotBuild, RobotError,
    RobotStats, Wallet,
};
use crate::sim::{
    finalize, new_session, step, Command, LevelResult, SimError, SimState, TickOutcome,
};

pub const DEFAULT_STARTING_BALANCE: u64 = 500;
pub const DEFAULT_IDLE_TIMEOUT: Duration = Duration::from_secs(30 * 60);

/// Stream id for per-session draws (repair roll, repair seed).
const SESSION_STREAM: u64 = 0x5345_5353_0000_0000;
const EVENT_BUFFER: usize = 1024;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub repair_probability: f64,
    pub idle_timeout: Duration,
    pub snapshot_dir: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
    pub starting_balance: u64,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            repair_probability: DEFAULT_REPAIR_PROBABILITY,
            idle_timeout: DEFAULT_IDLE_TIMEOUT,
            snapshot_dir: None,
            static_dir: None,
            starting_balance: DEFAULT_STARTING_BALANCE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Workshop,
    RepairRequired,
    Arcade,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SessionEvent {
    Phase { phase: Phase },
    Tick { outcome: TickOutcome },
    Result { result: LevelResult },
}

/// One entry of a session's event stream. `seq` starts at 1 and has no gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEnvelope {
    pub seq: u64,
    pub tick: u64,
    pub event: SessionEvent,
    pub state_digest: String,
}

struct Session {
    id: String,
    seed: u64,
    theme: MapTheme,
    difficulty: Difficulty,
    level: GridLevel,
    profile: DifficultyProfile,
    build: RobotBuild,
    wallet: Wallet,
    inventory: Inventory,
    pending_repair: Option<RepairProblem>,
    repair_cleared: bool,
    phase: Phase,
    stats: Option<RobotStats>,
    sim: Option<SimState>,
    result: Option<LevelResult>,
    events: Vec<EventEnvelope>,
    tx: broadcast::Sender<EventEnvelope>,
    last_active: Instant,
}

/// On-disk form of a session.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Snapshot {
    session_id: String,
    seed: u64,
    theme: MapTheme,
    difficulty: Difficulty,
    level: Value,
    profile: DifficultyProfile,
    build: BuildFile,
    wallet: Wallet,
    inventory: Inventory,
    pending_repair: Option<RepairProblem>,
    repair_cleared: bool,
    phase: Phase,
    stats: Option<RobotStats>,
    sim: Option<SimState>,
    result: Option<LevelResult>,
    events: Vec<EventEnvelope>,
}

impl Session {
    fn push(&mut self, event: SessionEvent) {
        let (tick, state_digest) = match &self.sim {
            Some(sim) => (sim.tick, sim.digest()),
            None => (0, String::new()),
        };
        let envelope = EventEnvelope {
            seq: self.events.len() as u64 + 1,
            tick,
            event,
            state_digest,
        };
        self.events.push(envelope.clone());
        // No receivers is fine; the backlog covers late subscribers.
        let _ = self.tx.send(envelope);
    }

    fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
        self.push(SessionEvent::Phase { phase });
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            session_id: self.id.clone(),
            seed: self.seed,
            theme: self.theme,
            difficulty: self.difficulty,
            level: self.level.to_json_value(),
            profile: self.profile.clone(),
            build: self.build.to_file(),
            wallet: self.wallet,
            inventory: self.inventory.clone(),
            pending_repair: self.pending_repair.clone(),
            repair_cleared: self.repair_cleared,
            phase: self.phase,
            stats: self.stats,
            sim: self.sim.clone(),
            result: self.result,
            events: self.events.clone(),
        }
    }

    fn from_snapshot(s: Snapshot, catalog: &Catalog) -> Result<Self, String> {
        let level = GridLevel::from_json_value(s.level).map_err(|e| e.to_string())?;
        let build = catalog.resolve_build(&s.build).map_err(|e| e.to_string())?;
        Ok(Self {
            id: s.session_id,
            seed: s.seed,
            theme: s.theme,
            difficulty: s.difficulty,
            level,
            profile: s.profile,
            build,
            wallet: s.wallet,
            inventory: s.inventory,
            pending_repair: s.pending_repair,
            repair_cleared: s.repair_cleared,
            phase: s.phase,
            stats: s.stats,
            sim: s.sim,
            result: s.result,
            events: s.events,
            tx: broadcast::channel(EVENT_BUFFER).0,
            last_active: Instant::now(),
        })
    }

    fn view(&self, catalog: &Catalog) -> Value {
        json!({
            "session_id": self.id,
            "seed": self.seed,
            "theme": self.theme,
            "difficulty": self.difficulty,
            "phase": self.phase,
            "level": self.level.to_json_value(),
            "fingerprint": fingerprint_hex(level_fingerprint(&self.level)),
            "build": self.build.to_file(),
            "stats": compute_stats(&self.build, catalog),
            "complete": build_complete(&self.build),
            "filled_slots": self.build.filled_slots(),
            "wallet": self.wallet,
            "inventory": self.inventory,
            "repair_pending": self.pending_repair.is_some() && !self.repair_cleared,
            "repair": self.client_repair(),
            "sim": self.sim,
            "result": self.result,
            "last_seq": self.events.len(),
        })
    }

    fn client_repair(&self) -> Value {
        match (&self.pending_repair, self.phase) {
            (Some(p), Phase::RepairRequired) => {
                serde_json::to_value(p.client_view()).expect("serialisable")
            }
            _ => Value::Null,
        }
    }

    fn begin_arcade(&mut self, catalog: &Catalog) -> Result<(), ApiError> {
        let stats = compute_stats(&self.build, catalog);
        let sim = new_session(&self.level, &stats)
            .map_err(|e| ApiError::new(StatusCode::CONFLICT, e.to_string()))?;
        self.stats = Some(stats);
        self.sim = Some(sim);
        self.set_phase(Phase::Arcade);
        Ok(())
    }
}

struct Shared {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    catalog: Catalog,
    bank: RepairBank,
    profiles: ProfileSet,
    config: ServerConfig,
    counter: AtomicU64,
    salt: u64,
}

#[derive(Clone)]
pub struct AppState {
    shared: Arc<Shared>,
}

impl AppState {
    pub fn new(config: ServerConfig, profiles: ProfileSet) -> Self {
        Self::with_parts(config, profiles, Catalog::shipped(), RepairBank::shipped())
    }

    pub fn with_parts(
        config: ServerConfig,
        profiles: ProfileSet,
        catalog: Catalog,
        bank: RepairBank,
    ) -> Self {
        use std::hash::{BuildHasher, RandomState};
        let salt = RandomState::new().hash_one(Instant::now());
        Self {
            shared: Arc::new(Shared {
                sessions: RwLock::new(HashMap::new()),
                catalog,
                bank,
                profiles,
                config,
                counter: AtomicU64::new(0),
                salt,
            }),
        }
    }

    pub async fn session_count(&self) -> usize {
        self.shared.sessions.read().await.len()
    }

    fn new_id(&self) -> String {
        use std::hash::{BuildHasher, RandomState};
        let n = self.shared.counter.fetch_add(1, Ordering::Relaxed);
        let mixed = RandomState::new().hash_one((n, self.shared.salt));
        format!("{mixed:016x}{n:04x}")
    }

    async fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.shared
            .sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session `{id}`")))
    }

    /// Drops sessions idle for longer than the configured timeout.
    pub async fn expire_idle(&self) -> usize {
        let timeout = self.shared.config.idle_timeout;
        let mut sessions = self.shared.sessions.write().await;
        let before = sessions.len();
        let mut expired = Vec::new();
        for (id, s) in sessions.iter() {
            if let Ok(s) = s.try_lock() {
                if s.last_active.elapsed() >= timeout {
                    expired.push(id.clone());
                }
            }
        }
        for id in &expired {
            sessions.remove(id);
            if let Some(dir) = &self.shared.config.snapshot_dir {
                let _ = std::fs::remove_file(dir.join(format!("{id}.json")));
            }
        }
        before - sessions.len()
    }

    fn persist(&self, session: &Session) {
        let Some(dir) = &self.shared.config.snapshot_dir else {
            return;
        };
        let text = serde_json::to_string(&session.snapshot()).expect("snapshot serialises");
        let path = dir.join(format!("{}.json", session.id));
        let tmp = dir.join(format!(".{}.json.tmp", session.id));
        if let Err(e) = std::fs::write(&tmp, text).and_then(|_| std::fs::rename(&tmp, &path)) {
            eprintln!("warning: could not write snapshot {}: {e}", path.display());
        }
    }

    /// Loads every snapshot in the configured directory; returns how many
    /// sessions were restored.
    pub async fn load_snapshots(&self) -> std::io::Result<usize> {
        let Some(dir) = &self.shared.config.snapshot_dir else {
            return Ok(0);
        };
        std::fs::create_dir_all(dir)?;
        let mut restored = 0;
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_none_or(|e| e != "json") {
                continue;
            }
            let parsed = std::fs::read_to_string(&path)
                .map_err(|e| e.to_string())
                .and_then(|t| serde_json::from_str::<Snapshot>(&t).map_err(|e| e.to_string()))
                .and_then(|s| Session::from_snapshot(s, &self.shared.catalog));
            match parsed {
                Ok(session) => {
                    self.shared
                        .sessions
                        .write()
                        .await
                        .insert(session.id.clone(), Arc::new(Mutex::new(session)));
                    restored += 1;
                }
                Err(e) => eprintln!("warning: skipping snapshot {}: {e}", path.display()),
            }
        }
        Ok(restored)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "error": message.into() }),
        }
    }

    fn wrong_phase(phase: Phase, wanted: &str) -> Self {
        Self {
            status: StatusCode::CONFLICT,
            body: json!({ "error": format!("session is in phase {}, expected {wanted}", phase_name(phase)), "phase": phase }),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn phase_name(phase: Phase) -> String {
    serde_json::to_value(phase)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn parse_body<T: DeserializeOwned>(body: &Bytes, status: StatusCode) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(status, format!("malformed request body: {e}")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    seed: u64,
    theme: String,
    difficulty: String,
    starting_balance: Option<u64>,
    force_repair: Option<bool>,
}

async fn create_session(State(app): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateRequest = parse_body(&body, StatusCode::BAD_REQUEST)?;
    let bad = |e: crate::grid::UnknownName| ApiError::new(StatusCode::BAD_REQUEST, e.to_string());
    let theme: MapTheme = req.theme.parse().map_err(bad)?;
    let difficulty: Difficulty = req.difficulty.parse().map_err(bad)?;
    let shared = &app.shared;
    let profile = shared.profiles.get(difficulty).clone();
    let level = generate_level(req.seed, theme, difficulty, &profile)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;

    let mut rng = GameRng::new(req.seed, SESSION_STREAM + level_stream(theme, difficulty));
    let flagged = match req.force_repair {
        Some(forced) => forced,
        None => maybe_trigger_repair(&mut rng, shared.config.repair_probability),
    };
    let pending_repair = if flagged {
        let problem_seed = rng.next_u64();
        Some(
            generate_problem(problem_seed, difficulty, &shared.bank)
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?,
        )
    } else {
        None
    };

    let mut session = Session {
        id: app.new_id(),
        seed: req.seed,
        theme,
        difficulty,
        level,
        profile,
        build: RobotBuild::new(),
        wallet: Wallet::new(
            req.starting_balance
                .unwrap_or(shared.config.starting_balance),
        ),
        inventory: shared.catalog.starter_inventory(),
        pending_repair,
        repair_cleared: false,
        phase: Phase::Workshop,
        stats: None,
        sim: None,
        result: None,
        events: Vec::new(),
        tx: broadcast::channel(EVENT_BUFFER).0,
        last_active: Instant::now(),
    };
    session.push(SessionEvent::Phase {
        phase: Phase::Workshop,
    });
    let view = session.view(&shared.catalog);
    app.persist(&session);
    shared
        .sessions
        .write()
        .await
        .insert(session.id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn get_session(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let session = app.session(&id).await?;
    let mut s = session.lock().await;
    s.last_active = Instant::now();
    Ok(Json(s.view(&app.shared.catalog)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BuildRequest {
    build: BuildFile,
}

async fn put_build(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let session = app.session(&id).await?;
    let mut s = session.lock().await;
    s.last_active = Instant::now();
    if s.phase != Phase::Workshop {
        return Err(ApiError::wrong_phase(s.phase, "workshop"));
    }
    let req: BuildRequest = parse_body(&body, StatusCode::UNPROCESSABLE_ENTITY)?;
    let catalog = &app.shared.catalog;
    let build = catalog
        .resolve_build(&req.build)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    if let Some(spec) = build.components().find(|c| !s.inventory.owns(&c.id)) {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            RobotError::NotOwned(spec.id.clone()).to_string(),
        ));
    }
    s.build = build;
    app.persist(&s);
    Ok(Json(json!({
        "build": s.build.to_file(),
        "stats": compute_stats(&s.build, catalog),
        "complete": build_complete(&s.build),
        "filled_slots": s.build.filled_slots(),
        "wallet": s.wallet,
    })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PurchaseRequest {
    component_id: String,
}

async fn post_purchase(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let session = app.session(&id).await?;
    let mut s = session.lock().await;
    s.last_active = Instant::now();
    if s.phase != Phase::Workshop {
        return Err(ApiError::wrong_phase(s.phase, "workshop"));
    }
    let req: PurchaseRequest = parse_body(&body, StatusCode::UNPROCESSABLE_ENTITY)?;
    let spec = app
        .shared
        .catalog
        .get(&req.component_id)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    match purchase(s.wallet, spec, &s.inventory) {
        Ok((wallet, inventory)) => {
            s.wallet = wallet;
            s.inventory = inventory;
            app.persist(&s);
            Ok(Json(
                json!({ "wallet": s.wallet, "inventory": s.inventory }),
            ))
        }
        Err(e @ RobotError::InsufficientFunds { .. }) => Err(ApiError {
            status: StatusCode::PAYMENT_REQUIRED,
            body: json!({ "error": e.to_string(), "wallet": s.wallet }),
        }),
        Err(e) => Err(ApiError::new(StatusCode::CONFLICT, e.to_string())),
    }
}

async fn post_start(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let session = app.session(&id).await?;
    let mut s = session.lock().await;
    s.last_active = Instant::now();
    if s.phase != Phase::Workshop {
        return Err(ApiError::wrong_phase(s.phase, "workshop"));
    }
    if !build_complete(&s.build) {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            format!(
                "build is incomplete: {} of 6 slots filled",
                s.build.filled_slots()
            ),
        ));
    }
    if s.pending_repair.is_some() && !s.repair_cleared {
        s.set_phase(Phase::RepairRequired);
    } else {
        s.begin_arcade(&app.shared.catalog)?;
    }
    app.persist(&s);
    Ok(Json(
        json!({ "phase": s.phase, "repair": s.client_repair(), "sim": s.sim, "stats": s.stats }),
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CommandRequest {
    command: String,
}

async fn post_command(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let session = app.session(&id).await?;
    let mut s = session.lock().await;
    s.last_active = Instant::now();
    if s.phase != Phase::Arcade {
        return Err(ApiError::wrong_phase(s.phase, "arcade"));
    }
    let req: CommandRequest = parse_body(&body, StatusCode::UNPROCESSABLE_ENTITY)?;
    let command: Command = req
        .command
        .parse()
        .map_err(|e: crate::sim::UnknownCommand| {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
        })?;

    let (Some(sim), Some(stats)) = (&s.sim, s.stats) else {
        return Err(ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "arcade session has no simulation",
        ));
    };
    let (next, outcome) = step(sim, command, &s.level, &stats).map_err(|e| match e {
        SimError::Finished(_) => ApiError::new(StatusCode::CONFLICT, e.to_string()),
        other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, other.to_string()),
    })?;
    s.sim = Some(next);
    s.push(SessionEvent::Tick {
        outcome: outcome.clone(),
    });
    if outcome.event.is_terminal() {
        let result = finalize(s.sim.as_ref().expect("just set"), &s.profile)
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
        s.result = Some(result);
        s.wallet = s.wallet.credit(result.currency_earned);
        s.push(SessionEvent::Result { result });
        s.set_phase(Phase::Finished);
    }
    app.persist(&s);
    Ok(Json(json!({
        "state": s.sim,
        "outcome": outcome,
        "phase": s.phase,
        "result": s.result,
        "wallet": s.wallet,
        "seq": s.events.len(),
    })))
}

async fn get_repair(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let session = app.session(&id).await?;
    let mut s = session.lock().await;
    s.last_active = Instant::now();
    if s.phase != Phase::RepairRequired {
        return Err(ApiError::wrong_phase(s.phase, "repair-required"));
    }
    Ok(Json(s.client_repair()))
}

async fn post_repair(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let session = app.session(&id).await?;
    let mut s = session.lock().await;
    s.last_active = Instant::now();
    if s.phase != Phase::RepairRequired {
        return Err(ApiError::wrong_phase(s.phase, "repair-required"));
    }
    let submission: RepairSubmission = parse_body(&body, StatusCode::UNPROCESSABLE_ENTITY)?;
    let problem = s
        .pending_repair
        .as_ref()
        .expect("repair phase has a problem");
    let verdicts = grade(problem, &submission)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    if verdicts.fixed() {
        s.repair_cleared = true;
        s.begin_arcade(&app.shared.catalog)?;
    }
    app.persist(&s);
    Ok(Json(
        json!({ "verdicts": verdicts, "fixed": verdicts.fixed(), "phase": s.phase }),
    ))
}

#[derive(Deserialize)]
struct EventsQuery {
    after: Option<u64>,
}

async fn get_events(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<EventsQuery>,
    headers: HeaderMap,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let after = query
        .after
        .or_else(|| {
            headers
                .get("last-event-id")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    let session = app.session(&id).await?;
    let (backlog, rx) = {
        let mut s = session.lock().await;
        s.last_active = Instant::now();
        let backlog: Vec<EventEnvelope> =
            s.events.iter().filter(|e| e.seq > after).cloned().collect();
        (backlog, s.tx.subscribe())
    };
    let last = backlog.last().map_or(after, |e| e.seq);
    // Lagged receivers skip ahead; clients detect the gap from `seq`.
    let live = BroadcastStream::new(rx)
        .filter_map(move |r| async move { r.ok().filter(|e| e.seq > last) });
    let events = stream::iter(backlog).chain(live).map(|e| {
        Ok(Event::default()
            .id(e.seq.to_string())
            .event("session")
            .json_data(&e)
            .expect("event serialises"))
    });
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}

async fn get_catalog(State(app): State<AppState>) -> Json<Value> {
    Json(serde_json::to_value(&app.shared.catalog).expect("catalog serialises"))
}

async fn get_meta() -> Json<Value> {
    let themes: Vec<Value> = MapTheme::ALL
        .iter()
        .map(|t| json!({ "slug": t.slug(), "title": t.title() }))
        .collect();
    let difficulties: Vec<&str> = Difficulty::ALL.iter().map(|d| d.slug()).collect();
    Json(json!({ "themes": themes, "difficulties": difficulties }))
}

pub fn router(app: AppState) -> Router {
    let static_dir = app.shared.config.static_dir.clone();
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/build", put(put_build))
        .route("/sessions/{id}/purchase", post(post_purchase))
        .route("/sessions/{id}/start", post(post_start))
        .route("/sessions/{id}/command", post(post_command))
        .route("/sessions/{id}/events", get(get_events))
        .route("/sessions/{id}/repair", get(get_repair).post(post_repair))
        .route("/catalog", get(get_catalog))
        .route("/meta", get(get_meta))
        .with_state(app);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Binds `addr` and serves until Ctrl-C, expiring idle sessions once a minute.
pub async fn serve(addr: SocketAddr, app: AppState) -> std::io::Result<()> {
    let restored = app.load_snapshots().await?;
    if restored > 0 {
        eprintln!("restored {restored} session(s) from snapshots");
    }
    let sweeper = app.clone();
    tokio::spawn(async move {
        let mut every = tokio::time::interval(Duration::from_secs(60));
        loop {
            every.tick().await;
            sweeper.expire_idle().await;
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
