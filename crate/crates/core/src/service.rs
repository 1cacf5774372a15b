//! HTTP/WebSocket service for steering a running controller.
//!
//! Each session is owned by one thread that runs the receding-horizon loop.
//! Handlers talk to it through a command channel; it publishes frames on a
//! bounded broadcast channel and state snapshots on a watch channel. Commands
//! are handled only between steps, so every step runs under exactly one
//! `(rho, z)` pair.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fs::{self, File, OpenOptions};
use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, oneshot, watch};

use crate::control::{
    Controller, Counters, MethodVariant, MpcConfig, Preference, ReferencePoint, RunMetrics, RunOptions,
    SimulationLog, StepRecord,
};
use crate::error::{Error, Result};
use crate::library::{checksum64, load, Library};
use crate::vehicle::Track;

/// Frames kept for slow stream consumers before they see a gap.
pub const FRAME_BUFFER: usize = 1024;
/// Step records kept in the session snapshot.
pub const RECENT_RECORDS: usize = 64;

/// Body of `POST /sessions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionRequest {
    pub track: String,
    /// `opt`, `sbr`, `rpm` or `hybrid`.
    pub method: String,
    /// Step limit; the run also ends when the lap completes.
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Pause between steps, for watching a run live.
    #[serde(default)]
    pub step_delay_ms: u64,
    #[serde(default)]
    pub options: RunOptions,
}

fn default_steps() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Idle,
    Running,
    Paused,
    Finished,
    Failed,
}

/// A steering change, applied before step `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub step: usize,
    #[serde(flatten)]
    pub change: Change,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Change {
    Preference { rho: Vec<f64> },
    Reference { z: Vec<f64> },
    Reset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub id: u64,
    pub track: String,
    pub method: MethodVariant,
    pub status: RunStatus,
    pub error: Option<String>,
    pub step: usize,
    pub time: f64,
    pub seed: u64,
    pub rho: Vec<f64>,
    pub z: Vec<f64>,
    pub metrics: RunMetrics,
    pub counters: Counters,
    /// Worst-case front of the most recent step.
    pub front: Vec<Vec<f64>>,
    pub recent: VecDeque<StepRecord>,
    pub events: Vec<SessionEvent>,
}

/// One streamed step, as a flat record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub kind: String,
    pub session: u64,
    pub step: usize,
    pub t: f64,
    pub p1: f64,
    pub p2: f64,
    pub theta: f64,
    pub v_y: f64,
    pub r: f64,
    pub xi: f64,
    pub d: f64,
    pub kappa: f64,
    pub mirrored: bool,
    pub controls: Vec<f64>,
    pub applied: Vec<f64>,
    pub j1: f64,
    pub j2: f64,
    pub violation: f64,
    pub rho: Vec<f64>,
    pub z: Vec<f64>,
    pub front: Vec<Vec<f64>>,
}

impl Frame {
    fn new(session: u64, r: &StepRecord) -> Self {
        Self {
            kind: "step".into(),
            session,
            step: r.step,
            t: r.t,
            p1: r.state.p1,
            p2: r.state.p2,
            theta: r.state.theta,
            v_y: r.state.v_y,
            r: r.state.r,
            xi: r.reduced.xi,
            d: r.reduced.d,
            kappa: r.reduced.kappa,
            mirrored: r.mirrored,
            controls: r.controls.clone(),
            applied: r.applied.clone(),
            j1: r.j1,
            j2: r.j2,
            violation: r.violation,
            rho: r.rho.clone(),
            z: r.z.clone(),
            front: r.front.clone(),
        }
    }
}

/// Marker sent in place of frames a subscriber did not receive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub kind: String,
    pub missed: u64,
}

enum Command {
    Run,
    Pause,
    Reset,
    Preference(Vec<f64>, oneshot::Sender<Result<()>>),
    Reference(Vec<f64>, oneshot::Sender<Result<()>>),
    Log(oneshot::Sender<SimulationLog>),
    Ping(oneshot::Sender<()>),
}

struct SessionHandle {
    commands: mpsc::Sender<Command>,
    frames: broadcast::Sender<Arc<str>>,
    snapshot: watch::Receiver<Snapshot>,
}

/// Shared service state: loaded tracks, the optional library and live sessions.
pub struct ServiceState {
    tracks: BTreeMap<String, Arc<Track>>,
    library: Option<(Arc<Library>, u64)>,
    events_dir: Option<PathBuf>,
    sessions: Mutex<HashMap<u64, SessionHandle>>,
    next_id: AtomicU64,
}

impl ServiceState {
    pub fn new(tracks: BTreeMap<String, Track>, library: Option<(Library, u64)>, events_dir: Option<PathBuf>) -> Self {
        Self {
            tracks: tracks.into_iter().map(|(k, v)| (k, Arc::new(v))).collect(),
            library: library.map(|(l, c)| (Arc::new(l), c)),
            events_dir,
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    /// Loads every `*.csv` in `tracks_dir` (keyed by file stem) and the library, if any.
    pub fn from_dirs(tracks_dir: &Path, library: Option<&Path>, events_dir: Option<PathBuf>) -> Result<Self> {
        let mut tracks = BTreeMap::new();
        for entry in fs::read_dir(tracks_dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "csv") {
                let name = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                tracks.insert(name, Track::load(&path)?);
            }
        }
        let library = match library {
            Some(p) => {
                let report = load(p, None)?;
                for w in &report.warnings {
                    log::warn!("{}: {w}", p.display());
                }
                Some((report.library, report.checksum))
            }
            None => None,
        };
        if let Some(dir) = &events_dir {
            fs::create_dir_all(dir)?;
        }
        Ok(Self::new(tracks, library, events_dir))
    }

    fn session(&self, id: u64) -> std::result::Result<(mpsc::Sender<Command>, watch::Receiver<Snapshot>), ApiError> {
        let sessions = self.sessions.lock().expect("session registry poisoned");
        let h = sessions.get(&id).ok_or_else(|| ApiError::not_found(format!("no session {id}")))?;
        Ok((h.commands.clone(), h.snapshot.clone()))
    }
}

/// Headless replay of a session from its creation request and event log.
pub fn replay(
    track: Arc<Track>,
    library: Option<Arc<Library>>,
    request: &SessionRequest,
    events: &[SessionEvent],
) -> Result<SimulationLog> {
    let method: MethodVariant = request.method.parse()?;
    let config = request.options.config()?;
    let new = |config: MpcConfig| Controller::new(method, config, track.clone(), library.clone(), track.start_state());
    let mut c = new(config.clone())?;
    let mut pending = events.iter().peekable();
    loop {
        while let Some(e) = pending.next_if(|e| e.step <= c.step_index()) {
            apply_change(&mut c, &e.change, &config, &new)?;
        }
        if c.step_index() >= request.steps || c.is_finished() {
            break;
        }
        c.step()?;
    }
    Ok(c.into_log())
}

fn apply_change(
    c: &mut Controller,
    change: &Change,
    initial: &MpcConfig,
    new: &dyn Fn(MpcConfig) -> Result<Controller>,
) -> Result<()> {
    match change {
        Change::Preference { rho } => c.config.rho = Preference::new(rho.clone())?,
        Change::Reference { z } => {
            let z = ReferencePoint::new(z.clone())?;
            crate::error::check_dim(2, z.as_slice().len())?;
            c.config.z = z;
        }
        Change::Reset => *c = new(initial.clone())?,
    }
    Ok(())
}

struct Owner {
    id: u64,
    track_name: String,
    controller: Controller,
    initial: MpcConfig,
    make: Box<dyn Fn(MpcConfig) -> Result<Controller> + Send>,
    steps: usize,
    delay: Duration,
    status: RunStatus,
    error: Option<String>,
    recent: VecDeque<StepRecord>,
    events: Vec<SessionEvent>,
    event_file: Option<File>,
    frames: broadcast::Sender<Arc<str>>,
    snapshot: watch::Sender<Snapshot>,
}

impl Owner {
    fn publish(&self) {
        let c = &self.controller;
        let log = c.log();
        self.snapshot.send_replace(Snapshot {
            id: self.id,
            track: self.track_name.clone(),
            method: c.method,
            status: self.status,
            error: self.error.clone(),
            step: c.step_index(),
            time: c.time(),
            seed: c.config.seed,
            rho: c.config.rho.as_slice().to_vec(),
            z: c.config.z.as_slice().to_vec(),
            metrics: log.metrics,
            counters: log.counters,
            front: self.recent.back().map(|r| r.front.clone()).unwrap_or_default(),
            recent: self.recent.clone(),
            events: self.events.clone(),
        });
    }

    fn record(&mut self, change: Change) {
        let event = SessionEvent { step: self.controller.step_index(), change };
        if let Some(f) = self.event_file.as_mut() {
            let line = serde_json::to_string(&event).expect("event serializes");
            if let Err(e) = writeln!(f, "{line}").and_then(|_| f.flush()) {
                log::error!("session {}: cannot persist event: {e}", self.id);
            }
        }
        self.events.push(event);
    }

    fn change(&mut self, change: Change) -> Result<()> {
        apply_change(&mut self.controller, &change, &self.initial, &*self.make)?;
        if change == Change::Reset {
            self.recent.clear();
            self.status = RunStatus::Idle;
            self.error = None;
        }
        self.record(change);
        Ok(())
    }

    fn handle(&mut self, cmd: Command) {
        match cmd {
            Command::Run => {
                if matches!(self.status, RunStatus::Idle | RunStatus::Paused) {
                    self.status = RunStatus::Running;
                }
            }
            Command::Pause => {
                if self.status == RunStatus::Running {
                    self.status = RunStatus::Paused;
                }
            }
            Command::Reset => {
                if let Err(e) = self.change(Change::Reset) {
                    self.status = RunStatus::Failed;
                    self.error = Some(e.to_string());
                }
            }
            Command::Preference(rho, reply) => {
                let _ = reply.send(self.change(Change::Preference { rho }));
            }
            Command::Reference(z, reply) => {
                let _ = reply.send(self.change(Change::Reference { z }));
            }
            Command::Log(reply) => {
                let _ = reply.send(self.controller.log().clone());
            }
            Command::Ping(reply) => {
                let _ = reply.send(());
            }
        }
    }

    fn step(&mut self) {
        if self.controller.step_index() >= self.steps || self.controller.is_finished() {
            self.status = RunStatus::Finished;
            return;
        }
        match self.controller.step() {
            Ok(r) => {
                let r = r.clone();
                let frame = serde_json::to_string(&Frame::new(self.id, &r)).expect("frame serializes");
                let _ = self.frames.send(frame.into());
                if self.recent.len() == RECENT_RECORDS {
                    self.recent.pop_front();
                }
                self.recent.push_back(r);
            }
            Err(e) => {
                self.status = RunStatus::Failed;
                self.error = Some(e.to_string());
            }
        }
        if self.controller.step_index() >= self.steps || self.controller.is_finished() {
            self.status = RunStatus::Finished;
        }
    }

    fn run(mut self, commands: mpsc::Receiver<Command>) {
        self.publish();
        loop {
            let cmd = if self.status == RunStatus::Running {
                match commands.try_recv() {
                    Ok(c) => Some(c),
                    Err(mpsc::TryRecvError::Empty) => None,
                    Err(mpsc::TryRecvError::Disconnected) => return,
                }
            } else {
                match commands.recv() {
                    Ok(c) => Some(c),
                    Err(_) => return,
                }
            };
            match cmd {
                Some(c) => self.handle(c),
                None => {
                    self.step();
                    if !self.delay.is_zero() {
                        std::thread::sleep(self.delay);
                    }
                }
            }
            self.publish();
        }
    }
}

/// JSON error body with an HTTP status.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::bad_request(r.body_text())
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub id: u64,
    pub seed: u64,
}

async fn create_session(
    State(state): State<Arc<ServiceState>>,
    body: std::result::Result<Json<SessionRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Created>)> {
    let Json(req) = body?;
    let track = state
        .tracks
        .get(&req.track)
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("unknown track {:?}", req.track)))?;
    let method: MethodVariant = req.method.parse().map_err(|e: Error| ApiError::bad_request(e.to_string()))?;
    let library = state.library.as_ref().map(|(l, _)| l.clone());
    if method.uses_library() && library.is_none() {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            format!("method {method} needs an offline library; start the service with --library"),
        ));
    }
    let config = req.options.config().map_err(|e| ApiError::bad_request(e.to_string()))?;
    let library = if method.uses_library() { library } else { None };
    let make = {
        let track = track.clone();
        move |config: MpcConfig| Controller::new(method, config, track.clone(), library.clone(), track.start_state())
    };
    let controller = make(config.clone()).map_err(|e| ApiError::bad_request(e.to_string()))?;

    let id = state.next_id.fetch_add(1, Ordering::Relaxed);
    let event_file = match &state.events_dir {
        Some(dir) => {
            let path = dir.join(format!("session-{id}.jsonl"));
            let mut f = OpenOptions::new()
                .create(true)
                .write(true)
                .truncate(true)
                .open(path)
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
            let header = serde_json::to_string(&req).expect("request serializes");
            writeln!(f, "{header}").map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
            Some(f)
        }
        None => None,
    };
    let (frames, _) = broadcast::channel(FRAME_BUFFER);
    let (cmd_tx, cmd_rx) = mpsc::channel();
    let placeholder = Snapshot {
        id,
        track: req.track.clone(),
        method,
        status: RunStatus::Idle,
        error: None,
        step: 0,
        time: 0.0,
        seed: config.seed,
        rho: config.rho.as_slice().to_vec(),
        z: config.z.as_slice().to_vec(),
        metrics: RunMetrics::default(),
        counters: Counters::default(),
        front: vec![],
        recent: VecDeque::new(),
        events: vec![],
    };
    let (snap_tx, snap_rx) = watch::channel(placeholder);
    let owner = Owner {
        id,
        track_name: req.track.clone(),
        controller,
        initial: config.clone(),
        make: Box::new(make),
        steps: req.steps,
        delay: Duration::from_millis(req.step_delay_ms),
        status: RunStatus::Idle,
        error: None,
        recent: VecDeque::new(),
        events: vec![],
        event_file,
        frames: frames.clone(),
        snapshot: snap_tx,
    };
    std::thread::Builder::new()
        .name(format!("session-{id}"))
        .spawn(move || owner.run(cmd_rx))
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    state
        .sessions
        .lock()
        .expect("session registry poisoned")
        .insert(id, SessionHandle { commands: cmd_tx, frames, snapshot: snap_rx });
    Ok((StatusCode::CREATED, Json(Created { id, seed: config.seed })))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlBody {
    /// `run`, `pause` or `reset`.
    pub action: String,
}

fn send(tx: &mpsc::Sender<Command>, cmd: Command) -> ApiResult<()> {
    tx.send(cmd).map_err(|_| ApiError::new(StatusCode::GONE, "session owner has stopped"))
}

/// Waits until the owner has processed everything sent before this call.
async fn settled(tx: &mpsc::Sender<Command>) -> ApiResult<()> {
    let (reply, rx) = oneshot::channel();
    send(tx, Command::Ping(reply))?;
    rx.await.map_err(|_| ApiError::new(StatusCode::GONE, "session owner has stopped"))
}

async fn control(
    State(state): State<Arc<ServiceState>>,
    UrlPath(id): UrlPath<u64>,
    body: std::result::Result<Json<ControlBody>, JsonRejection>,
) -> ApiResult<Json<Snapshot>> {
    let Json(body) = body?;
    let (tx, snap) = state.session(id)?;
    let cmd = match body.action.as_str() {
        "run" => Command::Run,
        "pause" => Command::Pause,
        "reset" => Command::Reset,
        other => return Err(ApiError::bad_request(format!("unknown action {other:?} (run, pause or reset)"))),
    };
    send(&tx, cmd)?;
    settled(&tx).await?;
    let s = snap.borrow().clone();
    Ok(Json(s))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreferenceBody {
    pub rho: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceBody {
    pub z: Vec<f64>,
}

async fn mutate(state: &ServiceState, id: u64, make: impl FnOnce(oneshot::Sender<Result<()>>) -> Command) -> ApiResult<Json<Snapshot>> {
    let (tx, snap) = state.session(id)?;
    let (reply, rx) = oneshot::channel();
    send(&tx, make(reply))?;
    rx.await
        .map_err(|_| ApiError::new(StatusCode::GONE, "session owner has stopped"))?
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    settled(&tx).await?;
    let s = snap.borrow().clone();
    Ok(Json(s))
}

async fn set_preference(
    State(state): State<Arc<ServiceState>>,
    UrlPath(id): UrlPath<u64>,
    body: std::result::Result<Json<PreferenceBody>, JsonRejection>,
) -> ApiResult<Json<Snapshot>> {
    let Json(body) = body?;
    let rho = Preference::new(body.rho).map_err(|e| ApiError::bad_request(e.to_string()))?;
    if rho.as_slice().len() != 2 {
        return Err(ApiError::bad_request("rho needs one weight per objective (2)"));
    }
    mutate(&state, id, |reply| Command::Preference(rho.into(), reply)).await
}

async fn set_reference(
    State(state): State<Arc<ServiceState>>,
    UrlPath(id): UrlPath<u64>,
    body: std::result::Result<Json<ReferenceBody>, JsonRejection>,
) -> ApiResult<Json<Snapshot>> {
    let Json(body) = body?;
    if body.z.len() != 2 {
        return Err(ApiError::bad_request("z needs one value per objective (2)"));
    }
    mutate(&state, id, |reply| Command::Reference(body.z, reply)).await
}

async fn get_session(State(state): State<Arc<ServiceState>>, UrlPath(id): UrlPath<u64>) -> ApiResult<Json<Snapshot>> {
    let (_, snap) = state.session(id)?;
    let s = snap.borrow().clone();
    Ok(Json(s))
}

/// Full log as CSV, in the same layout `simulate --out` writes.
async fn get_log(State(state): State<Arc<ServiceState>>, UrlPath(id): UrlPath<u64>) -> ApiResult<String> {
    let (tx, _) = state.session(id)?;
    let (reply, rx) = oneshot::channel();
    send(&tx, Command::Log(reply))?;
    let log = rx.await.map_err(|_| ApiError::new(StatusCode::GONE, "session owner has stopped"))?;
    let c = MpcConfig::default();
    Ok(log.to_csv(c.grid.nodes(), c.applied, &[]))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrackInfo {
    pub name: String,
    pub length: f64,
    pub closed: bool,
    pub d_max: f64,
    pub points: Vec<[f64; 2]>,
}

async fn list_tracks(State(state): State<Arc<ServiceState>>) -> Json<Vec<TrackInfo>> {
    Json(
        state
            .tracks
            .iter()
            .map(|(name, t)| TrackInfo {
                name: name.clone(),
                length: t.length(),
                closed: t.is_closed(),
                d_max: t.d_max,
                points: t.points().to_vec(),
            })
            .collect(),
    )
}

async fn library_meta(State(state): State<Arc<ServiceState>>) -> ApiResult<Json<serde_json::Value>> {
    let (lib, checksum) = state.library.as_ref().ok_or_else(|| ApiError::not_found("no library loaded"))?;
    Ok(Json(serde_json::json!({
        "checksum": format!("{checksum:016x}"),
        "manifest_checksum": format!("{:016x}", checksum64(lib.manifest.to_json().as_bytes())),
        "nodes": lib.nodes.len(),
        "grid_nodes": lib.spec().node_count(),
        "complete": lib.is_complete(),
        "failed_nodes": lib.failed_nodes(),
        "manifest": lib.manifest,
    })))
}

async fn stream(
    State(state): State<Arc<ServiceState>>,
    UrlPath(id): UrlPath<u64>,
    ws: WebSocketUpgrade,
) -> ApiResult<Response> {
    let (frames, joined_at) = {
        let sessions = state.sessions.lock().expect("session registry poisoned");
        let h = sessions.get(&id).ok_or_else(|| ApiError::not_found(format!("no session {id}")))?;
        let step = h.snapshot.borrow().step;
        (h.frames.subscribe(), step)
    };
    Ok(ws.on_upgrade(move |socket| forward(socket, frames, joined_at)))
}

fn gap(missed: u64) -> Message {
    Message::Text(serde_json::to_string(&Gap { kind: "gap".into(), missed }).expect("gap serializes"))
}

async fn forward(mut socket: WebSocket, mut frames: broadcast::Receiver<Arc<str>>, joined_at: usize) {
    if joined_at > 0 && socket.send(gap(joined_at as u64)).await.is_err() {
        return;
    }
    loop {
        let msg = match frames.recv().await {
            Ok(frame) => Message::Text(frame.to_string()),
            Err(broadcast::error::RecvError::Lagged(n)) => gap(n),
            Err(broadcast::error::RecvError::Closed) => break,
        };
        if socket.send(msg).await.is_err() {
            break;
        }
    }
    let _ = socket.close().await;
}

pub fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/:id", get(get_session))
        .route("/sessions/:id/control", post(control))
        .route("/sessions/:id/preference", put(set_preference))
        .route("/sessions/:id/reference", put(set_reference))
        .route("/sessions/:id/log", get(get_log))
        .route("/sessions/:id/stream", get(stream))
        .route("/tracks", get(list_tracks))
        .route("/library/meta", get(library_meta))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: ServiceState) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state))).await?;
    Ok(())
}
