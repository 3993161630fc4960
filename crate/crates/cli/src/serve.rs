//! HTTP API over in-memory analysis sessions.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::OwnedMutexGuard;
use uuid::Uuid;
use xaskit_core::background::{Background, BqsConfig, BqsScore, PolyConfig, PostEdgeModel};
use xaskit_core::ingest::{ColumnRoles, DetectionReport, ParseReport};
use xaskit_core::pipeline::{
    artifact_stem, Analysis, E0Candidate, Engine, ExportFormat, Knot, PipelineConfig, Product, RefinementSummary,
};
use xaskit_core::signal::E0Method;
use xaskit_core::{AcquisitionMode, Error, WindowSpec};

pub const DEFAULT_IDLE: Duration = Duration::from_secs(30 * 60);

struct Slot {
    analysis: Arc<tokio::sync::Mutex<Analysis>>,
    last_used: Mutex<Instant>,
}

impl Slot {
    fn touch(&self) {
        *self.last_used.lock().expect("clock lock") = Instant::now();
    }

    fn idle_since(&self, now: Instant) -> Duration {
        now.saturating_duration_since(*self.last_used.lock().expect("clock lock"))
    }
}

struct Inner {
    sessions: RwLock<HashMap<Uuid, Arc<Slot>>>,
    idle: Duration,
}

/// Shared server state: the session table and its idle limit.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl Default for AppState {
    fn default() -> Self {
        AppState::new(DEFAULT_IDLE)
    }
}

impl AppState {
    pub fn new(idle: Duration) -> Self {
        AppState { inner: Arc::new(Inner { sessions: RwLock::new(HashMap::new()), idle }) }
    }

    pub fn session_count(&self) -> usize {
        self.inner.sessions.read().expect("session lock").len()
    }

    /// Drop sessions idle for longer than the limit; returns how many went.
    pub fn sweep(&self) -> usize {
        let now = Instant::now();
        let mut map = self.inner.sessions.write().expect("session lock");
        let before = map.len();
        map.retain(|_, s| s.idle_since(now) <= self.inner.idle);
        before - map.len()
    }

    fn insert(&self, analysis: Analysis) -> Uuid {
        let id = Uuid::new_v4();
        let slot = Slot { analysis: Arc::new(tokio::sync::Mutex::new(analysis)), last_used: Mutex::new(Instant::now()) };
        self.inner.sessions.write().expect("session lock").insert(id, Arc::new(slot));
        id
    }

    fn slot(&self, id: &str) -> Result<(Uuid, Arc<Slot>), ApiError> {
        let uuid = Uuid::parse_str(id).map_err(|_| ApiError::bad_request("bad_session_id", "malformed session id"))?;
        let slot = self.inner.sessions.read().expect("session lock").get(&uuid).cloned();
        match slot {
            Some(s) if s.idle_since(Instant::now()) <= self.inner.idle => {
                s.touch();
                Ok((uuid, s))
            }
            Some(_) => {
                self.inner.sessions.write().expect("session lock").remove(&uuid);
                Err(ApiError::not_found())
            }
            None => Err(ApiError::not_found()),
        }
    }

    fn remove(&self, id: &str) -> Result<(), ApiError> {
        let (uuid, _) = self.slot(id)?;
        self.inner.sessions.write().expect("session lock").remove(&uuid);
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    code: String,
    message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    lines: Vec<usize>,
}

/// Structured error response: `{"error": {"code", "message", "lines"?}}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { code: code.into(), message: message.into(), lines: Vec::new() } }
    }

    fn bad_request(code: &str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn not_found() -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "unknown_session", "no such session")
    }

    fn conflict() -> Self {
        ApiError::new(StatusCode::CONFLICT, "busy", "another change to this session is in progress")
    }

    fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        // bad input is 400; valid input the pipeline cannot reduce is 422
        let status = match e {
            Error::NoEdge | Error::InvertedEdge(_) | Error::Fit(_) | Error::Compute(_) | Error::Merge(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            _ => StatusCode::BAD_REQUEST,
        };
        let mut err = ApiError::new(status, e.code(), e.to_string());
        if let Error::Parse { lines, .. } = e {
            err.body.lines = lines;
        }
        err
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::bad_request("bad_json", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        #[derive(Serialize)]
        struct Wrapper {
            error: ErrorBody,
        }
        (self.status, Json(Wrapper { error: self.body })).into_response()
    }
}

#[derive(Debug, Serialize)]
pub struct MuSeries {
    pub energy: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct NormSeries {
    pub energy: Vec<f64>,
    pub norm: Vec<f64>,
    pub pre_edge: Vec<f64>,
    pub post_edge: Vec<f64>,
}

/// Engine background S_post on the post-edge points.
#[derive(Debug, Serialize)]
pub struct BackgroundSeries {
    pub energy: Vec<f64>,
    pub k: Vec<f64>,
    pub s_post: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct ChiSeries {
    pub k: Vec<f64>,
    pub chi: Vec<f64>,
    pub chi_k3: Vec<f64>,
    pub k_weight: u8,
    pub chi_weighted: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct RSeries {
    pub r: Vec<f64>,
    pub magnitude: Vec<f64>,
    pub real: Vec<f64>,
    pub imag: Vec<f64>,
    pub magnitude_filtered: Vec<f64>,
    pub window: WindowSpec,
    pub dr: f64,
}

/// Everything the UI needs to draw a session, computed as far as the
/// pipeline gets. `error` holds the first stage failure, if any.
#[derive(Debug, Serialize)]
pub struct Snapshot {
    pub id: Uuid,
    pub name: String,
    pub config: PipelineConfig,
    pub labels: Vec<String>,
    pub parse: ParseReport,
    pub detection: DetectionReport,
    pub roles: ColumnRoles,
    pub warnings: Vec<String>,
    pub mode: Option<AcquisitionMode>,
    pub mu: Option<MuSeries>,
    pub e0: Option<f64>,
    pub e0_method: Option<E0Method>,
    pub e0_candidates: Vec<E0Candidate>,
    pub edge_step: Option<f64>,
    pub bqs: Option<BqsScore>,
    pub knots: Vec<Knot>,
    pub knot_overrides: bool,
    pub refinement: Option<RefinementSummary>,
    pub normalized: Option<NormSeries>,
    pub background: Option<BackgroundSeries>,
    pub chi: Option<ChiSeries>,
    pub r: Option<RSeries>,
    pub error: Option<serde_json::Value>,
}

fn error_json(e: &Error) -> serde_json::Value {
    serde_json::json!({ "code": e.code(), "message": e.to_string() })
}

fn snapshot(id: Uuid, a: &mut Analysis) -> Snapshot {
    let scan = a.scan();
    let mut s = Snapshot {
        id,
        name: a.source().name.clone(),
        config: a.config().clone(),
        labels: scan.labels().iter().map(|l| l.to_string()).collect(),
        parse: scan.report.clone(),
        detection: a.detection().clone(),
        roles: a.roles().clone(),
        warnings: a.warnings().to_vec(),
        mode: None,
        mu: None,
        e0: None,
        e0_method: None,
        e0_candidates: Vec::new(),
        edge_step: None,
        bqs: None,
        knots: Vec::new(),
        knot_overrides: a.knot_overrides().is_some(),
        refinement: None,
        normalized: None,
        background: None,
        chi: None,
        r: None,
        error: None,
    };
    if let Err(e) = fill(&mut s, a) {
        s.error = Some(error_json(&e));
    }
    s
}

fn fill(s: &mut Snapshot, a: &mut Analysis) -> Result<(), Error> {
    let mu = a.mu()?;
    s.mode = Some(mu.mode);
    let spectrum = mu.spectrum.clone();
    s.mu = Some(MuSeries { energy: spectrum.energy().to_vec(), mu: spectrum.mu().to_vec() });

    let e0 = a.e0()?;
    s.e0 = Some(e0.e0);
    s.e0_method = e0.method;
    s.e0_candidates = e0.candidates.clone();
    let e0 = e0.e0;

    let bg = a.background()?;
    s.edge_step = Some(bg.edge_step);
    s.bqs = Some(bg.bqs);
    s.refinement = bg.refinement.clone();
    let energy = spectrum.energy();
    s.normalized = Some(NormSeries {
        energy: energy.to_vec(),
        norm: bg.normalized.mu_corrected.clone(),
        pre_edge: bg.pre.eval_many(energy),
        post_edge: bg.norm_model.eval_many(energy),
    });
    let post_e: Vec<f64> = energy.iter().copied().filter(|&e| e >= e0).collect();
    s.background = Some(BackgroundSeries {
        k: post_e.iter().map(|e| (xaskit_core::K_CONV * (e - e0)).sqrt()).collect(),
        s_post: bg.post.eval_many(&post_e),
        energy: post_e,
    });
    if let PostEdgeModel::Spline(sp) = &bg.post {
        s.knots = sp
            .knot_k
            .iter()
            .zip(sp.knot_energies())
            .zip(&sp.knot_y)
            .map(|((&k, energy), &y)| Knot { k, energy, y })
            .collect();
    }

    let chi = a.chi()?;
    s.chi = Some(ChiSeries {
        k: chi.chi.k().to_vec(),
        chi: chi.chi.chi().to_vec(),
        chi_k3: chi.chi.k().iter().zip(chi.chi.chi()).map(|(k, c)| c * k.powi(3)).collect(),
        k_weight: chi.weighted.weight(),
        chi_weighted: chi.weighted.chi().to_vec(),
    });

    let ft = a.ft()?;
    s.r = Some(RSeries {
        r: ft.r.r.clone(),
        magnitude: ft.r.magnitude(),
        real: ft.r.real(),
        imag: ft.r.imag(),
        magnitude_filtered: ft.r_filtered.magnitude(),
        window: ft.r.window,
        dr: ft.r.dr(),
    });
    Ok(())
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(e.to_string()))
}

/// Apply a change to a copy of the session and keep it only if it succeeds,
/// so a rejected change leaves the session as it was. Rejects with 409 when
/// another change is in flight.
async fn mutate(
    state: &AppState,
    id: &str,
    change: impl FnOnce(&mut Analysis) -> Result<(), Error> + Send + 'static,
) -> Result<Json<Snapshot>, ApiError> {
    let (uuid, slot) = state.slot(id)?;
    let guard = slot.analysis.clone().try_lock_owned().map_err(|_| ApiError::conflict())?;
    let out = blocking(move || apply(uuid, guard, change)).await?;
    slot.touch();
    out.map(Json)
}

fn apply(
    id: Uuid,
    mut guard: OwnedMutexGuard<Analysis>,
    change: impl FnOnce(&mut Analysis) -> Result<(), Error>,
) -> Result<Snapshot, ApiError> {
    let mut next = guard.clone();
    change(&mut next)?;
    *guard = next;
    Ok(snapshot(id, &mut guard))
}

async fn read<T: Send + 'static>(
    state: &AppState,
    id: &str,
    f: impl FnOnce(Uuid, &mut Analysis) -> T + Send + 'static,
) -> Result<T, ApiError> {
    let (uuid, slot) = state.slot(id)?;
    let mut guard = slot.analysis.clone().lock_owned().await;
    blocking(move || f(uuid, &mut guard)).await
}

#[derive(Debug, Default, Deserialize)]
struct CreateQuery {
    name: Option<String>,
}

async fn create(
    State(state): State<AppState>,
    Query(q): Query<CreateQuery>,
    body: Bytes,
) -> Result<(StatusCode, Json<Snapshot>), ApiError> {
    if body.is_empty() {
        return Err(ApiError::bad_request("empty_body", "request body must be the spectrum file"));
    }
    let name = q.name.unwrap_or_else(|| "upload.dat".into());
    let mut analysis = blocking(move || Analysis::load(name, body.to_vec(), PipelineConfig::default())).await??;
    let snap = blocking(move || {
        let snap = snapshot(Uuid::nil(), &mut analysis);
        (snap, analysis)
    })
    .await?;
    let (mut snap, analysis) = snap;
    snap.id = state.insert(analysis);
    Ok((StatusCode::CREATED, Json(snap)))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Snapshot>, ApiError> {
    read(&state, &id, |uuid, a| Json(snapshot(uuid, a))).await
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    state.remove(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn put_config(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<PipelineConfig>, JsonRejection>,
) -> Result<Json<Snapshot>, ApiError> {
    let Json(cfg) = body?;
    mutate(&state, &id, move |a| {
        a.set_config(cfg)?;
        a.run()
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ColumnsBody {
    roles: ColumnRoles,
    #[serde(default)]
    mode: Option<AcquisitionMode>,
}

async fn post_columns(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<ColumnsBody>, JsonRejection>,
) -> Result<Json<Snapshot>, ApiError> {
    let Json(b) = body?;
    mutate(&state, &id, move |a| {
        a.set_roles(b.roles, b.mode)?;
        a.mu().map(|_| ())
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct E0Body {
    method: E0Method,
    /// Fixed edge energy instead of a search.
    #[serde(default)]
    value: Option<f64>,
}

async fn post_e0(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<E0Body>, JsonRejection>,
) -> Result<Json<Snapshot>, ApiError> {
    let Json(b) = body?;
    mutate(&state, &id, move |a| {
        a.set_e0(b.method, b.value)?;
        a.e0().map(|_| ())
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BackgroundBody {
    engine: Option<Engine>,
    r_bkg: Option<f64>,
    knot_y: Option<Vec<f64>>,
    poly: Option<PolyConfig>,
    bqs: Option<BqsConfig>,
}

async fn post_background(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<BackgroundBody>, JsonRejection>,
) -> Result<Json<Snapshot>, ApiError> {
    let Json(b) = body?;
    mutate(&state, &id, move |a| {
        if b.poly.is_some() || b.bqs.is_some() {
            let mut cfg = a.config().clone();
            cfg.background.poly = b.poly.unwrap_or(cfg.background.poly);
            cfg.background.bqs = b.bqs.unwrap_or(cfg.background.bqs);
            a.set_config(cfg)?;
        }
        let bg = a.config().background;
        a.set_background(b.engine.unwrap_or(bg.engine), b.r_bkg.unwrap_or(bg.r_bkg), b.knot_y)?;
        a.background().map(|_| ())
    })
    .await
}

async fn post_refine(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Snapshot>, ApiError> {
    mutate(&state, &id, |a| a.refine().map(|_| ())).await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FtBody {
    window: Option<WindowSpec>,
    /// Return to the full-range default window.
    #[serde(default)]
    default_window: bool,
    r_max: Option<f64>,
    r_bkg: Option<f64>,
    weight: Option<u8>,
    oversample: Option<usize>,
}

async fn post_ft(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<FtBody>, JsonRejection>,
) -> Result<Json<Snapshot>, ApiError> {
    let Json(b) = body?;
    mutate(&state, &id, move |a| {
        let mut ft = a.config().ft;
        if b.default_window {
            ft.window = None;
        }
        if b.window.is_some() {
            ft.window = b.window;
        }
        ft.r_max = b.r_max.unwrap_or(ft.r_max);
        ft.r_bkg = b.r_bkg.unwrap_or(ft.r_bkg);
        ft.oversample = b.oversample.unwrap_or(ft.oversample);
        let weight = b.weight.unwrap_or(a.config().chi.k_weight);
        a.set_ft(weight, ft)?;
        a.ft().map(|_| ())
    })
    .await
}

#[derive(Debug, Default, Deserialize)]
struct ExportQuery {
    format: Option<String>,
    product: Option<String>,
}

async fn export(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> Result<Response, ApiError> {
    let format = q.format.as_deref().map(str::parse::<ExportFormat>).transpose()?;
    let product = q.product.as_deref().map(str::parse::<Product>).transpose()?.unwrap_or(Product::Norm);
    let (bytes, filename) = read(&state, &id, move |_, a| {
        let format = format.unwrap_or(a.config().export.format);
        let name = match product {
            Product::Original => a.source().name.clone(),
            p => format!("{}.{p}.{}", artifact_stem(&a.source().name), format.extension()),
        };
        a.export(product, format).map(|b| (b, name))
    })
    .await??;
    let content_type = match product {
        Product::Original => "application/octet-stream",
        _ => "text/plain; charset=utf-8",
    };
    let disposition = format!("attachment; filename=\"{}\"", filename.replace('"', "_"));
    Ok(([(header::CONTENT_TYPE, content_type.to_string()), (header::CONTENT_DISPOSITION, disposition)], bytes)
        .into_response())
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "no_route", "no such endpoint")
}

/// All endpoints, mounted under `/api`.
pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/session", post(create))
        .route("/session/{id}", get(get_session).delete(delete_session))
        .route("/session/{id}/config", axum::routing::put(put_config))
        .route("/session/{id}/columns", post(post_columns))
        .route("/session/{id}/e0", post(post_e0))
        .route("/session/{id}/background", post(post_background))
        .route("/session/{id}/refine", post(post_refine))
        .route("/session/{id}/ft", post(post_ft))
        .route("/session/{id}/export", get(export));
    Router::new().nest("/api", api).fallback(fallback).with_state(state)
}

/// Bind and serve until interrupted, sweeping idle sessions once a minute.
pub async fn serve(bind: &str, idle: Duration) -> std::io::Result<()> {
    let state = AppState::new(idle);
    let sweeper = state.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            sweeper.sweep();
        }
    });
    let listener = tokio::net::TcpListener::bind(bind).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
