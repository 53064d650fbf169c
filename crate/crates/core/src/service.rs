//! HTTP API for interactive pin-and-resolve sessions.
//!
//! Routes:
//! - `POST /cases` uploads a case and risk document and returns a case id.
//! - `GET /cases/{id}` returns the case summary.
//! - `POST /cases/{id}/solve` solves OPS at an α with pins.
//! - `GET /cases/{id}/solutions/{sid}` returns a stored plan.
//! - `POST /cases/{id}/sweeps` starts a sweep job.
//! - `GET /sweeps/{sid}` polls a sweep job.
//!
//! Stored plans are immutable and served as the exact bytes written when
//! they were stored.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Semaphore;

use crate::milp::{BackendRegistry, MilpBackend, SolveOptions};
use crate::network::{energized_islands, parse_case, CaseError, Island, Network};
use crate::ops::{solve_ops, OpsConfig, OpsError, Pin, ShutoffPlan};
use crate::pareto::{
    network_fingerprint, risk_fingerprint, sweep_with_progress, Method, SweepResult,
};
use crate::risk::{RiskInput, RiskTable};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub workers: usize,
    pub solve_timeout: Duration,
    pub options: SolveOptions,
    pub sweep_options: SolveOptions,
    pub default_backend: String,
    /// Every stored plan is also written here as `{case}-{solution}.json`.
    pub store_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            workers: 2,
            solve_timeout: Duration::from_secs(300),
            options: SolveOptions::default(),
            sweep_options: SolveOptions::tight(),
            default_backend: BackendRegistry::default_name().to_string(),
            store_dir: None,
        }
    }
}

struct CaseEntry {
    network: Network,
    risk: RiskTable,
    summary: Value,
    solutions: Mutex<BTreeMap<String, Arc<String>>>,
}

enum JobState {
    Running,
    Done(SweepResult),
    Failed(String),
}

struct SweepJob {
    case_id: String,
    method: Method,
    total: usize,
    finished: Arc<AtomicUsize>,
    state: JobState,
}

struct Inner {
    config: ServiceConfig,
    backends: BackendRegistry,
    workers: Arc<Semaphore>,
    cases: Mutex<HashMap<String, Arc<CaseEntry>>>,
    sweeps: Mutex<HashMap<String, SweepJob>>,
    next_id: AtomicU64,
}

/// Shared service state. Cloning shares the same sessions.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(config: ServiceConfig, backends: BackendRegistry) -> Self {
        let workers = Arc::new(Semaphore::new(config.workers.max(1)));
        AppState {
            inner: Arc::new(Inner {
                config,
                backends,
                workers,
                cases: Mutex::new(HashMap::new()),
                sweeps: Mutex::new(HashMap::new()),
                next_id: AtomicU64::new(1),
            }),
        }
    }

    fn fresh_id(&self, prefix: &str) -> String {
        format!(
            "{prefix}-{}",
            self.inner.next_id.fetch_add(1, Ordering::Relaxed)
        )
    }

    fn case(&self, id: &str) -> Result<Arc<CaseEntry>, ApiError> {
        self.inner
            .cases
            .lock()
            .expect("case map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown case `{id}`")))
    }

    fn backend(&self, name: Option<&str>) -> Result<Arc<dyn MilpBackend>, ApiError> {
        let name = name.unwrap_or(&self.inner.config.default_backend);
        self.inner
            .backends
            .get(name)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/cases", post(upload_case))
        .route("/cases/{id}", get(get_case))
        .route("/cases/{id}/solve", post(solve))
        .route("/cases/{id}/solutions/{sid}", get(get_solution))
        .route("/cases/{id}/sweeps", post(start_sweep))
        .route("/sweeps/{sid}", get(get_sweep))
        .with_state(state)
}

/// Serves `router` on `listener` until the process ends.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: json!({ "error": message.into() }),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<OpsError> for ApiError {
    fn from(e: OpsError) -> Self {
        let status = match &e {
            OpsError::ContradictoryPins { .. } | OpsError::Infeasible => StatusCode::CONFLICT,
            OpsError::AlphaOutOfRange(_)
            | OpsError::UnknownComponent(_)
            | OpsError::DuplicatePin(_) => StatusCode::UNPROCESSABLE_ENTITY,
            OpsError::Solver(_) | OpsError::RiskCoverage => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

#[derive(Debug, Deserialize)]
pub struct UploadRequest {
    pub case: Value,
    pub risk: Value,
}

async fn upload_case(
    State(state): State<AppState>,
    Json(req): Json<UploadRequest>,
) -> Result<Response, ApiError> {
    let network = parse_case(&req.case.to_string()).map_err(|e| {
        let violations = match &e {
            CaseError::Invalid(v) => serde_json::to_value(v).expect("violations serialize"),
            _ => json!([]),
        };
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: json!({ "error": e.to_string(), "violations": violations }),
        }
    })?;
    let risk = RiskInput::parse(&req.risk.to_string())
        .and_then(|input| input.build_table(&network))
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("risk document: {e}")))?;
    let id = state.fresh_id("case");
    let summary = json!({
        "case_id": id,
        "buses": network.buses().len(),
        "lines": network.lines().len(),
        "generators": network.generators().len(),
        "loads": network.loads().len(),
        "areas": network.areas().len(),
        "total_demand_mw": network.total_demand_mw(),
        "total_risk": risk.total(),
        "network_fingerprint": network_fingerprint(&network),
        "risk_fingerprint": risk_fingerprint(&risk),
        "violations": [],
    });
    let entry = CaseEntry {
        network,
        risk,
        summary: summary.clone(),
        solutions: Mutex::new(BTreeMap::new()),
    };
    state
        .inner
        .cases
        .lock()
        .expect("case map lock")
        .insert(id, Arc::new(entry));
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

async fn get_case(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let case = state.case(&id)?;
    let mut summary = case.summary.clone();
    let ids: Vec<String> = case
        .solutions
        .lock()
        .expect("solution lock")
        .keys()
        .cloned()
        .collect();
    summary["solutions"] = json!(ids);
    Ok(Json(summary))
}

#[derive(Debug, Deserialize)]
pub struct SolveRequest {
    pub alpha: f64,
    #[serde(default)]
    pub pins: Vec<Pin>,
    #[serde(default)]
    pub backend: Option<String>,
}

#[derive(Debug, Serialize)]
struct SolveResponse<'a> {
    solution_id: String,
    status: &'a str,
    d_tot: f64,
    r_fire: f64,
    objective: f64,
    pins: &'a [Pin],
    islands: Vec<Island>,
    plan: &'a ShutoffPlan,
}

async fn solve(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<SolveRequest>,
) -> Result<Json<Value>, ApiError> {
    let case = state.case(&id)?;
    let backend = state.backend(req.backend.as_deref())?;
    let config = OpsConfig::new(req.alpha)
        .with_pins(req.pins)
        .with_options(state.inner.config.options.clone());
    crate::ops::check_config(&case.network, &config)?;

    let permit = state
        .inner
        .workers
        .clone()
        .acquire_owned()
        .await
        .expect("semaphore open");
    let worker_case = case.clone();
    let task = tokio::task::spawn_blocking(move || {
        let _permit = permit;
        solve_ops(
            &worker_case.network,
            &worker_case.risk,
            &config,
            backend.as_ref(),
        )
    });
    let plan = match tokio::time::timeout(state.inner.config.solve_timeout, task).await {
        Err(_) => {
            return Err(ApiError::new(
                StatusCode::GATEWAY_TIMEOUT,
                "solve timed out",
            ))
        }
        Ok(Err(join)) => {
            return Err(ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                join.to_string(),
            ))
        }
        Ok(Ok(result)) => result?,
    };

    let solution_id = state.fresh_id("sol");
    let stored = Arc::new(plan.to_json(false));
    if let Some(dir) = &state.inner.config.store_dir {
        let path = dir.join(format!("{id}-{solution_id}.json"));
        crate::cli::write_atomic(&path, stored.as_bytes()).map_err(|e| {
            ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                format!("persisting plan: {e}"),
            )
        })?;
    }
    case.solutions
        .lock()
        .expect("solution lock")
        .insert(solution_id.clone(), stored);
    let islands =
        energized_islands(&case.network, &plan.energization()).expect("plan matches network");
    let body = SolveResponse {
        solution_id,
        status: &plan.status,
        d_tot: plan.d_tot,
        r_fire: plan.r_fire,
        objective: plan.objective,
        pins: &plan.pins,
        islands,
        plan: &plan,
    };
    let mut value = serde_json::to_value(&body).expect("response serializes");
    if let Some(solver) = value.pointer_mut("/plan/solver") {
        solver
            .as_object_mut()
            .expect("solver object")
            .remove("wall_time_s");
    }
    Ok(Json(value))
}

async fn get_solution(
    State(state): State<AppState>,
    Path((id, sid)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let case = state.case(&id)?;
    let stored = case
        .solutions
        .lock()
        .expect("solution lock")
        .get(&sid)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown solution `{sid}`")))?;
    Ok((
        [(header::CONTENT_TYPE, "application/json")],
        stored.as_str().to_owned(),
    )
        .into_response())
}

#[derive(Debug, Deserialize)]
pub struct SweepRequest {
    pub method: Method,
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub backend: Option<String>,
}

async fn start_sweep(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<SweepRequest>,
) -> Result<Response, ApiError> {
    let case = state.case(&id)?;
    let backend = state.backend(req.backend.as_deref())?;
    if req.method == Method::Standard {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "method `standard` cannot be swept",
        ));
    }
    let total = match (&req.grid, req.method) {
        (Some(g), _) => g.len(),
        (None, Method::Ops) => crate::pareto::alpha_grid().len(),
        (None, m) => {
            let kind = m.heuristic().expect("standard was rejected above");
            crate::pareto::threshold_grid(&case.network, &case.risk, kind).len()
        }
    };
    let sweep_id = state.fresh_id("sweep");
    let finished = Arc::new(AtomicUsize::new(0));
    state.inner.sweeps.lock().expect("sweep lock").insert(
        sweep_id.clone(),
        SweepJob {
            case_id: id,
            method: req.method,
            total,
            finished: finished.clone(),
            state: JobState::Running,
        },
    );

    let worker_state = state.clone();
    let job_id = sweep_id.clone();
    let options = state.inner.config.sweep_options.clone();
    tokio::spawn(async move {
        let permit = worker_state
            .inner
            .workers
            .clone()
            .acquire_owned()
            .await
            .expect("semaphore open");
        let result = tokio::task::spawn_blocking(move || {
            let _permit = permit;
            let tick = || {
                finished.fetch_add(1, Ordering::Relaxed);
            };
            sweep_with_progress(
                &case.network,
                &case.risk,
                req.method,
                req.grid.as_deref(),
                backend.as_ref(),
                &options,
                &tick,
            )
        })
        .await;
        let outcome = match result {
            Ok(Ok(sweep)) => JobState::Done(sweep),
            Ok(Err(e)) => JobState::Failed(e.to_string()),
            Err(join) => JobState::Failed(join.to_string()),
        };
        if let Some(job) = worker_state
            .inner
            .sweeps
            .lock()
            .expect("sweep lock")
            .get_mut(&job_id)
        {
            job.state = outcome;
        }
    });
    Ok((
        StatusCode::ACCEPTED,
        Json(json!({ "sweep_id": sweep_id, "points": total })),
    )
        .into_response())
}

async fn get_sweep(
    State(state): State<AppState>,
    Path(sid): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let sweeps = state.inner.sweeps.lock().expect("sweep lock");
    let job = sweeps
        .get(&sid)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown sweep `{sid}`")))?;
    let done = job.finished.load(Ordering::Relaxed);
    let mut body = json!({
        "sweep_id": sid,
        "case_id": job.case_id,
        "method": job.method,
        "total": job.total,
        "finished": done,
        "progress": if job.total == 0 { 1.0 } else { done as f64 / job.total as f64 },
    });
    match &job.state {
        JobState::Running => body["status"] = json!("running"),
        JobState::Done(result) => {
            let diagnostics: Vec<Value> = result
                .points
                .iter()
                .filter(|p| !p.is_ok())
                .map(|p| json!({ "parameter": p.parameter, "status": p.status }))
                .collect();
            let mut result = serde_json::to_value(result).expect("sweep serializes");
            if let Some(points) = result.get_mut("points").and_then(Value::as_array_mut) {
                for p in points {
                    p.as_object_mut()
                        .expect("point object")
                        .remove("solve_time_s");
                }
            }
            body["status"] = json!("done");
            body["result"] = result;
            body["diagnostics"] = json!(diagnostics);
        }
        JobState::Failed(message) => {
            body["status"] = json!("failed");
            body["error"] = json!(message);
        }
    }
    Ok(Json(body))
}
