//! HTTP JSON API. Runs go through a single background queue; each run
//! optimizes its utilities in parallel.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::mpsc;
use zonecut::fwgen::{AuditReport, FlowTable, Manifest};
use zonecut::pipeline::{emit_solution, optimize_system, ResultDocument, RunConfig};
use zonecut::reporting::{Picker, Report};
use zonecut::system::{load_topology, SystemModel, TopologyDocument};
use zonecut::topology::Chromosome;

use crate::commands::CliError;

#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Queued,
    Running,
    Completed,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityStatus {
    pub utility: String,
    pub feasible: bool,
    pub solutions: usize,
}

/// Status and metadata of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub id: u64,
    pub status: RunStatus,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub utilities: Vec<UtilityStatus>,
}

struct RunEntry {
    info: RunInfo,
    results: Option<Arc<Vec<ResultDocument>>>,
}

#[derive(Default)]
struct Registry {
    next_id: u64,
    runs: BTreeMap<u64, RunEntry>,
    latest_completed: Option<u64>,
}

#[derive(Clone)]
pub struct AppState {
    topology: Option<Arc<(PathBuf, SystemModel)>>,
    registry: Arc<Mutex<Registry>>,
    queue: mpsc::UnboundedSender<u64>,
}

impl AppState {
    /// Loads the optional server topology and starts the job worker. Must be
    /// called inside a Tokio runtime.
    pub fn new(topology: Option<PathBuf>) -> Result<Self, CliError> {
        let topology = match topology {
            Some(path) => {
                let system = load_topology(&path)?;
                Some(Arc::new((path, system)))
            }
            None => None,
        };
        let (queue, rx) = mpsc::unbounded_channel();
        let state = Self { topology, registry: Arc::default(), queue };
        tokio::spawn(worker(state.registry.clone(), rx));
        Ok(state)
    }

    fn with_run<T>(&self, id: u64, f: impl FnOnce(&RunEntry) -> Result<T, ApiError>) -> Result<T, ApiError> {
        let reg = self.registry.lock().expect("registry lock");
        let entry = reg.runs.get(&id).ok_or_else(|| ApiError::not_found(format!("no run {id}")))?;
        f(entry)
    }

    fn results(&self, id: u64) -> Result<Arc<Vec<ResultDocument>>, ApiError> {
        self.with_run(id, |e| {
            e.results.clone().ok_or_else(|| {
                ApiError::new(StatusCode::CONFLICT, "not_completed", format!("run {id} is {:?}", e.info.status))
            })
        })
    }
}

fn set_status(registry: &Mutex<Registry>, id: u64, status: RunStatus) -> Option<RunConfig> {
    let mut reg = registry.lock().expect("registry lock");
    let entry = reg.runs.get_mut(&id)?;
    entry.info.status = status;
    Some(entry.info.config.clone())
}

async fn worker(registry: Arc<Mutex<Registry>>, mut rx: mpsc::UnboundedReceiver<u64>) {
    while let Some(id) = rx.recv().await {
        let Some(config) = set_status(&registry, id, RunStatus::Running) else { continue };
        let outcome = tokio::task::spawn_blocking(move || {
            let system = config.resolve_system()?;
            optimize_system(&system, &config)
        })
        .await;
        let mut reg = registry.lock().expect("registry lock");
        let completed = {
            let Some(entry) = reg.runs.get_mut(&id) else { continue };
            match outcome {
                Ok(Ok(docs)) => {
                    entry.info.utilities = docs
                        .iter()
                        .map(|d| UtilityStatus {
                            utility: d.utility.clone(),
                            feasible: d.feasible,
                            solutions: d.solutions.len(),
                        })
                        .collect();
                    entry.info.status = RunStatus::Completed;
                    entry.results = Some(Arc::new(docs));
                    true
                }
                Ok(Err(e)) => {
                    entry.info.status = RunStatus::Failed;
                    entry.info.error = Some(e.to_string());
                    false
                }
                Err(e) => {
                    entry.info.status = RunStatus::Failed;
                    entry.info.error = Some(format!("run aborted: {e}"));
                    false
                }
            }
        };
        if completed {
            reg.latest_completed = Some(id);
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/topology", get(topology))
        .route("/runs", post(submit_run).get(list_runs))
        .route("/runs/{id}", get(run_info))
        .route("/runs/{id}/front", get(front))
        .route("/runs/{id}/solutions/{k}/clustering", get(clustering))
        .route("/runs/{id}/solutions/{k}/emit", post(emit))
        .route("/reports/latest", get(latest_report))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(state)
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn topology(State(state): State<AppState>) -> ApiResult<TopologyDocument> {
    let t = state.topology.as_ref().ok_or_else(|| ApiError::not_found("server was started without a topology"))?;
    Ok(Json(t.1.to_document()))
}

#[derive(Serialize)]
struct Submitted {
    id: u64,
}

async fn submit_run(State(state): State<AppState>, body: Bytes) -> Result<(StatusCode, Json<Submitted>), ApiError> {
    let bad = |m: String| ApiError::new(StatusCode::BAD_REQUEST, "invalid_config", m);
    let mut config: RunConfig = serde_json::from_slice(&body).map_err(|e| bad(e.to_string()))?;
    if config.topology.is_none() && config.synth.is_none() {
        if let Some(t) = &state.topology {
            config.topology = Some(t.0.clone());
        }
    }
    config.validate().map_err(|e| bad(e.to_string()))?;
    let id = {
        let mut reg = state.registry.lock().expect("registry lock");
        reg.next_id += 1;
        let id = reg.next_id;
        let info = RunInfo { id, status: RunStatus::Queued, config, error: None, utilities: Vec::new() };
        reg.runs.insert(id, RunEntry { info, results: None });
        id
    };
    state
        .queue
        .send(id)
        .map_err(|_| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "queue_closed", "job queue is not running"))?;
    Ok((StatusCode::ACCEPTED, Json(Submitted { id })))
}

async fn list_runs(State(state): State<AppState>) -> Json<Vec<RunInfo>> {
    let reg = state.registry.lock().expect("registry lock");
    Json(reg.runs.values().map(|e| e.info.clone()).collect())
}

async fn run_info(State(state): State<AppState>, Path(id): Path<u64>) -> ApiResult<RunInfo> {
    state.with_run(id, |e| Ok(Json(e.info.clone())))
}

async fn front(State(state): State<AppState>, Path(id): Path<u64>) -> ApiResult<Vec<ResultDocument>> {
    Ok(Json(state.results(id)?.as_ref().clone()))
}

#[derive(Deserialize)]
struct UtilityQuery {
    utility: Option<String>,
}

fn select_doc<'a>(docs: &'a [ResultDocument], q: &UtilityQuery) -> Result<&'a ResultDocument, ApiError> {
    match &q.utility {
        None => docs.first().ok_or_else(|| ApiError::not_found("run has no utilities")),
        Some(u) => docs.iter().find(|d| &d.utility == u).ok_or_else(|| ApiError::not_found(format!("no utility {u}"))),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClusteringView {
    pub utility: String,
    pub solution: usize,
    pub chromosome: String,
    pub n_sg: usize,
    pub clusters: Vec<Vec<String>>,
    pub cut_edges: Vec<(String, String)>,
}

async fn clustering(
    State(state): State<AppState>,
    Path((id, k)): Path<(u64, usize)>,
    Query(q): Query<UtilityQuery>,
) -> ApiResult<ClusteringView> {
    let docs = state.results(id)?;
    let doc = select_doc(&docs, &q)?;
    let s = doc.solutions.get(k).ok_or_else(|| ApiError::not_found(format!("no solution {k}")))?;
    let internal = |m: String| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", m);
    let graph = doc.graph.to_graph().map_err(|e| internal(e.to_string()))?;
    let chromosome = Chromosome::parse(&s.chromosome).ok_or_else(|| internal("malformed chromosome".into()))?;
    let cut_edges = graph.edge_pairs().into_iter().zip(chromosome.bits()).filter(|(_, &b)| b).map(|(e, _)| e).collect();
    Ok(Json(ClusteringView {
        utility: doc.utility.clone(),
        solution: k,
        chromosome: s.chromosome.clone(),
        n_sg: s.n_sg,
        clusters: s.clusters.clone(),
        cut_edges,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConfigText {
    pub file: String,
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EmitResponse {
    pub manifest: Manifest,
    pub audit: AuditReport,
    pub configs: Vec<ConfigText>,
}

async fn emit(
    State(state): State<AppState>,
    Path((id, k)): Path<(u64, usize)>,
    Query(q): Query<UtilityQuery>,
) -> ApiResult<EmitResponse> {
    let docs = state.results(id)?;
    let doc = select_doc(&docs, &q)?;
    if k >= doc.solutions.len() {
        return Err(ApiError::not_found(format!("no solution {k}")));
    }
    let out = emit_solution(doc, &Picker::Index(k), &FlowTable::builtin())
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "emit_failed", e.to_string()))?;
    Ok(Json(EmitResponse {
        manifest: out.manifest,
        audit: out.audit,
        configs: out.files.into_iter().map(|(file, text)| ConfigText { file, text }).collect(),
    }))
}

#[derive(Deserialize)]
struct PickerQuery {
    picker: Option<String>,
}

async fn latest_report(State(state): State<AppState>, Query(q): Query<PickerQuery>) -> ApiResult<Report> {
    let picker: Picker = match &q.picker {
        Some(p) => p.parse().map_err(|e: zonecut::reporting::ReportError| {
            ApiError::new(StatusCode::BAD_REQUEST, "invalid_picker", e.to_string())
        })?,
        None => Picker::MinCost,
    };
    let id = state
        .registry
        .lock()
        .expect("registry lock")
        .latest_completed
        .ok_or_else(|| ApiError::not_found("no completed run"))?;
    let docs = state.results(id)?;
    let report = Report::from_results(&docs, &picker)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "report_failed", e.to_string()))?;
    Ok(Json(report))
}
