//! HTTP job service.

pub mod jobs;

use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use gratis::features::compute_feature_vector;
use gratis::formats::{write_series_jsonl, SeriesRecord};
use gratis::Exec;

use crate::commands::{feature_catalog, run_generate, run_tune, GenerateRequest, TuneRequest};
use crate::error::CliError;
use jobs::{JobEvent, JobKind, JobManager, JobOutput};

/// Larger generate requests run as jobs.
pub const SYNC_GENERATE_LIMIT: usize = 100;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub workers: usize,
    /// `None` allows any origin.
    pub cors_origin: Option<String>,
    pub exec: Exec,
}

#[derive(Clone)]
pub struct AppState {
    pub jobs: Arc<JobManager>,
    pub exec: Exec,
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<CliError> for ApiError {
    fn from(e: CliError) -> Self {
        match e {
            CliError::Usage(m) => ApiError(StatusCode::BAD_REQUEST, m),
            CliError::Internal(m) => ApiError(StatusCode::INTERNAL_SERVER_ERROR, m),
        }
    }
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
}

/// JSON body parsing that reports every schema problem as 400.
fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError(StatusCode::BAD_REQUEST, format!("invalid request body: {e}")))
}

pub fn router(cfg: &ServiceConfig) -> std::io::Result<Router> {
    let state = AppState { jobs: Arc::new(JobManager::new(&cfg.data_dir, cfg.workers)?), exec: cfg.exec };
    let origin = match &cfg.cors_origin {
        Some(o) => AllowOrigin::exact(HeaderValue::from_str(o).map_err(std::io::Error::other)?),
        None => AllowOrigin::any(),
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods(Any)
        .allow_headers([header::CONTENT_TYPE, header::HeaderName::from_static("last-event-id")]);
    Ok(Router::new()
        .route("/api/generate", post(generate))
        .route("/api/tune", post(tune))
        .route("/api/jobs/{id}", get(job_record))
        .route("/api/jobs/{id}/events", get(job_events))
        .route("/api/jobs/{id}/result", get(job_result))
        .route("/api/features", post(features))
        .route("/api/feature-names", get(feature_names))
        .layer(cors)
        .with_state(state))
}

fn accepted(job_id: &str) -> Response {
    (StatusCode::ACCEPTED, Json(json!({ "job_id": job_id }))).into_response()
}

fn jsonl(records: &[SeriesRecord]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_series_jsonl(&mut buf, records).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(buf)
}

async fn generate(State(st): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: GenerateRequest = parse(&body)?;
    if req.count == 0 {
        return Err(CliError::usage("count must be at least 1").into());
    }
    if req.count <= SYNC_GENERATE_LIMIT {
        let exec = st.exec;
        let recs = tokio::task::spawn_blocking(move || run_generate(&req, exec)).await.map_err(internal)??;
        return Ok(Json(json!({ "series": recs })).into_response());
    }
    let exec = st.exec;
    let raw: Value = parse(&body)?;
    let job = st
        .jobs
        .submit(JobKind::Generate, &raw, move |_| {
            let recs = run_generate(&req, exec)?;
            Ok(JobOutput { file_name: "series.jsonl", content_type: "application/x-ndjson", bytes: jsonl(&recs)? })
        })
        .map_err(internal)?;
    Ok(accepted(&job.id))
}

async fn tune(State(st): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: TuneRequest = parse(&body)?;
    // reject bad targets before queueing
    req.target()?;
    req.ga_config(0)?;
    if req.count == 0 {
        return Err(CliError::usage("count must be at least 1").into());
    }
    let exec = st.exec;
    let raw: Value = parse(&body)?;
    let job = st
        .jobs
        .submit(JobKind::Tune, &raw, move |job| {
            let bundle = run_tune(&req, exec, &mut |p| {
                job.push("progress", serde_json::to_value(p).unwrap_or(Value::Null));
            })?;
            let mut bytes = serde_json::to_vec_pretty(&bundle).map_err(|e| CliError::Internal(e.to_string()))?;
            bytes.push(b'\n');
            Ok(JobOutput { file_name: "result.json", content_type: "application/json", bytes })
        })
        .map_err(internal)?;
    Ok(accepted(&job.id))
}

fn unknown(id: &str) -> ApiError {
    ApiError(StatusCode::NOT_FOUND, format!("unknown job `{id}`"))
}

async fn job_record(State(st): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let job = st.jobs.get(&id).ok_or_else(|| unknown(&id))?;
    Ok(Json(job.record()).into_response())
}

async fn job_result(State(st): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let job = st.jobs.get(&id).ok_or_else(|| unknown(&id))?;
    let Some((path, content_type)) = job.result() else {
        let rec = job.record();
        let msg = match rec.error {
            Some(e) => format!("job failed: {e}"),
            None => format!("job is {}", serde_json::to_value(rec.status).map_err(internal)?.as_str().unwrap_or("")),
        };
        return Err(ApiError(StatusCode::CONFLICT, msg));
    };
    let bytes = tokio::fs::read(&path).await.map_err(internal)?;
    Ok(([(header::CONTENT_TYPE, content_type)], bytes).into_response())
}

fn sse_event(e: &JobEvent) -> Event {
    Event::default().id(e.seq.to_string()).event(e.event.clone()).data(e.data.to_string())
}

struct Cursor {
    job: Arc<jobs::Job>,
    next: u64,
    rx: tokio::sync::watch::Receiver<u64>,
    pending: std::collections::VecDeque<JobEvent>,
    closed: bool,
}

/// Streams the job's log from `Last-Event-ID + 1`, ending after the
/// terminal event.
async fn job_events(
    State(st): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let job = st.jobs.get(&id).ok_or_else(|| unknown(&id))?;
    let next = match headers.get("last-event-id").map(|v| v.to_str().map(str::parse::<u64>)) {
        None => 0,
        Some(Ok(Ok(n))) => n + 1,
        Some(_) => return Err(ApiError(StatusCode::BAD_REQUEST, "Last-Event-ID must be an event number".into())),
    };
    let rx = job.subscribe();
    let cursor = Cursor { job, next, rx, pending: Default::default(), closed: false };
    let s = stream::unfold(cursor, |mut c| async move {
        loop {
            if let Some(e) = c.pending.pop_front() {
                c.next = e.seq + 1;
                return Some((Ok(sse_event(&e)), c));
            }
            if c.closed {
                return None;
            }
            // mark the current version seen before reading, so no bump is lost
            c.rx.borrow_and_update();
            let (events, closed) = c.job.events_from(c.next);
            if events.is_empty() && closed {
                return None;
            }
            if events.is_empty() {
                if c.rx.changed().await.is_err() {
                    return None;
                }
                continue;
            }
            c.closed = closed;
            c.pending.extend(events);
        }
    });
    Ok(Sse::new(s).keep_alive(KeepAlive::new().interval(Duration::from_secs(15))))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureInput {
    #[serde(default)]
    id: Option<String>,
    periods: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeaturesRequest {
    series: Vec<FeatureInput>,
}

#[derive(Serialize)]
struct FeatureRow {
    id: String,
    names: Vec<String>,
    values: Vec<Option<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    flags: Vec<String>,
}

async fn features(State(st): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: FeaturesRequest = parse(&body)?;
    let mut series = Vec::with_capacity(req.series.len());
    for (i, s) in req.series.into_iter().enumerate() {
        let id = s.id.unwrap_or_else(|| format!("series_{i}"));
        let ts = gratis::TimeSeries::new(s.values, s.periods)
            .map_err(|e| ApiError(StatusCode::BAD_REQUEST, format!("series `{id}`: {e}")))?;
        series.push((id, ts));
    }
    let exec = st.exec;
    let rows = tokio::task::spawn_blocking(move || {
        let fvs = gratis::exec::map_slice(exec, &series, |(_, ts)| compute_feature_vector(ts));
        series
            .into_iter()
            .zip(fvs)
            .map(|((id, _), fv)| FeatureRow { id, names: fv.names, values: fv.values, flags: fv.flags })
            .collect::<Vec<_>>()
    })
    .await
    .map_err(internal)?;
    Ok(Json(json!({ "features": rows })).into_response())
}

async fn feature_names() -> Json<Value> {
    Json(json!({ "features": feature_catalog() }))
}

/// Binds and serves until interrupted.
pub async fn serve(addr: std::net::SocketAddr, cfg: ServiceConfig) -> std::io::Result<()> {
    let app = router(&cfg)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    println!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
