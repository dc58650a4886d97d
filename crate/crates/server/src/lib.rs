//! HTTP service exposing the contamination detection pipeline. Fast
//! queries (`/v1/health`, `/v1/detect`) answer synchronously; dataset
//! generation, calibration, training, search and batch evaluation run
//! as jobs polled via `/v1/jobs/{id}`.

mod jobs;
pub mod ops;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use contamdet_api as api;
use contamdet_core::error::Error;

use jobs::JobRegistry;

#[derive(Clone, Default)]
pub struct AppState {
    jobs: JobRegistry,
}

pub fn app() -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/detect", post(detect))
        .route("/v1/synth", post(synth))
        .route("/v1/calibrate", post(calibrate))
        .route("/v1/train", post(train))
        .route("/v1/search", post(search))
        .route("/v1/evaluate", post(evaluate))
        .route("/v1/pipeline", post(pipeline))
        .route("/v1/jobs", get(list_jobs))
        .route("/v1/jobs/{id}", get(job_status))
        .with_state(AppState::default())
}

/// Size the compute pool; call once before serving.
pub fn configure_threads(threads: usize) {
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}

/// Bind and serve until the task is dropped or the process exits.
pub async fn serve(listener: tokio::net::TcpListener) -> std::io::Result<()> {
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app()).await
}

/// Bind an ephemeral local port and serve in a background task; returns
/// the bound address. Used by the CLI when no remote server is given
/// and by the integration tests.
pub async fn spawn_ephemeral() -> std::io::Result<std::net::SocketAddr> {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    tokio::spawn(async move {
        if let Err(err) = axum::serve(listener, app()).await {
            tracing::error!("server error: {err}");
        }
    });
    Ok(addr)
}

struct ApiFailure(Error);

impl IntoResponse for ApiFailure {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            Error::InvalidInput(_) => StatusCode::BAD_REQUEST,
            Error::Schema { .. }
            | Error::Data(_)
            | Error::Image(_)
            | Error::Json(_)
            | Error::ShapeMismatch { .. }
            | Error::Divergence { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = api::ApiError { kind: self.0.kind().into(), message: self.0.to_string() };
        (status, Json(body)).into_response()
    }
}

async fn health() -> Json<api::HealthResponse> {
    Json(api::HealthResponse {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    })
}

async fn detect(
    State(_): State<AppState>,
    Json(req): Json<api::DetectRequest>,
) -> Result<Json<api::DetectResponse>, ApiFailure> {
    // Bounded work (sub-second on full frames); run off the async core.
    let result = tokio::task::spawn_blocking(move || ops::detect(&req))
        .await
        .map_err(|e| ApiFailure(Error::Data(format!("detect task: {e}"))))?;
    result.map(Json).map_err(ApiFailure)
}

macro_rules! job_endpoint {
    ($name:ident, $req:ty, $op:path) => {
        async fn $name(
            State(state): State<AppState>,
            Json(req): Json<$req>,
        ) -> (StatusCode, Json<api::JobAccepted>) {
            let id = state.jobs.submit(stringify!($name), move || {
                $op(&req).and_then(|r| Ok(serde_json::to_value(r)?))
            });
            (StatusCode::ACCEPTED, Json(api::JobAccepted { id }))
        }
    };
}

job_endpoint!(synth, api::SynthRequest, ops::synth);
job_endpoint!(calibrate, api::CalibrateRequest, ops::calibrate);
job_endpoint!(train, api::TrainRequest, ops::train);
job_endpoint!(search, api::SearchRequest, ops::search);
job_endpoint!(evaluate, api::EvaluateRequest, ops::evaluate);
job_endpoint!(pipeline, api::PipelineRequest, ops::pipeline);

async fn list_jobs(State(state): State<AppState>) -> Json<Vec<api::JobStatus>> {
    Json(state.jobs.list())
}

async fn job_status(
    State(state): State<AppState>,
    Path(id): Path<u64>,
) -> Result<Json<api::JobStatus>, StatusCode> {
    state.jobs.status(id).map(Json).ok_or(StatusCode::NOT_FOUND)
}
