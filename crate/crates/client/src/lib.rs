//! Thin typed client for the contamdet HTTP service.

use std::time::Duration;

use contamdet_api as api;
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(#[from] reqwest::Error),

    #[error("{kind}: {message}")]
    Api { kind: String, message: String },

    #[error("job {id} ({kind}) failed: {message}")]
    JobFailed { id: u64, kind: String, message: String },

    #[error("unexpected response: {0}")]
    Protocol(String),
}

impl ClientError {
    /// Machine-readable failure tag, mirroring the server-side error
    /// kinds plus client-local ones.
    pub fn kind(&self) -> &str {
        match self {
            ClientError::Transport(_) => "transport",
            ClientError::Api { kind, .. } => kind,
            ClientError::JobFailed { kind, .. } => kind,
            ClientError::Protocol(_) => "protocol",
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
    poll_interval: Duration,
}

impl Client {
    pub fn new(base_url: impl Into<String>) -> Self {
        let mut base = base_url.into();
        while base.ends_with('/') {
            base.pop();
        }
        Self {
            base,
            http: reqwest::Client::new(),
            poll_interval: Duration::from_millis(250),
        }
    }

    pub fn with_poll_interval(mut self, interval: Duration) -> Self {
        self.poll_interval = interval;
        self
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}/{}", self.base, api::API_VERSION, path)
    }

    async fn post<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        path: &str,
        req: &Req,
    ) -> Result<Resp> {
        let response = self.http.post(self.url(path)).json(req).send().await?;
        Self::decode(response).await
    }

    async fn decode<Resp: DeserializeOwned>(response: reqwest::Response) -> Result<Resp> {
        let status = response.status();
        let bytes = response.bytes().await?;
        if status.is_success() {
            serde_json::from_slice(&bytes)
                .map_err(|e| ClientError::Protocol(format!("bad response body: {e}")))
        } else {
            let err: api::ApiError = serde_json::from_slice(&bytes).unwrap_or(api::ApiError {
                kind: "http".into(),
                message: format!("status {status}"),
            });
            Err(ClientError::Api { kind: err.kind, message: err.message })
        }
    }

    pub async fn health(&self) -> Result<api::HealthResponse> {
        Self::decode(self.http.get(self.url("health")).send().await?).await
    }

    pub async fn detect(&self, req: &api::DetectRequest) -> Result<api::DetectResponse> {
        self.post("detect", req).await
    }

    pub async fn job_status(&self, id: u64) -> Result<api::JobStatus> {
        Self::decode(self.http.get(self.url(&format!("jobs/{id}"))).send().await?).await
    }

    pub async fn jobs(&self) -> Result<Vec<api::JobStatus>> {
        Self::decode(self.http.get(self.url("jobs")).send().await?).await
    }

    /// Poll a job until it finishes; returns its result value.
    pub async fn wait_job(&self, id: u64) -> Result<serde_json::Value> {
        loop {
            let status = self.job_status(id).await?;
            match status.state {
                api::JobState::Done => {
                    return status.result.ok_or_else(|| {
                        ClientError::Protocol("finished job carries no result".into())
                    });
                }
                api::JobState::Failed => {
                    let err = status.error.unwrap_or(api::ApiError {
                        kind: "internal".into(),
                        message: "job failed without detail".into(),
                    });
                    return Err(ClientError::JobFailed {
                        id,
                        kind: err.kind,
                        message: err.message,
                    });
                }
                api::JobState::Queued | api::JobState::Running => {
                    tokio::time::sleep(self.poll_interval).await;
                }
            }
        }
    }

    async fn submit_and_wait<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        path: &str,
        req: &Req,
    ) -> Result<Resp> {
        let accepted: api::JobAccepted = self.post(path, req).await?;
        let value = self.wait_job(accepted.id).await?;
        serde_json::from_value(value)
            .map_err(|e| ClientError::Protocol(format!("bad job result: {e}")))
    }

    pub async fn synth(&self, req: &api::SynthRequest) -> Result<api::SynthResult> {
        self.submit_and_wait("synth", req).await
    }

    pub async fn calibrate(&self, req: &api::CalibrateRequest) -> Result<api::CalibrateResult> {
        self.submit_and_wait("calibrate", req).await
    }

    pub async fn train(&self, req: &api::TrainRequest) -> Result<api::TrainResult> {
        self.submit_and_wait("train", req).await
    }

    pub async fn search(&self, req: &api::SearchRequest) -> Result<api::SearchResult> {
        self.submit_and_wait("search", req).await
    }

    pub async fn evaluate(&self, req: &api::EvaluateRequest) -> Result<api::EvaluateResult> {
        self.submit_and_wait("evaluate", req).await
    }

    pub async fn pipeline(&self, req: &api::PipelineRequest) -> Result<api::PipelineResult> {
        self.submit_and_wait("pipeline", req).await
    }
}
