//! Request, response and job types of the contamdet HTTP API. The
//! client and server crates share these definitions; heavyweight inputs
//! (image corpora, models) are referenced by filesystem path, matching
//! the shared-volume deployment the service is built for.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use contamdet_core::cnn::Hyperparams;
pub use contamdet_core::eval::{ConfusionMatrix, SearchSpace};
pub use contamdet_core::mtfilter::{CalibrationConfig, CalibrationProfile, Verdict};
pub use contamdet_core::pipeline::{ImageReport, PipelineConfig};
pub use contamdet_core::synth::{CropDatasetSpec, SceneDatasetSpec};

pub const API_VERSION: &str = "v1";

/// A request payload that is either inline JSON or a path to a JSON
/// document on the server's filesystem.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path { path: PathBuf },
    Inline(T),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub version: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApiError {
    pub kind: String,
    pub message: String,
}

// -- jobs ----------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JobStatus {
    pub id: u64,
    pub kind: String,
    pub state: JobState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ApiError>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct JobAccepted {
    pub id: u64,
}

// -- synth ---------------------------------------------------------------

/// Dataset description: full scenes or classifier crops, distinguished
/// by their fields.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SynthConfig {
    Scenes(SceneDatasetSpec),
    Crops(CropDatasetSpec),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthRequest {
    pub config: Source<SynthConfig>,
    pub out_dir: PathBuf,
    /// Overrides the seed in the config when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthResult {
    pub kind: String,
    pub images: usize,
    pub out_dir: PathBuf,
}

// -- calibrate -------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibrateRequest {
    /// Directory produced by the scenes synthesizer (or matching its
    /// layout: images/ plus annotations/*.json).
    pub dataset_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Source<CalibrationConfig>>,
    pub out_profile: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_report: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibrateResult {
    pub profile_path: PathBuf,
    pub recall: f64,
    pub false_positives: usize,
    pub contaminations: usize,
    pub uncalibratable: usize,
}

// -- detect ----------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectRequest {
    pub image: PathBuf,
    pub profile: Source<CalibrationProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_report: Option<PathBuf>,
    /// When set, writes the image with circled detections here (PNG).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotate: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FilterDetection {
    pub row: f64,
    pub col: f64,
    pub threshold_index: u8,
    pub area: usize,
    pub aspect_ratio: f64,
    pub solidity: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectResponse {
    pub image: PathBuf,
    pub detections: Vec<FilterDetection>,
    pub duration_ms: f64,
}

// -- train -----------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainRequest {
    /// Crop manifest CSV (path,label[,origin]).
    pub manifest: PathBuf,
    pub hyperparams: Source<Hyperparams>,
    pub out_model: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_trace: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainResult {
    pub model_path: PathBuf,
    pub samples: usize,
    pub epochs: usize,
    pub final_loss: f64,
}

// -- search ------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchRequest {
    pub manifest: PathBuf,
    pub space: Source<SearchSpace>,
    pub iterations: usize,
    pub folds: usize,
    pub seed: u64,
    pub out_table: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_table_json: Option<PathBuf>,
    pub out_best: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchResult {
    pub rows: usize,
    pub best_f2: f64,
    pub table_path: PathBuf,
    pub best_path: PathBuf,
}

// -- evaluate ----------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvaluateRequest {
    pub dataset_dir: PathBuf,
    pub profile: Source<CalibrationProfile>,
    pub model: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<PipelineConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_metrics: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvaluateResult {
    pub images: usize,
    pub filter_cm: ConfusionMatrix,
    pub pipeline_cm: ConfusionMatrix,
    pub filter_fp_rate: f64,
    pub filter_fn_rate: f64,
    pub pipeline_fp_rate: f64,
    pub pipeline_fn_rate: f64,
    pub object_recall_filter: f64,
    pub object_recall_pipeline: f64,
}

// -- pipeline ------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineRequest {
    /// Image files or a directory of images.
    pub images: Vec<PathBuf>,
    pub profile: Source<CalibrationProfile>,
    pub model: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<PipelineConfig>,
    /// Per-image reports land here as JSON when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineResult {
    pub images: usize,
    pub candidates: usize,
    pub true_contaminations: usize,
    pub false_alarms: usize,
    pub budget_exceeded: usize,
    pub reports: Vec<ImageReport>,
}
