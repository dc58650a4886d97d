//! End-to-end orchestration: detect candidates, crop, classify, report;
//! plus image-level evaluation of the filter alone and the combined
//! pipeline against ground truth.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cnn::CnnModel;
use crate::error::Result;
use crate::eval::ConfusionMatrix;
use crate::imaging::{crop, GrayImage};
use crate::mtfilter::{detect, CalibrationProfile, Detection, GroundTruthAnnotation, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub crop_size: usize,
    pub decision_threshold: f64,
    /// Per-image wall-clock budget; overruns are reported, not fatal.
    pub time_budget_secs: f64,
    /// Distance within which a detection matches an annotation in the
    /// object-level diagnostics.
    pub match_radius: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            crop_size: 120,
            decision_threshold: 0.5,
            time_budget_secs: 5.0,
            match_radius: 10.0,
        }
    }
}

/// One classified candidate in an image report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportedDetection {
    pub row: f64,
    pub col: f64,
    pub threshold_index: u8,
    pub area: usize,
    pub aspect_ratio: f64,
    pub solidity: f64,
    pub probability: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub candidates: usize,
    pub true_contaminations: usize,
    pub false_alarms: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImageReport {
    pub image: String,
    pub detections: Vec<ReportedDetection>,
    pub duration_ms: f64,
    pub budget_exceeded: bool,
    pub counts: VerdictCounts,
}

impl ImageReport {
    /// Report with the wall-clock fields cleared, for byte-stable
    /// comparisons.
    pub fn without_timing(&self) -> ImageReport {
        ImageReport { duration_ms: 0.0, budget_exceeded: false, ..self.clone() }
    }
}

/// Filter an image and classify every candidate crop. An image without
/// candidates yields an empty report.
pub fn run_pipeline(
    image_id: &str,
    img: &GrayImage,
    profile: &CalibrationProfile,
    model: &CnnModel,
    config: &PipelineConfig,
) -> Result<ImageReport> {
    let started = Instant::now();
    let candidates = detect(img, profile)?;
    let mut detections = Vec::with_capacity(candidates.len());
    let mut counts = VerdictCounts { candidates: candidates.len(), ..Default::default() };
    for det in &candidates {
        let (verdict, probability) = classify(img, det, model, config)?;
        match verdict {
            Verdict::TrueContamination => counts.true_contaminations += 1,
            Verdict::FalseAlarm => counts.false_alarms += 1,
            Verdict::Candidate => unreachable!("classification is terminal"),
        }
        detections.push(ReportedDetection {
            row: det.centroid.0,
            col: det.centroid.1,
            threshold_index: det.threshold_index,
            area: det.blob.area,
            aspect_ratio: det.blob.aspect_ratio,
            solidity: det.blob.solidity,
            probability,
            verdict,
        });
    }
    let duration_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(ImageReport {
        image: image_id.to_string(),
        detections,
        duration_ms,
        budget_exceeded: duration_ms > config.time_budget_secs * 1e3,
        counts,
    })
}

fn classify(
    img: &GrayImage,
    det: &Detection,
    model: &CnnModel,
    config: &PipelineConfig,
) -> Result<(Verdict, f64)> {
    let center = (det.centroid.0.round() as i64, det.centroid.1.round() as i64);
    let window = crop(img, center, config.crop_size)?;
    let (_, p) = model.predict(&window)?;
    let verdict = if p >= config.decision_threshold {
        Verdict::TrueContamination
    } else {
        Verdict::FalseAlarm
    };
    Ok((verdict, p))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineEvaluation {
    /// Image-level accounting of the filter alone: an image is positive
    /// when at least one candidate exists.
    pub filter_cm: ConfusionMatrix,
    /// Image-level accounting after classification: positive when at
    /// least one detection survives as a true contamination.
    pub pipeline_cm: ConfusionMatrix,
    pub filter_fp_rate: f64,
    pub filter_fn_rate: f64,
    pub pipeline_fp_rate: f64,
    pub pipeline_fn_rate: f64,
    /// Object-level diagnostics: fraction of annotated contaminations
    /// matched within `match_radius`.
    pub object_recall_filter: f64,
    pub object_recall_pipeline: f64,
    pub reports: Vec<ImageReport>,
}

/// Evaluate filter and pipeline on annotated images.
pub fn evaluate_pipeline(
    set: &[(GrayImage, GroundTruthAnnotation)],
    profile: &CalibrationProfile,
    model: &CnnModel,
    config: &PipelineConfig,
) -> Result<PipelineEvaluation> {
    let mut filter_cm = ConfusionMatrix::default();
    let mut pipeline_cm = ConfusionMatrix::default();
    let mut objects = 0usize;
    let mut objects_hit_filter = 0usize;
    let mut objects_hit_pipeline = 0usize;

    // Images evaluate independently in parallel; the aggregation below
    // runs in input order.
    let per_image: Vec<ImageReport> = set
        .par_iter()
        .map(|(img, ann)| run_pipeline(&ann.image, img, profile, model, config))
        .collect::<Result<Vec<_>>>()?;

    let mut reports = Vec::with_capacity(set.len());
    for ((_, ann), report) in set.iter().zip(per_image) {
        let has_truth = !ann.contaminations.is_empty();
        let any_candidate = !report.detections.is_empty();
        let any_survivor = report.counts.true_contaminations > 0;

        match (has_truth, any_candidate) {
            (true, true) => filter_cm.tp += 1.0,
            (true, false) => filter_cm.fn_ += 1.0,
            (false, true) => filter_cm.fp += 1.0,
            (false, false) => filter_cm.tn += 1.0,
        }
        match (has_truth, any_survivor) {
            (true, true) => pipeline_cm.tp += 1.0,
            (true, false) => pipeline_cm.fn_ += 1.0,
            (false, true) => pipeline_cm.fp += 1.0,
            (false, false) => pipeline_cm.tn += 1.0,
        }

        for c in &ann.contaminations {
            objects += 1;
            let near = |d: &ReportedDetection| {
                ((d.row - c.row).powi(2) + (d.col - c.col).powi(2)).sqrt() <= config.match_radius
            };
            if report.detections.iter().any(near) {
                objects_hit_filter += 1;
            }
            if report
                .detections
                .iter()
                .any(|d| d.verdict == Verdict::TrueContamination && near(d))
            {
                objects_hit_pipeline += 1;
            }
        }
        reports.push(report);
    }

    Ok(PipelineEvaluation {
        filter_fp_rate: filter_cm.fp_rate(),
        filter_fn_rate: filter_cm.fn_rate(),
        pipeline_fp_rate: pipeline_cm.fp_rate(),
        pipeline_fn_rate: pipeline_cm.fn_rate(),
        object_recall_filter: if objects > 0 {
            objects_hit_filter as f64 / objects as f64
        } else {
            0.0
        },
        object_recall_pipeline: if objects > 0 {
            objects_hit_pipeline as f64 / objects as f64
        } else {
            0.0
        },
        filter_cm,
        pipeline_cm,
        reports,
    })
}

/// Overlay circles at the given (row, col, gray) marks on a copy of
/// the image.
pub fn draw_marks(img: &GrayImage, marks: &[(f64, f64, u8)], radius: i64) -> GrayImage {
    let mut out = img.clone();
    for &(row, col, gray) in marks {
        let (cy, cx) = (row.round() as i64, col.round() as i64);
        for thickness in 0..2i64 {
            let r = radius + thickness;
            let steps = (8 * r).max(16);
            for s in 0..steps {
                let theta = s as f64 / steps as f64 * std::f64::consts::TAU;
                let py = cy + (theta.sin() * r as f64).round() as i64;
                let px = cx + (theta.cos() * r as f64).round() as i64;
                if out.in_bounds(py, px) {
                    out.set(py as usize, px as usize, gray);
                }
            }
        }
    }
    out
}

/// Overlay detection circles (white for surviving true contaminations,
/// black otherwise).
pub fn draw_detection_circles(
    img: &GrayImage,
    detections: &[ReportedDetection],
    radius: i64,
) -> GrayImage {
    let marks: Vec<(f64, f64, u8)> = detections
        .iter()
        .map(|d| {
            let gray = match d.verdict {
                Verdict::TrueContamination => 255,
                _ => 0,
            };
            (d.row, d.col, gray)
        })
        .collect();
    draw_marks(img, &marks, radius)
}
