//! Operation implementations behind the HTTP endpoints: resolve request
//! sources, run the core routines, write the artifacts.

use std::path::{Path, PathBuf};

use contamdet_api as api;
use contamdet_core::cnn::{self, CnnModel, Hyperparams};
use contamdet_core::error::{Error, Result};
use contamdet_core::eval;
use contamdet_core::imaging::{load_image, write_png};
use contamdet_core::mtfilter::{self, CalibrationConfig, CalibrationProfile};
use contamdet_core::pipeline;
use contamdet_core::synth;

fn resolve<T>(source: &api::Source<T>) -> Result<T>
where
    T: serde::de::DeserializeOwned + Clone,
{
    match source {
        api::Source::Inline(value) => Ok(value.clone()),
        api::Source::Path { path } => {
            let bytes = std::fs::read(path)
                .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
            Ok(serde_json::from_slice(&bytes)?)
        }
    }
}

fn resolve_profile(source: &api::Source<CalibrationProfile>) -> Result<CalibrationProfile> {
    let profile = resolve(source)?;
    profile.validate()?;
    Ok(profile)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

pub fn synth(req: &api::SynthRequest) -> Result<api::SynthResult> {
    let config = resolve(&req.config)?;
    std::fs::create_dir_all(&req.out_dir)?;
    match config {
        api::SynthConfig::Scenes(mut spec) => {
            if let Some(seed) = req.seed {
                spec.seed = seed;
            }
            let names = synth::write_scene_dataset(&spec, &req.out_dir)?;
            Ok(api::SynthResult {
                kind: "scenes".into(),
                images: names.len(),
                out_dir: req.out_dir.clone(),
            })
        }
        api::SynthConfig::Crops(mut spec) => {
            if let Some(seed) = req.seed {
                spec.seed = seed;
            }
            synth::write_crop_dataset(&spec, &req.out_dir)?;
            Ok(api::SynthResult {
                kind: "crops".into(),
                images: spec.n_tc + spec.n_fc,
                out_dir: req.out_dir.clone(),
            })
        }
    }
}

pub fn calibrate(req: &api::CalibrateRequest) -> Result<api::CalibrateResult> {
    let config = match &req.config {
        Some(source) => resolve(source)?,
        None => CalibrationConfig::default(),
    };
    let annotated = synth::load_scene_dataset(&req.dataset_dir)?;
    let (profile, report) = mtfilter::calibrate(&annotated, &config)?;
    ensure_parent(&req.out_profile)?;
    profile.save(&req.out_profile)?;
    if let Some(out) = &req.out_report {
        ensure_parent(out)?;
        std::fs::write(out, serde_json::to_vec_pretty(&report)?)?;
    }
    Ok(api::CalibrateResult {
        profile_path: req.out_profile.clone(),
        recall: report.chosen.recall,
        false_positives: report.chosen.false_positives,
        contaminations: report.fits.len() + report.uncalibratable.len(),
        uncalibratable: report.uncalibratable.len(),
    })
}

pub fn detect(req: &api::DetectRequest) -> Result<api::DetectResponse> {
    let profile = resolve_profile(&req.profile)?;
    let img = load_image(&req.image)?;
    let started = std::time::Instant::now();
    let detections = mtfilter::detect(&img, &profile)?;
    let duration_ms = started.elapsed().as_secs_f64() * 1e3;

    let response = api::DetectResponse {
        image: req.image.clone(),
        detections: detections
            .iter()
            .map(|d| api::FilterDetection {
                row: d.centroid.0,
                col: d.centroid.1,
                threshold_index: d.threshold_index,
                area: d.blob.area,
                aspect_ratio: d.blob.aspect_ratio,
                solidity: d.blob.solidity,
            })
            .collect(),
        duration_ms,
    };
    if let Some(out) = &req.out_report {
        ensure_parent(out)?;
        std::fs::write(out, serde_json::to_vec_pretty(&response)?)?;
    }
    if let Some(out) = &req.annotate {
        let marks: Vec<(f64, f64, u8)> =
            response.detections.iter().map(|d| (d.row, d.col, 0u8)).collect();
        let annotated = pipeline::draw_marks(&img, &marks, 14);
        ensure_parent(out)?;
        write_png(&annotated, out)?;
    }
    Ok(response)
}

pub fn train(req: &api::TrainRequest) -> Result<api::TrainResult> {
    let mut hp: Hyperparams = resolve(&req.hyperparams)?;
    if let Some(seed) = req.seed {
        hp.seed = seed;
    }
    let samples = cnn::load_manifest(&req.manifest)?;
    let outcome = cnn::train(&samples, &hp)?;
    ensure_parent(&req.out_model)?;
    outcome.model.save(&req.out_model)?;
    if let Some(out) = &req.out_trace {
        ensure_parent(out)?;
        cnn::write_loss_trace(&outcome.loss_trace, out)?;
    }
    Ok(api::TrainResult {
        model_path: req.out_model.clone(),
        samples: samples.len(),
        epochs: outcome.loss_trace.len(),
        final_loss: outcome.loss_trace.last().copied().unwrap_or(f64::NAN),
    })
}

pub fn search(req: &api::SearchRequest) -> Result<api::SearchResult> {
    let space = resolve(&req.space)?;
    let samples = cnn::load_manifest(&req.manifest)?;
    let (table, best) = eval::random_search(&space, req.iterations, req.folds, &samples, req.seed)?;
    ensure_parent(&req.out_table)?;
    table.write_csv(&req.out_table)?;
    if let Some(out) = &req.out_table_json {
        ensure_parent(out)?;
        std::fs::write(out, serde_json::to_vec_pretty(&table)?)?;
    }
    ensure_parent(&req.out_best)?;
    best.save(&req.out_best)?;
    let best_f2 = table.best().map(|r| r.f2).unwrap_or(0.0);
    Ok(api::SearchResult {
        rows: table.rows.len(),
        best_f2,
        table_path: req.out_table.clone(),
        best_path: req.out_best.clone(),
    })
}

pub fn evaluate(req: &api::EvaluateRequest) -> Result<api::EvaluateResult> {
    let profile = resolve_profile(&req.profile)?;
    let model = CnnModel::load(&req.model)?;
    let config = req.config.unwrap_or_default();
    let set = synth::load_scene_dataset(&req.dataset_dir)?;
    let eval = pipeline::evaluate_pipeline(&set, &profile, &model, &config)?;
    let result = api::EvaluateResult {
        images: set.len(),
        filter_cm: eval.filter_cm,
        pipeline_cm: eval.pipeline_cm,
        filter_fp_rate: eval.filter_fp_rate,
        filter_fn_rate: eval.filter_fn_rate,
        pipeline_fp_rate: eval.pipeline_fp_rate,
        pipeline_fn_rate: eval.pipeline_fn_rate,
        object_recall_filter: eval.object_recall_filter,
        object_recall_pipeline: eval.object_recall_pipeline,
    };
    if let Some(out) = &req.out_metrics {
        ensure_parent(out)?;
        std::fs::write(out, serde_json::to_vec_pretty(&result)?)?;
    }
    Ok(result)
}

pub fn pipeline(req: &api::PipelineRequest) -> Result<api::PipelineResult> {
    let profile = resolve_profile(&req.profile)?;
    let model = CnnModel::load(&req.model)?;
    let config = req.config.unwrap_or_default();

    let mut images: Vec<PathBuf> = Vec::new();
    for entry in &req.images {
        if entry.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(entry)?
                .collect::<std::io::Result<Vec<_>>>()?
                .into_iter()
                .map(|e| e.path())
                .filter(|p| {
                    p.extension()
                        .and_then(|e| e.to_str())
                        .is_some_and(|e| matches!(e, "pgm" | "png"))
                })
                .collect();
            files.sort();
            images.extend(files);
        } else {
            images.push(entry.clone());
        }
    }
    if images.is_empty() {
        return Err(Error::Data("pipeline request lists no images".into()));
    }
    if let Some(dir) = &req.out_dir {
        std::fs::create_dir_all(dir)?;
    }

    let mut result = api::PipelineResult {
        images: images.len(),
        candidates: 0,
        true_contaminations: 0,
        false_alarms: 0,
        budget_exceeded: 0,
        reports: Vec::with_capacity(images.len()),
    };
    for path in &images {
        let img = load_image(path)?;
        let id = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let report = pipeline::run_pipeline(&id, &img, &profile, &model, &config)?;
        result.candidates += report.counts.candidates;
        result.true_contaminations += report.counts.true_contaminations;
        result.false_alarms += report.counts.false_alarms;
        result.budget_exceeded += report.budget_exceeded as usize;
        if let Some(dir) = &req.out_dir {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "image".into());
            std::fs::write(
                dir.join(format!("{stem}.report.json")),
                serde_json::to_vec_pretty(&report)?,
            )?;
        }
        result.reports.push(report);
    }
    Ok(result)
}
