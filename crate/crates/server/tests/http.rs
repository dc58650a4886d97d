//! End-to-end tests of the HTTP surface: an ephemeral server driven
//! through the typed client, covering the job lifecycle, the synchronous
//! detect endpoint, error mapping and byte-reproducible dataset jobs.

use contamdet_api as api;
use contamdet_client::{Client, ClientError};
use contamdet_core::mtfilter::{
    CalibrationProfile, ShapeInterval, ShapeIntervals, ThresholdLadder, PROFILE_SCHEMA,
};
use contamdet_core::imaging::{write_pgm, GrayImage, StructuringElement};

async fn client() -> Client {
    let addr = contamdet_server::spawn_ephemeral().await.unwrap();
    Client::new(format!("http://{addr}"))
        .with_poll_interval(std::time::Duration::from_millis(20))
}

fn scenes_spec(images: usize, contaminated: usize, seed: u64) -> api::SceneDatasetSpec {
    let mut scene = contamdet_core::synth::SceneSpec::small(0);
    scene.decoys.drawstrings = 2;
    api::SceneDatasetSpec::new(images, contaminated, scene, seed)
}

fn test_profile() -> CalibrationProfile {
    CalibrationProfile {
        schema: PROFILE_SCHEMA.into(),
        ladder: ThresholdLadder::new(2, 18).unwrap(),
        intervals: ShapeIntervals {
            area: ShapeInterval { mean: 16.0, std: 6.0, lo: 6.0, hi: 40.0 },
            ratio: ShapeInterval { mean: 2.0, std: 1.5, lo: 1.0, hi: 8.0 },
            solidity: ShapeInterval { mean: 0.9, std: 0.2, lo: 0.3, hi: 1.0 },
        },
        band_overrides: Default::default(),
        se: StructuringElement::disk(1),
        d0: 8.0,
        area_growth_max: 2.0,
        axis_growth_max: 2.0,
        neighborhood_size: 120,
        merge_radius: 10.0,
    }
}

#[tokio::test]
async fn health_and_job_listing() {
    let client = client().await;
    let health = client.health().await.unwrap();
    assert_eq!(health.status, "ok");
    assert!(client.jobs().await.unwrap().is_empty());

    let missing = client.job_status(999).await;
    assert!(missing.is_err(), "unknown job ids are 404");
}

#[tokio::test]
async fn synth_job_roundtrip_is_byte_stable() {
    let client = client().await;
    let tmp = tempfile::tempdir().unwrap();

    let spec = scenes_spec(3, 2, 9);
    for out in ["a", "b"] {
        let result = client
            .synth(&api::SynthRequest {
                config: api::Source::Inline(api::SynthConfig::Scenes(spec.clone())),
                out_dir: tmp.path().join(out),
                seed: None,
            })
            .await
            .unwrap();
        assert_eq!(result.images, 3);
        assert_eq!(result.kind, "scenes");
    }
    for i in 0..3 {
        let name = format!("images/img_{i:05}.pgm");
        let a = std::fs::read(tmp.path().join("a").join(&name)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(&name)).unwrap();
        assert_eq!(a, b, "{name} differs across runs");
    }

    // Seed override changes the bytes.
    let result = client
        .synth(&api::SynthRequest {
            config: api::Source::Inline(api::SynthConfig::Scenes(spec)),
            out_dir: tmp.path().join("c"),
            seed: Some(10),
        })
        .await
        .unwrap();
    assert_eq!(result.images, 3);
    let a = std::fs::read(tmp.path().join("a/images/img_00000.pgm")).unwrap();
    let c = std::fs::read(tmp.path().join("c/images/img_00000.pgm")).unwrap();
    assert_ne!(a, c);
}

#[tokio::test]
async fn detect_endpoint_with_inline_profile() {
    let client = client().await;
    let tmp = tempfile::tempdir().unwrap();

    // A dark 3x4 patch on a bright field; the filter must find it.
    let mut img = GrayImage::filled(300, 200, 240);
    for r in 100..103 {
        for c in 150..154 {
            img.set(r, c, 30);
        }
    }
    let image_path = tmp.path().join("frame.pgm");
    write_pgm(&img, &image_path).unwrap();

    let annotated = tmp.path().join("frame_marked.png");
    let report_path = tmp.path().join("report.json");
    let response = client
        .detect(&api::DetectRequest {
            image: image_path.clone(),
            profile: api::Source::Inline(test_profile()),
            out_report: Some(report_path.clone()),
            annotate: Some(annotated.clone()),
        })
        .await
        .unwrap();
    assert_eq!(response.detections.len(), 1);
    let d = &response.detections[0];
    assert!((d.row - 101.0).abs() <= 2.0 && (d.col - 151.5).abs() <= 2.0);
    assert!(annotated.is_file(), "annotated PNG written");
    assert!(report_path.is_file(), "report JSON written");
    let report: api::DetectResponse =
        serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    assert_eq!(report.detections.len(), 1);
}

#[tokio::test]
async fn crops_train_and_pipeline_jobs() {
    let client = client().await;
    let tmp = tempfile::tempdir().unwrap();

    // Crop dataset.
    let mut scene = contamdet_core::synth::SceneSpec::small(0);
    scene.decoys.drawstrings = 2;
    let crops = api::CropDatasetSpec::new(8, 8, scene, 4);
    let crops_dir = tmp.path().join("crops");
    client
        .synth(&api::SynthRequest {
            config: api::Source::Inline(api::SynthConfig::Crops(crops)),
            out_dir: crops_dir.clone(),
            seed: None,
        })
        .await
        .unwrap();

    // Train a tiny model on it.
    let hp = api::Hyperparams {
        layers: vec![
            contamdet_core::cnn::LayerSpec::Conv { filters: 3, kernel: 5 },
            contamdet_core::cnn::LayerSpec::Relu,
            contamdet_core::cnn::LayerSpec::MaxPool { window: 6 },
            contamdet_core::cnn::LayerSpec::Dense { units: 4 },
            contamdet_core::cnn::LayerSpec::Relu,
            contamdet_core::cnn::LayerSpec::Dense { units: 1 },
            contamdet_core::cnn::LayerSpec::Sigmoid,
        ],
        alpha: 1e-3,
        mu: 0.9,
        batch_size: 8,
        epochs: 2,
        class_weights: (1.0, 2.0),
        augment_copies: 0,
        augment: Default::default(),
        seed: 3,
    };
    let model_path = tmp.path().join("model.json");
    let trace_path = tmp.path().join("trace.csv");
    let trained = client
        .train(&api::TrainRequest {
            manifest: crops_dir.join("manifest.csv"),
            hyperparams: api::Source::Inline(hp),
            out_model: model_path.clone(),
            out_trace: Some(trace_path.clone()),
            seed: None,
        })
        .await
        .unwrap();
    assert_eq!(trained.samples, 16);
    assert_eq!(trained.epochs, 2);
    assert!(trace_path.is_file());

    // Scenes for the pipeline run.
    let scenes_dir = tmp.path().join("scenes");
    client
        .synth(&api::SynthRequest {
            config: api::Source::Inline(api::SynthConfig::Scenes(scenes_spec(2, 1, 6))),
            out_dir: scenes_dir.clone(),
            seed: None,
        })
        .await
        .unwrap();

    let reports_dir = tmp.path().join("reports");
    let result = client
        .pipeline(&api::PipelineRequest {
            images: vec![scenes_dir.join("images")],
            profile: api::Source::Inline(test_profile()),
            model: model_path,
            config: None,
            out_dir: Some(reports_dir.clone()),
        })
        .await
        .unwrap();
    assert_eq!(result.images, 2);
    assert_eq!(result.reports.len(), 2);
    assert_eq!(
        result.true_contaminations + result.false_alarms,
        result.candidates,
        "every candidate gets a terminal verdict"
    );
    assert!(reports_dir.join("img_00000.report.json").is_file());
}

#[tokio::test]
async fn error_mapping() {
    let client = client().await;

    // Bad schema tag in an inline profile: client sees the schema kind.
    let mut profile = test_profile();
    profile.schema = "contamdet/profile/v0".into();
    let err = client
        .detect(&api::DetectRequest {
            image: "/definitely/missing.pgm".into(),
            profile: api::Source::Inline(profile),
            out_report: None,
            annotate: None,
        })
        .await
        .unwrap_err();
    assert_eq!(err.kind(), "schema", "{err}");

    // Unreadable image: io error.
    let err = client
        .detect(&api::DetectRequest {
            image: "/definitely/missing.pgm".into(),
            profile: api::Source::Inline(test_profile()),
            out_report: None,
            annotate: None,
        })
        .await
        .unwrap_err();
    assert_eq!(err.kind(), "io", "{err}");

    // A failing job reports through the job status.
    let err = client
        .calibrate(&api::CalibrateRequest {
            dataset_dir: "/definitely/missing".into(),
            config: None,
            out_profile: "/tmp/never-written-profile.json".into(),
            out_report: None,
        })
        .await
        .unwrap_err();
    match err {
        ClientError::JobFailed { kind, .. } => assert_eq!(kind, "data"),
        other => panic!("expected JobFailed, got {other}"),
    }
}
