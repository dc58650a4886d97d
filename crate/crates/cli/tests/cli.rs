//! CLI smoke tests: exit-code contract and a small end-to-end flow
//! through the in-process server.

use std::path::Path;
use std::process::Command;

fn contamdet() -> Command {
    Command::new(env!("CARGO_BIN_EXE_contamdet"))
}

#[test]
fn help_succeeds_and_bad_usage_exits_one() {
    let out = contamdet().arg("--help").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("detect"));

    let out = contamdet().arg("definitely-not-a-subcommand").output().unwrap();
    assert_eq!(out.status.code(), Some(1), "usage errors exit 1");

    let out = contamdet().args(["detect", "--image"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "missing value exits 1");
}

#[test]
fn data_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let profile = tmp.path().join("profile.json");
    std::fs::write(&profile, "{\"schema\": \"contamdet/profile/v0\"}").unwrap();
    let out = contamdet()
        .args(["detect", "--image", "/missing.pgm", "--profile"])
        .arg(&profile)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_calibrate_detect_flow() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("scenes.json");
    std::fs::write(
        &spec,
        serde_json::to_vec_pretty(&serde_json::json!({
            "schema": "contamdet/synthspec/v1",
            "images": 6,
            "contaminated": 6,
            "scene": {
                "width": 408, "height": 166,
                "decoys": {"buttons": 1, "drawstrings": 1, "seams": 1, "zip_runs": 0},
                "contaminants": [],
                "seed": 0
            },
            "contaminants_per_image": [1, 2],
            "seed": 21,
            "format": "pgm"
        }))
        .unwrap(),
    )
    .unwrap();

    let scenes = tmp.path().join("scenes");
    let out = contamdet()
        .args(["synth", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(&scenes)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(scenes.join("images/img_00005.pgm").is_file());
    assert!(scenes.join("annotations/img_00005.json").is_file());

    let profile = tmp.path().join("profile.json");
    let out = contamdet()
        .args(["calibrate", "--dataset"])
        .arg(&scenes)
        .arg("--out")
        .arg(&profile)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(profile.is_file());

    let report = tmp.path().join("report.json");
    let out = contamdet()
        .args(["detect", "--image"])
        .arg(scenes.join("images/img_00000.pgm"))
        .arg("--profile")
        .arg(&profile)
        .arg("--out")
        .arg(&report)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("candidate"), "{stdout}");
    assert!(report.is_file());
}

#[test]
fn seed_flag_changes_synth_output() {
    let tmp = tempfile::tempdir().unwrap();
    let spec_path = tmp.path().join("crops.json");
    let mut scene = contamdet_core::synth::SceneSpec::small(0);
    scene.decoys.drawstrings = 2;
    let spec = contamdet_core::synth::CropDatasetSpec::new(2, 2, scene, 7);
    std::fs::write(&spec_path, serde_json::to_vec_pretty(&spec).unwrap()).unwrap();

    let run = |out_dir: &Path, seed: Option<&str>| {
        let mut cmd = contamdet();
        cmd.args(["synth", "--spec"]).arg(&spec_path).arg("--out").arg(out_dir);
        if let Some(seed) = seed {
            cmd.args(["--seed", seed]);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run(&tmp.path().join("a"), None);
    run(&tmp.path().join("b"), None);
    run(&tmp.path().join("c"), Some("8"));

    let read = |dir: &str| std::fs::read(tmp.path().join(dir).join("manifest.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    let crop = |dir: &str| {
        std::fs::read(tmp.path().join(dir).join("crops/crop_00000_tc.pgm")).unwrap()
    };
    assert_eq!(crop("a"), crop("b"), "same seed, same bytes");
    assert_ne!(crop("a"), crop("c"), "--seed overrides the spec seed");
}
