use super::*;
use crate::imaging::to_pgm_bytes;

#[test]
fn empty_spec_gives_pure_background() {
    let spec = SceneSpec {
        width: 200,
        height: 120,
        background: BackgroundSpec::default(),
        artefacts: ArtefactSpec { clusters_per_megapixel: 0.0, ..Default::default() },
        decoys: DecoyCounts::default(),
        contaminants: Vec::new(),
        seed: 5,
    };
    let render = render_scene(&spec).unwrap();
    assert!(render.annotation.contaminations.is_empty());
    assert!(render.decoy_points.is_empty());
    // Background stays within a few sigma of the mean.
    let (mean, std) = (spec.background.mean, spec.background.std);
    for &p in render.image.pixels() {
        assert!((p as f64 - mean).abs() < 8.0 * std, "pixel {p} far from background");
    }
}

#[test]
fn single_pebble_annotation_is_on_body_and_in_gray_range() {
    let mut spec = SceneSpec::small(11);
    spec.contaminants =
        vec![ContaminantEntry { spec: ContaminantSpec::default_for(ContaminantKind::Pebble), count: 1 }];
    let (img, ann) = generate_scene(&spec).unwrap();
    assert_eq!(ann.contaminations.len(), 1);
    let c = ann.contaminations[0];
    let gray = img.get(c.row as usize, c.col as usize);
    let range = ContaminantSpec::default_for(ContaminantKind::Pebble).gray;
    assert!(
        (range.0..=range.1).contains(&gray),
        "gray {gray} at annotated centroid outside {range:?}"
    );
}

#[test]
fn annotation_fidelity_across_kinds_and_seeds() {
    for seed in 0..12u64 {
        let spec = SceneSpec::small(seed);
        let (img, ann) = generate_scene(&spec).unwrap();
        assert_eq!(ann.contaminations.len(), 4, "one contaminant per default kind");
        for c in &ann.contaminations {
            let range = ContaminantSpec::default_for(c.kind).gray;
            let gray = img.get(c.row as usize, c.col as usize);
            assert!(
                (range.0..=range.1).contains(&gray),
                "seed {seed}: {} gray {gray} outside {range:?}",
                c.kind
            );
        }
    }
}

#[test]
fn generation_is_bit_reproducible() {
    let spec = SceneSpec::small(99);
    let a = render_scene(&spec).unwrap();
    let b = render_scene(&spec).unwrap();
    assert_eq!(to_pgm_bytes(&a.image), to_pgm_bytes(&b.image));
    assert_eq!(a.annotation, b.annotation);
    assert_eq!(a.decoy_points, b.decoy_points);

    let c = render_scene(&SceneSpec { seed: 100, ..spec }).unwrap();
    assert_ne!(to_pgm_bytes(&a.image), to_pgm_bytes(&c.image), "seed changes the bytes");
}

#[test]
fn overloaded_scene_reports_unplaced_contaminants() {
    let mut spec = SceneSpec {
        width: 96,
        height: 96,
        ..SceneSpec::small(3)
    };
    spec.decoys = DecoyCounts::default();
    // Far more separated contaminants than a 96x96 field can hold.
    spec.contaminants = vec![ContaminantEntry {
        spec: ContaminantSpec::default_for(ContaminantKind::Needle),
        count: 12,
    }];
    let err = render_scene(&spec).unwrap_err();
    assert!(err.to_string().contains("needle"), "{err}");
}

#[test]
fn crop_dataset_is_balanced_centered_and_reproducible() {
    let template = SceneSpec::small(0);
    let crops = generate_crop_dataset(10, 10, &template, 120, 77).unwrap();
    assert_eq!(crops.len(), 20);
    assert_eq!(crops.iter().filter(|c| c.label == crate::cnn::Class::Tc).count(), 10);
    for c in &crops {
        assert_eq!(c.image.width(), 120);
        assert_eq!(c.image.height(), 120);
    }
    // TC crops carry the planted contaminant at the center (+-2 px):
    // the center pixel must sit in some contaminant gray range. Since
    // ranges overlap, check against the union's bounds per origin kind.
    for c in crops.iter().filter(|c| c.label == crate::cnn::Class::Tc) {
        let kind = match c.origin.as_str() {
            "needle" => ContaminantKind::Needle,
            "pebble" => ContaminantKind::Pebble,
            "clip" => ContaminantKind::Clip,
            "plastic" => ContaminantKind::Plastic,
            other => panic!("unexpected origin {other}"),
        };
        let range = ContaminantSpec::default_for(kind).gray;
        let center = c.image.get(60, 60);
        assert!(
            (range.0..=range.1).contains(&center),
            "{}: center gray {center} outside {range:?}",
            c.origin
        );
    }

    let again = generate_crop_dataset(10, 10, &template, 120, 77).unwrap();
    for (a, b) in crops.iter().zip(&again) {
        assert_eq!(to_pgm_bytes(&a.image), to_pgm_bytes(&b.image));
    }
}

#[test]
fn scene_dataset_roundtrips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SceneDatasetSpec::new(6, 3, SceneSpec::small(0), 42);
    let names = write_scene_dataset(&spec, dir.path()).unwrap();
    assert_eq!(names.len(), 6);
    let loaded = load_scene_dataset(dir.path()).unwrap();
    assert_eq!(loaded.len(), 6);
    let contaminated = loaded.iter().filter(|(_, a)| !a.contaminations.is_empty()).count();
    assert_eq!(contaminated, 3);
    assert!(dir.path().join("dataset.json").is_file());

    // Regenerating into another directory gives byte-identical images.
    let dir2 = tempfile::tempdir().unwrap();
    write_scene_dataset(&spec, dir2.path()).unwrap();
    for name in &names {
        let a = std::fs::read(dir.path().join("images").join(name)).unwrap();
        let b = std::fs::read(dir2.path().join("images").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
}

#[test]
fn crop_dataset_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let spec = CropDatasetSpec::new(4, 4, SceneSpec::small(0), 7);
    write_crop_dataset(&spec, dir.path()).unwrap();
    let manifest = std::fs::read_to_string(dir.path().join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 9, "header plus 8 rows");
    let samples = crate::cnn::load_manifest(&dir.path().join("manifest.csv")).unwrap();
    assert_eq!(samples.len(), 8);
}
