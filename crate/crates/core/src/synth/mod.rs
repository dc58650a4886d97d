//! Seeded generator of X-ray-like garment scenes: bright noisy
//! background, scanner-style speckle artefact clouds, garment decoys
//! (buttons, drawstrings with folded knots, seams, zip teeth) and
//! planted contaminants, with ground-truth annotations. The renderer is
//! fully determined by (spec, seed).
//!
//! Gray-level conventions follow the source imagery qualitatively:
//! needles/clips dark, pebbles light (near the k = 16 threshold),
//! drawstrings mid-gray with darker fold knots, background bright with
//! quantization-style speckle. Artefact statistics are invented; dataset
//! metadata marks them as such.

mod render;

use std::path::Path;

use rand::rngs::StdRng;
use serde::{Deserialize, Serialize};

use crate::cnn::Class;
use crate::error::{Error, Result};
use crate::imaging::{crop, save_image, GrayImage, ImageFormat};
use rand::Rng;
pub use crate::mtfilter::ContaminantKind;
use crate::mtfilter::GroundTruthAnnotation;
use crate::seeds;

pub const SYNTH_SCHEMA: &str = "contamdet/synthspec/v1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSpec {
    pub mean: f64,
    pub std: f64,
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        Self { mean: 230.0, std: 4.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtefactSpec {
    /// Speckle cluster density per megapixel.
    pub clusters_per_megapixel: f64,
    pub specks_per_cluster: (usize, usize),
    /// Standard deviation of speck offsets around the cluster center.
    pub cluster_radius: f64,
    /// Speck gray range; spans the upper threshold bands so artefacts
    /// surface during detection like scanner noise does.
    pub gray: (u8, u8),
}

impl Default for ArtefactSpec {
    fn default() -> Self {
        Self {
            clusters_per_megapixel: 30.0,
            specks_per_cluster: (2, 5),
            cluster_radius: 9.0,
            gray: (160, 215),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecoyCounts {
    pub buttons: usize,
    pub drawstrings: usize,
    pub seams: usize,
    pub zip_runs: usize,
}

/// Shape and gray-level ranges of one contaminant kind.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContaminantSpec {
    pub kind: ContaminantKind,
    pub gray: (u8, u8),
    /// Target pixel-area range.
    pub area: (usize, usize),
    /// Aspect-ratio range of the rendered shape.
    pub elongation: (f64, f64),
}

impl ContaminantSpec {
    pub fn default_for(kind: ContaminantKind) -> Self {
        match kind {
            ContaminantKind::Pebble => {
                Self { kind, gray: (150, 175), area: (12, 26), elongation: (1.0, 1.7) }
            }
            ContaminantKind::Needle => {
                Self { kind, gray: (20, 70), area: (10, 26), elongation: (4.0, 6.5) }
            }
            ContaminantKind::Clip => {
                Self { kind, gray: (25, 60), area: (14, 32), elongation: (1.5, 3.0) }
            }
            ContaminantKind::Plastic => {
                Self { kind, gray: (110, 150), area: (11, 25), elongation: (1.0, 2.5) }
            }
            ContaminantKind::Other => {
                Self { kind, gray: (60, 120), area: (6, 30), elongation: (1.0, 4.0) }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gray.0 > self.gray.1 || self.area.0 > self.area.1 || self.area.0 == 0 {
            return Err(Error::InvalidInput(format!(
                "malformed contaminant spec for {}",
                self.kind
            )));
        }
        if self.elongation.0 < 1.0 || self.elongation.0 > self.elongation.1 {
            return Err(Error::InvalidInput(format!(
                "malformed elongation range for {}",
                self.kind
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContaminantEntry {
    pub spec: ContaminantSpec,
    pub count: usize,
}

/// Full description of one rendered scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub background: BackgroundSpec,
    #[serde(default)]
    pub artefacts: ArtefactSpec,
    #[serde(default)]
    pub decoys: DecoyCounts,
    #[serde(default)]
    pub contaminants: Vec<ContaminantEntry>,
    pub seed: u64,
}

impl SceneSpec {
    /// Small scene with the default decoy mix and one entry per
    /// contaminant kind; the workhorse for quick datasets and tests.
    pub fn small(seed: u64) -> Self {
        Self {
            width: 408,
            height: 166,
            background: BackgroundSpec::default(),
            artefacts: ArtefactSpec::default(),
            decoys: DecoyCounts { buttons: 1, drawstrings: 1, seams: 1, zip_runs: 0 },
            contaminants: Self::default_contaminants(),
            seed,
        }
    }

    /// Full-size scanner frame (4080x1664) with a garment-like decoy mix.
    pub fn full_size(seed: u64) -> Self {
        Self {
            width: 4080,
            height: 1664,
            background: BackgroundSpec::default(),
            artefacts: ArtefactSpec::default(),
            decoys: DecoyCounts { buttons: 6, drawstrings: 3, seams: 6, zip_runs: 2 },
            contaminants: Self::default_contaminants(),
            seed,
        }
    }

    pub fn default_contaminants() -> Vec<ContaminantEntry> {
        [
            ContaminantKind::Needle,
            ContaminantKind::Pebble,
            ContaminantKind::Clip,
            ContaminantKind::Plastic,
        ]
        .into_iter()
        .map(|kind| ContaminantEntry { spec: ContaminantSpec::default_for(kind), count: 1 })
        .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 64 || self.height < 64 {
            return Err(Error::InvalidInput("scene must be at least 64x64".into()));
        }
        if !(0.0..=255.0).contains(&self.background.mean) || self.background.std < 0.0 {
            return Err(Error::InvalidInput("malformed background distribution".into()));
        }
        for entry in &self.contaminants {
            entry.spec.validate()?;
        }
        Ok(())
    }
}

/// Decoy anchors recorded for false-contamination crops.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoyKind {
    Knot,
    Button,
    ZipTooth,
    ArtefactCluster,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoyPoint {
    pub row: f64,
    pub col: f64,
    pub kind: DecoyKind,
}

/// A rendered scene with its ground truth and decoy anchors.
#[derive(Clone, Debug)]
pub struct SceneRender {
    pub image: GrayImage,
    pub annotation: GroundTruthAnnotation,
    pub decoy_points: Vec<DecoyPoint>,
}

/// Render a scene. Deterministic given the spec (including its seed).
pub fn render_scene(spec: &SceneSpec) -> Result<SceneRender> {
    spec.validate()?;
    render::render(spec)
}

/// Render a scene, returning the image and its annotation.
pub fn generate_scene(spec: &SceneSpec) -> Result<(GrayImage, GroundTruthAnnotation)> {
    let r = render_scene(spec)?;
    Ok((r.image, r.annotation))
}

/// A labeled classifier crop.
#[derive(Clone, Debug)]
pub struct CropSample {
    pub image: GrayImage,
    pub label: Class,
    /// Contaminant or decoy kind the crop is centered on.
    pub origin: String,
}

/// Generate a labeled 120x120 crop dataset: TC crops centered on planted
/// contaminants, FC crops centered on decoys (knots, buttons, zip teeth).
pub fn generate_crop_dataset(
    n_tc: usize,
    n_fc: usize,
    template: &SceneSpec,
    crop_size: usize,
    seed: u64,
) -> Result<Vec<CropSample>> {
    if n_tc < 1 || n_fc < 1 {
        return Err(Error::InvalidInput("need at least one crop per class".into()));
    }
    let kinds: Vec<ContaminantSpec> = if template.contaminants.is_empty() {
        SceneSpec::default_contaminants().iter().map(|e| e.spec).collect()
    } else {
        template.contaminants.iter().map(|e| e.spec).collect()
    };

    let mut out = Vec::with_capacity(n_tc + n_fc);

    // TC crops: one contaminant per scene, kinds cycled.
    let mut made = 0usize;
    let mut attempt = 0u64;
    while made < n_tc {
        if attempt > 4 * n_tc as u64 + 64 {
            return Err(Error::Data("crop dataset: too many failed scene placements".into()));
        }
        let mut scene = template.clone();
        scene.contaminants =
            vec![ContaminantEntry { spec: kinds[made % kinds.len()], count: 1 }];
        scene.seed = seeds::derive(seed, attempt);
        attempt += 1;
        let Ok(render) = render_scene(&scene) else { continue };
        let Some(c) = render.annotation.contaminations.first() else { continue };
        let center = (c.row.round() as i64, c.col.round() as i64);
        let image = crop(&render.image, center, crop_size)?;
        out.push(CropSample { image, label: Class::Tc, origin: c.kind.to_string() });
        made += 1;
    }

    // FC crops: decoy-only scenes, anchors cycled.
    let mut made = 0usize;
    let mut attempt = 0u64;
    let mut anchor_cursor = 0usize;
    while made < n_fc {
        if attempt > 4 * n_fc as u64 + 64 {
            return Err(Error::Data("crop dataset: too many failed decoy scenes".into()));
        }
        let mut scene = template.clone();
        scene.contaminants.clear();
        scene.seed = seeds::derive(seed, 1_000_000 + attempt);
        attempt += 1;
        let Ok(render) = render_scene(&scene) else { continue };
        if render.decoy_points.is_empty() {
            continue;
        }
        // Take up to three anchors per scene.
        for _ in 0..3.min(render.decoy_points.len()) {
            if made >= n_fc {
                break;
            }
            let p = render.decoy_points[anchor_cursor % render.decoy_points.len()];
            anchor_cursor += 1;
            let center = (p.row.round() as i64, p.col.round() as i64);
            let image = crop(&render.image, center, crop_size)?;
            let origin = match p.kind {
                DecoyKind::Knot => "knot",
                DecoyKind::Button => "button",
                DecoyKind::ZipTooth => "zip_tooth",
                DecoyKind::ArtefactCluster => "artefact",
            };
            out.push(CropSample { image, label: Class::Fc, origin: origin.into() });
            made += 1;
        }
    }

    Ok(out)
}

/// Scene-dataset description, the JSON document behind `synth`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneDatasetSpec {
    pub schema: String,
    pub images: usize,
    /// How many of the images carry contaminations.
    pub contaminated: usize,
    pub scene: SceneSpec,
    /// Contaminations planted per contaminated image (inclusive range);
    /// kinds rotate round-robin through the scene's contaminant list.
    pub contaminants_per_image: (usize, usize),
    pub seed: u64,
    pub format: String,
}

impl SceneDatasetSpec {
    pub fn new(images: usize, contaminated: usize, scene: SceneSpec, seed: u64) -> Self {
        Self {
            schema: SYNTH_SCHEMA.into(),
            images,
            contaminated,
            scene,
            contaminants_per_image: (1, 2),
            seed,
            format: "pgm".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SYNTH_SCHEMA {
            return Err(Error::Schema {
                expected: SYNTH_SCHEMA.into(),
                found: self.schema.clone(),
            });
        }
        if self.contaminated > self.images {
            return Err(Error::InvalidInput(
                "contaminated count exceeds image count".into(),
            ));
        }
        if self.contaminants_per_image.0 < 1
            || self.contaminants_per_image.0 > self.contaminants_per_image.1
        {
            return Err(Error::InvalidInput("malformed contaminants_per_image range".into()));
        }
        self.scene.validate()?;
        ImageFormat::from_name(&self.format)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let spec: Self = serde_json::from_slice(&std::fs::read(path)?)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Per-image scene specs of a dataset: which images carry contaminations
/// (a seeded shuffle) and what each image plants.
pub fn dataset_scene_specs(spec: &SceneDatasetSpec) -> Result<Vec<SceneSpec>> {
    spec.validate()?;
    let kinds: Vec<ContaminantSpec> = if spec.scene.contaminants.is_empty() {
        SceneSpec::default_contaminants().iter().map(|e| e.spec).collect()
    } else {
        spec.scene.contaminants.iter().map(|e| e.spec).collect()
    };

    // Seeded choice of contaminated image indices.
    let mut order: Vec<usize> = (0..spec.images).collect();
    let mut rng: StdRng = seeds::rng(spec.seed, 0);
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng);
    let mut contaminated = vec![false; spec.images];
    for &i in order.iter().take(spec.contaminated) {
        contaminated[i] = true;
    }

    let mut kind_cursor = 0usize;
    let mut scenes = Vec::with_capacity(spec.images);
    for (i, &dirty) in contaminated.iter().enumerate() {
        let mut scene = spec.scene.clone();
        scene.seed = seeds::derive(spec.seed, 1 + i as u64);
        scene.contaminants = if dirty {
            let n = rng.gen_range(spec.contaminants_per_image.0..=spec.contaminants_per_image.1);
            (0..n)
                .map(|_| {
                    let entry =
                        ContaminantEntry { spec: kinds[kind_cursor % kinds.len()], count: 1 };
                    kind_cursor += 1;
                    entry
                })
                .collect()
        } else {
            Vec::new()
        };
        scenes.push(scene);
    }
    Ok(scenes)
}

/// Metadata written next to every generated dataset.
#[derive(Serialize)]
struct DatasetMetadata<'a> {
    schema: &'a str,
    spec: &'a SceneDatasetSpec,
    note: &'a str,
}

/// Write a scene dataset: `images/img_NNNNN.{pgm,png}` plus
/// `annotations/img_NNNNN.json` and a `dataset.json` metadata file.
pub fn write_scene_dataset(spec: &SceneDatasetSpec, out_dir: &Path) -> Result<Vec<String>> {
    let format = ImageFormat::from_name(&spec.format)?;
    let scenes = dataset_scene_specs(spec)?;
    let images_dir = out_dir.join("images");
    let ann_dir = out_dir.join("annotations");
    std::fs::create_dir_all(&images_dir)?;
    std::fs::create_dir_all(&ann_dir)?;

    let mut names = Vec::with_capacity(scenes.len());
    for (i, scene) in scenes.iter().enumerate() {
        let name = format!("img_{i:05}.{}", format.extension());
        let render = render_scene(scene)?;
        save_image(&render.image, &images_dir.join(&name), format)?;
        let mut annotation = render.annotation;
        annotation.image = format!("images/{name}");
        annotation.save(&ann_dir.join(format!("img_{i:05}.json")))?;
        names.push(name);
    }

    let meta = DatasetMetadata {
        schema: SYNTH_SCHEMA,
        spec,
        note: "synthetic stand-in corpus; background and artefact statistics are invented, \
               not measured from any scanner",
    };
    std::fs::write(out_dir.join("dataset.json"), serde_json::to_vec_pretty(&meta)?)?;
    Ok(names)
}

/// Load a scene dataset directory written by `write_scene_dataset`.
pub fn load_scene_dataset(dir: &Path) -> Result<Vec<(GrayImage, GroundTruthAnnotation)>> {
    let ann_dir = dir.join("annotations");
    if !ann_dir.is_dir() {
        return Err(Error::Data(format!("{} has no annotations/ directory", dir.display())));
    }
    let mut entries: Vec<_> = std::fs::read_dir(&ann_dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    entries.sort();
    let mut out = Vec::with_capacity(entries.len());
    for path in entries {
        let ann = GroundTruthAnnotation::load(&path)?;
        let img = crate::imaging::load_image(&dir.join(&ann.image))?;
        out.push((img, ann));
    }
    if out.is_empty() {
        return Err(Error::Data(format!("{} contains no annotated images", dir.display())));
    }
    Ok(out)
}

/// Crop-dataset description for the `synth` crops mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CropDatasetSpec {
    pub schema: String,
    pub n_tc: usize,
    pub n_fc: usize,
    pub scene: SceneSpec,
    pub crop_size: usize,
    pub seed: u64,
    pub format: String,
}

impl CropDatasetSpec {
    pub fn new(n_tc: usize, n_fc: usize, scene: SceneSpec, seed: u64) -> Self {
        Self {
            schema: SYNTH_SCHEMA.into(),
            n_tc,
            n_fc,
            scene,
            crop_size: 120,
            seed,
            format: "pgm".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SYNTH_SCHEMA {
            return Err(Error::Schema {
                expected: SYNTH_SCHEMA.into(),
                found: self.schema.clone(),
            });
        }
        if self.n_tc < 1 || self.n_fc < 1 {
            return Err(Error::InvalidInput("need at least one crop per class".into()));
        }
        if self.crop_size < 16 {
            return Err(Error::InvalidInput("crop size too small".into()));
        }
        self.scene.validate()?;
        ImageFormat::from_name(&self.format)?;
        Ok(())
    }
}

/// Write crops plus `manifest.csv` (path,label,origin).
pub fn write_crop_dataset(spec: &CropDatasetSpec, out_dir: &Path) -> Result<()> {
    spec.validate()?;
    let format = ImageFormat::from_name(&spec.format)?;
    let crops = generate_crop_dataset(spec.n_tc, spec.n_fc, &spec.scene, spec.crop_size, spec.seed)?;
    let crops_dir = out_dir.join("crops");
    std::fs::create_dir_all(&crops_dir)?;
    let mut manifest = String::from("path,label,origin\n");
    for (i, sample) in crops.iter().enumerate() {
        let name = format!(
            "crop_{i:05}_{}.{}",
            sample.label.as_str().to_ascii_lowercase(),
            format.extension()
        );
        save_image(&sample.image, &crops_dir.join(&name), format)?;
        manifest.push_str(&format!("crops/{name},{},{}\n", sample.label.as_str(), sample.origin));
    }
    std::fs::write(out_dir.join("manifest.csv"), manifest)?;
    Ok(())
}

#[cfg(test)]
mod tests;
