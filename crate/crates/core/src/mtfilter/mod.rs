//! The multi-threshold detection procedure: binarize at a ladder of
//! gray thresholds, close with a calibrated structuring element, keep
//! blobs whose shape statistics fall inside calibrated confidence
//! intervals, prune clustered blobs by neighbour density, and confirm
//! shape stability one threshold step up. Survivors are candidate
//! contaminations, merged across threshold levels.

mod calibrate;

pub use calibrate::{
    calibrate, CalibrationConfig, CalibrationReport, GridPoint, UncalibratableContamination,
};

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{
    binarize, close, components_in_area_range, connected_components, crop, Blob, GrayImage,
    StructuringElement,
};

pub const PROFILE_SCHEMA: &str = "contamdet/profile/v1";

/// Gray-level step of the threshold ladder: delta = 255/24.
pub const LADDER_DELTA: f64 = 255.0 / 24.0;

/// The threshold ladder th_k = k * 255/24 for k in [k_lower, k_upper).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdLadder {
    pub k_lower: u8,
    pub k_upper: u8,
}

impl ThresholdLadder {
    pub fn new(k_lower: u8, k_upper: u8) -> Result<Self> {
        let ladder = Self { k_lower, k_upper };
        ladder.validate()?;
        Ok(ladder)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_lower >= self.k_upper || self.k_upper > 23 {
            return Err(Error::InvalidInput(format!(
                "threshold ladder needs 0 <= k_lower < k_upper <= 23, got [{}, {})",
                self.k_lower, self.k_upper
            )));
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        LADDER_DELTA
    }

    pub fn threshold(k: u8) -> f64 {
        k as f64 * LADDER_DELTA
    }

    /// (k, th_k) pairs of the ladder.
    pub fn levels(&self) -> impl Iterator<Item = (u8, f64)> {
        (self.k_lower..self.k_upper).map(|k| (k, Self::threshold(k)))
    }

    pub fn contains(&self, k: u8) -> bool {
        (self.k_lower..self.k_upper).contains(&k)
    }
}

/// Confidence interval of one shape parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeInterval {
    pub mean: f64,
    pub std: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ShapeInterval {
    /// Symmetric mu +/- sigmas interval clamped to [floor, ceil].
    pub fn from_samples(values: &[f64], sigmas: f64, floor: f64, ceil: f64) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std,
            lo: (mean - sigmas * std).max(floor),
            hi: (mean + sigmas * std).min(ceil),
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo > self.hi || self.std < 0.0 {
            return Err(Error::InvalidInput(format!(
                "malformed shape interval [{}, {}] (std {})",
                self.lo, self.hi, self.std
            )));
        }
        Ok(())
    }
}

/// The three filtered shape parameters of step 4.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeIntervals {
    pub area: ShapeInterval,
    pub ratio: ShapeInterval,
    pub solidity: ShapeInterval,
}

impl ShapeIntervals {
    pub fn admits(&self, blob: &Blob) -> bool {
        self.area.contains(blob.area as f64)
            && self.ratio.contains(blob.aspect_ratio)
            && self.solidity.contains(blob.solidity)
    }

    pub fn validate(&self) -> Result<()> {
        self.area.validate()?;
        self.ratio.validate()?;
        self.solidity.validate()
    }
}

/// All tuned MT-Filter parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationProfile {
    pub schema: String,
    pub ladder: ThresholdLadder,
    /// Global shape intervals (step 4).
    pub intervals: ShapeIntervals,
    /// Optional per-threshold-band overrides keyed by k.
    #[serde(default)]
    pub band_overrides: BTreeMap<u8, ShapeIntervals>,
    pub se: StructuringElement,
    /// Minimum mean distance to the nearest neighbours (density filter).
    pub d0: f64,
    /// Stability bounds on area and major-axis growth at th_k + delta.
    pub area_growth_max: f64,
    pub axis_growth_max: f64,
    /// Window size of the stability subimage.
    pub neighborhood_size: usize,
    /// Detections across threshold levels closer than this merge.
    pub merge_radius: f64,
}

impl CalibrationProfile {
    pub fn validate(&self) -> Result<()> {
        if self.schema != PROFILE_SCHEMA {
            return Err(Error::Schema {
                expected: PROFILE_SCHEMA.into(),
                found: self.schema.clone(),
            });
        }
        self.ladder.validate()?;
        self.intervals.validate()?;
        for iv in self.band_overrides.values() {
            iv.validate()?;
        }
        self.se.validate()?;
        if self.d0 <= 0.0 {
            return Err(Error::InvalidInput("d0 must be positive".into()));
        }
        if self.area_growth_max < 1.0 || self.axis_growth_max < 1.0 {
            return Err(Error::InvalidInput("growth bounds must be >= 1".into()));
        }
        if self.neighborhood_size < 8 {
            return Err(Error::InvalidInput("neighborhood size too small".into()));
        }
        if self.merge_radius < 0.0 {
            return Err(Error::InvalidInput("merge radius must be >= 0".into()));
        }
        Ok(())
    }

    pub fn intervals_for(&self, k: u8) -> &ShapeIntervals {
        self.band_overrides.get(&k).unwrap_or(&self.intervals)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let profile: CalibrationProfile = serde_json::from_slice(&bytes)?;
        profile.validate()?;
        Ok(profile)
    }
}

/// Contamination kinds used in annotations and detection hints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContaminantKind {
    Needle,
    Clip,
    Pebble,
    Plastic,
    Other,
}

impl std::fmt::Display for ContaminantKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ContaminantKind::Needle => "needle",
            ContaminantKind::Clip => "clip",
            ContaminantKind::Pebble => "pebble",
            ContaminantKind::Plastic => "plastic",
            ContaminantKind::Other => "other",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Candidate,
    TrueContamination,
    FalseAlarm,
}

/// A candidate contamination proposed by the filter.
#[derive(Clone, Debug)]
pub struct Detection {
    /// (row, col), real-valued.
    pub centroid: (f64, f64),
    /// Ladder index k the blob was first detected at.
    pub threshold_index: u8,
    pub blob: Blob,
    pub kind_hint: Option<ContaminantKind>,
    pub verdict: Verdict,
}

/// Per-image ground truth: labeled contamination coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthAnnotation {
    pub image: String,
    pub contaminations: Vec<Contamination>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contamination {
    pub row: f64,
    pub col: f64,
    pub kind: ContaminantKind,
}

impl GroundTruthAnnotation {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

/// Retain blobs whose mean centroid distance to their m = min(3, n-1)
/// nearest neighbours is at least d0. A blob without neighbours is
/// always retained.
pub fn density_filter(blobs: Vec<Blob>, d0: f64) -> Vec<Blob> {
    let n = blobs.len();
    if n <= 1 {
        return blobs;
    }
    let m = 3.min(n - 1);
    let centroids: Vec<(f64, f64)> = blobs.iter().map(|b| b.centroid).collect();
    blobs
        .into_iter()
        .enumerate()
        .filter(|(i, _)| {
            let mut dists: Vec<f64> = centroids
                .iter()
                .enumerate()
                .filter(|(j, _)| j != i)
                .map(|(_, c)| {
                    let dr = c.0 - centroids[*i].0;
                    let dc = c.1 - centroids[*i].1;
                    (dr * dr + dc * dc).sqrt()
                })
                .collect();
            dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mean = dists[..m].iter().sum::<f64>() / m as f64;
            mean >= d0
        })
        .map(|(_, b)| b)
        .collect()
}

/// Shape-stability check (steps 5-6): re-binarize a neighbourhood of the
/// candidate at th_k + delta and require bounded growth of area and
/// major-axis length. Under threshold monotonicity the object can only
/// grow; true contaminations grow little, artefacts balloon.
pub fn stability_check(
    img: &GrayImage,
    det: &Detection,
    profile: &CalibrationProfile,
) -> bool {
    let k = det.threshold_index;
    debug_assert!(k < 23, "ladder invariant keeps k + 1 within range");
    let th_next = ThresholdLadder::threshold(k + 1);

    let size = profile.neighborhood_size;
    let center = (det.centroid.0.round() as i64, det.centroid.1.round() as i64);
    let Ok(window) = crop(img, center, size) else {
        return false;
    };
    let top = center.0 - size as i64 / 2;
    let left = center.1 - size as i64 / 2;

    let bin = binarize(&window, th_next);
    let comps = connected_components(&bin);
    if comps.is_empty() {
        debug_assert!(false, "threshold monotonicity: original pixels must stay white");
        return false;
    }

    // Label map of the grown components inside the window.
    let mut label_map = vec![0u32; size * size];
    for comp in &comps {
        for &(r, c) in &comp.pixels {
            label_map[r as usize * size + c as usize] = comp.label;
        }
    }

    // The grown object is the component with maximal overlap with the
    // original blob's pixels.
    let mut overlap: Vec<usize> = vec![0; comps.len() + 1];
    for &(r, c) in &det.blob.pixels {
        let wr = r as i64 - top;
        let wc = c as i64 - left;
        if wr >= 0 && wc >= 0 && (wr as usize) < size && (wc as usize) < size {
            let lbl = label_map[wr as usize * size + wc as usize];
            if lbl > 0 {
                overlap[lbl as usize] += 1;
            }
        }
    }
    let (best_label, best_overlap) =
        overlap.iter().enumerate().skip(1).max_by_key(|&(i, &o)| (o, std::cmp::Reverse(i))).unwrap();
    if *best_overlap == 0 {
        debug_assert!(false, "threshold monotonicity: original pixels must stay white");
        return false;
    }
    let grown = &comps[best_label - 1];

    let area_growth = grown.area as f64 / det.blob.area as f64;
    let axis_growth = grown.major_axis_len / det.blob.major_axis_len;
    area_growth <= profile.area_growth_max && axis_growth <= profile.axis_growth_max
}

/// Run the full multi-threshold procedure. Returns candidate detections
/// with duplicates across threshold levels merged (within
/// `merge_radius`, keeping the lowest k).
///
/// Threshold levels are independent and evaluated in parallel; the
/// cross-level merge joins them in ascending-k order, so the output is
/// deterministic regardless of thread count.
pub fn detect(img: &GrayImage, profile: &CalibrationProfile) -> Result<Vec<Detection>> {
    profile.validate()?;

    let levels: Vec<(u8, f64)> = profile.ladder.levels().collect();
    let per_level: Vec<Vec<Detection>> = levels
        .par_iter()
        .map(|&(k, th)| {
            let bin = binarize(img, th);
            let closed = close(&bin, &profile.se);
            let intervals = profile.intervals_for(k);
            let area_lo = intervals.area.lo.ceil().max(1.0) as usize;
            let area_hi = intervals.area.hi.floor().max(0.0) as usize;
            if area_hi < area_lo {
                return Vec::new();
            }
            let blobs = components_in_area_range(&closed, area_lo, area_hi);
            let kept: Vec<Blob> = blobs.into_iter().filter(|b| intervals.admits(b)).collect();
            let kept = density_filter(kept, profile.d0);
            kept.into_iter()
                .map(|blob| Detection {
                    centroid: blob.centroid,
                    threshold_index: k,
                    blob,
                    kind_hint: None,
                    verdict: Verdict::Candidate,
                })
                .filter(|candidate| stability_check(img, candidate, profile))
                .collect()
        })
        .collect();

    let mut detections: Vec<Detection> = Vec::new();
    for candidates in per_level {
        for candidate in candidates {
            let duplicate = detections.iter().any(|d| {
                let dr = d.centroid.0 - candidate.centroid.0;
                let dc = d.centroid.1 - candidate.centroid.1;
                (dr * dr + dc * dc).sqrt() <= profile.merge_radius
            });
            if !duplicate {
                detections.push(candidate);
            }
        }
    }
    Ok(detections)
}
