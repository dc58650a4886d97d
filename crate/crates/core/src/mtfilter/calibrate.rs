//! Supervised calibration of the filter parameters from an annotated
//! ground-truth set: segment each labeled contamination at its lowest
//! workable threshold, derive the threshold ladder and the shape
//! confidence intervals from those blobs, then grid-search the
//! structuring element, density threshold and growth bounds by re-running
//! the full detection, maximizing recall first and false positives second.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    detect, CalibrationProfile, ContaminantKind, GroundTruthAnnotation, ShapeInterval,
    ShapeIntervals, ThresholdLadder, PROFILE_SCHEMA,
};
use crate::error::{Error, Result};
use crate::imaging::{binarize, crop, shape_stats, BinaryImage, GrayImage, StructuringElement};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub se_candidates: Vec<StructuringElement>,
    pub d0_candidates: Vec<f64>,
    /// (area_growth_max, axis_growth_max) pairs.
    pub growth_candidates: Vec<(f64, f64)>,
    pub neighborhood_size: usize,
    pub merge_radius: f64,
    /// A detection matches an annotation within this distance; also the
    /// search radius used to seed the supervised segmentation.
    pub match_radius: f64,
    pub interval_sigmas: f64,
    /// When set, also derive per-threshold-band interval overrides from
    /// the fits measured near each band (falling back to the global
    /// intervals where samples are scarce). Off by default: one global
    /// set of confidence intervals.
    pub band_intervals: bool,
    /// Half-width of the band sample window in ladder steps.
    pub band_window: u8,
    /// Minimum fits a band needs before it gets its own intervals.
    pub band_min_samples: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            se_candidates: vec![
                StructuringElement::disk(1),
                StructuringElement::disk(2),
                StructuringElement::square(1),
            ],
            d0_candidates: vec![4.0, 8.0, 12.0, 16.0],
            growth_candidates: vec![(1.5, 1.5), (2.0, 1.8), (3.0, 2.5), (5.0, 4.0)],
            neighborhood_size: 120,
            merge_radius: 10.0,
            match_radius: 5.0,
            interval_sigmas: 2.0,
            band_intervals: false,
            band_window: 2,
            band_min_samples: 6,
        }
    }
}

/// One supervised segmentation of an annotated contamination.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ContaminationFit {
    pub image_index: usize,
    pub kind: ContaminantKind,
    /// Lowest k at which a blob containing the annotated point exists.
    pub lowest_k: u8,
    /// Threshold the shape statistics were measured at: one step above
    /// `lowest_k` (where the object is fully segmented; right at
    /// `lowest_k` an object whose gray level straddles the threshold is
    /// only partially white).
    pub measured_k: u8,
    pub area: f64,
    pub ratio: f64,
    pub solidity: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UncalibratableContamination {
    pub image_index: usize,
    pub kind: ContaminantKind,
    pub row: f64,
    pub col: f64,
}

/// One evaluated grid combination.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridPoint {
    pub se: StructuringElement,
    pub d0: f64,
    pub area_growth_max: f64,
    pub axis_growth_max: f64,
    pub matched: usize,
    pub total: usize,
    pub recall: f64,
    pub false_positives: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub fits: Vec<ContaminationFit>,
    pub uncalibratable: Vec<UncalibratableContamination>,
    pub grid: Vec<GridPoint>,
    pub chosen: GridPoint,
}

/// Calibrate all filter parameters from annotated images.
///
/// Contaminations that are never segmentable at any k <= 22 are reported
/// in the result and excluded from the statistics; kinds with fewer than
/// two annotated instances are a data error.
pub fn calibrate(
    annotated: &[(GrayImage, GroundTruthAnnotation)],
    config: &CalibrationConfig,
) -> Result<(CalibrationProfile, CalibrationReport)> {
    if annotated.is_empty() {
        return Err(Error::Data("calibration set is empty".into()));
    }
    let mut kind_counts = std::collections::BTreeMap::new();
    for (_, ann) in annotated {
        for c in &ann.contaminations {
            *kind_counts.entry(c.kind).or_insert(0usize) += 1;
        }
    }
    if kind_counts.is_empty() {
        return Err(Error::Data("calibration set has no annotated contaminations".into()));
    }
    for (kind, count) in &kind_counts {
        if *count < 2 {
            return Err(Error::Data(format!(
                "kind {kind} has only {count} annotated instance(s); need at least 2"
            )));
        }
    }

    // Supervised segmentation of every annotated contamination.
    let mut fits = Vec::new();
    let mut uncalibratable = Vec::new();
    for (image_index, (img, ann)) in annotated.iter().enumerate() {
        for c in &ann.contaminations {
            match supervised_fit(img, (c.row, c.col), config) {
                Some(fit) => fits.push(ContaminationFit { image_index, kind: c.kind, ..fit }),
                None => uncalibratable.push(UncalibratableContamination {
                    image_index,
                    kind: c.kind,
                    row: c.row,
                    col: c.col,
                }),
            }
        }
    }
    if fits.is_empty() {
        return Err(Error::Data(
            "no annotated contamination is segmentable at any threshold".into(),
        ));
    }

    // The ladder starts where the earliest contamination surfaces and
    // covers every measurement threshold.
    let k_lower = fits.iter().map(|f| f.lowest_k).min().unwrap();
    let k_upper = (fits.iter().map(|f| f.measured_k).max().unwrap() + 1).min(23);
    let ladder = ThresholdLadder::new(k_lower, k_upper)?;

    let sig = config.interval_sigmas;
    let intervals_of = |fits: &[&ContaminationFit]| -> ShapeIntervals {
        let areas: Vec<f64> = fits.iter().map(|f| f.area).collect();
        let ratios: Vec<f64> = fits.iter().map(|f| f.ratio).collect();
        let solidities: Vec<f64> = fits.iter().map(|f| f.solidity).collect();
        ShapeIntervals {
            area: ShapeInterval::from_samples(&areas, sig, 0.0, f64::INFINITY),
            ratio: ShapeInterval::from_samples(&ratios, sig, 1.0, f64::INFINITY),
            solidity: ShapeInterval::from_samples(&solidities, sig, 0.0, 1.0),
        }
    };
    let intervals = intervals_of(&fits.iter().collect::<Vec<_>>());

    let mut band_overrides = std::collections::BTreeMap::new();
    if config.band_intervals {
        for k in ladder.k_lower..ladder.k_upper {
            let band: Vec<&ContaminationFit> = fits
                .iter()
                .filter(|f| f.measured_k.abs_diff(k) <= config.band_window)
                .collect();
            if band.len() >= config.band_min_samples {
                band_overrides.insert(k, intervals_of(&band));
            }
        }
    }

    // Grid search over the remaining parameters, re-running the full
    // detection on the calibration set for every combination. The
    // combinations are independent; they fan out in parallel and join
    // in grid order.
    let mut combos = Vec::new();
    for se in &config.se_candidates {
        for &d0 in &config.d0_candidates {
            for &(ga, gx) in &config.growth_candidates {
                combos.push((*se, d0, ga, gx));
            }
        }
    }
    let grid: Vec<GridPoint> = combos
        .par_iter()
        .map(|&(se, d0, ga, gx)| {
            let profile = CalibrationProfile {
                schema: PROFILE_SCHEMA.into(),
                ladder,
                intervals,
                band_overrides: band_overrides.clone(),
                se,
                d0,
                area_growth_max: ga,
                axis_growth_max: gx,
                neighborhood_size: config.neighborhood_size,
                merge_radius: config.merge_radius,
            };
            let (matched, total, false_positives) =
                score_profile(annotated, &profile, config.match_radius)?;
            Ok(GridPoint {
                se,
                d0,
                area_growth_max: ga,
                axis_growth_max: gx,
                matched,
                total,
                recall: if total > 0 { matched as f64 / total as f64 } else { 0.0 },
                false_positives,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let chosen = grid
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.recall
                .partial_cmp(&b.recall)
                .unwrap()
                .then(b.false_positives.cmp(&a.false_positives))
                .then(ib.cmp(ia))
        })
        .map(|(_, g)| g.clone())
        .expect("non-empty grid");

    let profile = CalibrationProfile {
        schema: PROFILE_SCHEMA.into(),
        ladder,
        intervals,
        band_overrides,
        se: chosen.se,
        d0: chosen.d0,
        area_growth_max: chosen.area_growth_max,
        axis_growth_max: chosen.axis_growth_max,
        neighborhood_size: config.neighborhood_size,
        merge_radius: config.merge_radius,
    };
    profile.validate()?;
    Ok((profile, CalibrationReport { fits, uncalibratable, grid, chosen }))
}

/// Find the lowest k at which a blob containing (or nearly containing)
/// the annotated point exists, then measure the blob one step higher,
/// where an object whose gray level straddles th_k is fully segmented.
/// Works on a window around the annotation; no morphology or filtering
/// is applied.
fn supervised_fit(
    img: &GrayImage,
    point: (f64, f64),
    config: &CalibrationConfig,
) -> Option<ContaminationFit> {
    let size = config.neighborhood_size;
    let center = (point.0.round() as i64, point.1.round() as i64);
    let window = crop(img, center, size).ok()?;
    let local = ((size / 2) as f64, (size / 2) as f64);

    for k in 0..=22u8 {
        let bin = binarize(&window, ThresholdLadder::threshold(k));
        if seed_near(&bin, local, config.match_radius).is_none() {
            continue;
        }
        let measured_k = (k + 1).min(22);
        let bin = binarize(&window, ThresholdLadder::threshold(measured_k));
        let seed = seed_near(&bin, local, config.match_radius)?;
        let pixels = flood_fill(&bin, seed);
        let stats = shape_stats(&pixels);
        return Some(ContaminationFit {
            image_index: 0,
            kind: ContaminantKind::Other,
            lowest_k: k,
            measured_k,
            area: stats.area as f64,
            ratio: stats.aspect_ratio,
            solidity: stats.solidity,
        });
    }
    None
}

/// Nearest white pixel within `radius` of `center` (ties resolved by
/// scan order).
fn seed_near(bin: &BinaryImage, center: (f64, f64), radius: f64) -> Option<(usize, usize)> {
    let r0 = ((center.0 - radius).floor().max(0.0)) as usize;
    let r1 = ((center.0 + radius).ceil() as usize).min(bin.height().saturating_sub(1));
    let c0 = ((center.1 - radius).floor().max(0.0)) as usize;
    let c1 = ((center.1 + radius).ceil() as usize).min(bin.width().saturating_sub(1));
    let mut best: Option<((usize, usize), f64)> = None;
    for r in r0..=r1 {
        for c in c0..=c1 {
            if !bin.get(r, c) {
                continue;
            }
            let d = ((r as f64 - center.0).powi(2) + (c as f64 - center.1).powi(2)).sqrt();
            if d <= radius && best.is_none_or(|(_, bd)| d < bd) {
                best = Some(((r, c), d));
            }
        }
    }
    best.map(|(p, _)| p)
}

/// 8-connected flood fill from a white seed.
fn flood_fill(bin: &BinaryImage, seed: (usize, usize)) -> Vec<(u32, u32)> {
    let mut visited = vec![false; bin.width() * bin.height()];
    let mut stack = vec![seed];
    let mut out = Vec::new();
    visited[seed.0 * bin.width() + seed.1] = true;
    while let Some((r, c)) = stack.pop() {
        out.push((r as u32, c as u32));
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                let nr = r as i64 + dr;
                let nc = c as i64 + dc;
                if nr < 0 || nc < 0 || nr >= bin.height() as i64 || nc >= bin.width() as i64 {
                    continue;
                }
                let (nr, nc) = (nr as usize, nc as usize);
                let idx = nr * bin.width() + nc;
                if !visited[idx] && bin.get(nr, nc) {
                    visited[idx] = true;
                    stack.push((nr, nc));
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Run `detect` over the calibration set and count matched annotations
/// and unmatched detections.
fn score_profile(
    annotated: &[(GrayImage, GroundTruthAnnotation)],
    profile: &CalibrationProfile,
    match_radius: f64,
) -> Result<(usize, usize, usize)> {
    let mut matched = 0usize;
    let mut total = 0usize;
    let mut false_positives = 0usize;
    for (img, ann) in annotated {
        let detections = detect(img, profile)?;
        total += ann.contaminations.len();
        for c in &ann.contaminations {
            let hit = detections.iter().any(|d| {
                let dr = d.centroid.0 - c.row;
                let dc = d.centroid.1 - c.col;
                (dr * dr + dc * dc).sqrt() <= match_radius
            });
            if hit {
                matched += 1;
            }
        }
        for d in &detections {
            let hit = ann.contaminations.iter().any(|c| {
                let dr = d.centroid.0 - c.row;
                let dc = d.centroid.1 - c.col;
                (dr * dr + dc * dc).sqrt() <= match_radius
            });
            if !hit {
                false_positives += 1;
            }
        }
    }
    Ok((matched, total, false_positives))
}
