//! Connected-component labeling (8-connectivity) and blob shape
//! statistics: area, centroid, moment-ellipse axes, aspect ratio and
//! solidity against the discrete convex hull.

use super::binary::BinaryImage;
use super::hull::{convex_hull, lattice_points_in_hull};

/// Inclusive pixel-coordinate rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub min_row: usize,
    pub min_col: usize,
    pub max_row: usize,
    pub max_col: usize,
}

impl Rect {
    pub fn contains(&self, row: f64, col: f64) -> bool {
        row >= self.min_row as f64
            && row <= self.max_row as f64
            && col >= self.min_col as f64
            && col <= self.max_col as f64
    }
}

/// A connected white region with its shape statistics.
#[derive(Clone, Debug)]
pub struct Blob {
    pub label: u32,
    pub area: usize,
    /// (row, col), real-valued.
    pub centroid: (f64, f64),
    pub major_axis_len: f64,
    pub minor_axis_len: f64,
    pub aspect_ratio: f64,
    pub solidity: f64,
    pub bbox: Rect,
    /// Member pixels in row-major order.
    pub pixels: Vec<(u32, u32)>,
}

/// Shape statistics of a pixel set, independent of labeling.
#[derive(Clone, Copy, Debug)]
pub struct ShapeStats {
    pub area: usize,
    pub centroid: (f64, f64),
    pub major_axis_len: f64,
    pub minor_axis_len: f64,
    pub aspect_ratio: f64,
    pub solidity: f64,
    pub bbox: Rect,
}

/// Minor-axis floor: keeps the aspect ratio finite for degenerate pixel
/// sets. With the 1/12 unit-pixel moment correction the computed minor
/// axis never actually drops below 4*sqrt(1/12), so the floor only backs
/// up the invariant.
const MINOR_AXIS_FLOOR: f64 = 0.288_675_134_594_812_9; // 1/sqrt(12)

/// Compute area, centroid, moment-ellipse axes, aspect ratio and
/// solidity of a non-empty pixel set. Each pixel is treated as a unit
/// square: 1/12 is added to both diagonal second central moments, so a
/// single pixel has aspect ratio exactly 1.
pub fn shape_stats(pixels: &[(u32, u32)]) -> ShapeStats {
    assert!(!pixels.is_empty(), "shape_stats requires a non-empty pixel set");
    let n = pixels.len();

    let mut min_row = u32::MAX;
    let mut min_col = u32::MAX;
    let mut max_row = 0u32;
    let mut max_col = 0u32;
    for &(r, c) in pixels {
        min_row = min_row.min(r);
        min_col = min_col.min(c);
        max_row = max_row.max(r);
        max_col = max_col.max(c);
    }
    let bbox = Rect {
        min_row: min_row as usize,
        min_col: min_col as usize,
        max_row: max_row as usize,
        max_col: max_col as usize,
    };

    // Exact integer sums in bbox-local coordinates, centered afterwards.
    let (mut sr, mut sc, mut srr, mut scc, mut src) = (0i64, 0i64, 0i64, 0i64, 0i64);
    for &(r, c) in pixels {
        let lr = (r - min_row) as i64;
        let lc = (c - min_col) as i64;
        sr += lr;
        sc += lc;
        srr += lr * lr;
        scc += lc * lc;
        src += lr * lc;
    }
    let nf = n as f64;
    let mean_r = sr as f64 / nf;
    let mean_c = sc as f64 / nf;
    let mu_rr = (srr as f64 - sr as f64 * mean_r) / nf + 1.0 / 12.0;
    let mu_cc = (scc as f64 - sc as f64 * mean_c) / nf + 1.0 / 12.0;
    let mu_rc = (src as f64 - sr as f64 * mean_c) / nf;

    let trace = mu_rr + mu_cc;
    let det = ((mu_rr - mu_cc).powi(2) + 4.0 * mu_rc * mu_rc).sqrt();
    let lambda_major = (trace + det) / 2.0;
    let lambda_minor = ((trace - det) / 2.0).max(0.0);

    let major_axis_len = 4.0 * lambda_major.sqrt();
    let minor_axis_len = (4.0 * lambda_minor.sqrt()).max(MINOR_AXIS_FLOOR);
    let aspect_ratio = major_axis_len / minor_axis_len;

    let hull_pts: Vec<(i64, i64)> = pixels.iter().map(|&(r, c)| (r as i64, c as i64)).collect();
    let hull = convex_hull(&hull_pts);
    let hull_area = lattice_points_in_hull(&hull) as f64;
    let solidity = n as f64 / hull_area;

    ShapeStats {
        area: n,
        centroid: (min_row as f64 + mean_r, min_col as f64 + mean_c),
        major_axis_len,
        minor_axis_len,
        aspect_ratio,
        solidity,
        bbox,
    }
}

/// Label maximal 8-connected white regions and return one `Blob` per
/// region, ordered by first pixel in row-major order. An all-black
/// image yields an empty list.
pub fn connected_components(bin: &BinaryImage) -> Vec<Blob> {
    blobs_from_lists(label_pixel_lists(bin).into_iter().enumerate())
}

/// Labeling restricted to components whose area lies in [lo, hi]; the
/// detection hot path uses this to skip shape statistics (and hulls)
/// of out-of-range objects. Labels still count all components.
pub(crate) fn components_in_area_range(bin: &BinaryImage, lo: usize, hi: usize) -> Vec<Blob> {
    blobs_from_lists(
        label_pixel_lists(bin)
            .into_iter()
            .enumerate()
            .filter(|(_, pixels)| (lo..=hi).contains(&pixels.len())),
    )
}

fn blobs_from_lists(lists: impl Iterator<Item = (usize, Vec<(u32, u32)>)>) -> Vec<Blob> {
    lists
        .map(|(i, pixels)| {
            let stats = shape_stats(&pixels);
            Blob {
                label: i as u32 + 1,
                area: stats.area,
                centroid: stats.centroid,
                major_axis_len: stats.major_axis_len,
                minor_axis_len: stats.minor_axis_len,
                aspect_ratio: stats.aspect_ratio,
                solidity: stats.solidity,
                bbox: stats.bbox,
                pixels,
            }
        })
        .collect()
}

/// Union-find labeling; returns per-component pixel lists ordered by
/// first pixel in row-major order.
fn label_pixel_lists(bin: &BinaryImage) -> Vec<Vec<(u32, u32)>> {
    let width = bin.width();
    let height = bin.height();
    if width == 0 || height == 0 {
        return Vec::new();
    }

    // Pass 1: provisional labels with union-find over W/NW/N/NE.
    let mut labels = vec![0u32; width * height];
    let mut parent: Vec<u32> = vec![0]; // parent[0] unused; labels start at 1

    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }

    for r in 0..height {
        for c in 0..width {
            if !bin.get(r, c) {
                continue;
            }
            let idx = r * width + c;
            let mut assigned = 0u32;
            let consider = |lbl: u32, assigned: &mut u32, parent: &mut Vec<u32>| {
                if lbl == 0 {
                    return;
                }
                if *assigned == 0 {
                    *assigned = lbl;
                } else {
                    let a = find(parent, *assigned);
                    let b = find(parent, lbl);
                    if a != b {
                        parent[a.max(b) as usize] = a.min(b);
                    }
                }
            };
            if c > 0 {
                consider(labels[idx - 1], &mut assigned, &mut parent);
            }
            if r > 0 {
                let up = idx - width;
                if c > 0 {
                    consider(labels[up - 1], &mut assigned, &mut parent);
                }
                consider(labels[up], &mut assigned, &mut parent);
                if c + 1 < width {
                    consider(labels[up + 1], &mut assigned, &mut parent);
                }
            }
            if assigned == 0 {
                let fresh = parent.len() as u32;
                parent.push(fresh);
                assigned = fresh;
            }
            labels[idx] = assigned;
        }
    }

    // Pass 2: resolve roots to dense ids in first-appearance order and
    // collect pixel lists.
    let mut dense_of_root: Vec<u32> = vec![0; parent.len()];
    let mut pixel_lists: Vec<Vec<(u32, u32)>> = Vec::new();
    for r in 0..height {
        for c in 0..width {
            let lbl = labels[r * width + c];
            if lbl == 0 {
                continue;
            }
            let root = find(&mut parent, lbl);
            let dense = if dense_of_root[root as usize] == 0 {
                pixel_lists.push(Vec::new());
                dense_of_root[root as usize] = pixel_lists.len() as u32;
                pixel_lists.len() as u32
            } else {
                dense_of_root[root as usize]
            };
            pixel_lists[dense as usize - 1].push((r as u32, c as u32));
        }
    }

    pixel_lists
}
