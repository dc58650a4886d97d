//! Brute-force oracles shared by the integration suites. These are
//! deliberately independent re-derivations of the library routines:
//! direct Minkowski set operations, direct moment summation, and
//! definition-level convex-hull membership.

use contamdet_core::imaging::{convex_hull, BinaryImage, StructuringElement};

/// Direct Minkowski dilation over pixel sets.
pub fn naive_dilate(bin: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    let offsets = se.offsets();
    BinaryImage::from_fn(bin.width(), bin.height(), |r, c| {
        offsets.iter().any(|&(dr, dc)| {
            let sr = r as i64 - dr;
            let sc = c as i64 - dc;
            sr >= 0
                && sc >= 0
                && (sr as usize) < bin.height()
                && (sc as usize) < bin.width()
                && bin.get(sr as usize, sc as usize)
        })
    })
}

/// Direct Minkowski erosion over pixel sets (outside is black).
pub fn naive_erode(bin: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    let offsets = se.offsets();
    BinaryImage::from_fn(bin.width(), bin.height(), |r, c| {
        offsets.iter().all(|&(dr, dc)| {
            let sr = r as i64 + dr;
            let sc = c as i64 + dc;
            sr >= 0
                && sc >= 0
                && (sr as usize) < bin.height()
                && (sc as usize) < bin.width()
                && bin.get(sr as usize, sc as usize)
        })
    })
}

/// Direct f64 moment summation with the unit-pixel correction; returns
/// (major, minor, ratio, centroid).
pub fn oracle_axes(pixels: &[(u32, u32)]) -> (f64, f64, f64, (f64, f64)) {
    let n = pixels.len() as f64;
    let mean_r = pixels.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let mean_c = pixels.iter().map(|p| p.1 as f64).sum::<f64>() / n;
    let mut mu_rr = 0.0;
    let mut mu_cc = 0.0;
    let mut mu_rc = 0.0;
    for &(r, c) in pixels {
        let dr = r as f64 - mean_r;
        let dc = c as f64 - mean_c;
        mu_rr += dr * dr;
        mu_cc += dc * dc;
        mu_rc += dr * dc;
    }
    mu_rr = mu_rr / n + 1.0 / 12.0;
    mu_cc = mu_cc / n + 1.0 / 12.0;
    mu_rc /= n;
    let mean = (mu_rr + mu_cc) / 2.0;
    let delta = (((mu_rr - mu_cc) / 2.0).powi(2) + mu_rc * mu_rc).sqrt();
    let major = 4.0 * (mean + delta).sqrt();
    let minor = 4.0 * (mean - delta).max(0.0).sqrt();
    (major, minor, major / minor, (mean_r, mean_c))
}

/// Definition-level hull membership: q is in conv(S) iff adding q
/// leaves the hull unchanged.
pub fn in_hull_by_recompute(points: &[(i64, i64)], q: (i64, i64)) -> bool {
    let base = convex_hull(points);
    let mut extended = points.to_vec();
    extended.push(q);
    convex_hull(&extended) == base
}

/// Exhaustive lattice count of conv(pixel set) by per-point membership.
pub fn oracle_hull_count(pixels: &[(u32, u32)]) -> u64 {
    let points: Vec<(i64, i64)> = pixels.iter().map(|&(r, c)| (r as i64, c as i64)).collect();
    let min_r = points.iter().map(|p| p.0).min().unwrap();
    let max_r = points.iter().map(|p| p.0).max().unwrap();
    let min_c = points.iter().map(|p| p.1).min().unwrap();
    let max_c = points.iter().map(|p| p.1).max().unwrap();
    let mut n = 0;
    for r in min_r..=max_r {
        for c in min_c..=max_c {
            if in_hull_by_recompute(&points, (r, c)) {
                n += 1;
            }
        }
    }
    n
}
