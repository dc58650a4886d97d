//! Geometric data augmentation: random rotation, shift and zoom with
//! bilinear resampling and edge-replication fill.

use rand::rngs::StdRng;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::imaging::GrayImage;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentRanges {
    /// Rotation drawn from [-max, +max] degrees.
    pub max_rotate_deg: f64,
    /// Shift drawn from [-max, +max] pixels on each axis.
    pub max_shift_px: f64,
    /// Zoom factor range.
    pub zoom: (f64, f64),
}

impl Default for AugmentRanges {
    fn default() -> Self {
        Self { max_rotate_deg: 20.0, max_shift_px: 10.0, zoom: (0.9, 1.1) }
    }
}

/// Apply one random transform drawn from `ranges`.
pub fn augment(img: &GrayImage, rng: &mut StdRng, ranges: &AugmentRanges) -> GrayImage {
    let angle = rng.gen_range(-ranges.max_rotate_deg..=ranges.max_rotate_deg);
    let shift_r = rng.gen_range(-ranges.max_shift_px..=ranges.max_shift_px);
    let shift_c = rng.gen_range(-ranges.max_shift_px..=ranges.max_shift_px);
    let zoom = rng.gen_range(ranges.zoom.0..=ranges.zoom.1);
    apply_affine(img, angle, (shift_r, shift_c), zoom)
}

/// Rotate about the image center by `rotate_deg`, scale by `zoom`, then
/// translate by `shift` (rows, cols). Output keeps the input size;
/// samples are bilinear with edge replication.
pub fn apply_affine(
    img: &GrayImage,
    rotate_deg: f64,
    shift: (f64, f64),
    zoom: f64,
) -> GrayImage {
    let h = img.height();
    let w = img.width();
    let cy = (h as f64 - 1.0) / 2.0;
    let cx = (w as f64 - 1.0) / 2.0;
    let theta = rotate_deg.to_radians();
    let (sin, cos) = theta.sin_cos();

    let mut out = GrayImage::filled(w, h, 0);
    for r in 0..h {
        for c in 0..w {
            // Inverse map: undo shift, then inverse rotation and zoom
            // about the center.
            let dr = r as f64 - cy - shift.0;
            let dc = c as f64 - cx - shift.1;
            let src_r = (cos * dr + sin * dc) / zoom + cy;
            let src_c = (-sin * dr + cos * dc) / zoom + cx;
            out.set(r, c, bilinear_clamped(img, src_r, src_c));
        }
    }
    out
}

fn bilinear_clamped(img: &GrayImage, r: f64, c: f64) -> u8 {
    let r0 = r.floor();
    let c0 = c.floor();
    let fr = r - r0;
    let fc = c - c0;
    let r0 = r0 as i64;
    let c0 = c0 as i64;
    let p00 = img.get_clamped(r0, c0) as f64;
    let p01 = img.get_clamped(r0, c0 + 1) as f64;
    let p10 = img.get_clamped(r0 + 1, c0) as f64;
    let p11 = img.get_clamped(r0 + 1, c0 + 1) as f64;
    let top = p00 * (1.0 - fc) + p01 * fc;
    let bottom = p10 * (1.0 - fc) + p11 * fc;
    let value = top * (1.0 - fr) + bottom * fr;
    value.round().clamp(0.0, 255.0) as u8
}
