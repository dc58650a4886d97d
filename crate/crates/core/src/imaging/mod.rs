//! Raster primitives shared by the whole pipeline: 8-bit grayscale
//! images, packed binary images, thresholding, connected components,
//! blob shape statistics, binary morphology and window cropping.

mod binary;
mod components;
mod hull;
mod io;
mod morphology;

pub use binary::BinaryImage;
pub(crate) use components::components_in_area_range;
pub use components::{connected_components, shape_stats, Blob, Rect, ShapeStats};
pub use hull::{convex_hull, lattice_points_in_hull};
pub use io::{
    from_pgm_bytes, from_png_bytes, load_image, read_pgm, read_png, save_image, to_pgm_bytes,
    to_png_bytes, write_pgm, write_png, ImageFormat,
};
pub use morphology::{close, dilate, erode, open, SeShape, StructuringElement};

use crate::error::{Error, Result};

/// 8-bit grayscale raster, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GrayImage({}x{})", self.width, self.height)
    }
}

impl GrayImage {
    /// Build from raw row-major pixels; `pixels.len()` must equal `width * height`.
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Image(format!(
                "pixel count {} does not match {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, pixels })
    }

    /// Uniform image of the given gray level.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self { width, height, pixels: vec![value; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.pixels[row * self.width + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[u8] {
        &self.pixels[row * self.width..(row + 1) * self.width]
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn in_bounds(&self, row: i64, col: i64) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.height && (col as usize) < self.width
    }

    /// Sample with edge replication for out-of-range coordinates.
    #[inline]
    pub fn get_clamped(&self, row: i64, col: i64) -> u8 {
        let r = row.clamp(0, self.height as i64 - 1) as usize;
        let c = col.clamp(0, self.width as i64 - 1) as usize;
        self.get(r, c)
    }
}

/// Threshold an image: output is white exactly where the gray level is
/// strictly below `th`. `th` may be non-integral; the comparison is exact.
pub fn binarize(img: &GrayImage, th: f64) -> BinaryImage {
    // px < th for integer px is equivalent to px <= ceil(th) - 1.
    let cut = th.ceil() as i64 - 1;
    let mut out = BinaryImage::new(img.width(), img.height());
    if cut < 0 {
        return out;
    }
    if cut >= 255 {
        out.fill_white();
        return out;
    }
    let cut = cut as u8;
    for r in 0..img.height() {
        out.set_row_from_bytes(r, img.row(r), |px| px <= cut);
    }
    out
}

/// Extract a `size`x`size` window centered on `center = (row, col)`.
/// Windows extending past the border replicate the nearest edge pixel.
pub fn crop(img: &GrayImage, center: (i64, i64), size: usize) -> Result<GrayImage> {
    let (row, col) = center;
    if !img.in_bounds(row, col) {
        return Err(Error::InvalidInput(format!(
            "crop center ({row}, {col}) outside {}x{} image",
            img.width(),
            img.height()
        )));
    }
    let half = size as i64 / 2;
    let top = row - half;
    let left = col - half;
    let mut pixels = Vec::with_capacity(size * size);
    for i in 0..size as i64 {
        for j in 0..size as i64 {
            pixels.push(img.get_clamped(top + i, left + j));
        }
    }
    GrayImage::new(size, size, pixels)
}
