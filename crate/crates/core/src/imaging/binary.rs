//! Packed binary raster. Rows are padded to whole 64-bit words so that
//! shifts used by the morphology kernels never bleed across rows; slack
//! bits past `width` are kept zero as an invariant.

/// Binary image; bit 1 = white (foreground), 0 = black.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl std::fmt::Debug for BinaryImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BinaryImage({}x{}, {} white)", self.width, self.height, self.count_white())
    }
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        let words_per_row = width.div_ceil(64).max(1);
        Self { width, height, words_per_row, words: vec![0; words_per_row * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut out = Self::new(width, height);
        for r in 0..height {
            for c in 0..width {
                if f(r, c) {
                    out.set(r, c, true);
                }
            }
        }
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.height && col < self.width);
        let w = self.words[row * self.words_per_row + col / 64];
        (w >> (col % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        debug_assert!(row < self.height && col < self.width);
        let w = &mut self.words[row * self.words_per_row + col / 64];
        if value {
            *w |= 1 << (col % 64);
        } else {
            *w &= !(1 << (col % 64));
        }
    }

    /// Mask for the last word of a row (zeroes the slack bits).
    #[inline]
    fn tail_mask(&self) -> u64 {
        let rem = self.width % 64;
        if rem == 0 {
            !0
        } else {
            (1u64 << rem) - 1
        }
    }

    pub(crate) fn fill_white(&mut self) {
        self.words.fill(!0);
        self.mask_tails();
    }

    fn mask_tails(&mut self) {
        let mask = self.tail_mask();
        let wpr = self.words_per_row;
        for r in 0..self.height {
            self.words[r * wpr + wpr - 1] &= mask;
        }
        if self.width == 0 {
            self.words.fill(0);
        }
    }

    /// Fill one row from a byte slice through a predicate.
    pub(crate) fn set_row_from_bytes(&mut self, row: usize, bytes: &[u8], f: impl Fn(u8) -> bool) {
        debug_assert_eq!(bytes.len(), self.width);
        let base = row * self.words_per_row;
        for (wi, chunk) in bytes.chunks(64).enumerate() {
            let mut w = 0u64;
            for (bi, &px) in chunk.iter().enumerate() {
                w |= (f(px) as u64) << bi;
            }
            self.words[base + wi] = w;
        }
    }

    pub fn count_white(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        for w in &mut out.words {
            *w = !*w;
        }
        out.mask_tails();
        out
    }

    /// White pixel coordinates in row-major order.
    pub fn iter_white(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.height).flat_map(move |r| {
            let base = r * self.words_per_row;
            (0..self.words_per_row).flat_map(move |wi| {
                let mut w = self.words[base + wi];
                std::iter::from_fn(move || {
                    if w == 0 {
                        return None;
                    }
                    let bit = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some((r, wi * 64 + bit))
                })
            })
        })
    }

    pub(crate) fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    pub(crate) fn row_words(&self, row: usize) -> &[u64] {
        &self.words[row * self.words_per_row..(row + 1) * self.words_per_row]
    }

    pub(crate) fn row_words_mut(&mut self, row: usize) -> &mut [u64] {
        &mut self.words[row * self.words_per_row..(row + 1) * self.words_per_row]
    }
}

/// `dst = src shifted by dx columns` (positive dx moves content toward
/// higher columns), zero-filled. `dst.len() == src.len()`.
pub(crate) fn shift_row_into(src: &[u64], dst: &mut [u64], dx: i64) {
    let n = src.len();
    if dx >= 0 {
        let s = (dx / 64) as usize;
        let b = (dx % 64) as u32;
        for i in (0..n).rev() {
            let lo = if i >= s { src[i - s] } else { 0 };
            let carry = if b > 0 && i > s { src[i - s - 1] >> (64 - b) } else { 0 };
            dst[i] = if b == 0 { lo } else { (lo << b) | carry };
        }
    } else {
        let d = -dx;
        let s = (d / 64) as usize;
        let b = (d % 64) as u32;
        for i in 0..n {
            let lo = if i + s < n { src[i + s] } else { 0 };
            let carry = if b > 0 && i + s + 1 < n { src[i + s + 1] << (64 - b) } else { 0 };
            dst[i] = if b == 0 { lo } else { (lo >> b) | carry };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn get_set_roundtrip() {
        let mut b = BinaryImage::new(130, 3);
        b.set(1, 0, true);
        b.set(1, 64, true);
        b.set(2, 129, true);
        assert!(b.get(1, 0) && b.get(1, 64) && b.get(2, 129));
        assert!(!b.get(0, 0));
        assert_eq!(b.count_white(), 3);
        let white: Vec<_> = b.iter_white().collect();
        assert_eq!(white, vec![(1, 0), (1, 64), (2, 129)]);
    }

    #[test]
    fn complement_preserves_dimensions_and_counts() {
        let b = BinaryImage::from_fn(70, 5, |r, c| (r + c) % 3 == 0);
        let comp = b.complement();
        assert_eq!(b.count_white() + comp.count_white(), 70 * 5);
        for (r, c) in b.iter_white() {
            assert!(!comp.get(r, c));
        }
    }

    #[test]
    fn shift_row_matches_naive() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..50 {
            let width = rng.gen_range(1..200);
            let b = BinaryImage::from_fn(width, 1, |_, _| rng.gen_bool(0.4));
            let dx = rng.gen_range(-(width as i64) - 2..width as i64 + 2);
            let mut dst = vec![0u64; b.words_per_row()];
            shift_row_into(b.row_words(0), &mut dst, dx);
            for c in 0..width {
                let src_c = c as i64 - dx;
                let expect = src_c >= 0 && (src_c as usize) < width && b.get(0, src_c as usize);
                let got = (dst[c / 64] >> (c % 64)) & 1 == 1;
                assert_eq!(got, expect, "width={width} dx={dx} c={c}");
            }
        }
    }
}
