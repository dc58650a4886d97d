//! 8-bit grayscale image I/O: binary PGM (P5) and PNG.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use super::GrayImage;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Png,
}

impl ImageFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            ImageFormat::Pgm => "pgm",
            ImageFormat::Png => "png",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "pgm" => Ok(ImageFormat::Pgm),
            "png" => Ok(ImageFormat::Png),
            other => Err(Error::InvalidInput(format!("unknown image format {other:?}"))),
        }
    }
}

pub fn to_pgm_bytes(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.pixels().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.pixels());
    out
}

pub fn write_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    fs::write(path, to_pgm_bytes(img))?;
    Ok(())
}

pub fn from_pgm_bytes(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos;

    fn skip_ws(bytes: &[u8], pos: &mut usize) {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn read_token(bytes: &[u8], pos: &mut usize) -> Result<usize> {
        skip_ws(bytes, pos);
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::Image("malformed PGM header".into()));
        }
        std::str::from_utf8(&bytes[start..*pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Image("malformed PGM header".into()))
    }

    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(Error::Image("not a binary PGM (P5) file".into()));
    }
    pos = 2;
    let width = read_token(bytes, &mut pos)?;
    let height = read_token(bytes, &mut pos)?;
    let maxval = read_token(bytes, &mut pos)?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Image(format!("unsupported PGM maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::Image("malformed PGM header".into()));
    }
    pos += 1;
    let need = width * height;
    if bytes.len() - pos < need {
        return Err(Error::Image(format!(
            "PGM raster truncated: need {need} bytes, have {}",
            bytes.len() - pos
        )));
    }
    GrayImage::new(width, height, bytes[pos..pos + need].to_vec())
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    from_pgm_bytes(&fs::read(path)?)
}

pub fn to_png_bytes(img: &GrayImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(
            BufWriter::new(&mut out),
            img.width() as u32,
            img.height() as u32,
        );
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer =
            encoder.write_header().map_err(|e| Error::Image(format!("png encode: {e}")))?;
        writer
            .write_image_data(img.pixels())
            .map_err(|e| Error::Image(format!("png encode: {e}")))?;
    }
    Ok(out)
}

pub fn write_png(img: &GrayImage, path: &Path) -> Result<()> {
    fs::write(path, to_png_bytes(img)?)?;
    Ok(())
}

pub fn from_png_bytes(bytes: &[u8]) -> Result<GrayImage> {
    let decoder = png::Decoder::new(bytes);
    let mut reader = decoder.read_info().map_err(|e| Error::Image(format!("png decode: {e}")))?;
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Image(format!("png decode: {e}")))?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Image(format!(
            "unsupported PNG layout {:?}/{:?}; expected 8-bit grayscale",
            info.color_type, info.bit_depth
        )));
    }
    buf.truncate(info.buffer_size());
    GrayImage::new(info.width as usize, info.height as usize, buf)
}

pub fn read_png(path: &Path) -> Result<GrayImage> {
    from_png_bytes(&fs::read(path)?)
}

/// Load a PGM or PNG image, dispatching on the magic bytes.
pub fn load_image(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(b"P5") {
        from_pgm_bytes(&bytes)
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        from_png_bytes(&bytes)
    } else {
        Err(Error::Image(format!("{}: neither binary PGM nor PNG", path.display())))
    }
}

/// Save in the requested format.
pub fn save_image(img: &GrayImage, path: &Path, format: ImageFormat) -> Result<()> {
    match format {
        ImageFormat::Pgm => write_pgm(img, path),
        ImageFormat::Png => write_png(img, path),
    }
}
