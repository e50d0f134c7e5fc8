//! Image ingestion, preprocessing, corpus manifests and persistence.
//!
//! Every on-disk format of the crate (spectrum CSV, feature CSV, report,
//! model and manifest JSON) is read and written through [`formats`].

pub mod formats;
mod manifest;
mod split;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma};
use serde::{Deserialize, Serialize};

use crate::{Error, GrayImage, Result};

pub use manifest::{CorpusManifest, ManifestEntry};
pub use split::{split, split_indices, Split};

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Real,
    Fake,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Real => "real",
            Label::Fake => "fake",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Label::Real),
            "fake" => Ok(Label::Fake),
            _ => Err(Error::Validation(format!(
                "label must be real or fake, got {s:?}"
            ))),
        }
    }
}

fn format_for(path: &Path) -> Option<ImageFormat> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    match ext.as_str() {
        "png" => Some(ImageFormat::Png),
        "pgm" | "ppm" | "pnm" => Some(ImageFormat::Pnm),
        _ => None,
    }
}

/// True for file names this crate can decode (PNG, PGM, PPM).
pub fn is_supported_image(path: &Path) -> bool {
    format_for(path).is_some()
}

/// Decodes a PNG/PGM/PPM file to luma in `[0, 1]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let format = format_for(path).ok_or_else(|| Error::UnsupportedFormat(path.to_path_buf()))?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes, format, path)
}

pub(crate) fn decode_image(bytes: &[u8], format: ImageFormat, path: &Path) -> Result<GrayImage> {
    let decoded =
        image::load_from_memory_with_format(bytes, format).map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    to_gray(decoded)
}

fn luma_of(px: &[f64]) -> f64 {
    LUMA[0] * px[0] + LUMA[1] * px[1] + LUMA[2] * px[2]
}

fn to_gray(img: DynamicImage) -> Result<GrayImage> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let u8s = |v: &[u8]| v.iter().map(|&b| b as f64 / 255.0).collect::<Vec<_>>();
    let u16s = |v: &[u16]| v.iter().map(|&b| b as f64 / 65535.0).collect::<Vec<_>>();
    let pixels: Vec<f64> = match img {
        DynamicImage::ImageLuma8(b) => u8s(b.as_raw()),
        DynamicImage::ImageLuma16(b) => u16s(b.as_raw()),
        DynamicImage::ImageLumaA8(b) => u8s(b.as_raw()).chunks(2).map(|p| p[0]).collect(),
        DynamicImage::ImageLumaA16(b) => u16s(b.as_raw()).chunks(2).map(|p| p[0]).collect(),
        DynamicImage::ImageRgb8(b) => u8s(b.as_raw()).chunks(3).map(luma_of).collect(),
        DynamicImage::ImageRgba8(b) => u8s(b.as_raw()).chunks(4).map(luma_of).collect(),
        DynamicImage::ImageRgb16(b) => u16s(b.as_raw()).chunks(3).map(luma_of).collect(),
        DynamicImage::ImageRgba16(b) => u16s(b.as_raw()).chunks(4).map(luma_of).collect(),
        other => other
            .to_rgb32f()
            .as_raw()
            .chunks(3)
            .map(|p| luma_of(&[p[0] as f64, p[1] as f64, p[2] as f64]))
            .collect(),
    };
    GrayImage::new(w, h, pixels)
}

/// Encodes to 16-bit grayscale PNG. Values are clamped to `[0, 1]`.
pub fn encode_png16(img: &GrayImage) -> Result<Vec<u8>> {
    let (w, h) = img.dims();
    let data: Vec<u16> = img
        .pixels()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
        .collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(w as u32, h as u32, data).expect("buffer matches dimensions");
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Decode {
            path: PathBuf::from("<png encoder>"),
            reason: e.to_string(),
        })?;
    Ok(out.into_inner())
}

pub fn save_png16(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, &encode_png16(img)?)
}

/// Writes through a temporary file in the destination directory, then renames.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Supported images directly inside `dir`, sorted by file name.
pub fn list_images(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_file() && is_supported_image(&path) {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(paths)
}

/// Centered `side`x`side` window; odd slack is trimmed from the right/bottom.
pub fn center_crop(img: &GrayImage, side: usize) -> Result<GrayImage> {
    let (w, h) = img.dims();
    if side == 0 || side > w.min(h) {
        return Err(Error::Dimension(format!(
            "cannot center-crop {w}x{h} image to {side}x{side}"
        )));
    }
    img.crop((w - side) / 2, (h - side) / 2, side, side)
}

/// Halves both dimensions by averaging 2x2 blocks.
pub fn downsample2(img: &GrayImage) -> Result<GrayImage> {
    let (w, h) = img.dims();
    if w % 2 != 0 || h % 2 != 0 {
        return Err(Error::Dimension(format!(
            "2x downsampling needs even dimensions, got {w}x{h}"
        )));
    }
    let mut out = Vec::with_capacity(w * h / 4);
    for y in (0..h).step_by(2) {
        let (r0, r1) = (img.row(y), img.row(y + 1));
        for x in (0..w).step_by(2) {
            out.push((r0[x] + r0[x + 1] + r1[x] + r1[x + 1]) / 4.0);
        }
    }
    Ok(GrayImage::from_parts(w / 2, h / 2, out))
}
