//! Image file decoding and encoding.
//!
//! Supported formats: PPM (P6, binary), PGM (P5, binary), and PNG
//! restricted to 8-bit grayscale or RGB. Palette, alpha, 16-bit and
//! interlaced streams are rejected rather than silently converted, so
//! every decode/encode round trip is sample-exact.

mod pnm;
mod png;

use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::Raster;

/// On-disk image format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Ppm,
    Pgm,
    Png,
}

impl ImageFormat {
    /// Picks a format from a file extension (case-insensitive).
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .unwrap_or_default();
        match ext.as_str() {
            "ppm" => Ok(ImageFormat::Ppm),
            "pgm" => Ok(ImageFormat::Pgm),
            "png" => Ok(ImageFormat::Png),
            other => Err(Error::UnsupportedFeature(format!(
                "unrecognized image extension `{other}` for {}",
                path.display()
            ))),
        }
    }
}

/// Decodes an encoded image stream, sniffing the format from its magic
/// bytes.
pub fn decode_image(bytes: &[u8]) -> Result<Raster> {
    if bytes.starts_with(png::SIGNATURE) {
        return png::decode(bytes);
    }
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        return pnm::decode(bytes);
    }
    Err(Error::MalformedFile(
        "unrecognized magic bytes (expected PNG, P5 or P6)".into(),
    ))
}

/// Encodes a raster in the requested format.
///
/// PGM requires a single-channel raster and PPM a three-channel one;
/// PNG accepts both.
pub fn encode_image(img: &Raster, format: ImageFormat) -> Result<Vec<u8>> {
    match format {
        ImageFormat::Pgm => {
            if img.channels() != 1 {
                return Err(Error::FormatChannelMismatch {
                    format: "pgm",
                    expected: 1,
                    actual: img.channels(),
                });
            }
            Ok(pnm::encode(img))
        }
        ImageFormat::Ppm => {
            if img.channels() != 3 {
                return Err(Error::FormatChannelMismatch {
                    format: "ppm",
                    expected: 3,
                    actual: img.channels(),
                });
            }
            Ok(pnm::encode(img))
        }
        ImageFormat::Png => Ok(png::encode(img)),
    }
}

/// Reads and decodes an image file.
pub fn read_image(path: &Path) -> Result<Raster> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

/// Encodes a raster and writes it, choosing the format from the target
/// extension.
pub fn write_image(path: &Path, img: &Raster) -> Result<()> {
    let format = ImageFormat::from_path(path)?;
    let bytes = encode_image(img, format)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
