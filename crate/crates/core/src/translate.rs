//! Pixel-level translation core: grayscale conversion and gray-density
//! reconstruction.
//!
//! Grayscale is the plain per-pixel mean of the three channel values
//! (each channel's difference from black), not a luma-weighted sum.
//! Density reconstruction multiplies by a scalar intensity factor and
//! clamps to [0, 255]. All arithmetic stays in f64; quantization to
//! 8 bits happens exactly once, at the end of [`rgb_to_ir`].

use crate::error::{Error, Result};
use crate::raster::{quantize, GrayMap, Raster};

/// Default intensity factor for the RGB2IR task.
pub const RGB2IR_FACTOR: f64 = 1.3;
/// Default intensity factor for the IR stage of the SAR2IR task.
pub const SAR2IR_FACTOR: f64 = 1.15;

/// Positive finite scalar multiplying every gray value during density
/// reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityFactor(f64);

impl IntensityFactor {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::InvalidFactor(value));
        }
        Ok(IntensityFactor(value))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn rgb2ir_default() -> Self {
        IntensityFactor(RGB2IR_FACTOR)
    }

    pub fn sar2ir_default() -> Self {
        IntensityFactor(SAR2IR_FACTOR)
    }
}

/// Per-pixel mean of the three channel values.
pub fn to_grayscale(img: &Raster) -> Result<GrayMap> {
    if img.channels() != 3 {
        return Err(Error::ChannelMismatch {
            expected: 3,
            actual: img.channels(),
        });
    }
    let values = img
        .samples()
        .chunks_exact(3)
        .map(|px| (px[0] as f64 + px[1] as f64 + px[2] as f64) / 3.0)
        .collect();
    GrayMap::new(img.width(), img.height(), values)
}

/// Scales every gray value by `factor` and clamps the result to [0, 255].
pub fn reconstruct_density(g: &GrayMap, factor: IntensityFactor) -> GrayMap {
    let values = g
        .values()
        .iter()
        .map(|&v| (v * factor.0).clamp(0.0, 255.0))
        .collect();
    GrayMap::new(g.width(), g.height(), values)
        .expect("scaled and clamped values stay finite")
}

/// Full RGB -> IR chain: grayscale, density reconstruction, then a single
/// quantization to 8 bits.
pub fn rgb_to_ir(img: &Raster, factor: IntensityFactor) -> Result<Raster> {
    let gray = to_grayscale(img)?;
    quantize(&reconstruct_density(&gray, factor))
}
