//! In-memory image types shared by every stage: `Raster` for 8-bit pixel
//! data and `GrayMap` for the floating-point single-channel intermediate.

use crate::error::{Error, Result};

/// An 8-bit image: 1 (gray) or 3 (RGB) channels, row-major,
/// channel-interleaved samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    channels: u8,
    samples: Vec<u8>,
}

impl Raster {
    /// Builds a raster, validating dimensions, channel count and sample
    /// buffer length.
    pub fn new(width: u32, height: u32, channels: u8, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster(format!(
                "dimensions must be >= 1, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidRaster(format!(
                "channel count must be 1 or 3, got {channels}"
            )));
        }
        let expected = width as usize * height as usize * channels as usize;
        if samples.len() != expected {
            return Err(Error::InvalidRaster(format!(
                "sample buffer length {} does not match {width}x{height}x{channels} = {expected}",
                samples.len()
            )));
        }
        Ok(Raster {
            width,
            height,
            channels,
            samples,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    /// Sample at (x, y) for channel `c`. Panics on out-of-bounds access.
    pub fn sample(&self, x: u32, y: u32, c: u8) -> u8 {
        assert!(x < self.width && y < self.height && c < self.channels);
        let idx = (y as usize * self.width as usize + x as usize) * self.channels as usize
            + c as usize;
        self.samples[idx]
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn same_shape(&self, other: &Raster) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }
}

/// Single-channel floating-point image used between grayscale conversion
/// and intensity reconstruction. Values are finite; operations that
/// promise a [0, 255] range clamp before handing the map on.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl GrayMap {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster(format!(
                "dimensions must be >= 1, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize;
        if values.len() != expected {
            return Err(Error::InvalidRaster(format!(
                "value buffer length {} does not match {width}x{height} = {expected}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidRaster(format!(
                "non-finite value {} at index {bad}",
                values[bad]
            )));
        }
        Ok(GrayMap {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, x: u32, y: u32) -> f64 {
        assert!(x < self.width && y < self.height);
        self.values[y as usize * self.width as usize + x as usize]
    }
}

/// Rounds a gray map back to an 8-bit single-channel raster, half-away-
/// from-zero. Values must already lie in [0, 255]; callers clamp first.
pub fn quantize(g: &GrayMap) -> Result<Raster> {
    let mut samples = Vec::with_capacity(g.values.len());
    for (index, &value) in g.values.iter().enumerate() {
        if !(0.0..=255.0).contains(&value) {
            return Err(Error::OutOfRange { value, index });
        }
        // f64::round ties away from zero, which is the rule here.
        samples.push(value.round() as u8);
    }
    Raster::new(g.width, g.height, 1, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raster_rejects_bad_lengths() {
        assert!(Raster::new(2, 2, 3, vec![0; 11]).is_err());
        assert!(Raster::new(2, 2, 3, vec![0; 13]).is_err());
        assert!(Raster::new(2, 2, 3, vec![0; 12]).is_ok());
    }

    #[test]
    fn raster_rejects_bad_channels_and_dims() {
        assert!(Raster::new(0, 1, 1, vec![]).is_err());
        assert!(Raster::new(1, 0, 1, vec![]).is_err());
        assert!(Raster::new(1, 1, 2, vec![0, 0]).is_err());
        assert!(Raster::new(1, 1, 4, vec![0; 4]).is_err());
    }

    #[test]
    fn graymap_rejects_non_finite() {
        assert!(GrayMap::new(1, 2, vec![0.0, f64::NAN]).is_err());
        assert!(GrayMap::new(1, 2, vec![0.0, f64::INFINITY]).is_err());
        assert!(GrayMap::new(1, 2, vec![0.0, 1.5]).is_ok());
    }

    #[test]
    fn quantize_ties_away_from_zero() {
        let g = GrayMap::new(3, 1, vec![59.5, 0.0, 255.0]).unwrap();
        let r = quantize(&g).unwrap();
        assert_eq!(r.samples(), &[60, 0, 255]);
    }

    #[test]
    fn quantize_rejects_out_of_range() {
        let g = GrayMap::new(1, 1, vec![255.2]).unwrap();
        assert!(matches!(
            quantize(&g),
            Err(Error::OutOfRange { index: 0, .. })
        ));
        let g = GrayMap::new(1, 1, vec![-0.1]).unwrap();
        assert!(quantize(&g).is_err());
    }

    #[test]
    fn quantize_matches_scalar_rounding_oracle() {
        // Independent oracle: floor(v + 0.5) equals round-half-away-from-zero
        // for non-negative v.
        fn oracle(v: f64) -> u8 {
            (v + 0.5).floor() as u8
        }
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut values = Vec::with_capacity(1000);
        for _ in 0..1000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            values.push((state >> 11) as f64 / (1u64 << 53) as f64 * 255.0);
        }
        let g = GrayMap::new(1000, 1, values.clone()).unwrap();
        let r = quantize(&g).unwrap();
        for (s, v) in r.samples().iter().zip(&values) {
            assert_eq!(*s, oracle(*v), "value {v}");
        }
    }
}
