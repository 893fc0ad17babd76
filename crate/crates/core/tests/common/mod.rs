//! Shared helpers for integration tests: a tiny deterministic generator
//! so expected values stay frozen, plus raster builders.
//!
//! Each test binary uses its own subset of these helpers.
#![allow(dead_code)]

use irforge_core::raster::{GrayMap, Raster};

/// Deterministic 64-bit LCG; independent of every RNG used by the
/// implementation.
pub struct TestRng(pub u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed.wrapping_add(0x9e3779b97f4a7c15))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0
    }

    pub fn next_u8(&mut self) -> u8 {
        (self.next_u64() >> 56) as u8
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform integer in [1, max].
    pub fn dim(&mut self, max: u32) -> u32 {
        1 + (self.next_u64() % max as u64) as u32
    }
}

pub fn random_raster(rng: &mut TestRng, width: u32, height: u32, channels: u8) -> Raster {
    let n = width as usize * height as usize * channels as usize;
    Raster::new(width, height, channels, (0..n).map(|_| rng.next_u8()).collect()).unwrap()
}

pub fn random_graymap(rng: &mut TestRng, width: u32, height: u32) -> GrayMap {
    let n = width as usize * height as usize;
    GrayMap::new(width, height, (0..n).map(|_| rng.next_f64() * 255.0).collect()).unwrap()
}
