//! Core library for irforge: pixel-level RGB/SAR -> IR translation and the
//! full image-set scoring stack (L2, perceptual patch distance, Fréchet
//! feature distance, composite final score), plus manifest-driven batch
//! pipelines.

pub mod codec;
pub mod error;
pub mod features;
pub mod metrics;
pub mod numeric;
pub mod pairing;
pub mod pipeline;
pub mod raster;
pub mod translate;

pub use error::{Error, Result};
pub use raster::{GrayMap, Raster};
