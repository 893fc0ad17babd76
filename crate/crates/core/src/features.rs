//! Per-image feature representations for the perceptual and Fréchet
//! metrics.
//!
//! The built-in extractor is a seeded fixed filter bank over a multi-scale
//! patch grid: the image is reduced to grayscale, repeatedly 2x
//! box-downsampled, center-cropped to a whole number of patches, and each
//! patch is projected onto `filters_per_scale` zero-sum filters. The bank
//! is drawn once from a seeded generator and then frozen, so extraction is
//! a pure function of (pixels, spec). Features computed elsewhere (e.g. by
//! a pretrained network) enter through [`load_features`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::raster::Raster;
use crate::translate::to_grayscale;

/// Parameters of the built-in extractor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractorSpec {
    patch_size: u32,
    scales: u32,
    filters_per_scale: u32,
    seed: u64,
}

impl Default for ExtractorSpec {
    fn default() -> Self {
        ExtractorSpec {
            patch_size: 8,
            scales: 3,
            filters_per_scale: 16,
            seed: 0,
        }
    }
}

impl ExtractorSpec {
    pub fn new(patch_size: u32, scales: u32, filters_per_scale: u32, seed: u64) -> Result<Self> {
        if !patch_size.is_power_of_two() || patch_size < 2 {
            return Err(Error::InvalidSpec(format!(
                "patch_size must be a power of two >= 2, got {patch_size}"
            )));
        }
        if scales == 0 {
            return Err(Error::InvalidSpec("scales must be >= 1".into()));
        }
        if scales > 16 {
            return Err(Error::InvalidSpec(format!(
                "scales must be <= 16, got {scales}"
            )));
        }
        if filters_per_scale == 0 {
            return Err(Error::InvalidSpec("filters_per_scale must be >= 1".into()));
        }
        Ok(ExtractorSpec {
            patch_size,
            scales,
            filters_per_scale,
            seed,
        })
    }

    pub fn patch_size(&self) -> u32 {
        self.patch_size
    }

    pub fn scales(&self) -> u32 {
        self.scales
    }

    pub fn filters_per_scale(&self) -> u32 {
        self.filters_per_scale
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Identifies the extractor and all of its parameters; feature sets
    /// from different sources never meet in a metric.
    pub fn source_tag(&self) -> String {
        format!(
            "bank-v1:p{}:s{}:f{}:seed{}",
            self.patch_size, self.scales, self.filters_per_scale, self.seed
        )
    }

    /// Smallest original image dimension the spec can digest: the patch
    /// size at the coarsest scale.
    pub fn min_dimension(&self) -> u32 {
        self.patch_size << (self.scales - 1)
    }
}

/// One feature vector per (scale, patch), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    patch_count: usize,
    dim: usize,
    vectors: Vec<f64>,
    source_tag: String,
}

impl FeatureSet {
    pub fn new(
        patch_count: usize,
        dim: usize,
        vectors: Vec<f64>,
        source_tag: String,
    ) -> Result<Self> {
        if patch_count == 0 || dim == 0 {
            return Err(Error::InvalidFeatureSet(format!(
                "patch_count and dim must be >= 1, got {patch_count}x{dim}"
            )));
        }
        let expected = patch_count
            .checked_mul(dim)
            .ok_or_else(|| Error::InvalidFeatureSet("patch_count * dim overflows".into()))?;
        if vectors.len() != expected {
            return Err(Error::InvalidFeatureSet(format!(
                "vector buffer length {} does not match {patch_count}x{dim}",
                vectors.len()
            )));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFeatureSet("non-finite entry".into()));
        }
        if source_tag.len() > 255 {
            return Err(Error::InvalidFeatureSet(format!(
                "source tag longer than 255 bytes ({})",
                source_tag.len()
            )));
        }
        Ok(FeatureSet {
            patch_count,
            dim,
            vectors,
            source_tag,
        })
    }

    pub fn patch_count(&self) -> usize {
        self.patch_count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    pub fn vector(&self, patch: usize) -> &[f64] {
        &self.vectors[patch * self.dim..(patch + 1) * self.dim]
    }
}

/// The frozen filter bank for one spec: `scales * filters_per_scale`
/// filters of `patch_size^2` coefficients each.
///
/// Coefficients are drawn uniformly from [-1, 1) in adjacent (v, -v)
/// pairs, so every filter sums to exactly zero and a constant patch maps
/// to an exactly zero response.
#[derive(Debug, Clone)]
pub struct FilterBank {
    spec: ExtractorSpec,
    filters: Vec<f64>, // [scale][filter][coefficient]
}

impl FilterBank {
    pub fn build(spec: &ExtractorSpec) -> Self {
        let patch_area = (spec.patch_size * spec.patch_size) as usize;
        let total = spec.scales as usize * spec.filters_per_scale as usize * patch_area;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut filters = Vec::with_capacity(total);
        for _ in 0..total / 2 {
            let v = rng.gen::<f64>() * 2.0 - 1.0;
            filters.push(v);
            filters.push(-v);
        }
        FilterBank {
            spec: spec.clone(),
            filters,
        }
    }

    fn filter(&self, scale: u32, index: u32) -> &[f64] {
        let patch_area = (self.spec.patch_size * self.spec.patch_size) as usize;
        let start =
            (scale * self.spec.filters_per_scale + index) as usize * patch_area;
        &self.filters[start..start + patch_area]
    }
}

/// Extracts the multi-scale patch features of an image.
pub fn extract_features(img: &Raster, spec: &ExtractorSpec) -> Result<FeatureSet> {
    extract_with_bank(img, spec, &FilterBank::build(spec))
}

/// As [`extract_features`], reusing a prebuilt bank across images.
pub fn extract_with_bank(
    img: &Raster,
    spec: &ExtractorSpec,
    bank: &FilterBank,
) -> Result<FeatureSet> {
    let patch = spec.patch_size as usize;
    let coarsest_w = img.width() >> (spec.scales - 1);
    let coarsest_h = img.height() >> (spec.scales - 1);
    if coarsest_w < spec.patch_size || coarsest_h < spec.patch_size {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min: spec.min_dimension(),
        });
    }

    let mut plane = match img.channels() {
        3 => Plane {
            width: img.width() as usize,
            height: img.height() as usize,
            values: to_grayscale(img)?.values().to_vec(),
        },
        _ => Plane {
            width: img.width() as usize,
            height: img.height() as usize,
            values: img.samples().iter().map(|&s| s as f64).collect(),
        },
    };

    let dim = spec.filters_per_scale as usize;
    let mut vectors = Vec::new();
    let mut patch_count = 0usize;
    for scale in 0..spec.scales {
        if scale > 0 {
            plane = plane.downsample_2x();
        }
        let cols = plane.width / patch;
        let rows = plane.height / patch;
        let ox = (plane.width - cols * patch) / 2;
        let oy = (plane.height - rows * patch) / 2;
        let mut patch_buf = vec![0.0f64; patch * patch];
        for py in 0..rows {
            for px in 0..cols {
                plane.copy_patch(ox + px * patch, oy + py * patch, patch, &mut patch_buf);
                for f in 0..spec.filters_per_scale {
                    let coeffs = bank.filter(scale, f);
                    let mut acc = 0.0;
                    for (v, k) in patch_buf.iter().zip(coeffs) {
                        acc += v * k;
                    }
                    vectors.push(acc);
                }
                patch_count += 1;
            }
        }
    }
    FeatureSet::new(patch_count, dim, vectors, spec.source_tag())
}

struct Plane {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Plane {
    /// 2x box downsample; a trailing odd row/column is dropped.
    fn downsample_2x(&self) -> Plane {
        let w = self.width / 2;
        let h = self.height / 2;
        let mut values = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let base = 2 * y * self.width + 2 * x;
                let sum = self.values[base]
                    + self.values[base + 1]
                    + self.values[base + self.width]
                    + self.values[base + self.width + 1];
                values.push(sum / 4.0);
            }
        }
        Plane {
            width: w,
            height: h,
            values,
        }
    }

    fn copy_patch(&self, x0: usize, y0: usize, patch: usize, out: &mut [f64]) {
        for row in 0..patch {
            let src = (y0 + row) * self.width + x0;
            out[row * patch..(row + 1) * patch]
                .copy_from_slice(&self.values[src..src + patch]);
        }
    }
}

const FEATURE_MAGIC: &[u8; 4] = b"IFF1";

/// Serializes a feature set: magic "IFF1", tag length (1 byte), tag bytes,
/// n and d as 8-byte little-endian unsigned, then n*d little-endian f64,
/// row-major.
pub fn save_features(fs: &FeatureSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 1 + fs.source_tag.len() + 16 + fs.vectors.len() * 8);
    out.extend_from_slice(FEATURE_MAGIC);
    out.push(fs.source_tag.len() as u8);
    out.extend_from_slice(fs.source_tag.as_bytes());
    out.extend_from_slice(&(fs.patch_count as u64).to_le_bytes());
    out.extend_from_slice(&(fs.dim as u64).to_le_bytes());
    for v in &fs.vectors {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses the format written by [`save_features`].
pub fn load_features(bytes: &[u8]) -> Result<FeatureSet> {
    let malformed = |msg: &str| Error::MalformedFeatureFile(msg.into());
    if bytes.len() < 5 || &bytes[..4] != FEATURE_MAGIC {
        return Err(malformed("bad magic"));
    }
    let tag_len = bytes[4] as usize;
    let header_end = 5 + tag_len + 16;
    if bytes.len() < header_end {
        return Err(malformed("truncated header"));
    }
    let tag = std::str::from_utf8(&bytes[5..5 + tag_len])
        .map_err(|_| malformed("tag is not UTF-8"))?
        .to_string();
    let n = u64::from_le_bytes(bytes[5 + tag_len..5 + tag_len + 8].try_into().unwrap());
    let d = u64::from_le_bytes(bytes[5 + tag_len + 8..header_end].try_into().unwrap());
    if n == 0 || d == 0 {
        return Err(Error::DimensionMismatch(format!(
            "feature file declares {n}x{d}; both must be >= 1"
        )));
    }
    let count = n
        .checked_mul(d)
        .and_then(|c| usize::try_from(c).ok())
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| malformed("declared size overflows"))?;
    let payload = &bytes[header_end..];
    if payload.len() != count {
        return Err(malformed(&format!(
            "payload is {} bytes, expected {count} for {n}x{d} f64",
            payload.len()
        )));
    }
    let vectors: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if vectors.iter().any(|v| !v.is_finite()) {
        return Err(malformed("non-finite feature value"));
    }
    FeatureSet::new(n as usize, d as usize, vectors, tag)
}
