//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    // ---- image decoding / encoding ----
    #[error("malformed image file: {0}")]
    MalformedFile(String),
    #[error("unsupported sample depth: {0}")]
    UnsupportedDepth(String),
    #[error("unsupported color type: {0}")]
    UnsupportedColorType(String),
    #[error("unsupported image feature: {0}")]
    UnsupportedFeature(String),
    #[error("format/channel mismatch: {format} requires {expected} channels, raster has {actual}")]
    FormatChannelMismatch {
        format: &'static str,
        expected: u8,
        actual: u8,
    },
    #[error("invalid raster: {0}")]
    InvalidRaster(String),
    #[error("gray value {value} outside [0, 255] at index {index}")]
    OutOfRange { value: f64, index: usize },

    // ---- translation ----
    #[error("channel mismatch: expected {expected} channels, got {actual}")]
    ChannelMismatch { expected: u8, actual: u8 },
    #[error("invalid intensity factor {0}: must be finite and > 0")]
    InvalidFactor(f64),

    // ---- feature extraction / feature files ----
    #[error("image too small: {width}x{height} needs at least {min}x{min} at the coarsest scale")]
    ImageTooSmall { width: u32, height: u32, min: u32 },
    #[error("invalid extractor spec: {0}")]
    InvalidSpec(String),
    #[error("malformed feature file: {0}")]
    MalformedFeatureFile(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid feature set: {0}")]
    InvalidFeatureSet(String),

    // ---- metrics ----
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("feature source mismatch: `{left}` vs `{right}`")]
    SourceMismatch { left: String, right: String },
    #[error("insufficient samples: need at least {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("non-finite input: {0}")]
    NonFiniteInput(&'static str),
    #[error("empty evaluation set")]
    EmptySet,

    // ---- pairing ----
    #[error("missing dataset root: {0}")]
    MissingRoot(PathBuf),
    #[error("location `{location}` has no usable images")]
    EmptyPool { location: String },
    #[error("location `{location}` offers no {modality} images required by task {task}")]
    ModalityUnavailable {
        location: String,
        modality: &'static str,
        task: String,
    },
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("malformed manifest: {0}")]
    MalformedManifest(String),

    // ---- pipeline ----
    #[error("missing external generator output for `{stem}` in {dir}")]
    MissingExternalOutput { stem: String, dir: PathBuf },
    #[error("invalid task plan: {0}")]
    InvalidPlan(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
