use std::path::PathBuf;

/// Error type shared by every module in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode {path}: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("cannot encode {path}: {source}")]
    Encode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: only 8-bit images are supported (got {color:?})")]
    UnsupportedBitDepth {
        path: PathBuf,
        color: image::ColorType,
    },

    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("need at least {needed} feature vectors to fit the model, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("no patch passed the sharpness threshold (image too flat?)")]
    NoSharpPatches,

    #[error("image {width}x{height} is smaller than one {patch_size}x{patch_size} patch")]
    ImageTooSmall {
        width: usize,
        height: usize,
        patch_size: usize,
    },

    #[error("bad model file {path}: {reason}")]
    BadModel { path: PathBuf, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
