//! Sharpening and quality assessment for capsule-endoscopy villi imagery.
//!
//! The pipeline works on the intensity channel of an HSI decomposition:
//! a guided filter splits intensity into a low-frequency base and a
//! high-frequency detail plane, per-pixel gain factors derived from local
//! brightness and gradient magnitude scale the detail plane, and the scaled
//! detail is added back.  Colour is untouched, so hue and saturation survive
//! the round trip exactly (up to byte quantisation).
//!
//! Modules:
//! - [`raster`]: byte rasters, float planes, and the quantisation rules.
//! - [`colorspace`]: RGB ↔ HSI conversion.
//! - [`filters`]: box mean, guided filter, Laplacian edge maps, Gaussian blur.
//! - [`gain`]: brightness and gradient gain factors and the combined gain map.
//! - [`enhance`]: the end-to-end sharpening pass.
//! - [`metrics`]: PSNR, local-entropy score, and the natural-scene model
//!   distance, plus CSV helpers for reporting.
//! - [`fixtures`]: deterministic synthetic test images.

pub mod colorspace;
mod error;
pub mod enhance;
pub mod filters;
pub mod fixtures;
pub mod gain;
pub mod metrics;
pub mod raster;

pub use error::{Error, Result};
pub use raster::{Plane, Raster};
