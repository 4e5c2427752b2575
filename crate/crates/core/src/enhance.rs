//! The end-to-end sharpening pass.
//!
//! One image flows through: RGB → HSI, guided-filter split of the
//! intensity plane into base + detail, gain maps from local brightness
//! and edge strength, then `enhanced = clamp(i + k·detail)` and HSI → RGB.
//! Hue and saturation are carried through untouched, and the pass is
//! single-shot — gains are computed once, never iterated.

use crate::colorspace::{hsi_to_rgb, rgb_to_hsi};
use crate::error::{Error, Result};
use crate::filters::{decompose, laplacian_edge_map, EdgeNorm, GuidedFilterParams, Kernel};
use crate::gain::{gain_coefficient, gradient_gain, light_gain, GainMaps, DEFAULT_ALPHA};
use crate::raster::{Plane, Raster};

/// Which Laplacian template feeds the edge map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelVariant {
    /// All eight neighbours (centre −8); sees diagonal edges.
    #[default]
    EightNeighbor,
    /// Axial neighbours only (centre −4).
    FourNeighbor,
}

impl KernelVariant {
    pub fn kernel(&self) -> Kernel {
        match self {
            KernelVariant::EightNeighbor => Kernel::laplacian_8(),
            KernelVariant::FourNeighbor => Kernel::laplacian_4(),
        }
    }
}

/// Which gain factors participate in the pass.
///
/// The reduced modes exist for ablation runs: each pins the skipped
/// factor's plane to 1, so the remaining factor acts alone and the
/// combined gain can only grow relative to [`GainMode::Both`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainMode {
    /// Full method: brightness and gradient gains both active.
    #[default]
    Both,
    /// Brightness gain only; the gradient gain is pinned to 1.
    LightOnly,
    /// Gradient gain only; the brightness gain is pinned to 1.
    GradientOnly,
}

/// Tunable knobs for one sharpening pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhanceConfig {
    /// Amplification cap for the gain map (`k ≤ alpha`).
    pub alpha: f64,
    /// Window radius and regularizer of the base/detail split.
    pub guided: GuidedFilterParams,
    /// Laplacian template for the edge map.
    pub kernel_variant: KernelVariant,
    /// How the edge map is scaled into `[0, 1]`.
    pub edge_norm: EdgeNorm,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            guided: GuidedFilterParams::default(),
            kernel_variant: KernelVariant::default(),
            edge_norm: EdgeNorm::default(),
        }
    }
}

impl EnhanceConfig {
    /// Reject configs whose `alpha` is not a positive finite number.
    /// (The guided parameters enforce their own invariants at
    /// construction.)
    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive and finite, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Result of sharpening one intensity plane.
#[derive(Debug, Clone)]
pub struct IntensityEnhancement {
    /// Sharpened intensity, clamped to `[0, 1]`.
    pub enhanced: Plane,
    pub gains: GainMaps,
    /// Smooth base from the guided split.
    pub low: Plane,
    /// Signed detail (`input − low`), unclamped.
    pub high: Plane,
}

/// Result of sharpening a full RGB image.
#[derive(Debug, Clone)]
pub struct EnhanceOutput {
    /// The sharpened image, same dimensions as the input.
    pub image: Raster,
    pub gains: GainMaps,
    pub low: Plane,
    pub high: Plane,
}

/// Sharpen one intensity plane with the full method.
pub fn enhance_intensity(i: &Plane, cfg: &EnhanceConfig) -> Result<IntensityEnhancement> {
    enhance_intensity_with_mode(i, cfg, GainMode::Both)
}

/// Sharpen one intensity plane, optionally disabling one gain factor.
///
/// The chain: split `i` into `low`/`high`, derive the brightness gain
/// from `low` and the gradient gain from the edge map of the *original*
/// plane, multiply into `k`, then `enhanced = clamp(i + k·high, 0, 1)`.
pub fn enhance_intensity_with_mode(
    i: &Plane,
    cfg: &EnhanceConfig,
    mode: GainMode,
) -> Result<IntensityEnhancement> {
    cfg.validate()?;
    let (w, h) = (i.width(), i.height());
    let (low, high) = decompose(i, cfg.guided);

    let (w1, mean_luminance) = match mode {
        GainMode::Both | GainMode::LightOnly => light_gain(&low),
        GainMode::GradientOnly => (Plane::filled(w, h, 1.0), low.mean()),
    };
    let w2 = match mode {
        GainMode::Both | GainMode::GradientOnly => {
            let edge = laplacian_edge_map(i, &cfg.kernel_variant.kernel(), cfg.edge_norm);
            gradient_gain(&edge)
        }
        GainMode::LightOnly => Plane::filled(w, h, 1.0),
    };
    let k = gain_coefficient(&w1, &w2, cfg.alpha)?;

    let mut out = Vec::with_capacity(i.len());
    for idx in 0..i.len() {
        let v = i.data()[idx] + k.data()[idx] * high.data()[idx];
        out.push(v.clamp(0.0, 1.0));
    }

    Ok(IntensityEnhancement {
        enhanced: Plane::from_data(w, h, out),
        gains: GainMaps {
            w1,
            w2,
            k,
            mean_luminance,
            alpha: cfg.alpha,
        },
        low,
        high,
    })
}

/// Sharpen a full RGB image with the full method.
pub fn enhance_image(img: &Raster, cfg: &EnhanceConfig) -> Result<EnhanceOutput> {
    enhance_image_with_mode(img, cfg, GainMode::Both)
}

/// Sharpen a full RGB image, optionally disabling one gain factor.
///
/// Only the intensity plane is rewritten; hue and saturation pass
/// through, so colour shifts are bounded by byte quantisation.
pub fn enhance_image_with_mode(
    img: &Raster,
    cfg: &EnhanceConfig,
    mode: GainMode,
) -> Result<EnhanceOutput> {
    let hsi = rgb_to_hsi(img);
    let result = enhance_intensity_with_mode(&hsi.i, cfg, mode)?;
    let image = hsi_to_rgb(&hsi.with_intensity(result.enhanced));
    Ok(EnhanceOutput {
        image,
        gains: result.gains,
        low: result.low,
        high: result.high,
    })
}
