//! Image-quality metrics: fidelity (MSE / PSNR), texture richness
//! (windowed local entropy and its intensity-restricted mean), and the
//! no-reference naturalness score in [`niqe`].
//!
//! PSNR here answers "how much did sharpening perturb the image" — higher
//! means less added noise — while the entropy score rewards the extra
//! micro-contrast that sharpening is supposed to create.  The two pull in
//! opposite directions as gain rises, which is exactly what the sweep
//! reports are for.  Unless noted otherwise everything runs on the
//! intensity plane (channel average), matching where the enhancement
//! operates.

pub mod niqe;

use crate::error::Result;
use crate::raster::{Plane, Raster};

/// Default side length of the local-entropy window.
pub const ENTROPY_WINDOW: usize = 9;
/// Default number of histogram bins over `[0, 1]`.
pub const ENTROPY_LEVELS: usize = 256;

/// Intensity threshold of the restricted mean: only pixels at or above
/// one third of full scale count toward the restriction factor.
const RESTRICT_THRESHOLD: f64 = 1.0 / 3.0;

/// One row of a quality report.  `psnr` may be `+∞` (identical images);
/// `niqe` is absent when no naturalness model was supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub psnr: f64,
    pub irmle: f64,
    pub niqe: Option<f64>,
}

/// Mean squared error between two same-sized planes.
pub fn mse(reference: &Plane, test: &Plane) -> Result<f64> {
    reference.check_same_size(test)?;
    let mut sum = 0.0;
    for (a, b) in reference.data().iter().zip(test.data()) {
        let d = a - b;
        sum += d * d;
    }
    Ok(sum / reference.len() as f64)
}

/// Peak signal-to-noise ratio in decibels between two planes on the unit
/// scale (peak L = 1); `+∞` when the planes are identical.
pub fn psnr_planes(reference: &Plane, test: &Plane) -> Result<f64> {
    let mse = mse(reference, test)?;
    if mse == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(10.0 * (1.0 / mse).log10())
    }
}

/// PSNR between two images, computed on their intensity planes.
pub fn psnr(reference: &Raster, test: &Raster) -> Result<f64> {
    psnr_planes(&reference.intensity(), &test.intensity())
}

/// PSNR with the error averaged over all three RGB channels instead of
/// the intensity plane.
pub fn psnr_rgb(reference: &Raster, test: &Raster) -> Result<f64> {
    let mut total = 0.0;
    for c in 0..3 {
        total += mse(&reference.channel(c), &test.channel(c))?;
    }
    let mse = total / 3.0;
    if mse == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(10.0 * (1.0 / mse).log10())
    }
}

/// Histogram bin for a unit-interval sample: `floor(v·levels)` clamped
/// so that exactly 1.0 falls in the top bin.
#[inline]
fn bin_of(v: f64, levels: usize) -> usize {
    let b = (v.clamp(0.0, 1.0) * levels as f64).floor() as usize;
    b.min(levels - 1)
}

/// Shannon entropy (bits) of each pixel's surrounding window.
///
/// Window contents are quantized to `levels` bins over `[0, 1]`; borders
/// reflect, so every window holds exactly `window²` samples.  A constant
/// window scores 0; the maximum is `log2(min(levels, window²))`.
pub fn local_entropy(p: &Plane, window: usize, levels: usize) -> Plane {
    assert!(window % 2 == 1 && window >= 1, "window must be odd");
    assert!(levels >= 2, "need at least two histogram levels");
    let (w, h) = (p.width(), p.height());
    let half = (window / 2) as isize;
    let samples = (window * window) as f64;

    // Quantize once; windows then work on bin indices.
    let bins: Vec<usize> = p.data().iter().map(|&v| bin_of(v, levels)).collect();

    // Reusable scratch: counts per bin plus the list of touched bins, so
    // each pixel costs O(window²) instead of O(levels).
    let mut counts = vec![0u32; levels];
    let mut touched: Vec<usize> = Vec::with_capacity(window * window);
    let mut out = Vec::with_capacity(w * h);

    let reflect = |mut i: isize, n: usize| -> usize {
        let n = n as isize;
        loop {
            if i < 0 {
                i = -i - 1;
            } else if i >= n {
                i = 2 * n - 1 - i;
            } else {
                return i as usize;
            }
        }
    };

    for y in 0..h as isize {
        for x in 0..w as isize {
            for dy in -half..=half {
                let sy = reflect(y + dy, h);
                for dx in -half..=half {
                    let sx = reflect(x + dx, w);
                    let b = bins[sy * w + sx];
                    if counts[b] == 0 {
                        touched.push(b);
                    }
                    counts[b] += 1;
                }
            }
            let mut acc = 0.0;
            for &b in &touched {
                let p = f64::from(counts[b]) / samples;
                acc += p * p.log2();
                counts[b] = 0;
            }
            touched.clear();
            // acc ≤ 0; subtracting from 0 keeps the sign bit positive for
            // the all-in-one-bin case.
            out.push(0.0 - acc);
        }
    }
    Plane::from_data(w, h, out)
}

/// Fraction of pixels whose intensity is at least one third of full
/// scale.  Depends only on the histogram, not pixel positions.
pub fn restriction_factor(p: &Plane) -> f64 {
    if p.is_empty() {
        return 0.0;
    }
    let count = p.data().iter().filter(|&&v| v >= RESTRICT_THRESHOLD).count();
    count as f64 / p.len() as f64
}

/// Intensity-restricted mean local entropy: the mean 9×9 local entropy
/// scaled by the fraction of adequately bright pixels.
///
/// The restriction keeps dark, noise-dominated regions (common around
/// the capsule vignette) from inflating the texture score: an image that
/// is all shadow scores 0 no matter how busy the shadow is.
pub fn irmle(p: &Plane) -> f64 {
    let le = local_entropy(p, ENTROPY_WINDOW, ENTROPY_LEVELS);
    le.mean() * restriction_factor(p)
}

/// Full quality report for a reference/test pair: PSNR of test against
/// reference, IRMLE of the test image, and the naturalness score when a
/// model is available.  All three run on intensity planes.
pub fn report(
    reference: &Raster,
    test: &Raster,
    model: Option<&niqe::NiqeModel>,
) -> Result<MetricsReport> {
    let test_i = test.intensity();
    let psnr = psnr_planes(&reference.intensity(), &test_i)?;
    let irmle = irmle(&test_i);
    let niqe = match model {
        Some(m) => Some(niqe::niqe(&test_i, m)?),
        None => None,
    };
    Ok(MetricsReport { psnr, irmle, niqe })
}
