//! Deterministic synthetic imagery.
//!
//! Every generator is a pure function of its arguments (noise comes
//! from a seeded ChaCha8 stream), so tests and the shipped sample
//! corpus can rely on bit-identical pixels across runs and platforms.
//! The three shapes cover the behaviours the pipeline cares about: a
//! hard luminance step (overshoot control), a fine quasi-organic
//! texture under smooth uneven lighting (detail amplification), and a
//! noisy dark-to-bright scene (noise suppression by the adaptive
//! gains).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::raster::{from_unit, Raster};

/// Map a luminance field to RGB bytes with a fixed warm tint: red is
/// lifted and blue lowered by `tint`, green carries the luminance.
/// A zero tint produces a neutral gray image.
fn tinted(width: usize, height: usize, luma: &[f64], tint: f64) -> Raster {
    assert_eq!(luma.len(), width * height);
    let mut data = Vec::with_capacity(width * height * 3);
    for &v in luma {
        data.push(from_unit(v + tint));
        data.push(from_unit(v));
        data.push(from_unit(v - tint));
    }
    Raster::from_rgb_bytes(width, height, data)
}

/// A vertical luminance step: the left half sits at 0.35, the right
/// half at 0.65 (bytes 89 and 166).  Neutral gray, no noise.  The
/// levels leave headroom so even strong sharpening overshoots without
/// clipping, keeping quality trends measurable across the whole
/// strength range.
pub fn step_edge(width: usize, height: usize) -> Raster {
    let mut luma = Vec::with_capacity(width * height);
    for _ in 0..height {
        for x in 0..width {
            luma.push(if x < width / 2 { 0.35 } else { 0.65 });
        }
    }
    tinted(width, height, &luma, 0.0)
}

/// Fine directional ripple under smooth sinusoidal illumination, mildly
/// pink.  The ripple wavelengths (about 5 and 7 pixels) are far below
/// the default base/detail split radius, so they land in the detail
/// layer; the illumination wavelength equals the image size, so it
/// stays in the base layer.
pub fn villi_texture(width: usize, height: usize, seed: u64) -> Raster {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let px = rng.random::<f64>() * 2.0 * PI;
    let py = rng.random::<f64>() * 2.0 * PI;
    let t1 = rng.random::<f64>() * PI;
    let t2 = rng.random::<f64>() * PI;
    let p1 = rng.random::<f64>() * 2.0 * PI;
    let p2 = rng.random::<f64>() * 2.0 * PI;
    let k1 = 2.0 * PI / (4.5 + rng.random::<f64>());
    let k2 = 2.0 * PI / (6.5 + rng.random::<f64>());
    let noise = Normal::new(0.0, 0.006).unwrap();

    // Small amplitudes on purpose: at the top of the strength range the
    // amplified ripple still fits inside the unit interval, so sweeps
    // measure amplification rather than clipping.
    let mut luma = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (xf, yf) = (x as f64, y as f64);
            let illum = 0.5
                + 0.06
                    * (2.0 * PI * xf / width as f64 + px).sin()
                    * (2.0 * PI * yf / height as f64 + py).sin();
            let u1 = xf * t1.cos() + yf * t1.sin();
            let u2 = xf * t2.cos() + yf * t2.sin();
            let detail = 0.009 * (k1 * u1 + p1).sin() + 0.006 * (k2 * u2 + p2).sin();
            luma.push(illum + detail + noise.sample(&mut rng));
        }
    }
    tinted(width, height, &luma, 0.05)
}

/// Gaussian pixel noise (σ = 0.012) over a smooth dark-to-bright ramp:
/// the left plateau sits at 0.30, the right at 0.55, joined by a
/// sigmoid a few pixels wide.  Neutral gray.  The dark plateau hugs the
/// entropy-restriction threshold (1/3) from below, so amplification
/// steadily recruits dark pixels past it.
pub fn dark_noise(width: usize, height: usize, seed: u64) -> Raster {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.012).unwrap();
    let mut luma = Vec::with_capacity(width * height);
    for _ in 0..height {
        for x in 0..width {
            let ramp = 1.0 / (1.0 + (-(x as f64 - width as f64 / 2.0) / 6.0).exp());
            let base = 0.30 + (0.55 - 0.30) * ramp;
            luma.push(base + noise.sample(&mut rng));
        }
    }
    tinted(width, height, &luma, 0.0)
}
