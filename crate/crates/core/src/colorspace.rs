//! RGB ↔ HSI conversion.
//!
//! Intensity is the plain channel average, saturation measures how far the
//! pixel is from gray, and hue is an angle around the colour circle stored
//! as a fraction of a full turn in `[0, 1)`.  Achromatic pixels (where the
//! hue angle is undefined) get hue 0 by convention, and pure black gets
//! saturation 0 so nothing divides by zero.
//!
//! Sharpening only ever rewrites the intensity plane, so the fidelity of
//! this round trip bounds the colour error of the whole pipeline: going
//! RGB → HSI → RGB through byte quantisation moves each channel by at most
//! one byte step.

use std::f64::consts::PI;

use crate::raster::{from_unit, to_unit, Plane, Raster};

/// An image split into hue, saturation, and intensity planes.
///
/// `h` is a fraction of a turn in `[0, 1)`; `s` and `i` live in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Hsi {
    pub h: Plane,
    pub s: Plane,
    pub i: Plane,
}

impl Hsi {
    /// Clone the hue and saturation planes around a replacement intensity
    /// plane of the same size.
    ///
    /// # Panics
    /// Panics if `intensity` has a different size than the existing planes.
    pub fn with_intensity(&self, intensity: Plane) -> Hsi {
        assert!(
            self.i.same_size(&intensity),
            "replacement intensity plane must match the image size"
        );
        Hsi {
            h: self.h.clone(),
            s: self.s.clone(),
            i: intensity,
        }
    }
}

/// Convert one RGB pixel (unit-interval channels) to `(h, s, i)`.
pub fn pixel_to_hsi(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let sum = r + g + b;
    let i = sum / 3.0;
    let min = r.min(g).min(b);
    // Black has no meaningful saturation; define it as 0 instead of 0/0.
    let s = if sum > 0.0 { 1.0 - 3.0 * min / sum } else { 0.0 };

    let num = 0.5 * ((r - g) + (r - b));
    let den = ((r - g) * (r - g) + (r - b) * (g - b)).sqrt();
    let h = if den > 0.0 {
        // Rounding can push the cosine argument a hair outside [-1, 1].
        let theta = (num / den).clamp(-1.0, 1.0).acos() / (2.0 * PI);
        let mut h = if b <= g { theta } else { 1.0 - theta };
        if h >= 1.0 {
            h = 0.0;
        }
        h
    } else {
        // Achromatic: the angle is undefined, pick 0.
        0.0
    };
    (h, s, i)
}

/// Convert one `(h, s, i)` pixel back to unit-interval RGB.
///
/// The hue circle splits into three 120° sectors; in each sector one
/// channel is pinned at `i * (1 - s)`, one follows the hue angle, and the
/// third takes whatever keeps the channel average equal to `i`.  Channels
/// are clamped to `[0, 1]` because saturated inputs can overshoot.
pub fn pixel_to_rgb(h: f64, s: f64, i: f64) -> (f64, f64, f64) {
    let deg = h * 360.0;
    let sixty = 60f64.to_radians();
    let (r, g, b);
    if deg < 120.0 {
        let hr = deg.to_radians();
        b = i * (1.0 - s);
        r = i * (1.0 + s * hr.cos() / (sixty - hr).cos());
        g = 3.0 * i - (r + b);
    } else if deg < 240.0 {
        let hr = (deg - 120.0).to_radians();
        r = i * (1.0 - s);
        g = i * (1.0 + s * hr.cos() / (sixty - hr).cos());
        b = 3.0 * i - (r + g);
    } else {
        let hr = (deg - 240.0).to_radians();
        g = i * (1.0 - s);
        b = i * (1.0 + s * hr.cos() / (sixty - hr).cos());
        r = 3.0 * i - (g + b);
    }
    (r.clamp(0.0, 1.0), g.clamp(0.0, 1.0), b.clamp(0.0, 1.0))
}

/// Split an RGB raster into hue, saturation, and intensity planes.
pub fn rgb_to_hsi(raster: &Raster) -> Hsi {
    let (w, hgt) = (raster.width(), raster.height());
    let n = w * hgt;
    let mut h = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut i = Vec::with_capacity(n);
    for px in raster.bytes().chunks_exact(3) {
        let (hh, ss, ii) = pixel_to_hsi(to_unit(px[0]), to_unit(px[1]), to_unit(px[2]));
        h.push(hh);
        s.push(ss);
        i.push(ii);
    }
    Hsi {
        h: Plane::from_data(w, hgt, h),
        s: Plane::from_data(w, hgt, s),
        i: Plane::from_data(w, hgt, i),
    }
}

/// Recombine hue, saturation, and intensity planes into an RGB raster.
///
/// # Panics
/// Panics if the three planes disagree on size.
pub fn hsi_to_rgb(hsi: &Hsi) -> Raster {
    assert!(
        hsi.h.same_size(&hsi.s) && hsi.h.same_size(&hsi.i),
        "hue, saturation, and intensity planes must share a size"
    );
    let mut out = Vec::with_capacity(hsi.h.len() * 3);
    for idx in 0..hsi.h.len() {
        let (r, g, b) = pixel_to_rgb(hsi.h.data()[idx], hsi.s.data()[idx], hsi.i.data()[idx]);
        out.push(from_unit(r));
        out.push(from_unit(g));
        out.push(from_unit(b));
    }
    Raster::from_rgb_bytes(hsi.h.width(), hsi.h.height(), out)
}
