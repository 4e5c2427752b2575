//! Per-pixel gain factors that adapt sharpening strength to local
//! brightness and edge content.
//!
//! Two factors multiply into the final gain map `k`:
//!
//! - the light gain `w1` follows a sine arch over local brightness, so
//!   mid-tones sharpen fully while shadows and highlights taper to zero;
//!   pixels darker than the frame's mean brightness get the arch
//!   compressed to half height, which keeps noise in dim mucosa from
//!   being amplified;
//! - the gradient gain `w2` rises exponentially with edge strength up to
//!   a knee at 0.1 and decays exponentially beyond it, so faint texture
//!   is boosted while strong outlines (already visible) are left mostly
//!   alone and flat regions get only half weight.
//!
//! The combined map is `k = α·w1·w2` with `α` capping the maximum
//! amplification.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::raster::Plane;

/// Default amplification cap for the combined gain map.
pub const DEFAULT_ALPHA: f64 = 4.0;

/// Edge strength at which the gradient gain peaks at 1.
const KNEE: f64 = 0.1;

/// Decay rate of the gradient gain beyond the knee.
const DECAY: f64 = 3.0;

/// The gain planes for one image, bundled with the inputs that shaped
/// them.
///
/// Invariants: `k` equals `alpha * w1 * w2` pointwise (same expression,
/// same rounding), `w1` lies in `[0, 1]`, `w2` in `(0, 1]`, and `k` in
/// `[0, alpha]`.
#[derive(Debug, Clone)]
pub struct GainMaps {
    pub w1: Plane,
    pub w2: Plane,
    pub k: Plane,
    /// Mean of the low-frequency plane: the dark/bright branch threshold.
    pub mean_luminance: f64,
    pub alpha: f64,
}

/// Light gain for one pixel of low-frequency brightness `v`, given the
/// frame's mean brightness.
///
/// `sin(π·v)` arches from 0 at black through 1 at mid-gray back to 0 at
/// white; below-mean pixels get the arch halved.  Ties count as bright.
#[inline]
pub fn light_gain_at(v: f64, mean: f64) -> f64 {
    let arch = (PI * v).sin();
    if v < mean {
        0.5 * arch
    } else {
        arch
    }
}

/// Gradient gain for one pixel of edge strength `e` (in `[0, 1]`).
///
/// Below the knee the gain grows as `exp((ln 1.5 / 0.1)·e) − 0.5`, from
/// 0.5 in flat regions to 1 at the knee; past the knee it decays as
/// `exp(3·(0.1 − e))`, down to `e^{−2.7} ≈ 0.0672` on the strongest
/// edges.  Both branches meet at exactly 1, so the gain is continuous.
#[inline]
pub fn gradient_gain_at(e: f64) -> f64 {
    if e < KNEE {
        (1.5f64.ln() / KNEE * e).exp() - 0.5
    } else {
        (DECAY * (KNEE - e)).exp()
    }
}

/// Map a low-frequency brightness plane to its light-gain plane, also
/// returning the mean brightness used as the branch threshold.
pub fn light_gain(lowfreq: &Plane) -> (Plane, f64) {
    let mean = lowfreq.mean();
    (lowfreq.map(|v| light_gain_at(v, mean)), mean)
}

/// Map an edge-strength plane to its gradient-gain plane.
pub fn gradient_gain(edge: &Plane) -> Plane {
    edge.map(gradient_gain_at)
}

/// Combine the two gain planes into `k = alpha·w1·w2`.
///
/// # Panics
/// Panics if `alpha` is not a positive finite number; callers validate
/// user-supplied values before reaching this point.
pub fn gain_coefficient(w1: &Plane, w2: &Plane, alpha: f64) -> Result<Plane> {
    assert!(
        alpha.is_finite() && alpha > 0.0,
        "alpha must be positive and finite"
    );
    w1.check_same_size(w2)?;
    Ok(w1.zip_map(w2, |a, b| alpha * a * b))
}

/// Build all gain planes for one image from its low-frequency base and
/// edge map.
pub fn gain_maps(lowfreq: &Plane, edge: &Plane, alpha: f64) -> Result<GainMaps> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    lowfreq.check_same_size(edge)?;
    let (w1, mean_luminance) = light_gain(lowfreq);
    let w2 = gradient_gain(edge);
    let k = gain_coefficient(&w1, &w2, alpha)?;
    Ok(GainMaps {
        w1,
        w2,
        k,
        mean_luminance,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn light_gain_vanishes_at_black_and_white() {
        assert_abs_diff_eq!(light_gain_at(0.0, 0.5), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(light_gain_at(1.0, 0.5), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn light_gain_peaks_at_mid_gray_in_the_bright_branch() {
        assert_abs_diff_eq!(light_gain_at(0.5, 0.4), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dark_branch_compresses_the_arch_to_half_height() {
        assert_abs_diff_eq!(light_gain_at(0.25, 0.5), 0.353553, epsilon = 1e-6);
        let mut max = 0.0f64;
        for i in 0..1000 {
            // mean = 1.0 forces every v < 1 into the dark branch.
            max = max.max(light_gain_at(i as f64 / 1000.0, 1.0));
        }
        assert!(max <= 0.5, "dark branch exceeded half height: {max}");
    }

    #[test]
    fn brightness_equal_to_the_mean_counts_as_bright() {
        // At a tie the full-height branch applies, not the halved one.
        assert_abs_diff_eq!(light_gain_at(0.5, 0.5), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bright_branch_maximum_sits_at_half_brightness() {
        let mut best = (0.0f64, 0.0f64);
        for i in 0..=1000 {
            let v = i as f64 / 1000.0;
            let w = light_gain_at(v, 0.0);
            if w > best.1 {
                best = (v, w);
            }
        }
        assert_eq!(best.0, 0.5);
        assert_abs_diff_eq!(best.1, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn light_gain_reports_the_plane_mean_as_threshold() {
        let p = Plane::from_data(2, 2, vec![0.1, 0.2, 0.3, 0.8]);
        let (w1, mean) = light_gain(&p);
        assert_abs_diff_eq!(mean, 0.35, epsilon = 1e-15);
        // 0.1, 0.2, 0.3 fall below the mean (halved); 0.8 does not.
        assert_abs_diff_eq!(w1.data()[0], 0.5 * (PI * 0.1).sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(w1.data()[3], (PI * 0.8).sin(), epsilon = 1e-15);
    }

    #[test]
    fn gradient_gain_is_half_on_flat_ground() {
        assert_eq!(gradient_gain_at(0.0), 0.5);
    }

    #[test]
    fn gradient_gain_branches_meet_at_the_knee() {
        let low_branch = (1.5f64.ln() / 0.1 * 0.1).exp() - 0.5;
        let high_branch = (3.0f64 * (-0.1 + 0.1)).exp();
        assert!((low_branch - high_branch).abs() < 1e-12);
        assert_eq!(gradient_gain_at(0.1), 1.0);
    }

    #[test]
    fn gradient_gain_decays_on_the_strongest_edges() {
        assert_abs_diff_eq!(gradient_gain_at(1.0), 0.067206, epsilon = 1e-6);
        assert_abs_diff_eq!(gradient_gain_at(1.0), (-2.7f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn gradient_gain_rises_to_the_knee_then_falls() {
        let mut prev = gradient_gain_at(0.0);
        for i in 1..=100 {
            let cur = gradient_gain_at(i as f64 * 0.001);
            assert!(cur > prev, "not strictly increasing at {}", i as f64 * 0.001);
            prev = cur;
        }
        let mut prev = gradient_gain_at(0.1);
        for i in 1..=100 {
            let cur = gradient_gain_at(0.1 + i as f64 * 0.009);
            assert!(cur < prev, "not strictly decreasing at {}", 0.1 + i as f64 * 0.009);
            prev = cur;
        }
        let max = (0..=1000)
            .map(|i| gradient_gain_at(i as f64 / 1000.0))
            .fold(0.0f64, f64::max);
        assert_eq!(max, 1.0);
    }

    #[test]
    fn gain_coefficient_matches_hand_products() {
        let w1 = Plane::from_data(3, 1, vec![1.0, 0.0, 0.3535533905932738]);
        let w2 = Plane::from_data(3, 1, vec![1.0, 0.9, 0.5]);
        let k = gain_coefficient(&w1, &w2, 4.0).unwrap();
        assert_eq!(k.data()[0], 4.0);
        assert_eq!(k.data()[1], 0.0);
        assert_abs_diff_eq!(k.data()[2], 0.707107, epsilon = 1e-6);
    }

    #[test]
    fn gain_coefficient_rejects_mismatched_planes() {
        let w1 = Plane::filled(2, 2, 0.5);
        let w2 = Plane::filled(3, 2, 0.5);
        assert!(matches!(
            gain_coefficient(&w1, &w2, 4.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gain_maps_holds_its_invariants_on_random_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let lowfreq = Plane::from_data(16, 16, (0..256).map(|_| rng.random()).collect());
        let edge = Plane::from_data(16, 16, (0..256).map(|_| rng.random()).collect());
        let alpha = 4.0;
        let maps = gain_maps(&lowfreq, &edge, alpha).unwrap();
        assert_eq!(maps.mean_luminance, lowfreq.mean());
        for i in 0..256 {
            let (w1, w2, k) = (maps.w1.data()[i], maps.w2.data()[i], maps.k.data()[i]);
            assert!((0.0..=1.0).contains(&w1));
            assert!(w2 > 0.0 && w2 <= 1.0);
            assert!((0.0..=alpha).contains(&k));
            assert_eq!(k, alpha * w1 * w2, "k must be the exact product");
        }
    }

    #[test]
    fn rescaling_alpha_does_not_move_the_peak_gain() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let lowfreq = Plane::from_data(16, 16, (0..256).map(|_| rng.random()).collect());
        let edge = Plane::from_data(16, 16, (0..256).map(|_| rng.random()).collect());
        let argmax = |p: &Plane| {
            p.data()
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap()
        };
        let k2 = gain_maps(&lowfreq, &edge, 2.0).unwrap().k;
        let k7 = gain_maps(&lowfreq, &edge, 7.0).unwrap().k;
        assert_eq!(argmax(&k2), argmax(&k7));
        for i in 0..256 {
            assert_abs_diff_eq!(k7.data()[i] * 2.0, k2.data()[i] * 7.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn invalid_alpha_is_rejected() {
        let p = Plane::filled(2, 2, 0.5);
        assert!(gain_maps(&p, &p, 0.0).is_err());
        assert!(gain_maps(&p, &p, -1.0).is_err());
        assert!(gain_maps(&p, &p, f64::NAN).is_err());
        assert!(gain_maps(&p, &p, f64::INFINITY).is_err());
    }
}
