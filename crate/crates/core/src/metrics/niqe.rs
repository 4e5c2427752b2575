//! No-reference naturalness scoring.
//!
//! The score is the Mahalanobis-style distance between two multivariate
//! Gaussian fits of local image statistics: one fitted offline to a
//! corpus of clean images (the model, built by [`fit_mvg`] and persisted
//! as a small text file), one fitted to the image under test.  Lower
//! means statistically closer to the clean corpus.
//!
//! The statistics are the classic natural-scene features: every patch
//! contributes the shape/spread of a generalized Gaussian fitted to its
//! mean-subtracted contrast-normalized (MSCN) coefficients, plus the
//! four asymmetric fits of horizontally / vertically / diagonally
//! adjacent coefficient products — 18 numbers per patch, computed at
//! full and half resolution for 36 total.  Only patches whose local
//! contrast reaches 75% of the image's sharpest patch participate, so
//! flat backgrounds don't drown out texture.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use once_cell::sync::Lazy;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::raster::Plane;

/// Features per scale: 2 from the direct MSCN fit + 4 orientations × 4.
const FEATURES_PER_SCALE: usize = 18;
/// Total feature dimension over the two scales.
pub const FEATURE_DIM: usize = 2 * FEATURES_PER_SCALE;

/// Default patch side length (full-resolution scale), must be even.
pub const DEFAULT_PATCH_SIZE: usize = 48;

/// Contrast stabilizer in the MSCN denominator: one byte step.
const MSCN_C: f64 = 1.0 / 255.0;

/// Patches must reach this fraction of the sharpest patch's contrast.
const SHARPNESS_FRACTION: f64 = 0.75;

/// Shape-parameter search grid shared by both moment-ratio lookups:
/// 0.2 to 10.0 in steps of 0.001.
fn shape_grid() -> impl Iterator<Item = f64> {
    (0..=9800).map(|i| 0.2 + i as f64 * 0.001)
}

/// Moment ratio `Γ(1/γ)·Γ(3/γ) / Γ(2/γ)²` tabulated over the grid; the
/// symmetric fit inverts this to find γ.
static GGD_RATIO: Lazy<Vec<(f64, f64)>> = Lazy::new(|| {
    shape_grid()
        .map(|g| {
            let r = gamma(1.0 / g) * gamma(3.0 / g) / gamma(2.0 / g).powi(2);
            (g, r)
        })
        .collect()
});

/// Moment ratio `Γ(2/α)² / (Γ(1/α)·Γ(3/α))` tabulated over the grid,
/// used by the asymmetric fit.
static AGGD_RATIO: Lazy<Vec<(f64, f64)>> = Lazy::new(|| {
    shape_grid()
        .map(|a| {
            let r = gamma(2.0 / a).powi(2) / (gamma(1.0 / a) * gamma(3.0 / a));
            (a, r)
        })
        .collect()
});

/// Grid entry whose ratio is closest to `target` (first match on ties,
/// so the lookup is deterministic).
fn nearest_shape(table: &[(f64, f64)], target: f64) -> f64 {
    let mut best = table[0].0;
    let mut best_err = (table[0].1 - target).abs();
    for &(g, r) in &table[1..] {
        let err = (r - target).abs();
        if err < best_err {
            best_err = err;
            best = g;
        }
    }
    best
}

/// The persisted naturalness model: an MVG over the 36 features plus the
/// patch size it was built with (scoring must tile identically).
#[derive(Debug, Clone, PartialEq)]
pub struct NiqeModel {
    /// Feature mean, length `feature_dim`.
    pub mean: Vec<f64>,
    /// Row-major `feature_dim × feature_dim` covariance, symmetric.
    pub covariance: Vec<f64>,
    pub feature_dim: usize,
    pub patch_size: usize,
}

impl NiqeModel {
    /// Check internal consistency: matching lengths, finite values,
    /// symmetric covariance, usable patch size.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let f = self.feature_dim;
        if f == 0 {
            return Err("feature dimension must be positive".into());
        }
        if self.mean.len() != f {
            return Err(format!("mean has {} entries, expected {f}", self.mean.len()));
        }
        if self.covariance.len() != f * f {
            return Err(format!(
                "covariance has {} entries, expected {}",
                self.covariance.len(),
                f * f
            ));
        }
        if self.patch_size < 4 || self.patch_size % 2 != 0 {
            return Err(format!(
                "patch size must be even and at least 4, got {}",
                self.patch_size
            ));
        }
        if !self.mean.iter().chain(&self.covariance).all(|v| v.is_finite()) {
            return Err("model contains non-finite values".into());
        }
        for i in 0..f {
            for j in (i + 1)..f {
                let d = (self.covariance[i * f + j] - self.covariance[j * f + i]).abs();
                if d > 1e-9 {
                    return Err(format!("covariance asymmetric at ({i}, {j}): {d}"));
                }
            }
        }
        Ok(())
    }

    /// Serialize as the `niqe-model v1` text format: a header line with
    /// the dimensions, then the mean, then the covariance one row per
    /// line, all in round-trip-exact decimal.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = format!("niqe-model v1 {} {}\n", self.feature_dim, self.patch_size);
        let mean_line: Vec<String> = self.mean.iter().map(|v| v.to_string()).collect();
        text.push_str(&mean_line.join(" "));
        text.push('\n');
        for row in self.covariance.chunks(self.feature_dim) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            text.push_str(&line.join(" "));
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Parse a model file written by [`NiqeModel::save`].
    pub fn load(path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::BadModel {
            path: path.to_path_buf(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "niqe-model" || fields[1] != "v1" {
            return Err(bad(format!("unrecognized header `{header}`")));
        }
        let feature_dim: usize = fields[2]
            .parse()
            .map_err(|_| bad(format!("bad feature dimension `{}`", fields[2])))?;
        let patch_size: usize = fields[3]
            .parse()
            .map_err(|_| bad(format!("bad patch size `{}`", fields[3])))?;

        let mut values = Vec::with_capacity(feature_dim * (feature_dim + 1));
        for token in lines.flat_map(str::split_whitespace) {
            let v: f64 = token
                .parse()
                .map_err(|_| bad(format!("bad number `{token}`")))?;
            values.push(v);
        }
        let expected = feature_dim + feature_dim * feature_dim;
        if values.len() != expected {
            return Err(bad(format!(
                "expected {expected} values, found {}",
                values.len()
            )));
        }
        let covariance = values.split_off(feature_dim);
        let model = NiqeModel {
            mean: values,
            covariance,
            feature_dim,
            patch_size,
        };
        model.validate().map_err(bad)?;
        Ok(model)
    }
}

/// Divisive normalization: `(I − μ) / (σ + C)` with μ and σ taken over a
/// Gaussian-weighted 7×7 neighbourhood (σ = 7/6, reflect padding).
///
/// Returns the MSCN plane and the local-σ plane; the latter doubles as
/// the sharpness measure for patch selection.
pub fn mscn(p: &Plane) -> (Plane, Plane) {
    let weights = gaussian7();
    let mu = separable7(p, &weights);
    let m2 = separable7(&p.map(|v| v * v), &weights);
    let sigma = m2.zip_map(&mu, |sq, m| (sq - m * m).max(0.0).sqrt());
    let mut out = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        out.push((p.data()[i] - mu.data()[i]) / (sigma.data()[i] + MSCN_C));
    }
    (Plane::from_data(p.width(), p.height(), out), sigma)
}

/// Normalized 7-tap Gaussian (σ = 7/6) for the MSCN window.
fn gaussian7() -> [f64; 7] {
    let sigma = 7.0 / 6.0;
    let mut w = [0.0; 7];
    let mut sum = 0.0;
    for (i, slot) in w.iter_mut().enumerate() {
        let t = i as f64 - 3.0;
        *slot = (-t * t / (2.0 * sigma * sigma)).exp();
        sum += *slot;
    }
    for slot in &mut w {
        *slot /= sum;
    }
    w
}

/// Separable 7×7 weighted mean with reflect padding.
fn separable7(p: &Plane, weights: &[f64; 7]) -> Plane {
    let (w, h) = (p.width(), p.height());
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
    let mut tmp = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for (k, &wk) in weights.iter().enumerate() {
                acc += wk * p.get(reflect(x + k as isize - 3, w), y);
            }
            tmp.push(acc);
        }
    }
    let tmp = Plane::from_data(w, h, tmp);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &wk) in weights.iter().enumerate() {
                acc += wk * tmp.get(x, reflect(y + k as isize - 3, h));
            }
            out.push(acc);
        }
    }
    Plane::from_data(w, h, out)
}

/// Fit a zero-mean generalized Gaussian by moment matching; returns the
/// shape γ and the second moment `E[x²]`.
///
/// Inverts `E[x²]/E[|x|]²` through the tabulated ratio.  An all-zero
/// sample has no shape information: it maps to the flattest grid shape
/// with zero spread, keeping the fit total and deterministic.
pub fn fit_ggd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mut sum_sq = 0.0;
    let mut sum_abs = 0.0;
    for &v in values {
        sum_sq += v * v;
        sum_abs += v.abs();
    }
    let mean_sq = sum_sq / n;
    let mean_abs = sum_abs / n;
    if mean_abs == 0.0 {
        return (10.0, 0.0);
    }
    let rho = mean_sq / (mean_abs * mean_abs);
    (nearest_shape(&GGD_RATIO, rho), mean_sq)
}

/// Fit a zero-mode asymmetric generalized Gaussian by moment matching;
/// returns the shape α and the left/right standard deviations (RMS of
/// the negative and positive samples respectively).
///
/// Degenerate tails are pinned instead of propagating NaN: an empty side
/// contributes std 0, and when the right side is empty the asymmetry
/// correction is skipped (the raw moment ratio is used directly).
pub fn fit_aggd(values: &[f64]) -> (f64, f64, f64) {
    let mut left_sq = 0.0;
    let mut left_n = 0u64;
    let mut right_sq = 0.0;
    let mut right_n = 0u64;
    let mut sum_abs = 0.0;
    let mut sum_sq = 0.0;
    for &v in values {
        if v < 0.0 {
            left_sq += v * v;
            left_n += 1;
        } else if v > 0.0 {
            right_sq += v * v;
            right_n += 1;
        }
        sum_abs += v.abs();
        sum_sq += v * v;
    }
    let left_std = if left_n > 0 {
        (left_sq / left_n as f64).sqrt()
    } else {
        0.0
    };
    let right_std = if right_n > 0 {
        (right_sq / right_n as f64).sqrt()
    } else {
        0.0
    };
    let n = values.len() as f64;
    let mean_abs = sum_abs / n;
    let mean_sq = sum_sq / n;

    let rhat_norm = if mean_sq > 0.0 {
        let rhat = mean_abs * mean_abs / mean_sq;
        if right_std > 0.0 {
            let gh = left_std / right_std;
            rhat * (gh.powi(3) + 1.0) * (gh + 1.0) / (gh * gh + 1.0).powi(2)
        } else {
            rhat
        }
    } else {
        0.0
    };
    (nearest_shape(&AGGD_RATIO, rhat_norm), left_std, right_std)
}

/// The 18 features of one patch of an MSCN plane: the symmetric fit of
/// the coefficients themselves, then (shape, mean, left var, right var)
/// of the asymmetric fit for each adjacent-product orientation.
fn patch_features(m: &Plane, x0: usize, y0: usize, s: usize) -> Vec<f64> {
    let mut vals = Vec::with_capacity(s * s);
    for y in 0..s {
        for x in 0..s {
            vals.push(m.get(x0 + x, y0 + y));
        }
    }
    let (shape, spread) = fit_ggd(&vals);
    let mut feat = Vec::with_capacity(FEATURES_PER_SCALE);
    feat.push(shape);
    feat.push(spread);

    let at = |x: usize, y: usize| vals[y * s + x];
    let mut orientations: [Vec<f64>; 4] = [
        Vec::with_capacity(s * (s - 1)),
        Vec::with_capacity(s * (s - 1)),
        Vec::with_capacity((s - 1) * (s - 1)),
        Vec::with_capacity((s - 1) * (s - 1)),
    ];
    for y in 0..s {
        for x in 0..s - 1 {
            orientations[0].push(at(x, y) * at(x + 1, y));
        }
    }
    for y in 0..s - 1 {
        for x in 0..s {
            orientations[1].push(at(x, y) * at(x, y + 1));
        }
    }
    for y in 0..s - 1 {
        for x in 0..s - 1 {
            orientations[2].push(at(x, y) * at(x + 1, y + 1));
        }
    }
    for y in 0..s - 1 {
        for x in 1..s {
            orientations[3].push(at(x, y) * at(x - 1, y + 1));
        }
    }

    for products in &orientations {
        let (alpha, left_std, right_std) = fit_aggd(products);
        let g1 = gamma(1.0 / alpha);
        let g2 = gamma(2.0 / alpha);
        let g3 = gamma(3.0 / alpha);
        let eta = (right_std - left_std) * (g2 / g1) * (g1 / g3).sqrt();
        feat.push(alpha);
        feat.push(eta);
        feat.push(left_std * left_std);
        feat.push(right_std * right_std);
    }
    feat
}

/// Halve both dimensions by averaging disjoint 2×2 blocks.
fn half_scale(p: &Plane) -> Plane {
    let (w, h) = (p.width() / 2, p.height() / 2);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let s = p.get(2 * x, 2 * y)
                + p.get(2 * x + 1, 2 * y)
                + p.get(2 * x, 2 * y + 1)
                + p.get(2 * x + 1, 2 * y + 1);
            out.push(s / 4.0);
        }
    }
    Plane::from_data(w, h, out)
}

/// Copy the top-left `w × h` region.
fn crop(p: &Plane, w: usize, h: usize) -> Plane {
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            out.push(p.get(x, y));
        }
    }
    Plane::from_data(w, h, out)
}

/// Extract one 36-vector per selected patch.
///
/// The image is cropped to a whole number of patches, normalized, and
/// tiled; patches whose mean local contrast exceeds 75% of the sharpest
/// patch contribute features at full and half resolution.  Patch order
/// is row-major, so output order is deterministic.
pub fn niqe_features(p: &Plane, patch_size: usize) -> Result<Vec<Vec<f64>>> {
    if patch_size < 4 || patch_size % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "patch size must be even and at least 4, got {patch_size}"
        )));
    }
    let nx = p.width() / patch_size;
    let ny = p.height() / patch_size;
    if nx == 0 || ny == 0 {
        return Err(Error::ImageTooSmall {
            width: p.width(),
            height: p.height(),
            patch_size,
        });
    }
    let cropped = crop(p, nx * patch_size, ny * patch_size);

    let (mscn1, sigma1) = mscn(&cropped);

    // Mean local contrast per patch, then the relative sharpness cut.
    let mut sharpness = Vec::with_capacity(nx * ny);
    for py in 0..ny {
        for px in 0..nx {
            let mut sum = 0.0;
            for y in 0..patch_size {
                for x in 0..patch_size {
                    sum += sigma1.get(px * patch_size + x, py * patch_size + y);
                }
            }
            sharpness.push(sum / (patch_size * patch_size) as f64);
        }
    }
    let peak = sharpness.iter().cloned().fold(0.0f64, f64::max);
    let selected: Vec<usize> = (0..sharpness.len())
        .filter(|&i| sharpness[i] > SHARPNESS_FRACTION * peak)
        .collect();
    if selected.is_empty() {
        return Err(Error::NoSharpPatches);
    }

    let (mscn2, _) = mscn(&half_scale(&cropped));
    let half_patch = patch_size / 2;

    let mut features = Vec::with_capacity(selected.len());
    for &idx in &selected {
        let (px, py) = (idx % nx, idx / nx);
        let mut v = patch_features(&mscn1, px * patch_size, py * patch_size, patch_size);
        v.extend(patch_features(
            &mscn2,
            px * half_patch,
            py * half_patch,
            half_patch,
        ));
        debug_assert_eq!(v.len(), FEATURE_DIM);
        features.push(v);
    }
    Ok(features)
}

/// Fit an MVG (sample mean + unbiased sample covariance, symmetrized)
/// to a set of feature vectors.  Needs at least `dim + 1` vectors so the
/// covariance has full-rank potential.
pub fn fit_mvg(features: &[Vec<f64>], patch_size: usize) -> Result<NiqeModel> {
    let n = features.len();
    if n == 0 {
        return Err(Error::InsufficientSamples { needed: 2, got: 0 });
    }
    let f = features[0].len();
    if f == 0 || features.iter().any(|v| v.len() != f) {
        return Err(Error::InvalidParameter(
            "feature vectors must be non-empty and uniformly sized".into(),
        ));
    }
    if n < f + 1 {
        return Err(Error::InsufficientSamples {
            needed: f + 1,
            got: n,
        });
    }

    let mut mean = vec![0.0; f];
    for v in features {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let mut cov = vec![0.0; f * f];
    for v in features {
        for i in 0..f {
            let di = v[i] - mean[i];
            for j in 0..f {
                cov[i * f + j] += di * (v[j] - mean[j]);
            }
        }
    }
    let denom = (n - 1) as f64;
    for c in &mut cov {
        *c /= denom;
    }
    for i in 0..f {
        for j in (i + 1)..f {
            let s = (cov[i * f + j] + cov[j * f + i]) / 2.0;
            cov[i * f + j] = s;
            cov[j * f + i] = s;
        }
    }

    Ok(NiqeModel {
        mean,
        covariance: cov,
        feature_dim: f,
        patch_size,
    })
}

/// Distance between two MVGs sharing a feature space:
/// `sqrt((v1 − v2)ᵀ · ((Σ1 + Σ2)/2)⁻¹ · (v1 − v2))`.
///
/// The pooled covariance gets a relative ridge (`1e-8 · trace / dim` on
/// the diagonal) before inversion, since covariances fitted from small
/// corpora are routinely near-singular.
pub fn niqe_distance(v1: &[f64], cov1: &[f64], v2: &[f64], cov2: &[f64]) -> Result<f64> {
    let f = v1.len();
    if f == 0 || v2.len() != f || cov1.len() != f * f || cov2.len() != f * f {
        return Err(Error::InvalidParameter(format!(
            "inconsistent shapes: vectors {}/{}, covariances {}/{} (feature dim {f})",
            v1.len(),
            v2.len(),
            cov1.len(),
            cov2.len()
        )));
    }
    let mut pooled = DMatrix::<f64>::zeros(f, f);
    for i in 0..f {
        for j in 0..f {
            pooled[(i, j)] = (cov1[i * f + j] + cov2[i * f + j]) / 2.0;
        }
    }
    let trace: f64 = (0..f).map(|i| pooled[(i, i)]).sum();
    let ridge = 1e-8 * trace / f as f64;
    for i in 0..f {
        pooled[(i, i)] += ridge;
    }
    let diff = DVector::from_iterator(f, v1.iter().zip(v2).map(|(a, b)| a - b));
    let solved = pooled
        .lu()
        .solve(&diff)
        .ok_or_else(|| Error::InvalidParameter("pooled covariance is singular".into()))?;
    // The quadratic form is nonnegative for a positive-definite pooled
    // matrix; rounding can leave a tiny negative residue at diff ≈ 0.
    Ok(diff.dot(&solved).max(0.0).sqrt())
}

/// Score one intensity plane against a model: fit an MVG to the plane's
/// own features (same patch size as the model) and take the distance.
pub fn niqe(p: &Plane, model: &NiqeModel) -> Result<f64> {
    let features = niqe_features(p, model.patch_size)?;
    let fitted = fit_mvg(&features, model.patch_size)?;
    if fitted.feature_dim != model.feature_dim {
        return Err(Error::InvalidParameter(format!(
            "model expects {}-dimensional features, image produced {}",
            model.feature_dim, fitted.feature_dim
        )));
    }
    niqe_distance(
        &model.mean,
        &model.covariance,
        &fitted.mean,
        &fitted.covariance,
    )
}
