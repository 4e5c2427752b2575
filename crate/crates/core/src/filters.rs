//! Spatial filters: box mean, guided filter, Laplacian edge maps, and
//! Gaussian blur.
//!
//! Everything here is a pure function over [`Plane`]s with deterministic,
//! row-major accumulation, so repeated runs produce bit-identical output.
//! Border handling follows two policies: windowed means (box and guided)
//! shrink their windows to the image intersection, while convolutions
//! (Laplacian, Gaussian) reflect samples across the border.  Shrinking
//! windows keep means unbiased next to the dark circular vignette typical
//! of capsule frames; reflection keeps convolution responses from seeing
//! a phantom black rim.

use crate::error::{Error, Result};
use crate::raster::Plane;

/// Window radius and regularizer for the guided filter.
///
/// The window is the `(2·radius + 1)²` square centred on each pixel.
/// `epsilon` damps the per-window slope on unit-interval intensities:
/// larger values push the filter toward a plain box blur.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidedFilterParams {
    radius: usize,
    epsilon: f64,
}

impl GuidedFilterParams {
    pub const DEFAULT_RADIUS: usize = 8;
    pub const DEFAULT_EPSILON: f64 = 0.04;

    /// Validate and build parameters; `radius` must be at least 1 and
    /// `epsilon` finite and non-negative.
    pub fn new(radius: usize, epsilon: f64) -> Result<Self> {
        if radius < 1 {
            return Err(Error::InvalidParameter(
                "guided filter radius must be at least 1".into(),
            ));
        }
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "guided filter epsilon must be finite and non-negative, got {epsilon}"
            )));
        }
        Ok(Self { radius, epsilon })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl Default for GuidedFilterParams {
    fn default() -> Self {
        Self {
            radius: Self::DEFAULT_RADIUS,
            epsilon: Self::DEFAULT_EPSILON,
        }
    }
}

/// Per-pixel slope and offset of the guided filter's local linear model.
///
/// Each pixel holds the `(a, b)` solution for the window centred there;
/// the filtered output averages these over all windows covering a pixel.
#[derive(Debug, Clone)]
pub struct LinearCoefficients {
    pub a: Plane,
    pub b: Plane,
}

/// A square convolution kernel with odd size ≥ 3.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    weights: Vec<f64>,
}

impl Kernel {
    /// Build a kernel from row-major weights; `size` must be odd and at
    /// least 3, and `weights` must hold exactly `size²` entries.
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self> {
        if size < 3 || size % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "kernel size must be odd and at least 3, got {size}"
            )));
        }
        if weights.len() != size * size {
            return Err(Error::InvalidParameter(format!(
                "kernel of size {size} needs {} weights, got {}",
                size * size,
                weights.len()
            )));
        }
        Ok(Self { size, weights })
    }

    /// 3×3 Laplacian responding to all eight neighbours (ones around a
    /// centre of −8).  Picks up diagonal edges; the default edge detector.
    pub fn laplacian_8() -> Self {
        Self {
            size: 3,
            weights: vec![1.0, 1.0, 1.0, 1.0, -8.0, 1.0, 1.0, 1.0, 1.0],
        }
    }

    /// 3×3 Laplacian responding to the four axial neighbours only
    /// (cross of ones around a centre of −4).
    pub fn laplacian_4() -> Self {
        Self {
            size: 3,
            weights: vec![0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    fn weight(&self, kx: usize, ky: usize) -> f64 {
        self.weights[ky * self.size + kx]
    }

    /// Sum of all weights (exactly 0 for Laplacians).
    pub fn weight_sum(&self) -> f64 {
        let mut sum = 0.0;
        for &w in &self.weights {
            sum += w;
        }
        sum
    }

    /// Largest possible `|response|` on inputs confined to `[0, 1]`:
    /// whichever is bigger of the positive-weight sum and the magnitude
    /// of the negative-weight sum.
    pub fn max_response(&self) -> f64 {
        let mut pos = 0.0;
        let mut neg = 0.0;
        for &w in &self.weights {
            if w > 0.0 {
                pos += w;
            } else {
                neg -= w;
            }
        }
        pos.max(neg)
    }
}

/// How to scale a raw `|Laplacian response|` plane into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeNorm {
    /// Divide by the image's own maximum response, so the strongest edge
    /// in every frame lands at exactly 1 (an all-flat frame stays 0).
    #[default]
    PerImageMax,
    /// Divide by the kernel's maximum possible response on `[0, 1]`
    /// inputs (8 for the eight-neighbour kernel, 4 for the cross),
    /// making values comparable across frames.
    TheoreticalMax,
}

/// Mirror an out-of-range index back into `[0, n)`, reflecting across the
/// edge between samples (so index −1 maps to 0 and `n` maps to `n − 1`).
/// Folds repeatedly, which matters only when a kernel is wider than the
/// image.
#[inline]
fn reflect_index(mut i: isize, n: usize) -> usize {
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
}

/// Mean over the `(2·radius + 1)²` window intersected with the image.
///
/// Windows shrink at the borders, so the output is an unbiased local mean
/// everywhere and constants pass through (up to accumulation rounding).
/// Implemented with a summed-area table: O(1) per pixel regardless of
/// radius.
pub fn box_mean(p: &Plane, radius: usize) -> Plane {
    assert!(radius >= 1, "box_mean radius must be at least 1");
    let (w, h) = (p.width(), p.height());
    // sat[(y, x)] holds the sum over the rectangle [0, y) × [0, x).
    let stride = w + 1;
    let mut sat = vec![0.0f64; stride * (h + 1)];
    for y in 0..h {
        let mut row = 0.0;
        for x in 0..w {
            row += p.get(x, y);
            sat[(y + 1) * stride + (x + 1)] = sat[y * stride + (x + 1)] + row;
        }
    }
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let y0 = y.saturating_sub(radius);
        let y1 = (y + radius).min(h - 1) + 1;
        for x in 0..w {
            let x0 = x.saturating_sub(radius);
            let x1 = (x + radius).min(w - 1) + 1;
            let sum = sat[y1 * stride + x1] - sat[y0 * stride + x1] - sat[y1 * stride + x0]
                + sat[y0 * stride + x0];
            let count = ((y1 - y0) * (x1 - x0)) as f64;
            out.push(sum / count);
        }
    }
    Plane::from_data(w, h, out)
}

/// Solve the guided filter's local linear model for every window.
///
/// For the window centred on each pixel: `a = cov(g, p) / (var(g) + ε)`
/// and `b = mean(p) − a · mean(g)`, with variance and covariance taken as
/// population statistics over the (border-shrunk) window.  A window whose
/// damped variance is not positive carries no usable slope, so it falls
/// back to `a = 0` (pure offset) rather than dividing by rounding noise.
pub fn linear_coefficients(
    input: &Plane,
    guide: &Plane,
    params: GuidedFilterParams,
) -> Result<LinearCoefficients> {
    input.check_same_size(guide)?;
    let r = params.radius();
    let eps = params.epsilon();
    let mean_g = box_mean(guide, r);
    let mean_p = box_mean(input, r);
    let mean_gg = box_mean(&guide.zip_map(guide, |a, b| a * b), r);
    let mean_gp = box_mean(&guide.zip_map(input, |a, b| a * b), r);

    let n = input.len();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for idx in 0..n {
        let mg = mean_g.data()[idx];
        let mp = mean_p.data()[idx];
        let var = mean_gg.data()[idx] - mg * mg;
        let cov = mean_gp.data()[idx] - mg * mp;
        let denom = var + eps;
        let ai = if denom > 0.0 { cov / denom } else { 0.0 };
        a.push(ai);
        b.push(mp - ai * mg);
    }
    Ok(LinearCoefficients {
        a: Plane::from_data(input.width(), input.height(), a),
        b: Plane::from_data(input.width(), input.height(), b),
    })
}

/// Edge-preserving smoothing of `input` steered by `guide`.
///
/// Averages the per-window linear coefficients over every window covering
/// each pixel and evaluates `q = ā·g + b̄`, clamped to `[0, 1]`.  With
/// `guide = input` and `ε = 0` this is the identity wherever the image has
/// local variance, which is what makes the low/high split lossless.
pub fn guided_filter(input: &Plane, guide: &Plane, params: GuidedFilterParams) -> Result<Plane> {
    let coeffs = linear_coefficients(input, guide, params)?;
    let mean_a = box_mean(&coeffs.a, params.radius());
    let mean_b = box_mean(&coeffs.b, params.radius());
    let mut out = Vec::with_capacity(input.len());
    for idx in 0..input.len() {
        let q = mean_a.data()[idx] * guide.data()[idx] + mean_b.data()[idx];
        out.push(q.clamp(0.0, 1.0));
    }
    Ok(Plane::from_data(input.width(), input.height(), out))
}

/// Split an intensity plane into a smooth base and a signed detail plane.
///
/// `low` is the self-guided filter output; `high = i − low` and is left
/// unclamped because detail is signed.  `low + high` reconstructs the
/// input by construction.
pub fn decompose(i: &Plane, params: GuidedFilterParams) -> (Plane, Plane) {
    let low = guided_filter(i, i, params).expect("self-guided planes always match in size");
    let high = i.zip_map(&low, |v, l| v - l);
    (low, high)
}

/// Convolve with reflect-at-border padding.
///
/// The accumulator works relative to the centre sample
/// (`Σ w·(x − x_c) + x_c·Σw`), which is algebraically identical to the
/// direct sum but makes zero-sum kernels return exactly 0 on constant
/// regions — rounding residue there would otherwise be amplified to full
/// scale by per-image-max edge normalization.
pub fn convolve(p: &Plane, kernel: &Kernel) -> Plane {
    let (w, h) = (p.width(), p.height());
    let half = (kernel.size() / 2) as isize;
    let weight_sum = kernel.weight_sum();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let center = p.get(x as usize, y as usize);
            let mut acc = 0.0;
            for ky in -half..=half {
                let sy = reflect_index(y + ky, h);
                for kx in -half..=half {
                    let sx = reflect_index(x + kx, w);
                    acc += kernel.weight((kx + half) as usize, (ky + half) as usize)
                        * (p.get(sx, sy) - center);
                }
            }
            out.push(acc + center * weight_sum);
        }
    }
    Plane::from_data(w, h, out)
}

/// Absolute Laplacian response scaled into `[0, 1]`.
///
/// Convolves with the given kernel (reflect padding), takes the absolute
/// value, and divides by the normalization scale chosen by `norm`.  If the
/// scale is 0 (a flat image under [`EdgeNorm::PerImageMax`]) the map is
/// all zeros.
pub fn laplacian_edge_map(i: &Plane, kernel: &Kernel, norm: EdgeNorm) -> Plane {
    let response = convolve(i, kernel).map(f64::abs);
    let scale = match norm {
        EdgeNorm::TheoreticalMax => kernel.max_response(),
        EdgeNorm::PerImageMax => {
            let mut max = 0.0f64;
            for &v in response.data() {
                max = max.max(v);
            }
            max
        }
    };
    if scale > 0.0 {
        response.map(|v| (v / scale).clamp(0.0, 1.0))
    } else {
        response
    }
}

/// Separable Gaussian blur with reflect padding.
///
/// The kernel is truncated at `±⌈3σ⌉` and renormalized to sum 1, so
/// constants pass through and total mass is preserved away from borders.
pub fn gaussian_blur(p: &Plane, sigma: f64) -> Plane {
    assert!(
        sigma.is_finite() && sigma > 0.0,
        "gaussian_blur sigma must be positive"
    );
    let radius = (3.0 * sigma).ceil() as usize;
    let mut weights = Vec::with_capacity(2 * radius + 1);
    let denom = 2.0 * sigma * sigma;
    for t in -(radius as isize)..=(radius as isize) {
        let tf = t as f64;
        weights.push((-tf * tf / denom).exp());
    }
    let mut sum = 0.0;
    for &w in &weights {
        sum += w;
    }
    for w in &mut weights {
        *w /= sum;
    }

    let (w, h) = (p.width(), p.height());
    let r = radius as isize;

    // Horizontal pass.
    let mut tmp = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for t in -r..=r {
                acc += weights[(t + r) as usize] * p.get(reflect_index(x + t, w), y);
            }
            tmp.push(acc);
        }
    }
    let tmp = Plane::from_data(w, h, tmp);

    // Vertical pass.
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w {
            let mut acc = 0.0;
            for t in -r..=r {
                acc += weights[(t + r) as usize] * tmp.get(x, reflect_index(y + t, h));
            }
            out.push(acc);
        }
    }
    Plane::from_data(w, h, out)
}
