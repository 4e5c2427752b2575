//! Image containers: byte-valued RGB rasters and float-valued planes.
//!
//! All processing happens on [`Plane`]s holding `f64` samples in `[0, 1]`;
//! [`Raster`] is the 8-bit RGB form used at the file boundary.  Conversions
//! between the two are centralised here so that quantisation behaves the
//! same everywhere: bytes map to `v / 255` and floats map back via clamp to
//! `[0, 1]` followed by `round()` (ties away from zero).

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};

use crate::error::{Error, Result};

/// An 8-bit RGB image stored row-major as `[r, g, b, r, g, b, ...]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

/// A single channel of `f64` samples, row-major.
///
/// Samples are nominally in `[0, 1]` but the type does not enforce it;
/// intermediate products (gradients, gain maps, detail planes) routinely
/// leave that range.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

/// Convert a byte sample to a unit-interval float.
#[inline]
pub fn to_unit(v: u8) -> f64 {
    f64::from(v) / 255.0
}

/// Convert a unit-interval float back to a byte: clamp to `[0, 1]`, scale
/// by 255 and round to nearest (ties away from zero).
#[inline]
pub fn from_unit(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

impl Raster {
    /// Build a raster from interleaved RGB bytes.
    ///
    /// # Panics
    /// Panics if `data.len() != width * height * 3`.
    pub fn from_rgb_bytes(width: usize, height: usize, data: Vec<u8>) -> Self {
        assert_eq!(
            data.len(),
            width * height * 3,
            "rgb buffer length must be width * height * 3"
        );
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Interleaved RGB bytes, row-major.
    pub fn bytes(&self) -> &[u8] {
        &self.data
    }

    /// The `(r, g, b)` triple at `(x, y)`.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> (u8, u8, u8) {
        let i = (y * self.width + x) * 3;
        (self.data[i], self.data[i + 1], self.data[i + 2])
    }

    /// Decode an image file into an 8-bit RGB raster.
    ///
    /// Any format the `image` crate recognises is accepted as long as the
    /// samples are 8-bit; higher bit depths are rejected rather than
    /// silently truncated.
    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|source| match source {
            image::ImageError::IoError(e) => Error::Io {
                path: path.to_path_buf(),
                source: e,
            },
            other => Error::Decode {
                path: path.to_path_buf(),
                source: other,
            },
        })?;
        match img.color() {
            image::ColorType::L8
            | image::ColorType::La8
            | image::ColorType::Rgb8
            | image::ColorType::Rgba8 => {}
            color => {
                return Err(Error::UnsupportedBitDepth {
                    path: path.to_path_buf(),
                    color,
                })
            }
        }
        let rgb = img.into_rgb8();
        let (w, h) = (rgb.width() as usize, rgb.height() as usize);
        Ok(Self {
            width: w,
            height: h,
            data: rgb.into_raw(),
        })
    }

    /// Encode to `path`, picking the format from the file extension
    /// (PNG when the extension is missing or unknown).
    pub fn save(&self, path: &Path) -> Result<()> {
        let buf: ImageBuffer<Rgb<u8>, Vec<u8>> = ImageBuffer::from_raw(
            self.width as u32,
            self.height as u32,
            self.data.clone(),
        )
        .expect("raster buffer length is consistent by construction");
        save_dynamic(DynamicImage::ImageRgb8(buf), path)
    }

    /// The intensity plane: per-pixel channel average `(r + g + b) / 3`
    /// on the unit scale.  This matches the intensity component of the
    /// HSI decomposition without computing hue or saturation.
    pub fn intensity(&self) -> Plane {
        let data = self
            .data
            .chunks_exact(3)
            .map(|px| (to_unit(px[0]) + to_unit(px[1]) + to_unit(px[2])) / 3.0)
            .collect();
        Plane {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Extract one channel (0 = R, 1 = G, 2 = B) as a unit-interval plane.
    pub fn channel(&self, c: usize) -> Plane {
        assert!(c < 3, "channel index out of range");
        let data = self
            .data
            .chunks_exact(3)
            .map(|px| to_unit(px[c]))
            .collect();
        Plane {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

impl Plane {
    /// Build a plane from row-major samples.
    ///
    /// # Panics
    /// Panics if `data.len() != width * height`.
    pub fn from_data(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            width * height,
            "plane buffer length must be width * height"
        );
        Self {
            width,
            height,
            data,
        }
    }

    /// A plane of the given size filled with `value`.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// True when both planes have the same width and height.
    pub fn same_size(&self, other: &Plane) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Error out unless both planes have the same dimensions.
    pub fn check_same_size(&self, other: &Plane) -> Result<()> {
        if self.same_size(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            })
        }
    }

    /// Elementwise map into a new plane.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two same-sized planes.
    ///
    /// # Panics
    /// Panics if the sizes differ; callers validate sizes at the API
    /// boundary and internal call sites construct matching planes.
    pub fn zip_map(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Plane {
        assert!(self.same_size(other), "zip_map requires equal plane sizes");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Plane {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Arithmetic mean over all samples (0 for an empty plane).
    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        let mut sum = 0.0;
        for &v in &self.data {
            sum += v;
        }
        sum / self.data.len() as f64
    }

    /// Quantise to bytes and save as an 8-bit grayscale image; format is
    /// chosen from the extension as in [`Raster::save`].
    pub fn save_gray(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self.data.iter().map(|&v| from_unit(v)).collect();
        let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
            ImageBuffer::from_raw(self.width as u32, self.height as u32, bytes)
                .expect("plane buffer length is consistent by construction");
        save_dynamic(DynamicImage::ImageLuma8(buf), path)
    }

    /// Load a file and collapse it to its intensity plane (per-pixel
    /// channel average on the unit scale).
    pub fn load_gray(path: &Path) -> Result<Plane> {
        Ok(Raster::load(path)?.intensity())
    }
}

fn save_dynamic(img: DynamicImage, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() && !parent.exists() {
            return Err(Error::Io {
                path: path.to_path_buf(),
                source: std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("directory {} does not exist", parent.display()),
                ),
            });
        }
    }
    let format = image::ImageFormat::from_path(path).unwrap_or(image::ImageFormat::Png);
    img.save_with_format(path, format)
        .map_err(|source| match source {
            image::ImageError::IoError(e) => Error::Io {
                path: path.to_path_buf(),
                source: e,
            },
            other => Error::Encode {
                path: path.to_path_buf(),
                source: other,
            },
        })
}
