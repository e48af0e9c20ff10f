//! Core image and mask types plus the raster kernels everything else builds on.
//!
//! Images are stored as row-major, channel-interleaved `f32` intensities in
//! `[0, 1]`. Masks come in two flavors: strictly binary ([`BinaryMask`]) and
//! soft `[0, 1]` alpha ([`SoftMask`]). All operations here are pure functions
//! over immutable inputs and are safe to call concurrently.

mod blur;
mod io;
mod morph;
mod resize;

pub use blur::{gaussian_blur_image, gaussian_blur_mask, gaussian_kernel_weights, default_sigma};
pub use io::write_soft_mask_png;
pub use morph::{dilate, erode};

pub(crate) use blur::blur_plane;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An H x W x C image of normalized intensities in `[0, 1]`.
///
/// `channels` is 1 (grayscale) or 3 (RGB). Data is row-major and
/// channel-interleaved: index `(y * width + x) * channels + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl RasterImage {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidParameter(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::ShapeMismatch(format!(
                "image data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "image intensity {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// Constant-valued image.
    pub fn splat(height: usize, width: usize, channels: usize, value: f32) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    /// Build from a per-pixel function `(y, x, c) -> intensity`.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(y, x, c));
                }
            }
        }
        Self::new(height, width, channels, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, value: f32) {
        self.data[(y * self.width + x) * self.channels + c] = value;
    }

    pub fn same_shape(&self, other: &RasterImage) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    /// One channel as a contiguous plane, for kernels that work plane-wise.
    pub(crate) fn plane(&self, c: usize) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.height * self.width);
        for px in 0..self.height * self.width {
            out.push(self.data[px * self.channels + c]);
        }
        out
    }

    pub(crate) fn from_planes(
        height: usize,
        width: usize,
        planes: &[Vec<f32>],
    ) -> Result<Self> {
        let channels = planes.len();
        let mut data = vec![0.0f32; height * width * channels];
        for (c, plane) in planes.iter().enumerate() {
            for px in 0..height * width {
                data[px * channels + c] = plane[px];
            }
        }
        Self::new(height, width, channels, data)
    }

    /// Resize with half-pixel-centered bilinear sampling or nearest neighbor.
    /// Resizing to the current shape returns a bit-identical copy.
    pub fn resize(&self, out_h: usize, out_w: usize, mode: ResizeMode) -> Result<RasterImage> {
        resize::resize_image(self, out_h, out_w, mode)
    }

    /// Exact per-element equality, including byte-level bit patterns.
    pub fn bit_eq(&self, other: &RasterImage) -> bool {
        self.same_shape(other)
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// A strictly binary {0, 1} region indicator with the same spatial shape as
/// the image it annotates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "mask data length {} does not match {height}x{width}",
                data.len()
            )));
        }
        if data.iter().any(|v| *v > 1) {
            return Err(Error::InvalidParameter(
                "mask values must be 0 or 1".into(),
            ));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0; height * width],
        }
    }

    pub fn ones(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![1; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x) as u8);
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, value: u8) {
        debug_assert!(value <= 1);
        self.data[y * self.width + x] = value;
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|v| *v == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|v| **v == 1).count()
    }

    pub fn same_shape(&self, other: &BinaryMask) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Pointwise AND.
    pub fn intersection(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a & b)
    }

    /// Pointwise AND NOT (set difference).
    pub fn difference(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a & (1 - b))
    }

    /// Pointwise OR.
    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a | b)
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(u8, u8) -> u8) -> Result<BinaryMask> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch(format!(
                "mask {}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Ok(BinaryMask {
            height: self.height,
            width: self.width,
            data,
        })
    }

    /// `self` covers no pixel outside `other`.
    pub fn subset_of(&self, other: &BinaryMask) -> bool {
        self.same_shape(other)
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| *a == 0 || *b == 1)
    }

    pub fn to_soft(&self) -> SoftMask {
        SoftMask {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| *v as f32).collect(),
        }
    }

    /// Nearest-neighbor resize; the result stays strictly binary.
    pub fn resize_nearest(&self, out_h: usize, out_w: usize) -> Result<BinaryMask> {
        resize::resize_mask_nearest(self, out_h, out_w)
    }
}

/// A `[0, 1]` alpha mask, the blended counterpart of [`BinaryMask`].
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMask {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl SoftMask {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "soft mask data length {} does not match {height}x{width}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "soft mask value {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, value: f32) {
        self.data[y * self.width + x] = value;
    }

    /// Bilinear resize with half-pixel centers; stays inside `[0, 1]`.
    pub fn resize_bilinear(&self, out_h: usize, out_w: usize) -> Result<SoftMask> {
        resize::resize_soft_bilinear(self, out_h, out_w)
    }

    /// Area-average resize producing fractional coverage, used when a band
    /// mask must be brought to a coarser grid without re-binarizing.
    pub fn resize_area(&self, out_h: usize, out_w: usize) -> Result<SoftMask> {
        resize::resize_soft_area(self, out_h, out_w)
    }
}

/// Kernel geometry for morphology and blur: square structuring elements of
/// odd side for dilate/erode, odd tap counts for the separable Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub size: usize,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Dilate,
    Erode,
    Gaussian,
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        check_odd(self.size)?;
        if self.kind == KernelKind::Gaussian {
            if let Some(s) = self.sigma {
                if !(s > 0.0) {
                    return Err(Error::InvalidParameter(format!("sigma must be > 0, got {s}")));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn check_odd(size: usize) -> Result<()> {
    if size == 0 || size % 2 == 0 {
        return Err(Error::BadKernelSize(size));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResizeMode {
    Bilinear,
    Nearest,
}

/// Alpha composite: `out = alpha * a + (1 - alpha) * b`, per pixel and
/// channel, with `alpha` broadcast over channels.
///
/// Exactness guarantees relied on elsewhere: `alpha == 0` returns `b`'s bits,
/// `alpha == 1` returns `a`'s bits, and pixels where `a == b` pass through
/// unchanged for any alpha.
pub fn composite(a: &RasterImage, b: &RasterImage, alpha: &SoftMask) -> Result<RasterImage> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch(format!(
            "composite inputs {}x{}x{} vs {}x{}x{}",
            a.height, a.width, a.channels, b.height, b.width, b.channels
        )));
    }
    if alpha.height != a.height || alpha.width != a.width {
        return Err(Error::ShapeMismatch(format!(
            "alpha {}x{} vs image {}x{}",
            alpha.height, alpha.width, a.height, a.width
        )));
    }
    let mut data = Vec::with_capacity(a.data.len());
    for px in 0..a.height * a.width {
        let al = alpha.data[px];
        for c in 0..a.channels {
            let idx = px * a.channels + c;
            let va = a.data[idx];
            let vb = b.data[idx];
            let v = if al == 0.0 {
                vb
            } else if al == 1.0 || va == vb {
                va
            } else {
                al * va + (1.0 - al) * vb
            };
            data.push(v);
        }
    }
    Ok(RasterImage {
        height: a.height,
        width: a.width,
        channels: a.channels,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_rejects_out_of_range() {
        assert!(RasterImage::new(1, 2, 1, vec![0.0, 1.5]).is_err());
        assert!(RasterImage::new(1, 2, 1, vec![0.0, f32::NAN]).is_err());
        assert!(RasterImage::new(1, 2, 1, vec![0.0]).is_err());
        assert!(RasterImage::new(1, 1, 2, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn mask_rejects_non_binary() {
        assert!(BinaryMask::new(1, 2, vec![0, 2]).is_err());
        assert!(BinaryMask::new(1, 2, vec![0, 1]).is_ok());
    }

    #[test]
    fn composite_alpha_one_returns_a_bits() {
        let a = RasterImage::from_fn(4, 5, 3, |y, x, c| ((y * 5 + x + c) % 7) as f32 / 7.0).unwrap();
        let b = RasterImage::splat(4, 5, 3, 0.25).unwrap();
        let ones = BinaryMask::ones(4, 5).to_soft();
        let out = composite(&a, &b, &ones).unwrap();
        assert!(out.bit_eq(&a));
    }

    #[test]
    fn composite_alpha_zero_returns_b_bits() {
        let a = RasterImage::splat(4, 5, 3, 0.8).unwrap();
        let b = RasterImage::from_fn(4, 5, 3, |y, x, c| ((y + x + c) % 5) as f32 / 5.0).unwrap();
        let zeros = SoftMask::zeros(4, 5);
        let out = composite(&a, &b, &zeros).unwrap();
        assert!(out.bit_eq(&b));
    }

    #[test]
    fn composite_constant_midpoint() {
        let a = RasterImage::splat(2, 2, 1, 1.0).unwrap();
        let b = RasterImage::splat(2, 2, 1, 0.0).unwrap();
        let half = SoftMask::new(2, 2, vec![0.5; 4]).unwrap();
        let out = composite(&a, &b, &half).unwrap();
        assert!(out.data().iter().all(|v| *v == 0.5));
    }

    #[test]
    fn composite_identical_layers_is_identity_for_any_alpha() {
        let a = RasterImage::from_fn(3, 3, 1, |y, x, _| ((y * 3 + x) as f32) / 9.0).unwrap();
        let alpha = SoftMask::new(3, 3, (0..9).map(|i| i as f32 / 8.0).collect()).unwrap();
        let out = composite(&a, &a, &alpha).unwrap();
        assert!(out.bit_eq(&a));
    }

    #[test]
    fn composite_shape_mismatch_errors() {
        let a = RasterImage::splat(2, 2, 1, 0.5).unwrap();
        let b = RasterImage::splat(2, 3, 1, 0.5).unwrap();
        let alpha = SoftMask::zeros(2, 2);
        assert!(matches!(
            composite(&a, &b, &alpha),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
