//! Blended-mask construction and seamless paste-back.
//!
//! The blend mask is the region mask dilated then Gaussian-blurred, giving a
//! soft alpha that is 1 deep inside the region and 0 well outside it. Paste-
//! back applies the refined crop to the full canvas through that alpha while
//! guaranteeing that every pixel with zero alpha keeps its original bits.
//!
//! To make that guarantee hold through the crop-resolution round trip, the
//! default mode blends the *refinement delta* over the original pixels: the
//! refined crop and the original's own crop-and-resized baseline are both
//! resampled back to the crop rectangle, and `alpha * (refined - baseline)`
//! is added to the untouched canvas. Content the refiner did not change
//! contributes an exactly-zero delta, so an identity refinement returns the
//! input image byte-for-byte instead of a resampled copy. A literal
//! crop-resolution compositing order is available as [`PasteBackMode::CropComposite`]
//! for comparison; it resamples the background inside the rectangle and
//! therefore cannot keep it bit-exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::focus::{crop_image, CropSpec};
use crate::raster::{
    composite, dilate, gaussian_blur_mask, BinaryMask, RasterImage, ResizeMode, SoftMask,
};

/// Dilation and blur kernel sizes for the paste-back blend mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlendParams {
    pub dilate_size: usize,
    pub blur_size: usize,
    pub sigma: Option<f64>,
}

impl Default for BlendParams {
    fn default() -> Self {
        Self {
            dilate_size: 7,
            blur_size: 11,
            sigma: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PasteBackMode {
    /// Blend the refinement delta into the full-resolution canvas (default;
    /// bit-exact background, identity-preserving).
    #[default]
    CanvasBlend,
    /// Composite at crop resolution, then resize the composited crop and
    /// paste the rectangle verbatim. Resamples background pixels inside the
    /// rectangle; kept for comparison.
    CropComposite,
}

/// Soft blend mask: Gaussian-blurred dilation of the binary region mask.
///
/// The result is 1 wherever the whole blur window sits inside the dilated
/// mask and 0 wherever the window misses it entirely.
pub fn blend_mask(mask: &BinaryMask, params: &BlendParams) -> Result<SoftMask> {
    let dilated = dilate(mask, params.dilate_size)?;
    gaussian_blur_mask(&dilated.to_soft(), params.blur_size, params.sigma)
}

/// The blend alpha at full canvas resolution: zero outside the crop
/// rectangle, the bilinearly resized blend mask inside it.
pub fn canvas_soft_mask(
    mask_c: &BinaryMask,
    spec: &CropSpec,
    params: &BlendParams,
) -> Result<SoftMask> {
    check_crop_mask(mask_c, spec)?;
    let soft = blend_mask(mask_c, params)?;
    let rect = &spec.rect;
    let resized = soft.resize_bilinear(rect.height(), rect.width())?;
    let mut out = SoftMask::zeros(spec.canvas.h, spec.canvas.w);
    for y in 0..rect.height() {
        for x in 0..rect.width() {
            out.set(rect.y1 + y, rect.x1 + x, resized.get(y, x));
        }
    }
    Ok(out)
}

fn check_crop_mask(mask_c: &BinaryMask, spec: &CropSpec) -> Result<()> {
    if mask_c.height() != spec.target.h || mask_c.width() != spec.target.w {
        return Err(Error::ShapeMismatch(format!(
            "crop mask {}x{} vs target {}x{}",
            mask_c.height(),
            mask_c.width(),
            spec.target.h,
            spec.target.w
        )));
    }
    Ok(())
}

/// Paste a refined crop back onto the full canvas through the blend mask.
///
/// `refined_crop` and `mask_c` live at `spec.target` resolution. Every pixel
/// whose resized blend alpha is exactly zero, including everything outside
/// the crop rectangle, is returned bit-identical to `original_full`; so is
/// the whole canvas whenever the refined crop matches the original's
/// focused baseline.
pub fn paste_back(
    original_full: &RasterImage,
    refined_crop: &RasterImage,
    mask_c: &BinaryMask,
    spec: &CropSpec,
    params: &BlendParams,
    mode: PasteBackMode,
) -> Result<RasterImage> {
    if original_full.height() != spec.canvas.h || original_full.width() != spec.canvas.w {
        return Err(Error::ShapeMismatch(format!(
            "canvas {}x{} vs spec {}x{}",
            original_full.height(),
            original_full.width(),
            spec.canvas.h,
            spec.canvas.w
        )));
    }
    if refined_crop.height() != spec.target.h
        || refined_crop.width() != spec.target.w
        || refined_crop.channels() != original_full.channels()
    {
        return Err(Error::ShapeMismatch(format!(
            "refined crop {}x{}x{} vs target {}x{}x{}",
            refined_crop.height(),
            refined_crop.width(),
            refined_crop.channels(),
            spec.target.h,
            spec.target.w,
            original_full.channels()
        )));
    }
    check_crop_mask(mask_c, spec)?;

    let rect = &spec.rect;
    let soft = blend_mask(mask_c, params)?;
    let baseline = crop_image(original_full, rect)?.resize(
        spec.target.h,
        spec.target.w,
        ResizeMode::Bilinear,
    )?;

    match mode {
        PasteBackMode::CanvasBlend => {
            let refined_rect = refined_crop.resize(rect.height(), rect.width(), ResizeMode::Bilinear)?;
            let baseline_rect = baseline.resize(rect.height(), rect.width(), ResizeMode::Bilinear)?;
            let alpha = soft.resize_bilinear(rect.height(), rect.width())?;
            let mut out = original_full.clone();
            for y in 0..rect.height() {
                for x in 0..rect.width() {
                    let al = alpha.get(y, x);
                    if al == 0.0 {
                        continue;
                    }
                    for c in 0..out.channels() {
                        let delta = al * (refined_rect.get(y, x, c) - baseline_rect.get(y, x, c));
                        if delta != 0.0 {
                            let cy = rect.y1 + y;
                            let cx = rect.x1 + x;
                            let v = (out.get(cy, cx, c) + delta).clamp(0.0, 1.0);
                            out.set(cy, cx, c, v);
                        }
                    }
                }
            }
            Ok(out)
        }
        PasteBackMode::CropComposite => {
            let composited = composite(refined_crop, &baseline, &soft)?;
            let patch = composited.resize(rect.height(), rect.width(), ResizeMode::Bilinear)?;
            crate::focus::paste_rect(original_full, &patch, rect)
        }
    }
}
