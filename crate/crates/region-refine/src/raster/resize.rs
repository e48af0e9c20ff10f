//! Resampling kernels: half-pixel-centered bilinear, nearest neighbor, and
//! exact area averaging.
//!
//! Source coordinates use the half-pixel convention
//! `src = (dst + 0.5) * in/out - 0.5` with edge clamping. Resizing to the
//! input shape is a bit-identical copy for every mode.

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, RasterImage, ResizeMode, SoftMask};

fn check_dims(out_h: usize, out_w: usize) -> Result<()> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidParameter(format!(
            "resize target {out_h}x{out_w} must be at least 1x1"
        )));
    }
    Ok(())
}

/// Per-axis bilinear taps: left index, right index, right-weight.
fn bilinear_axis(n_in: usize, n_out: usize) -> Vec<(usize, usize, f64)> {
    let scale = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|d| {
            let src = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_in - 1) as f64);
            let lo = src.floor() as usize;
            let hi = (lo + 1).min(n_in - 1);
            (lo, hi, src - lo as f64)
        })
        .collect()
}

fn nearest_axis(n_in: usize, n_out: usize) -> Vec<usize> {
    let scale = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|d| {
            let src = (d as f64 + 0.5) * scale - 0.5;
            (src.round().max(0.0) as usize).min(n_in - 1)
        })
        .collect()
}

pub(crate) fn resize_plane_bilinear(
    src: &[f32],
    h: usize,
    w: usize,
    out_h: usize,
    out_w: usize,
) -> Vec<f32> {
    let xs = bilinear_axis(w, out_w);
    let ys = bilinear_axis(h, out_h);
    let mut out = Vec::with_capacity(out_h * out_w);
    for (y0, y1, fy) in &ys {
        for (x0, x1, fx) in &xs {
            let p00 = src[y0 * w + x0] as f64;
            let p01 = src[y0 * w + x1] as f64;
            let p10 = src[y1 * w + x0] as f64;
            let p11 = src[y1 * w + x1] as f64;
            let top = p00 + fx * (p01 - p00);
            let bot = p10 + fx * (p11 - p10);
            out.push((top + fy * (bot - top)) as f32);
        }
    }
    out
}

/// Exact box-overlap area average, valid for both down- and upscaling.
/// All-ones input stays all-ones at any output resolution.
pub(crate) fn resize_plane_area(
    src: &[f32],
    h: usize,
    w: usize,
    out_h: usize,
    out_w: usize,
) -> Vec<f32> {
    let spans_x = area_axis(w, out_w);
    let spans_y = area_axis(h, out_h);
    let mut out = Vec::with_capacity(out_h * out_w);
    for (ys, yw) in &spans_y {
        for (xs, xw) in &spans_x {
            let mut acc = 0.0f64;
            let mut total = 0.0f64;
            for (y, wy) in ys.clone().zip(yw) {
                for (x, wx) in xs.clone().zip(xw) {
                    let weight = wy * wx;
                    acc += weight * src[y * w + x] as f64;
                    total += weight;
                }
            }
            out.push((acc / total) as f32);
        }
    }
    out
}

type AxisSpan = (std::ops::Range<usize>, Vec<f64>);

/// Overlap lengths between output cell `[d, d+1) * in/out` and input cells.
fn area_axis(n_in: usize, n_out: usize) -> Vec<AxisSpan> {
    let scale = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|d| {
            let lo = d as f64 * scale;
            let hi = (d as f64 + 1.0) * scale;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(n_in).max(first + 1);
            let weights = (first..last)
                .map(|i| {
                    let cell_lo = i as f64;
                    let cell_hi = cell_lo + 1.0;
                    (hi.min(cell_hi) - lo.max(cell_lo)).max(0.0)
                })
                .collect();
            (first..last, weights)
        })
        .collect()
}

pub(crate) fn resize_image(
    img: &RasterImage,
    out_h: usize,
    out_w: usize,
    mode: ResizeMode,
) -> Result<RasterImage> {
    check_dims(out_h, out_w)?;
    if out_h == img.height() && out_w == img.width() {
        return Ok(img.clone());
    }
    match mode {
        ResizeMode::Bilinear => {
            let planes: Vec<Vec<f32>> = (0..img.channels())
                .map(|c| resize_plane_bilinear(&img.plane(c), img.height(), img.width(), out_h, out_w))
                .collect();
            RasterImage::from_planes(out_h, out_w, &planes)
        }
        ResizeMode::Nearest => {
            let xs = nearest_axis(img.width(), out_w);
            let ys = nearest_axis(img.height(), out_h);
            RasterImage::from_fn(out_h, out_w, img.channels(), |y, x, c| {
                img.get(ys[y], xs[x], c)
            })
        }
    }
}

pub(crate) fn resize_mask_nearest(
    mask: &BinaryMask,
    out_h: usize,
    out_w: usize,
) -> Result<BinaryMask> {
    check_dims(out_h, out_w)?;
    if out_h == mask.height() && out_w == mask.width() {
        return Ok(mask.clone());
    }
    let xs = nearest_axis(mask.width(), out_w);
    let ys = nearest_axis(mask.height(), out_h);
    Ok(BinaryMask::from_fn(out_h, out_w, |y, x| {
        mask.get(ys[y], xs[x]) == 1
    }))
}

pub(crate) fn resize_soft_bilinear(mask: &SoftMask, out_h: usize, out_w: usize) -> Result<SoftMask> {
    check_dims(out_h, out_w)?;
    if out_h == mask.height() && out_w == mask.width() {
        return Ok(mask.clone());
    }
    let data = resize_plane_bilinear(mask.data(), mask.height(), mask.width(), out_h, out_w);
    SoftMask::new(out_h, out_w, data)
}

pub(crate) fn resize_soft_area(mask: &SoftMask, out_h: usize, out_w: usize) -> Result<SoftMask> {
    check_dims(out_h, out_w)?;
    if out_h == mask.height() && out_w == mask.width() {
        return Ok(mask.clone());
    }
    let data = resize_plane_area(mask.data(), mask.height(), mask.width(), out_h, out_w);
    SoftMask::new(out_h, out_w, data)
}
