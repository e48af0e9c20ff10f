//! Separable Gaussian blur with border renormalization.
//!
//! The 1-D kernel is applied horizontally then vertically. Near the border
//! the kernel is renormalized over the taps that fall inside the canvas, so
//! constants are preserved exactly and no out-of-canvas energy is invented.

use crate::error::Result;
use crate::raster::{check_odd, RasterImage, SoftMask};

/// The conventional size-to-sigma rule used when no sigma is given.
pub fn default_sigma(size: usize) -> f64 {
    0.3 * ((size as f64 - 1.0) * 0.5 - 1.0) + 0.8
}

/// Normalized 1-D Gaussian taps for an odd `size`, evaluated at integer
/// offsets from the center. `sigma = None` applies [`default_sigma`].
pub fn gaussian_kernel_weights(size: usize, sigma: Option<f64>) -> Result<Vec<f64>> {
    check_odd(size)?;
    if size == 1 {
        return Ok(vec![1.0]);
    }
    let sigma = sigma.unwrap_or_else(|| default_sigma(size));
    let center = (size as f64 - 1.0) / 2.0;
    let mut weights: Vec<f64> = (0..size)
        .map(|i| {
            let x = i as f64 - center;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    Ok(weights)
}

pub fn gaussian_blur_image(img: &RasterImage, size: usize, sigma: Option<f64>) -> Result<RasterImage> {
    let weights = gaussian_kernel_weights(size, sigma)?;
    if size == 1 {
        return Ok(img.clone());
    }
    let planes: Vec<Vec<f32>> = (0..img.channels())
        .map(|c| blur_plane(&img.plane(c), img.height(), img.width(), &weights))
        .collect();
    RasterImage::from_planes(img.height(), img.width(), &planes)
}

pub fn gaussian_blur_mask(mask: &SoftMask, size: usize, sigma: Option<f64>) -> Result<SoftMask> {
    let weights = gaussian_kernel_weights(size, sigma)?;
    if size == 1 {
        return Ok(mask.clone());
    }
    let data = blur_plane(mask.data(), mask.height(), mask.width(), &weights);
    SoftMask::new(mask.height(), mask.width(), data)
}

pub(crate) fn blur_plane(data: &[f32], h: usize, w: usize, weights: &[f64]) -> Vec<f32> {
    let radius = weights.len() / 2;
    let mut tmp = vec![0.0f32; h * w];
    for y in 0..h {
        convolve_line(&data[y * w..(y + 1) * w], 1, w, weights, radius, &mut tmp[y * w..(y + 1) * w], 1);
    }
    let mut out = vec![0.0f32; h * w];
    for x in 0..w {
        convolve_line(&tmp[x..], w, h, weights, radius, &mut out[x..], w);
    }
    out
}

fn convolve_line(
    src: &[f32],
    src_stride: usize,
    len: usize,
    weights: &[f64],
    radius: usize,
    dst: &mut [f32],
    dst_stride: usize,
) {
    for i in 0..len {
        let mut acc = 0.0f64;
        let mut wsum = 0.0f64;
        for (k, wk) in weights.iter().enumerate() {
            let j = i as isize + k as isize - radius as isize;
            if j < 0 || j >= len as isize {
                continue;
            }
            acc += wk * src[j as usize * src_stride] as f64;
            wsum += wk;
        }
        dst[i * dst_stride] = (acc / wsum) as f32;
    }
}
