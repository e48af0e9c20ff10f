//! Boundary-weighted flow-matching loss.
//!
//! The boundary band is the dilation-minus-erosion ring around the region
//! mask. During training the per-cell flow-matching loss is upweighted by
//! `1 + alpha * band`, with the band resized to the latent grid by area
//! averaging so fractional coverage survives the downscale.

mod toy;

pub use toy::{train_toy_predictor, ToyOutcome, ToyTrainConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{dilate, erode, BinaryMask, SoftMask};

/// A C x H x W grid of finite reals, the latent-space counterpart of
/// [`crate::raster::RasterImage`]. Stored channel-major in `f64` since loss
/// verification needs more headroom than image intensities do.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGrid {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl LatentGrid {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::ShapeMismatch(format!(
                "latent data length {} does not match {channels}x{height}x{width}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("latent values must be finite".into()));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self::new(channels, height, width, data)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of spatial cells (channels not counted).
    pub fn cells(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn same_shape(&self, other: &LatentGrid) -> bool {
        self.channels == other.channels && self.height == other.height && self.width == other.width
    }

    fn check_shape(&self, other: &LatentGrid, what: &str) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch(format!(
                "{what}: {}x{}x{} vs {}x{}x{}",
                self.channels, self.height, self.width, other.channels, other.height, other.width
            )));
        }
        Ok(())
    }
}

/// Boundary-band geometry and the loss weight applied inside the band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BandParams {
    pub r_out: usize,
    pub r_in: usize,
    pub alpha: f64,
}

impl Default for BandParams {
    // Kernel sizes round the published 16 up to the nearest odd so the
    // structuring element has a center pixel.
    fn default() -> Self {
        Self {
            r_out: 17,
            r_in: 17,
            alpha: 9.0,
        }
    }
}

/// The ring `dilate(mask, r_out) AND NOT erode(mask, r_in)`. Contains the
/// mask boundary; empty for an empty mask, and empty again when both kernels
/// are 1 (identity minus identity).
pub fn boundary_band(mask: &BinaryMask, params: &BandParams) -> Result<BinaryMask> {
    if params.alpha < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "band alpha must be >= 0, got {}",
            params.alpha
        )));
    }
    let outer = dilate(mask, params.r_out)?;
    let inner = erode(mask, params.r_in)?;
    outer.difference(&inner)
}

/// Linear interpolant between a data latent `z0` and a noise latent `z1`:
/// `z_t = t*z0 + (1-t)*z1` with constant velocity target `v_t = z0 - z1`.
pub fn flow_interpolate(z0: &LatentGrid, z1: &LatentGrid, t: f64) -> Result<(LatentGrid, LatentGrid)> {
    z0.check_shape(z1, "flow_interpolate")?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!("t={t} outside [0, 1]")));
    }
    let zt = LatentGrid {
        channels: z0.channels,
        height: z0.height,
        width: z0.width,
        data: z0
            .data
            .iter()
            .zip(&z1.data)
            .map(|(a, b)| t * a + (1.0 - t) * b)
            .collect(),
    };
    let vt = LatentGrid {
        channels: z0.channels,
        height: z0.height,
        width: z0.width,
        data: z0.data.iter().zip(&z1.data).map(|(a, b)| a - b).collect(),
    };
    Ok((zt, vt))
}

/// Per-cell squared error between predicted and target velocity, summed over
/// channels. Always a single-channel grid.
pub fn base_loss_map(v_pred: &LatentGrid, v_target: &LatentGrid) -> Result<LatentGrid> {
    v_pred.check_shape(v_target, "base_loss_map")?;
    let mut out = LatentGrid::zeros(1, v_pred.height, v_pred.width);
    for c in 0..v_pred.channels {
        for y in 0..v_pred.height {
            for x in 0..v_pred.width {
                let d = v_pred.get(c, y, x) - v_target.get(c, y, x);
                let cur = out.get(0, y, x);
                out.set(0, y, x, cur + d * d);
            }
        }
    }
    Ok(out)
}

/// Area-average the band down (or up) to the latent grid's resolution,
/// keeping fractional coverage instead of re-binarizing.
pub fn resize_band(band: &BinaryMask, out_h: usize, out_w: usize) -> Result<SoftMask> {
    band.to_soft().resize_area(out_h, out_w)
}

/// Boundary-weighted objective: mean over cells of
/// `loss_map * (1 + alpha * band)`. With `alpha = 0` this is the plain mean
/// of the base loss map.
pub fn weighted_loss(loss_map: &LatentGrid, band: &SoftMask, alpha: f64) -> Result<f64> {
    check_band(loss_map, band)?;
    let n = loss_map.cells() as f64;
    let mut acc = 0.0f64;
    for y in 0..loss_map.height {
        for x in 0..loss_map.width {
            acc += loss_map.get(0, y, x) * (1.0 + alpha * band.get(y, x) as f64);
        }
    }
    Ok(acc / n)
}

fn check_band(loss_map: &LatentGrid, band: &SoftMask) -> Result<()> {
    if loss_map.channels != 1 {
        return Err(Error::ShapeMismatch(format!(
            "loss map must be single-channel, got {}",
            loss_map.channels
        )));
    }
    if band.height() != loss_map.height || band.width() != loss_map.width {
        return Err(Error::ShapeMismatch(format!(
            "band {}x{} vs loss map {}x{}",
            band.height(),
            band.width(),
            loss_map.height,
            loss_map.width
        )));
    }
    Ok(())
}

/// Analytic gradient of [`weighted_loss`]∘[`base_loss_map`] with respect to
/// the prediction: `(2/N) * (1 + alpha*band) * (v_pred - v_target)`.
pub fn loss_gradient(
    v_pred: &LatentGrid,
    v_target: &LatentGrid,
    band: &SoftMask,
    alpha: f64,
) -> Result<LatentGrid> {
    v_pred.check_shape(v_target, "loss_gradient")?;
    if band.height() != v_pred.height || band.width() != v_pred.width {
        return Err(Error::ShapeMismatch(format!(
            "band {}x{} vs prediction {}x{}",
            band.height(),
            band.width(),
            v_pred.height,
            v_pred.width
        )));
    }
    let n = v_pred.cells() as f64;
    let mut out = LatentGrid::zeros(v_pred.channels, v_pred.height, v_pred.width);
    for c in 0..v_pred.channels {
        for y in 0..v_pred.height {
            for x in 0..v_pred.width {
                let weight = 1.0 + alpha * band.get(y, x) as f64;
                let g = 2.0 / n * weight * (v_pred.get(c, y, x) - v_target.get(c, y, x));
                out.set(c, y, x, g);
            }
        }
    }
    Ok(out)
}

/// Verify the analytic gradient against central finite differences; returns
/// the maximum relative error over all coordinates.
pub fn gradient_check(
    v_pred: &LatentGrid,
    v_target: &LatentGrid,
    band: &SoftMask,
    alpha: f64,
) -> Result<f64> {
    let analytic = loss_gradient(v_pred, v_target, band, alpha)?;
    let eval = |v: &LatentGrid| -> Result<f64> {
        weighted_loss(&base_loss_map(v, v_target)?, band, alpha)
    };
    let step = 1e-4;
    let mut max_rel = 0.0f64;
    let mut probe = v_pred.clone();
    for i in 0..probe.data.len() {
        let orig = probe.data[i];
        probe.data[i] = orig + step;
        let up = eval(&probe)?;
        probe.data[i] = orig - step;
        let down = eval(&probe)?;
        probe.data[i] = orig;
        let fd = (up - down) / (2.0 * step);
        let a = analytic.data[i];
        let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-12);
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}
