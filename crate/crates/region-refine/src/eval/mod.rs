//! Reference-based image metrics with foreground/background region splits.
//!
//! MSE is the mean squared intensity difference over a pixel region. SSIM is
//! the standard windowed form: 11x11 Gaussian window with sigma 1.5,
//! C1 = (0.01)^2 and C2 = (0.03)^2 on the unit dynamic range, computed per
//! channel and averaged. The SSIM map uses valid windows only; a region
//! restricts which window centers are averaged, which avoids window-boundary
//! bias at the fg/bg seam.

pub mod bench;

pub use bench::{aggregate_csv, run_benchmark, Aggregate, MetricReport, SampleRow};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::focus::BBox;
use crate::raster::{gaussian_kernel_weights, BinaryMask, RasterImage};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 1e-4; // (0.01)^2
pub const SSIM_C2: f64 = 9e-4; // (0.03)^2

fn check_pair(a: &RasterImage, b: &RasterImage) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch(format!(
            "metric inputs {}x{}x{} vs {}x{}x{}",
            a.height(),
            a.width(),
            a.channels(),
            b.height(),
            b.width(),
            b.channels()
        )));
    }
    Ok(())
}

fn check_region(img: &RasterImage, region: Option<&BinaryMask>) -> Result<()> {
    if let Some(mask) = region {
        if mask.height() != img.height() || mask.width() != img.width() {
            return Err(Error::ShapeMismatch(format!(
                "region {}x{} vs image {}x{}",
                mask.height(),
                mask.width(),
                img.height(),
                img.width()
            )));
        }
        if mask.is_empty() {
            return Err(Error::InvalidParameter("metric region is empty".into()));
        }
    }
    Ok(())
}

/// Mean squared difference over the region (default: all pixels) and
/// channels, on `[0, 1]` intensities.
pub fn mse(a: &RasterImage, b: &RasterImage, region: Option<&BinaryMask>) -> Result<f64> {
    check_pair(a, b)?;
    check_region(a, region)?;
    let mut acc = 0.0f64;
    let mut count = 0usize;
    for y in 0..a.height() {
        for x in 0..a.width() {
            if let Some(mask) = region {
                if mask.get(y, x) == 0 {
                    continue;
                }
            }
            for c in 0..a.channels() {
                let d = a.get(y, x, c) as f64 - b.get(y, x, c) as f64;
                acc += d * d;
                count += 1;
            }
        }
    }
    Ok(acc / count as f64)
}

/// Valid-window separable filter; output dims shrink by `window - 1`.
fn filter_valid(plane: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let vw = w - k + 1;
    let vh = h - k + 1;
    let mut horiz = vec![0.0f64; h * vw];
    for y in 0..h {
        for x in 0..vw {
            let mut acc = 0.0;
            for (j, tap) in taps.iter().enumerate() {
                acc += tap * plane[y * w + x + j];
            }
            horiz[y * vw + x] = acc;
        }
    }
    let mut out = vec![0.0f64; vh * vw];
    for y in 0..vh {
        for x in 0..vw {
            let mut acc = 0.0;
            for (j, tap) in taps.iter().enumerate() {
                acc += tap * horiz[(y + j) * vw + x];
            }
            out[y * vw + x] = acc;
        }
    }
    out
}

/// The channel-averaged SSIM map over valid window positions. Cell `(y, x)`
/// corresponds to the window centered at `(y + k/2, x + k/2)`.
fn ssim_map(a: &RasterImage, b: &RasterImage) -> Result<(Vec<f64>, usize, usize)> {
    let k = SSIM_WINDOW;
    if a.height() < k || a.width() < k {
        return Err(Error::InvalidParameter(format!(
            "image {}x{} smaller than the {k}x{k} SSIM window",
            a.height(),
            a.width()
        )));
    }
    let taps = gaussian_kernel_weights(k, Some(SSIM_SIGMA))?;
    let vh = a.height() - k + 1;
    let vw = a.width() - k + 1;
    let mut map = vec![0.0f64; vh * vw];
    for c in 0..a.channels() {
        let pa: Vec<f64> = a.data().iter().skip(c).step_by(a.channels()).map(|v| *v as f64).collect();
        let pb: Vec<f64> = b.data().iter().skip(c).step_by(b.channels()).map(|v| *v as f64).collect();
        let aa: Vec<f64> = pa.iter().map(|v| v * v).collect();
        let bb: Vec<f64> = pb.iter().map(|v| v * v).collect();
        let ab: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
        let mu_a = filter_valid(&pa, a.height(), a.width(), &taps);
        let mu_b = filter_valid(&pb, a.height(), a.width(), &taps);
        let e_aa = filter_valid(&aa, a.height(), a.width(), &taps);
        let e_bb = filter_valid(&bb, a.height(), a.width(), &taps);
        let e_ab = filter_valid(&ab, a.height(), a.width(), &taps);
        for i in 0..map.len() {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            let val = ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
            map[i] += val / a.channels() as f64;
        }
    }
    Ok((map, vh, vw))
}

/// Windowed SSIM, optionally restricted to map values whose window centers
/// fall inside `region`.
pub fn ssim(a: &RasterImage, b: &RasterImage, region: Option<&BinaryMask>) -> Result<f64> {
    check_pair(a, b)?;
    check_region(a, region)?;
    let (map, vh, vw) = ssim_map(a, b)?;
    let off = SSIM_WINDOW / 2;
    let mut acc = 0.0f64;
    let mut count = 0usize;
    for y in 0..vh {
        for x in 0..vw {
            if let Some(mask) = region {
                if mask.get(y + off, x + off) == 0 {
                    continue;
                }
            }
            acc += map[y * vw + x];
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InvalidParameter(
            "region contains no SSIM window centers".into(),
        ));
    }
    Ok(acc / count as f64)
}

/// The foreground box annotation and its complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionSplit {
    pub fg_box: BBox,
}

impl RegionSplit {
    pub fn new(fg_box: BBox, canvas_h: usize, canvas_w: usize) -> Result<Self> {
        if !fg_box.within_canvas(canvas_h, canvas_w) {
            return Err(Error::OutOfCanvas {
                x1: fg_box.x1,
                y1: fg_box.y1,
                x2: fg_box.x2,
                y2: fg_box.y2,
                h: canvas_h,
                w: canvas_w,
            });
        }
        Ok(Self { fg_box })
    }

    pub fn fg_mask(&self, h: usize, w: usize) -> BinaryMask {
        BinaryMask::from_fn(h, w, |y, x| self.fg_box.contains_point(x, y))
    }

    pub fn bg_mask(&self, h: usize, w: usize) -> BinaryMask {
        BinaryMask::from_fn(h, w, |y, x| !self.fg_box.contains_point(x, y))
    }
}

/// Per-sample metric values: foreground columns compare the output with
/// ground truth inside the box; background columns compare the output with
/// the input outside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub mse: f64,
    pub ssim: f64,
    pub mse_bg: f64,
    pub ssim_bg: f64,
}

pub fn evaluate_sample(
    output: &RasterImage,
    gt: &RasterImage,
    input: &RasterImage,
    split: &RegionSplit,
) -> Result<SampleMetrics> {
    check_pair(output, gt)?;
    check_pair(output, input)?;
    let h = output.height();
    let w = output.width();
    if !split.fg_box.within_canvas(h, w) {
        return Err(Error::OutOfCanvas {
            x1: split.fg_box.x1,
            y1: split.fg_box.y1,
            x2: split.fg_box.x2,
            y2: split.fg_box.y2,
            h,
            w,
        });
    }
    let fg = split.fg_mask(h, w);
    let bg = split.bg_mask(h, w);
    Ok(SampleMetrics {
        mse: mse(output, gt, Some(&fg))?,
        ssim: ssim(output, gt, Some(&fg))?,
        mse_bg: mse(output, input, Some(&bg))?,
        ssim_bg: ssim(output, input, Some(&bg))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_image(h: usize, w: usize, c: usize, seed: u64) -> RasterImage {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        RasterImage::from_fn(h, w, c, |_, _, _| rng.gen()).unwrap()
    }

    #[test]
    fn mse_basics() {
        let a = random_image(16, 16, 3, 1);
        assert_eq!(mse(&a, &a, None).unwrap(), 0.0);
        let zero = RasterImage::splat(8, 8, 1, 0.0).unwrap();
        let tenth = RasterImage::splat(8, 8, 1, 0.1).unwrap();
        let got = mse(&zero, &tenth, None).unwrap();
        assert!((got - 0.010000001).abs() < 1e-6, "{got}");
    }

    #[test]
    fn mse_region_matches_loop_oracle() {
        let a = random_image(24, 24, 3, 2);
        let b = random_image(24, 24, 3, 3);
        let region = BinaryMask::from_fn(24, 24, |_, x| x < 12);
        let got = mse(&a, &b, Some(&region)).unwrap();
        let mut acc = 0.0f64;
        let mut n = 0usize;
        for y in 0..24 {
            for x in 0..12 {
                for c in 0..3 {
                    let d = a.get(y, x, c) as f64 - b.get(y, x, c) as f64;
                    acc += d * d;
                    n += 1;
                }
            }
        }
        assert!((got - acc / n as f64).abs() < 1e-12);
    }

    #[test]
    fn mse_zero_iff_identical() {
        let a = random_image(10, 10, 1, 4);
        let mut b = a.clone();
        assert_eq!(mse(&a, &b, None).unwrap(), 0.0);
        b.set(3, 3, 0, (b.get(3, 3, 0) + 0.25).min(1.0));
        assert!(mse(&a, &b, None).unwrap() > 0.0);
    }

    #[test]
    fn mse_empty_region_errors() {
        let a = random_image(8, 8, 1, 5);
        assert!(mse(&a, &a, Some(&BinaryMask::zeros(8, 8))).is_err());
    }

    #[test]
    fn ssim_self_is_one() {
        let a = random_image(32, 32, 3, 6);
        let got = ssim(&a, &a, None).unwrap();
        assert!((got - 1.0).abs() < 1e-9, "{got}");
    }

    #[test]
    fn ssim_constant_pair_closed_form() {
        let a = RasterImage::splat(24, 24, 1, 0.2).unwrap();
        let b = RasterImage::splat(24, 24, 1, 0.4).unwrap();
        // variance terms cancel to C2/C2 = 1; luminance term survives
        let want = (2.0 * 0.2 * 0.4 + SSIM_C1) / (0.2 * 0.2 + 0.4 * 0.4 + SSIM_C1);
        let got = ssim(&a, &b, None).unwrap();
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }

    #[test]
    fn ssim_symmetry() {
        let a = random_image(40, 30, 3, 7);
        let b = random_image(40, 30, 3, 8);
        let xy = ssim(&a, &b, None).unwrap();
        let yx = ssim(&b, &a, None).unwrap();
        assert!((xy - yx).abs() < 1e-12);
    }

    /// Independent direct-formula SSIM: per window position, accumulate
    /// weighted moments with an explicit double loop.
    fn ssim_reference(a: &RasterImage, b: &RasterImage) -> f64 {
        let k = SSIM_WINDOW;
        let taps = gaussian_kernel_weights(k, Some(SSIM_SIGMA)).unwrap();
        let vh = a.height() - k + 1;
        let vw = a.width() - k + 1;
        let mut total = 0.0f64;
        for c in 0..a.channels() {
            for wy in 0..vh {
                for wx in 0..vw {
                    let (mut ma, mut mb, mut eaa, mut ebb, mut eab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                    for dy in 0..k {
                        for dx in 0..k {
                            let wgt = taps[dy] * taps[dx];
                            let va = a.get(wy + dy, wx + dx, c) as f64;
                            let vb = b.get(wy + dy, wx + dx, c) as f64;
                            ma += wgt * va;
                            mb += wgt * vb;
                            eaa += wgt * va * va;
                            ebb += wgt * vb * vb;
                            eab += wgt * va * vb;
                        }
                    }
                    let sa = eaa - ma * ma;
                    let sb = ebb - mb * mb;
                    let sab = eab - ma * mb;
                    total += ((2.0 * ma * mb + SSIM_C1) * (2.0 * sab + SSIM_C2))
                        / ((ma * ma + mb * mb + SSIM_C1) * (sa + sb + SSIM_C2));
                }
            }
        }
        total / (vh * vw * a.channels()) as f64
    }

    #[test]
    fn ssim_matches_reference_implementation() {
        for seed in 0..4 {
            let a = random_image(48, 40, 3, 100 + seed);
            let b = random_image(48, 40, 3, 200 + seed);
            let got = ssim(&a, &b, None).unwrap();
            let want = ssim_reference(&a, &b);
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn ssim_too_small_image_errors() {
        let a = random_image(8, 8, 1, 9);
        assert!(ssim(&a, &a, None).is_err());
    }

    #[test]
    fn evaluate_sample_identity_case() {
        let gt = random_image(64, 64, 3, 10);
        let split = RegionSplit::new(BBox { x1: 16, y1: 16, x2: 47, y2: 47 }, 64, 64).unwrap();
        let m = evaluate_sample(&gt, &gt, &gt, &split).unwrap();
        assert_eq!(m.mse, 0.0);
        assert!((m.ssim - 1.0).abs() < 1e-9);
        assert_eq!(m.mse_bg, 0.0);
        assert!((m.ssim_bg - 1.0).abs() < 1e-9);
    }

    #[test]
    fn evaluate_sample_identity_refiner_reads_degradation() {
        // output == input: bg metrics perfect, fg metrics read the defect
        let gt = random_image(64, 64, 3, 11);
        let split = RegionSplit::new(BBox { x1: 20, y1: 20, x2: 43, y2: 43 }, 64, 64).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let input = RasterImage::from_fn(64, 64, 3, |y, x, c| {
            if split.fg_box.contains_point(x, y) {
                rng.gen()
            } else {
                gt.get(y, x, c)
            }
        })
        .unwrap();
        let m = evaluate_sample(&input, &gt, &input, &split).unwrap();
        assert_eq!(m.mse_bg, 0.0);
        assert!((m.ssim_bg - 1.0).abs() < 1e-9);
        let fg = split.fg_mask(64, 64);
        let want_fg = mse(&input, &gt, Some(&fg)).unwrap();
        assert_eq!(m.mse, want_fg);
        assert!(m.mse > 0.0);
    }
}
