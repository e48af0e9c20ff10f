//! Synthetic degradation: seeded scribble strokes confined to a dilated
//! object mask, pluggable inpainting, and a light paste-back blend so the
//! degraded input differs from ground truth only inside the region.
//!
//! Everything is driven by a single 64-bit seed through ChaCha8, a portable
//! generator with a published algorithm, so emitted samples hash identically
//! across platforms and across serial/parallel runs.

pub(crate) mod dataset;

pub use dataset::{
    derive_seed, generate_dataset, list_dataset_dirs, load_stored_sample, DegradeConfig,
    GenerateSummary, SampleMeta, StoredSample,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backend::{build_refiner, refine, BackendConfig, RefineRequest};
use crate::error::{Error, Result};
use crate::focus::bbox_from_mask;
use crate::pasteback::{blend_mask, BlendParams};
use crate::raster::{composite, dilate, gaussian_kernel_weights, BinaryMask, RasterImage};

/// How many fresh stroke sets to draw before giving up when the intersection
/// with the dilated object mask comes out empty.
const MAX_SCRIBBLE_ATTEMPTS: usize = 8;

/// The light blend applied when compositing the inpainted image over ground
/// truth, deliberately tighter than the inference-time blend so degradations
/// hug the scribble mask.
pub fn light_blend_params() -> BlendParams {
    BlendParams {
        dilate_size: 3,
        blur_size: 5,
        sigma: None,
    }
}

/// Seeded scribble geometry. The seed fully determines the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScribbleParams {
    pub seed: u64,
    /// Inclusive range for the number of strokes.
    pub stroke_count_range: (usize, usize),
    /// Stroke width as a fraction of the object bbox diagonal, inclusive.
    pub width_range: (f64, f64),
    /// Square dilation applied to the object mask before confining strokes.
    pub object_dilate: usize,
    /// Control points per stroke; odd and >= 3. Each consecutive point
    /// triple becomes one quadratic segment.
    pub curve_points: usize,
}

impl Default for ScribbleParams {
    fn default() -> Self {
        Self {
            seed: 0,
            stroke_count_range: (2, 4),
            width_range: (0.06, 0.14),
            object_dilate: 15,
            curve_points: 3,
        }
    }
}

impl ScribbleParams {
    fn validate(&self) -> Result<()> {
        if self.stroke_count_range.0 > self.stroke_count_range.1 || self.stroke_count_range.0 == 0 {
            return Err(Error::InvalidParameter(format!(
                "stroke count range {:?} is empty",
                self.stroke_count_range
            )));
        }
        if self.width_range.0 > self.width_range.1 || self.width_range.0 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "width range {:?} is empty",
                self.width_range
            )));
        }
        crate::raster::check_odd(self.object_dilate)?;
        if self.curve_points < 3 || self.curve_points % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "curve_points must be odd and >= 3, got {}",
                self.curve_points
            )));
        }
        Ok(())
    }
}

/// Sample a scribble mask inside the dilated object mask.
///
/// Draw order from the ChaCha8 stream seeded with `params.seed`, repeated per
/// attempt: the stroke count (`gen_range` inclusive), then per stroke the
/// width fraction (`gen_range` on `width_range`) followed by `curve_points`
/// indices into the dilated support (`gen_range(0..len)`). Strokes are
/// chained quadratic segments rasterized as round-capped disk sweeps.
pub fn sample_scribble(object_mask: &BinaryMask, params: &ScribbleParams) -> Result<BinaryMask> {
    params.validate()?;
    if object_mask.is_empty() {
        return Err(Error::EmptyRegion("object mask has no foreground".into()));
    }
    let dilated = dilate(object_mask, params.object_dilate)?;
    let support: Vec<(usize, usize)> = (0..dilated.height())
        .flat_map(|y| (0..dilated.width()).map(move |x| (y, x)))
        .filter(|(y, x)| dilated.get(*y, *x) == 1)
        .collect();
    let obj_box = bbox_from_mask(object_mask)?;
    let diagonal = ((obj_box.width() as f64).powi(2) + (obj_box.height() as f64).powi(2)).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for _ in 0..MAX_SCRIBBLE_ATTEMPTS {
        let mut canvas = BinaryMask::zeros(object_mask.height(), object_mask.width());
        let strokes = rng.gen_range(params.stroke_count_range.0..=params.stroke_count_range.1);
        for _ in 0..strokes {
            let width_frac = rng.gen_range(params.width_range.0..=params.width_range.1);
            let width = (width_frac * diagonal).max(1.0);
            let points: Vec<(f64, f64)> = (0..params.curve_points)
                .map(|_| {
                    let (y, x) = support[rng.gen_range(0..support.len())];
                    (x as f64, y as f64)
                })
                .collect();
            stamp_stroke(&mut canvas, &points, width / 2.0);
        }
        let constrained = canvas.intersection(&dilated)?;
        if !constrained.is_empty() {
            return Ok(constrained);
        }
    }
    Err(Error::EmptyRegion(format!(
        "scribble sampling stayed empty after {MAX_SCRIBBLE_ATTEMPTS} attempts"
    )))
}

/// Rasterize chained quadratic segments `(p0,p1,p2), (p2,p3,p4), ...` by
/// stamping disks of `radius` along each curve. Disk stamping yields round
/// caps and joints for free.
fn stamp_stroke(canvas: &mut BinaryMask, points: &[(f64, f64)], radius: f64) {
    let mut seg = 0;
    while seg + 2 < points.len() {
        let p0 = points[seg];
        let p1 = points[seg + 1];
        let p2 = points[seg + 2];
        let poly_len = dist(p0, p1) + dist(p1, p2);
        let steps = ((2.0 * poly_len).ceil() as usize).clamp(8, 4096);
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let u = 1.0 - t;
            let qx = u * u * p0.0 + 2.0 * u * t * p1.0 + t * t * p2.0;
            let qy = u * u * p0.1 + 2.0 * u * t * p1.1 + t * t * p2.1;
            stamp_disk(canvas, qx, qy, radius);
        }
        seg += 2;
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn stamp_disk(canvas: &mut BinaryMask, cx: f64, cy: f64, radius: f64) {
    let h = canvas.height() as isize;
    let w = canvas.width() as isize;
    let r2 = radius * radius;
    let y_lo = ((cy - radius).floor() as isize).max(0);
    let y_hi = ((cy + radius).ceil() as isize).min(h - 1);
    let x_lo = ((cx - radius).floor() as isize).max(0);
    let x_hi = ((cx + radius).ceil() as isize).min(w - 1);
    for y in y_lo..=y_hi {
        for x in x_lo..=x_hi {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            if dx * dx + dy * dy <= r2 {
                canvas.set(y as usize, x as usize, 1);
            }
        }
    }
}

/// Desk-scale inpainter: one mask-aware normalized convolution pass plus
/// seeded noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuiltinInpainter {
    pub kernel_size: usize,
    pub sigma: Option<f64>,
    pub noise_amplitude: f32,
    pub noise_seed: u64,
}

impl Default for BuiltinInpainter {
    fn default() -> Self {
        Self {
            kernel_size: 31,
            sigma: None,
            noise_amplitude: 0.05,
            noise_seed: 0,
        }
    }
}

/// Inpainting method: the crude built-in, or a real model behind the refine
/// wire protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InpainterConfig {
    Builtin(BuiltinInpainter),
    External {
        backend: BackendConfig,
        #[serde(default = "default_inpaint_instruction")]
        instruction: String,
    },
}

fn default_inpaint_instruction() -> String {
    "inpaint the masked region".into()
}

impl Default for InpainterConfig {
    fn default() -> Self {
        InpainterConfig::Builtin(BuiltinInpainter::default())
    }
}

impl InpainterConfig {
    pub fn id(&self) -> String {
        match self {
            InpainterConfig::Builtin(_) => "builtin".into(),
            InpainterConfig::External { backend, .. } => match backend {
                BackendConfig::External { base_url, .. } => {
                    format!("external:{}", base_url.as_deref().unwrap_or("$env"))
                }
                other => format!("external:{other:?}"),
            },
        }
    }

    /// Copy with the noise stream re-seeded; no-op for external inpainters.
    pub fn with_noise_seed(&self, seed: u64) -> InpainterConfig {
        match self {
            InpainterConfig::Builtin(b) => InpainterConfig::Builtin(BuiltinInpainter {
                noise_seed: seed,
                ..b.clone()
            }),
            other => other.clone(),
        }
    }
}

/// Replace masked pixels with a degraded guess.
///
/// The built-in method computes, per channel, a Gaussian-weighted average of
/// the unmasked pixels in the kernel window (normalized convolution), falls
/// back to the original value where the window holds no unmasked support,
/// then adds seeded uniform noise inside the mask. Unmasked pixels are
/// untouched. The external method delegates over the refine wire protocol
/// and only guarantees the service's own behavior.
pub fn inpaint(gt: &RasterImage, mask: &BinaryMask, config: &InpainterConfig) -> Result<RasterImage> {
    if mask.height() != gt.height() || mask.width() != gt.width() {
        return Err(Error::ShapeMismatch(format!(
            "mask {}x{} vs image {}x{}",
            mask.height(),
            mask.width(),
            gt.height(),
            gt.width()
        )));
    }
    match config {
        InpainterConfig::Builtin(params) => inpaint_builtin(gt, mask, params),
        InpainterConfig::External { backend, instruction } => {
            let refiner = build_refiner(backend)?;
            let spec = crate::focus::CropSpec {
                rect: crate::focus::BBox { x1: 0, y1: 0, x2: gt.width() - 1, y2: gt.height() - 1 },
                canvas: crate::focus::Dims { h: gt.height(), w: gt.width() },
                target: crate::focus::Dims { h: gt.height(), w: gt.width() },
                margin: 0,
            };
            let request = RefineRequest {
                focused_input: gt.clone(),
                reference: None,
                region_mask: mask.clone(),
                instruction: instruction.clone(),
                crop_spec: spec,
            };
            Ok(refine(&request, refiner.as_ref())?.refined)
        }
    }
}

fn inpaint_builtin(
    gt: &RasterImage,
    mask: &BinaryMask,
    params: &BuiltinInpainter,
) -> Result<RasterImage> {
    let taps = gaussian_kernel_weights(params.kernel_size, params.sigma)?;
    let h = gt.height();
    let w = gt.width();

    // Separable numerator/denominator of the normalized convolution. Border
    // renormalization inside blur_plane cancels in the num/den ratio.
    let weight_plane: Vec<f32> = mask.data().iter().map(|m| (1 - m) as f32).collect();
    let den = crate::raster::blur_plane(&weight_plane, h, w, &taps);

    let mut out = gt.clone();
    let mut noise = ChaCha8Rng::seed_from_u64(params.noise_seed);
    let eps = 1e-8f64;
    for c in 0..gt.channels() {
        let masked_plane: Vec<f32> = (0..h * w)
            .map(|px| {
                let (y, x) = (px / w, px % w);
                gt.get(y, x, c) * weight_plane[px]
            })
            .collect();
        let num = crate::raster::blur_plane(&masked_plane, h, w, &taps);
        for y in 0..h {
            for x in 0..w {
                if mask.get(y, x) == 0 {
                    continue;
                }
                let px = y * w + x;
                let filled = if den[px] as f64 > eps {
                    (num[px] / den[px]).clamp(0.0, 1.0)
                } else {
                    gt.get(y, x, c)
                };
                let noisy = if params.noise_amplitude > 0.0 {
                    (filled + noise.gen_range(-params.noise_amplitude..=params.noise_amplitude))
                        .clamp(0.0, 1.0)
                } else {
                    filled
                };
                out.set(y, x, c, noisy);
            }
        }
    }
    Ok(out)
}

/// Everything a stored refinement sample carries.
#[derive(Debug, Clone)]
pub struct DegradedSample {
    pub input: RasterImage,
    pub gt: RasterImage,
    pub reference: Option<RasterImage>,
    pub mask: BinaryMask,
    pub instruction: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub inpainter_id: String,
    pub params: ScribbleParams,
}

/// Build one degraded sample: sample a scribble mask, inpaint under it, and
/// composite the inpainted image over ground truth through the light blend
/// mask so the input equals ground truth wherever that blend is zero.
///
/// The built-in inpainter's noise seed is drawn from the scribble stream
/// right after the strokes, keeping the whole sample a function of
/// `params.seed`.
pub fn assemble_sample(
    gt: &RasterImage,
    object_mask: &BinaryMask,
    reference: Option<&RasterImage>,
    instruction: &str,
    params: &ScribbleParams,
    inpainter: &InpainterConfig,
) -> Result<DegradedSample> {
    let mask = sample_scribble(object_mask, params)?;
    let noise_seed = derive_seed(params.seed, 0x6e6f697365); // "noise"
    let inpainter = inpainter.with_noise_seed(noise_seed);
    let degraded = inpaint(gt, &mask, &inpainter)?;
    let soft = blend_mask(&mask, &light_blend_params())?;
    let input = composite(&degraded, gt, &soft)?;
    Ok(DegradedSample {
        input,
        gt: gt.clone(),
        reference: reference.cloned(),
        mask,
        instruction: instruction.to_string(),
        provenance: Provenance {
            seed: params.seed,
            inpainter_id: inpainter.id(),
            params: params.clone(),
        },
    })
}

/// Accept/reject hook standing in for a learned defect judge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidatorConfig {
    /// Accept everything; the hook for callers wiring in an external judge.
    AcceptAll,
    /// Accept iff the mean squared error between input and ground truth over
    /// the scribble region reaches the floor: the degradation is noticeable.
    MseFloor { threshold: f64 },
}

impl Default for ValidatorConfig {
    fn default() -> Self {
        ValidatorConfig::MseFloor { threshold: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(String),
}

pub fn validate_sample(sample: &DegradedSample, validator: &ValidatorConfig) -> Result<Verdict> {
    match validator {
        ValidatorConfig::AcceptAll => Ok(Verdict::Accept),
        ValidatorConfig::MseFloor { threshold } => {
            let region_mse = crate::eval::mse(&sample.input, &sample.gt, Some(&sample.mask))?;
            if region_mse >= *threshold {
                Ok(Verdict::Accept)
            } else {
                Ok(Verdict::Reject(format!(
                    "no defect: region mse {region_mse:.3e} below floor {threshold:.3e}"
                )))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn disk_mask(h: usize, w: usize, cy: f64, cx: f64, r: f64) -> BinaryMask {
        BinaryMask::from_fn(h, w, |y, x| {
            let dy = y as f64 - cy;
            let dx = x as f64 - cx;
            dy * dy + dx * dx <= r * r
        })
    }

    fn gradient_image(h: usize, w: usize) -> RasterImage {
        RasterImage::from_fn(h, w, 3, |y, x, c| {
            ((x + y) as f32 / (h + w) as f32 + c as f32 * 0.01).min(1.0)
        })
        .unwrap()
    }

    #[test]
    fn scribble_same_seed_is_identical() {
        let mask = disk_mask(128, 128, 64.0, 64.0, 30.0);
        let params = ScribbleParams { seed: 42, ..Default::default() };
        let a = sample_scribble(&mask, &params).unwrap();
        let b = sample_scribble(&mask, &params).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
    }

    #[test]
    fn scribble_confined_to_dilated_object() {
        let mask = disk_mask(128, 128, 50.0, 70.0, 20.0);
        let params = ScribbleParams { seed: 7, ..Default::default() };
        let scribble = sample_scribble(&mask, &params).unwrap();
        let dilated = dilate(&mask, params.object_dilate).unwrap();
        assert!(scribble.difference(&dilated).unwrap().is_empty());
    }

    #[test]
    fn scribble_empty_object_errors() {
        let err = sample_scribble(&BinaryMask::zeros(32, 32), &ScribbleParams::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyRegion(_)));
    }

    /// Replays the documented draw order independently and rebuilds the mask
    /// as "pixels within width/2 of any curve sample", which must coincide
    /// with the disk-stamped implementation.
    #[test]
    fn scribble_matches_rng_trace_oracle() {
        let object = disk_mask(128, 128, 64.0, 64.0, 30.0);
        let params = ScribbleParams {
            seed: 7,
            stroke_count_range: (3, 3),
            ..Default::default()
        };
        let got = sample_scribble(&object, &params).unwrap();

        let dilated = dilate(&object, params.object_dilate).unwrap();
        let support: Vec<(usize, usize)> = (0..128usize)
            .flat_map(|y| (0..128usize).map(move |x| (y, x)))
            .filter(|(y, x)| dilated.get(*y, *x) == 1)
            .collect();
        let obj_box = bbox_from_mask(&object).unwrap();
        let diagonal =
            ((obj_box.width() as f64).powi(2) + (obj_box.height() as f64).powi(2)).sqrt();

        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let strokes = rng.gen_range(3..=3usize);
        let mut centers: Vec<((f64, f64), f64)> = Vec::new(); // (sample point, radius)
        for _ in 0..strokes {
            let frac = rng.gen_range(params.width_range.0..=params.width_range.1);
            let radius = (frac * diagonal).max(1.0) / 2.0;
            let pts: Vec<(f64, f64)> = (0..params.curve_points)
                .map(|_| {
                    let (y, x) = support[rng.gen_range(0..support.len())];
                    (x as f64, y as f64)
                })
                .collect();
            let poly = dist(pts[0], pts[1]) + dist(pts[1], pts[2]);
            let steps = ((2.0 * poly).ceil() as usize).clamp(8, 4096);
            for s in 0..=steps {
                let t = s as f64 / steps as f64;
                let u = 1.0 - t;
                let qx = u * u * pts[0].0 + 2.0 * u * t * pts[1].0 + t * t * pts[2].0;
                let qy = u * u * pts[0].1 + 2.0 * u * t * pts[1].1 + t * t * pts[2].1;
                centers.push(((qx, qy), radius));
            }
        }
        let oracle = BinaryMask::from_fn(128, 128, |y, x| {
            dilated.get(y, x) == 1
                && centers.iter().any(|((qx, qy), r)| {
                    let dx = x as f64 - qx;
                    let dy = y as f64 - qy;
                    dx * dx + dy * dy <= r * r
                })
        });
        assert_eq!(got, oracle);
    }

    #[test]
    fn inpaint_empty_mask_is_noop() {
        let gt = gradient_image(32, 32);
        let out = inpaint(&gt, &BinaryMask::zeros(32, 32), &InpainterConfig::default()).unwrap();
        assert!(out.bit_eq(&gt));
    }

    #[test]
    fn inpaint_full_mask_preserves_constant() {
        let gt = RasterImage::splat(24, 24, 3, 0.42).unwrap();
        let cfg = InpainterConfig::Builtin(BuiltinInpainter {
            noise_amplitude: 0.0,
            ..Default::default()
        });
        let out = inpaint(&gt, &BinaryMask::ones(24, 24), &cfg).unwrap();
        for v in out.data() {
            assert!((v - 0.42).abs() < 1e-6);
        }
    }

    #[test]
    fn inpaint_matches_normalized_convolution_oracle() {
        let gt = gradient_image(48, 48);
        let mask = disk_mask(48, 48, 24.0, 24.0, 6.0);
        let cfg = BuiltinInpainter {
            kernel_size: 21,
            noise_amplitude: 0.0,
            ..Default::default()
        };
        let out = inpaint(&gt, &mask, &InpainterConfig::Builtin(cfg.clone())).unwrap();

        let taps = gaussian_kernel_weights(cfg.kernel_size, None).unwrap();
        let r = (cfg.kernel_size / 2) as isize;
        for y in 0..48usize {
            for x in 0..48usize {
                if mask.get(y, x) == 0 {
                    for c in 0..3 {
                        assert_eq!(out.get(y, x, c).to_bits(), gt.get(y, x, c).to_bits());
                    }
                    continue;
                }
                for c in 0..3 {
                    let mut num = 0.0f64;
                    let mut den = 0.0f64;
                    for dy in -r..=r {
                        for dx in -r..=r {
                            let (yy, xx) = (y as isize + dy, x as isize + dx);
                            if yy < 0 || xx < 0 || yy >= 48 || xx >= 48 {
                                continue;
                            }
                            let (yy, xx) = (yy as usize, xx as usize);
                            if mask.get(yy, xx) == 1 {
                                continue;
                            }
                            let wgt = taps[(dy + r) as usize] * taps[(dx + r) as usize];
                            num += wgt * gt.get(yy, xx, c) as f64;
                            den += wgt;
                        }
                    }
                    assert!(den > 1e-8, "disk fits inside the kernel radius");
                    let want = num / den;
                    let got = out.get(y, x, c) as f64;
                    assert!((got - want).abs() < 1e-6, "({y},{x},{c}): {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn assembled_input_equals_gt_outside_blend_support() {
        let gt = gradient_image(96, 96);
        let object = disk_mask(96, 96, 48.0, 48.0, 20.0);
        let sample = assemble_sample(
            &gt,
            &object,
            None,
            "fix it",
            &ScribbleParams { seed: 11, ..Default::default() },
            &InpainterConfig::default(),
        )
        .unwrap();
        let soft = blend_mask(&sample.mask, &light_blend_params()).unwrap();
        let mut differs_inside = false;
        for y in 0..96 {
            for x in 0..96 {
                for c in 0..3 {
                    let same = sample.input.get(y, x, c).to_bits() == gt.get(y, x, c).to_bits();
                    if soft.get(y, x) == 0.0 {
                        assert!(same, "pixel ({y},{x},{c}) outside support changed");
                    } else if !same {
                        differs_inside = true;
                    }
                }
            }
        }
        assert!(differs_inside, "degradation must actually change the region");
    }

    #[test]
    fn assemble_is_deterministic() {
        let gt = gradient_image(64, 64);
        let object = disk_mask(64, 64, 32.0, 32.0, 14.0);
        let params = ScribbleParams { seed: 11, ..Default::default() };
        let a = assemble_sample(&gt, &object, None, "i", &params, &InpainterConfig::default()).unwrap();
        let b = assemble_sample(&gt, &object, None, "i", &params, &InpainterConfig::default()).unwrap();
        assert!(a.input.bit_eq(&b.input));
        assert_eq!(a.mask, b.mask);
    }

    #[test]
    fn validator_thresholds() {
        let gt = gradient_image(32, 32);
        let object = disk_mask(32, 32, 16.0, 16.0, 8.0);
        let clean = DegradedSample {
            input: gt.clone(),
            gt: gt.clone(),
            reference: None,
            mask: object.clone(),
            instruction: "i".into(),
            provenance: Provenance {
                seed: 0,
                inpainter_id: "builtin".into(),
                params: ScribbleParams::default(),
            },
        };
        assert!(matches!(
            validate_sample(&clean, &ValidatorConfig::default()).unwrap(),
            Verdict::Reject(_)
        ));
        assert_eq!(
            validate_sample(&clean, &ValidatorConfig::AcceptAll).unwrap(),
            Verdict::Accept
        );

        let mut corrupted = clean.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        corrupted.input = RasterImage::from_fn(32, 32, 3, |y, x, c| {
            if object.get(y, x) == 1 {
                rng.gen()
            } else {
                gt.get(y, x, c)
            }
        })
        .unwrap();
        assert_eq!(
            validate_sample(&corrupted, &ValidatorConfig::default()).unwrap(),
            Verdict::Accept
        );
        // explicit threshold comparison: region mse 5e-4 against floor 1e-3
        let mut slight = clean.clone();
        let delta = (5e-4f32).sqrt();
        slight.input = RasterImage::from_fn(32, 32, 3, |y, x, c| {
            if object.get(y, x) == 1 {
                (gt.get(y, x, c) + delta).min(1.0)
            } else {
                gt.get(y, x, c)
            }
        })
        .unwrap();
        assert!(matches!(
            validate_sample(&slight, &ValidatorConfig::MseFloor { threshold: 1e-3 }).unwrap(),
            Verdict::Reject(_)
        ));
    }
}
