//! Region localization and focus-crop geometry.
//!
//! A tight bounding box around the region mask is expanded by a margin,
//! clipped to the canvas, and paired with a target resolution that preserves
//! the box's aspect ratio under a fixed pixel budget. The resulting
//! [`CropSpec`] carries everything paste-back needs to invert the crop
//! exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, RasterImage};

/// Axis-aligned box with inclusive pixel coordinates, `x` = column,
/// `y` = row. A one-pixel region is `(x, y, x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x1: usize,
    pub y1: usize,
    pub x2: usize,
    pub y2: usize,
}

impl BBox {
    pub fn new(x1: usize, y1: usize, x2: usize, y2: usize) -> Result<Self> {
        if x1 > x2 || y1 > y2 {
            return Err(Error::InvalidParameter(format!(
                "degenerate box ({x1},{y1})-({x2},{y2})"
            )));
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    pub fn width(&self) -> usize {
        self.x2 - self.x1 + 1
    }

    pub fn height(&self) -> usize {
        self.y2 - self.y1 + 1
    }

    pub fn within_canvas(&self, canvas_h: usize, canvas_w: usize) -> bool {
        self.x2 < canvas_w && self.y2 < canvas_h
    }

    pub fn contains(&self, other: &BBox) -> bool {
        self.x1 <= other.x1 && self.y1 <= other.y1 && self.x2 >= other.x2 && self.y2 >= other.y2
    }

    pub fn contains_point(&self, x: usize, y: usize) -> bool {
        (self.x1..=self.x2).contains(&x) && (self.y1..=self.y2).contains(&y)
    }

    /// Smallest box covering both.
    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            x1: self.x1.min(other.x1),
            y1: self.y1.min(other.y1),
            x2: self.x2.max(other.x2),
            y2: self.y2.max(other.y2),
        }
    }

    /// A user-supplied box is treated as a filled rectangular mask so the
    /// downstream blending path is uniform.
    pub fn to_mask(&self, canvas_h: usize, canvas_w: usize) -> Result<BinaryMask> {
        if !self.within_canvas(canvas_h, canvas_w) {
            return Err(Error::OutOfCanvas {
                x1: self.x1,
                y1: self.y1,
                x2: self.x2,
                y2: self.y2,
                h: canvas_h,
                w: canvas_w,
            });
        }
        Ok(BinaryMask::from_fn(canvas_h, canvas_w, |y, x| {
            self.contains_point(x, y)
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub h: usize,
    pub w: usize,
}

/// The expanded focus rectangle plus the fixed-budget target resolution,
/// serialized into audit logs and the external refiner protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropSpec {
    #[serde(rename = "box")]
    pub rect: BBox,
    pub canvas: Dims,
    pub target: Dims,
    pub margin: usize,
}

impl CropSpec {
    pub fn target_h(&self) -> usize {
        self.target.h
    }

    pub fn target_w(&self) -> usize {
        self.target.w
    }
}

/// Focus geometry knobs: margin in pixels, target pixel budget, and the
/// granule each target dimension is rounded to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FocusParams {
    pub margin: usize,
    pub budget: usize,
    pub granule: usize,
}

impl Default for FocusParams {
    fn default() -> Self {
        Self {
            margin: 64,
            budget: 1024 * 1024,
            granule: 8,
        }
    }
}

/// Minimal axis-aligned box covering every 1-pixel of the mask.
pub fn bbox_from_mask(mask: &BinaryMask) -> Result<BBox> {
    let mut found = false;
    let (mut x1, mut y1, mut x2, mut y2) = (usize::MAX, usize::MAX, 0usize, 0usize);
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(y, x) == 1 {
                found = true;
                x1 = x1.min(x);
                y1 = y1.min(y);
                x2 = x2.max(x);
                y2 = y2.max(y);
            }
        }
    }
    if !found {
        return Err(Error::EmptyRegion("mask has no foreground pixels".into()));
    }
    Ok(BBox { x1, y1, x2, y2 })
}

/// Push every side outward by `margin`, clipped to the canvas. The result
/// always contains the input box.
pub fn expand_box(rect: &BBox, margin: usize, canvas_h: usize, canvas_w: usize) -> BBox {
    BBox {
        x1: rect.x1.saturating_sub(margin),
        y1: rect.y1.saturating_sub(margin),
        x2: (rect.x2 + margin).min(canvas_w - 1),
        y2: (rect.y2 + margin).min(canvas_h - 1),
    }
}

pub fn crop_image(img: &RasterImage, rect: &BBox) -> Result<RasterImage> {
    if !rect.within_canvas(img.height(), img.width()) {
        return Err(Error::OutOfCanvas {
            x1: rect.x1,
            y1: rect.y1,
            x2: rect.x2,
            y2: rect.y2,
            h: img.height(),
            w: img.width(),
        });
    }
    RasterImage::from_fn(rect.height(), rect.width(), img.channels(), |y, x, c| {
        img.get(rect.y1 + y, rect.x1 + x, c)
    })
}

pub fn crop_mask(mask: &BinaryMask, rect: &BBox) -> Result<BinaryMask> {
    if !rect.within_canvas(mask.height(), mask.width()) {
        return Err(Error::OutOfCanvas {
            x1: rect.x1,
            y1: rect.y1,
            x2: rect.x2,
            y2: rect.y2,
            h: mask.height(),
            w: mask.width(),
        });
    }
    Ok(BinaryMask::from_fn(rect.height(), rect.width(), |y, x| {
        mask.get(rect.y1 + y, rect.x1 + x) == 1
    }))
}

/// Paste a crop back at its source rectangle, overwriting the pixels under
/// the box verbatim. Inverse of [`crop_image`] when the crop is unmodified.
pub fn paste_rect(canvas: &RasterImage, patch: &RasterImage, rect: &BBox) -> Result<RasterImage> {
    if patch.height() != rect.height() || patch.width() != rect.width() {
        return Err(Error::ShapeMismatch(format!(
            "patch {}x{} vs box {}x{}",
            patch.height(),
            patch.width(),
            rect.height(),
            rect.width()
        )));
    }
    if !rect.within_canvas(canvas.height(), canvas.width()) || patch.channels() != canvas.channels() {
        return Err(Error::ShapeMismatch("patch does not fit canvas".into()));
    }
    let mut out = canvas.clone();
    for y in 0..patch.height() {
        for x in 0..patch.width() {
            for c in 0..patch.channels() {
                out.set(rect.y1 + y, rect.x1 + x, c, patch.get(y, x, c));
            }
        }
    }
    Ok(out)
}

/// Full focus bookkeeping: expanded box plus aspect-preserving target dims
/// under the pixel budget, rounded down to the granule. Tiny regions are
/// deliberately upscaled toward the budget.
pub fn make_crop_spec(mask: &BinaryMask, params: &FocusParams) -> Result<CropSpec> {
    if params.granule == 0 || params.budget < params.granule * params.granule {
        return Err(Error::InvalidParameter(format!(
            "budget {} too small for granule {}",
            params.budget, params.granule
        )));
    }
    let canvas_h = mask.height();
    let canvas_w = mask.width();
    let rect = expand_box(&bbox_from_mask(mask)?, params.margin, canvas_h, canvas_w);

    let aspect = rect.width() as f64 / rect.height() as f64;
    let th_cont = (params.budget as f64 / aspect).sqrt();
    let tw_cont = aspect * th_cont;

    let granule = params.granule;
    let floor_to = |v: f64| ((v / granule as f64).floor() as usize * granule).max(granule);
    let mut tw = floor_to(tw_cont);
    let mut th = floor_to(th_cont);
    // The max(granule) clamp can push a degenerate aspect over budget.
    while tw * th > params.budget {
        if tw >= th {
            tw -= granule;
        } else {
            th -= granule;
        }
    }

    Ok(CropSpec {
        rect,
        canvas: Dims {
            h: canvas_h,
            w: canvas_w,
        },
        target: Dims { h: th, w: tw },
        margin: params.margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn bbox_min_max_of_coordinates() {
        let mut mask = BinaryMask::zeros(8, 12);
        mask.set(2, 3, 1);
        mask.set(5, 9, 1);
        let b = bbox_from_mask(&mask).unwrap();
        assert_eq!(b, BBox { x1: 3, y1: 2, x2: 9, y2: 5 });
    }

    #[test]
    fn bbox_single_pixel_and_full_mask() {
        let mut mask = BinaryMask::zeros(4, 4);
        mask.set(0, 0, 1);
        assert_eq!(bbox_from_mask(&mask).unwrap(), BBox { x1: 0, y1: 0, x2: 0, y2: 0 });
        let full = BinaryMask::ones(6, 9);
        assert_eq!(bbox_from_mask(&full).unwrap(), BBox { x1: 0, y1: 0, x2: 8, y2: 5 });
    }

    #[test]
    fn bbox_empty_mask_errors() {
        assert!(matches!(
            bbox_from_mask(&BinaryMask::zeros(4, 4)),
            Err(Error::EmptyRegion(_))
        ));
    }

    #[test]
    fn bbox_is_minimal_against_scan() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let mask = BinaryMask::from_fn(20, 30, |_, _| rng.gen_bool(0.05));
            if mask.is_empty() {
                continue;
            }
            let b = bbox_from_mask(&mask).unwrap();
            for y in 0..20 {
                for x in 0..30 {
                    if mask.get(y, x) == 1 {
                        assert!(b.contains_point(x, y));
                    }
                }
            }
            // tightness: each side touches a 1-pixel
            assert!((b.y1..=b.y2).any(|y| mask.get(y, b.x1) == 1));
            assert!((b.y1..=b.y2).any(|y| mask.get(y, b.x2) == 1));
            assert!((b.x1..=b.x2).any(|x| mask.get(b.y1, x) == 1));
            assert!((b.x1..=b.x2).any(|x| mask.get(b.y2, x) == 1));
        }
    }

    #[test]
    fn expand_box_arithmetic_and_clipping() {
        let b = BBox { x1: 100, y1: 200, x2: 300, y2: 400 };
        assert_eq!(
            expand_box(&b, 64, 1024, 1024),
            BBox { x1: 36, y1: 136, x2: 364, y2: 464 }
        );
        let near_origin = BBox { x1: 10, y1: 10, x2: 20, y2: 20 };
        assert_eq!(
            expand_box(&near_origin, 64, 1024, 1024),
            BBox { x1: 0, y1: 0, x2: 84, y2: 84 }
        );
        assert_eq!(expand_box(&b, 0, 1024, 1024), b);
    }

    #[test]
    fn expand_box_monotone_in_margin() {
        let b = BBox { x1: 40, y1: 50, x2: 60, y2: 70 };
        let mut prev = expand_box(&b, 0, 128, 128);
        for m in 1..80 {
            let cur = expand_box(&b, m, 128, 128);
            assert!(cur.contains(&prev));
            prev = cur;
        }
    }

    #[test]
    fn crop_and_paste_invert() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let img = RasterImage::from_fn(16, 20, 3, |_, _, _| rng.gen()).unwrap();
        let rect = BBox { x1: 3, y1: 2, x2: 11, y2: 9 };
        let crop = crop_image(&img, &rect).unwrap();
        assert_eq!(crop.height(), 8);
        assert_eq!(crop.width(), 9);
        let back = paste_rect(&img, &crop, &rect).unwrap();
        assert!(back.bit_eq(&img));
        // full-canvas crop is a bit-identical copy
        let full = BBox { x1: 0, y1: 0, x2: 19, y2: 15 };
        assert!(crop_image(&img, &full).unwrap().bit_eq(&img));
    }

    #[test]
    fn crop_out_of_canvas_errors() {
        let img = RasterImage::splat(4, 4, 1, 0.5).unwrap();
        let rect = BBox { x1: 2, y1: 2, x2: 4, y2: 3 };
        assert!(matches!(crop_image(&img, &rect), Err(Error::OutOfCanvas { .. })));
    }

    fn rect_mask(h: usize, w: usize, rect: BBox) -> BinaryMask {
        BinaryMask::from_fn(h, w, |y, x| rect.contains_point(x, y))
    }

    #[test]
    fn crop_spec_square_fills_budget() {
        // 256x256 box centered far from edges, zero margin for an exact box.
        let mask = rect_mask(1024, 1024, BBox { x1: 300, y1: 300, x2: 555, y2: 555 });
        let spec = make_crop_spec(
            &mask,
            &FocusParams { margin: 0, budget: 1024 * 1024, granule: 8 },
        )
        .unwrap();
        assert_eq!(spec.target, Dims { h: 1024, w: 1024 });
    }

    #[test]
    fn crop_spec_wide_box_hits_budget_exactly() {
        // 512x128 box (4:1): the aspect-preserving solution is 2048x512,
        // whose area is exactly the budget.
        let mask = rect_mask(2048, 2048, BBox { x1: 100, y1: 100, x2: 611, y2: 227 });
        let spec = make_crop_spec(
            &mask,
            &FocusParams { margin: 0, budget: 1024 * 1024, granule: 8 },
        )
        .unwrap();
        assert_eq!(spec.target, Dims { h: 512, w: 2048 });
        assert_eq!(spec.target.h * spec.target.w, 1024 * 1024);
    }

    #[test]
    fn crop_spec_full_canvas_degenerates_to_full_frame() {
        let mask = BinaryMask::ones(1024, 1024);
        let spec = make_crop_spec(&mask, &FocusParams::default()).unwrap();
        assert_eq!(spec.rect, BBox { x1: 0, y1: 0, x2: 1023, y2: 1023 });
        assert_eq!(spec.target, Dims { h: 1024, w: 1024 });
    }

    #[test]
    fn crop_spec_respects_budget_and_granule() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let params = FocusParams { margin: 16, budget: 512 * 512, granule: 8 };
        for _ in 0..30 {
            let h = rng.gen_range(32..300);
            let w = rng.gen_range(32..300);
            let mut mask = BinaryMask::zeros(h, w);
            let y = rng.gen_range(0..h);
            let x = rng.gen_range(0..w);
            mask.set(y, x, 1);
            mask.set(rng.gen_range(0..h), rng.gen_range(0..w), 1);
            let spec = make_crop_spec(&mask, &params).unwrap();
            assert!(spec.target.h * spec.target.w <= params.budget);
            assert_eq!(spec.target.h % 8, 0);
            assert_eq!(spec.target.w % 8, 0);
            // aspect distortion bounded by granule rounding
            let box_aspect = spec.rect.width() as f64 / spec.rect.height() as f64;
            let th_cont = (params.budget as f64 / box_aspect).sqrt();
            let tw_cont = box_aspect * th_cont;
            assert!((spec.target.w as f64 - tw_cont).abs() < 8.0 + 1e-9 || spec.target.w == 8);
            assert!((spec.target.h as f64 - th_cont).abs() < 8.0 + 1e-9 || spec.target.h == 8);
        }
    }

    #[test]
    fn crop_spec_serializes_with_documented_keys() {
        let mask = rect_mask(64, 64, BBox { x1: 10, y1: 12, x2: 30, y2: 40 });
        let spec = make_crop_spec(&mask, &FocusParams { margin: 4, budget: 64 * 64, granule: 8 }).unwrap();
        let json = serde_json::to_value(&spec).unwrap();
        assert!(json.get("box").is_some());
        assert!(json["box"].get("x1").is_some());
        assert!(json["canvas"].get("h").is_some());
        assert!(json["target"].get("w").is_some());
        assert!(json.get("margin").is_some());
        let back: CropSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, spec);
    }
}
