//! Binary morphology with square structuring elements.
//!
//! Windows are clipped at the canvas border: a pixel's window is the
//! intersection of the size x size square centered on it with the canvas.
//! Dilation sets a pixel when any window pixel is set; erosion requires the
//! whole clipped window to be set. The two are dual under complement with the
//! same border rule.

use crate::error::Result;
use crate::raster::{check_odd, BinaryMask};

/// Square dilation: output is 1 iff any input 1 lies in the clipped
/// size x size window. `size == 1` is the identity.
pub fn dilate(mask: &BinaryMask, size: usize) -> Result<BinaryMask> {
    check_odd(size)?;
    Ok(separable_pass(mask, size, WindowRule::Any))
}

/// Square erosion: output is 1 iff every pixel of the clipped window is 1.
/// `size == 1` is the identity.
pub fn erode(mask: &BinaryMask, size: usize) -> Result<BinaryMask> {
    check_odd(size)?;
    Ok(separable_pass(mask, size, WindowRule::All))
}

#[derive(Clone, Copy, PartialEq)]
enum WindowRule {
    Any,
    All,
}

/// A square window max/min separates into a horizontal then a vertical 1-D
/// pass; clipping stays exact because the clipped square is a product of
/// clipped intervals.
fn separable_pass(mask: &BinaryMask, size: usize, rule: WindowRule) -> BinaryMask {
    let h = mask.height();
    let w = mask.width();
    if size == 1 || h == 0 || w == 0 {
        return mask.clone();
    }
    let radius = size / 2;

    let mut tmp = vec![0u8; h * w];
    for y in 0..h {
        let row = &mask.data()[y * w..(y + 1) * w];
        line_pass(row, 1, w, radius, rule, &mut tmp[y * w..(y + 1) * w], 1);
    }
    let mut out = vec![0u8; h * w];
    let tmp_copy = tmp;
    for x in 0..w {
        line_pass(&tmp_copy[x..], w, h, radius, rule, &mut out[x..], w);
    }
    BinaryMask::new(h, w, out).expect("morphology preserves binary values")
}

/// Sliding-count 1-D window pass over a strided line.
fn line_pass(
    src: &[u8],
    src_stride: usize,
    len: usize,
    radius: usize,
    rule: WindowRule,
    dst: &mut [u8],
    dst_stride: usize,
) {
    let mut ones = 0usize;
    // window for position 0: [0, min(radius, len-1)]
    let mut hi = 0usize; // exclusive upper bound of the window
    let init_hi = (radius + 1).min(len);
    while hi < init_hi {
        ones += src[hi * src_stride] as usize;
        hi += 1;
    }
    for i in 0..len {
        let lo = i.saturating_sub(radius);
        let window_len = hi - lo;
        let v = match rule {
            WindowRule::Any => (ones > 0) as u8,
            WindowRule::All => (ones == window_len) as u8,
        };
        dst[i * dst_stride] = v;
        // advance: drop i - radius, add i + radius + 1
        if i + 1 < len {
            if i >= radius {
                ones -= src[(i - radius) * src_stride] as usize;
            }
            if i + 1 + radius < len {
                ones += src[(i + 1 + radius) * src_stride] as usize;
                hi = i + 2 + radius;
            } else {
                hi = len;
            }
        }
    }
}
