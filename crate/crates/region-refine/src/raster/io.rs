//! PNG input/output. 8-bit, 1- or 3-channel only.
//!
//! Intensities convert as `value / 255` on read and `round(value * 255)`
//! clamped on write, so untouched pixels survive a read/write round trip
//! byte-for-byte. Mask PNGs are single-channel; a pixel reads as 1 iff its
//! value exceeds 127.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, RasterImage};

fn to_unit(v: u8) -> f32 {
    v as f32 / 255.0
}

fn to_byte(v: f32) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

fn image_from_dynamic(dynimg: DynamicImage, path: &Path) -> Result<RasterImage> {
    match dynimg {
        DynamicImage::ImageLuma8(g) => {
            let (w, h) = g.dimensions();
            let data = g.into_raw().into_iter().map(to_unit).collect();
            RasterImage::new(h as usize, w as usize, 1, data)
        }
        DynamicImage::ImageRgb8(rgb) => {
            let (w, h) = rgb.dimensions();
            let data = rgb.into_raw().into_iter().map(to_unit).collect();
            RasterImage::new(h as usize, w as usize, 3, data)
        }
        other => Err(Error::decode(
            path,
            image::ImageError::Unsupported(image::error::UnsupportedError::from_format_and_kind(
                image::error::ImageFormatHint::Exact(ImageFormat::Png),
                image::error::UnsupportedErrorKind::Color(other.color().into()),
            )),
        )),
    }
}

impl RasterImage {
    pub fn read_png(path: impl AsRef<Path>) -> Result<RasterImage> {
        let path = path.as_ref();
        let dynimg = image::open(path).map_err(|e| Error::decode(path, e))?;
        image_from_dynamic(dynimg, path)
    }

    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = self.encode_png()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    /// In-memory PNG bytes, used by the wire protocol.
    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut buf = Cursor::new(Vec::new());
        match self.channels() {
            1 => {
                let img = GrayImage::from_raw(
                    self.width() as u32,
                    self.height() as u32,
                    self.data().iter().map(|v| to_byte(*v)).collect(),
                )
                .expect("raster invariant: data length matches dims");
                img.write_to(&mut buf, ImageFormat::Png).map_err(Error::Encode)?;
            }
            _ => {
                let img = RgbImage::from_raw(
                    self.width() as u32,
                    self.height() as u32,
                    self.data().iter().map(|v| to_byte(*v)).collect(),
                )
                .expect("raster invariant: data length matches dims");
                img.write_to(&mut buf, ImageFormat::Png).map_err(Error::Encode)?;
            }
        }
        Ok(buf.into_inner())
    }

    pub fn decode_png(bytes: &[u8]) -> Result<RasterImage> {
        let path = Path::new("<memory>");
        let dynimg = image::load_from_memory_with_format(bytes, ImageFormat::Png)
            .map_err(|e| Error::decode(path, e))?;
        image_from_dynamic(dynimg, path)
    }
}

impl BinaryMask {
    pub fn read_png(path: impl AsRef<Path>) -> Result<BinaryMask> {
        let path = path.as_ref();
        let dynimg = image::open(path).map_err(|e| Error::decode(path, e))?;
        match dynimg {
            DynamicImage::ImageLuma8(g) => {
                let (w, h) = g.dimensions();
                let data = g.into_raw().into_iter().map(|v| (v > 127) as u8).collect();
                BinaryMask::new(h as usize, w as usize, data)
            }
            _ => Err(Error::InvalidParameter(format!(
                "{}: masks must be single-channel 8-bit PNG",
                path.display()
            ))),
        }
    }

    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = self.encode_png()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut buf = Cursor::new(Vec::new());
        let img = GrayImage::from_raw(
            self.width() as u32,
            self.height() as u32,
            self.data().iter().map(|v| v * 255).collect(),
        )
        .expect("mask invariant: data length matches dims");
        img.write_to(&mut buf, ImageFormat::Png).map_err(Error::Encode)?;
        Ok(buf.into_inner())
    }

    pub fn decode_png(bytes: &[u8]) -> Result<BinaryMask> {
        let dynimg = image::load_from_memory_with_format(bytes, ImageFormat::Png)
            .map_err(|e| Error::decode(Path::new("<memory>"), e))?;
        match dynimg {
            DynamicImage::ImageLuma8(g) => {
                let (w, h) = g.dimensions();
                let data = g.into_raw().into_iter().map(|v| (v > 127) as u8).collect();
                BinaryMask::new(h as usize, w as usize, data)
            }
            _ => Err(Error::InvalidParameter(
                "masks must be single-channel 8-bit PNG".into(),
            )),
        }
    }
}

/// Write a soft mask as an 8-bit gray PNG, for debug dumps.
pub fn write_soft_mask_png(mask: &crate::raster::SoftMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let img = GrayImage::from_raw(
        mask.width() as u32,
        mask.height() as u32,
        mask.data().iter().map(|v| to_byte(*v)).collect(),
    )
    .expect("mask invariant: data length matches dims");
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png).map_err(Error::Encode)?;
    std::fs::write(path, buf.into_inner()).map_err(|e| Error::io(path, e))
}
