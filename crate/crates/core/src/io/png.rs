use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage};

use crate::buffer::{DepthMap, ImageBuffer};
use crate::error::{Error, Result};

/// Reads any PNG as 3-channel color in `[0, 1]`.
pub fn read_png(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let img = image::open(path)?.to_rgb32f();
    let (w, h) = img.dimensions();
    ImageBuffer::new(w as usize, h as usize, 3, img.into_raw())
}

fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes a 1- or 3-channel buffer as an 8-bit PNG, clamping to `[0, 1]`.
pub fn write_png(path: impl AsRef<Path>, image: &ImageBuffer) -> Result<()> {
    let (w, h) = (image.width() as u32, image.height() as u32);
    let bytes: Vec<u8> = image.data().iter().map(|&v| quantize(v)).collect();
    let dynamic = match image.channels() {
        1 => DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, bytes).expect("sized buffer")),
        3 => DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, bytes).expect("sized buffer")),
        c => return Err(Error::Shape(format!("cannot write {c}-channel PNG"))),
    };
    dynamic.save_with_format(path, ImageFormat::Png)?;
    Ok(())
}

/// Binary mask as an 8-bit grayscale PNG, 255 where set.
pub fn write_mask_png(path: impl AsRef<Path>, mask: &[bool], width: usize, height: usize) -> Result<()> {
    if mask.len() != width * height {
        return Err(Error::Shape(format!("mask has {} entries for {width}x{height}", mask.len())));
    }
    let bytes = mask.iter().map(|&b| if b { 255 } else { 0 }).collect();
    GrayImage::from_raw(width as u32, height as u32, bytes)
        .expect("sized buffer")
        .save_with_format(path, ImageFormat::Png)?;
    Ok(())
}

/// Reads a mask PNG; pixels at or above half intensity are set.
pub fn read_mask_png(path: impl AsRef<Path>) -> Result<(Vec<bool>, usize, usize)> {
    let img = image::open(path)?.to_luma8();
    let (w, h) = img.dimensions();
    Ok((img.into_raw().into_iter().map(|v| v >= 128).collect(), w as usize, h as usize))
}

/// Reads a 16-bit grayscale PNG as depth `value · scale`.
pub fn read_depth_png16(path: impl AsRef<Path>, scale: f64) -> Result<DepthMap> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid("depth scale", format!("{scale} must be positive")));
    }
    let img = match image::open(path)? {
        DynamicImage::ImageLuma16(img) => img,
        other => {
            return Err(Error::format(
                "depth PNG",
                format!("expected 16-bit grayscale, found {:?}", other.color()),
            ))
        }
    };
    let (w, h) = img.dimensions();
    let data = img.into_raw().into_iter().map(|v| (v as f64 * scale) as f32).collect();
    DepthMap::new(w as usize, h as usize, data)
}
