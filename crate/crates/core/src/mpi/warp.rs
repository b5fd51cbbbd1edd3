use nalgebra::Matrix3;

use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};

use super::homography::{to_row_major, RowMap};

/// Bilinear lookup into an interleaved `C`-channel texture.
///
/// Coordinates inside a pixel footprint of the raster, `[-0.5, w - 0.5) ×
/// [-0.5, h - 0.5)`, interpolate with edge-clamped neighbors; anything else
/// (including NaN) is out of bounds and yields `None`.
#[inline]
pub fn bilinear_sample<const C: usize>(
    texture: &[f32],
    width: usize,
    height: usize,
    x: f64,
    y: f64,
) -> Option<[f32; C]> {
    if !(x >= -0.5 && x < width as f64 - 0.5 && y >= -0.5 && y < height as f64 - 0.5) {
        return None;
    }
    // both coordinates are at least -0.5 here, so the shifted cast is floor()
    let x0 = (x + 1.0) as isize - 1;
    let y0 = (y + 1.0) as isize - 1;
    let tx = (x - x0 as f64) as f32;
    let ty = (y - y0 as f64) as f32;
    let max_x = width as isize - 1;
    let max_y = height as isize - 1;
    let w00 = (1.0 - tx) * (1.0 - ty);
    let w10 = tx * (1.0 - ty);
    let w01 = (1.0 - tx) * ty;
    let w11 = tx * ty;
    let mut out = [0.0f32; C];
    if x0 >= 0 && y0 >= 0 && x0 < max_x && y0 < max_y {
        let i = (y0 as usize * width + x0 as usize) * C;
        let top = &texture[i..i + 2 * C];
        let bottom = &texture[i + width * C..i + width * C + 2 * C];
        for c in 0..C {
            out[c] = w00 * top[c] + w10 * top[C + c] + w01 * bottom[c] + w11 * bottom[C + c];
        }
        return Some(out);
    }
    let xa = x0.clamp(0, max_x) as usize;
    let xb = (x0 + 1).clamp(0, max_x) as usize;
    let ya = y0.clamp(0, max_y) as usize;
    let yb = (y0 + 1).clamp(0, max_y) as usize;
    let p00 = &texture[(ya * width + xa) * C..][..C];
    let p10 = &texture[(ya * width + xb) * C..][..C];
    let p01 = &texture[(yb * width + xa) * C..][..C];
    let p11 = &texture[(yb * width + xb) * C..][..C];
    for c in 0..C {
        out[c] = w00 * p00[c] + w10 * p10[c] + w01 * p01[c] + w11 * p11[c];
    }
    Some(out)
}

/// Interleaves a 3-channel color and a 1-channel alpha into RGBA.
pub(crate) fn rgba_texture(color: &[f32], alpha: &[f32]) -> Vec<f32> {
    let mut tex = Vec::with_capacity(alpha.len() * 4);
    for (rgb, &a) in color.chunks_exact(3).zip(alpha) {
        tex.extend_from_slice(&[rgb[0], rgb[1], rgb[2], a]);
    }
    tex
}

/// Resamples a plane's color and alpha into an `out_width × out_height`
/// raster through `homography` (target pixel → source pixel). Samples that
/// fall outside the source raster are transparent black.
pub fn warp_plane(
    color: &ImageBuffer,
    alpha: &ImageBuffer,
    homography: &Matrix3<f64>,
    out_width: usize,
    out_height: usize,
) -> Result<(ImageBuffer, ImageBuffer)> {
    if color.channels() != 3 || alpha.channels() != 1 {
        return Err(Error::Shape("warp_plane needs RGB color and 1-channel alpha".into()));
    }
    if color.width() != alpha.width() || color.height() != alpha.height() {
        return Err(Error::Shape("color and alpha sizes differ".into()));
    }
    if out_width == 0 || out_height == 0 {
        return Err(Error::Shape("empty output raster".into()));
    }
    let (w, h) = (color.width(), color.height());
    let tex = rgba_texture(color.data(), alpha.data());
    let hm = to_row_major(homography);
    let mut out_c = vec![0.0f32; out_width * out_height * 3];
    let mut out_a = vec![0.0f32; out_width * out_height];
    for v in 0..out_height {
        let row = RowMap::new(&hm, v as f64);
        for u in 0..out_width {
            let (x, y) = row.at(u as f64);
            if let Some(s) = bilinear_sample::<4>(&tex, w, h, x, y) {
                let i = v * out_width + u;
                out_c[i * 3..i * 3 + 3].copy_from_slice(&s[..3]);
                out_a[i] = s[3];
            }
        }
    }
    Ok((
        ImageBuffer::new(out_width, out_height, 3, out_c)?,
        ImageBuffer::new(out_width, out_height, 1, out_a)?,
    ))
}
