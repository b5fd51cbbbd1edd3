use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};

/// A plane after warping into the target raster.
#[derive(Clone, Debug)]
pub struct WarpedPlane {
    pub color: ImageBuffer,
    pub alpha: ImageBuffer,
}

/// Over-composited color and the total compositing weight per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct Composite {
    pub color: ImageBuffer,
    pub weightsum: ImageBuffer,
}

/// Compositing stops once the transmittance falls to this value; the planes
/// behind could change the result by at most as much.
pub const TRANSMITTANCE_CUTOFF: f64 = 1e-9;

/// Front-to-back over operator:
/// `Σ_i c_i α_i Π_{j<i} (1 − α_j)`.
///
/// Accumulation is per pixel in `f64`, nearest plane first.
pub fn composite(planes: &[WarpedPlane]) -> Result<Composite> {
    let first = planes
        .first()
        .ok_or_else(|| Error::invalid("composite", "no planes"))?;
    let (w, h) = (first.color.width(), first.color.height());
    for p in planes {
        if p.color.channels() != 3
            || p.alpha.channels() != 1
            || p.color.width() != w
            || p.color.height() != h
            || p.alpha.width() != w
            || p.alpha.height() != h
        {
            return Err(Error::Shape("warped planes must share one raster size".into()));
        }
    }
    let n = w * h;
    let mut color = vec![0.0f32; n * 3];
    let mut weights = vec![0.0f32; n];
    for i in 0..n {
        let mut transmittance = 1.0f64;
        let mut acc = [0.0f64; 3];
        let mut wsum = 0.0f64;
        for p in planes {
            if transmittance <= TRANSMITTANCE_CUTOFF {
                break;
            }
            let a = p.alpha.data()[i] as f64;
            let c = &p.color.data()[i * 3..i * 3 + 3];
            let wgt = a * transmittance;
            acc[0] += wgt * c[0] as f64;
            acc[1] += wgt * c[1] as f64;
            acc[2] += wgt * c[2] as f64;
            wsum += wgt;
            transmittance *= 1.0 - a;
        }
        color[i * 3] = acc[0] as f32;
        color[i * 3 + 1] = acc[1] as f32;
        color[i * 3 + 2] = acc[2] as f32;
        weights[i] = wsum.clamp(0.0, 1.0) as f32;
    }
    Ok(Composite {
        color: ImageBuffer::new(w, h, 3, color)?,
        weightsum: ImageBuffer::new(w, h, 1, weights)?,
    })
}
