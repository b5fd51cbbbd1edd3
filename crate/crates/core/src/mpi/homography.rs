use nalgebra::Matrix3;

use crate::camera::{CameraPose, Intrinsics};
use crate::error::{Error, Result};

/// Homography taking target pixels to source pixels through the source-frame
/// plane `z = depth`.
///
/// A target ray `r = K_t⁻¹ [u, v, 1]ᵀ` becomes `λ R r + t` in the source
/// frame and meets the plane at `λ = (depth − t_z) / (R r)_z`. Dividing by `λ`
/// gives the linear map `R + t (nᵀR) / (depth − t_z)` with `n = [0, 0, 1]ᵀ`,
/// which is then wrapped by the intrinsics. The homogeneous `w` of the
/// result equals `depth / λ`, so rays meeting the plane behind the target
/// camera come out with `w < 0`.
///
/// When the target camera center lies on the plane every ray degenerates;
/// the zero matrix is returned and every pixel samples out of bounds.
pub fn plane_homography(
    depth: f64,
    source: &Intrinsics,
    target: &Intrinsics,
    pose: &CameraPose,
) -> Result<Matrix3<f64>> {
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(Error::invalid("plane depth", format!("{depth} must be positive")));
    }
    let r = &pose.rotation;
    let t = &pose.translation;
    let denom = depth - t.z;
    if denom.abs() <= 1e-12 * depth {
        return Ok(Matrix3::zeros());
    }
    let n_r = r.row(2);
    let m = r + (t * n_r) / denom;
    Ok(source.matrix() * m * target.inverse_matrix())
}

/// Applies a homography to pixel `(u, v)` and dehomogenizes.
///
/// Returns NaN coordinates when the homogeneous scale is not positive, which
/// every sampler treats as out of bounds.
#[inline]
pub fn map_pixel(h: &[f64; 9], u: f64, v: f64) -> (f64, f64) {
    RowMap::new(h, v).at(u)
}

/// A homography restricted to one target row `v`.
#[derive(Clone, Copy)]
pub(crate) struct RowMap {
    h: [f64; 3],
    b: [f64; 3],
}

impl RowMap {
    #[inline]
    pub(crate) fn new(h: &[f64; 9], v: f64) -> Self {
        RowMap {
            h: [h[0], h[3], h[6]],
            b: [h[1] * v + h[2], h[4] * v + h[5], h[7] * v + h[8]],
        }
    }

    #[inline]
    pub(crate) fn at(&self, u: f64) -> (f64, f64) {
        let w = self.h[2] * u + self.b[2];
        if !(w > 0.0) {
            return (f64::NAN, f64::NAN);
        }
        let r = 1.0 / w;
        ((self.h[0] * u + self.b[0]) * r, (self.h[1] * u + self.b[1]) * r)
    }
}

/// Row-major copy of a matrix for [`map_pixel`].
pub(crate) fn to_row_major(m: &Matrix3<f64>) -> [f64; 9] {
    [
        m[(0, 0)],
        m[(0, 1)],
        m[(0, 2)],
        m[(1, 0)],
        m[(1, 1)],
        m[(1, 2)],
        m[(2, 0)],
        m[(2, 1)],
        m[(2, 2)],
    ]
}
