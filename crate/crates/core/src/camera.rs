//! Pinhole intrinsics and rigid camera poses.
//!
//! Pixel centers sit at integer coordinates: pixel `(u, v)` images the ray
//! `K⁻¹ [u, v, 1]ᵀ`.

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::error::{Error, Result};

/// Pinhole camera intrinsics, in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = Intrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    /// Square pixels, principal point at the image center and the given
    /// horizontal field of view in degrees.
    pub fn from_fov(width: usize, height: usize, fov_deg: f64) -> Result<Self> {
        if !(fov_deg > 0.0 && fov_deg < 180.0) {
            return Err(Error::invalid("field of view", format!("{fov_deg} degrees")));
        }
        let f = 0.5 * width as f64 / (0.5 * fov_deg.to_radians()).tan();
        Self::new(
            f,
            f,
            (width as f64 - 1.0) * 0.5,
            (height as f64 - 1.0) * 0.5,
            width,
            height,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("intrinsics", "image size must be positive"));
        }
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(Error::invalid(
                "intrinsics",
                format!("focal lengths must be positive, got fx={} fy={}", self.fx, self.fy),
            ));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err(Error::invalid(
                "intrinsics",
                format!("cx={} outside [0, {})", self.cx, self.width),
            ));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(Error::invalid(
                "intrinsics",
                format!("cy={} outside [0, {})", self.cy, self.height),
            ));
        }
        Ok(())
    }

    /// Same camera resampled to a new raster size.
    pub fn resized(&self, width: usize, height: usize) -> Result<Self> {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        Self::new(
            self.fx * sx,
            self.fy * sy,
            (self.cx + 0.5) * sx - 0.5,
            (self.cy + 0.5) * sy - 0.5,
            width,
            height,
        )
    }

    /// Horizontal field of view in degrees.
    pub fn fov_deg(&self) -> f64 {
        (2.0 * (0.5 * self.width as f64 / self.fx).atan()).to_degrees()
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }

    /// Ray through pixel `(u, v)` with unit z component.
    #[inline]
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    /// Pixel coordinates of a camera-frame point; `None` at or behind the
    /// camera center plane.
    #[inline]
    pub fn project(&self, p: &Vector3<f64>) -> Option<(f64, f64)> {
        if p.z <= 0.0 {
            return None;
        }
        Some((self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }

    /// Euclidean length of every pixel's unit-z ray, row-major.
    pub fn ray_norms(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width * self.height);
        for v in 0..self.height {
            let y = (v as f64 - self.cy) / self.fy;
            for u in 0..self.width {
                let x = (u as f64 - self.cx) / self.fx;
                out.push((x * x + y * y + 1.0).sqrt());
            }
        }
        out
    }
}

/// Rigid transform taking target-camera coordinates into the source camera:
/// `X_source = rotation · X_target + translation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraPose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

/// Tolerance on `‖RᵀR − I‖∞` for a rotation to count as orthonormal.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

impl CameraPose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        Self::with_tolerance(rotation, translation, ROTATION_TOLERANCE)
    }

    /// Like [`CameraPose::new`] with a caller-chosen orthonormality tolerance,
    /// for rotations read back from text.
    pub fn with_tolerance(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        tol: f64,
    ) -> Result<Self> {
        if rotation.iter().chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("pose", "non-finite entries"));
        }
        let err = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if err >= tol {
            return Err(Error::invalid(
                "pose",
                format!("rotation not orthonormal (|RᵀR - I| = {err:e})"),
            ));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > 1e-6 {
            return Err(Error::invalid("pose", format!("rotation determinant {det}")));
        }
        Ok(CameraPose {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        CameraPose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        CameraPose {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    /// Rotation about x, then y, then z (angles in radians), followed by
    /// the translation.
    pub fn from_euler_xyz(rx: f64, ry: f64, rz: f64, t: Vector3<f64>) -> Self {
        CameraPose {
            rotation: *Rotation3::from_euler_angles(rx, ry, rz).matrix(),
            translation: t,
        }
    }

    /// Pose with the roles of the two cameras swapped.
    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        CameraPose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Maps a target-frame point into the source frame.
    #[inline]
    pub fn to_source(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Maps a source-frame point into the target frame.
    #[inline]
    pub fn to_target(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.translation)
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == Matrix3::identity() && self.translation == Vector3::zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intrinsics_validation() {
        assert!(Intrinsics::new(100.0, 100.0, 10.0, 10.0, 20, 20).is_ok());
        assert!(Intrinsics::new(0.0, 100.0, 10.0, 10.0, 20, 20).is_err());
        assert!(Intrinsics::new(100.0, 100.0, 20.0, 10.0, 20, 20).is_err());
        assert!(Intrinsics::new(100.0, 100.0, -0.1, 10.0, 20, 20).is_err());
    }

    #[test]
    fn fov_round_trip() {
        let k = Intrinsics::from_fov(384, 256, 60.0).unwrap();
        assert!((k.fov_deg() - 60.0).abs() < 1e-12);
        assert_eq!(k.cx, 191.5);
        let inv = k.matrix() * k.inverse_matrix();
        assert!((inv - Matrix3::identity()).amax() < 1e-12);
    }

    #[test]
    fn pose_inverse_composes_to_identity() {
        let p = CameraPose::from_euler_xyz(0.1, -0.2, 0.05, Vector3::new(0.3, -0.1, 0.2));
        let x = Vector3::new(1.0, 2.0, 3.0);
        let back = p.inverse().to_source(&p.to_source(&x));
        assert!((back - x).amax() < 1e-12);
        assert!((p.to_target(&p.to_source(&x)) - x).amax() < 1e-12);
    }

    #[test]
    fn rejects_non_rotations() {
        let m = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.001);
        assert!(CameraPose::new(m, Vector3::zeros()).is_err());
        let reflect = Matrix3::new(-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(CameraPose::new(reflect, Vector3::zeros()).is_err());
    }
}
