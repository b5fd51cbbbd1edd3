use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::camera::{CameraPose, Intrinsics};
use crate::error::{Error, Result};

/// Half-ranges of the random target camera.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraSampleRanges {
    /// Translation half-ranges as fractions of the median scene depth.
    pub translation: [f64; 3],
    /// Rotation half-ranges in degrees about x, y and z.
    pub rotation_deg: [f64; 3],
    /// Horizontal field of view range in degrees.
    pub fov_deg: (f64, f64),
}

impl Default for CameraSampleRanges {
    fn default() -> Self {
        CameraSampleRanges {
            translation: [0.10, 0.10, 0.05],
            rotation_deg: [3.0; 3],
            fov_deg: (45.0, 65.0),
        }
    }
}

impl CameraSampleRanges {
    /// No motion, field of view fixed at the middle of the default range.
    pub fn zero() -> Self {
        CameraSampleRanges {
            translation: [0.0; 3],
            rotation_deg: [0.0; 3],
            fov_deg: (55.0, 55.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.translation.iter().chain(&self.rotation_deg);
        if all.clone().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("camera ranges", "half-ranges must be finite and non-negative"));
        }
        let (lo, hi) = self.fov_deg;
        if !(lo > 10.0 && hi < 120.0 && lo <= hi) {
            return Err(Error::invalid(
                "camera ranges",
                format!("fov range ({lo}, {hi}) must be ordered inside (10, 120) degrees"),
            ));
        }
        Ok(())
    }

    pub fn is_zero_motion(&self) -> bool {
        self.translation.iter().chain(&self.rotation_deg).all(|&v| v == 0.0)
    }
}

/// Intrinsics and target pose drawn for one pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampledCamera {
    pub intrinsics: Intrinsics,
    /// Maps target-camera coordinates into the source camera.
    pub pose: CameraPose,
}

/// Draws a camera from a ChaCha8 stream seeded with `seed`, in the order
/// tx, ty, tz, rx, ry, rz, fov. Each value is uniform in its range; the
/// rotation is composed about x, then y, then z.
pub fn sample_camera(
    seed: u64,
    ranges: &CameraSampleRanges,
    median_depth: f64,
    width: usize,
    height: usize,
) -> Result<SampledCamera> {
    ranges.validate()?;
    if !(median_depth > 0.0 && median_depth.is_finite()) {
        return Err(Error::invalid("median depth", format!("{median_depth} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sym = |r: f64| if r > 0.0 { rng.random_range(-r..=r) } else { 0.0 };
    let t = Vector3::new(
        sym(ranges.translation[0] * median_depth),
        sym(ranges.translation[1] * median_depth),
        sym(ranges.translation[2] * median_depth),
    );
    let [rx, ry, rz] = ranges.rotation_deg.map(|r| sym(r.to_radians()));
    let (lo, hi) = ranges.fov_deg;
    let fov = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let intrinsics = Intrinsics::from_fov(width, height, fov)?;
    let pose = if rx == 0.0 && ry == 0.0 && rz == 0.0 {
        CameraPose::from_translation(t)
    } else {
        CameraPose::from_euler_xyz(rx, ry, rz, t)
    };
    Ok(SampledCamera { intrinsics, pose })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let r = CameraSampleRanges::default();
        let a = sample_camera(42, &r, 3.0, 64, 48).unwrap();
        let b = sample_camera(42, &r, 3.0, 64, 48).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_camera(43, &r, 3.0, 64, 48).unwrap());
    }

    #[test]
    fn zero_ranges() {
        let s = sample_camera(9, &CameraSampleRanges::zero(), 3.0, 64, 48).unwrap();
        assert!(s.pose.is_identity());
        assert!((s.intrinsics.fov_deg() - 55.0).abs() < 1e-9);
        assert_eq!(s.intrinsics.cx, 31.5);
    }

    #[test]
    fn rejects_bad_ranges() {
        let mut r = CameraSampleRanges::default();
        r.fov_deg = (5.0, 50.0);
        assert!(sample_camera(0, &r, 1.0, 8, 8).is_err());
        let mut r = CameraSampleRanges::default();
        r.translation[1] = -0.1;
        assert!(sample_camera(0, &r, 1.0, 8, 8).is_err());
    }

    #[test]
    fn samples_stay_in_range() {
        let r = CameraSampleRanges::default();
        let m = 4.0;
        let (mut tmin, mut tmax) = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
        let (mut fmin, mut fmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for seed in 0..10_000 {
            let s = sample_camera(seed, &r, m, 32, 24).unwrap();
            for i in 0..3 {
                tmin[i] = tmin[i].min(s.pose.translation[i]);
                tmax[i] = tmax[i].max(s.pose.translation[i]);
            }
            let (rx, ry, rz) = nalgebra::Rotation3::from_matrix_unchecked(s.pose.rotation).euler_angles();
            for a in [rx, ry, rz] {
                assert!(a.abs() <= 3f64.to_radians() + 1e-12);
            }
            let f = s.intrinsics.fov_deg();
            fmin = fmin.min(f);
            fmax = fmax.max(f);
        }
        for i in 0..3 {
            let lim = r.translation[i] * m;
            assert!(tmin[i] >= -lim && tmax[i] <= lim);
            // the draws actually use most of the range
            assert!(tmin[i] < -0.9 * lim && tmax[i] > 0.9 * lim);
        }
        assert!(fmin >= 45.0 - 1e-9 && fmax <= 65.0 + 1e-9);
        assert!(fmin < 46.0 && fmax > 64.0);
    }
}
