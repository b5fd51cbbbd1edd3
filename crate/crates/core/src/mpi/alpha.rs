use crate::buffer::ImageBuffer;
use crate::camera::Intrinsics;
use crate::error::{Error, Result};

use super::Mpi;

/// Alphas are clamped to `[ALPHA_MIN, 1]` before inverting `α = exp(−δσ)`.
pub const ALPHA_MIN: f32 = 1e-6;

/// Axial spacing behind each plane: `d_{i+1} − d_i`, the last plane repeating
/// the previous gap and a lone plane using its own depth.
pub fn plane_gaps(depths: &[f64]) -> Vec<f64> {
    match depths.len() {
        0 => Vec::new(),
        1 => vec![depths[0]],
        n => {
            let mut gaps: Vec<f64> = depths.windows(2).map(|w| w[1] - w[0]).collect();
            gaps.push(gaps[n - 2]);
            gaps
        }
    }
}

/// Distance maps `δ_i(u, v) = ‖x_{i+1}(u, v) − x_i(u, v)‖` where `x_i` is
/// pixel `(u, v)` unprojected to depth `d_i`. Both points lie on the same
/// ray, so this is the axial gap times the length of the unit-z ray.
pub fn delta_maps(depths: &[f64], intrinsics: &Intrinsics) -> Vec<ImageBuffer> {
    let norms = intrinsics.ray_norms();
    plane_gaps(depths)
        .into_iter()
        .map(|gap| {
            let data = norms.iter().map(|n| (gap * n) as f32).collect();
            ImageBuffer::new(intrinsics.width, intrinsics.height, 1, data)
                .expect("finite distance map")
        })
        .collect()
}

#[inline]
pub(crate) fn alpha_from(sigma: f32, delta: f64) -> f32 {
    (-(delta * sigma as f64)).exp() as f32
}

/// Converts every plane's density to alpha with `α = exp(−δ·σ)`.
pub fn sigma_to_alpha(mpi: &Mpi) -> Vec<ImageBuffer> {
    let k = mpi.intrinsics();
    let norms = k.ray_norms();
    let gaps = plane_gaps(&mpi.depths());
    mpi.planes()
        .iter()
        .zip(gaps)
        .map(|(plane, gap)| {
            let data = plane
                .density
                .data()
                .iter()
                .zip(&norms)
                .map(|(&s, &n)| alpha_from(s, gap * n))
                .collect();
            ImageBuffer::new(k.width, k.height, 1, data).expect("finite alpha")
        })
        .collect()
}

/// Inverse of [`sigma_to_alpha`]: `σ = −ln(α) / δ` with α clamped to
/// `[ALPHA_MIN, 1]`.
pub fn alpha_to_sigma(alphas: &[ImageBuffer], deltas: &[ImageBuffer]) -> Result<Vec<ImageBuffer>> {
    if alphas.len() != deltas.len() {
        return Err(Error::Shape(format!(
            "{} alpha maps vs {} distance maps",
            alphas.len(),
            deltas.len()
        )));
    }
    alphas
        .iter()
        .zip(deltas)
        .map(|(a, d)| {
            a.ensure_shape(d, "alpha vs distance map")?;
            if a.channels() != 1 {
                return Err(Error::Shape("alpha maps must have one channel".into()));
            }
            let mut out = Vec::with_capacity(a.data().len());
            for (&alpha, &delta) in a.data().iter().zip(d.data()) {
                if !(delta > 0.0) {
                    return Err(Error::invalid(
                        "distance map",
                        format!("δ = {delta} must be positive"),
                    ));
                }
                let alpha = alpha.clamp(ALPHA_MIN, 1.0) as f64;
                // max() turns the -0.0 from ln(1) into +0.0
                out.push((-alpha.ln() / delta as f64).max(0.0) as f32);
            }
            ImageBuffer::new(a.width(), a.height(), 1, out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpi::MpiPlane;
    use proptest::prelude::*;

    fn intrinsics() -> Intrinsics {
        Intrinsics::new(50.0, 60.0, 8.0, 6.0, 17, 13).unwrap()
    }

    fn mpi_with_density(depths: &[f64], sigma: impl Fn(usize, usize, usize) -> f32) -> Mpi {
        let k = intrinsics();
        let planes = depths
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                MpiPlane::new(
                    ImageBuffer::zeros(k.width, k.height, 3),
                    ImageBuffer::from_fn(k.width, k.height, 1, |x, y, _| sigma(i, x, y)),
                    d,
                )
                .unwrap()
            })
            .collect();
        Mpi::new(planes, k).unwrap()
    }

    #[test]
    fn gap_boundary_rules() {
        assert_eq!(plane_gaps(&[3.0]), vec![3.0]);
        assert_eq!(plane_gaps(&[1.0, 2.0, 4.0]), vec![1.0, 2.0, 2.0]);
    }

    #[test]
    fn zero_density_is_opaque() {
        let mpi = mpi_with_density(&[1.0, 2.0, 3.0], |_, _, _| 0.0);
        for a in sigma_to_alpha(&mpi) {
            assert!(a.data().iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn principal_point_half_alpha() {
        let depths = [1.0, 1.5, 4.0];
        let k = intrinsics();
        let (cx, cy) = (k.cx as usize, k.cy as usize);
        let mpi = mpi_with_density(&depths, |i, _, _| {
            let gap = if i + 1 < depths.len() { depths[i + 1] - depths[i] } else { depths[i] - depths[i - 1] };
            (std::f64::consts::LN_2 / gap) as f32
        });
        for a in sigma_to_alpha(&mpi) {
            assert!((a.get(cx, cy, 0) - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn off_axis_distance_matches_unprojection() {
        let depths = [1.25, 2.0, 7.5];
        let k = intrinsics();
        let deltas = delta_maps(&depths, &k);
        for v in 0..k.height {
            for u in 0..k.width {
                for (i, delta) in deltas.iter().enumerate() {
                    let (a, b) = if i + 1 < depths.len() { (depths[i], depths[i + 1]) } else { (depths[i - 1], depths[i]) };
                    let xa = k.ray(u as f64, v as f64) * a;
                    let xb = k.ray(u as f64, v as f64) * b;
                    let oracle = (xb - xa).norm();
                    // stored as f32
                    assert!((delta.get(u, v, 0) as f64 - oracle).abs() < 1e-9 + oracle * 1e-7);
                }
            }
        }
    }

    #[test]
    fn inverse_closed_forms() {
        let one = ImageBuffer::filled(2, 2, 1, 1.0);
        let half = ImageBuffer::filled(2, 2, 1, 0.5);
        let unit = ImageBuffer::filled(2, 2, 1, 1.0);
        let s = alpha_to_sigma(&[one, half], &[unit.clone(), unit]).unwrap();
        assert!(s[0].data().iter().all(|&v| v == 0.0 && v.is_sign_positive()));
        assert!(s[1].data().iter().all(|&v| (v as f64 - std::f64::consts::LN_2).abs() < 1e-7));
    }

    #[test]
    fn rejects_non_positive_delta() {
        let a = ImageBuffer::filled(2, 1, 1, 0.5);
        let d = ImageBuffer::new(2, 1, 1, vec![1.0, 0.0]).unwrap();
        assert!(alpha_to_sigma(&[a], &[d]).is_err());
    }

    proptest! {
        #[test]
        fn alpha_round_trip(seed in any::<u64>(), n in 1usize..5) {
            let mut state = seed | 1;
            let mut next = move || {
                state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            let mut depths = vec![0.5 + next()];
            for _ in 1..n { let last = *depths.last().unwrap(); depths.push(last + 0.01 + 3.0 * next()); }
            let k = intrinsics();
            // log-uniform alphas across [ALPHA_MIN, 1]
            let alphas: Vec<ImageBuffer> = (0..n)
                .map(|_| ImageBuffer::from_fn(k.width, k.height, 1, |_, _, _| (ALPHA_MIN as f64).powf(next()) as f32))
                .collect();
            let deltas = delta_maps(&depths, &k);
            let sigma = alpha_to_sigma(&alphas, &deltas).unwrap();
            let planes = sigma.into_iter().zip(&depths).map(|(s, &d)| MpiPlane::new(ImageBuffer::zeros(k.width, k.height, 3), s, d).unwrap()).collect();
            let back = sigma_to_alpha(&Mpi::new(planes, k).unwrap());
            for (a, b) in alphas.iter().zip(&back) {
                for (x, y) in a.data().iter().zip(b.data()) {
                    prop_assert!((x - y).abs() <= 1e-6, "{} vs {}", x, y);
                }
            }
        }
    }
}
