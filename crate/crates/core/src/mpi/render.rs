use rayon::prelude::*;

use crate::buffer::{DepthMap, ImageBuffer};
use crate::camera::{CameraPose, Intrinsics};
use crate::error::Result;

use super::alpha::{alpha_from, plane_gaps};
use super::homography::{plane_homography, to_row_major, RowMap};
use super::warp::{bilinear_sample, rgba_texture};
use super::composite::TRANSMITTANCE_CUTOFF;
use super::Mpi;

/// Rendered depth is normalized by the compositing weight only where that
/// weight exceeds this floor; elsewhere it falls back to the farthest plane.
pub const DEPTH_WEIGHT_FLOOR: f64 = 1e-4;

/// Output of [`render_view`].
#[derive(Clone, Debug, PartialEq)]
pub struct RenderOutput {
    pub color: ImageBuffer,
    pub depth: DepthMap,
    pub weightsum: ImageBuffer,
}

/// An MPI with densities already converted to alpha and each plane packed
/// as an RGBA texture, ready to render many views.
#[derive(Clone, Debug)]
pub struct PreparedMpi {
    textures: Vec<Vec<f32>>,
    depths: Vec<f64>,
    intrinsics: Intrinsics,
}

impl PreparedMpi {
    pub fn new(mpi: &Mpi) -> Self {
        let k = *mpi.intrinsics();
        let norms = k.ray_norms();
        let gaps = plane_gaps(&mpi.depths());
        let textures = mpi
            .planes()
            .par_iter()
            .zip(gaps)
            .map(|(plane, gap)| {
                let mut tex = Vec::with_capacity(norms.len() * 4);
                for ((rgb, &s), &n) in plane
                    .color
                    .data()
                    .chunks_exact(3)
                    .zip(plane.density.data())
                    .zip(&norms)
                {
                    tex.extend_from_slice(&[rgb[0], rgb[1], rgb[2], alpha_from(s, gap * n)]);
                }
                tex
            })
            .collect();
        PreparedMpi {
            textures,
            depths: mpi.depths(),
            intrinsics: k,
        }
    }

    /// Builds from explicit alphas instead of densities.
    pub fn from_alphas(
        colors: &[ImageBuffer],
        alphas: &[ImageBuffer],
        depths: &[f64],
        intrinsics: Intrinsics,
    ) -> Self {
        assert_eq!(colors.len(), alphas.len());
        assert_eq!(colors.len(), depths.len());
        let textures = colors
            .iter()
            .zip(alphas)
            .map(|(c, a)| rgba_texture(c.data(), a.data()))
            .collect();
        PreparedMpi {
            textures,
            depths: depths.to_vec(),
            intrinsics,
        }
    }

    pub fn intrinsics(&self) -> &Intrinsics {
        &self.intrinsics
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    /// Renders the view of a camera with intrinsics `target` placed at `pose`
    /// relative to the source camera.
    ///
    /// Rows are rendered in parallel; each pixel accumulates its planes
    /// nearest first, so the result does not depend on the schedule.
    pub fn render(&self, pose: &CameraPose, target: &Intrinsics) -> Result<RenderOutput> {
        target.validate()?;
        let homographies = self
            .depths
            .iter()
            .map(|&d| plane_homography(d, &self.intrinsics, target, pose).map(|h| to_row_major(&h)))
            .collect::<Result<Vec<_>>>()?;
        let (w, h) = (target.width, target.height);
        let (sw, sh) = (self.intrinsics.width, self.intrinsics.height);
        let far = *self.depths.last().expect("at least one plane");

        let mut color = vec![0.0f32; w * h * 3];
        let mut depth = vec![0.0f32; w * h];
        let mut weights = vec![0.0f32; w * h];

        color
            .par_chunks_mut(w * 3)
            .zip(depth.par_chunks_mut(w))
            .zip(weights.par_chunks_mut(w))
            .enumerate()
            .for_each(|(v, ((crow, drow), wrow))| {
                let mut trans = vec![1.0f64; w];
                let mut acc = vec![0.0f64; w * 3];
                let mut wsum = vec![0.0f64; w];
                let mut dsum = vec![0.0f64; w];
                let vy = v as f64;
                for ((tex, hm), &d) in self.textures.iter().zip(&homographies).zip(&self.depths) {
                    let row = RowMap::new(hm, vy);
                    for u in 0..w {
                        let t = trans[u];
                        if t <= TRANSMITTANCE_CUTOFF {
                            continue;
                        }
                        let (x, y) = row.at(u as f64);
                        let Some(s) = bilinear_sample::<4>(tex, sw, sh, x, y) else {
                            continue;
                        };
                        let a = s[3] as f64;
                        let wgt = a * t;
                        acc[u * 3] += wgt * s[0] as f64;
                        acc[u * 3 + 1] += wgt * s[1] as f64;
                        acc[u * 3 + 2] += wgt * s[2] as f64;
                        wsum[u] += wgt;
                        dsum[u] += wgt * d;
                        trans[u] = t * (1.0 - a);
                    }
                }
                for u in 0..w {
                    crow[u * 3] = acc[u * 3] as f32;
                    crow[u * 3 + 1] = acc[u * 3 + 1] as f32;
                    crow[u * 3 + 2] = acc[u * 3 + 2] as f32;
                    wrow[u] = wsum[u].clamp(0.0, 1.0) as f32;
                    drow[u] = if wsum[u] > DEPTH_WEIGHT_FLOOR {
                        (dsum[u] / wsum[u]) as f32
                    } else {
                        far as f32
                    };
                }
            });

        Ok(RenderOutput {
            color: ImageBuffer::new(w, h, 3, color)?,
            depth: DepthMap::new(w, h, depth)?,
            weightsum: ImageBuffer::new(w, h, 1, weights)?,
        })
    }
}

/// Renders `mpi` from a camera with intrinsics `target` at `pose`.
///
/// Color follows the over operator; depth is the weight-normalized sum of
/// plane depths.
pub fn render_view(mpi: &Mpi, pose: &CameraPose, target: &Intrinsics) -> Result<RenderOutput> {
    PreparedMpi::new(mpi).render(pose, target)
}
