use nalgebra::Vector3;
use rayon::prelude::*;

use crate::buffer::{DepthMap, ImageBuffer};
use crate::camera::{CameraPose, Intrinsics};
use crate::error::{Error, Result};

use super::TriangleMesh;

/// Vertices closer than this to the camera plane discard their triangle.
pub const NEAR_PLANE: f64 = 1e-4;

/// Sub-pixel resolution of the fixed-point screen grid.
const SUBPIXEL: f64 = 256.0;

/// Projected coordinates beyond this many pixels discard the triangle.
const SCREEN_LIMIT: f64 = (1u64 << 20) as f64;

const BAND_ROWS: usize = 16;

/// Colors, depths and coverage of a rendered view. Holes have zero color
/// and depth `+∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterResult {
    pub color: ImageBuffer,
    pub depth: Vec<f32>,
    pub coverage: Vec<bool>,
}

impl RasterResult {
    pub fn width(&self) -> usize {
        self.color.width()
    }

    pub fn height(&self) -> usize {
        self.color.height()
    }

    /// Complement of the coverage.
    pub fn holes(&self) -> Vec<bool> {
        self.coverage.iter().map(|c| !c).collect()
    }

    pub fn hole_count(&self) -> usize {
        self.coverage.iter().filter(|c| !**c).count()
    }

    /// The depth raster as a [`DepthMap`], failing if anything is uncovered.
    pub fn depth_map(&self) -> Result<DepthMap> {
        DepthMap::new(self.width(), self.height(), self.depth.clone())
    }
}

struct Setup {
    /// Fixed-point screen coordinates.
    xy: [[i64; 2]; 3],
    /// Twice the signed area, made positive.
    area: i64,
    flip: bool,
    inv_z: [f64; 3],
    rows: (usize, usize),
    cols: (usize, usize),
}

fn setup(ix: &[u32; 3], screen: &[Option<([i64; 2], f64)>], w: usize, h: usize) -> Option<Setup> {
    let mut xy = [[0i64; 2]; 3];
    let mut inv_z = [0.0; 3];
    for k in 0..3 {
        let (p, z) = screen[ix[k] as usize]?;
        xy[k] = p;
        inv_z[k] = 1.0 / z;
    }
    let area = edge(xy[0], xy[1], xy[2]);
    if area == 0 {
        return None;
    }
    let s = SUBPIXEL as i64;
    let lo = |c: usize| xy.iter().map(|p| p[c]).min().unwrap();
    let hi = |c: usize| xy.iter().map(|p| p[c]).max().unwrap();
    // pixel centres at integer coordinates: first centre at or after the minimum
    let x0 = lo(0).div_euclid(s) + i64::from(lo(0).rem_euclid(s) != 0);
    let y0 = lo(1).div_euclid(s) + i64::from(lo(1).rem_euclid(s) != 0);
    let x1 = hi(0).div_euclid(s);
    let y1 = hi(1).div_euclid(s);
    let x0 = x0.max(0);
    let y0 = y0.max(0);
    let x1 = x1.min(w as i64 - 1);
    let y1 = y1.min(h as i64 - 1);
    if x0 > x1 || y0 > y1 {
        return None;
    }
    Some(Setup {
        xy,
        area: area.abs(),
        flip: area < 0,
        inv_z,
        rows: (y0 as usize, y1 as usize),
        cols: (x0 as usize, x1 as usize),
    })
}

/// Twice the signed area of `(a, b, p)`.
#[inline]
fn edge(a: [i64; 2], b: [i64; 2], p: [i64; 2]) -> i64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Renders `mesh` (given in the frame `pose` maps into) into the view whose
/// coordinates satisfy `X_mesh = R · X_view + t`.
///
/// Vertices snap to a 1/256-pixel grid so coverage uses exact integer edge
/// functions. A pixel centre is covered when it lies inside the triangle or
/// on any of its edges. The nearest interpolated depth wins; on equal depth
/// the earlier triangle is kept. Color and depth are interpolated with
/// perspective correction. Triangles with a vertex at `z ≤ 1e-4` are
/// discarded whole.
pub fn rasterize(
    mesh: &TriangleMesh,
    intrinsics: &Intrinsics,
    pose: &CameraPose,
    width: usize,
    height: usize,
) -> Result<RasterResult> {
    mesh.validate()?;
    if width == 0 || height == 0 {
        return Err(Error::Shape("empty raster".into()));
    }
    let k = intrinsics;
    let screen: Vec<Option<([i64; 2], f64)>> = mesh
        .positions
        .par_iter()
        .map(|p| {
            let v = pose.to_target(&Vector3::new(p[0], p[1], p[2]));
            if v.z <= NEAR_PLANE {
                return None;
            }
            let u = k.fx * v.x / v.z + k.cx;
            let w = k.fy * v.y / v.z + k.cy;
            if !(u.abs() <= SCREEN_LIMIT && w.abs() <= SCREEN_LIMIT) {
                return None;
            }
            Some(([(u * SUBPIXEL).round() as i64, (w * SUBPIXEL).round() as i64], v.z))
        })
        .collect();
    let setups: Vec<Option<Setup>> = mesh
        .triangles
        .par_iter()
        .map(|t| setup(t, &screen, width, height))
        .collect();

    let bands = height.div_ceil(BAND_ROWS);
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); bands];
    for (i, s) in setups.iter().enumerate() {
        if let Some(s) = s {
            for b in bins.iter_mut().take(s.rows.1 / BAND_ROWS + 1).skip(s.rows.0 / BAND_ROWS) {
                b.push(i as u32);
            }
        }
    }

    let mut color = vec![0.0f32; width * height * 3];
    let mut depth = vec![f32::INFINITY; width * height];
    let mut coverage = vec![false; width * height];
    color
        .par_chunks_mut(width * 3 * BAND_ROWS)
        .zip(depth.par_chunks_mut(width * BAND_ROWS))
        .zip(coverage.par_chunks_mut(width * BAND_ROWS))
        .zip(bins.par_iter())
        .enumerate()
        .for_each(|(band, (((color, depth), coverage), tris))| {
            let y_base = band * BAND_ROWS;
            let rows = depth.len() / width;
            let mut zbuf = vec![f64::INFINITY; rows * width];
            for &ti in tris {
                let s = setups[ti as usize].as_ref().unwrap();
                let tri = &mesh.triangles[ti as usize];
                let ya = s.rows.0.max(y_base);
                let yb = s.rows.1.min(y_base + rows - 1);
                for y in ya..=yb {
                    for x in s.cols.0..=s.cols.1 {
                        let p = [x as i64 * SUBPIXEL as i64, y as i64 * SUBPIXEL as i64];
                        let mut e = [
                            edge(s.xy[1], s.xy[2], p),
                            edge(s.xy[2], s.xy[0], p),
                            edge(s.xy[0], s.xy[1], p),
                        ];
                        if s.flip {
                            e.iter_mut().for_each(|v| *v = -*v);
                        }
                        if e.iter().any(|&v| v < 0) {
                            continue;
                        }
                        let area = s.area as f64;
                        let b = [e[0] as f64 / area, e[1] as f64 / area, e[2] as f64 / area];
                        let wv = [b[0] * s.inv_z[0], b[1] * s.inv_z[1], b[2] * s.inv_z[2]];
                        let wsum = wv[0] + wv[1] + wv[2];
                        let z = 1.0 / wsum;
                        let local = (y - y_base) * width + x;
                        if z < zbuf[local] {
                            zbuf[local] = z;
                            let mut c = [0.0f64; 3];
                            for (kv, &vi) in tri.iter().enumerate() {
                                let vc = mesh.colors[vi as usize];
                                for ch in 0..3 {
                                    c[ch] += wv[kv] * vc[ch] as f64;
                                }
                            }
                            for ch in 0..3 {
                                color[local * 3 + ch] = (c[ch] * z) as f32;
                            }
                            depth[local] = z as f32;
                            coverage[local] = true;
                        }
                    }
                }
            }
        });
    Ok(RasterResult {
        color: ImageBuffer::new(width, height, 3, color)?,
        depth,
        coverage,
    })
}
