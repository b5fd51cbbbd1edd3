use crate::buffer::{DepthMap, ImageBuffer};
use crate::camera::Intrinsics;
use crate::error::{Error, Result};

/// Vertices in a camera frame with per-vertex color, plus triangles.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    pub positions: Vec<[f64; 3]>,
    pub colors: Vec<[f32; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn empty() -> Self {
        TriangleMesh {
            positions: Vec::new(),
            colors: Vec::new(),
            triangles: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.len() != self.colors.len() {
            return Err(Error::Shape(format!(
                "{} positions vs {} colors",
                self.positions.len(),
                self.colors.len()
            )));
        }
        if self.positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("mesh", "non-finite vertex position"));
        }
        let n = self.positions.len() as u32;
        if self.triangles.iter().flatten().any(|&i| i >= n) {
            return Err(Error::invalid("mesh", "triangle index out of range"));
        }
        Ok(())
    }
}

/// Grid triangles of cell `(x, y)`: `(p00, p10, p01)` and `(p10, p11, p01)`.
#[inline]
fn cell_triangles(w: usize, x: usize, y: usize) -> [[usize; 3]; 2] {
    let p00 = y * w + x;
    let (p10, p01, p11) = (p00 + 1, p00 + w, p00 + w + 1);
    [[p00, p10, p01], [p10, p11, p01]]
}

/// Lifts pixels of a raster to 3-D and connects grid neighbours, keeping a
/// triangle only when all its vertices are `valid` and no edge jumps more
/// than `grad_thresh` in disparity.
pub(crate) fn grid_mesh(
    color: &ImageBuffer,
    depth: &[f32],
    valid: Option<&[bool]>,
    intrinsics: &Intrinsics,
    grad_thresh: f64,
) -> Result<TriangleMesh> {
    let (w, h) = (color.width(), color.height());
    if color.channels() != 3 {
        return Err(Error::Shape(format!("color has {} channels, want 3", color.channels())));
    }
    if depth.len() != w * h || valid.is_some_and(|v| v.len() != w * h) {
        return Err(Error::Shape("depth or coverage does not match the color raster".into()));
    }
    if intrinsics.width != w || intrinsics.height != h {
        return Err(Error::Shape(format!(
            "intrinsics are {}x{}, raster is {w}x{h}",
            intrinsics.width, intrinsics.height
        )));
    }
    if !(grad_thresh > 0.0) {
        return Err(Error::invalid("gradient threshold", format!("{grad_thresh} must be positive")));
    }
    let ok = |p: usize| valid.is_none_or(|v| v[p]);
    let mut positions = Vec::with_capacity(w * h);
    let mut colors = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let d = if ok(p) { depth[p] as f64 } else { 1.0 };
            positions.push([
                d * (x as f64 - intrinsics.cx) / intrinsics.fx,
                d * (y as f64 - intrinsics.cy) / intrinsics.fy,
                d,
            ]);
            let c = color.pixel(x, y);
            colors.push([c[0], c[1], c[2]]);
        }
    }
    let disp: Vec<f64> = depth.iter().map(|&d| 1.0 / d as f64).collect();
    let short = |a: usize, b: usize| (disp[a] - disp[b]).abs() <= grad_thresh;
    let mut triangles = Vec::with_capacity(2 * w.saturating_sub(1) * h.saturating_sub(1));
    for y in 0..h.saturating_sub(1) {
        for x in 0..w - 1 {
            for t in cell_triangles(w, x, y) {
                let [a, b, c] = t;
                if ok(a) && ok(b) && ok(c) && short(a, b) && short(b, c) && short(c, a) {
                    triangles.push([a as u32, b as u32, c as u32]);
                }
            }
        }
    }
    Ok(TriangleMesh {
        positions,
        colors,
        triangles,
    })
}

/// One vertex per pixel at `D(u, v) · K⁻¹ [u, v, 1]ᵀ`, two triangles per grid
/// cell, and long-edge removal: triangles with an edge whose disparity
/// difference exceeds `grad_thresh` are dropped.
pub fn mesh_from_depth(
    image: &ImageBuffer,
    depth: &DepthMap,
    intrinsics: &Intrinsics,
    grad_thresh: f64,
) -> Result<TriangleMesh> {
    depth.ensure_matches(image)?;
    grid_mesh(image, depth.data(), None, intrinsics, grad_thresh)
}
