use crate::buffer::{DepthMap, ImageBuffer};
use crate::camera::{CameraPose, Intrinsics};
use crate::error::{Error, Result};
use crate::fill::diffuse;

use super::mesh::grid_mesh;
use super::{mesh_from_depth, rasterize, sample_camera, CameraSampleRanges, RasterResult};

/// Default long-edge threshold in disparity per pixel.
pub const DEFAULT_GRAD_THRESH: f64 = 0.04;

/// Re-renders a target-view raster back into the source view. Only covered
/// target pixels are triangulated, with the same long-edge rule as the
/// forward mesh; `pose` is the forward pose (target into source).
pub fn warp_back(
    raster: &RasterResult,
    intrinsics: &Intrinsics,
    pose: &CameraPose,
    grad_thresh: f64,
) -> Result<RasterResult> {
    let finite: Vec<f32> = raster
        .depth
        .iter()
        .zip(&raster.coverage)
        .map(|(&d, &c)| if c { d } else { 1.0 })
        .collect();
    let mesh = grid_mesh(&raster.color, &finite, Some(&raster.coverage), intrinsics, grad_thresh)?;
    rasterize(&mesh, intrinsics, &pose.inverse(), raster.width(), raster.height())
}

fn components(hole: &[bool], w: usize, h: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for start in 0..w * h {
        if !hole[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut i = 0;
        while i < comp.len() {
            let p = comp[i];
            i += 1;
            let (x, y) = (p % w, p / w);
            let mut push = |q: usize| {
                if hole[q] && !seen[q] {
                    seen[q] = true;
                    comp.push(q);
                }
            };
            if x > 0 {
                push(p - 1);
            }
            if x + 1 < w {
                push(p + 1);
            }
            if y > 0 {
                push(p - w);
            }
            if y + 1 < h {
                push(p + w);
            }
        }
        out.push(comp);
    }
    out
}

/// Fills holes from the background side.
///
/// Each 4-connected hole region is diffused (color and depth together) from
/// its boundary pixels, except those in the nearer half of the region's
/// boundary disparity range. Returns the inputs unchanged when there are no
/// holes.
pub fn fill_holes(color: &ImageBuffer, depth: &[f32], holes: &[bool]) -> Result<(ImageBuffer, DepthMap)> {
    let (w, h) = (color.width(), color.height());
    if color.channels() != 3 {
        return Err(Error::Shape(format!("color has {} channels, want 3", color.channels())));
    }
    if depth.len() != w * h || holes.len() != w * h {
        return Err(Error::Shape("depth or hole mask does not match the color raster".into()));
    }
    if holes.iter().all(|&b| b) {
        return Err(Error::invalid("hole mask", "no pixel is covered"));
    }
    if depth.iter().zip(holes).any(|(&d, &hole)| !hole && !(d > 0.0 && d.is_finite())) {
        return Err(Error::invalid("depth", "covered pixels need positive finite depth"));
    }
    let mut rgbd: Vec<f32> = Vec::with_capacity(w * h * 4);
    for p in 0..w * h {
        let c = &color.data()[p * 3..p * 3 + 3];
        let d = if holes[p] { 0.0 } else { depth[p] };
        rgbd.extend_from_slice(&[c[0], c[1], c[2], d]);
    }

    for comp in components(holes, w, h) {
        // bounding box with a one-pixel margin holds the region and its boundary
        let (mut x0, mut y0, mut x1, mut y1) = (w, h, 0, 0);
        for &p in &comp {
            let (x, y) = (p % w, p / w);
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        let (x0, y0) = (x0.saturating_sub(1), y0.saturating_sub(1));
        let (x1, y1) = ((x1 + 1).min(w - 1), (y1 + 1).min(h - 1));
        let (bw, bh) = (x1 - x0 + 1, y1 - y0 + 1);
        let local = |p: usize| (p / w - y0) * bw + (p % w - x0);

        let mut hole = vec![false; bw * bh];
        for &p in &comp {
            hole[local(p)] = true;
        }
        let mut boundary = vec![false; bw * bh];
        let (mut qmin, mut qmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for ly in 0..bh {
            for lx in 0..bw {
                let l = ly * bw + lx;
                let p = (y0 + ly) * w + x0 + lx;
                if holes[p] {
                    continue;
                }
                let touches = (lx > 0 && hole[l - 1])
                    || (lx + 1 < bw && hole[l + 1])
                    || (ly > 0 && hole[l - bw])
                    || (ly + 1 < bh && hole[l + bw]);
                if touches {
                    boundary[l] = true;
                    let q = 1.0 / depth[p] as f64;
                    qmin = qmin.min(q);
                    qmax = qmax.max(q);
                }
            }
        }
        let mid = 0.5 * (qmin + qmax);
        let mut usable = vec![false; bw * bh];
        let mut values = vec![0.0f32; bw * bh * 4];
        for ly in 0..bh {
            for lx in 0..bw {
                let l = ly * bw + lx;
                let p = (y0 + ly) * w + x0 + lx;
                values[l * 4..l * 4 + 4].copy_from_slice(&rgbd[p * 4..p * 4 + 4]);
                usable[l] = boundary[l] && 1.0 / depth[p] as f64 <= mid;
            }
        }
        diffuse(bw, bh, 4, &mut values, &hole, &usable);
        for &p in &comp {
            let l = local(p);
            rgbd[p * 4..p * 4 + 4].copy_from_slice(&values[l * 4..l * 4 + 4]);
        }
    }

    let mut out_color = Vec::with_capacity(w * h * 3);
    let mut out_depth = Vec::with_capacity(w * h);
    for px in rgbd.chunks_exact(4) {
        out_color.extend_from_slice(&px[..3]);
        out_depth.push(px[3]);
    }
    Ok((ImageBuffer::new(w, h, 3, out_color)?, DepthMap::new(w, h, out_depth)?))
}

/// How pairs are generated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairConfig {
    pub ranges: CameraSampleRanges,
    /// Long-edge threshold of the lifted mesh, disparity per pixel.
    pub grad_thresh: f64,
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig {
            ranges: CameraSampleRanges::default(),
            grad_thresh: DEFAULT_GRAD_THRESH,
        }
    }
}

/// A source view and the synthesized, hole-filled target view.
#[derive(Clone, Debug, PartialEq)]
pub struct StereoPair {
    pub source_color: ImageBuffer,
    pub source_depth: DepthMap,
    pub target_color: ImageBuffer,
    pub target_depth: DepthMap,
    /// Target pixels no triangle reached, before filling.
    pub holes: Vec<bool>,
    /// Shared by both views.
    pub intrinsics: Intrinsics,
    /// Maps target-camera coordinates into the source camera.
    pub pose: CameraPose,
    pub seed: u64,
}

impl StereoPair {
    pub fn width(&self) -> usize {
        self.source_color.width()
    }

    pub fn height(&self) -> usize {
        self.source_color.height()
    }
}

/// Samples a camera, renders the lifted mesh into it and fills the holes.
pub fn generate_pair(
    image: &ImageBuffer,
    depth: &DepthMap,
    seed: u64,
    config: &PairConfig,
) -> Result<StereoPair> {
    depth.ensure_matches(image)?;
    let (w, h) = (image.width(), image.height());
    let cam = sample_camera(seed, &config.ranges, depth.median() as f64, w, h)?;
    let mesh = mesh_from_depth(image, depth, &cam.intrinsics, config.grad_thresh)?;
    let raster = rasterize(&mesh, &cam.intrinsics, &cam.pose, w, h)?;
    let holes = raster.holes();
    let (target_color, target_depth) = fill_holes(&raster.color, &raster.depth, &holes)?;
    Ok(StereoPair {
        source_color: image.clone(),
        source_depth: depth.clone(),
        target_color,
        target_depth,
        holes,
        intrinsics: cam.intrinsics,
        pose: cam.pose,
        seed,
    })
}
