//! Scene-specific plane placement.
//!
//! Planes start uniformly spaced in disparity over the depth map's range and
//! are then moved to minimize the assignment loss
//! `(1/HW) Σ_i Σ_p M_i(p) |disp(D(p)) − disp(d_i)|`. Because that loss is an
//! L1 quantization error, the centroid update of the Lloyd iteration is a
//! weighted median rather than a mean.
//!
//! Distances are measured in disparity, which keeps the loss invariant to the
//! (unknown) global scale of monocular depth: scaling every depth by `s`
//! scales the adjusted plane depths by `s`.

mod lloyd;

pub use lloyd::{adjust_planes, adjust_planes_traced, AdjustReport};

use rayon::prelude::*;

use crate::buffer::DepthMap;
use crate::error::{Error, Result};

/// Plane depths, nearest first, strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneDepths(Vec<f64>);

impl PlaneDepths {
    pub fn new(depths: Vec<f64>) -> Result<Self> {
        if depths.is_empty() {
            return Err(Error::invalid("plane depths", "need at least one plane"));
        }
        if let Some(d) = depths.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::invalid("plane depths", format!("{d} is not a positive depth")));
        }
        if let Some(w) = depths.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "plane depths",
                format!("not strictly increasing: {} then {}", w[0], w[1]),
            ));
        }
        Ok(PlaneDepths(depths))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Disparities, nearest (largest) first.
    pub fn disparities(&self) -> Vec<f64> {
        self.0.iter().map(|d| 1.0 / d).collect()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// How pixels are assigned to planes during adjustment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AssignMode {
    /// Nearest plane in disparity.
    #[default]
    Hard,
    /// Softmax over negative disparity distance with temperature τ.
    Soft,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdjustParams {
    /// Soft-assignment temperature in normalized disparity units (the depth
    /// map's disparity span maps to `[0, 1]`).
    pub tau: f64,
    pub iterations: usize,
    pub mode: AssignMode,
    /// Clusters whose mass falls to this fraction of all pixels or below
    /// are moved to the worst-represented disparity.
    pub reseed_threshold: f64,
}

impl Default for AdjustParams {
    fn default() -> Self {
        AdjustParams {
            tau: 0.05,
            iterations: 25,
            mode: AssignMode::Hard,
            reseed_threshold: 1e-4,
        }
    }
}

impl AdjustParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid("adjust params", format!("tau = {}", self.tau)));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("adjust params", "iterations must be at least 1"));
        }
        if !(self.reseed_threshold >= 0.0 && self.reseed_threshold < 1.0) {
            return Err(Error::invalid(
                "adjust params",
                format!("reseed threshold {}", self.reseed_threshold),
            ));
        }
        Ok(())
    }
}

/// Planes uniformly spaced in disparity between `1/d_min` and `1/d_max`
/// inclusive; a single plane sits at the midpoint disparity.
pub fn init_planes(n: usize, d_min: f64, d_max: f64) -> Result<PlaneDepths> {
    if n == 0 {
        return Err(Error::invalid("plane count", "must be at least 1"));
    }
    if !(d_min > 0.0 && d_min < d_max && d_max.is_finite()) {
        return Err(Error::invalid(
            "depth range",
            format!("need 0 < d_min < d_max, got [{d_min}, {d_max}]"),
        ));
    }
    let (near, far) = (1.0 / d_min, 1.0 / d_max);
    if n == 1 {
        return PlaneDepths::new(vec![2.0 / (near + far)]);
    }
    let step = (far - near) / (n - 1) as f64;
    let mut depths: Vec<f64> = (0..n).map(|k| 1.0 / (near + step * k as f64)).collect();
    depths[0] = d_min;
    depths[n - 1] = d_max;
    PlaneDepths::new(depths)
}

/// Minimum disparity spacing between adjusted planes, relative to the
/// largest disparity in the map.
pub const MIN_SPACING: f64 = 1e-6;

/// Disparity span of a depth map, used to express temperatures in
/// normalized units. For a constant map it is the minimum plane spacing, so
/// that a small temperature still separates planes stacked at that depth.
pub fn disparity_span(depth: &DepthMap) -> f64 {
    let (lo, hi) = depth.range();
    let span = 1.0 / lo as f64 - 1.0 / hi as f64;
    if span > 1e-12 / lo as f64 {
        span
    } else {
        MIN_SPACING / lo as f64
    }
}

/// Per-pixel soft assignment of pixels to planes; every pixel's masses sum
/// to one.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskStack {
    width: usize,
    height: usize,
    masks: Vec<Vec<f32>>,
}

impl MaskStack {
    pub fn new(width: usize, height: usize, masks: Vec<Vec<f32>>) -> Result<Self> {
        if masks.is_empty() {
            return Err(Error::invalid("mask stack", "no planes"));
        }
        if masks.iter().any(|m| m.len() != width * height) {
            return Err(Error::Shape(format!("masks must have {} entries", width * height)));
        }
        if masks.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("mask stack", "masks must be finite and non-negative"));
        }
        Ok(MaskStack {
            width,
            height,
            masks,
        })
    }

    /// One-hot assignment of every pixel to its nearest plane in disparity.
    pub fn hard(depth: &DepthMap, planes: &PlaneDepths) -> Self {
        let q = planes.disparities();
        let n = depth.width() * depth.height();
        let mut masks = vec![vec![0.0f32; n]; q.len()];
        for p in 0..n {
            masks[nearest_plane(&q, depth.disparity_at(p))][p] = 1.0;
        }
        MaskStack {
            width: depth.width(),
            height: depth.height(),
            masks,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn plane(&self, i: usize) -> &[f32] {
        &self.masks[i]
    }

    pub fn planes(&self) -> &[Vec<f32>] {
        &self.masks
    }

    /// Largest deviation of a pixel's total mass from one.
    pub fn max_sum_error(&self) -> f64 {
        (0..self.width * self.height)
            .map(|p| (self.masks.iter().map(|m| m[p] as f64).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Index of the plane closest in disparity; `disparities` must be strictly
/// decreasing. Ties go to the nearer plane.
pub(crate) fn nearest_plane(disparities: &[f64], q: f64) -> usize {
    // first plane whose disparity is <= q
    let k = disparities.partition_point(|&d| d > q);
    if k == 0 {
        0
    } else if k == disparities.len() || disparities[k - 1] - q <= q - disparities[k] {
        k - 1
    } else {
        k
    }
}

/// `M_i(p) = softmax_i(−|1/D(p) − 1/d_i| / τ)` with τ in raw disparity units.
pub fn soft_assign(depth: &DepthMap, planes: &PlaneDepths, tau: f64) -> Result<MaskStack> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid("temperature", format!("tau = {tau}")));
    }
    let q = planes.disparities();
    let n = q.len();
    let w = depth.width();
    let rows: Vec<Vec<f32>> = (0..depth.height())
        .into_par_iter()
        .map(|y| {
            let mut out = vec![0.0f32; w * n];
            let mut logits = vec![0.0f64; n];
            for x in 0..w {
                let qp = depth.disparity_at(y * w + x);
                let mut best = f64::NEG_INFINITY;
                for (l, qi) in logits.iter_mut().zip(&q) {
                    *l = -(qp - qi).abs() / tau;
                    best = best.max(*l);
                }
                let mut total = 0.0;
                for l in logits.iter_mut() {
                    *l = (*l - best).exp();
                    total += *l;
                }
                for (i, l) in logits.iter().enumerate() {
                    out[x * n + i] = (l / total) as f32;
                }
            }
            out
        })
        .collect();
    let mut masks = vec![vec![0.0f32; w * depth.height()]; n];
    for (y, row) in rows.iter().enumerate() {
        for x in 0..w {
            for (i, m) in masks.iter_mut().enumerate() {
                m[y * w + x] = row[x * n + i];
            }
        }
    }
    MaskStack::new(w, depth.height(), masks)
}

/// Regularizer values for a plane set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneLosses {
    /// Mean positive disparity step between consecutive planes; zero when
    /// planes run near to far.
    pub rank: f64,
    /// Mask-weighted mean absolute disparity error.
    pub assign: f64,
}

/// Rank and assignment losses, both in disparity.
pub fn plane_losses(depth: &DepthMap, planes: &PlaneDepths, masks: &MaskStack) -> Result<PlaneLosses> {
    if masks.len() != planes.len() {
        return Err(Error::Shape(format!(
            "{} masks for {} planes",
            masks.len(),
            planes.len()
        )));
    }
    if masks.width() != depth.width() || masks.height() != depth.height() {
        return Err(Error::Shape("mask and depth sizes differ".into()));
    }
    let q = planes.disparities();
    Ok(PlaneLosses {
        rank: rank_loss(&q),
        assign: assign_loss(depth, &q, masks),
    })
}

/// `(1/(N−1)) Σ max(0, q_{i+1} − q_i)` over disparities ordered as given.
pub fn rank_loss(disparities: &[f64]) -> f64 {
    if disparities.len() < 2 {
        return 0.0;
    }
    let total: f64 = disparities.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum();
    total / (disparities.len() - 1) as f64
}

/// The rank penalty read directly on depths, `mean max(0, d_{i+1} − d_i)`.
///
/// This reading is positive for any near-to-far ordering, i.e. it penalizes
/// the very order the planes are stored in. It is reported for reference and
/// never used to order planes.
pub fn rank_loss_on_depths(planes: &PlaneDepths) -> f64 {
    let d = planes.as_slice();
    if d.len() < 2 {
        return 0.0;
    }
    d.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum::<f64>() / (d.len() - 1) as f64
}

fn assign_loss(depth: &DepthMap, q: &[f64], masks: &MaskStack) -> f64 {
    let n = depth.width() * depth.height();
    let total: f64 = (0..n)
        .into_par_iter()
        .with_min_len(4096)
        .map(|p| {
            let qp = depth.disparity_at(p);
            q.iter()
                .zip(masks.planes())
                .map(|(qi, m)| m[p] as f64 * (qp - qi).abs())
                .sum::<f64>()
        })
        .sum();
    total / n as f64
}
