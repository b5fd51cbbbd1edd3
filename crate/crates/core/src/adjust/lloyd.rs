use crate::buffer::DepthMap;
use crate::error::{Error, Result};

use super::{
    disparity_span, init_planes, MIN_SPACING, plane_losses, soft_assign, AdjustParams, AssignMode, MaskStack,
    PlaneDepths,
};

/// Bins of the disparity histogram used by the soft mode.
const HISTOGRAM_BINS: usize = 4096;

/// Outcome of a plane adjustment run.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjustReport {
    pub initial: PlaneDepths,
    pub planes: PlaneDepths,
    /// Assignment loss of `initial`, measured per pixel with the run's masks.
    pub initial_loss: f64,
    /// Assignment loss of `planes`, same measure.
    pub final_loss: f64,
    /// Loss on the quantizer's support after each iteration, starting with
    /// the initialization. Non-increasing in hard mode.
    pub history: Vec<f64>,
    pub iterations: usize,
}

/// Moves `n` planes to minimize the assignment loss of `depth`.
pub fn adjust_planes(depth: &DepthMap, n: usize, params: &AdjustParams) -> Result<PlaneDepths> {
    adjust_planes_traced(depth, n, params).map(|r| r.planes)
}

/// [`adjust_planes`] with the loss trace.
pub fn adjust_planes_traced(
    depth: &DepthMap,
    n: usize,
    params: &AdjustParams,
) -> Result<AdjustReport> {
    if n == 0 {
        return Err(Error::invalid("plane count", "must be at least 1"));
    }
    params.validate()?;
    let (d_lo, d_hi) = depth.range();
    let q_max = 1.0 / d_lo as f64;
    let spacing = MIN_SPACING * q_max;

    if 1.0 / d_lo as f64 - 1.0 / d_hi as f64 <= 1e-12 * q_max {
        // Constant map: every plane lands on the one depth.
        let q0 = 1.0 / d_lo as f64;
        let mut depths = vec![d_lo as f64];
        depths.extend((1..n).map(|k| 1.0 / (q0 - spacing * k as f64)));
        let planes = PlaneDepths::new(depths)?;
        let loss = mode_loss(depth, &planes, params)?;
        return Ok(AdjustReport {
            initial: planes.clone(),
            planes,
            initial_loss: loss,
            final_loss: loss,
            history: vec![loss],
            iterations: 0,
        });
    }

    let initial = init_planes(n, d_lo as f64, d_hi as f64)?;
    let disparities = depth.disparities();
    // centroids are kept ascending in disparity (far to near)
    let mut centroids: Vec<f64> = initial.disparities().into_iter().rev().collect();
    let (history, iterations) = match params.mode {
        AssignMode::Hard => {
            let support = Support::exact(&disparities);
            hard_lloyd(&support, &mut centroids, params)
        }
        AssignMode::Soft => {
            let (lo, hi) = (1.0 / d_hi as f64, q_max);
            let support = Support::histogram(&disparities, lo, hi, HISTOGRAM_BINS);
            let tau = params.tau * disparity_span(depth);
            soft_lloyd(&support, &mut centroids, tau, params)
        }
    };

    let planes = to_planes(&centroids, spacing)?;
    let initial_loss = mode_loss(depth, &initial, params)?;
    let final_loss = mode_loss(depth, &planes, params)?;
    // Binning and spacing can cost a hair of loss; never return worse than the start.
    let (planes, final_loss) = if final_loss <= initial_loss {
        (planes, final_loss)
    } else {
        (initial.clone(), initial_loss)
    };
    Ok(AdjustReport {
        initial,
        planes,
        initial_loss,
        final_loss,
        history,
        iterations,
    })
}

fn mode_loss(depth: &DepthMap, planes: &PlaneDepths, params: &AdjustParams) -> Result<f64> {
    let masks = match params.mode {
        AssignMode::Hard => MaskStack::hard(depth, planes),
        AssignMode::Soft => soft_assign(depth, planes, params.tau * disparity_span(depth))?,
    };
    Ok(plane_losses(depth, planes, &masks)?.assign)
}

/// Ascending centroids to near-first depths with a minimum disparity gap.
fn to_planes(centroids: &[f64], spacing: f64) -> Result<PlaneDepths> {
    let mut q: Vec<f64> = centroids.iter().rev().copied().collect();
    for k in 1..q.len() {
        if q[k] > q[k - 1] - spacing {
            q[k] = q[k - 1] - spacing;
        }
    }
    PlaneDepths::new(q.into_iter().map(|v| 1.0 / v).collect())
}

/// Weighted points on the disparity axis, ascending, with prefix sums.
struct Support {
    values: Vec<f64>,
    weights: Vec<f64>,
    cum_w: Vec<f64>,
    cum_wq: Vec<f64>,
}

impl Support {
    fn from_points(values: Vec<f64>, weights: Vec<f64>) -> Self {
        let mut cum_w = Vec::with_capacity(values.len() + 1);
        let mut cum_wq = Vec::with_capacity(values.len() + 1);
        let (mut w, mut wq) = (0.0, 0.0);
        cum_w.push(0.0);
        cum_wq.push(0.0);
        for (v, wt) in values.iter().zip(&weights) {
            w += wt;
            wq += wt * v;
            cum_w.push(w);
            cum_wq.push(wq);
        }
        Support {
            values,
            weights,
            cum_w,
            cum_wq,
        }
    }

    /// Every distinct disparity with its pixel count.
    fn exact(disparities: &[f64]) -> Self {
        let mut sorted = disparities.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        let mut values = Vec::new();
        let mut weights = Vec::new();
        for q in sorted {
            if values.last() == Some(&q) {
                *weights.last_mut().unwrap() += 1.0;
            } else {
                values.push(q);
                weights.push(1.0);
            }
        }
        Self::from_points(values, weights)
    }

    /// Fixed-width bins over `[lo, hi]`, each represented by the mean of its
    /// members so single-valued bins stay exact.
    fn histogram(disparities: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let mut count = vec![0.0f64; bins];
        let mut sum = vec![0.0f64; bins];
        let scale = bins as f64 / (hi - lo);
        for &q in disparities {
            let b = (((q - lo) * scale) as usize).min(bins - 1);
            count[b] += 1.0;
            sum[b] += q;
        }
        let (values, weights) = count
            .iter()
            .zip(&sum)
            .filter(|(c, _)| **c > 0.0)
            .map(|(c, s)| (s / c, *c))
            .unzip();
        Self::from_points(values, weights)
    }

    fn total(&self) -> f64 {
        *self.cum_w.last().unwrap()
    }

    /// `Σ w |q − c|` over support indices `[a, b)`.
    fn cost(&self, a: usize, b: usize, c: f64) -> f64 {
        let j = a + self.values[a..b].partition_point(|&v| v < c);
        let wl = self.cum_w[j] - self.cum_w[a];
        let ql = self.cum_wq[j] - self.cum_wq[a];
        let wr = self.cum_w[b] - self.cum_w[j];
        let qr = self.cum_wq[b] - self.cum_wq[j];
        (c * wl - ql + qr - c * wr).max(0.0)
    }

    /// Lower weighted median of `[a, b)`.
    fn median(&self, a: usize, b: usize) -> f64 {
        let half = 0.5 * (self.cum_w[b] - self.cum_w[a]);
        let base = self.cum_w[a];
        let k = self.cum_w[a + 1..=b].partition_point(|&c| c - base < half);
        self.values[a + k.min(b - a - 1)]
    }

    /// Support index ranges of the nearest-centroid cells.
    fn cells(&self, centroids: &[f64]) -> Vec<(usize, usize)> {
        let mut bounds = Vec::with_capacity(centroids.len() + 1);
        bounds.push(0);
        for w in centroids.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            bounds.push(self.values.partition_point(|&v| v < mid));
        }
        bounds.push(self.values.len());
        bounds.windows(2).map(|w| (w[0], w[1])).collect()
    }

    fn hard_loss(&self, centroids: &[f64]) -> f64 {
        let total: f64 = self
            .cells(centroids)
            .into_iter()
            .zip(centroids)
            .map(|((a, b), &c)| self.cost(a, b, c))
            .sum();
        total / self.total()
    }

    /// Support index with the largest nearest-centroid error, if any error
    /// is left.
    fn worst_point(&self, centroids: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for ((a, b), &c) in self.cells(centroids).into_iter().zip(centroids) {
            for i in a..b {
                let e = self.weights[i] * (self.values[i] - c).abs();
                if e > best.map_or(0.0, |(_, v)| v) {
                    best = Some((i, e));
                }
            }
        }
        best.map(|(i, _)| i)
    }
}

fn sort_centroids(c: &mut [f64]) {
    c.sort_unstable_by(f64::total_cmp);
}

fn hard_lloyd(support: &Support, centroids: &mut Vec<f64>, params: &AdjustParams) -> (Vec<f64>, usize) {
    let min_mass = params.reseed_threshold * support.total();
    let mut loss = support.hard_loss(centroids);
    let mut history = vec![loss];
    let mut iterations = 0;
    for _ in 0..params.iterations {
        iterations += 1;
        let cells = support.cells(centroids);
        let mut next = centroids.clone();
        let mut starved = Vec::new();
        for (k, &(a, b)) in cells.iter().enumerate() {
            let mass = support.cum_w[b] - support.cum_w[a];
            if a < b {
                next[k] = support.median(a, b);
            }
            if mass <= min_mass {
                starved.push(k);
            }
        }
        // `next` keeps the cell order, so it is still ascending
        let mut next_loss = support.hard_loss(&next);
        for k in starved {
            let Some(i) = support.worst_point(&next) else {
                break;
            };
            let mut trial = next.clone();
            trial[k] = support.values[i];
            sort_centroids(&mut trial);
            let trial_loss = support.hard_loss(&trial);
            if trial_loss <= next_loss {
                next = trial;
                next_loss = trial_loss;
            }
        }
        let converged = next == *centroids;
        *centroids = next;
        loss = next_loss;
        history.push(loss);
        if converged {
            break;
        }
    }
    debug_assert!(history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300));
    let _ = loss;
    (history, iterations)
}

fn soft_weights(support: &Support, centroids: &[f64], tau: f64) -> Vec<f64> {
    let n = centroids.len();
    let mut m = vec![0.0f64; support.values.len() * n];
    for (b, &q) in support.values.iter().enumerate() {
        let row = &mut m[b * n..(b + 1) * n];
        let mut best = f64::NEG_INFINITY;
        for (r, c) in row.iter_mut().zip(centroids) {
            *r = -(q - c).abs() / tau;
            best = best.max(*r);
        }
        let mut total = 0.0;
        for r in row.iter_mut() {
            *r = (*r - best).exp();
            total += *r;
        }
        for r in row.iter_mut() {
            *r /= total;
        }
    }
    m
}

fn soft_loss(support: &Support, centroids: &[f64], masks: &[f64]) -> f64 {
    let n = centroids.len();
    let mut total = 0.0;
    for (b, (&q, &w)) in support.values.iter().zip(&support.weights).enumerate() {
        for (i, c) in centroids.iter().enumerate() {
            total += w * masks[b * n + i] * (q - c).abs();
        }
    }
    total / support.total()
}

fn soft_lloyd(
    support: &Support,
    centroids: &mut Vec<f64>,
    tau: f64,
    params: &AdjustParams,
) -> (Vec<f64>, usize) {
    let n = centroids.len();
    let min_mass = params.reseed_threshold * support.total();
    let masks = soft_weights(support, centroids, tau);
    let mut history = vec![soft_loss(support, centroids, &masks)];
    let mut iterations = 0;
    let mut weights = vec![0.0f64; support.values.len()];
    for _ in 0..params.iterations {
        iterations += 1;
        let masks = soft_weights(support, centroids, tau);
        let mut next = centroids.clone();
        let mut starved = Vec::new();
        for i in 0..n {
            let mut mass = 0.0;
            for (b, w) in weights.iter_mut().enumerate() {
                *w = support.weights[b] * masks[b * n + i];
                mass += *w;
            }
            if mass <= min_mass || mass == 0.0 {
                starved.push(i);
                continue;
            }
            let mut acc = 0.0;
            for (b, w) in weights.iter().enumerate() {
                acc += w;
                if acc >= 0.5 * mass {
                    next[i] = support.values[b];
                    break;
                }
            }
        }
        if !starved.is_empty() {
            // move starved planes to the bins carrying the most error
            let mut err: Vec<(usize, f64)> = (0..support.values.len())
                .map(|b| {
                    let e: f64 = (0..n)
                        .map(|i| masks[b * n + i] * (support.values[b] - centroids[i]).abs())
                        .sum();
                    (b, support.weights[b] * e)
                })
                .collect();
            err.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            for (k, (b, _)) in starved.into_iter().zip(err) {
                next[k] = support.values[b];
            }
        }
        sort_centroids(&mut next);
        let converged = next == *centroids;
        *centroids = next;
        let masks = soft_weights(support, centroids, tau);
        history.push(soft_loss(support, centroids, &masks));
        if converged {
            break;
        }
    }
    (history, iterations)
}
