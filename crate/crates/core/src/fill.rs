//! Masked diffusion fill shared by occlusion backfill and hole filling.

use std::collections::VecDeque;

pub(crate) const MAX_SWEEPS: usize = 500;
pub(crate) const TOLERANCE: f64 = 1e-4;
/// Largest relaxation factor applied to thick holes.
/// Holes at least this large start from a half-resolution solve.
const COARSE_MIN: usize = 256;
/// Relaxation factor once a coarse solve has seeded the hole.
const SEEDED_OMEGA: f64 = 1.8;
const OMEGA_MAX: f64 = 1.995;

const INV_DEGREE: [f64; 5] = [0.0, 1.0, 0.5, 1.0 / 3.0, 0.25];

const NONE: u32 = u32::MAX;

/// Fills `hole` pixels of an interleaved `channels`-deep raster by repeated
/// 4-neighbour averaging, using only `usable` pixels as fixed boundary.
/// Pixels that are neither are walls: never read, never written.
///
/// Each pixel starts from its nearest usable pixel (breadth-first through the
/// hole), or from a half-resolution solve when the hole is large. Over-relaxed
/// Gauss-Seidel sweeps, clamped to the boundary range, then run until the
/// largest update drops below [`TOLERANCE`] or [`MAX_SWEEPS`] is reached.
/// A hole component that touches no usable pixel copies the nearest usable
/// pixel of the whole image and is
/// not diffused. Without any usable pixel, holes are set to zero.
pub(crate) fn diffuse(
    width: usize,
    height: usize,
    channels: usize,
    values: &mut [f32],
    hole: &[bool],
    usable: &[bool],
) {
    let n = width * height;
    debug_assert_eq!(values.len(), n * channels);
    // red-black order: a sweep over one color reads only the other
    let parity = |p: usize| (p % width + p / width) % 2;
    let holes: Vec<usize> = (0..n)
        .filter(|&p| hole[p] && parity(p) == 0)
        .chain((0..n).filter(|&p| hole[p] && parity(p) == 1))
        .collect();
    if holes.is_empty() {
        return;
    }
    let mut slot = vec![NONE; n];
    for (k, &p) in holes.iter().enumerate() {
        slot[p] = k as u32;
    }
    let usable = |p: usize| usable[p] && !hole[p];
    let neighbours = |p: usize| {
        let (x, y) = (p % width, p / width);
        let mut out = [usize::MAX; 4];
        if x > 0 {
            out[0] = p - 1;
        }
        if x + 1 < width {
            out[1] = p + 1;
        }
        if y > 0 {
            out[2] = p - width;
        }
        if y + 1 < height {
            out[3] = p + width;
        }
        out
    };

    // nearest usable pixel, searched through hole pixels only
    let mut source = vec![NONE; holes.len()];
    let mut dist = vec![0u32; holes.len()];
    let mut queue = VecDeque::new();
    for &p in &holes {
        if neighbours(p).iter().any(|&q| q != usize::MAX && usable(q)) {
            let k = slot[p] as usize;
            let q = neighbours(p).into_iter().find(|&q| q != usize::MAX && usable(q)).unwrap();
            source[k] = q as u32;
            queue.push_back(p);
        }
    }
    while let Some(p) = queue.pop_front() {
        let (s, d) = (source[slot[p] as usize], dist[slot[p] as usize]);
        for q in neighbours(p) {
            if q != usize::MAX && hole[q] && source[slot[q] as usize] == NONE {
                source[slot[q] as usize] = s;
                dist[slot[q] as usize] = d + 1;
                queue.push_back(q);
            }
        }
    }
    let diffusing: Vec<bool> = source.iter().map(|&s| s != NONE).collect();

    if diffusing.iter().any(|d| !d) {
        // isolated components: nearest usable pixel over the whole grid
        let mut nearest = vec![NONE; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&p| usable(p)).collect();
        for &p in &queue {
            nearest[p] = p as u32;
        }
        while let Some(p) = queue.pop_front() {
            for q in neighbours(p) {
                if q != usize::MAX && nearest[q] == NONE {
                    nearest[q] = nearest[p];
                    queue.push_back(q);
                }
            }
        }
        for (k, &p) in holes.iter().enumerate() {
            if !diffusing[k] {
                source[k] = nearest[p];
            }
        }
    }

    // values: hole slots first, then every fixed pixel a hole touches
    let m = holes.len();
    let mut state = vec![0.0f64; m * channels];
    for (k, s) in source.iter().enumerate() {
        if *s != NONE {
            let s = *s as usize;
            for c in 0..channels {
                state[k * channels + c] = values[s * channels + c] as f64;
            }
        }
    }
    let seeded = m >= COARSE_MIN && width >= 4 && height >= 4;
    if seeded {
        coarse_start(width, height, channels, values, hole, &usable, &holes, &diffusing, &mut state);
    }
    let mut fixed_slot = vec![NONE; n];
    let mut links = vec![[NONE; 4]; m];
    let mut degree = vec![0u8; m];
    for (k, &p) in holes.iter().enumerate() {
        if !diffusing[k] {
            continue;
        }
        for q in neighbours(p) {
            if q == usize::MAX {
                continue;
            }
            let j = if hole[q] {
                slot[q]
            } else if usable(q) {
                if fixed_slot[q] == NONE {
                    fixed_slot[q] = (state.len() / channels) as u32;
                    state.extend(values[q * channels..(q + 1) * channels].iter().map(|&v| v as f64));
                }
                fixed_slot[q]
            } else {
                continue;
            };
            links[k][degree[k] as usize] = j;
            degree[k] += 1;
        }
    }
    let mut lo = vec![f64::INFINITY; channels];
    let mut hi = vec![f64::NEG_INFINITY; channels];
    for px in state[m * channels..].chunks_exact(channels) {
        for c in 0..channels {
            lo[c] = lo[c].min(px[c]);
            hi[c] = hi[c].max(px[c]);
        }
    }

    // padding links read a trailing zero slot
    let zero = (state.len() / channels) as u32;
    state.extend(std::iter::repeat_n(0.0, channels));
    for nb in &mut links {
        for j in nb.iter_mut().filter(|j| **j == NONE) {
            *j = zero;
        }
    }
    let omega = if seeded {
        SEEDED_OMEGA
    } else {
        relaxation_factor(dist.iter().copied().max().unwrap_or(0))
    };
    match channels {
        1 => relax::<1>(&mut state, &links, &degree, &lo, &hi, omega),
        3 => relax::<3>(&mut state, &links, &degree, &lo, &hi, omega),
        4 => relax::<4>(&mut state, &links, &degree, &lo, &hi, omega),
        _ => unreachable!("unsupported channel count {channels}"),
    }

    for (k, &p) in holes.iter().enumerate() {
        for c in 0..channels {
            values[p * channels + c] = state[k * channels + c] as f32;
        }
    }
}

/// Seeds the diffusing hole slots of `state` with the solution of the same
/// problem on a 2x2-pooled grid. A coarse cell is fixed if it holds any fixed
/// pixel (taking their mean), a hole if it holds any hole pixel, else a wall.
#[allow(clippy::too_many_arguments)]
fn coarse_start(
    width: usize,
    height: usize,
    channels: usize,
    values: &[f32],
    hole: &[bool],
    usable: &impl Fn(usize) -> bool,
    holes: &[usize],
    diffusing: &[bool],
    state: &mut [f64],
) {
    let (cw, ch) = (width.div_ceil(2), height.div_ceil(2));
    let cell = |p: usize| (p / width / 2) * cw + (p % width) / 2;
    let mut sum = vec![0.0f64; cw * ch * channels];
    let mut count = vec![0u32; cw * ch];
    let mut coarse_hole = vec![false; cw * ch];
    for p in 0..width * height {
        let q = cell(p);
        if usable(p) {
            count[q] += 1;
            for c in 0..channels {
                sum[q * channels + c] += values[p * channels + c] as f64;
            }
        } else if hole[p] {
            coarse_hole[q] = true;
        }
    }
    let coarse_usable: Vec<bool> = count.iter().map(|&k| k > 0).collect();
    for q in 0..cw * ch {
        if coarse_usable[q] {
            coarse_hole[q] = false;
        }
    }
    let mut coarse: Vec<f32> = sum
        .iter()
        .enumerate()
        .map(|(i, &v)| if count[i / channels] > 0 { (v / count[i / channels] as f64) as f32 } else { 0.0 })
        .collect();
    diffuse(cw, ch, channels, &mut coarse, &coarse_hole, &coarse_usable);
    for (k, &p) in holes.iter().enumerate() {
        let q = cell(p);
        if diffusing[k] && coarse_hole[q] {
            for c in 0..channels {
                state[k * channels + c] = coarse[q * channels + c] as f64;
            }
        }
    }
}

/// Optimal factor for a strip whose pixels lie at most `depth` steps from
/// its boundary.
fn relaxation_factor(depth: u32) -> f64 {
    let span = 2.0 * depth as f64 + 2.0;
    (2.0 / (1.0 + (std::f64::consts::PI / span).sin())).clamp(1.0, OMEGA_MAX)
}

/// Over-relaxed Gauss-Seidel sweeps on the hole slots at the front of
/// `state`, clamped to the boundary range.
fn relax<const C: usize>(
    state: &mut [f64],
    links: &[[u32; 4]],
    degree: &[u8],
    lo: &[f64],
    hi: &[f64],
    omega: f64,
) {
    for _ in 0..MAX_SWEEPS {
        let mut max_update = 0.0f64;
        for (k, (nb, &deg)) in links.iter().zip(degree).enumerate() {
            if deg == 0 {
                continue;
            }
            let mut acc = [0.0f64; C];
            for &j in nb {
                let j = j as usize * C;
                let px: &[f64; C] = state[j..j + C].try_into().expect("slot");
                for c in 0..C {
                    acc[c] += px[c];
                }
            }
            let inv = INV_DEGREE[deg as usize];
            for c in 0..C {
                let old = state[k * C + c];
                let v = (old + omega * (acc[c] * inv - old)).clamp(lo[c], hi[c]);
                max_update = max_update.max((v - old).abs());
                state[k * C + c] = v;
            }
        }
        if max_update < TOLERANCE {
            break;
        }
    }
}
