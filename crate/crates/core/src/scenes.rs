//! Procedural RGB-D scenes for tests, benchmarks and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::buffer::{DepthMap, ImageBuffer};
use crate::camera::Intrinsics;

/// Horizontal field of view of every generated scene.
pub const SCENE_FOV_DEG: f64 = 60.0;

/// An image with its depth and camera.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub image: ImageBuffer,
    pub depth: DepthMap,
    pub intrinsics: Intrinsics,
}

impl Scene {
    fn new(image: ImageBuffer, depth: DepthMap) -> Self {
        let intrinsics = Intrinsics::from_fov(image.width(), image.height(), SCENE_FOV_DEG)
            .expect("positive size");
        Scene {
            image,
            depth,
            intrinsics,
        }
    }
}

/// Smoothly interpolated lattice noise in `[0, 1]`.
struct ValueNoise {
    cell: f64,
    cols: usize,
    lattice: Vec<f64>,
}

impl ValueNoise {
    fn new(rng: &mut ChaCha8Rng, width: usize, height: usize, cell: f64) -> Self {
        let cols = (width as f64 / cell).ceil() as usize + 2;
        let rows = (height as f64 / cell).ceil() as usize + 2;
        let lattice = (0..cols * rows).map(|_| rng.random::<f64>()).collect();
        ValueNoise {
            cell,
            cols,
            lattice,
        }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let (u, v) = (x / self.cell, y / self.cell);
        let (i, j) = (u.floor() as usize, v.floor() as usize);
        let s = |t: f64| t * t * (3.0 - 2.0 * t);
        let (fx, fy) = (s(u - u.floor()), s(v - v.floor()));
        let g = |a: usize, b: usize| self.lattice[b * self.cols + a];
        let top = g(i, j) * (1.0 - fx) + g(i + 1, j) * fx;
        let bottom = g(i, j + 1) * (1.0 - fx) + g(i + 1, j + 1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

/// Base color plus weighted noise octaves per channel, kept inside
/// `[0.02, 0.98]`.
struct Texture {
    base: [f64; 3],
    octaves: Vec<(f64, [ValueNoise; 3])>,
}

impl Texture {
    fn new(rng: &mut ChaCha8Rng, w: usize, h: usize, cells: &[(f64, f64)]) -> Self {
        let base = [
            rng.random_range(0.25..0.75),
            rng.random_range(0.25..0.75),
            rng.random_range(0.25..0.75),
        ];
        let octaves = cells
            .iter()
            .map(|&(cell, amp)| {
                let n = [
                    ValueNoise::new(rng, w, h, cell),
                    ValueNoise::new(rng, w, h, cell),
                    ValueNoise::new(rng, w, h, cell),
                ];
                (amp, n)
            })
            .collect();
        Texture { base, octaves }
    }

    fn at(&self, x: f64, y: f64, c: usize) -> f32 {
        let mut v = self.base[c];
        for (amp, n) in &self.octaves {
            v += amp * (n[c].at(x, y) - 0.5);
        }
        v.clamp(0.02, 0.98) as f32
    }
}

#[derive(Clone, Copy)]
enum Shape {
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Disc { cx: f64, cy: f64, r: f64 },
}

impl Shape {
    fn random(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Self {
        let (w, h) = (w as f64, h as f64);
        if rng.random_bool(0.5) {
            let (cx, cy) = (rng.random_range(0.15..0.85) * w, rng.random_range(0.15..0.85) * h);
            let (hw, hh) = (rng.random_range(0.08..0.25) * w, rng.random_range(0.08..0.25) * h);
            Shape::Rect {
                x0: cx - hw,
                y0: cy - hh,
                x1: cx + hw,
                y1: cy + hh,
            }
        } else {
            Shape::Disc {
                cx: rng.random_range(0.15..0.85) * w,
                cy: rng.random_range(0.15..0.85) * h,
                r: rng.random_range(0.08..0.22) * w.min(h),
            }
        }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
            Shape::Disc { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) < r * r,
        }
    }
}

fn compose(
    w: usize,
    h: usize,
    layer_at: impl Fn(f64, f64) -> usize,
    depth_of: impl Fn(usize, f64, f64) -> f64,
    textures: &[Texture],
) -> (ImageBuffer, DepthMap) {
    let index: Vec<usize> = (0..w * h).map(|p| layer_at((p % w) as f64, (p / w) as f64)).collect();
    let image = ImageBuffer::from_fn(w, h, 3, |x, y, c| textures[index[y * w + x]].at(x as f64, y as f64, c));
    let depth = DepthMap::from_fn(w, h, |x, y| depth_of(index[y * w + x], x as f64, y as f64) as f32);
    (image, depth)
}

/// Textured fronto-parallel layers: a far background and two to four nearer
/// rectangles or discs, each at one constant depth.
pub fn layered(seed: u64, width: usize, height: usize) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(2..=4);
    let mut depths: Vec<f64> = vec![rng.random_range(8.0..12.0)];
    let mut shapes = Vec::new();
    for _ in 0..count {
        shapes.push(Shape::random(&mut rng, width, height));
        depths.push(rng.random_range(1.5..6.0));
    }
    let scale = width.min(height) as f64;
    let textures: Vec<Texture> = (0..=count)
        .map(|_| Texture::new(&mut rng, width, height, &[(0.25 * scale, 0.5), (0.1 * scale, 0.2)]))
        .collect();
    // nearest shape in front wins
    let layer_at = |x: f64, y: f64| {
        (0..count)
            .filter(|&i| shapes[i].contains(x, y))
            .min_by(|&a, &b| depths[a + 1].total_cmp(&depths[b + 1]))
            .map_or(0, |i| i + 1)
    };
    let (image, depth) = compose(width, height, layer_at, |i, _, _| depths[i], &textures);
    Scene::new(image, depth)
}

/// A slanted ground surface receding towards the top of the frame with a few
/// gently curved foreground objects, textured with multi-octave noise.
pub fn natural(seed: u64, width: usize, height: usize) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(1..=3);
    let shapes: Vec<Shape> = (0..count).map(|_| Shape::random(&mut rng, width, height)).collect();
    let object_depth: Vec<f64> = (0..count).map(|_| rng.random_range(1.2..3.5)).collect();
    let far = rng.random_range(12.0..25.0);
    let scale = width.min(height) as f64;
    let octaves = [(0.3 * scale, 0.45), (0.12 * scale, 0.25), (0.05 * scale, 0.15), (0.02 * scale, 0.08)];
    let textures: Vec<Texture> = (0..=count).map(|_| Texture::new(&mut rng, width, height, &octaves)).collect();
    let bump = ValueNoise::new(&mut rng, width, height, 0.2 * scale);
    let (w, h) = (width as f64, height as f64);
    let layer_at = |x: f64, y: f64| {
        (0..count)
            .filter(|&i| shapes[i].contains(x, y))
            .min_by(|&a, &b| object_depth[a].total_cmp(&object_depth[b]))
            .map_or(0, |i| i + 1)
    };
    let depth_of = |i: usize, x: f64, y: f64| {
        if i == 0 {
            let t = (y / (h - 1.0).max(1.0)).clamp(0.0, 1.0);
            let ground = 1.0 / (1.0 / far + t * (1.0 / 4.0 - 1.0 / far));
            ground * (1.0 + 0.05 * (bump.at(x, y) - 0.5))
        } else {
            let base = object_depth[i - 1];
            base * (1.0 + 0.04 * ((x / w - 0.5).powi(2) + (y / h - 0.5).powi(2)))
        }
    };
    let (image, depth) = compose(width, height, layer_at, depth_of, &textures);
    Scene::new(image, depth)
}

/// Two fronto-parallel planes whose colors are affine in the pixel
/// coordinates: a background at depth 6 and a nearer rectangle at depth 3.
pub fn ramp(seed: u64, width: usize, height: usize) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    let rect = Shape::Rect {
        x0: rng.random_range(0.25..0.4) * w,
        y0: rng.random_range(0.25..0.4) * h,
        x1: rng.random_range(0.6..0.75) * w,
        y1: rng.random_range(0.6..0.75) * h,
    };
    let coef: Vec<[f64; 3]> = (0..6)
        .map(|_| [rng.random_range(0.2..0.4), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)])
        .collect();
    let color = |layer: usize, x: f64, y: f64, c: usize| {
        let k = coef[layer * 3 + c];
        (k[0] + 0.3 + k[1] * x / w + k[2] * y / h) as f32
    };
    let inside = |x: f64, y: f64| rect.contains(x, y);
    let image = ImageBuffer::from_fn(width, height, 3, |x, y, c| {
        let (xf, yf) = (x as f64, y as f64);
        color(usize::from(inside(xf, yf)), xf, yf, c)
    });
    let depth = DepthMap::from_fn(width, height, |x, y| if inside(x as f64, y as f64) { 3.0 } else { 6.0 });
    Scene::new(image, depth)
}

/// Left half at `near`, right half at `far`.
pub fn bimodal_depth(width: usize, height: usize, near: f32, far: f32) -> DepthMap {
    DepthMap::from_fn(width, height, |x, _| if x < width / 2 { near } else { far })
}

/// [`bimodal_depth`] with disparity jitter symmetric around each mode: in
/// each half, a quarter of the pixels sit at disparity `q(1 + jitter)`, a
/// quarter at `q(1 − jitter)` and the rest exactly on the mode, so both the
/// L1 optimum and the weighted median stay at the mode.
pub fn jittered_bimodal_depth(width: usize, height: usize, near: f32, far: f32, jitter: f64) -> DepthMap {
    let half = width / 2;
    DepthMap::from_fn(width, height, |x, y| {
        let (mode, k) = if x < half { (near, y * half + x) } else { (far, y * (width - half) + x - half) };
        let q = 1.0 / mode as f64;
        match k % 4 {
            0 => (1.0 / (q * (1.0 + jitter))) as f32,
            2 => (1.0 / (q * (1.0 - jitter))) as f32,
            _ => mode,
        }
    })
}

/// Ten layered and ten natural scenes.
pub fn test_suite(width: usize, height: usize) -> Vec<Scene> {
    (0..10)
        .map(|s| layered(1000 + s, width, height))
        .chain((0..10).map(|s| natural(2000 + s, width, height)))
        .collect()
}
