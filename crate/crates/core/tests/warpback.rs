use ampi::adjust::{adjust_planes, AdjustParams};
use ampi::build::{build_mpi, BuildParams};
use ampi::metrics::{crop_border, crop_mask, psnr_masked};
use ampi::mpi::render_view;
use ampi::scenes;
use ampi::warpback::{
    fill_holes, generate_pair, mesh_from_depth, rasterize, sample_camera, warp_back, CameraSampleRanges, PairConfig,
    RasterResult, DEFAULT_GRAD_THRESH,
};
use ampi::{CameraPose, DepthMap, ImageBuffer, Intrinsics};
use nalgebra::Vector3;

const W: usize = 96;
const H: usize = 64;

fn forward(scene: &scenes::Scene, pose: &CameraPose) -> RasterResult {
    let mesh = mesh_from_depth(&scene.image, &scene.depth, &scene.intrinsics, DEFAULT_GRAD_THRESH).unwrap();
    rasterize(&mesh, &scene.intrinsics, pose, W, H).unwrap()
}

fn sampled_pose(scene: &scenes::Scene, seed: u64) -> CameraPose {
    sample_camera(seed, &CameraSampleRanges::default(), scene.depth.median() as f64, W, H)
        .unwrap()
        .pose
}

#[test]
fn identity_forward_pose_round_trips_exactly() {
    let scene = scenes::natural(3, W, H);
    let id = CameraPose::identity();
    let fwd = forward(&scene, &id);
    let back = warp_back(&fwd, &scene.intrinsics, &id, DEFAULT_GRAD_THRESH).unwrap();
    let mut covered = 0;
    for p in 0..W * H {
        if !back.coverage[p] || !fwd.coverage[p] {
            continue;
        }
        covered += 1;
        for c in 0..3 {
            let (a, b) = (back.color.data()[p * 3 + c], scene.image.data()[p * 3 + c]);
            assert!((a - b).abs() < 1e-5, "pixel {p}: {a} vs {b}");
        }
    }
    assert!(covered > W * H / 2);
}

#[test]
fn two_plane_round_trip_within_two_levels() {
    for seed in 0..4 {
        let scene = scenes::ramp(seed, W, H);
        let pose = sampled_pose(&scene, seed);
        let fwd = forward(&scene, &pose);
        let back = warp_back(&fwd, &scene.intrinsics, &pose, DEFAULT_GRAD_THRESH).unwrap();
        let mut visible = 0;
        for p in 0..W * H {
            let d = scene.depth.data()[p];
            if !back.coverage[p] || (back.depth[p] - d).abs() > 1e-3 * d {
                continue;
            }
            visible += 1;
            for c in 0..3 {
                let err = (back.color.data()[p * 3 + c] - scene.image.data()[p * 3 + c]).abs();
                assert!(err <= 2.0 / 255.0, "seed {seed} pixel {p}: {err}");
            }
        }
        assert!(visible > W * H / 2, "seed {seed}: {visible}");
    }
}

/// Whether the source point of pixel `p` is seen by the target raster: some
/// target pixel next to its projection is covered at the same depth.
fn revisible(scene: &scenes::Scene, fwd: &RasterResult, pose: &CameraPose, p: usize) -> bool {
    let k = &scene.intrinsics;
    let (x, y) = ((p % W) as f64, (p / W) as f64);
    let point = k.ray(x, y) * scene.depth.data()[p] as f64;
    let target = pose.to_target(&point);
    let Some((u, v)) = k.project(&target) else {
        return false;
    };
    let (u0, v0) = (u.floor() as isize, v.floor() as isize);
    (v0..=v0 + 1).any(|ty| {
        (u0..=u0 + 1).any(|tx| {
            if tx < 0 || ty < 0 || tx >= W as isize || ty >= H as isize {
                return false;
            }
            let q = ty as usize * W + tx as usize;
            fwd.coverage[q] && ((fwd.depth[q] as f64) - target.z).abs() <= 0.05 * target.z
        })
    })
}

#[test]
fn back_warp_covers_only_revisible_pixels() {
    for seed in 0..4 {
        let scene = scenes::ramp(10 + seed, W, H);
        let pose = sampled_pose(&scene, seed);
        let fwd = forward(&scene, &pose);
        let back = warp_back(&fwd, &scene.intrinsics, &pose, DEFAULT_GRAD_THRESH).unwrap();
        let gained: Vec<usize> = (0..W * H)
            .filter(|&p| back.coverage[p] && !revisible(&scene, &fwd, &pose, p))
            .collect();
        assert!(gained.is_empty(), "seed {seed}: {} pixels, first {:?}", gained.len(), &gained[..gained.len().min(5)]);
        assert!(back.hole_count() > 0, "seed {seed}: motion should hide something");
    }
}

#[test]
fn hole_mask_is_complement_of_coverage() {
    let scene = scenes::layered(5, W, H);
    let fwd = forward(&scene, &sampled_pose(&scene, 2));
    let holes = fwd.holes();
    assert!(holes.iter().zip(&fwd.coverage).all(|(&h, &c)| h != c));
    assert!(fwd.depth.iter().zip(&fwd.coverage).all(|(&d, &c)| c == d.is_finite()));
}

#[test]
fn fill_without_holes_is_identity() {
    let scene = scenes::natural(1, W, H);
    let holes = vec![false; W * H];
    let (c, d) = fill_holes(&scene.image, scene.depth.data(), &holes).unwrap();
    assert_eq!(c, scene.image);
    assert_eq!(d, scene.depth);
}

#[test]
fn constant_image_hole_fills_with_the_constant() {
    let image = ImageBuffer::filled(W, H, 3, 0.4);
    let mut color = image.clone();
    let mut depth = vec![2.5f32; W * H];
    let holes: Vec<bool> = (0..W * H).map(|p| (20..50).contains(&(p % W)) && (10..40).contains(&(p / W))).collect();
    for p in (0..W * H).filter(|&p| holes[p]) {
        depth[p] = f32::INFINITY;
        for c in 0..3 {
            color.data_mut()[p * 3 + c] = 0.0;
        }
    }
    let (c, d) = fill_holes(&color, &depth, &holes).unwrap();
    assert_eq!(c, image);
    assert!(d.data().iter().all(|&v| v == 2.5));
}

#[test]
fn hole_on_a_depth_edge_borrows_the_background() {
    // foreground (near, dark) on the left, background (far, bright) on the right
    let (fg, bg) = ([0.1f32, 0.2, 0.3], [0.8f32, 0.7, 0.6]);
    let mut color = ImageBuffer::from_fn(W, H, 3, |x, _, c| if x < 40 { fg[c] } else { bg[c] });
    let mut depth: Vec<f32> = (0..W * H).map(|p| if p % W < 40 { 1.0 } else { 8.0 }).collect();
    let holes: Vec<bool> = (0..W * H).map(|p| (40..60).contains(&(p % W)) && (20..44).contains(&(p / W))).collect();
    for p in (0..W * H).filter(|&p| holes[p]) {
        depth[p] = f32::INFINITY;
        for c in 0..3 {
            color.data_mut()[p * 3 + c] = 0.0;
        }
    }
    let (c, d) = fill_holes(&color, &depth, &holes).unwrap();
    for p in (0..W * H).filter(|&p| holes[p]) {
        assert_eq!(c.pixel(p % W, p / W), &bg[..], "pixel {p}");
        assert_eq!(d.data()[p], 8.0);
    }
}

#[test]
fn fill_rejects_bad_inputs() {
    let image = ImageBuffer::filled(8, 8, 3, 0.5);
    let depth = vec![1.0f32; 64];
    assert!(fill_holes(&image, &depth, &vec![true; 64]).is_err());
    assert!(fill_holes(&image, &depth[..63], &vec![false; 64]).is_err());
    assert!(fill_holes(&ImageBuffer::filled(8, 8, 1, 0.5), &depth, &vec![false; 64]).is_err());
    let mut bad = depth.clone();
    bad[3] = f32::NAN;
    assert!(fill_holes(&image, &bad, &vec![false; 64]).is_err());
}

#[test]
fn pairs_are_reproducible_and_sentinel_free() {
    let scene = scenes::natural(8, W, H);
    let cfg = PairConfig::default();
    let a = generate_pair(&scene.image, &scene.depth, 17, &cfg).unwrap();
    let b = generate_pair(&scene.image, &scene.depth, 17, &cfg).unwrap();
    assert_eq!(a, b);
    let c = generate_pair(&scene.image, &scene.depth, 18, &cfg).unwrap();
    assert_ne!(a.pose, c.pose);
    assert!(a.target_depth.data().iter().all(|&d| d > 0.0 && d.is_finite()));
    assert!(a.target_color.data().iter().all(|&v| (0.0..=1.0).contains(&v)));

    // the recorded camera and hole mask come from the same seed
    let cam = sample_camera(17, &cfg.ranges, scene.depth.median() as f64, W, H).unwrap();
    assert_eq!(a.pose, cam.pose);
    assert_eq!(a.intrinsics, cam.intrinsics);
    let mesh = mesh_from_depth(&scene.image, &scene.depth, &cam.intrinsics, cfg.grad_thresh).unwrap();
    let raster = rasterize(&mesh, &cam.intrinsics, &cam.pose, W, H).unwrap();
    assert_eq!(a.holes, raster.holes());
    for p in (0..W * H).filter(|&p| !a.holes[p]) {
        assert_eq!(&a.target_color.data()[p * 3..p * 3 + 3], &raster.color.data()[p * 3..p * 3 + 3]);
    }
}

#[test]
fn zero_motion_pair_copies_the_source() {
    let scene = scenes::layered(2, W, H);
    let cfg = PairConfig { ranges: CameraSampleRanges::zero(), ..Default::default() };
    let pair = generate_pair(&scene.image, &scene.depth, 4, &cfg).unwrap();
    assert!(pair.holes.iter().all(|&h| !h));
    assert_eq!(pair.target_color, scene.image);
    assert!(pair.pose.is_identity());
}

#[test]
fn mpi_render_agrees_with_the_filled_target() {
    let (w, h) = (192, 128);
    for seed in 0..3u64 {
        let scene = scenes::layered(40 + seed, w, h);
        let pair = generate_pair(&scene.image, &scene.depth, seed, &PairConfig::default()).unwrap();
        let planes = adjust_planes(&scene.depth, 32, &AdjustParams::default()).unwrap();
        let mpi = build_mpi(&scene.image, &scene.depth, &planes, &pair.intrinsics, &BuildParams::default()).unwrap();
        let out = render_view(&mpi, &pair.pose, &pair.intrinsics).unwrap();
        let covered: Vec<bool> = pair.holes.iter().map(|&b| !b).collect();
        let mask = crop_mask(&covered, w, h, 0.05).unwrap();
        let p = psnr_masked(
            &crop_border(&out.color, 0.05).unwrap(),
            &crop_border(&pair.target_color, 0.05).unwrap(),
            &mask,
        )
        .unwrap();
        assert!(p >= 30.0, "seed {seed}: {p:.2} dB");
    }
}

#[test]
fn translation_moves_a_fronto_parallel_plane_by_the_disparity_shift() {
    let k = Intrinsics::from_fov(W, H, 60.0).unwrap();
    let image = ImageBuffer::from_fn(W, H, 3, |x, y, c| ((x * 7 + y * 3 + c * 11) % 17) as f32 / 16.0);
    let depth = DepthMap::constant(W, H, 4.0);
    let mesh = mesh_from_depth(&image, &depth, &k, DEFAULT_GRAD_THRESH).unwrap();
    // target sees the source point (u + fx b / d) at pixel u
    let b = 4.0 * 3.0 / k.fx;
    let pose = CameraPose::from_translation(Vector3::new(b, 0.0, 0.0));
    let r = rasterize(&mesh, &k, &pose, W, H).unwrap();
    for y in 0..H {
        for x in 0..W - 3 {
            let p = y * W + x;
            assert!(r.coverage[p], "pixel {x},{y}");
            assert!((r.color.get(x, y, 0) - image.get(x + 3, y, 0)).abs() < 1e-4);
            assert!((r.depth[p] - 4.0).abs() < 1e-4);
        }
    }
}
