use ampi::adjust::{adjust_planes, init_planes, AdjustParams, PlaneDepths};
use ampi::build::{
    build_mpi, build_mpi_detailed, derive_masks, inpaint_hidden, occlusion_regions, BuildParams,
};
use ampi::metrics::{crop_border, psnr};
use ampi::mpi::render_view;
use ampi::scenes;
use ampi::{CameraPose, DepthMap, ImageBuffer, Intrinsics};

fn planes_for(depth: &DepthMap, n: usize) -> PlaneDepths {
    adjust_planes(depth, n, &AdjustParams::default()).unwrap()
}

fn identity_psnr(image: &ImageBuffer, depth: &DepthMap, k: &Intrinsics, n: usize) -> f64 {
    let planes = planes_for(depth, n);
    let mpi = build_mpi(image, depth, &planes, k, &BuildParams::default()).unwrap();
    let out = render_view(&mpi, &CameraPose::identity(), k).unwrap();
    psnr(&crop_border(&out.color, 0.05).unwrap(), &crop_border(image, 0.05).unwrap()).unwrap()
}

#[test]
fn constant_depth_reproduces_input() {
    let s = scenes::natural(4, 40, 30);
    let depth = DepthMap::constant(40, 30, 3.0);
    for n in [1, 4, 9] {
        let planes = planes_for(&depth, n);
        let b = build_mpi_detailed(&s.image, &depth, &planes, &s.intrinsics, &BuildParams::default()).unwrap();
        // one plane carries (almost) all of the weight
        let heavy = b
            .masks
            .feature
            .planes()
            .iter()
            .filter(|m| m.iter().all(|&v| v > 0.99))
            .count();
        assert_eq!(heavy, 1, "n = {n}");
        let out = render_view(&b.mpi, &CameraPose::identity(), &s.intrinsics).unwrap();
        let err = out
            .color
            .data()
            .iter()
            .zip(s.image.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert!(err < 1e-4, "n = {n}: {err}");
    }
}

#[test]
fn identity_reconstruction_on_scenes() {
    for s in [scenes::layered(1, 96, 64), scenes::natural(2, 96, 64)] {
        for n in [8, 32] {
            let p = identity_psnr(&s.image, &s.depth, &s.intrinsics, n);
            assert!(p >= 40.0, "psnr {p} at n = {n}");
        }
    }
}

#[test]
fn two_region_scene_splits_across_planes() {
    let (w, h) = (32, 20);
    let depth = scenes::bimodal_depth(w, h, 1.0, 10.0);
    let image = ImageBuffer::from_fn(w, h, 3, |x, _, c| if x < w / 2 { [0.9, 0.1, 0.1][c] } else { [0.1, 0.2, 0.8][c] });
    let k = Intrinsics::from_fov(w, h, 60.0).unwrap();
    let planes = planes_for(&depth, 2);
    assert!((planes.as_slice()[0] - 1.0).abs() < 1e-3 && (planes.as_slice()[1] - 10.0).abs() < 1e-3);
    let params = BuildParams { hidden_band: 4, ..Default::default() };
    let b = build_mpi_detailed(&image, &depth, &planes, &k, &params).unwrap();
    let near = b.alphas[0].data();
    let far = b.alphas[1].data();
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if x < w / 2 {
                assert!(near[p] > 0.999, "near plane carries region A");
                // backfilled band of width 4 behind the foreground edge
                let in_band = x >= w / 2 - 4;
                assert_eq!(far[p] == 1.0, in_band, "({x},{y})");
                if in_band {
                    let c = b.mpi.planes()[1].color.pixel(x, y);
                    assert!((c[2] - 0.8).abs() < 1e-4, "backfill uses the background");
                }
            } else {
                assert!(near[p] < 1e-5);
                assert!(far[p] > 0.999, "far plane carries region B");
            }
        }
    }
}

#[test]
fn occlusion_band_geometry() {
    let (w, h) = (24, 6);
    let depth = scenes::bimodal_depth(w, h, 1.0, 10.0);
    let planes = PlaneDepths::new(vec![1.0, 10.0]).unwrap();
    let r = occlusion_regions(&depth, &planes, 0.04, 4).unwrap();
    assert!(r.plane(0).iter().all(|&b| !b));
    for y in 0..h {
        for x in 0..w {
            assert_eq!(r.plane(1)[y * w + x], (8..12).contains(&x), "({x},{y})");
        }
    }
    // step of 0.9 in disparity is below a threshold of 1
    let r = occlusion_regions(&depth, &planes, 1.0, 4).unwrap();
    assert!(r.counts().iter().all(|&c| c == 0));
    let flat = DepthMap::constant(w, h, 4.0);
    let r = occlusion_regions(&flat, &PlaneDepths::new(vec![2.0, 4.0, 8.0]).unwrap(), 0.04, 16).unwrap();
    assert!(r.counts().iter().all(|&c| c == 0));
}

#[test]
fn occlusion_band_sits_only_on_the_background_plane() {
    let (w, h) = (24, 6);
    let depth = scenes::bimodal_depth(w, h, 1.0, 10.0);
    let planes = PlaneDepths::new(vec![1.0, 2.0, 4.0, 10.0]).unwrap();
    let r = occlusion_regions(&depth, &planes, 0.04, 4).unwrap();
    assert_eq!(r.counts(), [0, 0, 0, 4 * h]);
}

#[test]
fn occlusion_band_does_not_spread_past_the_background_edge() {
    // near square over a far strip that ends at x = 12; the square spans x 4..16
    let (w, h) = (24, 20);
    let depth = DepthMap::from_fn(w, h, |x, y| {
        if (4..16).contains(&x) && (4..10).contains(&y) {
            1.0
        } else if x < 12 && y >= 10 {
            5.0
        } else {
            10.0
        }
    });
    let planes = PlaneDepths::new(vec![1.0, 5.0, 10.0]).unwrap();
    let r = occlusion_regions(&depth, &planes, 0.04, 3).unwrap();
    // the middle plane only backs the square where the strip touches it
    for p in 0..w * h {
        if r.plane(1)[p] {
            let (x, y) = (p % w, p / w);
            assert!(x < 12 && (7..10).contains(&y), "({x},{y})");
        }
    }
    assert_eq!(r.counts()[1], 8 * 3);
}

#[test]
fn backfill_of_square_occluder_is_background_constant() {
    let (w, h) = (40, 40);
    let inside = |x: usize, y: usize| (14..26).contains(&x) && (14..26).contains(&y);
    let depth = DepthMap::from_fn(w, h, |x, y| if inside(x, y) { 1.0 } else { 5.0 });
    let image = ImageBuffer::from_fn(w, h, 3, |x, y, c| if inside(x, y) { 0.9 } else { [0.3, 0.5, 0.7][c] });
    let planes = PlaneDepths::new(vec![1.0, 5.0]).unwrap();
    let feature = ampi::adjust::MaskStack::hard(&depth, &planes);
    let masks = derive_masks(&feature);
    let regions = occlusion_regions(&depth, &planes, 0.04, 16).unwrap();
    assert!(regions.counts()[1] > 0);
    let hidden = inpaint_hidden(&image, &masks, &regions).unwrap();
    for p in 0..w * h {
        if regions.plane(1)[p] {
            let c = &hidden.colors[1].data()[3 * p..3 * p + 3];
            assert_eq!(c, &[0.3, 0.5, 0.7]);
            assert_eq!(hidden.alphas[1].data()[p], 1.0);
        }
    }
}

#[test]
fn backfill_of_ramp_obeys_maximum_principle() {
    let (w, h) = (48, 20);
    let bar = |x: usize| (22..26).contains(&x);
    let depth = DepthMap::from_fn(w, h, |x, _| if bar(x) { 1.0 } else { 6.0 });
    let image = ImageBuffer::from_fn(w, h, 3, |x, _, _| if bar(x) { 1.0 } else { 0.2 + 0.5 * x as f32 / w as f32 });
    let planes = PlaneDepths::new(vec![1.0, 6.0]).unwrap();
    let masks = derive_masks(&ampi::adjust::MaskStack::hard(&depth, &planes));
    let regions = occlusion_regions(&depth, &planes, 0.04, 8).unwrap();
    let hidden = inpaint_hidden(&image, &masks, &regions).unwrap();
    let lo = 0.2 + 0.5 * 21.0 / w as f32;
    let hi = 0.2 + 0.5 * 26.0 / w as f32;
    let mut filled = 0;
    for p in 0..w * h {
        if regions.plane(1)[p] {
            let v = hidden.colors[1].data()[3 * p];
            assert!(v >= lo - 1e-6 && v <= hi + 1e-6, "{v} outside [{lo}, {hi}]");
            filled += 1;
        }
    }
    assert_eq!(filled, 4 * h);
}

#[test]
fn empty_regions_leave_planes_untouched() {
    let s = scenes::natural(8, 30, 20);
    let depth = DepthMap::constant(30, 20, 2.0);
    let planes = PlaneDepths::new(vec![1.0, 2.0]).unwrap();
    let masks = derive_masks(&ampi::adjust::MaskStack::hard(&depth, &planes));
    let regions = occlusion_regions(&depth, &planes, 0.04, 16).unwrap();
    let hidden = inpaint_hidden(&s.image, &masks, &regions).unwrap();
    for i in 0..2 {
        assert_eq!(hidden.colors[i], s.image);
        assert!(hidden.alphas[i].data().iter().all(|&a| a == 0.0));
    }
}

#[test]
fn build_invariants() {
    let s = scenes::layered(11, 80, 60);
    let planes = planes_for(&s.depth, 16);
    let params = BuildParams::default();
    let b = build_mpi_detailed(&s.image, &s.depth, &planes, &s.intrinsics, &params).unwrap();
    let n = planes.len();
    let size = 80 * 60;
    for i in 0..n {
        for p in 0..size {
            let a = b.alphas[i].data()[p];
            if b.masks.rendering[i][p] < params.alpha_floor {
                assert_eq!(a, 0.0, "cleanup");
            }
            let hidden = b.regions.plane(i)[p] && b.masks.context[i][p] <= params.hidden_gate;
            if !hidden {
                // visible alpha exactly as derived from the masks
                let c = b.masks.context[i][p];
                let m = b.masks.feature.plane(i)[p];
                let expect = if c < params.alpha_floor || b.masks.rendering[i][p] < params.alpha_floor {
                    0.0
                } else {
                    (m / c).clamp(0.0, 1.0)
                };
                assert_eq!(a, expect);
            } else {
                assert_eq!(a, 1.0);
            }
        }
    }
    // composite weights equal the feature masks where no overlay applies
    let mut checked = 0;
    for p in 0..size {
        let overlay = (0..n).any(|i| b.regions.plane(i)[p] && b.masks.context[i][p] <= params.hidden_gate);
        if overlay {
            continue;
        }
        let mut t = 1.0f64;
        for i in 0..n {
            let alpha = b.alphas[i].data()[p] as f64;
            let m = b.masks.feature.plane(i)[p] as f64;
            if b.masks.context[i][p] >= params.alpha_floor && b.masks.rendering[i][p] >= params.alpha_floor {
                assert!((alpha * t - m).abs() < 1e-5, "pixel {p} plane {i}");
            }
            t *= 1.0 - alpha;
        }
        checked += 1;
    }
    assert!(checked > size / 2);
}

#[test]
fn rendered_depth_requantizes_to_expected_plane() {
    let s = scenes::natural(21, 80, 60);
    let planes = planes_for(&s.depth, 16);
    let b = build_mpi_detailed(&s.image, &s.depth, &planes, &s.intrinsics, &BuildParams::default()).unwrap();
    let out = render_view(&b.mpi, &CameraPose::identity(), &s.intrinsics).unwrap();
    let q = planes.disparities();
    let nearest = |v: f64| {
        (0..q.len())
            .min_by(|&a, &b| (q[a] - v).abs().total_cmp(&(q[b] - v).abs()))
            .unwrap() as i64
    };
    for p in 0..80 * 60 {
        let expected: f64 = (0..q.len()).map(|i| b.masks.feature.plane(i)[p] as f64 * q[i]).sum();
        let rendered = 1.0 / out.depth.data()[p] as f64;
        assert!((nearest(rendered) - nearest(expected)).abs() <= 2, "pixel {p}");
    }
}

#[test]
fn build_rejects_bad_inputs() {
    let s = scenes::layered(3, 20, 10);
    let planes = init_planes(4, 1.0, 10.0).unwrap();
    let other = DepthMap::constant(10, 10, 1.0);
    assert!(build_mpi(&s.image, &other, &planes, &s.intrinsics, &BuildParams::default()).is_err());
    let bad = BuildParams { grad_thresh: 0.0, ..Default::default() };
    assert!(build_mpi(&s.image, &s.depth, &planes, &s.intrinsics, &bad).is_err());
    assert!(PlaneDepths::new(vec![2.0, 1.0]).is_err());
}
