use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use ampi::adjust::{
    adjust_planes, disparity_span, init_planes, plane_losses, soft_assign, AdjustParams, PlaneDepths,
};
use ampi::build::{build_mpi, BuildParams};
use ampi::io;
use ampi::metrics::MetricReport;
use ampi::mpi::{sigma_to_alpha, PreparedMpi};
use ampi::warpback::{generate_pair, CameraSampleRanges, PairConfig};
use ampi::{DepthMap, ImageBuffer, Intrinsics};

use crate::error::{CliError, CliResult};
use crate::{BuildArgs, DepthInput, EvalArgs, GenpairsArgs, InspectArgs, RenderArgs};

/// Pairs generated concurrently before being written out.
const PAIR_BATCH: usize = 16;

fn load_depth(path: &Path, input: &DepthInput) -> CliResult<DepthMap> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("pfm") => Ok(io::read_pfm(path)?),
        Some("png") => {
            let scale = input
                .depth_scale
                .ok_or_else(|| CliError::usage("16-bit PNG depth needs --depth-scale"))?;
            Ok(io::read_depth_png16(path, scale)?)
        }
        _ => Err(CliError::usage(format!(
            "{}: depth must be .pfm or .png",
            path.display()
        ))),
    }
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn print_losses(label: &str, depth: &DepthMap, planes: &PlaneDepths, tau: f64) -> CliResult<()> {
    let masks = soft_assign(depth, planes, tau * disparity_span(depth))?;
    let losses = plane_losses(depth, planes, &masks)?;
    println!("assign_{label}: {:.9}", losses.assign);
    println!("rank_{label}: {:.9}", losses.rank);
    Ok(())
}

pub fn build(args: &BuildArgs) -> CliResult<()> {
    let image = io::read_png(&args.image)?;
    let depth = load_depth(&args.depth, &args.depth_input)?;
    if depth.width() != image.width() || depth.height() != image.height() {
        return Err(CliError::usage(format!(
            "depth is {}x{} but image is {}x{}",
            depth.width(),
            depth.height(),
            image.width(),
            image.height()
        )));
    }
    let k = Intrinsics::from_fov(image.width(), image.height(), args.fov)?;
    let (lo, hi) = depth.range();
    let initial = init_planes(args.planes, lo as f64, hi as f64)?;
    let planes = if args.no_adjust {
        initial.clone()
    } else {
        adjust_planes(&depth, args.planes, &AdjustParams::default())?
    };
    println!("planes: {}", planes.len());
    print_losses("initial", &depth, &initial, args.tau)?;
    print_losses("final", &depth, &planes, args.tau)?;
    let depths: Vec<String> = planes.as_slice().iter().map(|d| format!("{d:.6}")).collect();
    println!("depths: {}", depths.join(" "));

    let params = BuildParams {
        tau: args.tau,
        hidden_band: args.band,
        grad_thresh: args.grad_thresh,
        ..Default::default()
    };
    let mpi = build_mpi(&image, &depth, &planes, &k, &params)?;
    io::save_mpi(&args.out, &mpi)?;
    println!("wrote: {}", args.out.display());
    Ok(())
}

fn parse_size(s: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::usage(format!("--size must look like 384x256, got {s:?}"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

pub fn render(args: &RenderArgs) -> CliResult<()> {
    let mpi = io::load_mpi(&args.mpi)?;
    let frames = io::load_camera_path(&args.path)?;
    let base = match &args.size {
        Some(s) => {
            let (w, h) = parse_size(s)?;
            mpi.intrinsics().resized(w, h)?
        }
        None => *mpi.intrinsics(),
    };
    create_dir(&args.out_dir)?;
    let prepared = PreparedMpi::new(&mpi);
    frames.par_iter().enumerate().try_for_each(|(i, frame)| -> CliResult<()> {
        let k = match frame.fov_deg {
            Some(fov) => Intrinsics::from_fov(base.width, base.height, fov)?,
            None => base,
        };
        let out = prepared.render(&frame.pose, &k)?;
        io::write_png(args.out_dir.join(format!("frame_{i:05}.png")), &out.color)?;
        Ok(())
    })?;
    println!("frames: {}", frames.len());
    Ok(())
}

pub fn genpairs(args: &GenpairsArgs) -> CliResult<()> {
    if args.images.len() != args.depths.len() {
        return Err(CliError::usage(format!(
            "{} images but {} depth maps",
            args.images.len(),
            args.depths.len()
        )));
    }
    let inputs = args
        .images
        .iter()
        .zip(&args.depths)
        .map(|(i, d)| {
            let image = io::read_png(i)?;
            let depth = load_depth(d, &args.depth_input)?;
            if depth.width() != image.width() || depth.height() != image.height() {
                return Err(CliError::usage(format!(
                    "{} and {} differ in size",
                    i.display(),
                    d.display()
                )));
            }
            Ok((image, depth))
        })
        .collect::<CliResult<Vec<(ImageBuffer, DepthMap)>>>()?;
    let config = PairConfig {
        ranges: CameraSampleRanges {
            translation: [args.tx, args.ty, args.tz],
            rotation_deg: [args.rot; 3],
            fov_deg: (args.fov_min, args.fov_max),
        },
        grad_thresh: args.grad_thresh,
    };
    config.ranges.validate()?;
    create_dir(&args.out_dir)?;

    let mut manifest = Vec::with_capacity(args.count);
    let indices: Vec<usize> = (0..args.count).collect();
    for batch in indices.chunks(PAIR_BATCH) {
        let pairs = batch
            .par_iter()
            .map(|&k| {
                let (image, depth) = &inputs[k % inputs.len()];
                generate_pair(image, depth, args.seed.wrapping_add(k as u64), &config)
            })
            .collect::<Result<Vec<_>, _>>()?;
        for (&k, pair) in batch.iter().zip(&pairs) {
            let name = io::pair_dir_name(k);
            io::write_pair(args.out_dir.join(&name), pair)?;
            manifest.push(io::ManifestEntry {
                dir: name,
                seed: pair.seed,
                image: args.images[k % inputs.len()].clone(),
            });
        }
    }
    io::write_manifest(&args.out_dir, &manifest)?;
    println!("pairs: {}", args.count);
    Ok(())
}

fn png_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| CliError::io(dir, e)))
        .collect::<CliResult<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    Ok(files)
}

pub fn eval(args: &EvalArgs) -> CliResult<()> {
    let pairs: Vec<(PathBuf, PathBuf)> = if args.pred.is_dir() {
        if !args.gt.is_dir() {
            return Err(CliError::usage("--pred is a directory, so --gt must be one too"));
        }
        png_files(&args.pred)?
            .into_iter()
            .map(|p| {
                let gt = args.gt.join(p.file_name().expect("listed file"));
                (p, gt)
            })
            .collect()
    } else {
        vec![(args.pred.clone(), args.gt.clone())]
    };
    if pairs.is_empty() {
        return Err(CliError::usage(format!("no PNG files in {}", args.pred.display())));
    }
    let mut reports = Vec::with_capacity(pairs.len());
    for (pred, gt) in &pairs {
        let r = MetricReport::evaluate(&io::read_png(pred)?, &io::read_png(gt)?, args.crop)?;
        println!("image: {}", pred.display());
        println!("{r}");
        println!();
        reports.push(r);
    }
    if reports.len() > 1 {
        let mean = MetricReport::mean(&reports).expect("non-empty");
        println!("image: mean of {}", reports.len());
        println!("{mean}");
    }
    Ok(())
}

/// Strip with one tick per plane, placed linearly in disparity from the
/// nearest plane (left) to the farthest (right).
fn depth_ruler(depths: &[f64]) -> ImageBuffer {
    let (w, h) = (512usize, 32usize);
    let q: Vec<f64> = depths.iter().map(|d| 1.0 / d).collect();
    let (near, far) = (q[0], q[q.len() - 1]);
    let ticks: Vec<usize> = q
        .iter()
        .map(|&v| {
            let t = if near > far { (near - v) / (near - far) } else { 0.0 };
            ((t * (w - 1) as f64).round() as usize).min(w - 1)
        })
        .collect();
    ImageBuffer::from_fn(w, h, 3, |x, y, _| {
        if ticks.contains(&x) {
            1.0
        } else if y == h / 2 {
            0.5
        } else {
            0.1
        }
    })
}

pub fn inspect(args: &InspectArgs) -> CliResult<()> {
    let mpi = io::load_mpi(&args.mpi)?;
    create_dir(&args.out_dir)?;
    let alphas = sigma_to_alpha(&mpi);
    for (i, (plane, alpha)) in mpi.planes().iter().zip(&alphas).enumerate() {
        let premultiplied = ImageBuffer::from_fn(mpi.width(), mpi.height(), 3, |x, y, c| {
            alpha.get(x, y, 0) * plane.color.get(x, y, c)
        });
        let name = format!("plane_{i:02}_d{:.4}.png", plane.depth);
        io::write_png(args.out_dir.join(&name), &premultiplied)?;
        let mean_alpha = alpha.data().iter().map(|&a| a as f64).sum::<f64>() / alpha.data().len() as f64;
        println!("{name} disparity {:.6} mean_alpha {mean_alpha:.6}", 1.0 / plane.depth);
    }
    io::write_png(args.out_dir.join("depth_ruler.png"), &depth_ruler(&mpi.depths()))?;
    Ok(())
}
