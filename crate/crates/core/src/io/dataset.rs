use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};

use crate::camera::{CameraPose, Intrinsics};
use crate::error::{Error, Result};
use crate::warpback::StereoPair;

use super::{write_mask_png, write_pfm, write_png};

/// `pair_00042`.
pub fn pair_dir_name(index: usize) -> String {
    format!("pair_{index:05}")
}

/// Camera metadata of a stored pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairMeta {
    pub seed: u64,
    pub intrinsics: Intrinsics,
    pub pose: CameraPose,
}

fn meta_text(pair: &StereoPair) -> String {
    let k = &pair.intrinsics;
    let r = &pair.pose.rotation;
    let t = &pair.pose.translation;
    let mut s = String::new();
    let _ = writeln!(s, "seed: {}", pair.seed);
    let _ = writeln!(s, "width: {}", pair.width());
    let _ = writeln!(s, "height: {}", pair.height());
    let _ = writeln!(s, "fx: {:?}", k.fx);
    let _ = writeln!(s, "fy: {:?}", k.fy);
    let _ = writeln!(s, "cx: {:?}", k.cx);
    let _ = writeln!(s, "cy: {:?}", k.cy);
    let rot: Vec<String> = (0..9).map(|i| format!("{:?}", r[(i / 3, i % 3)])).collect();
    let _ = writeln!(s, "rotation: {}", rot.join(" "));
    let _ = writeln!(s, "translation: {:?} {:?} {:?}", t.x, t.y, t.z);
    let _ = writeln!(s, "pose: x_source = rotation * x_target + translation");
    let holes = pair.holes.iter().filter(|&&h| h).count();
    let _ = writeln!(s, "holes: {holes}");
    s
}

/// Writes one pair directory: `source.png`, `target.png`,
/// `source_depth.pfm`, `target_depth.pfm`, `holes.png` and `meta.txt`.
pub fn write_pair(dir: impl AsRef<Path>, pair: &StereoPair) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let (w, h) = (pair.width(), pair.height());
    write_png(dir.join("source.png"), &pair.source_color)?;
    write_png(dir.join("target.png"), &pair.target_color)?;
    write_pfm(dir.join("source_depth.pfm"), &pair.source_depth)?;
    write_pfm(dir.join("target_depth.pfm"), &pair.target_depth)?;
    write_mask_png(dir.join("holes.png"), &pair.holes, w, h)?;
    fs::write(dir.join("meta.txt"), meta_text(pair))?;
    Ok(())
}

/// Parses `meta.txt` of a pair directory.
pub fn read_pair_meta(path: impl AsRef<Path>) -> Result<PairMeta> {
    let text = fs::read_to_string(path)?;
    let fields: HashMap<&str, &str> = text
        .lines()
        .filter_map(|l| l.split_once(':'))
        .map(|(k, v)| (k.trim(), v.trim()))
        .collect();
    let get = |key: &str| {
        fields
            .get(key)
            .copied()
            .ok_or_else(|| Error::format("pair metadata", format!("missing {key}")))
    };
    let num = |key: &str| -> Result<f64> {
        get(key)?
            .parse()
            .map_err(|_| Error::format("pair metadata", format!("bad {key}")))
    };
    let nums = |key: &str, n: usize| -> Result<Vec<f64>> {
        let v = get(key)?
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| Error::format("pair metadata", format!("bad {key}")))?;
        if v.len() != n {
            return Err(Error::format("pair metadata", format!("{key} needs {n} values")));
        }
        Ok(v)
    };
    let seed = get("seed")?
        .parse()
        .map_err(|_| Error::format("pair metadata", "bad seed"))?;
    let width = num("width")? as usize;
    let height = num("height")? as usize;
    let intrinsics = Intrinsics::new(num("fx")?, num("fy")?, num("cx")?, num("cy")?, width, height)?;
    let r = nums("rotation", 9)?;
    let t = nums("translation", 3)?;
    let pose = CameraPose::new(Matrix3::from_row_slice(&r), Vector3::new(t[0], t[1], t[2]))?;
    Ok(PairMeta {
        seed,
        intrinsics,
        pose,
    })
}

/// One line of `manifest.txt`.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub dir: String,
    pub seed: u64,
    pub image: PathBuf,
}

/// Writes `manifest.txt` listing every pair with its seed and source image.
pub fn write_manifest(out_dir: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<()> {
    let mut s = String::from("# pair seed image\n");
    for e in entries {
        let _ = writeln!(s, "{} {} {}", e.dir, e.seed, e.image.display());
    }
    fs::write(out_dir.as_ref().join("manifest.txt"), s)?;
    Ok(())
}
