use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::camera::CameraPose;
use crate::error::{Error, Result};

/// Orthonormality tolerance for rotations read from a path file.
pub const PATH_ROTATION_TOLERANCE: f64 = 1e-6;

/// One camera of a render path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathFrame {
    /// Maps the frame's camera coordinates into the MPI's source camera.
    pub pose: CameraPose,
    /// Horizontal field of view override, degrees.
    pub fov_deg: Option<f64>,
}

/// Parses a camera path: one frame per line holding the row-major rotation
/// (9 numbers), the translation (3) and optionally a field of view. `#`
/// starts a comment; blank lines are ignored.
pub fn parse_camera_path(text: &str) -> Result<Vec<PathFrame>> {
    let mut frames = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| Error::format("camera path", format!("line {}: {reason}", lineno + 1));
        let values = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad(format!("not a number: {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != 12 && values.len() != 13 {
            return Err(bad(format!("expected 12 or 13 numbers, found {}", values.len())));
        }
        let rotation = Matrix3::from_row_slice(&values[..9]);
        let translation = Vector3::new(values[9], values[10], values[11]);
        let pose = CameraPose::with_tolerance(rotation, translation, PATH_ROTATION_TOLERANCE)
            .map_err(|e| bad(e.to_string()))?;
        let fov_deg = values.get(12).copied();
        if let Some(f) = fov_deg {
            if !(f > 0.0 && f < 180.0) {
                return Err(bad(format!("field of view {f} out of (0, 180)")));
            }
        }
        frames.push(PathFrame { pose, fov_deg });
    }
    Ok(frames)
}

pub fn load_camera_path(path: impl AsRef<Path>) -> Result<Vec<PathFrame>> {
    parse_camera_path(&fs::read_to_string(path)?)
}

/// Inverse of [`parse_camera_path`], exact for every finite value.
pub fn format_camera_path(frames: &[PathFrame]) -> String {
    let mut out = String::from("# r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz [fov]\n");
    for f in frames {
        let r = &f.pose.rotation;
        let t = &f.pose.translation;
        let mut fields: Vec<String> = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| format!("{:?}", r[(i, j)]))
            .collect();
        fields.extend(t.iter().map(|v| format!("{v:?}")));
        if let Some(fov) = f.fov_deg {
            fields.push(format!("{fov:?}"));
        }
        let _ = writeln!(out, "{}", fields.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_records_and_comments() {
        let text = "# header\n\n1 0 0 0 1 0 0 0 1 0.1 0 0\n0 -1 0 1 0 0 0 0 1 0 0 0 50 # quarter turn\n";
        let f = parse_camera_path(text).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f[0].pose.translation.x, 0.1);
        assert_eq!(f[0].fov_deg, None);
        assert_eq!(f[1].fov_deg, Some(50.0));
        assert_eq!(f[1].pose.rotation[(0, 1)], -1.0);
        assert!(parse_camera_path("").unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_records() {
        assert!(parse_camera_path("1 0 0 0 1 0 0 0 1 0 0").is_err());
        assert!(parse_camera_path("2 0 0 0 1 0 0 0 1 0 0 0").is_err());
        assert!(parse_camera_path("1 0 0 0 1 0 0 0 1 0 0 x").is_err());
        assert!(parse_camera_path("1 0 0 0 1 0 0 0 1 0 0 0 0").is_err());
        // small drift within tolerance is accepted
        assert!(parse_camera_path("1.0000001 0 0 0 1 0 0 0 1 0 0 0").is_ok());
    }

    #[test]
    fn format_round_trip() {
        let frames = vec![
            PathFrame {
                pose: CameraPose::from_euler_xyz(0.01, -0.02, 0.03, Vector3::new(0.1, 0.2, -0.3)),
                fov_deg: None,
            },
            PathFrame {
                pose: CameraPose::identity(),
                fov_deg: Some(47.5),
            },
        ];
        assert_eq!(parse_camera_path(&format_camera_path(&frames)).unwrap(), frames);
    }
}
