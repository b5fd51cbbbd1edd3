//! Multiplane images and novel-view rendering.
//!
//! An [`Mpi`] is a stack of fronto-parallel planes in the source camera's
//! frustum, ordered nearest first. Each plane carries RGB color and a
//! density channel; densities become alphas through [`sigma_to_alpha`].
//! Rendering maps every target pixel onto every plane with the
//! plane-induced homography, samples bilinearly and composites front to
//! back with the over operator.
//!
//! The density parameterization follows `α = exp(−δ·σ)` literally, so a
//! density of zero is fully *opaque*. This is the reverse of the textbook
//! volume-rendering form `1 − exp(−δ·σ)`; the library keeps the literal
//! form and [`alpha_to_sigma`] is its exact inverse.

mod alpha;
mod composite;
mod homography;
mod render;
mod warp;

pub use alpha::{alpha_to_sigma, delta_maps, plane_gaps, sigma_to_alpha, ALPHA_MIN};
pub use composite::{composite, Composite, WarpedPlane, TRANSMITTANCE_CUTOFF};
pub use homography::{map_pixel, plane_homography};
pub use render::{render_view, PreparedMpi, RenderOutput, DEPTH_WEIGHT_FLOOR};
pub use warp::{bilinear_sample, warp_plane};

use crate::buffer::ImageBuffer;
use crate::camera::Intrinsics;
use crate::error::{Error, Result};

/// One fronto-parallel plane at source-frame depth `depth`.
#[derive(Clone, Debug, PartialEq)]
pub struct MpiPlane {
    pub color: ImageBuffer,
    pub density: ImageBuffer,
    pub depth: f64,
}

impl MpiPlane {
    pub fn new(color: ImageBuffer, density: ImageBuffer, depth: f64) -> Result<Self> {
        if color.channels() != 3 {
            return Err(Error::invalid(
                "plane",
                format!("color needs 3 channels, got {}", color.channels()),
            ));
        }
        if density.channels() != 1 {
            return Err(Error::invalid(
                "plane",
                format!("density needs 1 channel, got {}", density.channels()),
            ));
        }
        if color.width() != density.width() || color.height() != density.height() {
            return Err(Error::Shape("plane color and density sizes differ".into()));
        }
        if !(depth > 0.0 && depth.is_finite()) {
            return Err(Error::invalid("plane", format!("depth {depth} must be positive")));
        }
        if density.data().iter().any(|&s| s < 0.0) {
            return Err(Error::invalid("plane", "negative density"));
        }
        Ok(MpiPlane {
            color,
            density,
            depth,
        })
    }

    pub fn width(&self) -> usize {
        self.color.width()
    }

    pub fn height(&self) -> usize {
        self.color.height()
    }
}

/// A multiplane image: planes nearest first plus the source intrinsics.
#[derive(Clone, Debug, PartialEq)]
pub struct Mpi {
    planes: Vec<MpiPlane>,
    intrinsics: Intrinsics,
}

impl Mpi {
    pub fn new(planes: Vec<MpiPlane>, intrinsics: Intrinsics) -> Result<Self> {
        intrinsics.validate()?;
        if planes.is_empty() {
            return Err(Error::invalid("mpi", "needs at least one plane"));
        }
        for (i, p) in planes.iter().enumerate() {
            if p.width() != intrinsics.width || p.height() != intrinsics.height {
                return Err(Error::Shape(format!(
                    "plane {i} is {}x{}, intrinsics are {}x{}",
                    p.width(),
                    p.height(),
                    intrinsics.width,
                    intrinsics.height
                )));
            }
        }
        if let Some(i) = planes.windows(2).position(|w| w[1].depth <= w[0].depth) {
            return Err(Error::invalid(
                "mpi",
                format!(
                    "plane depths must increase strictly, got {} then {}",
                    planes[i].depth,
                    planes[i + 1].depth
                ),
            ));
        }
        Ok(Mpi { planes, intrinsics })
    }

    pub fn planes(&self) -> &[MpiPlane] {
        &self.planes
    }

    pub fn intrinsics(&self) -> &Intrinsics {
        &self.intrinsics
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    pub fn depths(&self) -> Vec<f64> {
        self.planes.iter().map(|p| p.depth).collect()
    }

    pub fn width(&self) -> usize {
        self.intrinsics.width
    }

    pub fn height(&self) -> usize {
        self.intrinsics.height
    }

    pub fn into_planes(self) -> Vec<MpiPlane> {
        self.planes
    }
}
