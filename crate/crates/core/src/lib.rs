//! Adaptive multiplane images from a single RGB-D view.
//!
//! The crate covers the whole non-learned pipeline:
//!
//! * [`adjust`] places planes at scene-specific depths by minimizing the
//!   mask-weighted disparity quantization error with a 1-D Lloyd iteration,
//! * [`build`] turns an image, its depth and a plane set into an [`Mpi`]
//!   using feature/context/rendering mask algebra and a diffusion fill for
//!   occluded content,
//! * [`mpi`] renders novel views by homography warping and over-compositing,
//! * [`warpback`] synthesizes stereo pairs from one RGB-D image through mesh
//!   rasterization, back-warping and hole filling,
//! * [`metrics`] implements PSNR/SSIM with border cropping,
//! * [`io`] reads and writes the on-disk formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adjust;
pub mod buffer;
pub mod build;
pub mod camera;
pub mod error;
mod fill;
pub mod io;
pub mod metrics;
pub mod mpi;
pub mod scenes;
pub mod warpback;

pub use buffer::{DepthMap, ImageBuffer};
pub use camera::{CameraPose, Intrinsics};
pub use error::{Error, Result};
pub use mpi::{Mpi, MpiPlane};
