//! Stereo pairs from a single RGB-D image.
//!
//! The source pixels are lifted to a triangle mesh (long edges across depth
//! discontinuities removed), rendered into a randomly sampled target camera
//! with a z-buffered rasterizer, and the disoccluded holes are filled from
//! the background side. [`warp_back`] re-renders a target raster into the
//! source view, which exposes exactly the content the target could not see.

mod mesh;
mod pair;
mod raster;
mod sampling;

pub use mesh::{mesh_from_depth, TriangleMesh};
pub use pair::{fill_holes, generate_pair, warp_back, PairConfig, StereoPair, DEFAULT_GRAD_THRESH};
pub use raster::{rasterize, RasterResult, NEAR_PLANE};
pub use sampling::{sample_camera, CameraSampleRanges, SampledCamera};
