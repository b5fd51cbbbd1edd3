//! On-disk formats: PNG images and masks, PFM depth, the `.ampi` MPI
//! container, camera path files and the stereo-pair dataset layout.

mod campath;
mod container;
mod dataset;
mod pfm;
mod png;

pub use campath::{format_camera_path, load_camera_path, parse_camera_path, PathFrame, PATH_ROTATION_TOLERANCE};
pub use container::{container_size, decode_mpi, encode_mpi, load_mpi, save_mpi, MAGIC, VERSION};
pub use dataset::{pair_dir_name, read_pair_meta, write_manifest, write_pair, ManifestEntry, PairMeta};
pub use pfm::{decode_pfm, encode_pfm, read_pfm, write_pfm};
pub use png::{read_depth_png16, read_mask_png, read_png, write_mask_png, write_png};
