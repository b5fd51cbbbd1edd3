use std::fs;
use std::path::Path;

use crate::buffer::ImageBuffer;
use crate::camera::Intrinsics;
use crate::error::{Error, Result};
use crate::mpi::{Mpi, MpiPlane};

pub const MAGIC: &[u8; 4] = b"AMPI";
pub const VERSION: u32 = 1;

const HEADER_BYTES: usize = 4 + 4 + 3 * 4 + 4 * 4;

/// Exact file size of an `.ampi` container.
pub fn container_size(width: usize, height: usize, planes: usize) -> usize {
    HEADER_BYTES + planes * (4 + 16 * width * height)
}

/// Serializes an MPI: magic, version, width, height, plane count and
/// `fx fy cx cy`, then the plane depths, then per plane the color
/// (`H×W×3`) and density (`H×W`). All little-endian, reals as f32.
pub fn encode_mpi(mpi: &Mpi) -> Result<Vec<u8>> {
    let k = mpi.intrinsics();
    let depths: Vec<f32> = mpi.depths().iter().map(|&d| d as f32).collect();
    if depths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("mpi container", "plane depths collapse in single precision"));
    }
    let mut out = Vec::with_capacity(container_size(mpi.width(), mpi.height(), mpi.len()));
    out.extend_from_slice(MAGIC);
    for v in [VERSION, mpi.width() as u32, mpi.height() as u32, mpi.len() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in [k.fx, k.fy, k.cx, k.cy] {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    for d in &depths {
        out.extend_from_slice(&d.to_le_bytes());
    }
    for plane in mpi.planes() {
        for v in plane.color.data().iter().chain(plane.density.data()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> &[u8] {
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        s
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take(4).try_into().unwrap())
    }

    fn f32(&mut self) -> f32 {
        f32::from_le_bytes(self.take(4).try_into().unwrap())
    }

    fn f32s(&mut self, n: usize) -> Vec<f32> {
        self.take(4 * n)
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect()
    }
}

pub fn decode_mpi(bytes: &[u8]) -> Result<Mpi> {
    if bytes.len() < HEADER_BYTES {
        return Err(Error::format("mpi container", "shorter than the header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::format("mpi container", "bad magic"));
    }
    let mut r = Reader { bytes, pos: 4 };
    let version = r.u32();
    if version != VERSION {
        return Err(Error::format("mpi container", format!("unsupported version {version}")));
    }
    let (w, h, n) = (r.u32() as usize, r.u32() as usize, r.u32() as usize);
    if w == 0 || h == 0 || n == 0 {
        return Err(Error::format("mpi container", format!("empty dimensions {w}x{h}x{n}")));
    }
    let expected = w
        .checked_mul(h)
        .and_then(|a| a.checked_mul(16))
        .and_then(|a| a.checked_add(4))
        .and_then(|a| a.checked_mul(n))
        .and_then(|a| a.checked_add(HEADER_BYTES));
    if expected != Some(bytes.len()) {
        return Err(Error::format(
            "mpi container",
            format!("{} bytes, header implies {w}x{h} with {n} planes", bytes.len()),
        ));
    }
    let (fx, fy, cx, cy) = (r.f32(), r.f32(), r.f32(), r.f32());
    let intrinsics = Intrinsics::new(fx as f64, fy as f64, cx as f64, cy as f64, w, h)?;
    let depths = r.f32s(n);
    if depths.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::format("mpi container", "plane depths not strictly ascending"));
    }
    let mut planes = Vec::with_capacity(n);
    for &d in &depths {
        let color = ImageBuffer::new(w, h, 3, r.f32s(3 * w * h))?;
        let density = ImageBuffer::new(w, h, 1, r.f32s(w * h))?;
        planes.push(MpiPlane::new(color, density, d as f64)?);
    }
    Mpi::new(planes, intrinsics)
}

pub fn save_mpi(path: impl AsRef<Path>, mpi: &Mpi) -> Result<()> {
    fs::write(path, encode_mpi(mpi)?)?;
    Ok(())
}

pub fn load_mpi(path: impl AsRef<Path>) -> Result<Mpi> {
    decode_mpi(&fs::read(path)?)
}
