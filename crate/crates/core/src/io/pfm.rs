use std::fs;
use std::path::Path;

use crate::buffer::DepthMap;
use crate::error::{Error, Result};

/// Single-channel little-endian PFM (`Pf`, scale −1), rows stored bottom
/// to top.
pub fn encode_pfm(depth: &DepthMap) -> Vec<u8> {
    let (w, h) = (depth.width(), depth.height());
    let mut out = format!("Pf\n{w} {h}\n-1\n").into_bytes();
    out.reserve(w * h * 4);
    for y in (0..h).rev() {
        for &v in &depth.data()[y * w..(y + 1) * w] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::format("PFM", "truncated header"));
    }
    std::str::from_utf8(&bytes[start..*pos]).map_err(|_| Error::format("PFM", "non-ASCII header"))
}

/// Decodes a PFM depth map. Color (`PF`) files keep their first channel.
pub fn decode_pfm(bytes: &[u8]) -> Result<DepthMap> {
    let mut pos = 0;
    let channels = match token(bytes, &mut pos)? {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(Error::format("PFM", format!("bad magic {other:?}"))),
    };
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::format("PFM", format!("bad dimension {s:?}")))
    };
    let w = parse(token(bytes, &mut pos)?)?;
    let h = parse(token(bytes, &mut pos)?)?;
    let scale: f64 = token(bytes, &mut pos)?
        .parse()
        .map_err(|_| Error::format("PFM", "bad scale"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::format("PFM", "scale must be non-zero"));
    }
    // exactly one whitespace byte separates the header from the payload
    pos += 1;
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(4 * channels))
        .ok_or_else(|| Error::format("PFM", "dimensions overflow"))?;
    let payload = bytes.get(pos..).unwrap_or(&[]);
    if payload.len() != expected {
        return Err(Error::format(
            "PFM",
            format!("payload is {} bytes, header implies {expected}", payload.len()),
        ));
    }
    let little = scale < 0.0;
    let mut data = vec![0.0f32; w * h];
    for (i, chunk) in payload.chunks_exact(4 * channels).enumerate() {
        let b: [u8; 4] = chunk[..4].try_into().unwrap();
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        let (x, row) = (i % w, i / w);
        data[(h - 1 - row) * w + x] = v;
    }
    DepthMap::new(w, h, data)
}

pub fn write_pfm(path: impl AsRef<Path>, depth: &DepthMap) -> Result<()> {
    fs::write(path, encode_pfm(depth))?;
    Ok(())
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<DepthMap> {
    decode_pfm(&fs::read(path)?)
}
