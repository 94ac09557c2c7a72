//! Middlebury `.flo`: little-endian `f32` magic `202021.25`, `i32` width,
//! `i32` height, then `width * height` interleaved `(u, v)` `f32` pairs in
//! row-major order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::FlowField;

pub const FLO_MAGIC: f32 = 202021.25;

const HEADER_LEN: usize = 12;

pub fn encode_flo(flow: &FlowField) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + flow.data().len() * 4);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(flow.width() as i32).to_le_bytes());
    out.extend_from_slice(&(flow.height() as i32).to_le_bytes());
    for v in flow.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn word(bytes: &[u8], at: usize) -> [u8; 4] {
    bytes[at..at + 4].try_into().expect("4-byte slice")
}

pub fn decode_flo(bytes: &[u8]) -> Result<FlowField> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::CorruptFile(format!(
            "flo header truncated ({} bytes)",
            bytes.len()
        )));
    }
    let magic = f32::from_le_bytes(word(bytes, 0));
    if magic != FLO_MAGIC {
        return Err(Error::CorruptFile(format!("bad flo magic {magic}")));
    }
    let width = i32::from_le_bytes(word(bytes, 4));
    let height = i32::from_le_bytes(word(bytes, 8));
    if width <= 0 || height <= 0 {
        return Err(Error::CorruptFile(format!(
            "bad flo dimensions {width}x{height}"
        )));
    }
    let (width, height) = (width as usize, height as usize);
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::CorruptFile("flo dimensions overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(Error::CorruptFile(format!(
            "flo payload truncated: {} of {expected} bytes",
            payload.len()
        )));
    }
    let data: Vec<f32> = payload[..expected]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
        .collect();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::CorruptFile("flo contains non-finite values".into()));
    }
    FlowField::new(height, width, data)
}

pub fn read_flo(path: &Path) -> Result<FlowField> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_flo(&bytes).map_err(|e| match e {
        Error::CorruptFile(msg) => Error::CorruptFile(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_flo(flow: &FlowField, path: &Path) -> Result<()> {
    fs::write(path, encode_flo(flow)).map_err(|e| Error::io(path, e))
}
