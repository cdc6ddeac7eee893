//! Portable float map reader and writer.
//!
//! `PF` holds RGB and `Pf` greyscale, stored as 32-bit floats with rows from
//! bottom to top. A negative scale marks little-endian data. Files are
//! always written little-endian with scale `-1.0`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::AttributeImage;

fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Pfm("truncated header".into()));
    }
    std::str::from_utf8(&bytes[start..*pos]).map_err(|_| Error::Pfm("header is not ASCII".into()))
}

pub fn read_pfm(bytes: &[u8]) -> Result<AttributeImage> {
    let mut pos = 0;
    let channels = match header_token(bytes, &mut pos)? {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(Error::Pfm(format!("unknown magic {other:?}"))),
    };
    let dim = |tok: &str| tok.parse::<usize>().map_err(|_| Error::Pfm(format!("bad dimension {tok:?}")));
    let width = dim(header_token(bytes, &mut pos)?)?;
    let height = dim(header_token(bytes, &mut pos)?)?;
    if width == 0 || height == 0 {
        return Err(Error::Pfm(format!("empty image {width}x{height}")));
    }
    let scale_tok = header_token(bytes, &mut pos)?;
    let scale: f64 = scale_tok.parse().map_err(|_| Error::Pfm(format!("bad scale {scale_tok:?}")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Pfm(format!("scale must be finite and nonzero, got {scale}")));
    }
    // exactly one whitespace byte separates the header from the payload
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::Pfm("missing payload".into()));
    }
    pos += 1;
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::Pfm("dimensions overflow".into()))?;
    let payload = &bytes[pos..];
    if payload.len() < count * 4 {
        return Err(Error::Pfm(format!("payload has {} bytes, need {}", payload.len(), count * 4)));
    }
    let little = scale < 0.0;
    let row_len = width * channels;
    let mut data = vec![0.0; count];
    for (i, chunk) in payload[..count * 4].chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let (file_row, col) = (i / row_len, i % row_len);
        data[(height - 1 - file_row) * row_len + col] = v as f64;
    }
    AttributeImage::from_data(width, height, channels, data)
}

/// Encodes a 1- or 3-channel image. Values are narrowed to `f32`.
pub fn write_pfm(img: &AttributeImage) -> Result<Vec<u8>> {
    let magic = match img.channels() {
        3 => "PF",
        1 => "Pf",
        c => return Err(Error::Pfm(format!("cannot store {c} channels"))),
    };
    let mut out = format!("{magic}\n{} {}\n-1.0\n", img.width(), img.height()).into_bytes();
    let row_len = img.width() * img.channels();
    out.reserve(img.data().len() * 4);
    for y in (0..img.height()).rev() {
        for v in &img.data()[y * row_len..(y + 1) * row_len] {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn load_pfm(path: impl AsRef<Path>) -> Result<AttributeImage> {
    read_pfm(&std::fs::read(path)?)
}

pub fn save_pfm(path: impl AsRef<Path>, img: &AttributeImage) -> Result<()> {
    std::fs::write(path, write_pfm(img)?)?;
    Ok(())
}
