//! Display encoding: clamp, gamma 2.2, quantize to 8 bits, write PNG.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::AttributeImage;

pub const GAMMA: f64 = 2.2;

/// `round(255 · clamp(v, 0, 1)^(1/2.2))`; NaN maps to 0.
pub fn tonemap_value(v: f64) -> u8 {
    let c = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (255.0 * c.powf(1.0 / GAMMA)).round() as u8
}

/// 8-bit pixels in row-major order, same channel count as the input.
pub fn tonemap(img: &AttributeImage) -> Vec<u8> {
    img.data().iter().map(|&v| tonemap_value(v)).collect()
}

/// Tone maps a 1- or 3-channel image and encodes it as PNG.
pub fn encode_png(img: &AttributeImage) -> Result<Vec<u8>> {
    let color = match img.channels() {
        1 => png::ColorType::Grayscale,
        3 => png::ColorType::Rgb,
        c => return Err(Error::Png(format!("cannot encode {c} channels"))),
    };
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
        writer.write_image_data(&tonemap(img)).map_err(|e| Error::Png(e.to_string()))?;
    }
    Ok(out)
}

pub fn save_png(path: impl AsRef<Path>, img: &AttributeImage) -> Result<()> {
    std::fs::write(path, encode_png(img)?)?;
    Ok(())
}
