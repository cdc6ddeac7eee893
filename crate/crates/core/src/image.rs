use crate::error::{Error, Result};

/// Row-major `height × width × channels` float image with an optional
/// per-pixel foreground mask.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributeImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
    mask: Option<Vec<bool>>,
}

impl AttributeImage {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
            mask: None,
        }
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
            mask: None,
        }
    }

    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::ShapeMismatch(format!(
                "data length {} != {}x{}x{}",
                data.len(),
                width,
                height,
                channels
            )));
        }
        Ok(Self { width, height, channels, data, mask: None })
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        self.set_mask(Some(mask))?;
        Ok(self)
    }

    pub fn set_mask(&mut self, mask: Option<Vec<bool>>) -> Result<()> {
        if let Some(m) = &mask {
            if m.len() != self.width * self.height {
                return Err(Error::ShapeMismatch(format!(
                    "mask length {} != {}x{}",
                    m.len(),
                    self.width,
                    self.height
                )));
            }
        }
        self.mask = mask;
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    /// Foreground test; pixels are foreground when no mask is attached.
    pub fn is_foreground(&self, x: usize, y: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[y * self.width + x])
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f64] {
        let start = (y * self.width + x) * self.channels;
        &mut self.data[start..start + self.channels]
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f64) {
        self.data[(y * self.width + x) * self.channels + c] = value;
    }

    pub fn same_shape(&self, other: &AttributeImage) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub(crate) fn check_same_shape(&self, other: &AttributeImage, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{what}: {}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )))
        }
    }
}

/// Checks a mask against an image size and that it selects at least one pixel.
pub(crate) fn check_mask(mask: Option<&[bool]>, pixel_count: usize) -> Result<()> {
    match mask {
        Some(m) if m.len() != pixel_count => Err(Error::ShapeMismatch(format!(
            "mask length {} != pixel count {pixel_count}",
            m.len()
        ))),
        Some(m) if !m.iter().any(|&b| b) => Err(Error::EmptyForeground),
        None if pixel_count == 0 => Err(Error::EmptyForeground),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_length_checked() {
        assert!(AttributeImage::from_data(2, 2, 3, vec![0.0; 11]).is_err());
        let img = AttributeImage::from_data(2, 2, 3, vec![0.0; 12]).unwrap();
        assert!(img.clone().with_mask(vec![true; 3]).is_err());
        assert!(img.with_mask(vec![true; 4]).is_ok());
    }

    #[test]
    fn pixel_indexing_is_row_major() {
        let img = AttributeImage::from_data(3, 2, 2, (0..12).map(f64::from).collect()).unwrap();
        assert_eq!(img.pixel(1, 1), &[8.0, 9.0]);
        assert_eq!(img.get(2, 0, 1), 5.0);
    }

    #[test]
    fn empty_mask_rejected() {
        assert!(matches!(check_mask(Some(&[false, false]), 2), Err(Error::EmptyForeground)));
        assert!(check_mask(Some(&[false, true]), 2).is_ok());
    }
}
