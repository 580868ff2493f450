//! Grayscale raster input.

use std::path::Path;

use crate::error::{Error, Result};

/// Smallest accepted width or height.
pub const MIN_DIMENSION: usize = 8;

/// Row-major luminance image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width < MIN_DIMENSION || height < MIN_DIMENSION {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} is smaller than the {MIN_DIMENSION}x{MIN_DIMENSION} minimum"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "expected {} intensities, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidImage(format!("intensity {v} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Loads a PNG or JPEG file. Color inputs are converted with the
    /// (0.299, 0.587, 0.114) luminance weights.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = ::image::open(path)
            .map_err(|e| Error::InvalidImage(format!("{}: {e}", path.display())))?;
        Self::from_dynamic(&img)
    }

    pub fn from_dynamic(img: &::image::DynamicImage) -> Result<Self> {
        let rgb = img.to_rgb8();
        let (w, h) = rgb.dimensions();
        let data = rgb
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0;
                luminance(r, g, b)
            })
            .collect();
        Self::new(w as usize, h as usize, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn pixels(&self) -> &[f64] {
        &self.data
    }

    /// Mirror image about the vertical midline.
    pub fn flip_horizontal(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.height {
            data.extend(self.row(y).iter().rev());
        }
        Self { data, ..*self }
    }
}

/// 8-bit RGB to luminance in `[0, 1]`.
pub fn luminance(r: u8, g: u8, b: u8) -> f64 {
    let v = (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0;
    v.clamp(0.0, 1.0)
}
