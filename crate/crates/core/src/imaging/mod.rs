//! 8-bit raster images and the pixel operations the pipeline needs.

mod erase;
mod filter;
mod fourier;
mod pnm;
mod resample;

pub use erase::{random_erase, EraseConfig};
pub use filter::{gaussian_blur, gaussian_blur_plane, gaussian_kernel, unsharp_mask};
pub use fourier::{center_shift, dft2d_magnitude, dft2d_magnitude_plane, MagnitudeGrid};
pub use pnm::{decode_pnm, encode_pnm, load_image, save_image};
pub use resample::{resize, ResampleFilter};

use crate::error::{Error, Result};

/// Row-major interleaved 8-bit image with 1 (gray) or 3 (RGB) channels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidInput(format!("images have 1 or 3 channels, got {channels}")));
        }
        if pixels.len() != height * width * channels {
            return Err(Error::Shape(format!(
                "{height}x{width}x{channels} image needs {} bytes, got {}",
                height * width * channels,
                pixels.len()
            )));
        }
        Ok(Self { height, width, channels, pixels })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    /// Quantizes planar `f64` channels (each `height * width`) with
    /// round-half-up and clamping to `[0, 255]`.
    pub fn from_planes(height: usize, width: usize, planes: &[Vec<f64>]) -> Result<Self> {
        let channels = planes.len();
        let mut pixels = vec![0u8; height * width * channels];
        for (c, plane) in planes.iter().enumerate() {
            if plane.len() != height * width {
                return Err(Error::Shape("plane size does not match image".into()));
            }
            for (i, &v) in plane.iter().enumerate() {
                pixels[i * channels + c] = quantize(v);
            }
        }
        Self::new(height, width, channels, pixels)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> u8 {
        self.pixels[(y * self.width + x) * self.channels + c]
    }

    pub fn set(&mut self, y: usize, x: usize, c: usize, v: u8) {
        self.pixels[(y * self.width + x) * self.channels + c] = v;
    }

    /// One channel as a `height * width` plane of `f64`.
    pub fn plane(&self, c: usize) -> Vec<f64> {
        self.pixels.iter().skip(c).step_by(self.channels).map(|&p| f64::from(p)).collect()
    }

    pub fn planes(&self) -> Vec<Vec<f64>> {
        (0..self.channels).map(|c| self.plane(c)).collect()
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }
}

/// Round half-up and clamp to the 8-bit range.
pub(crate) fn quantize(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Luma conversion (0.299, 0.587, 0.114), rounded half-up. Gray images are
/// returned unchanged.
pub fn to_grayscale(img: &Image) -> Image {
    if img.channels == 1 {
        return img.clone();
    }
    let pixels = img
        .pixels
        .chunks_exact(3)
        .map(|p| quantize(0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2])))
        .collect();
    Image { height: img.height, width: img.width, channels: 1, pixels }
}

/// Mirrors every row left-to-right.
pub fn hflip(img: &Image) -> Image {
    let c = img.channels;
    let mut pixels = Vec::with_capacity(img.pixels.len());
    for row in img.pixels.chunks_exact(img.width * c) {
        for px in row.chunks_exact(c).rev() {
            pixels.extend_from_slice(px);
        }
    }
    Image { pixels, ..img.clone() }
}
