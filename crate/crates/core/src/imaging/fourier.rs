//! 2-D discrete Fourier transform magnitudes.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::Image;
use crate::error::{Error, Result};

/// Row-major `|F(u, v)|`, `u` indexing rows (height) and `v` columns (width).
#[derive(Clone, Debug, PartialEq)]
pub struct MagnitudeGrid {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl MagnitudeGrid {
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[u * self.width + v]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Magnitudes of `F(u,v) = sum_{x,y} I(x,y) exp(-2 pi i (u x / h + v y / w))`
/// for a gray image.
pub fn dft2d_magnitude(img: &Image) -> Result<MagnitudeGrid> {
    if img.channels() != 1 {
        return Err(Error::InvalidInput(format!(
            "the DFT runs on single-channel images, got {} channels",
            img.channels()
        )));
    }
    Ok(dft2d_magnitude_plane(&img.plane(0), img.height(), img.width()))
}

/// Same transform on an arbitrary real-valued plane.
pub fn dft2d_magnitude_plane(plane: &[f64], h: usize, w: usize) -> MagnitudeGrid {
    assert_eq!(plane.len(), h * w, "plane does not match {h}x{w}");
    let mut planner = FftPlanner::<f64>::new();
    let mut rows: Vec<Complex<f64>> = plane.iter().map(|&v| Complex::new(v, 0.0)).collect();
    planner.plan_fft_forward(w).process(&mut rows);

    let mut cols = vec![Complex::new(0.0, 0.0); h * w];
    for y in 0..h {
        for x in 0..w {
            cols[x * h + y] = rows[y * w + x];
        }
    }
    planner.plan_fft_forward(h).process(&mut cols);

    let mut values = vec![0.0; h * w];
    for u in 0..h {
        for v in 0..w {
            values[u * w + v] = cols[v * h + u].norm();
        }
    }
    MagnitudeGrid { height: h, width: w, values }
}

/// Moves the zero-frequency entry to the center: `(u, v)` goes to
/// `((u + h/2) mod h, (v + w/2) mod w)`.
pub fn center_shift(grid: &MagnitudeGrid) -> MagnitudeGrid {
    let (h, w) = (grid.height, grid.width);
    let mut values = vec![0.0; h * w];
    for u in 0..h {
        for v in 0..w {
            values[((u + h / 2) % h) * w + (v + w / 2) % w] = grid.values[u * w + v];
        }
    }
    MagnitudeGrid { height: h, width: w, values }
}
