//! Gaussian blur and unsharp masking.

use super::Image;

/// Normalized 1-D Gaussian taps for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0, "sigma must be positive");
    let radius = (3.0 * sigma).ceil() as isize;
    let raw: Vec<f64> =
        (-radius..=radius).map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Separable blur of one `h * w` plane in `f64`. Borders wrap around, so the
/// blur is a circular convolution and scales every DFT coefficient by the
/// kernel's transform, whose magnitude never exceeds one.
pub fn gaussian_blur_plane(plane: &[f64], h: usize, w: usize, sigma: f64) -> Vec<f64> {
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let wrap = |i: isize, n: usize| i.rem_euclid(n as isize) as usize;
    let mut horiz = vec![0.0; h * w];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..w {
            horiz[y * w + x] =
                kernel.iter().enumerate().map(|(k, wt)| wt * row[wrap(x as isize + k as isize - r, w)]).sum();
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for (k, wt) in kernel.iter().enumerate() {
            let src = wrap(y as isize + k as isize - r, h);
            let (dst, src) = (y * w, src * w);
            for x in 0..w {
                out[dst + x] += wt * horiz[src + x];
            }
        }
    }
    out
}

pub fn gaussian_blur(img: &Image, sigma: f64) -> Image {
    let (h, w) = (img.height(), img.width());
    let planes: Vec<Vec<f64>> = img.planes().iter().map(|p| gaussian_blur_plane(p, h, w, sigma)).collect();
    Image::from_planes(h, w, &planes).expect("planes sized by construction")
}

/// `I + amount * (I - blur(I, sigma))`, clamped to the 8-bit range.
pub fn unsharp_mask(img: &Image, sigma: f64, amount: f64) -> Image {
    let (h, w) = (img.height(), img.width());
    let planes: Vec<Vec<f64>> = img
        .planes()
        .into_iter()
        .map(|p| {
            let blurred = gaussian_blur_plane(&p, h, w, sigma);
            p.iter().zip(&blurred).map(|(v, b)| v + amount * (v - b)).collect()
        })
        .collect();
    Image::from_planes(h, w, &planes).expect("planes sized by construction")
}
