//! Random erasing: replace a random rectangle with uniform noise.

use rand::Rng;

use super::Image;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EraseConfig {
    pub probability: f64,
    pub area_min: f64,
    pub area_max: f64,
    pub aspect_min: f64,
    pub aspect_max: f64,
    pub attempts: usize,
}

impl Default for EraseConfig {
    fn default() -> Self {
        Self {
            probability: 0.5,
            area_min: 0.02,
            area_max: 0.4,
            aspect_min: 0.3,
            aspect_max: 3.3,
            attempts: 100,
        }
    }
}

/// Returns the (possibly) erased image and whether a rectangle was filled.
pub fn random_erase<R: Rng + ?Sized>(img: &Image, cfg: &EraseConfig, rng: &mut R) -> (Image, bool) {
    if rng.random::<f64>() >= cfg.probability {
        return (img.clone(), false);
    }
    let (h, w) = (img.height(), img.width());
    let area = (h * w) as f64;
    for _ in 0..cfg.attempts {
        let target = area * rng.random_range(cfg.area_min..cfg.area_max);
        let aspect = rng.random_range(cfg.aspect_min..cfg.aspect_max);
        let eh = (target * aspect).sqrt().round() as usize;
        let ew = (target / aspect).sqrt().round() as usize;
        if eh == 0 || ew == 0 || eh >= h || ew >= w {
            continue;
        }
        let top = rng.random_range(0..=h - eh);
        let left = rng.random_range(0..=w - ew);
        let mut out = img.clone();
        for y in top..top + eh {
            for x in left..left + ew {
                for c in 0..img.channels() {
                    out.set(y, x, c, rng.random());
                }
            }
        }
        return (out, true);
    }
    (img.clone(), false)
}
