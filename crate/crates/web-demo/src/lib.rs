//! WebAssembly bindings behind the static page in `www/`.
//!
//! Three operations are exposed: the sharpness spectrum of an image, its
//! antithetical counterparts, and a two-dimensional toy that trains centers
//! with and without the repulsion term.

use antithetic_core::dataset::{
    downsample_counterpart, draw_downsample_factor, enhance_classical, render_identity_image, AugmentConfig,
    SynthConfig,
};
use antithetic_core::imaging::{center_shift, dft2d_magnitude, gaussian_blur, to_grayscale};
use antithetic_core::iqa::sharpness;
use antithetic_core::metric::{ccl, cosine, intra_loss, CenterBank, EmbeddingBatch, LossWeights};
use antithetic_core::rng::{self, streams};
use antithetic_core::{Grid, Image};
use rand::Rng;
use wasm_bindgen::prelude::*;

/// Same ratio the sharpness score uses to decide which entries count.
const SPECTRUM_RATIO: f64 = 1e-3;

#[wasm_bindgen]
pub struct Picture {
    image: Image,
}

fn image_from_rgba(width: usize, height: usize, rgba: &[u8]) -> Result<Image, String> {
    if width == 0 || height == 0 || rgba.len() != width * height * 4 {
        return Err(format!("expected {width}x{height} RGBA data, got {} bytes", rgba.len()));
    }
    let rgb = rgba.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect();
    Image::new(height, width, 3, rgb).map_err(|e| e.to_string())
}

fn image_to_rgba(img: &Image) -> Vec<u8> {
    let c = img.channels();
    img.pixels()
        .chunks_exact(c)
        .flat_map(|p| if c == 1 { [p[0], p[0], p[0], 255] } else { [p[0], p[1], p[2], 255] })
        .collect()
}

/// Centered log-magnitude spectrum. Entries that count toward the sharpness
/// score are drawn in amber, the rest in blue.
fn spectrum_rgba(img: &Image) -> Vec<u8> {
    let grid = center_shift(&dft2d_magnitude(&to_grayscale(img)).expect("grayscale input"));
    let max = grid.max();
    let top = (1.0 + max).ln().max(f64::MIN_POSITIVE);
    grid.values
        .iter()
        .flat_map(|&m| {
            let level = (1.0 + m).ln() / top;
            let v = (55.0 + 200.0 * level).round() as u8;
            if max > 0.0 && m >= max * SPECTRUM_RATIO {
                [v, (f64::from(v) * 0.75) as u8, 40, 255]
            } else {
                [20, 30, (f64::from(v) * 0.6) as u8, 255]
            }
        })
        .collect()
}

fn augment_config(seed: u32) -> AugmentConfig {
    AugmentConfig::new(u64::from(seed))
}

#[wasm_bindgen]
impl Picture {
    /// Wraps canvas `ImageData` bytes; alpha is dropped.
    #[wasm_bindgen(js_name = fromRgba)]
    pub fn from_rgba(width: usize, height: usize, rgba: &[u8]) -> Result<Picture, JsError> {
        image_from_rgba(width, height, rgba).map(|image| Picture { image }).map_err(|e| JsError::new(&e))
    }

    /// Procedural pedestrian `index` of `identity`, optionally degraded by blur.
    pub fn synthetic(identity: u32, index: u32, seed: u32, degraded: bool) -> Picture {
        let cfg = SynthConfig {
            blur_fraction: if degraded { 1.0 } else { 0.0 },
            ..SynthConfig::new(identity as usize + 1, index as usize + 1, u64::from(seed))
        };
        Picture { image: render_identity_image(&cfg, identity, index as usize).image }
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    pub fn rgba(&self) -> Vec<u8> {
        image_to_rgba(&self.image)
    }

    pub fn sharpness(&self) -> f64 {
        sharpness(&self.image).map(|s| s.value()).unwrap_or(f64::NAN)
    }

    /// Spectrum image, same size as the picture.
    #[wasm_bindgen(js_name = spectrumRgba)]
    pub fn spectrum_rgba(&self) -> Vec<u8> {
        spectrum_rgba(&self.image)
    }

    pub fn blurred(&self, sigma: f64) -> Picture {
        Picture { image: gaussian_blur(&self.image, sigma) }
    }

    /// Down-up resampled counterpart, as generated for a sharp image.
    pub fn downsampled(&self, seed: u32) -> Picture {
        let mut rng = rng::stream(u64::from(seed), streams::ANTITHETICAL);
        Picture { image: downsample_counterpart(&self.image, &mut rng, &augment_config(seed)) }
    }

    /// Unsharp-masked counterpart, as generated for a blurry image.
    pub fn enhanced(&self) -> Picture {
        Picture { image: enhance_classical(&self.image) }
    }
}

/// The factor `downsampled(seed)` resamples by.
#[wasm_bindgen(js_name = downsampleFactor)]
pub fn downsample_factor(seed: u32) -> f64 {
    let mut rng = rng::stream(u64::from(seed), streams::ANTITHETICAL);
    draw_downsample_factor(&mut rng, &augment_config(seed))
}

/// Two-dimensional features and centers trained by gradient descent on the
/// intra term alone (center loss) or with the inter-center repulsion added.
#[wasm_bindgen]
pub struct CenterToy {
    features: Grid,
    labels: Vec<usize>,
    bank: CenterBank,
    repel: bool,
}

#[wasm_bindgen]
impl CenterToy {
    #[wasm_bindgen(constructor)]
    pub fn new(identities: usize, per_identity: usize, seed: u32, repel: bool) -> CenterToy {
        let identities = identities.max(2);
        let per_identity = per_identity.max(1);
        let mut rng = rng::stream(u64::from(seed), 0);
        let mut feats = Vec::new();
        let mut labels = Vec::new();
        // identities start crowded into one quadrant
        for id in 0..identities {
            let angle = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
            for _ in 0..per_identity {
                let a = angle + rng.random_range(-0.2..0.2);
                let r = rng.random_range(0.6..1.4);
                feats.extend([r * a.cos(), r * a.sin()]);
                labels.push(id);
            }
        }
        let centers: Vec<f64> = (0..identities * 2).map(|_| rng.random_range(0.01..0.1)).collect();
        CenterToy {
            features: Grid::from_vec(labels.len(), 2, feats).expect("sized"),
            labels,
            bank: CenterBank::new(Grid::from_vec(identities, 2, centers).expect("sized")),
            repel,
        }
    }

    /// One gradient step on features and centers; returns the loss before it.
    pub fn step(&mut self, lr: f64) -> f64 {
        let batch = EmbeddingBatch::new(self.features.clone(), self.labels.clone()).expect("consistent");
        let weights = LossWeights { alpha: 1.0, beta: 1.0, ..LossWeights::default() };
        let out = if self.repel { ccl(&batch, &self.bank, &weights) } else { intra_loss(&batch, &self.bank) }
            .expect("labels in range");
        self.features.add_scaled(&out.grad_features, -lr).expect("same shape");
        self.bank.centers.add_scaled(&out.grad_centers, -lr).expect("same shape");
        self.bank.enforce_norm_floor(1e-8);
        out.value
    }

    /// Interleaved `x, y` coordinates.
    pub fn features(&self) -> Vec<f64> {
        self.features.as_slice().to_vec()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bank.centers.as_slice().to_vec()
    }

    pub fn labels(&self) -> Vec<u32> {
        self.labels.iter().map(|&l| l as u32).collect()
    }

    /// Mean cosine distance over center pairs.
    #[wasm_bindgen(js_name = dCenters)]
    pub fn d_centers(&self) -> f64 {
        let c = &self.bank.centers;
        let mut sum = 0.0;
        let mut pairs = 0;
        for i in 0..c.rows() {
            for j in i + 1..c.rows() {
                sum += 1.0 - cosine(c.row(i), c.row(j));
                pairs += 1;
            }
        }
        sum / pairs as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgba_round_trip() {
        let rgba: Vec<u8> = (0..24).map(|i| i as u8 * 10).collect();
        let img = image_from_rgba(3, 2, &rgba).unwrap();
        assert_eq!((img.height(), img.width(), img.channels()), (2, 3, 3));
        let back = image_to_rgba(&img);
        for (a, b) in rgba.chunks(4).zip(back.chunks(4)) {
            assert_eq!(&a[..3], &b[..3]);
            assert_eq!(b[3], 255);
        }
        assert!(image_from_rgba(3, 2, &rgba[..20]).is_err());
        assert!(image_from_rgba(0, 2, &[]).is_err());
    }

    #[test]
    fn spectrum_highlights_exactly_the_counted_entries() {
        let pic = Picture::synthetic(3, 1, 9, false);
        let spec = pic.spectrum_rgba();
        assert_eq!(spec.len(), pic.width() * pic.height() * 4);
        let counted = spec.chunks(4).filter(|p| p[0] != 20).count();
        let expected = (pic.sharpness() * (pic.width() * pic.height()) as f64).round() as usize;
        assert_eq!(counted, expected);
    }

    #[test]
    fn degraded_renders_are_less_sharp() {
        let sharp = Picture::synthetic(2, 0, 4, false);
        let soft = Picture::synthetic(2, 0, 4, true);
        assert!(soft.sharpness() < sharp.sharpness());
        assert!(sharp.blurred(2.0).sharpness() <= sharp.sharpness());
    }

    #[test]
    fn counterparts_move_sharpness_the_right_way() {
        let sharp = Picture::synthetic(1, 0, 5, false);
        let soft = Picture::synthetic(1, 0, 5, true);
        assert!(sharp.downsampled(3).sharpness() < sharp.sharpness());
        assert!(soft.enhanced().sharpness() > soft.sharpness());
        let u = downsample_factor(3);
        assert!((0.5..=0.8).contains(&u));
        assert_eq!(sharp.downsampled(3).rgba(), sharp.downsampled(3).rgba());
    }

    #[test]
    fn repulsion_spreads_centers_further() {
        let mut with = CenterToy::new(5, 6, 1, true);
        let mut without = CenterToy::new(5, 6, 1, false);
        assert_eq!(with.centers(), without.centers());
        for _ in 0..300 {
            with.step(0.05);
            without.step(0.05);
        }
        assert!(with.d_centers() > without.d_centers(), "{} vs {}", with.d_centers(), without.d_centers());
        assert_eq!(with.features().len(), 60);
        assert_eq!(with.labels().len(), 30);
    }
}
