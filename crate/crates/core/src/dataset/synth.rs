//! Procedural pedestrian-like corpus.
//!
//! Each identity is a fixed figure (head, patterned upper body, legs, an
//! optional bag) drawn over a camera-dependent background. Every image adds
//! translation, brightness and sensor-noise jitter, and a per-identity subset
//! is Gaussian-blurred to create the low-resolution half of the corpus.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::manifest::{Manifest, SampleRecord};
use crate::error::{Error, Result};
use crate::imaging::{gaussian_blur, save_image, Image};
use crate::rng::{self, streams, StreamRng};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub identities: usize,
    pub images_per_identity: usize,
    pub height: usize,
    pub width: usize,
    pub blur_fraction: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(identities: usize, images_per_identity: usize, seed: u64) -> Self {
        Self { identities, images_per_identity, height: 64, width: 32, blur_fraction: 0.5, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.identities == 0 || self.images_per_identity == 0 {
            return Err(Error::InvalidInput("corpus needs at least one identity and image".into()));
        }
        if self.height < 8 || self.width < 4 {
            return Err(Error::InvalidInput(format!(
                "synthetic images must be at least 8x4, got {}x{}",
                self.height, self.width
            )));
        }
        if !(0.0..=1.0).contains(&self.blur_fraction) {
            return Err(Error::InvalidInput(format!("blur fraction {} outside [0, 1]", self.blur_fraction)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SynthSample {
    pub identity: u32,
    pub camera: u32,
    pub index: usize,
    pub image: Image,
    pub blur_sigma: Option<f64>,
}

impl SynthSample {
    pub fn blurred(&self) -> bool {
        self.blur_sigma.is_some()
    }

    pub fn file_name(&self) -> String {
        format!("id{:04}_{:03}.ppm", self.identity, self.index)
    }
}

#[derive(Clone, Debug)]
pub struct SynthCorpus {
    pub manifest: Manifest,
    /// Ground truth for which records were degraded, in manifest order.
    pub blurred: Vec<bool>,
}

#[derive(Clone, Copy, Debug)]
enum Pattern {
    Solid,
    HorizontalStripes,
    VerticalStripes,
    Checks,
}

#[derive(Clone, Debug)]
struct Appearance {
    skin: f64,
    hair: [f64; 3],
    upper: [f64; 3],
    upper_alt: [f64; 3],
    upper_pattern: Pattern,
    lower: [f64; 3],
    lower_alt: [f64; 3],
    lower_pattern: Pattern,
    period: f64,
    waist: f64,
    half_width: f64,
    /// (side, top) of a carried bag, in normalized coordinates.
    bag: Option<(f64, f64, [f64; 3])>,
}

fn color(rng: &mut StreamRng) -> [f64; 3] {
    [0, 1, 2].map(|_| rng.random_range(15.0..240.0))
}

fn pattern(rng: &mut StreamRng) -> Pattern {
    match rng.random_range(0..4) {
        0 => Pattern::Solid,
        1 => Pattern::HorizontalStripes,
        2 => Pattern::VerticalStripes,
        _ => Pattern::Checks,
    }
}

fn appearance(seed: u64, identity: u32) -> Appearance {
    let mut rng = rng::stream(seed, streams::SYNTH_IDENTITY + u64::from(identity));
    Appearance {
        skin: rng.random_range(120.0..220.0),
        hair: color(&mut rng).map(|c| c * 0.5),
        upper: color(&mut rng),
        upper_alt: color(&mut rng),
        upper_pattern: pattern(&mut rng),
        lower: color(&mut rng),
        lower_alt: color(&mut rng),
        lower_pattern: pattern(&mut rng),
        period: rng.random_range(2.0..6.0),
        waist: rng.random_range(0.45..0.62),
        half_width: rng.random_range(0.2..0.34),
        bag: rng.random_bool(0.5).then(|| {
            (if rng.random_bool(0.5) { -1.0 } else { 1.0 }, rng.random_range(0.3..0.55), color(&mut rng))
        }),
    }
}

fn pick(p: Pattern, py: f64, px: f64, period: f64, base: [f64; 3], alt: [f64; 3]) -> [f64; 3] {
    let band = |v: f64| (v / period).floor().rem_euclid(2.0) == 1.0;
    let use_alt = match p {
        Pattern::Solid => false,
        Pattern::HorizontalStripes => band(py),
        Pattern::VerticalStripes => band(px),
        Pattern::Checks => band(py) ^ band(px),
    };
    if use_alt {
        alt
    } else {
        base
    }
}

/// Indices of the blurred images of one identity.
fn blurred_indices(cfg: &SynthConfig, identity: u32) -> Vec<bool> {
    let n = cfg.images_per_identity;
    let count = ((n as f64 * cfg.blur_fraction) + 0.5).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(cfg.seed, streams::SYNTH_BLUR_SELECT + u64::from(identity)));
    let mut flags = vec![false; n];
    for &i in &order[..count.min(n)] {
        flags[i] = true;
    }
    flags
}

fn render(cfg: &SynthConfig, app: &Appearance, identity: u32, index: usize, blurred: bool) -> SynthSample {
    let (h, w) = (cfg.height, cfg.width);
    let global = identity as u64 * cfg.images_per_identity as u64 + index as u64;
    let mut rng = rng::stream(cfg.seed, streams::SYNTH_IMAGE + global);
    let camera = (index % 2) as u32;

    let dy = rng.random_range(-0.04..0.04);
    let dx = rng.random_range(-0.08..0.08);
    let gain = rng.random_range(0.85..1.15);
    let background = if camera == 0 { [118.0, 124.0, 112.0] } else { [130.0, 124.0, 118.0] };
    let waves: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(0.5..3.0),
                rng.random_range(0.5..3.0),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(5.0..15.0),
            )
        })
        .collect();
    let noise = Normal::new(0.0, 6.0).expect("valid deviation");

    let mut planes = vec![vec![0.0; h * w]; 3];
    for y in 0..h {
        for x in 0..w {
            let ny = (y as f64 + 0.5) / h as f64 - dy;
            let nx = (x as f64 + 0.5) / w as f64 - dx;
            let off = nx - 0.5;
            let (py, px) = (ny * h as f64, nx * w as f64);
            let head = ((ny - 0.14) / 0.075).powi(2) + (off / 0.16).powi(2) <= 1.0;
            let rgb = if head {
                if ny < 0.1 {
                    app.hair
                } else {
                    [app.skin, app.skin * 0.85, app.skin * 0.7]
                }
            } else if (0.22..app.waist).contains(&ny) && off.abs() < app.half_width {
                pick(app.upper_pattern, py, px, app.period, app.upper, app.upper_alt)
            } else if (app.waist..0.97).contains(&ny)
                && off.abs() < app.half_width * 0.85
                && !(ny > app.waist + 0.08 && off.abs() < 0.045)
            {
                pick(app.lower_pattern, py, px, app.period + 1.0, app.lower, app.lower_alt)
            } else if let Some(bag) = app.bag.and_then(|(side, top, c)| {
                let edge = side * off;
                ((top..top + 0.2).contains(&ny)
                    && edge > app.half_width - 0.04
                    && edge < app.half_width + 0.16)
                    .then_some(c)
            }) {
                bag
            } else {
                let shade: f64 = waves
                    .iter()
                    .map(|&(fy, fx, phase, amp)| amp * (fy * ny * 6.0 + fx * nx * 6.0 + phase).sin())
                    .sum();
                background.map(|b| b + shade)
            };
            for c in 0..3 {
                planes[c][y * w + x] = rgb[c] * gain + noise.sample(&mut rng);
            }
        }
    }
    let mut image = Image::from_planes(h, w, &planes).expect("planes sized by construction");
    let blur_sigma = blurred.then(|| rng.random_range(1.0..2.5));
    if let Some(sigma) = blur_sigma {
        image = gaussian_blur(&image, sigma);
    }
    SynthSample { identity, camera, index, image, blur_sigma }
}

/// Renders image `index` of `identity` without touching the disk.
pub fn render_identity_image(cfg: &SynthConfig, identity: u32, index: usize) -> SynthSample {
    let blurred = blurred_indices(cfg, identity)[index];
    render(cfg, &appearance(cfg.seed, identity), identity, index, blurred)
}

pub fn synth_samples(cfg: &SynthConfig) -> Result<Vec<SynthSample>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.identities * cfg.images_per_identity);
    for identity in 0..cfg.identities as u32 {
        let app = appearance(cfg.seed, identity);
        let flags = blurred_indices(cfg, identity);
        for (index, &blurred) in flags.iter().enumerate() {
            out.push(render(cfg, &app, identity, index, blurred));
        }
    }
    Ok(out)
}

/// Writes `out_dir/images/idIIII_KKK.ppm` for every sample and returns the
/// manifest rooted at `out_dir` (not yet written to disk).
pub fn synth_corpus(cfg: &SynthConfig, out_dir: &Path) -> Result<SynthCorpus> {
    let samples = synth_samples(cfg)?;
    let image_dir = out_dir.join("images");
    std::fs::create_dir_all(&image_dir).map_err(|e| Error::io(&image_dir, e))?;
    let mut manifest = Manifest::new(out_dir);
    let mut blurred = Vec::with_capacity(samples.len());
    for s in &samples {
        let rel = Path::new("images").join(s.file_name());
        save_image(&s.image, out_dir.join(&rel))?;
        manifest.records.push(SampleRecord::original(rel, s.identity, s.camera));
        blurred.push(s.blurred());
    }
    Ok(SynthCorpus { manifest, blurred })
}
