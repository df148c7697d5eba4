//! Antithetical counterparts: sharp originals get a randomly down-up resampled
//! copy, blurry originals get an enhanced copy.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use super::manifest::{Manifest, Origin, SampleRecord};
use crate::error::{Error, Result};
use crate::imaging::{load_image, resize, save_image, unsharp_mask, Image, ResampleFilter};
use crate::iqa::{sharpness, PartitionLabel};
use crate::parallel::ordered_map;
use crate::rng::{self, streams};

pub const UNSHARP_SIGMA: f64 = 1.0;
pub const UNSHARP_AMOUNT: f64 = 1.5;

/// How low-resolution originals are enhanced.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum Enhancer {
    /// In-process unsharp masking.
    #[default]
    Classical,
    /// External program invoked as `program <input> <output>`.
    External(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AugmentConfig {
    pub factor_low: f64,
    pub factor_high: f64,
    pub enhancer: Enhancer,
    pub seed: u64,
    pub threads: usize,
}

impl AugmentConfig {
    pub fn new(seed: u64) -> Self {
        Self { factor_low: 0.5, factor_high: 0.8, enhancer: Enhancer::Classical, seed, threads: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.factor_low && self.factor_low <= self.factor_high && self.factor_high < 1.0) {
            return Err(Error::InvalidInput(format!(
                "downsampling factors must satisfy 0 < low <= high < 1, got [{}, {}]",
                self.factor_low, self.factor_high
            )));
        }
        Ok(())
    }
}

/// `u ~ U(factor_low, factor_high)`.
pub fn draw_downsample_factor<R: Rng + ?Sized>(rng: &mut R, cfg: &AugmentConfig) -> f64 {
    cfg.factor_low + (cfg.factor_high - cfg.factor_low) * rng.random::<f64>()
}

/// Bilinear resize to `round(u * size)` and back to the original size.
pub fn downsample_counterpart<R: Rng + ?Sized>(img: &Image, rng: &mut R, cfg: &AugmentConfig) -> Image {
    let u = draw_downsample_factor(rng, cfg);
    let scaled = |n: usize| ((n as f64 * u + 0.5).floor() as usize).max(1);
    let small = resize(img, scaled(img.height()), scaled(img.width()), ResampleFilter::Bilinear);
    resize(&small, img.height(), img.width(), ResampleFilter::Bilinear)
}

pub fn enhance_classical(img: &Image) -> Image {
    unsharp_mask(img, UNSHARP_SIGMA, UNSHARP_AMOUNT)
}

static EXTERNAL_CALLS: AtomicU64 = AtomicU64::new(0);

/// Runs `program <img_path> <tmp_out>` and loads the result, which must have
/// the same dimensions as the input.
pub fn enhance_external(img_path: &Path, program: &Path) -> Result<Image> {
    let input = load_image(img_path)?;
    let ext = img_path.extension().and_then(|e| e.to_str()).unwrap_or("pnm");
    let out = std::env::temp_dir().join(format!(
        "antithetic-enhance-{}-{}.{ext}",
        std::process::id(),
        EXTERNAL_CALLS.fetch_add(1, Ordering::Relaxed)
    ));
    let status = Command::new(program)
        .arg(img_path)
        .arg(&out)
        .status()
        .map_err(|e| Error::Enhancer(format!("cannot run {}: {e}", program.display())));
    let result = status.and_then(|status| {
        if !status.success() {
            return Err(Error::Enhancer(format!(
                "{} exited with {status} on {}",
                program.display(),
                img_path.display()
            )));
        }
        let enhanced = load_image(&out)?;
        if (enhanced.height(), enhanced.width()) != (input.height(), input.width()) {
            return Err(Error::Enhancer(format!(
                "{} returned {}x{} for a {}x{} input",
                program.display(),
                enhanced.height(),
                enhanced.width(),
                input.height(),
                input.width()
            )));
        }
        Ok(enhanced)
    });
    let _ = std::fs::remove_file(&out);
    result
}

/// Emits one antithetical image per original into `out_dir/images` and
/// returns the scored antithetical manifest rooted at `out_dir`.
///
/// Record `i` draws from its own random stream, so the output does not depend
/// on the thread count.
pub fn generate_antithetical(manifest: &Manifest, cfg: &AugmentConfig, out_dir: &Path) -> Result<Manifest> {
    cfg.validate()?;
    if let Some(rec) = manifest.records.iter().find(|r| r.partition.is_none()) {
        return Err(Error::InvalidInput(format!("record {} has no HR/LR partition", rec.path.display())));
    }
    let image_dir = out_dir.join("images");
    std::fs::create_dir_all(&image_dir).map_err(|e| Error::io(&image_dir, e))?;

    let results = ordered_map(&manifest.records, cfg.threads, |i, rec| -> Result<SampleRecord> {
        let src = manifest.resolve(&rec.path);
        let label = rec.partition.expect("checked above");
        let img = match (label, &cfg.enhancer) {
            (PartitionLabel::Hr, _) => {
                let mut rng = rng::stream(cfg.seed, streams::ANTITHETICAL + i as u64);
                downsample_counterpart(&load_image(&src)?, &mut rng, cfg)
            }
            (PartitionLabel::Lr, Enhancer::Classical) => enhance_classical(&load_image(&src)?),
            (PartitionLabel::Lr, Enhancer::External(program)) => enhance_external(&src, program)?,
        };
        let stem = rec.path.file_stem().and_then(|s| s.to_str()).unwrap_or("img");
        let ext = if img.channels() == 1 { "pgm" } else { "ppm" };
        let rel = PathBuf::from("images").join(format!("{i:06}_{stem}.{ext}"));
        save_image(&img, out_dir.join(&rel))?;
        Ok(SampleRecord {
            path: rel,
            identity: rec.identity,
            camera: rec.camera,
            partition: Some(label.opposite()),
            sharpness: Some(sharpness(&img)?.value()),
            origin: Origin::Antithetical,
            counterpart: Some(manifest.rebase(&rec.path, out_dir)),
        })
    });
    let mut out = Manifest::new(out_dir);
    out.records = results.into_iter().collect::<Result<_>>()?;
    Ok(out)
}
