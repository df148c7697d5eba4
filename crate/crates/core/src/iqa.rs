//! Frequency-domain sharpness and the mean-threshold resolution split.
//!
//! The score of an `h x w` image is the fraction of DFT magnitudes that reach
//! one thousandth of the largest magnitude. Blur attenuates high frequencies
//! while leaving the DC term alone, so blurry images score lower.

use serde::{Deserialize, Serialize};

use crate::dataset::Manifest;
use crate::error::{Error, Result};
use crate::imaging::{dft2d_magnitude_plane, load_image, to_grayscale, Image, MagnitudeGrid};
use crate::parallel::ordered_map;

/// Denominator of the relative magnitude threshold.
pub const THRESHOLD_DIVISOR: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct SharpnessScore(f64);

impl SharpnessScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PartitionLabel {
    #[serde(rename = "HR")]
    Hr,
    #[serde(rename = "LR")]
    Lr,
}

impl PartitionLabel {
    pub fn opposite(self) -> Self {
        match self {
            PartitionLabel::Hr => PartitionLabel::Lr,
            PartitionLabel::Lr => PartitionLabel::Hr,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PartitionLabel::Hr => "HR",
            PartitionLabel::Lr => "LR",
        }
    }

    /// 0 for HR, 1 for LR.
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Scores an image; RGB input is converted to luma first.
pub fn sharpness(img: &Image) -> Result<SharpnessScore> {
    let gray = to_grayscale(img);
    sharpness_of_plane(&gray.plane(0), gray.height(), gray.width())
}

/// Scores a real-valued plane without 8-bit quantization.
pub fn sharpness_of_plane(plane: &[f64], h: usize, w: usize) -> Result<SharpnessScore> {
    if h == 0 || w == 0 {
        return Err(Error::InvalidInput("cannot score an empty image".into()));
    }
    sharpness_of_magnitudes(&dft2d_magnitude_plane(plane, h, w))
}

/// Counting is order-free, so centered and uncentered spectra give the same
/// score.
pub fn sharpness_of_magnitudes(grid: &MagnitudeGrid) -> Result<SharpnessScore> {
    let tau = grid.max();
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::InvalidInput("sharpness is undefined for an all-black image".into()));
    }
    let cutoff = tau / THRESHOLD_DIVISOR;
    let count = grid.values.iter().filter(|&&m| m >= cutoff).count();
    Ok(SharpnessScore(count as f64 / grid.values.len() as f64))
}

/// Loads and scores every record, preserving order. Errors name the first
/// offending path.
pub fn score_manifest(manifest: &Manifest, threads: usize) -> Result<Manifest> {
    let scores = ordered_map(&manifest.records, threads, |_, rec| {
        let path = manifest.resolve(&rec.path);
        let img = load_image(&path)?;
        sharpness(&img).map_err(|e| Error::Decode { path, reason: e.to_string() })
    });
    let mut out = manifest.clone();
    for (rec, score) in out.records.iter_mut().zip(scores) {
        rec.sharpness = Some(score?.value());
    }
    Ok(out)
}

/// Mean score.
pub fn split_threshold(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::InvalidInput("no scores to average".into()));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Strictly above the threshold is HR; ties and below are LR.
pub fn label_for(score: f64, threshold: f64) -> PartitionLabel {
    if score > threshold {
        PartitionLabel::Hr
    } else {
        PartitionLabel::Lr
    }
}

pub fn partition(manifest: &Manifest, threshold: f64) -> Result<Manifest> {
    let mut out = manifest.clone();
    for rec in &mut out.records {
        let score = rec.sharpness.ok_or_else(|| {
            Error::InvalidInput(format!("record {} has no sharpness score", rec.path.display()))
        })?;
        rec.partition = Some(label_for(score, threshold));
    }
    Ok(out)
}
