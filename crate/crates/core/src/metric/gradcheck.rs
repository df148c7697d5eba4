//! Central-difference gradient verification.

use rand::Rng;

use super::{ccl, inter_loss, intra_loss, softmax_ce, trihard, CenterBank, EmbeddingBatch, LossWeights};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rng::{self, StreamRng};

pub const FD_STEP: f64 = 1e-5;
pub const MAX_FD_COORDS: usize = 200;

/// Largest `|analytic - numeric| / max(1, |numeric|)` over at most
/// [`MAX_FD_COORDS`] evenly spaced coordinates.
///
/// `loss` returns the value and the full analytic gradient at a point.
pub fn finite_diff_check<F>(mut loss: F, params: &[f64]) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let (value, analytic) = loss(params)?;
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("loss value {value} at the base point")));
    }
    if analytic.len() != params.len() {
        return Err(Error::Shape(format!(
            "{} gradient entries for {} parameters",
            analytic.len(),
            params.len()
        )));
    }
    let n = params.len();
    let coords: Vec<usize> = if n <= MAX_FD_COORDS {
        (0..n).collect()
    } else {
        (0..MAX_FD_COORDS).map(|i| i * n / MAX_FD_COORDS).collect()
    };
    let mut point = params.to_vec();
    let mut worst = 0.0f64;
    for i in coords {
        let orig = point[i];
        point[i] = orig + FD_STEP;
        let (plus, _) = loss(&point)?;
        point[i] = orig - FD_STEP;
        let (minus, _) = loss(&point)?;
        point[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!("loss at perturbed coordinate {i}")));
        }
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        worst = worst.max((analytic[i] - numeric).abs() / numeric.abs().max(1.0));
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub entries: Vec<(String, f64)>,
}

impl GradCheckReport {
    pub fn max_error(&self) -> f64 {
        self.entries.iter().map(|(_, e)| *e).fold(0.0, f64::max)
    }

    pub fn all_below(&self, tol: f64) -> bool {
        self.entries.iter().all(|(_, e)| *e < tol)
    }
}

fn uniform(rng: &mut StreamRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// A batch where every anchor's hardest positive and negative win by a clear
/// margin, so small perturbations cannot flip the selection.
fn untied_triplet_point(rng: &mut StreamRng, n: usize, d: usize, labels: &[usize]) -> Vec<f64> {
    loop {
        let p = uniform(rng, n * d);
        let f = Grid::from_vec(n, d, p.clone()).expect("sized");
        let dist = |i: usize, j: usize| 1.0 - super::cosine(f.row(i), f.row(j));
        let separated = (0..n).all(|a| {
            let mut pos: Vec<f64> =
                (0..n).filter(|&j| j != a && labels[j] == labels[a]).map(|j| dist(a, j)).collect();
            let mut neg: Vec<f64> = (0..n).filter(|&j| labels[j] != labels[a]).map(|j| dist(a, j)).collect();
            pos.sort_by(|x, y| y.total_cmp(x));
            neg.sort_by(f64::total_cmp);
            let gap = |v: &[f64]| v.len() < 2 || (v[0] - v[1]).abs() > 1e-3;
            gap(&pos) && gap(&neg)
        });
        if separated {
            return p;
        }
    }
}

/// Checks every loss at a seeded generic point, plus the full network
/// objective of a tiny model.
pub fn standard_checks(seed: u64) -> Result<GradCheckReport> {
    let mut rng = rng::stream(seed, 0);
    let (n, k, d) = (8, 4, 6);
    let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    let weights = LossWeights { alpha: 0.5, beta: 0.5, margin: 2.0, ..LossWeights::default() };
    let feats = uniform(&mut rng, n * d);
    let centers = uniform(&mut rng, k * d);
    let joint: Vec<f64> = feats.iter().chain(&centers).copied().collect();
    let split = |p: &[f64]| -> Result<(EmbeddingBatch, CenterBank)> {
        Ok((
            EmbeddingBatch::new(Grid::from_vec(n, d, p[..n * d].to_vec())?, labels.clone())?,
            CenterBank::new(Grid::from_vec(k, d, p[n * d..].to_vec())?),
        ))
    };
    let mut entries = Vec::new();

    let err = finite_diff_check(
        |p| {
            let (b, c) = split(p)?;
            let out = intra_loss(&b, &c)?;
            Ok((out.value, [out.grad_features.into_vec(), out.grad_centers.into_vec()].concat()))
        },
        &joint,
    )?;
    entries.push(("intra_loss".to_string(), err));

    let err = finite_diff_check(
        |p| {
            let c = CenterBank::new(Grid::from_vec(k, d, p.to_vec())?);
            let out = inter_loss(&labels, &c)?;
            Ok((out.value, out.grad_centers.into_vec()))
        },
        &centers,
    )?;
    entries.push(("inter_loss".to_string(), err));

    let err = finite_diff_check(
        |p| {
            let (b, c) = split(p)?;
            let out = ccl(&b, &c, &weights)?;
            Ok((out.value, [out.grad_features.into_vec(), out.grad_centers.into_vec()].concat()))
        },
        &joint,
    )?;
    entries.push(("ccl".to_string(), err));

    let logits: Vec<f64> = uniform(&mut rng, n * k).into_iter().map(|v| 3.0 * v).collect();
    let err = finite_diff_check(
        |p| {
            let out = softmax_ce(&Grid::from_vec(n, k, p.to_vec())?, &labels)?;
            Ok((out.value, out.grad_logits.into_vec()))
        },
        &logits,
    )?;
    entries.push(("softmax_ce".to_string(), err));

    let point = untied_triplet_point(&mut rng, n, d, &labels);
    let err = finite_diff_check(
        |p| {
            let b = EmbeddingBatch::new(Grid::from_vec(n, d, p.to_vec())?, labels.clone())?;
            let out = trihard(&b, &weights)?;
            Ok((out.value, out.grad_features.into_vec()))
        },
        &point,
    )?;
    entries.push(("trihard".to_string(), err));

    entries.push(("network_objective".to_string(), crate::trainer::network_gradcheck(seed)?));
    Ok(GradCheckReport { entries })
}
