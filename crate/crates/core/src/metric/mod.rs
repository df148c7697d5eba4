//! Cosine-based metric-learning losses with analytic gradients.
//!
//! Every loss returns a [`LossOutput`] holding its value and gradients with
//! respect to whichever inputs it reads: logits, embedding features, identity
//! centers. Unused gradient slots are empty grids.

mod center;
mod gradcheck;
mod softmax;
mod triplet;

pub use center::{ccl, inter_loss, inter_loss_with, intra_loss};
pub use gradcheck::{finite_diff_check, standard_checks, GradCheckReport, FD_STEP, MAX_FD_COORDS};
pub use softmax::softmax_ce;
pub use triplet::trihard;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Guard against division by a vanishing norm.
pub const NORM_EPS: f64 = 1e-12;
/// Centers are pushed back to at least this norm after each update.
pub const CENTER_NORM_FLOOR: f64 = 1e-8;

/// Feature vectors and their identity labels.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingBatch {
    pub features: Grid,
    pub labels: Vec<usize>,
}

impl EmbeddingBatch {
    pub fn new(features: Grid, labels: Vec<usize>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows for {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if features.rows() == 0 {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// One trainable center per identity.
#[derive(Clone, Debug, PartialEq)]
pub struct CenterBank {
    pub centers: Grid,
}

impl CenterBank {
    pub fn new(centers: Grid) -> Self {
        Self { centers }
    }

    pub fn len(&self) -> usize {
        self.centers.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.centers.cols()
    }

    /// Rescales any center shorter than `floor` up to that norm; a zero
    /// center becomes `floor` along the first axis.
    pub fn enforce_norm_floor(&mut self, floor: f64) {
        for k in 0..self.centers.rows() {
            let row = self.centers.row_mut(k);
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm >= floor {
                continue;
            }
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v *= floor / norm);
            } else if let Some(first) = row.first_mut() {
                *first = floor;
            }
        }
    }

    fn check_labels(&self, labels: &[usize]) -> Result<()> {
        match labels.iter().find(|&&y| y >= self.len()) {
            Some(y) => Err(Error::InvalidInput(format!("label {y} out of range for {} centers", self.len()))),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InterNormalization {
    /// Mean over ordered cross-identity pairs.
    #[default]
    PairMean,
    /// `1/N` times the full `N x N` double sum, same-identity pairs included.
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    /// Hinge margin of the batch-hard triplet loss.
    pub margin: f64,
    pub inter_normalization: InterNormalization,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { alpha: 0.1, beta: 0.1, margin: 0.3, inter_normalization: InterNormalization::PairMean }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 || self.beta < 0.0 || self.margin < 0.0 {
            return Err(Error::InvalidInput(format!(
                "loss weights must be non-negative (alpha {}, beta {}, margin {})",
                self.alpha, self.beta, self.margin
            )));
        }
        Ok(())
    }
}

/// Anchor, hardest positive and hardest negative, as batch indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Triplet {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossOutput {
    pub value: f64,
    pub grad_logits: Grid,
    pub grad_features: Grid,
    pub grad_centers: Grid,
    pub selected_triplets: Option<Vec<Triplet>>,
}

impl LossOutput {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            grad_logits: Grid::empty(),
            grad_features: Grid::empty(),
            grad_centers: Grid::empty(),
            selected_triplets: None,
        }
    }

    /// `self + k * other`, value and every gradient slot.
    pub fn add_scaled(mut self, other: &LossOutput, k: f64) -> Result<Self> {
        self.value += k * other.value;
        self.grad_logits.add_scaled(&other.grad_logits, k)?;
        self.grad_features.add_scaled(&other.grad_features, k)?;
        self.grad_centers.add_scaled(&other.grad_centers, k)?;
        if self.selected_triplets.is_none() {
            self.selected_triplets = other.selected_triplets.clone();
        }
        Ok(self)
    }
}

/// Sum of the classification loss and a metric loss whose weights are
/// already applied.
pub fn total_loss(ce: &LossOutput, metric: &LossOutput) -> Result<LossOutput> {
    ce.clone().add_scaled(metric, 1.0)
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `a.b / (max(|a|, eps) max(|b|, eps))`, clamped to `[-1, 1]`.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    // one square root of the product makes cosine(a, a) exactly 1
    let floor = NORM_EPS * NORM_EPS;
    let denom = (dot(a, a).max(floor) * dot(b, b).max(floor)).sqrt();
    (dot(a, b) / denom).clamp(-1.0, 1.0)
}

/// Cosine together with its gradients with respect to `a` and `b`.
pub(crate) fn cosine_with_grad(a: &[f64], b: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let (na_raw, nb_raw) = (norm(a), norm(b));
    let (na, nb) = (na_raw.max(NORM_EPS), nb_raw.max(NORM_EPS));
    let c = dot(a, b) / (na * nb);
    let inv = 1.0 / (na * nb);
    // when a norm sits on the guard it is a constant, so its term drops out
    let ka = if na_raw >= NORM_EPS { c / (na * na) } else { 0.0 };
    let kb = if nb_raw >= NORM_EPS { c / (nb * nb) } else { 0.0 };
    let ga = a.iter().zip(b).map(|(x, y)| y * inv - ka * x).collect();
    let gb = a.iter().zip(b).map(|(x, y)| x * inv - kb * y).collect();
    (c.clamp(-1.0, 1.0), ga, gb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert!((cosine(&[1.0, 1.0], &[1.0, 0.0]) - 0.7071067811865475).abs() < 1e-15);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
        assert!(cosine(&[3.0, 4.0], &[3.0, 4.0]) <= 1.0);
    }

    #[test]
    fn cosine_gradient_matches_differences() {
        let a = [0.3, -1.2, 0.7];
        let b = [1.1, 0.4, -0.5];
        let (_, ga, gb) = cosine_with_grad(&a, &b);
        let h = 1e-6;
        for i in 0..3 {
            let (mut ap, mut am) = (a, a);
            ap[i] += h;
            am[i] -= h;
            let num = (cosine(&ap, &b) - cosine(&am, &b)) / (2.0 * h);
            assert!((num - ga[i]).abs() < 1e-8);
            let (mut bp, mut bm) = (b, b);
            bp[i] += h;
            bm[i] -= h;
            let num = (cosine(&a, &bp) - cosine(&a, &bm)) / (2.0 * h);
            assert!((num - gb[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn total_loss_adds_values_and_gradients() {
        let ce = LossOutput {
            value: 1.0,
            grad_logits: Grid::from_rows(&[vec![0.5, -0.5]]).unwrap(),
            ..LossOutput::zero()
        };
        let metric = LossOutput {
            value: 0.08,
            grad_features: Grid::from_rows(&[vec![0.1, 0.2, 0.3]]).unwrap(),
            grad_centers: Grid::from_rows(&[vec![1.0, 1.0, 1.0]]).unwrap(),
            ..LossOutput::zero()
        };
        let total = total_loss(&ce, &metric).unwrap();
        assert_eq!(total.value, 1.08);
        assert_eq!(total.grad_logits, ce.grad_logits);
        assert_eq!(total.grad_features, metric.grad_features);

        assert_eq!(total_loss(&ce, &LossOutput::zero()).unwrap(), ce);

        let clash = LossOutput { grad_logits: Grid::zeros(2, 2), ..LossOutput::zero() };
        assert!(total_loss(&ce, &clash).is_err());
    }

    #[test]
    fn norm_floor() {
        let mut bank =
            CenterBank::new(Grid::from_rows(&[vec![0.0, 0.0], vec![1e-10, 0.0], vec![3.0, 4.0]]).unwrap());
        bank.enforce_norm_floor(CENTER_NORM_FLOOR);
        assert_eq!(bank.centers.row(0), &[CENTER_NORM_FLOOR, 0.0]);
        assert!((bank.centers.get(1, 0) - CENTER_NORM_FLOOR).abs() < 1e-20);
        assert_eq!(bank.centers.row(2), &[3.0, 4.0]);
    }
}
