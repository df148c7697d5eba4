//! Attraction of features to their identity centers and absolute-cosine
//! repulsion between centers.

use super::{cosine_with_grad, CenterBank, EmbeddingBatch, InterNormalization, LossOutput, LossWeights};
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Mean of `1 - cos(f_i, C_{y_i})`.
pub fn intra_loss(batch: &EmbeddingBatch, bank: &CenterBank) -> Result<LossOutput> {
    bank.check_labels(&batch.labels)?;
    let d = batch.features.cols();
    if d != bank.dim() {
        return Err(Error::Shape(format!("features have dimension {d}, centers {}", bank.dim())));
    }
    let n = batch.len() as f64;
    let mut value = 0.0;
    let mut grad_features = Grid::zeros(batch.len(), d);
    let mut grad_centers = Grid::zeros(bank.len(), d);
    for (i, &y) in batch.labels.iter().enumerate() {
        let (c, gf, gc) = cosine_with_grad(batch.features.row(i), bank.centers.row(y));
        value += 1.0 - c;
        for (g, v) in grad_features.row_mut(i).iter_mut().zip(&gf) {
            *g = -v / n;
        }
        for (g, v) in grad_centers.row_mut(y).iter_mut().zip(&gc) {
            *g -= v / n;
        }
    }
    Ok(LossOutput { value: value / n, grad_features, grad_centers, ..LossOutput::zero() })
}

pub fn inter_loss(labels: &[usize], bank: &CenterBank) -> Result<LossOutput> {
    inter_loss_with(labels, bank, InterNormalization::PairMean)
}

/// `|cos(C_{y_i}, C_{y_j})|` over batch pairs with different identities.
///
/// Pairs are aggregated per identity pair, weighted by how often each identity
/// occurs in the batch, so the work is quadratic in distinct identities.
pub fn inter_loss_with(labels: &[usize], bank: &CenterBank, norm: InterNormalization) -> Result<LossOutput> {
    if labels.is_empty() {
        return Err(Error::InvalidInput("inter loss needs at least one label".into()));
    }
    bank.check_labels(labels)?;
    let mut ids: Vec<usize> = labels.to_vec();
    ids.sort_unstable();
    let mut counts: Vec<(usize, f64)> = Vec::new();
    for y in ids {
        match counts.last_mut() {
            Some((last, m)) if *last == y => *m += 1.0,
            _ => counts.push((y, 1.0)),
        }
    }
    let n = labels.len() as f64;
    let same_pairs: f64 = counts.iter().map(|(_, m)| m * m).sum();
    let cross_pairs = n * n - same_pairs;
    let mut grad_centers = Grid::zeros(bank.len(), bank.dim());
    let scale = match norm {
        InterNormalization::PairMean if cross_pairs == 0.0 => {
            return Ok(LossOutput { grad_centers, ..LossOutput::zero() })
        }
        InterNormalization::PairMean => 1.0 / cross_pairs,
        InterNormalization::Literal => 1.0 / n,
    };

    let mut value = 0.0;
    if norm == InterNormalization::Literal {
        // |cos(C, C)| is 1 for any non-degenerate center and has zero gradient
        for &(y, m) in &counts {
            let (c, _, _) = cosine_with_grad(bank.centers.row(y), bank.centers.row(y));
            value += m * m * c.abs();
        }
    }
    for (i, &(a, ma)) in counts.iter().enumerate() {
        for &(b, mb) in &counts[i + 1..] {
            let (c, ga, gb) = cosine_with_grad(bank.centers.row(a), bank.centers.row(b));
            let weight = 2.0 * ma * mb;
            value += weight * c.abs();
            let sign = if c > 0.0 {
                1.0
            } else if c < 0.0 {
                -1.0
            } else {
                0.0
            };
            let k = weight * sign * scale;
            for (g, v) in grad_centers.row_mut(a).iter_mut().zip(&ga) {
                *g += k * v;
            }
            for (g, v) in grad_centers.row_mut(b).iter_mut().zip(&gb) {
                *g += k * v;
            }
        }
    }
    Ok(LossOutput { value: value * scale, grad_centers, ..LossOutput::zero() })
}

/// Contrastive center loss, `alpha * intra + beta * inter`.
pub fn ccl(batch: &EmbeddingBatch, bank: &CenterBank, w: &LossWeights) -> Result<LossOutput> {
    w.validate()?;
    let intra = intra_loss(batch, bank)?;
    let inter = inter_loss_with(&batch.labels, bank, w.inter_normalization)?;
    let zero = LossOutput {
        grad_features: Grid::zeros(batch.len(), bank.dim()),
        grad_centers: Grid::zeros(bank.len(), bank.dim()),
        ..LossOutput::zero()
    };
    zero.add_scaled(&intra, w.alpha)?.add_scaled(&inter, w.beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::finite_diff_check;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    fn bank(rows: &[Vec<f64>]) -> CenterBank {
        CenterBank::new(Grid::from_rows(rows).unwrap())
    }

    fn batch(rows: &[Vec<f64>], labels: &[usize]) -> EmbeddingBatch {
        EmbeddingBatch::new(Grid::from_rows(rows).unwrap(), labels.to_vec()).unwrap()
    }

    fn random_grid(rng: &mut crate::rng::StreamRng, r: usize, c: usize) -> Grid {
        Grid::from_vec(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn intra_examples() {
        let b = bank(&[vec![2.0, 0.0], vec![0.0, 1.0]]);
        let parallel = batch(&[vec![5.0, 0.0], vec![0.0, 0.1]], &[0, 1]);
        assert!(intra_loss(&parallel, &b).unwrap().value.abs() < 1e-15);
        let ortho = batch(&[vec![1.0, 0.0]], &[1]);
        assert_eq!(intra_loss(&ortho, &b).unwrap().value, 1.0);
        let diag = batch(&[vec![1.0, 1.0]], &[0]);
        let v = intra_loss(&diag, &b).unwrap().value;
        assert!((v - (1.0 - 1.0 / 2f64.sqrt())).abs() < 1e-15);
        assert!((v - 0.2928932).abs() < 1e-7);
        // the untouched center gets no gradient
        assert!(intra_loss(&diag, &b).unwrap().grad_centers.row(1).iter().all(|&g| g == 0.0));
        assert!(intra_loss(&batch(&[vec![1.0, 1.0]], &[2]), &b).is_err());
    }

    #[test]
    fn inter_examples() {
        let ortho = bank(&[vec![1.0, 0.0], vec![0.0, 3.0]]);
        assert_eq!(inter_loss(&[0, 1], &ortho).unwrap().value, 0.0);
        let opposite = bank(&[vec![1.0, 0.0], vec![-2.0, 0.0]]);
        assert_eq!(inter_loss(&[0, 1], &opposite).unwrap().value, 1.0);
        let diag = bank(&[vec![1.0, 0.0], vec![1.0, 1.0]]);
        let v = inter_loss(&[0, 1], &diag).unwrap().value;
        assert!((v - 0.7071067811865475).abs() < 1e-15);
        // a single identity has no cross pairs
        let out = inter_loss(&[1, 1, 1], &diag).unwrap();
        assert_eq!(out.value, 0.0);
        assert_eq!(out.grad_centers.max_abs(), 0.0);
        assert!(inter_loss(&[], &diag).is_err());
        assert!(inter_loss(&[0, 5], &diag).is_err());
    }

    #[test]
    fn inter_literal_normalization() {
        // labels [0, 0, 1]: 5 same-identity ordered pairs (|cos| = 1),
        // 4 cross pairs with |cos| = 1/sqrt 2
        let diag = bank(&[vec![1.0, 0.0], vec![1.0, 1.0]]);
        let lit = inter_loss_with(&[0, 0, 1], &diag, InterNormalization::Literal).unwrap();
        let want = (5.0 + 4.0 / 2f64.sqrt()) / 3.0;
        assert!((lit.value - want).abs() < 1e-14);
        let mean = inter_loss(&[0, 0, 1], &diag).unwrap();
        assert!((mean.value - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        // gradients differ by the constant factor cross_pairs / N = 4 / 3
        let ratio = 4.0 / 3.0;
        for (a, b) in lit.grad_centers.as_slice().iter().zip(mean.grad_centers.as_slice()) {
            assert!((a - ratio * b).abs() < 1e-14);
        }
    }

    #[test]
    fn ccl_combination() {
        let mut rng = stream(1, 0);
        let b = CenterBank::new(random_grid(&mut rng, 3, 4));
        let x = EmbeddingBatch::new(random_grid(&mut rng, 6, 4), vec![0, 1, 2, 0, 1, 1]).unwrap();
        let intra = intra_loss(&x, &b).unwrap();
        let inter = inter_loss(&x.labels, &b).unwrap();

        let w = LossWeights::default();
        let out = ccl(&x, &b, &w).unwrap();
        assert!((out.value - (0.1 * intra.value + 0.1 * inter.value)).abs() < 1e-15);

        let off = LossWeights { alpha: 0.0, beta: 0.0, ..w };
        let out = ccl(&x, &b, &off).unwrap();
        assert_eq!(out.value, 0.0);
        assert_eq!(out.grad_features.max_abs() + out.grad_centers.max_abs(), 0.0);

        let only_intra = LossWeights { alpha: 1.0, beta: 0.0, ..w };
        let out = ccl(&x, &b, &only_intra).unwrap();
        assert_eq!(out.value, intra.value);
        assert_eq!(out.grad_features, intra.grad_features);

        assert!(ccl(&x, &b, &LossWeights { alpha: -1.0, ..w }).is_err());
    }

    #[test]
    fn ccl_example_arithmetic() {
        // alpha = beta = 0.1 with component values 0.3 and 0.5
        let w = LossWeights::default();
        let intra = LossOutput { value: 0.3, ..LossOutput::zero() };
        let inter = LossOutput { value: 0.5, ..LossOutput::zero() };
        let v =
            LossOutput::zero().add_scaled(&intra, w.alpha).unwrap().add_scaled(&inter, w.beta).unwrap().value;
        assert!((v - 0.08).abs() < 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = stream(2, 0);
        let (n, k, d) = (7, 3, 5);
        let features = random_grid(&mut rng, n, d);
        let centers = random_grid(&mut rng, k, d);
        let labels = vec![0, 1, 2, 0, 2, 2, 1];
        let w = LossWeights { alpha: 0.7, beta: 1.3, ..LossWeights::default() };
        let split = |p: &[f64]| {
            (
                EmbeddingBatch::new(Grid::from_vec(n, d, p[..n * d].to_vec()).unwrap(), labels.clone())
                    .unwrap(),
                CenterBank::new(Grid::from_vec(k, d, p[n * d..].to_vec()).unwrap()),
            )
        };
        let params: Vec<f64> = features.as_slice().iter().chain(centers.as_slice()).copied().collect();
        for norm in [InterNormalization::PairMean, InterNormalization::Literal] {
            let w = LossWeights { inter_normalization: norm, ..w };
            let err = finite_diff_check(
                |p| {
                    let (x, b) = split(p);
                    let out = ccl(&x, &b, &w)?;
                    Ok((out.value, [out.grad_features.into_vec(), out.grad_centers.into_vec()].concat()))
                },
                &params,
            )
            .unwrap();
            assert!(err < 1e-6, "{norm:?}: {err}");
        }
    }

    proptest! {
        #[test]
        fn cosine_losses_are_scale_free(seed in any::<u64>(), s in 0.01f64..100.0, row in 0usize..4) {
            let mut rng = stream(seed, 0);
            let b = CenterBank::new(random_grid(&mut rng, 3, 4));
            let x = EmbeddingBatch::new(random_grid(&mut rng, 4, 4), vec![0, 1, 2, 1]).unwrap();
            let mut xs = x.clone();
            xs.features.row_mut(row).iter_mut().for_each(|v| *v *= s);
            let mut bs = b.clone();
            bs.centers.row_mut(row % 3).iter_mut().for_each(|v| *v *= s);
            prop_assert!((intra_loss(&x, &b).unwrap().value - intra_loss(&xs, &bs).unwrap().value).abs() <= 1e-12);
            prop_assert!((inter_loss(&x.labels, &b).unwrap().value - inter_loss(&x.labels, &bs).unwrap().value).abs() <= 1e-12);
        }

        #[test]
        fn inter_is_order_free(seed in any::<u64>(), labels in proptest::collection::vec(0usize..4, 1..12)) {
            let mut rng = stream(seed, 0);
            let b = CenterBank::new(random_grid(&mut rng, 4, 3));
            let mut rev = labels.clone();
            rev.reverse();
            prop_assert_eq!(inter_loss(&labels, &b).unwrap().value, inter_loss(&rev, &b).unwrap().value);
        }

        #[test]
        fn ccl_is_linear_in_weights(seed in any::<u64>(), a1 in 0.0f64..2.0, b1 in 0.0f64..2.0, a2 in 0.0f64..2.0, b2 in 0.0f64..2.0) {
            let mut rng = stream(seed, 0);
            let b = CenterBank::new(random_grid(&mut rng, 3, 3));
            let x = EmbeddingBatch::new(random_grid(&mut rng, 5, 3), vec![0, 1, 2, 0, 1]).unwrap();
            let v = |a: f64, bb: f64| ccl(&x, &b, &LossWeights { alpha: a, beta: bb, ..LossWeights::default() }).unwrap().value;
            prop_assert!((v(a1 + a2, b1 + b2) - v(a1, b1) - v(a2, b2)).abs() <= 1e-12);
        }
    }
}
