use super::LossOutput;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Mean softmax cross-entropy over rows of `logits`, with gradient
/// `(p - onehot) / N` in `grad_logits`.
pub fn softmax_ce(logits: &Grid, truth: &[usize]) -> Result<LossOutput> {
    let (n, k) = logits.shape();
    if k < 2 {
        return Err(Error::InvalidInput(format!("softmax needs at least 2 classes, got {k}")));
    }
    if n != truth.len() || n == 0 {
        return Err(Error::Shape(format!("{n} logit rows for {} labels", truth.len())));
    }
    if let Some(g) = truth.iter().find(|&&g| g >= k) {
        return Err(Error::InvalidInput(format!("class {g} out of range for {k} logits")));
    }
    let mut value = 0.0;
    let mut grad = Grid::zeros(n, k);
    for (i, &g) in truth.iter().enumerate() {
        let row = logits.row(i);
        let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|z| (z - top).exp()).collect();
        let total: f64 = exps.iter().sum();
        value += total.ln() - (row[g] - top);
        for (j, (dst, e)) in grad.row_mut(i).iter_mut().zip(&exps).enumerate() {
            let onehot = if j == g { 1.0 } else { 0.0 };
            *dst = (e / total - onehot) / n as f64;
        }
    }
    Ok(LossOutput { value: value / n as f64, grad_logits: grad, ..LossOutput::zero() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::finite_diff_check;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn examples() {
        let confident = Grid::from_rows(&[vec![100.0, 0.0, 0.0]]).unwrap();
        assert!(softmax_ce(&confident, &[0]).unwrap().value < 1e-40);
        let flat = Grid::from_rows(&[vec![2.5; 4]]).unwrap();
        assert!((softmax_ce(&flat, &[3]).unwrap().value - 4f64.ln()).abs() < 1e-15);
        // logits ln p reproduce the probabilities exactly
        let p = [0.7f64, 0.1, 0.1, 0.1];
        let logits = Grid::from_rows(&[p.iter().map(|v| v.ln()).collect()]).unwrap();
        let v = softmax_ce(&logits, &[0]).unwrap().value;
        assert!((v - 0.3566749439387324).abs() < 1e-12);
        assert!((v + 0.7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let one_class = Grid::from_rows(&[vec![1.0]]).unwrap();
        assert!(softmax_ce(&one_class, &[0]).is_err());
        let two = Grid::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(softmax_ce(&two, &[2]).is_err());
        assert!(softmax_ce(&two, &[0, 1]).is_err());
    }

    #[test]
    fn huge_logits_stay_finite() {
        let big = Grid::from_rows(&[vec![1e308, -1e308, 0.0]]).unwrap();
        let out = softmax_ce(&big, &[1]).unwrap();
        assert!(out.value.is_finite() || out.value == f64::INFINITY);
        assert!(out.grad_logits.as_slice().iter().all(|g| g.is_finite()));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = stream(3, 0);
        let (n, k) = (5, 4);
        let params: Vec<f64> = (0..n * k).map(|_| rng.random_range(-3.0..3.0)).collect();
        let truth = [0, 3, 1, 1, 2];
        let err = finite_diff_check(
            |p| {
                let out = softmax_ce(&Grid::from_vec(n, k, p.to_vec())?, &truth)?;
                Ok((out.value, out.grad_logits.into_vec()))
            },
            &params,
        )
        .unwrap();
        assert!(err < 1e-6, "{err}");
    }

    proptest! {
        #[test]
        fn gradient_rows_sum_to_zero(vals in proptest::collection::vec(-20.0f64..20.0, 12), g in 0usize..4) {
            let logits = Grid::from_vec(3, 4, vals).unwrap();
            let out = softmax_ce(&logits, &[g, 0, 3]).unwrap();
            for r in 0..3 {
                prop_assert!(out.grad_logits.row(r).iter().sum::<f64>().abs() <= 1e-12);
            }
        }
    }
}
