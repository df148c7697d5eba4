//! Batch-hard triplet loss: per anchor, the farthest positive and the nearest
//! negative under `1 - cos`.

use super::{cosine_with_grad, EmbeddingBatch, LossOutput, LossWeights, Triplet};
use crate::error::{Error, Result};
use crate::grid::Grid;

pub fn trihard(batch: &EmbeddingBatch, w: &LossWeights) -> Result<LossOutput> {
    w.validate()?;
    let n = batch.len();
    let f = &batch.features;
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let (c, _, _) = cosine_with_grad(f.row(i), f.row(j));
            dist[i * n + j] = 1.0 - c;
            dist[j * n + i] = 1.0 - c;
        }
    }

    let mut triplets = Vec::new();
    for a in 0..n {
        let mut hardest_pos: Option<usize> = None;
        let mut hardest_neg: Option<usize> = None;
        for j in 0..n {
            if j == a {
                continue;
            }
            let d = dist[a * n + j];
            if batch.labels[j] == batch.labels[a] {
                // strict comparisons keep the lowest index on ties
                if hardest_pos.is_none_or(|p| d > dist[a * n + p]) {
                    hardest_pos = Some(j);
                }
            } else if hardest_neg.is_none_or(|q| d < dist[a * n + q]) {
                hardest_neg = Some(j);
            }
        }
        if let (Some(positive), Some(negative)) = (hardest_pos, hardest_neg) {
            triplets.push(Triplet { anchor: a, positive, negative });
        }
    }
    if triplets.is_empty() {
        return Err(Error::InvalidInput(
            "batch-hard triplet loss needs an anchor with both a positive and a negative".into(),
        ));
    }

    let scale = 1.0 / triplets.len() as f64;
    let mut value = 0.0;
    let mut grad = Grid::zeros(n, f.cols());
    for t in &triplets {
        let hinge = w.margin + dist[t.anchor * n + t.positive] - dist[t.anchor * n + t.negative];
        if hinge <= 0.0 {
            continue;
        }
        value += hinge;
        // d(1 - cos)/dx = -dcos/dx
        let (_, ga_p, gp) = cosine_with_grad(f.row(t.anchor), f.row(t.positive));
        let (_, ga_n, gn) = cosine_with_grad(f.row(t.anchor), f.row(t.negative));
        for (k, g) in grad.row_mut(t.anchor).iter_mut().enumerate() {
            *g += scale * (ga_n[k] - ga_p[k]);
        }
        for (g, v) in grad.row_mut(t.positive).iter_mut().zip(&gp) {
            *g -= scale * v;
        }
        for (g, v) in grad.row_mut(t.negative).iter_mut().zip(&gn) {
            *g += scale * v;
        }
    }
    Ok(LossOutput {
        value: value * scale,
        grad_features: grad,
        selected_triplets: Some(triplets),
        ..LossOutput::zero()
    })
}
