use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::iqa::PartitionLabel;
use crate::metric::{trihard, EmbeddingBatch, LossWeights, Triplet};
use crate::trainer::pk_sample_labels;

/// Which resolution bin batch-hard mining picks its positives and negatives
/// from, per anchor bin. Grids are indexed `[anchor][chosen]` with HR first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionHistogram {
    pub positive_counts: [[u64; 2]; 2],
    pub negative_counts: [[u64; 2]; 2],
    /// Rows sum to one; a row with no anchors stays zero.
    pub positive: [[f64; 2]; 2],
    pub negative: [[f64; 2]; 2],
}

fn normalize(counts: &[[u64; 2]; 2]) -> [[f64; 2]; 2] {
    counts.map(|row| {
        let total = row[0] + row[1];
        if total == 0 {
            [0.0, 0.0]
        } else {
            row.map(|c| c as f64 / total as f64)
        }
    })
}

impl SelectionHistogram {
    /// Share of normalized mass on the diagonal, averaged over populated rows.
    pub fn diagonal_mass(grid: &[[f64; 2]; 2]) -> f64 {
        let rows: Vec<f64> = (0..2).filter(|&r| grid[r][0] + grid[r][1] > 0.0).map(|r| grid[r][r]).collect();
        rows.iter().sum::<f64>() / rows.len().max(1) as f64
    }

    pub const CSV_HEADER: &'static str = "kind,anchor,HR,LR,HR_count,LR_count";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for (kind, norm, counts) in [
            ("positive", &self.positive, &self.positive_counts),
            ("negative", &self.negative, &self.negative_counts),
        ] {
            for (r, label) in ["HR", "LR"].iter().enumerate() {
                writeln!(
                    out,
                    "{kind},{label},{},{},{},{}",
                    norm[r][0], norm[r][1], counts[r][0], counts[r][1]
                )
                .expect("string write");
            }
        }
        out
    }
}

/// Tallies the bins of the chosen positives and negatives per anchor bin.
pub fn triplet_histogram(selected: &[Triplet], bins: &[PartitionLabel]) -> Result<SelectionHistogram> {
    if selected.is_empty() {
        return Err(Error::InvalidInput("no triplets to tally".into()));
    }
    let mut pos = [[0u64; 2]; 2];
    let mut neg = [[0u64; 2]; 2];
    for t in selected {
        let bin = |i: usize| {
            bins.get(i)
                .map(|b| b.index())
                .ok_or_else(|| Error::Shape(format!("triplet index {i} outside {} bins", bins.len())))
        };
        let a = bin(t.anchor)?;
        pos[a][bin(t.positive)?] += 1;
        neg[a][bin(t.negative)?] += 1;
    }
    Ok(SelectionHistogram {
        positive: normalize(&pos),
        negative: normalize(&neg),
        positive_counts: pos,
        negative_counts: neg,
    })
}

/// Runs batch-hard mining over `rounds` PK-sampled batches and returns the
/// selected triplets as indices into `features`.
pub fn mine_selection<R: Rng + ?Sized>(
    features: &Grid,
    labels: &[u32],
    p: usize,
    k: usize,
    rounds: usize,
    rng: &mut R,
) -> Result<Vec<Triplet>> {
    if features.rows() != labels.len() {
        return Err(Error::Shape(format!("{} feature rows but {} labels", features.rows(), labels.len())));
    }
    let weights = LossWeights::default();
    let mut out = Vec::new();
    for _ in 0..rounds {
        let idx = pk_sample_labels(labels, p, k, rng)?;
        let mut rows = Vec::with_capacity(idx.len() * features.cols());
        for &i in &idx {
            rows.extend_from_slice(features.row(i));
        }
        let batch = EmbeddingBatch::new(
            Grid::from_vec(idx.len(), features.cols(), rows)?,
            idx.iter().map(|&i| labels[i] as usize).collect(),
        )?;
        let mined = trihard(&batch, &weights)?;
        for t in mined.selected_triplets.unwrap_or_default() {
            out.push(Triplet { anchor: idx[t.anchor], positive: idx[t.positive], negative: idx[t.negative] });
        }
    }
    Ok(out)
}
