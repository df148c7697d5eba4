use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::iqa::PartitionLabel;
use crate::metric::{cosine, CenterBank};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceStats {
    pub d_intra: f64,
    pub d_inter: f64,
    pub d_centers: f64,
}

fn check_labels(features: &Grid, labels: &[u32]) -> Result<()> {
    if features.rows() != labels.len() {
        return Err(Error::Shape(format!("{} feature rows but {} labels", features.rows(), labels.len())));
    }
    Ok(())
}

/// Mean `1 - cos` over same-identity pairs, cross-identity pairs and center
/// pairs, each over unordered pairs.
pub fn distance_stats(features: &Grid, labels: &[u32], centers: &CenterBank) -> Result<DistanceStats> {
    check_labels(features, labels)?;
    let (mut intra, mut n_intra, mut inter, mut n_inter) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..features.rows() {
        for j in i + 1..features.rows() {
            let d = 1.0 - cosine(features.row(i), features.row(j));
            if labels[i] == labels[j] {
                intra += d;
                n_intra += 1;
            } else {
                inter += d;
                n_inter += 1;
            }
        }
    }
    let c = &centers.centers;
    let (mut between, mut n_between) = (0.0, 0usize);
    for i in 0..c.rows() {
        for j in i + 1..c.rows() {
            between += 1.0 - cosine(c.row(i), c.row(j));
            n_between += 1;
        }
    }
    let mean = |sum: f64, n: usize, what: &str| {
        if n == 0 {
            Err(Error::InvalidInput(format!("{what} has no qualifying pairs")))
        } else {
            Ok(sum / n as f64)
        }
    };
    Ok(DistanceStats {
        d_intra: mean(intra, n_intra, "d_intra")?,
        d_inter: mean(inter, n_inter, "d_inter")?,
        d_centers: mean(between, n_between, "d_centers")?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairCategory {
    HrHr,
    LrLr,
    /// Either order of one HR and one LR sample.
    Cross,
}

impl PairCategory {
    pub const ALL: [PairCategory; 3] = [PairCategory::HrHr, PairCategory::LrLr, PairCategory::Cross];

    pub fn of(a: PartitionLabel, b: PartitionLabel) -> Self {
        match (a, b) {
            (PartitionLabel::Hr, PartitionLabel::Hr) => PairCategory::HrHr,
            (PartitionLabel::Lr, PartitionLabel::Lr) => PairCategory::LrLr,
            _ => PairCategory::Cross,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PairCategory::HrHr => "HR-HR",
            PairCategory::LrLr => "LR-LR",
            PairCategory::Cross => "cross",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResolutionCell {
    /// `None` when the category has no pairs.
    pub mean: Option<f64>,
    pub pairs: usize,
}

/// Mean intra- and inter-identity distance per resolution pairing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolutionTable {
    pub rows: Vec<(PairCategory, ResolutionCell, ResolutionCell)>,
}

impl ResolutionTable {
    pub fn row(&self, cat: PairCategory) -> (ResolutionCell, ResolutionCell) {
        let (_, intra, inter) = self.rows.iter().find(|r| r.0 == cat).expect("all categories present");
        (*intra, *inter)
    }

    pub const CSV_HEADER: &'static str = "pair,intra,intra_pairs,inter,inter_pairs";

    /// One row per category; absent means are left empty.
    pub fn to_csv(&self) -> String {
        let fmt = |m: Option<f64>| m.map(|v| v.to_string()).unwrap_or_default();
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for (cat, intra, inter) in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                cat.as_str(),
                fmt(intra.mean),
                intra.pairs,
                fmt(inter.mean),
                inter.pairs
            )
            .expect("string write");
        }
        out
    }
}

pub fn distance_by_resolution(
    features: &Grid,
    labels: &[u32],
    bins: &[PartitionLabel],
) -> Result<ResolutionTable> {
    check_labels(features, labels)?;
    if bins.len() != labels.len() {
        return Err(Error::Shape(format!("{} labels but {} resolution bins", labels.len(), bins.len())));
    }
    // [category][intra = 0, inter = 1] -> (sum, count)
    let mut acc = [[(0.0, 0usize); 2]; 3];
    for i in 0..features.rows() {
        for j in i + 1..features.rows() {
            let d = 1.0 - cosine(features.row(i), features.row(j));
            let cat = PairCategory::of(bins[i], bins[j]) as usize;
            let slot = &mut acc[cat][usize::from(labels[i] != labels[j])];
            slot.0 += d;
            slot.1 += 1;
        }
    }
    let cell = |(sum, n): (f64, usize)| ResolutionCell { mean: (n > 0).then(|| sum / n as f64), pairs: n };
    Ok(ResolutionTable {
        rows: PairCategory::ALL
            .iter()
            .map(|&c| (c, cell(acc[c as usize][0]), cell(acc[c as usize][1])))
            .collect(),
    })
}
