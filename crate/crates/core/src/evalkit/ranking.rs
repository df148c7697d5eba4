use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::iqa::PartitionLabel;
use crate::metric::cosine;

/// Query-by-gallery `1 - cos` distances.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    pub values: Grid,
}

impl DistanceMatrix {
    pub fn queries(&self) -> usize {
        self.values.rows()
    }

    pub fn gallery(&self) -> usize {
        self.values.cols()
    }

    pub fn get(&self, q: usize, g: usize) -> f64 {
        self.values.get(q, g)
    }

    /// Keeps only the listed query rows, in the given order.
    pub fn select_queries(&self, rows: &[usize]) -> DistanceMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.gallery());
        for &r in rows {
            data.extend_from_slice(self.values.row(r));
        }
        DistanceMatrix { values: Grid::from_vec(rows.len(), self.gallery(), data).expect("sized") }
    }
}

pub fn distance_matrix(queries: &Grid, gallery: &Grid) -> Result<DistanceMatrix> {
    if queries.cols() != gallery.cols() {
        return Err(Error::Shape(format!(
            "query features have {} dims, gallery features {}",
            queries.cols(),
            gallery.cols()
        )));
    }
    let mut values = Grid::zeros(queries.rows(), gallery.rows());
    for q in 0..queries.rows() {
        for (g, d) in values.row_mut(q).iter_mut().enumerate() {
            *d = 1.0 - cosine(queries.row(q), gallery.row(g));
        }
    }
    Ok(DistanceMatrix { values })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    /// `cmc[k]`: fraction of evaluated queries with a match in the top `k + 1`.
    pub cmc: Vec<f64>,
    pub map: f64,
    /// Queries that contributed to `cmc` and `map`.
    pub evaluated_queries: usize,
    /// Queries without any valid gallery match, left out of the averages.
    pub skipped_queries: usize,
}

impl RankingReport {
    pub fn rank1(&self) -> f64 {
        self.cmc.first().copied().unwrap_or(0.0)
    }
}

fn check_lengths(
    dm: &DistanceMatrix,
    q_ids: &[u32],
    g_ids: &[u32],
    q_cams: &[u32],
    g_cams: &[u32],
) -> Result<()> {
    if q_ids.len() != dm.queries() || q_cams.len() != dm.queries() {
        return Err(Error::Shape(format!(
            "{} queries but {} identities and {} cameras",
            dm.queries(),
            q_ids.len(),
            q_cams.len()
        )));
    }
    if g_ids.len() != dm.gallery() || g_cams.len() != dm.gallery() {
        return Err(Error::Shape(format!(
            "{} gallery entries but {} identities and {} cameras",
            dm.gallery(),
            g_ids.len(),
            g_cams.len()
        )));
    }
    Ok(())
}

/// First matching rank (0-based) and average precision of one query, or
/// `None` when the query has no valid match.
fn rank_query(row: &[f64], qid: u32, qcam: u32, g_ids: &[u32], g_cams: &[u32]) -> Option<(usize, f64)> {
    let mut order: Vec<usize> = (0..row.len()).filter(|&g| !(g_ids[g] == qid && g_cams[g] == qcam)).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
    let mut first = None;
    let mut hits = 0usize;
    let mut precision_sum = 0.0;
    for (pos, &g) in order.iter().enumerate() {
        if g_ids[g] == qid {
            hits += 1;
            first.get_or_insert(pos);
            precision_sum += hits as f64 / (pos + 1) as f64;
        }
    }
    first.map(|f| (f, precision_sum / hits as f64))
}

/// Single-query CMC and mAP with same-identity, same-camera gallery entries
/// excluded. Ties in distance rank by gallery index.
pub fn cmc_map(
    dm: &DistanceMatrix,
    q_ids: &[u32],
    g_ids: &[u32],
    q_cams: &[u32],
    g_cams: &[u32],
    max_rank: usize,
) -> Result<RankingReport> {
    check_lengths(dm, q_ids, g_ids, q_cams, g_cams)?;
    if max_rank == 0 {
        return Err(Error::InvalidInput("max rank must be at least 1".into()));
    }
    let mut hits_at = vec![0usize; max_rank];
    let mut ap_sum = 0.0;
    let mut evaluated = 0usize;
    for q in 0..dm.queries() {
        let Some((first, ap)) = rank_query(dm.values.row(q), q_ids[q], q_cams[q], g_ids, g_cams) else {
            continue;
        };
        evaluated += 1;
        ap_sum += ap;
        for h in hits_at.iter_mut().skip(first) {
            *h += 1;
        }
    }
    if evaluated == 0 {
        return Err(Error::InvalidInput("no query has a valid gallery match".into()));
    }
    let n = evaluated as f64;
    Ok(RankingReport {
        cmc: hits_at.iter().map(|&h| h as f64 / n).collect(),
        map: ap_sum / n,
        evaluated_queries: evaluated,
        skipped_queries: dm.queries() - evaluated,
    })
}

/// Rankings of all queries and of the HR and LR query subsets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeBreakdown {
    pub all: RankingReport,
    pub hr: Option<RankingReport>,
    pub lr: Option<RankingReport>,
}

#[allow(clippy::too_many_arguments)]
pub fn probe_breakdown(
    dm: &DistanceMatrix,
    q_ids: &[u32],
    g_ids: &[u32],
    q_cams: &[u32],
    g_cams: &[u32],
    q_bins: &[PartitionLabel],
    max_rank: usize,
) -> Result<ProbeBreakdown> {
    if q_bins.len() != dm.queries() {
        return Err(Error::Shape(format!("{} queries but {} probe labels", dm.queries(), q_bins.len())));
    }
    let all = cmc_map(dm, q_ids, g_ids, q_cams, g_cams, max_rank)?;
    let subset = |label: PartitionLabel| -> Result<Option<RankingReport>> {
        let rows: Vec<usize> = (0..dm.queries()).filter(|&q| q_bins[q] == label).collect();
        if rows.is_empty() {
            return Ok(None);
        }
        let pick = |v: &[u32]| rows.iter().map(|&r| v[r]).collect::<Vec<u32>>();
        match cmc_map(&dm.select_queries(&rows), &pick(q_ids), g_ids, &pick(q_cams), g_cams, max_rank) {
            Ok(r) => Ok(Some(r)),
            // a bin whose every query lacks a match has nothing to report
            Err(Error::InvalidInput(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    Ok(ProbeBreakdown { hr: subset(PartitionLabel::Hr)?, lr: subset(PartitionLabel::Lr)?, all })
}
