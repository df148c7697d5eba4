use std::path::Path;

use serde::{Deserialize, Serialize};

use super::distances::distance_stats;
use super::ranking::{cmc_map, distance_matrix, probe_breakdown, ProbeBreakdown};
use crate::dataset::Manifest;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::iqa::PartitionLabel;
use crate::trainer::{embed_manifest, Model};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cmc: Vec<f64>,
    pub map: f64,
    pub evaluated_queries: usize,
    pub skipped_queries: usize,
    /// Mean same-identity distance over query and gallery features.
    pub d_intra: f64,
    pub d_inter: f64,
    /// Mean distance between the model's identity centers.
    pub d_centers: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_breakdown: Option<ProbeBreakdown>,
}

impl EvalReport {
    pub fn rank1(&self) -> f64 {
        self.cmc.first().copied().unwrap_or(0.0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

fn stack(a: &Grid, b: &Grid) -> Result<Grid> {
    let mut data = a.as_slice().to_vec();
    data.extend_from_slice(b.as_slice());
    Grid::from_vec(a.rows() + b.rows(), a.cols(), data)
}

/// Embeds both manifests and ranks every query against the gallery. A probe
/// breakdown is added when every query carries a partition label.
pub fn evaluate_model(
    model: &Model,
    query: &Manifest,
    gallery: &Manifest,
    max_rank: usize,
    threads: usize,
) -> Result<EvalReport> {
    if query.is_empty() || gallery.is_empty() {
        return Err(Error::InvalidInput("query and gallery must both be non-empty".into()));
    }
    let qf = embed_manifest(model, query, threads)?;
    let gf = embed_manifest(model, gallery, threads)?;
    let dm = distance_matrix(&qf, &gf)?;
    let field = |m: &Manifest, f: fn(&crate::dataset::SampleRecord) -> u32| {
        m.records.iter().map(f).collect::<Vec<u32>>()
    };
    let (q_ids, g_ids) = (field(query, |r| r.identity), field(gallery, |r| r.identity));
    let (q_cams, g_cams) = (field(query, |r| r.camera), field(gallery, |r| r.camera));
    let max_rank = max_rank.min(gallery.len());
    let ranking = cmc_map(&dm, &q_ids, &g_ids, &q_cams, &g_cams, max_rank)?;
    let bins: Option<Vec<PartitionLabel>> = query.records.iter().map(|r| r.partition).collect();
    let breakdown = match bins {
        Some(bins) => Some(probe_breakdown(&dm, &q_ids, &g_ids, &q_cams, &g_cams, &bins, max_rank)?),
        None => None,
    };
    let all_ids: Vec<u32> = q_ids.iter().chain(&g_ids).copied().collect();
    let stats = distance_stats(&stack(&qf, &gf)?, &all_ids, &model.centers)?;
    Ok(EvalReport {
        cmc: ranking.cmc,
        map: ranking.map,
        evaluated_queries: ranking.evaluated_queries,
        skipped_queries: ranking.skipped_queries,
        d_intra: stats.d_intra,
        d_inter: stats.d_inter,
        d_centers: stats.d_centers,
        probe_breakdown: breakdown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_corpus, SynthConfig};
    use crate::trainer::{train, TrainConfig};

    #[test]
    fn report_on_a_tiny_model_round_trips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let mut sc = SynthConfig::new(4, 4, 3);
        sc.height = 16;
        sc.width = 8;
        let m = synth_corpus(&sc, dir.path()).unwrap().manifest;
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 8,
            input_h: 8,
            input_w: 4,
            hidden: vec![10, 6],
            seed: 1,
            ..TrainConfig::default()
        };
        let (model, _) = train(&cfg, &m, None).unwrap();
        let r = evaluate_model(&model, &m, &m, 5, 1).unwrap();
        assert_eq!(r.cmc.len(), 5);
        assert!(r.cmc.windows(2).all(|w| w[0] <= w[1]));
        assert!(r.probe_breakdown.is_none());
        let back: EvalReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
