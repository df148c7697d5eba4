//! Ranking metrics and embedding-space measurements.
//!
//! Distances are `1 - cos` throughout, matching the losses.

mod distances;
mod histogram;
mod ranking;
mod report;

pub use distances::{
    distance_by_resolution, distance_stats, DistanceStats, PairCategory, ResolutionCell, ResolutionTable,
};
pub use histogram::{mine_selection, triplet_histogram, SelectionHistogram};
pub use ranking::{cmc_map, distance_matrix, probe_breakdown, DistanceMatrix, ProbeBreakdown, RankingReport};
pub use report::{evaluate_model, EvalReport};
