//! Density clustering of map coordinates and the multi-level cluster tree.

mod hdbscan;
mod hierarchy;

use thiserror::Error;

pub use hdbscan::{
    core_distances, extract_flat, mst_mutual_reachability, FlatClustering, MstEdge,
    MutualReachability,
};
pub use hierarchy::{build_hierarchy, default_schedule, ClusterNode, ClusterTree, LevelParams, NOISE};

#[derive(Debug, Error)]
pub enum ClusteringError {
    #[error("invalid argument: {0}")]
    Contract(String),
    #[error("malformed cluster tree: {0}")]
    Format(String),
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
