//! Two-dimensional map layout: kNN graph construction, a LargeVis-style
//! negative-sampling optimiser and an exact t-SNE fallback.

mod knn_graph;
mod largevis;
mod perplexity;
mod tsne;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use knn_graph::{build_knn_graph, KnnGraph};
pub use largevis::{fit_largevis, largevis_objective, LargeVisConfig};
pub use perplexity::{conditional_probabilities, entropy_bits};
pub use tsne::{
    fit_tsne_exact, joint_probabilities, kl_divergence, tsne_gradient, JointProbabilities,
    TsneConfig,
};

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("invalid argument: {0}")]
    Contract(String),
    #[error("non-finite coordinate for node {node} at iteration {iteration}")]
    NonFinite { iteration: usize, node: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutMethod {
    Largevis,
    Tsne,
}

/// Student-t similarity kernel `f(d) = 1 / (1 + d²)`.
pub fn kernel(d: f64) -> f64 {
    1.0 / (1.0 + d * d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout2D {
    pub coordinates: Vec<[f64; 2]>,
    pub seed: u64,
    pub method: LayoutMethod,
    pub final_objective: f64,
    /// `(iteration, objective)` checkpoints recorded during optimisation.
    #[serde(default)]
    pub objective_trace: Vec<(usize, f64)>,
}

/// Summary written next to the map TSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutReport {
    pub method: LayoutMethod,
    pub seed: u64,
    pub final_objective: f64,
    pub n: usize,
}

impl Layout2D {
    pub fn report(&self) -> LayoutReport {
        LayoutReport {
            method: self.method,
            seed: self.seed,
            final_objective: self.final_objective,
            n: self.coordinates.len(),
        }
    }
}

/// Mean fraction of each point's `k` nearest 2D neighbours sharing its label.
pub fn knn_label_purity<L: PartialEq>(coords: &[[f64; 2]], labels: &[L], k: usize) -> f64 {
    let n = coords.len();
    if n < 2 || k == 0 {
        return 1.0;
    }
    let k = k.min(n - 1);
    let total: f64 = (0..n)
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let dx = coords[i][0] - coords[j][0];
                    let dy = coords[i][1] - coords[j][1];
                    (dx * dx + dy * dy, j)
                })
                .collect();
            d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d[..k].iter().filter(|(_, j)| labels[*j] == labels[i]).count() as f64 / k as f64
        })
        .sum();
    total / n as f64
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
