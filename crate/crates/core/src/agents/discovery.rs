use std::collections::{BTreeMap, HashSet};

use serde_json::json;

use super::{AgentError, AgentResponse, Provenance, SourceType, Specialist, TraceEntry, UIAction};
use crate::clustering::NOISE;
use crate::dataset::Dataset;
use crate::embedding::knn_by_vector;

pub const DEFAULT_NEIGHBORS: usize = 10;
/// Side of the occupancy grid used for the gap report.
pub const GAP_GRID: usize = 16;
const REPORTED_GAPS: usize = 5;
const REPORTED_CLUSTERS: usize = 3;

/// Empty cells of a `GAP_GRID`² grid over the square of half-side `2r`
/// around the selection centroid, nearest first. `r` is the largest
/// centroid distance in the selection (1% of the map extent if zero).
fn gap_report(dataset: &Dataset, selection: &[usize]) -> Vec<serde_json::Value> {
    let coords: Vec<[f64; 2]> = selection.iter().map(|&i| dataset.spatial.coord(i)).collect();
    let n = coords.len() as f64;
    let c = [
        coords.iter().map(|p| p[0]).sum::<f64>() / n,
        coords.iter().map(|p| p[1]).sum::<f64>() / n,
    ];
    let mut r = coords
        .iter()
        .map(|p| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt())
        .fold(0.0, f64::max);
    if r == 0.0 {
        let b = dataset.spatial.bounds();
        r = 0.01 * (b.max[0] - b.min[0]).max(b.max[1] - b.min[1]).max(1e-9);
    }
    let lo = [c[0] - 2.0 * r, c[1] - 2.0 * r];
    let cell = 4.0 * r / GAP_GRID as f64;
    let mut occupied = vec![false; GAP_GRID * GAP_GRID];
    let reach = 2.0 * std::f64::consts::SQRT_2 * r;
    for i in dataset.spatial.query_circle(c, reach) {
        let p = dataset.spatial.coord(i);
        let gx = ((p[0] - lo[0]) / cell).floor();
        let gy = ((p[1] - lo[1]) / cell).floor();
        if (0.0..GAP_GRID as f64).contains(&gx) && (0.0..GAP_GRID as f64).contains(&gy) {
            occupied[gy as usize * GAP_GRID + gx as usize] = true;
        }
    }
    let mut empty: Vec<(f64, usize, usize, [f64; 2])> = (0..GAP_GRID * GAP_GRID)
        .filter(|&k| !occupied[k])
        .map(|k| {
            let (gx, gy) = (k % GAP_GRID, k / GAP_GRID);
            let centre = [lo[0] + (gx as f64 + 0.5) * cell, lo[1] + (gy as f64 + 0.5) * cell];
            let d = ((centre[0] - c[0]).powi(2) + (centre[1] - c[1]).powi(2)).sqrt();
            (d, gx, gy, centre)
        })
        .collect();
    empty.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.2, a.1).cmp(&(b.2, b.1))));
    empty
        .into_iter()
        .take(REPORTED_GAPS)
        .map(|(d, gx, gy, centre)| json!({ "cell": [gx, gy], "center": centre, "distance": d }))
        .collect()
}

/// Nearest non-selected articles to the selection centroid, their clusters
/// ranked by how many neighbors fall in each, and nearby empty map regions.
pub fn run_discovery(dataset: &Dataset, selection: &[usize], k: usize) -> Result<AgentResponse, AgentError> {
    if selection.is_empty() {
        return Err(AgentError::EmptySelection);
    }
    let emb = dataset
        .embeddings
        .as_ref()
        .ok_or_else(|| AgentError::Unavailable("dataset has no embeddings loaded".into()))?;
    let rows: Vec<Vec<f64>> = selection
        .iter()
        .map(|&i| {
            let r = emb.row_f64(i);
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                r.iter().map(|v| v / norm).collect()
            } else {
                r
            }
        })
        .collect();
    let mut centroid = vec![0.0; emb.dim()];
    for r in &rows {
        centroid.iter_mut().zip(r).for_each(|(c, v)| *c += v);
    }
    centroid.iter_mut().for_each(|c| *c /= rows.len() as f64);

    let chosen: HashSet<usize> = selection.iter().copied().collect();
    let knn = knn_by_vector(emb, &centroid, k.max(1), |i| chosen.contains(&i))
        .map_err(|e| AgentError::Contract(e.to_string()))?;
    let mut trace = vec![TraceEntry::new(
        Specialist::Discovery,
        "knn_by_vector",
        format!("k={k} over {} candidates", dataset.len() - chosen.len()),
    )];

    let mut per_cluster: BTreeMap<u32, u64> = BTreeMap::new();
    for nb in &knn.neighbors {
        let c = dataset.point_cluster[nb.index];
        if c != NOISE {
            *per_cluster.entry(c as u32).or_default() += 1;
        }
    }
    let mut adjacent: Vec<(u32, u64)> = per_cluster.into_iter().collect();
    adjacent.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let gaps = gap_report(dataset, selection);
    trace.push(TraceEntry::new(
        Specialist::Discovery,
        "gap_report",
        format!("{} empty cells reported", gaps.len()),
    ));

    let arts = dataset.corpus.articles();
    let mut provenance = Vec::new();
    let text = if knn.neighbors.is_empty() {
        "The selection covers every article in the dataset; there are no other articles to suggest.".to_string()
    } else {
        let cites: Vec<String> = knn
            .neighbors
            .iter()
            .map(|nb| format!("{} [PMID:{}]", arts[nb.index].title, nb.id))
            .collect();
        for nb in &knn.neighbors {
            provenance.push(Provenance {
                pmid: nb.id.clone(),
                snippet: arts[nb.index].title.clone(),
                source_type: SourceType::Title,
            });
        }
        let mut t = format!("Closest articles outside the selection: {}.", cites.join("; "));
        if !adjacent.is_empty() {
            let named: Vec<String> = adjacent
                .iter()
                .take(REPORTED_CLUSTERS)
                .map(|(c, n)| match dataset.label(*c) {
                    Some(l) => format!("{c} \"{}\" ({n})", l.label),
                    None => format!("{c} ({n})"),
                })
                .collect();
            t.push_str(&format!(" Adjacent clusters: {}.", named.join(", ")));
        }
        t
    };
    let mut actions = Vec::new();
    if !adjacent.is_empty() {
        actions.push(UIAction::HighlightClusters(
            adjacent.iter().take(REPORTED_CLUSTERS).map(|(c, _)| *c).collect(),
        ));
    }
    let neighbors: Vec<_> = knn
        .neighbors
        .iter()
        .map(|nb| json!({ "pmid": nb.id, "similarity": nb.similarity }))
        .collect();
    let clusters: Vec<_> = adjacent.iter().map(|(c, n)| json!({ "cluster_id": c, "count": n })).collect();
    Ok(AgentResponse {
        text,
        actions,
        provenance,
        agent_trace: trace,
        data: Some(json!({ "neighbors": neighbors, "adjacent_clusters": clusters, "gaps": gaps })),
    })
}
