use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{extract_flat, mst_mutual_reachability, ClusteringError};

/// Per-point cluster id for points outside every cluster.
pub const NOISE: i64 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelParams {
    pub min_cluster_size: usize,
    pub min_samples: usize,
}

/// `max(5, round(n·q))` for `q` in 0.5 %, 2 %, 8 %, with `min_samples = 5`,
/// both capped so that small inputs stay valid.
pub fn default_schedule(n: usize) -> Vec<LevelParams> {
    let min_samples = 5.min(n.saturating_sub(1)).max(1);
    [0.005, 0.02, 0.08]
        .iter()
        .map(|q| LevelParams {
            min_cluster_size: ((n as f64 * q).round() as usize).max(5),
            min_samples,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterNode {
    pub cluster_id: u32,
    /// 0 is the finest level.
    pub level: u32,
    pub parent_id: Option<u32>,
    pub member_pmids: Vec<String>,
    pub stability: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTree {
    pub theta: f64,
    pub schedule: Vec<LevelParams>,
    pub nodes: Vec<ClusterNode>,
}

impl ClusterTree {
    pub fn node(&self, id: u32) -> Option<&ClusterNode> {
        self.nodes.get(id as usize).filter(|n| n.cluster_id == id)
    }

    pub fn level(&self, level: u32) -> impl Iterator<Item = &ClusterNode> {
        self.nodes.iter().filter(move |n| n.level == level)
    }

    pub fn levels(&self) -> u32 {
        self.schedule.len() as u32
    }

    pub fn children(&self, id: u32) -> impl Iterator<Item = &ClusterNode> {
        self.nodes.iter().filter(move |n| n.parent_id == Some(id))
    }

    pub fn roots(&self) -> impl Iterator<Item = &ClusterNode> {
        self.nodes.iter().filter(|n| n.parent_id.is_none())
    }

    /// Nodes that share `id`'s parent (or are roots at its level), itself included.
    pub fn siblings(&self, id: u32) -> Vec<&ClusterNode> {
        let Some(node) = self.node(id) else {
            return Vec::new();
        };
        self.nodes
            .iter()
            .filter(|n| n.level == node.level && n.parent_id == node.parent_id)
            .collect()
    }

    /// Per-pmid cluster id at `level`, `NOISE` when unassigned.
    pub fn assignments(&self, pmids: &[String], level: u32) -> Vec<i64> {
        let mut map = std::collections::HashMap::new();
        for n in self.level(level) {
            for p in &n.member_pmids {
                map.insert(p.as_str(), n.cluster_id as i64);
            }
        }
        pmids
            .iter()
            .map(|p| map.get(p.as_str()).copied().unwrap_or(NOISE))
            .collect()
    }

    /// Fraction of `id`'s members that are also in its parent.
    pub fn parent_overlap(&self, id: u32) -> Option<f64> {
        let node = self.node(id)?;
        let parent = self.node(node.parent_id?)?;
        let pm: BTreeSet<&str> = parent.member_pmids.iter().map(String::as_str).collect();
        let shared = node.member_pmids.iter().filter(|p| pm.contains(p.as_str())).count();
        Some(shared as f64 / node.member_pmids.len() as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serialises")
    }

    pub fn from_json(s: &str) -> Result<Self, ClusteringError> {
        let tree: ClusterTree = serde_json::from_str(s).map_err(|e| ClusteringError::Format(e.to_string()))?;
        for (i, n) in tree.nodes.iter().enumerate() {
            if n.cluster_id as usize != i {
                return Err(ClusteringError::Format(format!("node {i} has id {}", n.cluster_id)));
            }
            if n.member_pmids.is_empty() {
                return Err(ClusteringError::Format(format!("cluster {i} has no members")));
            }
            if let Some(p) = n.parent_id {
                if tree.nodes.get(p as usize).is_none_or(|pn| pn.level <= n.level) {
                    return Err(ClusteringError::Format(format!("cluster {i} has bad parent {p}")));
                }
            }
        }
        Ok(tree)
    }
}

/// Index of the coarse cluster holding the largest share of `members`
/// (first wins ties), if that share is at least `theta`.
fn overlap_parent(members: &[String], coarse: &[&[String]], theta: f64) -> Option<usize> {
    let mine: BTreeSet<&str> = members.iter().map(String::as_str).collect();
    let (best, shared) = coarse
        .iter()
        .enumerate()
        .map(|(i, pm)| (i, pm.iter().filter(|p| mine.contains(p.as_str())).count()))
        .fold((0, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
    (shared > 0 && shared as f64 / members.len() as f64 >= theta).then_some(best)
}

/// Clusters `points` once per schedule level and links each cluster to the
/// next non-empty coarser level's cluster that holds the largest share of
/// its members, when that share is at least `theta`.
///
/// Ids are dense, level by level from the finest; within a level clusters
/// are ordered by their smallest member pmid.
pub fn build_hierarchy(
    points: &[[f64; 2]],
    pmids: &[String],
    schedule: &[LevelParams],
    theta: f64,
) -> Result<ClusterTree, ClusteringError> {
    if points.len() != pmids.len() {
        return Err(ClusteringError::Contract(format!(
            "{} points but {} pmids",
            points.len(),
            pmids.len()
        )));
    }
    if !(theta > 0.5 && theta <= 1.0) {
        return Err(ClusteringError::Contract(format!("theta = {theta} outside (0.5, 1]")));
    }
    if schedule.is_empty() {
        return Err(ClusteringError::Contract("empty schedule".into()));
    }
    if schedule.windows(2).any(|w| w[1].min_cluster_size < w[0].min_cluster_size) {
        return Err(ClusteringError::Contract("schedule must be ordered fine to coarse".into()));
    }

    // Per level: clusters as sorted pmid lists with stability.
    let mut levels: Vec<Vec<(Vec<String>, f64)>> = Vec::with_capacity(schedule.len());
    for lp in schedule {
        let mut clusters = Vec::new();
        if points.len() > lp.min_samples && points.len() >= 2 {
            let mst = mst_mutual_reachability(points, lp.min_samples)?;
            let flat = extract_flat(&mst, lp.min_cluster_size)?;
            for (members, stability) in flat.clusters.iter().zip(&flat.stabilities) {
                let mut ids: Vec<String> = members.iter().map(|&i| pmids[i].clone()).collect();
                ids.sort();
                clusters.push((ids, *stability));
            }
        } else {
            log::warn!("level {lp:?} skipped: only {} points", points.len());
        }
        clusters.sort_by(|a, b| a.0[0].cmp(&b.0[0]));
        levels.push(clusters);
    }

    let mut base = Vec::with_capacity(levels.len());
    let mut next = 0u32;
    for l in &levels {
        base.push(next);
        next += l.len() as u32;
    }

    let mut nodes = Vec::with_capacity(next as usize);
    for (li, clusters) in levels.iter().enumerate() {
        let coarser = (li + 1..levels.len()).find(|&c| !levels[c].is_empty());
        for (ci, (members, stability)) in clusters.iter().enumerate() {
            let parent_id = coarser.and_then(|c| {
                let coarse: Vec<&[String]> = levels[c].iter().map(|(m, _)| m.as_slice()).collect();
                overlap_parent(members, &coarse, theta).map(|best| base[c] + best as u32)
            });
            nodes.push(ClusterNode {
                cluster_id: base[li] + ci as u32,
                level: li as u32,
                parent_id,
                member_pmids: members.clone(),
                stability: *stability,
                label: None,
            });
        }
    }
    Ok(ClusterTree {
        theta,
        schedule: schedule.to_vec(),
        nodes,
    })
}
