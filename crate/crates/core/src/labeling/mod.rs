//! Cluster labels from term statistics: class-based TF-IDF across a level
//! and sibling-local tree TF-IDF for nested clusters.

mod stopwords;

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::ClusterTree;
use crate::corpus::{tokenize, Article};
use crate::model::{ModelClient, ModelRequest};

pub use stopwords::{is_stopword, STOPWORDS, STOPWORDS_VERSION};

pub const UNLABELED: &str = "(unlabeled)";
pub const DEFAULT_LABEL_TERMS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermSource {
    Mesh,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTerms {
    pub source: TermSource,
    pub tf: BTreeMap<String, u64>,
}

impl ClusterTerms {
    pub fn total(&self) -> u64 {
        self.tf.values().sum()
    }
}

/// Term counts for every node of a cluster tree.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TermStats {
    clusters: BTreeMap<u32, ClusterTerms>,
    levels: BTreeMap<u32, Vec<u32>>,
}

impl TermStats {
    /// Adds one class; `level` groups the classes that are contrasted by c-TF-IDF.
    pub fn insert(&mut self, cluster_id: u32, level: u32, terms: ClusterTerms) {
        self.clusters.insert(cluster_id, terms);
        let ids = self.levels.entry(level).or_default();
        if !ids.contains(&cluster_id) {
            ids.push(cluster_id);
            ids.sort_unstable();
        }
    }

    pub fn cluster(&self, id: u32) -> Option<&ClusterTerms> {
        self.clusters.get(&id)
    }

    /// Ids contrasted with `id` by c-TF-IDF.
    pub fn peers(&self, id: u32) -> Vec<u32> {
        self.levels
            .values()
            .find(|ids| ids.contains(&id))
            .cloned()
            .unwrap_or_default()
    }

    /// `f(t)` summed over `group` and `A`, the mean term count per cluster.
    pub fn group_totals(&self, group: &[u32]) -> (BTreeMap<&str, u64>, f64) {
        let mut f: BTreeMap<&str, u64> = BTreeMap::new();
        let mut all = 0u64;
        for id in group {
            if let Some(c) = self.clusters.get(id) {
                for (t, &n) in &c.tf {
                    *f.entry(t.as_str()).or_default() += n;
                    all += n;
                }
            }
        }
        let a = if group.is_empty() {
            0.0
        } else {
            all as f64 / group.len() as f64
        };
        (f, a)
    }
}

/// Counts terms of the given articles: MeSH headings when at least half of
/// them carry MeSH, otherwise title/abstract unigrams minus stopwords.
pub fn cluster_terms(articles: &[&Article]) -> ClusterTerms {
    let with_mesh = articles.iter().filter(|a| !a.mesh_terms.is_empty()).count();
    let mut tf = BTreeMap::new();
    let source = if !articles.is_empty() && 2 * with_mesh >= articles.len() {
        for a in articles {
            for t in &a.mesh_terms {
                let t = t.trim();
                if !t.is_empty() {
                    *tf.entry(t.to_string()).or_default() += 1;
                }
            }
        }
        TermSource::Mesh
    } else {
        for a in articles {
            for tok in tokenize(&a.text()) {
                if !is_stopword(&tok) && tok.chars().any(|c| c.is_alphabetic()) {
                    *tf.entry(tok).or_default() += 1;
                }
            }
        }
        TermSource::Text
    };
    ClusterTerms { source, tf }
}

/// Term statistics for every node in `tree`, each level contrasted separately.
pub fn aggregate_terms(tree: &ClusterTree, articles: &[Article]) -> TermStats {
    let by_pmid: HashMap<&str, &Article> = articles.iter().map(|a| (a.pmid.as_str(), a)).collect();
    let per_node: Vec<(u32, u32, ClusterTerms)> = tree
        .nodes
        .par_iter()
        .map(|node| {
            let members: Vec<&Article> = node
                .member_pmids
                .iter()
                .filter_map(|p| by_pmid.get(p.as_str()).copied())
                .collect();
            (node.cluster_id, node.level, cluster_terms(&members))
        })
        .collect();
    let mut stats = TermStats::default();
    for (id, level, terms) in per_node {
        stats.insert(id, level, terms);
    }
    stats
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTerm {
    pub term: String,
    pub score: f64,
}

fn rank(mut terms: Vec<ScoredTerm>) -> Vec<ScoredTerm> {
    terms.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.term.cmp(&b.term)));
    terms
}

fn weighted(stats: &TermStats, cluster_id: u32, group: &[u32]) -> Vec<ScoredTerm> {
    let Some(c) = stats.cluster(cluster_id) else {
        return Vec::new();
    };
    let (f, a) = stats.group_totals(group);
    rank(
        c.tf
            .iter()
            .map(|(t, &n)| {
                let ft = f.get(t.as_str()).copied().unwrap_or(n).max(1) as f64;
                ScoredTerm {
                    term: t.clone(),
                    score: n as f64 * (1.0 + a / ft).ln(),
                }
            })
            .collect(),
    )
}

/// `W(t, c) = tf(t, c) · ln(1 + A / f(t))` over the cluster's level.
pub fn ctfidf(stats: &TermStats, cluster_id: u32) -> Vec<ScoredTerm> {
    let peers = stats.peers(cluster_id);
    weighted(stats, cluster_id, &peers)
}

/// The same weighting with `f` and `A` taken over `sibling_group` only.
/// Groups of fewer than two clusters fall back to [`ctfidf`].
pub fn tree_tfidf(stats: &TermStats, cluster_id: u32, sibling_group: &[u32]) -> Vec<ScoredTerm> {
    if sibling_group.len() < 2 {
        return ctfidf(stats, cluster_id);
    }
    weighted(stats, cluster_id, sibling_group)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicLabel {
    pub cluster_id: u32,
    pub label: String,
    pub terms: Vec<ScoredTerm>,
}

/// Top `k` terms joined with `", "`; [`UNLABELED`] when there are none.
pub fn top_labels(cluster_id: u32, scored: &[ScoredTerm], k: usize) -> TopicLabel {
    let k = k.max(1);
    let terms: Vec<ScoredTerm> = rank(scored.to_vec()).into_iter().take(k).collect();
    let label = if terms.is_empty() {
        UNLABELED.to_string()
    } else {
        terms.iter().map(|t| t.term.as_str()).collect::<Vec<_>>().join(", ")
    };
    TopicLabel {
        cluster_id,
        label,
        terms,
    }
}

/// Labels every node: clusters with at least one sibling use tree TF-IDF,
/// the rest c-TF-IDF. Writes labels into the tree and returns them by id.
pub fn label_tree(tree: &mut ClusterTree, articles: &[Article], k: usize) -> Vec<TopicLabel> {
    let stats = aggregate_terms(tree, articles);
    let labels: Vec<TopicLabel> = tree
        .nodes
        .par_iter()
        .map(|node| {
            let siblings: Vec<u32> = if node.parent_id.is_some() {
                tree.siblings(node.cluster_id).iter().map(|n| n.cluster_id).collect()
            } else {
                Vec::new()
            };
            let scored = tree_tfidf(&stats, node.cluster_id, &siblings);
            top_labels(node.cluster_id, &scored, k)
        })
        .collect();
    for (node, l) in tree.nodes.iter_mut().zip(&labels) {
        node.label = Some(l.label.clone());
    }
    labels
}

const RELABEL_TITLES: usize = 5;

/// Optional pass asking `model` to phrase each label from its top terms and
/// a few member titles. A failed or empty reply keeps the term label.
/// Returns the number of clusters that kept their term label.
pub fn relabel_with_model(
    tree: &mut ClusterTree,
    labels: &mut [TopicLabel],
    articles: &[Article],
    model: &dyn ModelClient,
) -> usize {
    let titles: HashMap<&str, &str> = articles.iter().map(|a| (a.pmid.as_str(), a.title.as_str())).collect();
    let mut kept = 0;
    for l in labels.iter_mut() {
        let Some(node) = tree.nodes.iter_mut().find(|n| n.cluster_id == l.cluster_id) else {
            continue;
        };
        if l.terms.is_empty() {
            kept += 1;
            continue;
        }
        let mut members: Vec<&String> = node.member_pmids.iter().collect();
        members.sort();
        let req = ModelRequest::Label {
            terms: l.terms.iter().map(|t| t.term.clone()).collect(),
            titles: members
                .iter()
                .filter_map(|p| titles.get(p.as_str()).map(|t| t.to_string()))
                .take(RELABEL_TITLES)
                .collect(),
        };
        match model.complete(&req) {
            Ok(text) if !text.trim().is_empty() => {
                l.label = text.trim().to_string();
                node.label = Some(l.label.clone());
            }
            Ok(_) => kept += 1,
            Err(e) => {
                log::warn!("relabel of cluster {} failed: {e}", l.cluster_id);
                kept += 1;
            }
        }
    }
    kept
}

pub fn labels_to_json(labels: &[TopicLabel]) -> String {
    serde_json::to_string_pretty(labels).expect("labels serialise")
}

pub fn labels_from_json(s: &str) -> Result<Vec<TopicLabel>, serde_json::Error> {
    serde_json::from_str(s)
}
