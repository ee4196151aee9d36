//! A loaded dataset: persisted artifacts plus the indexes built over them
//! at load time (quadtree, keyword index, per-point cluster column).

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::agents::KeywordIndex;
use crate::bundling::{edges_from_json, BundledEdge};
use crate::clustering::{ClusterTree, NOISE};
use crate::corpus::{read_tsv_file, Corpus, DatasetManifest};
use crate::embedding::{load_embeddings, EmbeddingMatrix};
use crate::labeling::{labels_from_json, TopicLabel};
use crate::spatial::Quadtree;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {message}")]
    Artifact { path: String, message: String },
    #[error("dataset is inconsistent: {0}")]
    Inconsistent(String),
}

fn artifact_err(path: &Path, e: impl std::fmt::Display) -> DatasetError {
    DatasetError::Artifact {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[derive(Debug)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub corpus: Corpus,
    pub tree: Option<ClusterTree>,
    pub labels: Vec<TopicLabel>,
    pub edges: Vec<BundledEdge>,
    /// Rows in corpus order.
    pub embeddings: Option<EmbeddingMatrix>,
    /// Point `i` of the tree is article `i` of the corpus.
    pub spatial: Quadtree,
    pub keywords: KeywordIndex,
    /// Finest-level cluster id per article, [`NOISE`] when unassigned.
    pub point_cluster: Vec<i64>,
    cluster_index: HashMap<u32, usize>,
    label_index: HashMap<u32, usize>,
}

impl Dataset {
    /// Builds indexes over already-loaded artifacts. Every article must carry
    /// finite coordinates.
    pub fn assemble(
        manifest: DatasetManifest,
        corpus: Corpus,
        tree: Option<ClusterTree>,
        labels: Vec<TopicLabel>,
        edges: Vec<BundledEdge>,
        embeddings: Option<EmbeddingMatrix>,
    ) -> Result<Self, DatasetError> {
        let mut points = Vec::with_capacity(corpus.len());
        for a in corpus.articles() {
            match a.position() {
                Some((x, y)) => points.push((a.pmid.as_str(), [x, y])),
                None => {
                    return Err(DatasetError::Inconsistent(format!("article {} has no map coordinates", a.pmid)))
                }
            }
        }
        let spatial = Quadtree::build_default(&points).map_err(|e| DatasetError::Inconsistent(e.to_string()))?;
        let pmids: Vec<String> = corpus.pmids().map(str::to_string).collect();
        if let Some(m) = &embeddings {
            if m.row_ids() != pmids.as_slice() {
                return Err(DatasetError::Inconsistent("embedding rows are not aligned to the corpus".into()));
            }
        }
        let point_cluster = match &tree {
            Some(t) => t.assignments(&pmids, 0),
            None => vec![NOISE; pmids.len()],
        };
        let cluster_index = tree
            .as_ref()
            .map(|t| t.nodes.iter().enumerate().map(|(i, n)| (n.cluster_id, i)).collect())
            .unwrap_or_default();
        let label_index = labels.iter().enumerate().map(|(i, l)| (l.cluster_id, i)).collect();
        let keywords = KeywordIndex::build(corpus.articles());
        Ok(Dataset {
            manifest,
            corpus,
            tree,
            labels,
            edges,
            embeddings,
            spatial,
            keywords,
            point_cluster,
            cluster_index,
            label_index,
        })
    }

    /// Loads `dir/manifest.json` and every artifact it lists.
    pub fn load(dir: &Path) -> Result<Self, DatasetError> {
        let mpath = dir.join(MANIFEST_FILE);
        let bytes = std::fs::read(&mpath).map_err(|e| artifact_err(&mpath, e))?;
        let manifest: DatasetManifest = serde_json::from_slice(&bytes).map_err(|e| artifact_err(&mpath, e))?;
        let a = &manifest.artifacts;

        let tsv = dir.join(&a.map_tsv);
        let corpus = read_tsv_file(&tsv).map_err(|e| artifact_err(&tsv, e))?;
        if corpus.len() != manifest.n_articles {
            return Err(DatasetError::Inconsistent(format!(
                "manifest lists {} articles, map has {}",
                manifest.n_articles,
                corpus.len()
            )));
        }
        let tree = match &a.cluster_tree {
            Some(p) => {
                let path = dir.join(p);
                let s = std::fs::read_to_string(&path).map_err(|e| artifact_err(&path, e))?;
                Some(ClusterTree::from_json(&s).map_err(|e| artifact_err(&path, e))?)
            }
            None => None,
        };
        let labels = match &a.labels {
            Some(p) => {
                let path = dir.join(p);
                let s = std::fs::read_to_string(&path).map_err(|e| artifact_err(&path, e))?;
                labels_from_json(&s).map_err(|e| artifact_err(&path, e))?
            }
            None => Vec::new(),
        };
        let edges = match &a.edges {
            Some(p) => {
                let path = dir.join(p);
                let s = std::fs::read_to_string(&path).map_err(|e| artifact_err(&path, e))?;
                edges_from_json(&s).map_err(|e| artifact_err(&path, e))?
            }
            None => Vec::new(),
        };
        let embeddings = match &a.embeddings {
            Some(p) => {
                let path = dir.join(p);
                let ids: Vec<String> = corpus.pmids().map(str::to_string).collect();
                Some(load_embeddings(&path, &ids).map_err(|e| artifact_err(&path, e))?)
            }
            None => None,
        };
        Self::assemble(manifest, corpus, tree, labels, edges, embeddings)
    }

    pub fn id(&self) -> &str {
        &self.manifest.dataset_id
    }

    pub fn len(&self) -> usize {
        self.corpus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corpus.is_empty()
    }

    pub fn has_cluster(&self, id: u32) -> bool {
        self.cluster_index.contains_key(&id)
    }

    pub fn cluster_members(&self, id: u32) -> Option<&[String]> {
        let t = self.tree.as_ref()?;
        self.cluster_index.get(&id).map(|&i| t.nodes[i].member_pmids.as_slice())
    }

    pub fn label(&self, id: u32) -> Option<&TopicLabel> {
        self.label_index.get(&id).map(|&i| &self.labels[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Article, ManifestArtifacts};

    pub(crate) fn manifest(n: usize) -> DatasetManifest {
        DatasetManifest {
            dataset_id: "t".into(),
            n_articles: n,
            artifacts: ManifestArtifacts {
                map_tsv: "map.tsv".into(),
                ..Default::default()
            },
            pipeline_config_digest: String::new(),
            seed: 0,
        }
    }

    #[test]
    fn assemble_requires_coordinates() {
        let mut a = Article::new("1");
        a.x = Some(0.0);
        let corpus = Corpus::new(vec![a]).unwrap();
        let err = Dataset::assemble(manifest(1), corpus, None, vec![], vec![], None).unwrap_err();
        assert!(err.to_string().contains("article 1"));
    }

    #[test]
    fn load_reports_missing_manifest() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(Dataset::load(dir.path()), Err(DatasetError::Artifact { .. })));
    }
}
