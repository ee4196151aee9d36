//! Offline pipeline: ingest → embed → layout → cluster → label → bundle →
//! persist, each stage reading and writing files in one output directory.

mod config;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bundling::{bundle_edges, citation_edges, co_citation_edges, edges_to_json, RawEdge};
use crate::clustering::{build_hierarchy, ClusterTree, NOISE};
use crate::corpus::{read_tsv_file, write_tsv, Corpus, DatasetManifest, ManifestArtifacts};
use crate::dataset::MANIFEST_FILE;
use crate::embedding::{embed_hashed_tfidf, load_embeddings, EmbeddingMatrix};
use crate::labeling::{label_tree, labels_to_json, relabel_with_model};
use crate::layout::{build_knn_graph, fit_largevis, fit_tsne_exact, LayoutMethod, LayoutReport};
use crate::model::ModelClient;

pub use config::PipelineConfig;

pub const MAP_TSV: &str = "map.tsv";
pub const EMBEDDINGS: &str = "embeddings.emb";
pub const LAYOUT_REPORT: &str = "layout_report.json";
pub const CLUSTERS: &str = "clusters.json";
pub const LABELS: &str = "labels.json";
pub const RAW_EDGES: &str = "raw_edges.json";
pub const EDGES: &str = "edges.json";
pub const STATE: &str = "pipeline_state.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Embed,
    Layout,
    Cluster,
    Label,
    Bundle,
    Persist,
}

pub const STAGES: [Stage; 7] = [
    Stage::Ingest,
    Stage::Embed,
    Stage::Layout,
    Stage::Cluster,
    Stage::Label,
    Stage::Bundle,
    Stage::Persist,
];

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Embed => "embed",
            Stage::Layout => "layout",
            Stage::Cluster => "cluster",
            Stage::Label => "label",
            Stage::Bundle => "bundle",
            Stage::Persist => "persist",
        }
    }

    /// Files this stage creates.
    fn outputs(self) -> &'static [&'static str] {
        match self {
            Stage::Ingest => &[MAP_TSV, RAW_EDGES],
            Stage::Embed => &[EMBEDDINGS],
            Stage::Layout => &[LAYOUT_REPORT],
            Stage::Cluster => &[CLUSTERS],
            Stage::Label => &[LABELS],
            Stage::Bundle => &[EDGES],
            Stage::Persist => &[MANIFEST_FILE],
        }
    }

    fn skippable(self) -> bool {
        matches!(self, Stage::Layout | Stage::Cluster | Stage::Label | Stage::Bundle)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "ingest" => Stage::Ingest,
            "embed" | "embedding" | "embeddings" => Stage::Embed,
            "layout" => Stage::Layout,
            "cluster" | "clustering" => Stage::Cluster,
            "label" | "labeling" | "labels" => Stage::Label,
            "bundle" | "bundling" | "edges" => Stage::Bundle,
            "persist" | "finalize" | "manifest" => Stage::Persist,
            other => return Err(format!("unknown stage {other:?}")),
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("stage {stage} needs {artifact}; run the {producer} stage first")]
    Prerequisite {
        stage: Stage,
        artifact: &'static str,
        producer: Stage,
    },
    #[error("stage {stage} failed: {message}")]
    Stage { stage: Stage, message: String },
}

impl PipelineError {
    /// 2 for validation problems, 3 for stage failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation(_) | PipelineError::Prerequisite { .. } => 2,
            PipelineError::Stage { .. } => 3,
        }
    }
}

fn stage_err(stage: Stage, e: impl fmt::Display) -> PipelineError {
    PipelineError::Stage {
        stage,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbeddingSource {
    File(PathBuf),
    TestEmbedder,
    Missing,
}

#[derive(Debug, Clone)]
pub struct PipelineInputs {
    pub input: PathBuf,
    pub embeddings: EmbeddingSource,
    /// Edge list (`source target [weight]`) or citing lists (`citing cited`).
    pub edges: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FailedStage {
    stage: Stage,
    error: String,
}

/// Stage marker kept next to the intermediates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PipelineState {
    config_digest: String,
    input_digest: String,
    skip: Vec<Stage>,
    completed: Vec<Stage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    failed: Option<FailedStage>,
}

fn write_file(stage: Stage, path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    std::fs::write(path, bytes).map_err(|e| stage_err(stage, format!("{}: {e}", path.display())))
}

fn require(dir: &Path, stage: Stage, artifact: &'static str, producer: Stage) -> Result<PathBuf, PipelineError> {
    let p = dir.join(artifact);
    if p.is_file() {
        Ok(p)
    } else {
        Err(PipelineError::Prerequisite {
            stage,
            artifact,
            producer,
        })
    }
}

fn read_map(dir: &Path, stage: Stage) -> Result<Corpus, PipelineError> {
    let p = require(dir, stage, MAP_TSV, Stage::Ingest)?;
    read_tsv_file(&p).map_err(|e| stage_err(stage, e))
}

fn write_map(dir: &Path, stage: Stage, corpus: &Corpus) -> Result<(), PipelineError> {
    let mut buf = Vec::new();
    write_tsv(corpus, &mut buf).map_err(|e| stage_err(stage, e))?;
    write_file(stage, &dir.join(MAP_TSV), &buf)
}

fn remove_outputs(dir: &Path, stage: Stage) {
    for f in stage.outputs() {
        let _ = std::fs::remove_file(dir.join(f));
    }
}

/// Reads an edge input. A header with `citing` and `cited` columns gives
/// co-citation edges at `threshold`; `source` and `target` give direct
/// edges, weighted by a `weight` column or by multiplicity.
pub fn read_edge_input(path: &Path, pmids: &HashSet<String>, threshold: u32) -> Result<Vec<RawEdge>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or("edge file is empty")?.split('\t').map(str::trim).collect();
    let col = |name: &str| header.iter().position(|h| *h == name);
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split('\t').map(str::trim).collect()).collect();
    let cell = |row: &[&str], i: usize, line: usize| -> Result<String, String> {
        row.get(i).map(|s| s.to_string()).ok_or_else(|| format!("line {line}: missing column {}", header[i]))
    };
    if let (Some(ci), Some(cd)) = (col("citing"), col("cited")) {
        let mut lists = Vec::new();
        for (k, r) in rows.iter().enumerate() {
            let citing = cell(r, ci, k + 2)?;
            let cited: Vec<String> = cell(r, cd, k + 2)?
                .split([';', ','])
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            lists.push((citing, cited));
        }
        return Ok(co_citation_edges(lists.iter().map(|(c, l)| (c.as_str(), l.as_slice())), pmids, threshold));
    }
    let (Some(si), Some(ti)) = (col("source"), col("target")) else {
        return Err("edge file header needs citing/cited or source/target columns".into());
    };
    if let Some(wi) = col("weight") {
        let mut out = Vec::new();
        let mut dropped = 0;
        for (k, r) in rows.iter().enumerate() {
            let (s, t) = (cell(r, si, k + 2)?, cell(r, ti, k + 2)?);
            let w: f64 = cell(r, wi, k + 2)?
                .parse()
                .map_err(|_| format!("line {}: weight is not a number", k + 2))?;
            if !(w > 0.0 && w.is_finite()) {
                return Err(format!("line {}: weight must be positive", k + 2));
            }
            if s == t || !pmids.contains(&s) || !pmids.contains(&t) {
                dropped += 1;
                continue;
            }
            out.push(RawEdge {
                source: s,
                target: t,
                weight: w,
            });
        }
        if dropped > 0 {
            log::warn!("{dropped} edges dropped: self-loops or endpoints outside the dataset");
        }
        return Ok(out);
    }
    let pairs: Vec<(String, String)> = rows
        .iter()
        .enumerate()
        .map(|(k, r)| Ok((cell(r, si, k + 2)?, cell(r, ti, k + 2)?)))
        .collect::<Result<_, String>>()?;
    Ok(citation_edges(pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())), pmids))
}

/// Parses and normalizes the input corpus into `map.tsv`; derives raw edges
/// when an edge input is given.
pub fn stage_ingest(
    input: &Path,
    edges: Option<&Path>,
    config: &PipelineConfig,
    dir: &Path,
) -> Result<Corpus, PipelineError> {
    let mut corpus = read_tsv_file(input).map_err(|e| PipelineError::Validation(format!("{}: {e}", input.display())))?;
    if corpus.is_empty() {
        return Err(PipelineError::Validation(format!("{} has no articles", input.display())));
    }
    corpus.normalize_text_fields();
    write_map(dir, Stage::Ingest, &corpus)?;
    let raw = dir.join(RAW_EDGES);
    match edges {
        Some(path) => {
            let pmids: HashSet<String> = corpus.pmids().map(str::to_string).collect();
            let edges = read_edge_input(path, &pmids, config.cocitation_threshold)
                .map_err(|e| PipelineError::Validation(format!("edge input: {e}")))?;
            let json = serde_json::to_vec_pretty(&edges).expect("edges serialize");
            write_file(Stage::Ingest, &raw, &json)?;
        }
        None => {
            let _ = std::fs::remove_file(raw);
        }
    }
    Ok(corpus)
}

/// Writes `embeddings.emb` aligned to the map rows.
pub fn stage_embed(source: &EmbeddingSource, config: &PipelineConfig, dir: &Path) -> Result<EmbeddingMatrix, PipelineError> {
    let corpus = read_map(dir, Stage::Embed)?;
    let matrix = match source {
        EmbeddingSource::File(path) => {
            let ids: Vec<String> = corpus.pmids().map(str::to_string).collect();
            load_embeddings(path, &ids).map_err(|e| stage_err(Stage::Embed, format!("{}: {e}", path.display())))?
        }
        EmbeddingSource::TestEmbedder => {
            let h = embed_hashed_tfidf(corpus.articles(), config.embedding_dim, config.seed)
                .map_err(|e| stage_err(Stage::Embed, e))?;
            if !h.empty_rows.is_empty() {
                log::warn!("{} articles have no text and zero embeddings", h.empty_rows.len());
            }
            h.matrix
        }
        EmbeddingSource::Missing => {
            return Err(stage_err(
                Stage::Embed,
                "no embeddings source: pass --embeddings FILE or --test-embedder",
            ))
        }
    };
    let mut buf = Vec::new();
    matrix.write_binary(&mut buf).map_err(|e| stage_err(Stage::Embed, e))?;
    write_file(Stage::Embed, &dir.join(EMBEDDINGS), &buf)?;
    Ok(matrix)
}

/// Fits the 2D layout and writes coordinates into `map.tsv`.
pub fn stage_layout(config: &PipelineConfig, dir: &Path) -> Result<LayoutReport, PipelineError> {
    let mut corpus = read_map(dir, Stage::Layout)?;
    let emb_path = require(dir, Stage::Layout, EMBEDDINGS, Stage::Embed)?;
    let ids: Vec<String> = corpus.pmids().map(str::to_string).collect();
    let matrix = load_embeddings(&emb_path, &ids).map_err(|e| stage_err(Stage::Layout, e))?;
    let layout = match config.layout_method {
        LayoutMethod::Largevis => {
            let graph = build_knn_graph(&matrix, config.layout_k, config.layout_perplexity)
                .map_err(|e| stage_err(Stage::Layout, e))?;
            fit_largevis(&graph, config.seed, &config.largevis).map_err(|e| stage_err(Stage::Layout, e))?
        }
        LayoutMethod::Tsne => {
            fit_tsne_exact(&matrix, config.tsne_perplexity, config.seed, &config.tsne).map_err(|e| stage_err(Stage::Layout, e))?
        }
    };
    let mut coords = layout.coordinates.iter();
    corpus.update(|a| {
        let p = coords.next().expect("one coordinate per article");
        a.set_position(p[0], p[1]);
        a.set_color(None);
    });
    write_map(dir, Stage::Layout, &corpus)?;
    let report = layout.report();
    let json = serde_json::to_vec_pretty(&report).expect("report serializes");
    write_file(Stage::Layout, &dir.join(LAYOUT_REPORT), &json)?;
    Ok(report)
}

fn positions(corpus: &Corpus, stage: Stage) -> Result<Vec<[f64; 2]>, PipelineError> {
    corpus
        .articles()
        .iter()
        .map(|a| {
            a.position().map(|(x, y)| [x, y]).ok_or(PipelineError::Prerequisite {
                stage,
                artifact: "map coordinates",
                producer: Stage::Layout,
            })
        })
        .collect()
}

/// Builds the cluster hierarchy on map coordinates; writes `clusters.json`
/// and the finest-level cluster id into the map's color column.
pub fn stage_cluster(config: &PipelineConfig, dir: &Path) -> Result<ClusterTree, PipelineError> {
    let mut corpus = read_map(dir, Stage::Cluster)?;
    let points = positions(&corpus, Stage::Cluster)?;
    let pmids: Vec<String> = corpus.pmids().map(str::to_string).collect();
    let tree = build_hierarchy(&points, &pmids, &config.schedule(pmids.len()), config.theta)
        .map_err(|e| stage_err(Stage::Cluster, e))?;
    let assign = tree.assignments(&pmids, 0);
    let mut it = assign.iter();
    corpus.update(|a| {
        let c = *it.next().expect("one assignment per article");
        a.set_color(Some(if c == NOISE { NOISE.to_string() } else { c.to_string() }));
    });
    write_map(dir, Stage::Cluster, &corpus)?;
    write_file(Stage::Cluster, &dir.join(CLUSTERS), tree.to_json().as_bytes())?;
    Ok(tree)
}

/// Labels every cluster; rewrites `clusters.json` with labels and writes
/// `labels.json`.
pub fn stage_label(
    config: &PipelineConfig,
    dir: &Path,
    model: Option<&dyn ModelClient>,
) -> Result<usize, PipelineError> {
    let corpus = read_map(dir, Stage::Label)?;
    let tree_path = require(dir, Stage::Label, CLUSTERS, Stage::Cluster)?;
    let text = std::fs::read_to_string(&tree_path).map_err(|e| stage_err(Stage::Label, e))?;
    let mut tree = ClusterTree::from_json(&text).map_err(|e| stage_err(Stage::Label, e))?;
    let mut labels = label_tree(&mut tree, corpus.articles(), config.label_terms);
    if config.relabel_with_model {
        match model {
            Some(m) => {
                let kept = relabel_with_model(&mut tree, &mut labels, corpus.articles(), m);
                log::info!("model relabel kept {kept} term labels");
            }
            None => log::warn!("labeling.model_relabel is set but no model client was given"),
        }
    }
    write_file(Stage::Label, &dir.join(CLUSTERS), tree.to_json().as_bytes())?;
    write_file(Stage::Label, &dir.join(LABELS), labels_to_json(&labels).as_bytes())?;
    Ok(labels.len())
}

/// Bundles the raw edges, if any, into `edges.json`. Returns the number of
/// edges written, or `None` when there was no edge input.
pub fn stage_bundle(config: &PipelineConfig, dir: &Path) -> Result<Option<usize>, PipelineError> {
    let raw_path = dir.join(RAW_EDGES);
    if !raw_path.is_file() {
        let _ = std::fs::remove_file(dir.join(EDGES));
        log::info!("no edge input; edges artifact omitted");
        return Ok(None);
    }
    let corpus = read_map(dir, Stage::Bundle)?;
    let points = positions(&corpus, Stage::Bundle)?;
    let coords: HashMap<String, [f64; 2]> = corpus.pmids().map(str::to_string).zip(points).collect();
    let raw: Vec<RawEdge> = serde_json::from_slice(&std::fs::read(&raw_path).map_err(|e| stage_err(Stage::Bundle, e))?)
        .map_err(|e| stage_err(Stage::Bundle, e))?;
    let result = bundle_edges(&raw, &coords, &config.bundle).map_err(|e| stage_err(Stage::Bundle, e))?;
    log::info!(
        "bundled {} edges: {} segments resampled, {} after simplification",
        result.edges.len(),
        result.unsimplified_segments,
        result.simplified_segments
    );
    write_file(Stage::Bundle, &dir.join(EDGES), edges_to_json(&result.edges).as_bytes())?;
    Ok(Some(result.edges.len()))
}

/// Writes `manifest.json` listing the artifacts present in `dir`.
pub fn stage_persist(config: &PipelineConfig, dir: &Path) -> Result<DatasetManifest, PipelineError> {
    let corpus = read_map(dir, Stage::Persist)?;
    positions(&corpus, Stage::Persist)?;
    let present = |f: &str| dir.join(f).is_file().then(|| f.to_string());
    let manifest = DatasetManifest {
        dataset_id: config.dataset_id.clone(),
        n_articles: corpus.len(),
        artifacts: ManifestArtifacts {
            map_tsv: MAP_TSV.into(),
            cluster_tree: present(CLUSTERS),
            labels: present(LABELS),
            edges: present(EDGES),
            embeddings: present(EMBEDDINGS),
        },
        pipeline_config_digest: config.digest(),
        seed: config.seed,
    };
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_file(Stage::Persist, &dir.join(MANIFEST_FILE), &json)?;
    Ok(manifest)
}

fn input_digest(inputs: &PipelineInputs, config: &PipelineConfig) -> Result<String, PipelineError> {
    let mut h = Sha256::new();
    let mut add = |label: &str, path: &Path| -> Result<(), PipelineError> {
        let bytes = std::fs::read(path).map_err(|e| PipelineError::Validation(format!("{}: {e}", path.display())))?;
        h.update(label.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
        Ok(())
    };
    add("input", &inputs.input)?;
    if let Some(e) = &inputs.edges {
        add("edges", e)?;
    }
    match &inputs.embeddings {
        EmbeddingSource::File(p) => {
            if p.is_file() {
                add("embeddings", p)?;
            } else {
                h.update(b"embeddings-missing");
            }
        }
        EmbeddingSource::TestEmbedder => h.update(format!("test-embedder:{}", config.embedding_dim).as_bytes()),
        EmbeddingSource::Missing => h.update(b"none"),
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn write_state(dir: &Path, state: &PipelineState) {
    let json = serde_json::to_vec_pretty(state).expect("state serializes");
    if let Err(e) = std::fs::write(dir.join(STATE), json) {
        log::warn!("could not write stage marker: {e}");
    }
}

/// Runs every stage not in `skip`. Stages completed by an earlier run with
/// the same config, inputs and skip set are not repeated. The manifest is
/// written last and is absent after any failure.
pub fn run_pipeline(
    inputs: &PipelineInputs,
    config: &PipelineConfig,
    dir: &Path,
    skip: &[Stage],
    model: Option<&dyn ModelClient>,
) -> Result<DatasetManifest, PipelineError> {
    config.validate().map_err(PipelineError::Validation)?;
    let mut skip: Vec<Stage> = skip.to_vec();
    if let Some(s) = skip.iter().find(|s| !s.skippable()) {
        return Err(PipelineError::Validation(format!("stage {s} cannot be skipped")));
    }
    if skip.contains(&Stage::Cluster) && !skip.contains(&Stage::Label) {
        log::info!("label stage skipped because cluster is skipped");
        skip.push(Stage::Label);
    }
    skip.sort();
    skip.dedup();
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::Validation(format!("{}: {e}", dir.display())))?;
    let _ = std::fs::remove_file(dir.join(MANIFEST_FILE));

    let config_digest = config.digest();
    let input_digest = input_digest(inputs, config)?;
    let previous: Option<PipelineState> = std::fs::read(dir.join(STATE))
        .ok()
        .and_then(|b| serde_json::from_slice(&b).ok());
    let completed = match previous {
        Some(p) if p.config_digest == config_digest && p.input_digest == input_digest && p.skip == skip => p.completed,
        _ => {
            for s in STAGES {
                remove_outputs(dir, s);
            }
            Vec::new()
        }
    };
    let mut state = PipelineState {
        config_digest,
        input_digest,
        skip: skip.clone(),
        completed: Vec::new(),
        failed: None,
    };
    let mut upstream_ran = false;
    for stage in STAGES {
        if skip.contains(&stage) {
            remove_outputs(dir, stage);
            log::info!("{stage}: skipped");
            continue;
        }
        if !upstream_ran && completed.contains(&stage) && stage != Stage::Persist {
            log::info!("{stage}: up to date");
            state.completed.push(stage);
            continue;
        }
        upstream_ran = true;
        log::info!("{stage}: running");
        let outcome = match stage {
            Stage::Ingest => stage_ingest(&inputs.input, inputs.edges.as_deref(), config, dir).map(|_| ()),
            Stage::Embed => stage_embed(&inputs.embeddings, config, dir).map(|_| ()),
            Stage::Layout => stage_layout(config, dir).map(|_| ()),
            Stage::Cluster => stage_cluster(config, dir).map(|_| ()),
            Stage::Label => stage_label(config, dir, model).map(|_| ()),
            Stage::Bundle => stage_bundle(config, dir).map(|_| ()),
            Stage::Persist => {
                state.completed.push(stage);
                write_state(dir, &state);
                stage_persist(config, dir).map(|_| ())
            }
        };
        if let Err(e) = outcome {
            state.completed.retain(|s| *s != stage);
            state.failed = Some(FailedStage {
                stage,
                error: e.to_string(),
            });
            write_state(dir, &state);
            let _ = std::fs::remove_file(dir.join(MANIFEST_FILE));
            return Err(e);
        }
        if stage != Stage::Persist {
            state.completed.push(stage);
            write_state(dir, &state);
        }
    }
    let bytes = std::fs::read(dir.join(MANIFEST_FILE)).map_err(|e| stage_err(Stage::Persist, e))?;
    serde_json::from_slice(&bytes).map_err(|e| stage_err(Stage::Persist, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{citing_lists, literature_corpus};

    fn fixture(dir: &Path, n: usize) -> PipelineInputs {
        let corpus = Corpus::new(literature_corpus(n, 7)).unwrap();
        let input = dir.join("input.tsv");
        let mut buf = Vec::new();
        write_tsv(&corpus, &mut buf).unwrap();
        std::fs::write(&input, buf).unwrap();
        let cites = citing_lists(corpus.articles(), 3 * n, 8);
        let mut e = String::from("citing\tcited\n");
        for (c, l) in &cites {
            e.push_str(&format!("{c}\t{}\n", l.join(";")));
        }
        let edges = dir.join("citing.tsv");
        std::fs::write(&edges, e).unwrap();
        PipelineInputs {
            input,
            embeddings: EmbeddingSource::TestEmbedder,
            edges: Some(edges),
        }
    }

    fn quick_config() -> PipelineConfig {
        let mut c = PipelineConfig::with_seed(42);
        c.embedding_dim = 64;
        c.largevis.n_updates = Some(20_000);
        c.bundle.iterations = 3;
        c
    }

    #[test]
    fn full_run_writes_every_artifact_and_loads() {
        let tmp = tempfile::tempdir().unwrap();
        let inputs = fixture(tmp.path(), 90);
        let out = tmp.path().join("out");
        let m = run_pipeline(&inputs, &quick_config(), &out, &[], None).unwrap();
        assert_eq!(m.n_articles, 90);
        assert_eq!(m.artifacts.edges.as_deref(), Some(EDGES));
        assert_eq!(m.pipeline_config_digest, quick_config().digest());
        let ds = crate::dataset::Dataset::load(&out).unwrap();
        assert_eq!(ds.len(), 90);
        assert!(ds.tree.is_some() && !ds.labels.is_empty());
    }

    #[test]
    fn skip_bundle_omits_edges() {
        let tmp = tempfile::tempdir().unwrap();
        let mut inputs = fixture(tmp.path(), 60);
        inputs.edges = None;
        let out = tmp.path().join("out");
        let m = run_pipeline(&inputs, &quick_config(), &out, &["bundling".parse().unwrap()], None).unwrap();
        assert!(m.artifacts.edges.is_none());
        assert!(!out.join(EDGES).exists());
    }

    #[test]
    fn missing_embeddings_fail_at_embed_without_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        let mut inputs = fixture(tmp.path(), 40);
        inputs.embeddings = EmbeddingSource::File(tmp.path().join("absent.emb"));
        let out = tmp.path().join("out");
        match run_pipeline(&inputs, &quick_config(), &out, &[], None) {
            Err(e @ PipelineError::Stage { stage: Stage::Embed, .. }) => assert_eq!(e.exit_code(), 3),
            other => panic!("{other:?}"),
        }
        assert!(!out.join(MANIFEST_FILE).exists());
        assert!(out.join(MAP_TSV).exists());
        let state: PipelineState = serde_json::from_slice(&std::fs::read(out.join(STATE)).unwrap()).unwrap();
        assert_eq!(state.completed, vec![Stage::Ingest]);
        assert_eq!(state.failed.unwrap().stage, Stage::Embed);
    }

    #[test]
    fn label_before_cluster_names_the_artifact() {
        let tmp = tempfile::tempdir().unwrap();
        let inputs = fixture(tmp.path(), 40);
        let out = tmp.path();
        stage_ingest(&inputs.input, None, &quick_config(), out).unwrap();
        let e = stage_label(&quick_config(), out, None).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains(CLUSTERS));
    }

    #[test]
    fn resume_skips_completed_stages_and_matches() {
        let tmp = tempfile::tempdir().unwrap();
        let inputs = fixture(tmp.path(), 50);
        let out = tmp.path().join("out");
        run_pipeline(&inputs, &quick_config(), &out, &[], None).unwrap();
        let first = std::fs::read(out.join(MAP_TSV)).unwrap();
        std::fs::remove_file(out.join(MANIFEST_FILE)).unwrap();
        run_pipeline(&inputs, &quick_config(), &out, &[], None).unwrap();
        assert_eq!(std::fs::read(out.join(MAP_TSV)).unwrap(), first);
        assert!(out.join(MANIFEST_FILE).exists());
    }

    #[test]
    fn persist_cannot_be_skipped() {
        let tmp = tempfile::tempdir().unwrap();
        let inputs = fixture(tmp.path(), 30);
        let e = run_pipeline(&inputs, &quick_config(), tmp.path(), &[Stage::Persist], None).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn edge_inputs_in_both_layouts() {
        let tmp = tempfile::tempdir().unwrap();
        let pmids: HashSet<String> = ["1", "2", "3"].iter().map(|s| s.to_string()).collect();
        let direct = tmp.path().join("d.tsv");
        std::fs::write(&direct, "source\ttarget\tweight\n1\t2\t3\n2\t2\t1\n1\t9\t1\n").unwrap();
        let e = read_edge_input(&direct, &pmids, 2).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].weight, 3.0);
        let co = tmp.path().join("c.tsv");
        std::fs::write(&co, "citing\tcited\nA\t1;2\nB\t1;2;3\nC\t2;3\n").unwrap();
        let e = read_edge_input(&co, &pmids, 2).unwrap();
        assert_eq!(e.len(), 2);
        assert!(read_edge_input(&co, &pmids, 3).unwrap().is_empty());
    }
}
