//! Flat `key = value` pipeline configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::bundling::{BundleConfig, GradientMode};
use crate::clustering::LevelParams;
use crate::labeling::{DEFAULT_LABEL_TERMS, STOPWORDS_VERSION};
use crate::layout::{LargeVisConfig, LayoutMethod, TsneConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub dataset_id: String,
    pub embedding_dim: usize,
    pub layout_method: LayoutMethod,
    pub layout_k: usize,
    pub layout_perplexity: f64,
    pub largevis: LargeVisConfig,
    pub tsne_perplexity: f64,
    pub tsne: TsneConfig,
    /// Minimum cluster size per level as a fraction of n, finest first.
    pub cluster_fractions: Vec<f64>,
    pub cluster_min_size_floor: usize,
    pub cluster_min_samples: usize,
    pub theta: f64,
    pub label_terms: usize,
    pub stopwords: String,
    pub relabel_with_model: bool,
    pub bundle: BundleConfig,
    pub cocitation_threshold: u32,
}

impl PipelineConfig {
    pub fn with_seed(seed: u64) -> Self {
        let lv = LargeVisConfig::default();
        PipelineConfig {
            seed,
            dataset_id: "dataset".into(),
            embedding_dim: 256,
            layout_method: LayoutMethod::Largevis,
            layout_k: 15,
            layout_perplexity: 5.0,
            largevis: lv,
            tsne_perplexity: 30.0,
            tsne: TsneConfig::default(),
            cluster_fractions: vec![0.005, 0.02, 0.08],
            cluster_min_size_floor: 5,
            cluster_min_samples: 5,
            theta: 0.6,
            label_terms: DEFAULT_LABEL_TERMS,
            stopwords: STOPWORDS_VERSION.into(),
            relabel_with_model: false,
            bundle: BundleConfig::default(),
            cocitation_threshold: 2,
        }
    }

    /// Level schedule for `n` points: `max(floor, round(n·q))` per level,
    /// with sizes and `min_samples` capped at `n − 1`.
    pub fn schedule(&self, n: usize) -> Vec<LevelParams> {
        let cap = n.saturating_sub(1).max(1);
        self.cluster_fractions
            .iter()
            .map(|q| LevelParams {
                min_cluster_size: ((n as f64 * q).round() as usize).max(self.cluster_min_size_floor).min(cap).max(2),
                min_samples: self.cluster_min_samples.min(cap),
            })
            .collect()
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let lv = &self.largevis;
        let b = &self.bundle;
        let fractions: Vec<String> = self.cluster_fractions.iter().map(f64::to_string).collect();
        vec![
            ("seed", self.seed.to_string()),
            ("dataset_id", self.dataset_id.clone()),
            ("embedding.dim", self.embedding_dim.to_string()),
            (
                "layout.method",
                match self.layout_method {
                    LayoutMethod::Largevis => "largevis".into(),
                    LayoutMethod::Tsne => "tsne".into(),
                },
            ),
            ("layout.k", self.layout_k.to_string()),
            ("layout.perplexity", self.layout_perplexity.to_string()),
            ("layout.negatives", lv.negatives.to_string()),
            ("layout.gamma", lv.gamma.to_string()),
            ("layout.rho0", lv.rho0.to_string()),
            ("layout.updates", lv.n_updates.map(|u| u.to_string()).unwrap_or_else(|| "auto".into())),
            ("layout.tsne_perplexity", self.tsne_perplexity.to_string()),
            ("layout.tsne_iterations", self.tsne.iterations.to_string()),
            ("clustering.fractions", fractions.join(",")),
            ("clustering.min_size_floor", self.cluster_min_size_floor.to_string()),
            ("clustering.min_samples", self.cluster_min_samples.to_string()),
            ("clustering.theta", self.theta.to_string()),
            ("labeling.k", self.label_terms.to_string()),
            ("labeling.stopwords", self.stopwords.clone()),
            ("labeling.model_relabel", self.relabel_with_model.to_string()),
            ("bundling.resolution", b.resolution.to_string()),
            ("bundling.h0_fraction", b.h0_fraction.to_string()),
            ("bundling.decay", b.decay.to_string()),
            ("bundling.iterations", b.iterations.to_string()),
            ("bundling.step", b.step.to_string()),
            ("bundling.smoothing", b.smoothing.to_string()),
            ("bundling.max_segment_fraction", b.max_segment_fraction.to_string()),
            (
                "bundling.gradient",
                match b.gradient {
                    GradientMode::Analytic => "analytic".into(),
                    GradientMode::Grid => "grid".into(),
                },
            ),
            ("bundling.cocitation_threshold", self.cocitation_threshold.to_string()),
        ]
    }

    /// Every key with its resolved value, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            writeln!(s, "{k} = {v}").unwrap();
        }
        s
    }

    /// SHA-256 of [`to_text`](Self::to_text), hex encoded.
    pub fn digest(&self) -> String {
        Sha256::digest(self.to_text().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", no + 1))?;
            let k = k.trim().to_string();
            if kv.insert(k.clone(), (no + 1, v.trim().to_string())).is_some() {
                return Err(format!("line {}: duplicate key {k}", no + 1));
            }
        }
        let (_, seed) = kv.remove("seed").ok_or("seed is required")?;
        let seed: u64 = seed.parse().map_err(|_| format!("seed {seed:?} is not an unsigned integer"))?;
        let mut c = PipelineConfig::with_seed(seed);
        for (k, (line, v)) in kv {
            let bad = |what: &str| format!("line {line}: {k} = {v:?}: {what}");
            macro_rules! num {
                ($t:ty) => {
                    v.parse::<$t>().map_err(|_| bad("not a number"))?
                };
            }
            match k.as_str() {
                "dataset_id" => c.dataset_id = v.clone(),
                "embedding.dim" => c.embedding_dim = num!(usize),
                "layout.method" => {
                    c.layout_method = match v.as_str() {
                        "largevis" => LayoutMethod::Largevis,
                        "tsne" => LayoutMethod::Tsne,
                        _ => return Err(bad("expected largevis or tsne")),
                    }
                }
                "layout.k" => c.layout_k = num!(usize),
                "layout.perplexity" => c.layout_perplexity = num!(f64),
                "layout.negatives" => c.largevis.negatives = num!(usize),
                "layout.gamma" => c.largevis.gamma = num!(f64),
                "layout.rho0" => c.largevis.rho0 = num!(f64),
                "layout.updates" => c.largevis.n_updates = if v == "auto" { None } else { Some(num!(u64)) },
                "layout.tsne_perplexity" => c.tsne_perplexity = num!(f64),
                "layout.tsne_iterations" => c.tsne.iterations = num!(usize),
                "clustering.fractions" => {
                    c.cluster_fractions = v
                        .split(',')
                        .map(|s| s.trim().parse::<f64>().map_err(|_| bad("not a list of numbers")))
                        .collect::<Result<_, _>>()?
                }
                "clustering.min_size_floor" => c.cluster_min_size_floor = num!(usize),
                "clustering.min_samples" => c.cluster_min_samples = num!(usize),
                "clustering.theta" => c.theta = num!(f64),
                "labeling.k" => c.label_terms = num!(usize),
                "labeling.stopwords" => c.stopwords = v.clone(),
                "labeling.model_relabel" => c.relabel_with_model = num!(bool),
                "bundling.resolution" => c.bundle.resolution = num!(usize),
                "bundling.h0_fraction" => c.bundle.h0_fraction = num!(f64),
                "bundling.decay" => c.bundle.decay = num!(f64),
                "bundling.iterations" => c.bundle.iterations = num!(usize),
                "bundling.step" => c.bundle.step = num!(f64),
                "bundling.smoothing" => c.bundle.smoothing = num!(f64),
                "bundling.max_segment_fraction" => c.bundle.max_segment_fraction = num!(f64),
                "bundling.gradient" => {
                    c.bundle.gradient = match v.as_str() {
                        "analytic" => GradientMode::Analytic,
                        "grid" => GradientMode::Grid,
                        _ => return Err(bad("expected analytic or grid")),
                    }
                }
                "bundling.cocitation_threshold" => c.cocitation_threshold = num!(u32),
                _ => return Err(format!("line {line}: unknown key {k}")),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), String> {
        let mut errs = Vec::new();
        if self.dataset_id.is_empty() || !self.dataset_id.chars().all(|ch| ch.is_ascii_alphanumeric() || "-_.".contains(ch)) {
            errs.push(format!("dataset_id {:?} must be non-empty [A-Za-z0-9._-]", self.dataset_id));
        }
        if self.embedding_dim < 16 {
            errs.push(format!("embedding.dim {} must be at least 16", self.embedding_dim));
        }
        if self.layout_k < 2 {
            errs.push(format!("layout.k {} must be at least 2", self.layout_k));
        }
        if !(self.layout_perplexity > 1.0 && self.layout_perplexity <= self.layout_k as f64) {
            errs.push(format!("layout.perplexity {} must lie in (1, layout.k]", self.layout_perplexity));
        }
        if self.largevis.negatives == 0 {
            errs.push("layout.negatives must be positive".into());
        }
        for (name, v) in [
            ("layout.gamma", self.largevis.gamma),
            ("layout.rho0", self.largevis.rho0),
            ("layout.tsne_perplexity", self.tsne_perplexity),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("{name} {v} must be positive"));
            }
        }
        if self.cluster_fractions.is_empty() || self.cluster_fractions.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
            errs.push("clustering.fractions must be a non-empty list in (0, 1)".into());
        }
        if self.cluster_fractions.windows(2).any(|w| w[0] > w[1]) {
            errs.push("clustering.fractions must be non-decreasing (finest level first)".into());
        }
        if self.cluster_min_size_floor < 2 || self.cluster_min_samples == 0 {
            errs.push("clustering.min_size_floor must be ≥ 2 and clustering.min_samples ≥ 1".into());
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            errs.push(format!("clustering.theta {} must lie in (0, 1]", self.theta));
        }
        if self.label_terms == 0 {
            errs.push("labeling.k must be positive".into());
        }
        if self.stopwords != STOPWORDS_VERSION {
            errs.push(format!("labeling.stopwords {:?}: only {STOPWORDS_VERSION} is available", self.stopwords));
        }
        let b = &self.bundle;
        if b.resolution < 2 || b.iterations == 0 {
            errs.push("bundling.resolution must be ≥ 2 and bundling.iterations ≥ 1".into());
        }
        for (name, v) in [
            ("bundling.h0_fraction", b.h0_fraction),
            ("bundling.decay", b.decay),
            ("bundling.step", b.step),
            ("bundling.max_segment_fraction", b.max_segment_fraction),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("{name} {v} must be positive"));
            }
        }
        if !(b.smoothing > 0.0 && b.smoothing <= 1.0) {
            errs.push(format!("bundling.smoothing {} must lie in (0, 1]", b.smoothing));
        }
        if self.cocitation_threshold == 0 {
            errs.push("bundling.cocitation_threshold must be positive".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs.join("; "))
        }
    }
}
