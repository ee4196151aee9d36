use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::{AgentError, FieldError};
use crate::dataset::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalMode {
    #[default]
    InCollection,
    Open,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Selection {
    #[serde(default)]
    pub pmids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polygon: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub cluster_ids: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year_range: Option<[i32; 2]>,
}

impl Selection {
    pub fn is_empty(&self) -> bool {
        self.pmids.is_empty() && self.polygon.is_none() && self.cluster_ids.is_empty() && self.year_range.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextPayload {
    pub dataset_id: String,
    #[serde(default)]
    pub selection: Selection,
    #[serde(default)]
    pub query_text: String,
    /// Opaque client state, echoed back by the client on the next turn.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub interaction_state: serde_json::Value,
    #[serde(default)]
    pub retrieval_mode: RetrievalMode,
}

impl ContextPayload {
    pub fn for_pmids(dataset_id: &str, pmids: &[&str], query: &str) -> Self {
        ContextPayload {
            dataset_id: dataset_id.to_string(),
            selection: Selection {
                pmids: pmids.iter().map(|s| s.to_string()).collect(),
                ..Default::default()
            },
            query_text: query.to_string(),
            interaction_state: serde_json::Value::Null,
            retrieval_mode: RetrievalMode::InCollection,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedContext {
    /// The payload with polygon hits merged into `selection.pmids`.
    pub payload: ContextPayload,
    /// Article indices (corpus order) satisfying every selection constraint.
    pub effective: Vec<usize>,
    /// False when the payload carried no selection constraint at all.
    pub constrained: bool,
}

impl ValidatedContext {
    /// Empty-selection signal: no article satisfies the selection.
    pub fn is_empty_selection(&self) -> bool {
        self.effective.is_empty()
    }

    pub fn effective_pmids<'a>(&self, dataset: &'a Dataset) -> Vec<&'a str> {
        let arts = dataset.corpus.articles();
        self.effective.iter().map(|&i| arts[i].pmid.as_str()).collect()
    }

    /// Articles in-collection retrieval may draw from: the effective
    /// selection, or the whole dataset when nothing was selected.
    pub fn scope(&self, dataset: &Dataset) -> Vec<usize> {
        if self.constrained {
            self.effective.clone()
        } else {
            (0..dataset.len()).collect()
        }
    }
}

/// Checks the payload contract and resolves the effective selection.
///
/// Polygon hits are merged into the pmid list; the effective selection is
/// that list intersected with the union of the listed clusters and with the
/// year range, each constraint applying only when present.
pub fn validate_context(mut payload: ContextPayload, dataset: &Dataset) -> Result<ValidatedContext, AgentError> {
    let mut errors = Vec::new();
    let mut err = |field: &str, message: String| {
        errors.push(FieldError {
            field: field.to_string(),
            message,
        })
    };
    let sel = &payload.selection;
    if payload.dataset_id != dataset.id() {
        err("dataset_id", format!("payload names {:?}, dataset is {:?}", payload.dataset_id, dataset.id()));
    }
    let unknown: Vec<&str> = sel
        .pmids
        .iter()
        .filter(|p| dataset.corpus.index_of(p).is_none())
        .map(String::as_str)
        .collect();
    if !unknown.is_empty() {
        err("selection.pmids", format!("unknown pmids: {}", unknown.join(", ")));
    }
    let unknown: Vec<String> = sel
        .cluster_ids
        .iter()
        .filter(|&&c| !dataset.has_cluster(c))
        .map(u32::to_string)
        .collect();
    if !unknown.is_empty() {
        err("selection.cluster_ids", format!("unknown cluster ids: {}", unknown.join(", ")));
    }
    if let Some(poly) = &sel.polygon {
        if poly.len() < 3 {
            err("selection.polygon", format!("needs at least 3 vertices, got {}", poly.len()));
        } else if poly.iter().any(|v| !(v[0].is_finite() && v[1].is_finite())) {
            err("selection.polygon", "vertices must be finite".into());
        }
    }
    if let Some([lo, hi]) = sel.year_range {
        if lo > hi {
            err("selection.year_range", format!("min {lo} exceeds max {hi}"));
        }
    }
    if payload.query_text.trim().is_empty() && sel.is_empty() {
        err("query_text", "either query_text or a selection is required".into());
    }
    if !errors.is_empty() {
        return Err(AgentError::Validation(errors));
    }

    let constrained = !payload.selection.is_empty();
    if let Some(poly) = &payload.selection.polygon {
        let present: HashSet<String> = payload.selection.pmids.iter().cloned().collect();
        let hits: BTreeSet<&str> = dataset
            .spatial
            .query_polygon(poly)
            .expect("polygon validated")
            .into_iter()
            .map(|i| dataset.spatial.pmid(i))
            .filter(|p| !present.contains(*p))
            .collect();
        payload.selection.pmids.extend(hits.into_iter().map(str::to_string));
    }

    let sel = &payload.selection;
    let arts = dataset.corpus.articles();
    let mut keep: Vec<bool> = vec![true; arts.len()];
    if !sel.pmids.is_empty() || sel.polygon.is_some() {
        let mut listed = vec![false; arts.len()];
        for p in &sel.pmids {
            listed[dataset.corpus.index_of(p).expect("pmids validated")] = true;
        }
        keep.iter_mut().zip(&listed).for_each(|(k, l)| *k &= l);
    }
    if !sel.cluster_ids.is_empty() {
        let mut member = vec![false; arts.len()];
        for &c in &sel.cluster_ids {
            for p in dataset.cluster_members(c).unwrap_or(&[]) {
                if let Some(i) = dataset.corpus.index_of(p) {
                    member[i] = true;
                }
            }
        }
        keep.iter_mut().zip(&member).for_each(|(k, m)| *k &= m);
    }
    if let Some([lo, hi]) = sel.year_range {
        for (k, a) in keep.iter_mut().zip(arts) {
            *k &= a.year().is_some_and(|y| y >= lo && y <= hi);
        }
    }
    let effective = if constrained {
        keep.iter().enumerate().filter(|(_, &k)| k).map(|(i, _)| i).collect()
    } else {
        Vec::new()
    };
    Ok(ValidatedContext {
        payload,
        effective,
        constrained,
    })
}
