//! Context-grounded agents: payload validation, intent routing, the four
//! specialists and in-collection retrieval.

mod actions;
mod analytical;
mod context;
mod discovery;
mod evidence;
mod retrieval;
mod router;
mod scholar;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::model::{ModelClient, ModelError};

pub use actions::{validate_action, ActionError, Annotation, Camera, NoParameters, UIAction};
pub use analytical::{
    analysis_for_query, citation_histogram, run_analytical, trend_by_year, AnalysisRequest, CITATION_BINS,
};
pub use context::{validate_context, ContextPayload, RetrievalMode, Selection, ValidatedContext};
pub use discovery::{run_discovery, DEFAULT_NEIGHBORS, GAP_GRID};
pub use evidence::{default_fields, fields_for_query, run_evidence, EVIDENCE_MAX_ARTICLES};
pub use retrieval::{keyword_search, query_terms, KeywordIndex};
pub use router::{plan_query, route_intent};
pub use scholar::{run_scholar, OpenRetriever, DEFAULT_EVIDENCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Specialist {
    Scholar,
    Evidence,
    Analytical,
    Discovery,
}

impl Specialist {
    pub fn as_str(self) -> &'static str {
        match self {
            Specialist::Scholar => "scholar",
            Specialist::Evidence => "evidence",
            Specialist::Analytical => "analytical",
            Specialist::Discovery => "discovery",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceType {
    Title,
    Abstract,
    Metadata,
    Open,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub pmid: String,
    pub snippet: String,
    pub source_type: SourceType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub agent: Specialist,
    pub tool: String,
    pub detail: String,
}

impl TraceEntry {
    pub fn new(agent: Specialist, tool: &str, detail: impl Into<String>) -> Self {
        TraceEntry {
            agent,
            tool: tool.to_string(),
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentResponse {
    pub text: String,
    pub actions: Vec<UIAction>,
    pub provenance: Vec<Provenance>,
    pub agent_trace: Vec<TraceEntry>,
    /// Tabular or structured payload (analysis rows, neighbor lists,
    /// extraction records).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<serde_json::Value>,
}

fn citation_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[PMID:([^\]\s]+)\]").unwrap())
}

/// Pmids cited as `[PMID:<id>]` in `text`, in order of first appearance.
pub fn cited_pmids(text: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    citation_re()
        .captures_iter(text)
        .map(|c| c[1].to_string())
        .filter(|p| seen.insert(p.clone()))
        .collect()
}

impl AgentResponse {
    /// Checks the response invariants: every cited pmid has a provenance
    /// entry and every action validates against `dataset`.
    pub fn verify(&self, dataset: &Dataset) -> Result<(), String> {
        let provided: BTreeSet<&str> = self.provenance.iter().map(|p| p.pmid.as_str()).collect();
        for p in cited_pmids(&self.text) {
            if !provided.contains(p.as_str()) {
                return Err(format!("pmid {p} is cited without provenance"));
            }
        }
        for a in &self.actions {
            validate_action(a, dataset).map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    fn merge(&mut self, other: AgentResponse) {
        if !other.text.is_empty() {
            if !self.text.is_empty() {
                self.text.push_str("\n\n");
            }
            self.text.push_str(&other.text);
        }
        for a in other.actions {
            if !self.actions.contains(&a) {
                self.actions.push(a);
            }
        }
        for p in other.provenance {
            if !self.provenance.contains(&p) {
                self.provenance.push(p);
            }
        }
        self.agent_trace.extend(other.agent_trace);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid context: {}", .0.iter().map(|e| format!("{}: {}", e.field, e.message)).collect::<Vec<_>>().join("; "))]
    Validation(Vec<FieldError>),
    #[error("the selection is empty")]
    EmptySelection,
    #[error("retrieval mode unavailable: {0}")]
    Mode(String),
    #[error("{0}")]
    Unavailable(String),
    #[error("invalid request: {0}")]
    Contract(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("response invariant violated: {0}")]
    Internal(String),
}

/// Everything a specialist may consult besides the dataset.
pub struct AgentTools<'a> {
    pub model: &'a dyn ModelClient,
    pub open: Option<&'a dyn OpenRetriever>,
}

fn run_specialist(
    dataset: &Dataset,
    ctx: &ValidatedContext,
    specialist: Specialist,
    query: &str,
    tools: &AgentTools<'_>,
) -> Result<AgentResponse, AgentError> {
    match specialist {
        Specialist::Analytical => {
            let req = analysis_for_query(query, &ctx.payload.selection.cluster_ids)?;
            run_analytical(dataset, &ctx.effective, req)
        }
        Specialist::Discovery => run_discovery(dataset, &ctx.effective, DEFAULT_NEIGHBORS),
        Specialist::Evidence => run_evidence(dataset, &ctx.effective, &fields_for_query(query), tools.model),
        Specialist::Scholar => run_scholar(dataset, ctx, query, ctx.payload.retrieval_mode, tools),
    }
}

/// Validates `payload`, routes it and runs the chosen specialist(s).
/// Composite queries ("... then ...") run each part in order under the
/// Scholar orchestrator and merge the results.
pub fn handle_query(
    dataset: &Dataset,
    payload: ContextPayload,
    tools: &AgentTools<'_>,
) -> Result<AgentResponse, AgentError> {
    let ctx = validate_context(payload, dataset)?;
    let plan = plan_query(&ctx.payload.query_text);
    let response = if plan.len() == 1 {
        let (part, who) = &plan[0];
        run_specialist(dataset, &ctx, *who, part, tools)?
    } else {
        let mut merged = AgentResponse::default();
        let mut parts = Vec::new();
        for (part, who) in &plan {
            let r = run_specialist(dataset, &ctx, *who, part, tools)?;
            parts.push(serde_json::json!({
                "query": part,
                "agent": who.as_str(),
                "data": r.data.clone().unwrap_or(serde_json::Value::Null),
            }));
            merged.merge(r);
        }
        merged.data = Some(serde_json::json!({ "parts": parts }));
        merged
    };
    response.verify(dataset).map_err(AgentError::Internal)?;
    Ok(response)
}

#[cfg(test)]
pub(crate) mod testkit;
