use std::collections::HashSet;

use serde_json::json;

use super::{
    cited_pmids, query_terms, AgentError, AgentResponse, AgentTools, Provenance, RetrievalMode, SourceType,
    Specialist, TraceEntry, UIAction, ValidatedContext,
};
use crate::corpus::Article;
use crate::dataset::Dataset;
use crate::embedding::knn_by_vector;
use crate::model::{ModelDocument, ModelRequest};

/// Evidence documents handed to the model per question.
pub const DEFAULT_EVIDENCE: usize = 8;

/// External literature search. No implementation ships; open mode is
/// unavailable unless one is supplied.
pub trait OpenRetriever: Send + Sync {
    fn search(&self, query: &str, limit: usize) -> Result<Vec<ModelDocument>, String>;
}

/// First sentence of the article mentioning a query term, else its title.
fn snippet(a: &Article, terms: &[String]) -> (String, SourceType) {
    for sentence in a.abstract_text.split_inclusive(['.', '!', '?']) {
        let lower = sentence.to_lowercase();
        if terms.iter().any(|t| lower.contains(t.as_str())) {
            return (sentence.trim().to_string(), SourceType::Abstract);
        }
    }
    (a.title.clone(), SourceType::Title)
}

/// Keyword hits inside `scope`, topped up with embedding neighbours of
/// their centroid; when nothing matches a constrained selection, its most
/// cited articles stand in.
fn retrieve(
    dataset: &Dataset,
    ctx: &ValidatedContext,
    terms: &[String],
    limit: usize,
    trace: &mut Vec<TraceEntry>,
) -> Vec<usize> {
    let scope = ctx.scope(dataset);
    let in_scope: HashSet<usize> = scope.iter().copied().collect();
    let mut hits: Vec<usize> = dataset
        .keywords
        .search(terms, |d| in_scope.contains(&d))
        .into_iter()
        .take(limit)
        .map(|(d, _)| d)
        .collect();
    trace.push(TraceEntry::new(
        Specialist::Scholar,
        "keyword_search",
        format!("{} terms, {} hits in scope of {}", terms.len(), hits.len(), scope.len()),
    ));
    if !hits.is_empty() && hits.len() < limit {
        if let Some(emb) = &dataset.embeddings {
            let mut centroid = vec![0.0; emb.dim()];
            for &h in &hits {
                let r = emb.row_f64(h);
                let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                centroid.iter_mut().zip(&r).for_each(|(c, v)| *c += v / norm);
            }
            let taken: HashSet<usize> = hits.iter().copied().collect();
            if let Ok(knn) = knn_by_vector(emb, &centroid, limit - hits.len(), |i| {
                !in_scope.contains(&i) || taken.contains(&i)
            }) {
                trace.push(TraceEntry::new(
                    Specialist::Scholar,
                    "vector_expand",
                    format!("{} neighbours added", knn.neighbors.len()),
                ));
                hits.extend(knn.neighbors.iter().map(|n| n.index));
            }
        }
    }
    if hits.is_empty() && ctx.constrained && !scope.is_empty() {
        let arts = dataset.corpus.articles();
        let mut by_cites = scope;
        by_cites.sort_by(|&a, &b| {
            arts[b].citation_count.cmp(&arts[a].citation_count).then_with(|| arts[a].pmid.cmp(&arts[b].pmid))
        });
        by_cites.truncate(limit);
        trace.push(TraceEntry::new(
            Specialist::Scholar,
            "selection_fallback",
            format!("{} most cited selected articles", by_cites.len()),
        ));
        hits = by_cites;
    }
    hits
}

/// Answers `query` from retrieved evidence through the model client.
/// Citations of documents that were not supplied are removed.
pub fn run_scholar(
    dataset: &Dataset,
    ctx: &ValidatedContext,
    query: &str,
    mode: RetrievalMode,
    tools: &AgentTools<'_>,
) -> Result<AgentResponse, AgentError> {
    let mut trace = Vec::new();
    let terms = query_terms(query);
    let (documents, provenance) = match mode {
        RetrievalMode::InCollection => {
            let arts = dataset.corpus.articles();
            let hits = retrieve(dataset, ctx, &terms, DEFAULT_EVIDENCE, &mut trace);
            let docs: Vec<ModelDocument> = hits
                .iter()
                .map(|&i| ModelDocument {
                    pmid: arts[i].pmid.clone(),
                    title: arts[i].title.clone(),
                    text: arts[i].abstract_text.clone(),
                })
                .collect();
            let prov: Vec<Provenance> = hits
                .iter()
                .map(|&i| {
                    let (snippet, source_type) = snippet(&arts[i], &terms);
                    Provenance {
                        pmid: arts[i].pmid.clone(),
                        snippet,
                        source_type,
                    }
                })
                .collect();
            (docs, prov)
        }
        RetrievalMode::Open => {
            let open = tools
                .open
                .ok_or_else(|| AgentError::Mode("no open retrieval client is configured".into()))?;
            let docs = open.search(query, DEFAULT_EVIDENCE).map_err(AgentError::Mode)?;
            trace.push(TraceEntry::new(Specialist::Scholar, "open_search", format!("{} documents", docs.len())));
            let prov = docs
                .iter()
                .map(|d| Provenance {
                    pmid: d.pmid.clone(),
                    snippet: d.title.clone(),
                    source_type: SourceType::Open,
                })
                .collect();
            (docs, prov)
        }
    };

    if documents.is_empty() {
        let text = if ctx.constrained && ctx.is_empty_selection() {
            "No articles match the current selection, so there is no evidence to answer from.".to_string()
        } else {
            format!("No evidence was found in the collection for \"{}\".", query.trim())
        };
        return Ok(AgentResponse {
            text,
            actions: Vec::new(),
            provenance: Vec::new(),
            agent_trace: trace,
            data: Some(json!({ "evidence": [] })),
        });
    }

    let req = ModelRequest::Answer {
        question: query.trim().to_string(),
        documents: documents.clone(),
    };
    let raw = tools.model.complete(&req)?;
    trace.push(TraceEntry::new(
        Specialist::Scholar,
        &format!("{}.answer", tools.model.name()),
        format!("{} documents", documents.len()),
    ));
    let supplied: HashSet<&str> = documents.iter().map(|d| d.pmid.as_str()).collect();
    let mut text = raw;
    let stray: Vec<String> = cited_pmids(&text).into_iter().filter(|p| !supplied.contains(p.as_str())).collect();
    for p in &stray {
        text = text.replace(&format!("[PMID:{p}]"), "");
    }
    if !stray.is_empty() {
        trace.push(TraceEntry::new(
            Specialist::Scholar,
            "grounding_check",
            format!("removed citations to {}", stray.join(", ")),
        ));
    }
    let cited = cited_pmids(&text);
    let mut actions = Vec::new();
    if mode == RetrievalMode::InCollection && !cited.is_empty() {
        actions.push(UIAction::PinPapers(cited.clone()));
    }
    let evidence: Vec<&str> = documents.iter().map(|d| d.pmid.as_str()).collect();
    Ok(AgentResponse {
        text,
        actions,
        provenance,
        agent_trace: trace,
        data: Some(json!({ "evidence": evidence, "cited": cited })),
    })
}
