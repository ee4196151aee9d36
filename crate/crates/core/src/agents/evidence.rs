use std::collections::BTreeMap;

use serde_json::{json, Value};

use super::{AgentError, AgentResponse, Provenance, SourceType, Specialist, TraceEntry};
use crate::corpus::tokenize;
use crate::dataset::Dataset;
use crate::model::{FieldSpec, ModelClient, ModelDocument, ModelRequest, NOT_REPORTED};

/// Articles beyond this count are left out of one extraction batch.
pub const EVIDENCE_MAX_ARTICLES: usize = 50;

const FIELDS: [(&str, &str); 4] = [
    ("population", "who was studied and how many"),
    ("intervention", "treatment or exposure applied"),
    ("outcome", "primary outcome or endpoint"),
    ("study_design", "type of study"),
];

pub fn default_fields() -> Vec<FieldSpec> {
    FIELDS
        .iter()
        .map(|(n, d)| FieldSpec {
            name: n.to_string(),
            description: d.to_string(),
        })
        .collect()
}

/// Fields named in the query ("population", "outcomes", "study design"),
/// or all default fields when none is named.
pub fn fields_for_query(query: &str) -> Vec<FieldSpec> {
    let toks: Vec<String> = tokenize(query).collect();
    let named = |f: &str| match f {
        "study_design" => toks.windows(2).any(|w| w[0] == "study" && w[1].starts_with("design")),
        "outcome" => toks.iter().any(|t| t.starts_with("outcome") || t.starts_with("endpoint")),
        _ => toks.iter().any(|t| t.starts_with(f)),
    };
    let picked: Vec<FieldSpec> = default_fields().into_iter().filter(|f| named(&f.name)).collect();
    if picked.is_empty() {
        default_fields()
    } else {
        picked
    }
}

fn parse_record(raw: &str, fields: &[FieldSpec]) -> Result<BTreeMap<String, (String, String)>, String> {
    let v: Value = serde_json::from_str(raw).map_err(|e| format!("model output is not JSON: {e}"))?;
    let obj = v.as_object().ok_or("model output is not a JSON object")?;
    let mut out = BTreeMap::new();
    for f in fields {
        let entry = obj.get(&f.name);
        let value = entry
            .and_then(|e| e.get("value").or(Some(e)))
            .and_then(Value::as_str)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .unwrap_or(NOT_REPORTED)
            .to_string();
        let snippet = entry
            .and_then(|e| e.get("snippet"))
            .and_then(Value::as_str)
            .unwrap_or("")
            .to_string();
        out.insert(f.name.clone(), (value, snippet));
    }
    Ok(out)
}

/// One record per selected article with every field present. Model
/// failures become per-article error entries; the batch continues.
pub fn run_evidence(
    dataset: &Dataset,
    selection: &[usize],
    fields: &[FieldSpec],
    model: &dyn ModelClient,
) -> Result<AgentResponse, AgentError> {
    if selection.is_empty() {
        return Err(AgentError::EmptySelection);
    }
    if fields.is_empty() {
        return Err(AgentError::Contract("field schema is empty".into()));
    }
    let arts = dataset.corpus.articles();
    let mut order: Vec<usize> = selection.to_vec();
    order.sort_by(|&a, &b| arts[a].pmid.cmp(&arts[b].pmid));
    let skipped = order.len().saturating_sub(EVIDENCE_MAX_ARTICLES);
    order.truncate(EVIDENCE_MAX_ARTICLES);

    let mut records = Vec::new();
    let mut provenance = Vec::new();
    let mut trace = Vec::new();
    let mut failures = 0;
    for &i in &order {
        let a = &arts[i];
        let req = ModelRequest::Extract {
            fields: fields.to_vec(),
            document: ModelDocument {
                pmid: a.pmid.clone(),
                title: a.title.clone(),
                text: a.abstract_text.clone(),
            },
        };
        let outcome = model.complete(&req).map_err(|e| e.to_string()).and_then(|raw| parse_record(&raw, fields));
        trace.push(TraceEntry::new(
            Specialist::Evidence,
            &format!("{}.extract", model.name()),
            format!("pmid {}: {}", a.pmid, if outcome.is_ok() { "ok" } else { "error" }),
        ));
        match outcome {
            Ok(values) => {
                let mut obj = serde_json::Map::new();
                for (name, (value, snippet)) in &values {
                    if value != NOT_REPORTED && !snippet.is_empty() {
                        provenance.push(Provenance {
                            pmid: a.pmid.clone(),
                            snippet: snippet.clone(),
                            source_type: SourceType::Abstract,
                        });
                    }
                    obj.insert(name.clone(), json!({ "value": value, "snippet": snippet }));
                }
                records.push(json!({ "pmid": a.pmid, "fields": obj }));
            }
            Err(e) => {
                failures += 1;
                records.push(json!({ "pmid": a.pmid, "error": e }));
            }
        }
    }
    let names: Vec<&str> = fields.iter().map(|f| f.name.as_str()).collect();
    let mut text = format!("Extracted {} from {} articles", names.join(", "), order.len());
    if failures > 0 {
        text.push_str(&format!("; {failures} could not be processed"));
    }
    text.push('.');
    if skipped > 0 {
        text.push_str(&format!(" {skipped} further articles were not processed; narrow the selection to include them."));
    }
    Ok(AgentResponse {
        text,
        actions: Vec::new(),
        provenance,
        agent_trace: trace,
        data: Some(json!({ "fields": names, "records": records })),
    })
}
