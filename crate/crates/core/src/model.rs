//! Language-model client interface used by the agents.
//!
//! Three implementations: a deterministic stub (rule based, the test
//! default), a replay client reading recorded responses keyed by request
//! digest, and a live HTTP client behind the `live` feature.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("no recorded response for request {0}")]
    Missing(String),
    #[error("model transport failed: {0}")]
    Transport(String),
    #[error("model output could not be decoded: {0}")]
    Decode(String),
    #[error("model client unavailable: {0}")]
    Unavailable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub pmid: String,
    pub title: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    pub description: String,
}

/// One model call. Serialized form is the replay key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum ModelRequest {
    /// Answer a question using only `documents`; cite as `[PMID:<id>]`.
    Answer {
        question: String,
        documents: Vec<ModelDocument>,
    },
    /// Fill `fields` from one document; reply is a JSON object
    /// `{field: {"value": .., "snippet": ..}}`.
    Extract {
        fields: Vec<FieldSpec>,
        document: ModelDocument,
    },
    /// Short topic label for a cluster given its top terms and titles.
    Label {
        terms: Vec<String>,
        titles: Vec<String>,
    },
}

impl ModelRequest {
    pub fn key(&self) -> String {
        let canon = serde_json::to_string(self).expect("request serializes");
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn task(&self) -> &'static str {
        match self {
            ModelRequest::Answer { .. } => "answer",
            ModelRequest::Extract { .. } => "extract",
            ModelRequest::Label { .. } => "label",
        }
    }
}

pub trait ModelClient: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &ModelRequest) -> Result<String, ModelError>;
}

pub const NOT_REPORTED: &str = "not reported";

/// Deterministic rule-based client.
///
/// Answers echo the first three document titles with citations; extraction
/// applies fixed regular expressions per known field; labels join the top
/// two terms.
#[derive(Debug, Clone, Default)]
pub struct StubModel;

struct Rules {
    population: Regex,
    intervention: Regex,
    outcome: Regex,
    design: Regex,
    fail: Regex,
}

fn rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| Rules {
        population: Regex::new(
            r"(?i)\b(\d[\d,]*\s+(?:patients|participants|subjects|adults|children|women|men|individuals|volunteers|infants|mice|rats))\b",
        )
        .unwrap(),
        intervention: Regex::new(
            r"(?i)\b(?:treated with|received|randomi[sz]ed to(?: receive)?|assigned to)\s+([^.;,]+)",
        )
        .unwrap(),
        outcome: Regex::new(r"(?i)\bprimary (?:outcome|endpoint) (?:was|were|is)\s+([^.;]+)").unwrap(),
        design: Regex::new(
            r"(?i)\b(randomi[sz]ed controlled trial|cohort study|case-control study|cross-sectional study|meta-analysis|systematic review|case report|pilot study)\b",
        )
        .unwrap(),
        fail: Regex::new(r"\[MODEL-FAIL\]").unwrap(),
    })
}

/// The sentence of `text` containing byte offset `at`.
fn sentence_around(text: &str, at: usize) -> String {
    let start = text[..at].rfind(['.', '!', '?']).map(|i| i + 1).unwrap_or(0);
    let end = text[at..].find(['.', '!', '?']).map(|i| at + i + 1).unwrap_or(text.len());
    text[start..end].trim().to_string()
}

fn stub_field(field: &str, text: &str) -> Option<(String, String)> {
    let r = rules();
    let re = match field {
        "population" => &r.population,
        "intervention" => &r.intervention,
        "outcome" | "outcomes" | "endpoint" | "endpoints" => &r.outcome,
        "study_design" | "design" => &r.design,
        _ => return None,
    };
    let caps = re.captures(text)?;
    let m = caps.get(1)?;
    Some((m.as_str().trim().to_string(), sentence_around(text, m.start())))
}

impl ModelClient for StubModel {
    fn name(&self) -> &str {
        "stub"
    }

    fn complete(&self, request: &ModelRequest) -> Result<String, ModelError> {
        match request {
            ModelRequest::Answer { question, documents } => {
                if documents.is_empty() {
                    return Ok(format!("No evidence in the collection addresses \"{question}\"."));
                }
                let cites: Vec<String> = documents
                    .iter()
                    .take(3)
                    .map(|d| format!("{} [PMID:{}]", d.title, d.pmid))
                    .collect();
                Ok(format!("Top evidence for \"{question}\": {}.", cites.join("; ")))
            }
            ModelRequest::Extract { fields, document } => {
                if rules().fail.is_match(&document.text) {
                    return Err(ModelError::Transport(format!(
                        "simulated failure for {}",
                        document.pmid
                    )));
                }
                let mut out = BTreeMap::new();
                for f in fields {
                    let (value, snippet) = stub_field(&f.name, &document.text)
                        .unwrap_or_else(|| (NOT_REPORTED.to_string(), String::new()));
                    out.insert(
                        f.name.clone(),
                        serde_json::json!({ "value": value, "snippet": snippet }),
                    );
                }
                Ok(serde_json::to_string(&out).expect("map serializes"))
            }
            ModelRequest::Label { terms, .. } => Ok(terms.iter().take(2).cloned().collect::<Vec<_>>().join(" / ")),
        }
    }
}

/// Serves responses recorded as `<dir>/<key>.json`, each holding
/// `{"request": .., "response": ".."}`.
#[derive(Debug, Clone)]
pub struct ReplayModel {
    dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct Recording {
    request: ModelRequest,
    response: String,
}

impl ReplayModel {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayModel { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Store a response so that a later replay of `request` returns it.
    pub fn record(&self, request: &ModelRequest, response: &str) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(&self.dir)?;
        let path = self.dir.join(format!("{}.json", request.key()));
        let rec = Recording {
            request: request.clone(),
            response: response.to_string(),
        };
        std::fs::write(&path, serde_json::to_vec_pretty(&rec)?)?;
        Ok(path)
    }
}

impl ModelClient for ReplayModel {
    fn name(&self) -> &str {
        "replay"
    }

    fn complete(&self, request: &ModelRequest) -> Result<String, ModelError> {
        let key = request.key();
        let path = self.dir.join(format!("{key}.json"));
        let bytes = std::fs::read(&path).map_err(|_| ModelError::Missing(key.clone()))?;
        let rec: Recording = serde_json::from_slice(&bytes).map_err(|e| ModelError::Decode(e.to_string()))?;
        if &rec.request != request {
            return Err(ModelError::Decode(format!("recording {key} holds a different request")));
        }
        Ok(rec.response)
    }
}

/// Chat-completions style HTTP client. Reads `LITMAP_MODEL_URL`,
/// `LITMAP_MODEL_NAME` and `LITMAP_MODEL_KEY`.
#[cfg(feature = "live")]
pub struct LiveModel {
    http: reqwest::blocking::Client,
    url: String,
    model: String,
    key: Option<String>,
}

#[cfg(feature = "live")]
impl LiveModel {
    pub fn from_env() -> Result<Self, ModelError> {
        let url = std::env::var("LITMAP_MODEL_URL")
            .map_err(|_| ModelError::Unavailable("LITMAP_MODEL_URL not set".into()))?;
        Ok(LiveModel {
            http: reqwest::blocking::Client::new(),
            url,
            model: std::env::var("LITMAP_MODEL_NAME").unwrap_or_else(|_| "default".into()),
            key: std::env::var("LITMAP_MODEL_KEY").ok(),
        })
    }

    fn prompt(request: &ModelRequest) -> String {
        match request {
            ModelRequest::Answer { question, documents } => {
                let mut s = String::from(
                    "Answer using only the documents below. Cite each claim as [PMID:<id>].\n\n",
                );
                for d in documents {
                    s.push_str(&format!("[PMID:{}] {}\n{}\n\n", d.pmid, d.title, d.text));
                }
                s.push_str(&format!("Question: {question}"));
                s
            }
            ModelRequest::Extract { fields, document } => {
                let mut s = String::from(
                    "Return a JSON object mapping each field name to {\"value\", \"snippet\"}. \
                     Use \"not reported\" when absent.\nFields:\n",
                );
                for f in fields {
                    s.push_str(&format!("- {}: {}\n", f.name, f.description));
                }
                s.push_str(&format!("\nAbstract:\n{}", document.text));
                s
            }
            ModelRequest::Label { terms, titles } => format!(
                "Give a topic label of at most five words.\nTerms: {}\nTitles:\n{}",
                terms.join(", "),
                titles.join("\n")
            ),
        }
    }
}

#[cfg(feature = "live")]
impl ModelClient for LiveModel {
    fn name(&self) -> &str {
        "live"
    }

    fn complete(&self, request: &ModelRequest) -> Result<String, ModelError> {
        let body = serde_json::json!({
            "model": self.model,
            "temperature": 0,
            "messages": [{ "role": "user", "content": Self::prompt(request) }],
        });
        let mut req = self.http.post(&self.url).json(&body);
        if let Some(k) = &self.key {
            req = req.bearer_auth(k);
        }
        let resp = req.send().map_err(|e| ModelError::Transport(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(ModelError::Transport(format!("status {}", resp.status())));
        }
        let v: serde_json::Value = resp.json().map_err(|e| ModelError::Decode(e.to_string()))?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ModelError::Decode("missing choices[0].message.content".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelMode {
    Stub,
    Replay,
    Live,
}

/// Build a client for `mode`. Replay reads from `replay_dir`.
pub fn client_for(mode: ModelMode, replay_dir: Option<&Path>) -> Result<Box<dyn ModelClient>, ModelError> {
    match mode {
        ModelMode::Stub => Ok(Box::new(StubModel)),
        ModelMode::Replay => {
            let dir = replay_dir.ok_or_else(|| ModelError::Unavailable("replay mode needs a recordings directory".into()))?;
            Ok(Box::new(ReplayModel::new(dir)))
        }
        #[cfg(feature = "live")]
        ModelMode::Live => Ok(Box::new(LiveModel::from_env()?)),
        #[cfg(not(feature = "live"))]
        ModelMode::Live => Err(ModelError::Unavailable("built without the `live` feature".into())),
    }
}
