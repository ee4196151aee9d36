use std::collections::{HashMap, HashSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Article;

/// Citation metrics for one pmid, shaped like an iCite publication record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationRecord {
    #[serde(deserialize_with = "pmid_from_any")]
    pub pmid: String,
    #[serde(default)]
    pub citation_count: Option<u64>,
    #[serde(default, rename = "relative_citation_ratio")]
    pub rcr: Option<f64>,
}

fn pmid_from_any<'de, D: serde::Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    let v = serde_json::Value::deserialize(d)?;
    match v {
        serde_json::Value::String(s) => Ok(s),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(serde::de::Error::custom(format!("pmid must be a string or integer, got {other}"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeConflict {
    pub pmid: String,
    pub field: &'static str,
    pub base: String,
    pub enrichment: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MergeReport {
    /// Enrichment pmids with no base article.
    pub unmatched: Vec<String>,
    /// Fields where both sides carried different values; the base value was kept.
    pub conflicts: Vec<MergeConflict>,
}

/// Fills `citation_count` and `size` (from RCR) on matching base articles.
///
/// A base value of zero counts as missing. When both sides carry different
/// non-missing values the base wins and the disagreement is reported.
pub fn merge_sources(mut base: Vec<Article>, enrichment: &[CitationRecord]) -> (Vec<Article>, MergeReport) {
    let index: HashMap<&str, usize> = base
        .iter()
        .enumerate()
        .map(|(i, a)| (a.pmid.as_str(), i))
        .collect();
    let mut updates: Vec<(usize, &CitationRecord)> = Vec::new();
    let mut report = MergeReport::default();
    for rec in enrichment {
        match index.get(rec.pmid.as_str()) {
            Some(&i) => updates.push((i, rec)),
            None => report.unmatched.push(rec.pmid.clone()),
        }
    }
    for (i, rec) in updates {
        let a = &mut base[i];
        if let Some(cc) = rec.citation_count {
            if a.citation_count == 0 {
                a.citation_count = cc;
            } else if a.citation_count != cc {
                report.conflicts.push(MergeConflict {
                    pmid: a.pmid.clone(),
                    field: "citation_count",
                    base: a.citation_count.to_string(),
                    enrichment: cc.to_string(),
                });
            }
        }
        if let Some(rcr) = rec.rcr.filter(|r| r.is_finite() && *r >= 0.0) {
            if a.size == 0.0 {
                a.size = rcr;
            } else if a.size != rcr {
                report.conflicts.push(MergeConflict {
                    pmid: a.pmid.clone(),
                    field: "size",
                    base: a.size.to_string(),
                    enrichment: rcr.to_string(),
                });
            }
        }
    }
    for c in &report.conflicts {
        log::warn!(
            "pmid {}: {} conflict, keeping base {} over enrichment {}",
            c.pmid,
            c.field,
            c.base,
            c.enrichment
        );
    }
    if !report.unmatched.is_empty() {
        log::warn!("{} enrichment records have no base article", report.unmatched.len());
    }
    (base, report)
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("network failure (retryable): {0}")]
    Network(String),
    #[error("malformed response for pmid {pmid:?}: {message}")]
    Decode { pmid: String, message: String },
}

impl FetchError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, FetchError::Network(_))
    }
}

/// Source of citation metrics. Implementations own batching limits and pacing.
pub trait BibliographicClient {
    /// Largest number of pmids accepted by one `fetch_batch` call.
    fn max_batch(&self) -> usize;

    /// Returns records for the pmids it could resolve; unknown pmids are omitted.
    fn fetch_batch(&self, pmids: &[String]) -> Result<Vec<CitationRecord>, FetchError>;
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FetchOutcome {
    pub records: Vec<CitationRecord>,
    pub unresolved: Vec<String>,
}

pub fn fetch_bibliographic(
    pmids: &[String],
    client: &dyn BibliographicClient,
) -> Result<FetchOutcome, FetchError> {
    let mut outcome = FetchOutcome::default();
    let batch = client.max_batch().max(1);
    for chunk in pmids.chunks(batch) {
        let records = client.fetch_batch(chunk)?;
        let got: HashSet<&str> = records.iter().map(|r| r.pmid.as_str()).collect();
        outcome
            .unresolved
            .extend(chunk.iter().filter(|p| !got.contains(p.as_str())).cloned());
        let wanted: HashSet<&str> = chunk.iter().map(String::as_str).collect();
        outcome
            .records
            .extend(records.into_iter().filter(|r| wanted.contains(r.pmid.as_str())));
    }
    Ok(outcome)
}

/// Replays recorded responses: one `<pmid>.json` document per pmid in a directory.
#[derive(Debug, Clone)]
pub struct FixtureClient {
    dir: PathBuf,
    batch: usize,
}

impl FixtureClient {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureClient {
            dir: dir.into(),
            batch: 200,
        }
    }

    pub fn with_batch(mut self, batch: usize) -> Self {
        self.batch = batch.max(1);
        self
    }
}

impl BibliographicClient for FixtureClient {
    fn max_batch(&self) -> usize {
        self.batch
    }

    fn fetch_batch(&self, pmids: &[String]) -> Result<Vec<CitationRecord>, FetchError> {
        let mut out = Vec::new();
        for pmid in pmids {
            let path = self.dir.join(format!("{pmid}.json"));
            let body = match std::fs::read_to_string(&path) {
                Ok(b) => b,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => continue,
                Err(e) => return Err(FetchError::Network(format!("{}: {e}", path.display()))),
            };
            let rec: CitationRecord = serde_json::from_str(&body).map_err(|e| FetchError::Decode {
                pmid: pmid.clone(),
                message: e.to_string(),
            })?;
            if &rec.pmid != pmid {
                return Err(FetchError::Decode {
                    pmid: pmid.clone(),
                    message: format!("record carries pmid {:?}", rec.pmid),
                });
            }
            out.push(rec);
        }
        Ok(out)
    }
}

/// Live client for the iCite publications API.
#[cfg(feature = "live")]
pub struct ICiteClient {
    http: reqwest::blocking::Client,
    base_url: String,
    min_interval: std::time::Duration,
    last: std::sync::Mutex<Option<std::time::Instant>>,
}

#[cfg(feature = "live")]
impl ICiteClient {
    pub fn new() -> Self {
        ICiteClient {
            http: reqwest::blocking::Client::new(),
            base_url: "https://icite.od.nih.gov/api/pubs".into(),
            min_interval: std::time::Duration::from_millis(350),
            last: std::sync::Mutex::new(None),
        }
    }

    fn pace(&self) {
        let mut last = self.last.lock().unwrap();
        if let Some(t) = *last {
            let elapsed = t.elapsed();
            if elapsed < self.min_interval {
                std::thread::sleep(self.min_interval - elapsed);
            }
        }
        *last = Some(std::time::Instant::now());
    }
}

#[cfg(feature = "live")]
impl Default for ICiteClient {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(feature = "live")]
impl BibliographicClient for ICiteClient {
    fn max_batch(&self) -> usize {
        1000
    }

    fn fetch_batch(&self, pmids: &[String]) -> Result<Vec<CitationRecord>, FetchError> {
        #[derive(Deserialize)]
        struct Page {
            data: Vec<serde_json::Value>,
        }
        self.pace();
        let url = format!("{}?pmids={}", self.base_url, pmids.join(","));
        let resp = self
            .http
            .get(url)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| FetchError::Network(e.to_string()))?;
        let page: Page = resp.json().map_err(|e| FetchError::Decode {
            pmid: pmids.first().cloned().unwrap_or_default(),
            message: e.to_string(),
        })?;
        page.data
            .into_iter()
            .map(|v| {
                let pmid = v.get("pmid").map(|p| p.to_string()).unwrap_or_default();
                serde_json::from_value(v).map_err(|e| FetchError::Decode {
                    pmid,
                    message: e.to_string(),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(pmid: &str, cc: u64, rcr: f64) -> CitationRecord {
        CitationRecord {
            pmid: pmid.into(),
            citation_count: Some(cc),
            rcr: Some(rcr),
        }
    }

    #[test]
    fn merge_fills_missing_fields() {
        let (out, report) = merge_sources(vec![Article::new("1")], &[rec("1", 42, 2.0)]);
        assert_eq!(out[0].citation_count, 42);
        assert_eq!(out[0].size, 2.0);
        assert!(report.unmatched.is_empty());
        assert!(report.conflicts.is_empty());
    }

    #[test]
    fn merge_reports_unmatched_and_preserves_order() {
        let base = vec![Article::new("3"), Article::new("1")];
        let (out, report) = merge_sources(base, &[rec("999", 1, 1.0), rec("1", 5, 0.5)]);
        assert_eq!(report.unmatched, ["999"]);
        assert_eq!(out.iter().map(|a| a.pmid.as_str()).collect::<Vec<_>>(), ["3", "1"]);
        assert_eq!(out[1].citation_count, 5);
    }

    #[test]
    fn merge_with_empty_enrichment_is_identity() {
        let mut a = Article::new("1");
        a.citation_count = 3;
        let (out, report) = merge_sources(vec![a.clone()], &[]);
        assert_eq!(out, vec![a]);
        assert_eq!(report, MergeReport::default());
    }

    #[test]
    fn merge_conflict_keeps_base() {
        let mut a = Article::new("1");
        a.citation_count = 7;
        let (out, report) = merge_sources(vec![a], &[rec("1", 42, 2.0)]);
        assert_eq!(out[0].citation_count, 7);
        assert_eq!(out[0].size, 2.0);
        assert_eq!(report.conflicts.len(), 1);
        assert_eq!(report.conflicts[0].field, "citation_count");
    }

    fn fixture_dir(records: &[(&str, &str)]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for (pmid, body) in records {
            std::fs::write(dir.path().join(format!("{pmid}.json")), body).unwrap();
        }
        dir
    }

    #[test]
    fn fixture_replay_returns_recorded_records() {
        let dir = fixture_dir(&[
            ("1", r#"{"pmid": 1, "citation_count": 10, "relative_citation_ratio": 1.5}"#),
            ("2", r#"{"pmid": "2", "citation_count": 0, "relative_citation_ratio": null}"#),
            ("3", r#"{"pmid": 3, "citation_count": 4}"#),
        ]);
        let client = FixtureClient::new(dir.path()).with_batch(2);
        let pmids: Vec<String> = ["1", "2", "3"].iter().map(|s| s.to_string()).collect();
        let out = fetch_bibliographic(&pmids, &client).unwrap();
        assert_eq!(out.records.len(), 3);
        assert_eq!(out.records[0], rec("1", 10, 1.5));
        assert_eq!(out.records[1].rcr, None);
        assert!(out.unresolved.is_empty());
    }

    #[test]
    fn fixture_missing_pmid_is_unresolved() {
        let dir = fixture_dir(&[("5", r#"{"pmid": 5, "citation_count": 1}"#)]);
        let client = FixtureClient::new(dir.path());
        let pmids = vec!["5".to_string(), "7".to_string()];
        let out = fetch_bibliographic(&pmids, &client).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.unresolved, ["7"]);
        let empty = fetch_bibliographic(&[], &client).unwrap();
        assert_eq!(empty, FetchOutcome::default());
    }

    #[test]
    fn malformed_fixture_names_the_pmid() {
        let dir = fixture_dir(&[("8", "{not json")]);
        let client = FixtureClient::new(dir.path());
        match fetch_bibliographic(&["8".to_string()], &client) {
            Err(FetchError::Decode { pmid, .. }) => assert_eq!(pmid, "8"),
            other => panic!("expected decode error, got {other:?}"),
        }
    }
}
