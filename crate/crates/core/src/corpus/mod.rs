//! Article records, the map TSV format and bibliographic enrichment.

mod enrich;
mod text;
mod tsv;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use enrich::{
    fetch_bibliographic, merge_sources, BibliographicClient, CitationRecord, FetchError,
    FetchOutcome, FixtureClient, MergeConflict, MergeReport,
};
#[cfg(feature = "live")]
pub use enrich::ICiteClient;
pub use text::{normalize_text, tokenize};
pub use tsv::{parse_tsv, read_tsv_file, write_tsv, STANDARD_COLUMNS};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("duplicate record for pmid {0:?}")]
    DuplicatePmid(String),
    #[error("line {line}: column {column:?}: {message}")]
    Row {
        line: usize,
        column: String,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Publication date: a bare year or a full `YYYY-MM-DD` date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PubDate {
    pub year: i32,
    pub month_day: Option<(u8, u8)>,
}

impl PubDate {
    pub fn year(year: i32) -> Self {
        PubDate {
            year,
            month_day: None,
        }
    }
}

impl fmt::Display for PubDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.month_day {
            None => write!(f, "{}", self.year),
            Some((m, d)) => write!(f, "{:04}-{:02}-{:02}", self.year, m, d),
        }
    }
}

pub(crate) fn current_year() -> i32 {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    1970 + (secs / 31_556_952) as i32
}

impl FromStr for PubDate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parse_year = |y: &str| -> Result<i32, String> {
            if y.len() != 4 || !y.bytes().all(|b| b.is_ascii_digit()) {
                return Err(format!("expected YYYY or YYYY-MM-DD, got {s:?}"));
            }
            let year: i32 = y.parse().map_err(|_| format!("bad year {y:?}"))?;
            let max = current_year() + 1;
            if !(1800..=max).contains(&year) {
                return Err(format!("year {year} outside [1800, {max}]"));
            }
            Ok(year)
        };
        let parts: Vec<&str> = s.split('-').collect();
        match parts.as_slice() {
            [y] => Ok(PubDate::year(parse_year(y)?)),
            [y, m, d] => {
                let year = parse_year(y)?;
                let month: u8 = m.parse().map_err(|_| format!("bad month in {s:?}"))?;
                let day: u8 = d.parse().map_err(|_| format!("bad day in {s:?}"))?;
                if m.len() != 2 || d.len() != 2 || !(1..=12).contains(&month) || !(1..=31).contains(&day) {
                    return Err(format!("bad date {s:?}"));
                }
                Ok(PubDate {
                    year,
                    month_day: Some((month, day)),
                })
            }
            _ => Err(format!("expected YYYY or YYYY-MM-DD, got {s:?}")),
        }
    }
}

/// One corpus record, a row of the map TSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Article {
    pub pmid: String,
    pub date: Option<PubDate>,
    pub journal: String,
    pub title: String,
    pub abstract_text: String,
    pub mesh_terms: Vec<String>,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub citation_count: u64,
    /// Visual size, typically the relative citation ratio.
    pub size: f64,
    /// Color attribute; the pipeline writes the finest-level cluster id here.
    pub color: Option<String>,
    /// Non-standard columns, keyed by header name.
    pub extra: BTreeMap<String, String>,
}

impl Article {
    pub fn new(pmid: impl Into<String>) -> Self {
        Article {
            pmid: pmid.into(),
            ..Default::default()
        }
    }

    pub fn year(&self) -> Option<i32> {
        self.date.map(|d| d.year)
    }

    /// Title and abstract joined by a single space; the text that gets embedded.
    pub fn text(&self) -> String {
        match (self.title.is_empty(), self.abstract_text.is_empty()) {
            (true, _) => self.abstract_text.clone(),
            (_, true) => self.title.clone(),
            _ => format!("{} {}", self.title, self.abstract_text),
        }
    }

    pub fn position(&self) -> Option<(f64, f64)> {
        self.x.zip(self.y)
    }
}

/// An ordered article table with unique pmids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    articles: Vec<Article>,
    extra_columns: Vec<String>,
    by_pmid: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(articles: Vec<Article>) -> Result<Self, CorpusError> {
        let mut extra_columns: Vec<String> = Vec::new();
        for a in &articles {
            for k in a.extra.keys() {
                if !extra_columns.contains(k) {
                    extra_columns.push(k.clone());
                }
            }
        }
        Self::with_columns(articles, extra_columns)
    }

    pub(crate) fn with_columns(
        articles: Vec<Article>,
        extra_columns: Vec<String>,
    ) -> Result<Self, CorpusError> {
        let mut by_pmid = HashMap::with_capacity(articles.len());
        for (i, a) in articles.iter().enumerate() {
            if a.pmid.is_empty() {
                return Err(CorpusError::Schema(format!("row {} has an empty pmid", i + 1)));
            }
            if by_pmid.insert(a.pmid.clone(), i).is_some() {
                return Err(CorpusError::DuplicatePmid(a.pmid.clone()));
            }
        }
        Ok(Corpus {
            articles,
            extra_columns,
            by_pmid,
        })
    }

    pub fn articles(&self) -> &[Article] {
        &self.articles
    }

    pub fn extra_columns(&self) -> &[String] {
        &self.extra_columns
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn index_of(&self, pmid: &str) -> Option<usize> {
        self.by_pmid.get(pmid).copied()
    }

    pub fn get(&self, pmid: &str) -> Option<&Article> {
        self.index_of(pmid).map(|i| &self.articles[i])
    }

    pub fn pmids(&self) -> impl Iterator<Item = &str> {
        self.articles.iter().map(|a| a.pmid.as_str())
    }

    pub fn push(&mut self, article: Article) -> Result<(), CorpusError> {
        if article.pmid.is_empty() {
            return Err(CorpusError::Schema("empty pmid".into()));
        }
        if self.by_pmid.contains_key(&article.pmid) {
            return Err(CorpusError::DuplicatePmid(article.pmid));
        }
        for k in article.extra.keys() {
            if !self.extra_columns.contains(k) {
                self.extra_columns.push(k.clone());
            }
        }
        self.by_pmid.insert(article.pmid.clone(), self.articles.len());
        self.articles.push(article);
        Ok(())
    }

    /// Mutable access to every article. Pmids are fixed; the closure cannot rename rows.
    pub fn update<F: FnMut(&mut ArticleFields<'_>)>(&mut self, mut f: F) {
        for a in &mut self.articles {
            let mut fields = ArticleFields { article: a };
            f(&mut fields);
        }
    }

    /// Applies text normalization to title, abstract and journal.
    pub fn normalize_text_fields(&mut self) {
        self.update(|a| {
            a.article.title = normalize_text(&a.article.title);
            a.article.abstract_text = normalize_text(&a.article.abstract_text);
            a.article.journal = normalize_text(&a.article.journal);
        });
    }

    pub fn into_articles(self) -> Vec<Article> {
        self.articles
    }
}

/// Write handle over an article that keeps the pmid read-only.
pub struct ArticleFields<'a> {
    article: &'a mut Article,
}

impl ArticleFields<'_> {
    pub fn pmid(&self) -> &str {
        &self.article.pmid
    }
}

impl std::ops::Deref for ArticleFields<'_> {
    type Target = Article;
    fn deref(&self) -> &Article {
        self.article
    }
}

impl ArticleFields<'_> {
    pub fn set_position(&mut self, x: f64, y: f64) {
        self.article.x = Some(x);
        self.article.y = Some(y);
    }

    pub fn set_color(&mut self, color: Option<String>) {
        self.article.color = color;
    }

    pub fn set_citations(&mut self, citation_count: u64, size: f64) {
        self.article.citation_count = citation_count;
        self.article.size = size;
    }
}

/// Artifact listing written last by the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub dataset_id: String,
    pub n_articles: usize,
    pub artifacts: ManifestArtifacts,
    pub pipeline_config_digest: String,
    pub seed: u64,
}

/// Artifact paths relative to the dataset directory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ManifestArtifacts {
    pub map_tsv: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_tree: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<String>,
}
