use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::corpus::{normalize_text, tokenize, Article};
use crate::labeling::is_stopword;

/// Inverted index over title and abstract tokens.
#[derive(Debug, Clone, Default)]
pub struct KeywordIndex {
    postings: HashMap<String, Vec<(u32, u32)>>,
    pmids: Vec<String>,
}

/// Distinct non-stopword tokens of `text`, sorted.
pub fn query_terms(text: &str) -> Vec<String> {
    let set: BTreeSet<String> = tokenize(&normalize_text(text)).filter(|t| !is_stopword(t)).collect();
    set.into_iter().collect()
}

impl KeywordIndex {
    pub fn build(articles: &[Article]) -> Self {
        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
        for (doc, a) in articles.iter().enumerate() {
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokenize(&normalize_text(&a.text())) {
                *tf.entry(t).or_default() += 1;
            }
            for (t, c) in tf {
                postings.entry(t).or_default().push((doc as u32, c));
            }
        }
        KeywordIndex {
            postings,
            pmids: articles.iter().map(|a| a.pmid.clone()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.pmids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmids.is_empty()
    }

    pub fn term_frequency(&self, term: &str, doc: usize) -> u32 {
        self.postings
            .get(term)
            .and_then(|p| p.binary_search_by_key(&(doc as u32), |&(d, _)| d).ok().map(|i| p[i].1))
            .unwrap_or(0)
    }

    /// Documents scored by the summed frequency of `terms`, highest first,
    /// ties by pmid. `allowed` filters documents before ranking.
    pub fn search<F: Fn(usize) -> bool>(&self, terms: &[String], allowed: F) -> Vec<(usize, u64)> {
        let mut score: HashMap<usize, u64> = HashMap::new();
        let distinct: BTreeSet<&String> = terms.iter().collect();
        for t in distinct {
            for &(d, c) in self.postings.get(t.as_str()).map(Vec::as_slice).unwrap_or(&[]) {
                if allowed(d as usize) {
                    *score.entry(d as usize).or_default() += c as u64;
                }
            }
        }
        let mut ranked: Vec<(usize, u64)> = score.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| self.pmids[a.0].cmp(&self.pmids[b.0])));
        ranked
    }
}

/// Ranked pmids for `terms`, restricted to `restriction` when given.
pub fn keyword_search(index: &KeywordIndex, terms: &[String], restriction: Option<&BTreeSet<String>>) -> Vec<String> {
    index
        .search(terms, |d| restriction.is_none_or(|r| r.contains(&index.pmids[d])))
        .into_iter()
        .map(|(d, _)| index.pmids[d].clone())
        .collect()
}
