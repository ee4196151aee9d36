use std::collections::BTreeMap;

use serde_json::json;

use super::{AgentError, AgentResponse, Specialist, TraceEntry, UIAction};
use crate::corpus::{tokenize, Article};
use crate::dataset::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisRequest {
    TrendByYear,
    CitationHistogram,
    ClusterCompare(u32, u32),
    JournalTop,
}

/// Lower bounds of the citation histogram bins; the last bin is open.
pub const CITATION_BINS: [u64; 5] = [0, 1, 5, 20, 100];
const TOP_JOURNALS: usize = 10;

/// Picks the analysis a query asks for. Comparison needs two cluster ids.
pub fn analysis_for_query(query: &str, cluster_ids: &[u32]) -> Result<AnalysisRequest, AgentError> {
    let toks: Vec<String> = tokenize(query).collect();
    let has = |p: &str| toks.iter().any(|t| t.starts_with(p));
    if has("compar") {
        return match cluster_ids {
            [a, b, ..] => Ok(AnalysisRequest::ClusterCompare(*a, *b)),
            _ => Err(AgentError::Contract("cluster comparison needs two cluster ids in the selection".into())),
        };
    }
    if has("citation") || has("cited") || has("histogram") || has("distribution") {
        return Ok(AnalysisRequest::CitationHistogram);
    }
    if has("journal") || has("venue") {
        return Ok(AnalysisRequest::JournalTop);
    }
    Ok(AnalysisRequest::TrendByYear)
}

/// `(year, count)` from the earliest to the latest year present, gaps
/// filled with zero. Articles without a year are ignored.
pub fn trend_by_year<'a>(articles: impl IntoIterator<Item = &'a Article>) -> Vec<(i32, u64)> {
    let mut counts: BTreeMap<i32, u64> = BTreeMap::new();
    for a in articles {
        if let Some(y) = a.year() {
            *counts.entry(y).or_default() += 1;
        }
    }
    let (Some(&lo), Some(&hi)) = (counts.keys().next(), counts.keys().next_back()) else {
        return Vec::new();
    };
    (lo..=hi).map(|y| (y, counts.get(&y).copied().unwrap_or(0))).collect()
}

/// Counts per bin `[0,1) [1,5) [5,20) [20,100) [100,∞)`.
pub fn citation_histogram<'a>(articles: impl IntoIterator<Item = &'a Article>) -> [u64; 5] {
    let mut h = [0u64; 5];
    for a in articles {
        let bin = CITATION_BINS.iter().rposition(|&lo| a.citation_count >= lo).unwrap_or(0);
        h[bin] += 1;
    }
    h
}

fn bin_label(i: usize) -> String {
    match CITATION_BINS.get(i + 1) {
        Some(hi) => format!("[{},{})", CITATION_BINS[i], hi),
        None => format!("[{},inf)", CITATION_BINS[i]),
    }
}

fn median(mut v: Vec<i32>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_unstable();
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m] as f64
    } else {
        (v[m - 1] as f64 + v[m] as f64) / 2.0
    })
}

pub fn run_analytical(
    dataset: &Dataset,
    selection: &[usize],
    request: AnalysisRequest,
) -> Result<AgentResponse, AgentError> {
    let arts = dataset.corpus.articles();
    let selected = || selection.iter().map(|&i| &arts[i]);
    let mut actions = Vec::new();
    let (tool, text, data) = match request {
        AnalysisRequest::TrendByYear => {
            if selection.is_empty() {
                return Err(AgentError::EmptySelection);
            }
            let rows = trend_by_year(selected());
            let undated = selected().filter(|a| a.year().is_none()).count();
            let listing: Vec<String> = rows.iter().map(|(y, c)| format!("{y}: {c}")).collect();
            let mut text = format!("Publications per year across {} selected articles: {}.", selection.len(), listing.join(", "));
            if undated > 0 {
                text.push_str(&format!(" {undated} articles have no year."));
            }
            if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
                actions.push(UIAction::SetYearFilter([first.0, last.0]));
            }
            let rows: Vec<_> = rows.iter().map(|(y, c)| json!([y, c])).collect();
            ("trend_by_year", text, json!({ "analysis": "trend_by_year", "columns": ["year", "count"], "rows": rows }))
        }
        AnalysisRequest::CitationHistogram => {
            if selection.is_empty() {
                return Err(AgentError::EmptySelection);
            }
            let h = citation_histogram(selected());
            let listing: Vec<String> = h.iter().enumerate().map(|(i, c)| format!("{} {c}", bin_label(i))).collect();
            let text = format!("Citation counts across {} selected articles: {}.", selection.len(), listing.join(", "));
            let rows: Vec<_> = h.iter().enumerate().map(|(i, c)| json!([bin_label(i), c])).collect();
            ("citation_histogram", text, json!({ "analysis": "citation_histogram", "columns": ["bin", "count"], "rows": rows }))
        }
        AnalysisRequest::ClusterCompare(a, b) => {
            let mut rows = Vec::new();
            let mut parts = Vec::new();
            for id in [a, b] {
                let members = dataset
                    .cluster_members(id)
                    .ok_or_else(|| AgentError::Contract(format!("unknown cluster {id}")))?;
                let years: Vec<i32> = members
                    .iter()
                    .filter_map(|p| dataset.corpus.get(p).and_then(Article::year))
                    .collect();
                let med = median(years);
                let terms: Vec<String> = dataset
                    .label(id)
                    .map(|l| l.terms.iter().take(3).map(|t| t.term.clone()).collect())
                    .unwrap_or_default();
                parts.push(format!(
                    "cluster {id}: {} articles, median year {}, terms {}",
                    members.len(),
                    med.map(|m| m.to_string()).unwrap_or_else(|| "n/a".into()),
                    if terms.is_empty() { "none".to_string() } else { terms.join(", ") }
                ));
                rows.push(json!([id, members.len(), med, terms]));
            }
            actions.push(UIAction::HighlightClusters(vec![a, b]));
            let text = format!("Comparison of {}.", parts.join("; "));
            (
                "cluster_compare",
                text,
                json!({ "analysis": "cluster_compare", "columns": ["cluster_id", "size", "year_median", "top_terms"], "rows": rows }),
            )
        }
        AnalysisRequest::JournalTop => {
            if selection.is_empty() {
                return Err(AgentError::EmptySelection);
            }
            let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
            for a in selected() {
                let j = if a.journal.is_empty() { "(unknown)" } else { a.journal.as_str() };
                *counts.entry(j).or_default() += 1;
            }
            let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
            ranked.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(y.0)));
            ranked.truncate(TOP_JOURNALS);
            let listing: Vec<String> = ranked.iter().map(|(j, c)| format!("{j} ({c})")).collect();
            let text = format!("Most frequent journals across {} selected articles: {}.", selection.len(), listing.join(", "));
            let rows: Vec<_> = ranked.iter().map(|(j, c)| json!([j, c])).collect();
            ("journal_top", text, json!({ "analysis": "journal_top", "columns": ["journal", "count"], "rows": rows }))
        }
    };
    Ok(AgentResponse {
        text,
        actions,
        provenance: Vec::new(),
        agent_trace: vec![TraceEntry::new(Specialist::Analytical, tool, format!("{} articles", selection.len()))],
        data: Some(data),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::testkit::fixture;
    use crate::corpus::PubDate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dated(years: &[i32]) -> Vec<Article> {
        years
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let mut a = Article::new(i.to_string());
                a.date = Some(PubDate::year(y));
                a
            })
            .collect()
    }

    #[test]
    fn trend_counts_and_zero_fills() {
        assert_eq!(trend_by_year(&dated(&[2020, 2020, 2021])), vec![(2020, 2), (2021, 1)]);
        assert_eq!(trend_by_year(&dated(&[2019, 2021])), vec![(2019, 1), (2020, 0), (2021, 1)]);
        assert!(trend_by_year(&[Article::new("x")]).is_empty());
    }

    #[test]
    fn trend_matches_independent_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let years: Vec<i32> = (0..200).map(|_| rng.random_range(1995..2024)).collect();
        let arts = dated(&years);
        let got = trend_by_year(&arts);
        let (lo, hi) = (*years.iter().min().unwrap(), *years.iter().max().unwrap());
        assert_eq!(got.len() as i32, hi - lo + 1);
        for (y, c) in got {
            assert_eq!(c, years.iter().filter(|&&v| v == y).count() as u64);
        }
    }

    #[test]
    fn histogram_bins_are_half_open() {
        let arts: Vec<Article> = [0u64, 1, 4, 5, 19, 20, 99, 100, 5000]
            .iter()
            .map(|&c| {
                let mut a = Article::new(c.to_string());
                a.citation_count = c;
                a
            })
            .collect();
        assert_eq!(citation_histogram(&arts), [1, 2, 2, 2, 2]);
    }

    #[test]
    fn routing_to_requests() {
        assert_eq!(analysis_for_query("citation distribution", &[]).unwrap(), AnalysisRequest::CitationHistogram);
        assert_eq!(analysis_for_query("compare clusters", &[4, 2]).unwrap(), AnalysisRequest::ClusterCompare(4, 2));
        assert!(analysis_for_query("compare clusters", &[4]).is_err());
        assert_eq!(analysis_for_query("how many per year", &[]).unwrap(), AnalysisRequest::TrendByYear);
    }

    #[test]
    fn compare_reports_size_median_terms() {
        let ds = fixture();
        let r = run_analytical(&ds, &[], AnalysisRequest::ClusterCompare(0, 1)).unwrap();
        let rows = &r.data.unwrap()["rows"];
        // Cluster 0 years: 2019 2020 2021 2018 2019 -> median 2019.
        assert_eq!(rows[0], json!([0, 5, 2019.0, ["glioma", "survival", "resection"]]));
        assert_eq!(rows[1][1], 7);
        assert_eq!(r.actions, vec![UIAction::HighlightClusters(vec![0, 1])]);
    }

    #[test]
    fn empty_selection_is_an_error() {
        let ds = fixture();
        assert!(matches!(
            run_analytical(&ds, &[], AnalysisRequest::TrendByYear),
            Err(AgentError::EmptySelection)
        ));
    }
}
