use std::sync::OnceLock;

use regex::Regex;

use super::Specialist;
use crate::corpus::tokenize;

const ANALYTICAL: &[&str] = &["trend", "count", "how many", "compare", "distribution", "statistics"];
const DISCOVERY: &[&str] = &["similar", "related", "nearby", "gap", "underexplored", "hypothesis"];
const EVIDENCE: &[&str] = &["extract", "table", "population", "intervention", "outcome", "study design"];

/// Inflections accepted after a keyword stem.
const SUFFIXES: &[&str] = &["", "s", "es", "e", "ed", "d", "ing", "ion", "ions", "ity", "ities", "al", "ly"];

fn stem(word: &str) -> &str {
    word.strip_suffix('e').or_else(|| word.strip_suffix('s')).unwrap_or(word)
}

fn word_matches(token: &str, keyword: &str) -> bool {
    if token == keyword {
        return true;
    }
    // hypothesis -> hypotheses
    if let Some(base) = keyword.strip_suffix("is") {
        if token.strip_prefix(base) == Some("es") {
            return true;
        }
    }
    let s = stem(keyword);
    token.strip_prefix(s).is_some_and(|rest| SUFFIXES.contains(&rest))
}

fn phrase_in(tokens: &[String], phrase: &str) -> bool {
    let words: Vec<&str> = phrase.split(' ').collect();
    tokens
        .windows(words.len())
        .any(|w| w.iter().zip(&words).all(|(t, k)| word_matches(t, k)))
}

fn any_keyword(tokens: &[String], keywords: &[&str]) -> bool {
    keywords.iter().any(|k| phrase_in(tokens, k))
}

fn single_route(query: &str) -> Specialist {
    let tokens: Vec<String> = tokenize(query).collect();
    if any_keyword(&tokens, ANALYTICAL) {
        Specialist::Analytical
    } else if any_keyword(&tokens, DISCOVERY) {
        Specialist::Discovery
    } else if any_keyword(&tokens, EVIDENCE) {
        Specialist::Evidence
    } else {
        Specialist::Scholar
    }
}

fn then_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)[,;]?\s*\b(?:and then|then)\b\s*").unwrap())
}

/// Splits a query into ordered sub-tasks on "then" and routes each one.
/// A query without "then" yields a single step.
pub fn plan_query(query: &str) -> Vec<(String, Specialist)> {
    let parts: Vec<String> = then_re()
        .split(query)
        .map(|p| p.trim().to_string())
        .filter(|p| !p.is_empty())
        .collect();
    if parts.len() <= 1 {
        let q = query.trim().to_string();
        let who = single_route(&q);
        return vec![(q, who)];
    }
    parts.into_iter().map(|p| {
        let who = single_route(&p);
        (p, who)
    }).collect()
}

/// Keyword routing. Analytical keywords win over discovery, discovery over
/// evidence; anything else, and every composite query, goes to the Scholar.
pub fn route_intent(query: &str) -> Specialist {
    let plan = plan_query(query);
    if plan.len() > 1 {
        Specialist::Scholar
    } else {
        plan[0].1
    }
}
