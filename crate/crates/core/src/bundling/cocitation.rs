use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::RawEdge;

/// Links every pair of dataset articles cited together by at least
/// `threshold` papers. `citing` maps a citing paper to the papers it cites.
pub fn co_citation_edges<'a, I>(citing: I, dataset: &HashSet<String>, threshold: u32) -> Vec<RawEdge>
where
    I: IntoIterator<Item = (&'a str, &'a [String])>,
{
    let mut counts: BTreeMap<(String, String), u32> = BTreeMap::new();
    for (_, cited) in citing {
        let inside: BTreeSet<&String> = cited.iter().filter(|p| dataset.contains(*p)).collect();
        let inside: Vec<&String> = inside.into_iter().collect();
        for (i, a) in inside.iter().enumerate() {
            for b in &inside[i + 1..] {
                *counts.entry(((*a).clone(), (*b).clone())).or_default() += 1;
            }
        }
    }
    counts
        .into_iter()
        .filter(|&(_, c)| c >= threshold.max(1))
        .map(|((source, target), c)| RawEdge {
            source,
            target,
            weight: c as f64,
        })
        .collect()
}

/// Direct citation links between dataset articles; repeated pairs add up,
/// self-citations are dropped.
pub fn citation_edges<'a, I>(pairs: I, dataset: &HashSet<String>) -> Vec<RawEdge>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut counts: BTreeMap<(String, String), u32> = BTreeMap::new();
    for (from, to) in pairs {
        if from != to && dataset.contains(from) && dataset.contains(to) {
            *counts.entry((from.to_string(), to.to_string())).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .map(|((source, target), c)| RawEdge {
            source,
            target,
            weight: c as f64,
        })
        .collect()
}
