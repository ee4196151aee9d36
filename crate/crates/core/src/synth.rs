//! Seeded synthetic data for tests, examples and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::clustering::{ClusterNode, ClusterTree, LevelParams};
use crate::corpus::Article;
use crate::embedding::EmbeddingMatrix;

/// `clusters` isotropic Gaussian blobs of `per_cluster` points in `dim`
/// dimensions. Centres are drawn from `N(0, separation²)` per coordinate and
/// points from `N(centre, 1)`. Row ids are zero-padded indices.
pub fn planted_blobs(
    clusters: usize,
    per_cluster: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> (EmbeddingMatrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres: Vec<Vec<f64>> = (0..clusters)
        .map(|_| (0..dim).map(|_| separation * gauss(&mut rng)).collect())
        .collect();
    let mut rows = Vec::with_capacity(clusters * per_cluster);
    let mut labels = Vec::with_capacity(clusters * per_cluster);
    for (c, centre) in centres.iter().enumerate() {
        for _ in 0..per_cluster {
            rows.push(centre.iter().map(|&m| m + gauss(&mut rng)).collect::<Vec<f64>>());
            labels.push(c);
        }
    }
    let ids = (0..rows.len()).map(|i| format!("{:07}", i + 1)).collect();
    let m = EmbeddingMatrix::from_rows(ids, &rows).expect("finite synthetic rows");
    (m, labels)
}

/// Points in the plane drawn from 2D Gaussian blobs given as
/// `(centre_x, centre_y, std, count)`.
pub fn planar_blobs(spec: &[(f64, f64, f64, usize)], seed: u64) -> (Vec<[f64; 2]>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::new();
    let mut labels = Vec::new();
    for (c, &(cx, cy, sd, count)) in spec.iter().enumerate() {
        for _ in 0..count {
            pts.push([cx + sd * gauss(&mut rng), cy + sd * gauss(&mut rng)]);
            labels.push(c);
        }
    }
    (pts, labels)
}

/// Uniform points in `[lo, hi)²`.
pub fn uniform_points(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| [rng.random_range(lo..hi), rng.random_range(lo..hi)])
        .collect()
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Articles in `clusters` groups of `docs_per_cluster`. Each carries three
/// MeSH terms from a shared background pool; the first 90 % (rounded up) of
/// each group also carry the group's planted term `Topic<c>`.
pub fn planted_term_corpus(
    clusters: usize,
    docs_per_cluster: usize,
    seed: u64,
) -> (Vec<Article>, Vec<usize>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted: Vec<String> = (0..clusters).map(|c| format!("Topic{c}")).collect();
    let with_term = (docs_per_cluster * 9).div_ceil(10);
    let mut articles = Vec::new();
    let mut groups = Vec::new();
    for (c, term) in planted.iter().enumerate() {
        for d in 0..docs_per_cluster {
            let mut a = Article::new(format!("{}", 100_000 + articles.len()));
            a.title = format!("Study {d} of group {c}");
            a.mesh_terms = background_terms(&mut rng, 3);
            if d < with_term {
                a.mesh_terms.push(term.clone());
            }
            articles.push(a);
            groups.push(c);
        }
    }
    (articles, groups, planted)
}

/// Two parents with three and two children. Every child's documents carry
/// the parent's dominant term; 60 % also carry a term unique to the child.
/// Returns the articles and a tree whose level 0 holds the five children.
pub fn sibling_corpus(docs_per_child: usize, seed: u64) -> (Vec<Article>, ClusterTree) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parents = [("Neoplasms", 3usize), ("Cardiology", 2usize)];
    let unique_docs = (docs_per_child * 3).div_ceil(5);
    let mut articles = Vec::new();
    let mut nodes = Vec::new();
    let mut parent_members: Vec<Vec<String>> = vec![Vec::new(); parents.len()];
    let mut child = 0u32;
    let n_children: u32 = parents.iter().map(|p| p.1 as u32).sum();
    for (pi, (dominant, k)) in parents.iter().enumerate() {
        for _ in 0..*k {
            let mut members = Vec::new();
            for d in 0..docs_per_child {
                let mut a = Article::new(format!("{}", 200_000 + articles.len()));
                a.mesh_terms = background_terms(&mut rng, 3);
                a.mesh_terms.push(dominant.to_string());
                if d < unique_docs {
                    a.mesh_terms.push(format!("Subtopic{child}"));
                }
                members.push(a.pmid.clone());
                articles.push(a);
            }
            parent_members[pi].extend(members.iter().cloned());
            nodes.push(ClusterNode {
                cluster_id: child,
                level: 0,
                parent_id: Some(n_children + pi as u32),
                member_pmids: members,
                stability: 1.0,
                label: None,
            });
            child += 1;
        }
    }
    for (pi, members) in parent_members.into_iter().enumerate() {
        nodes.push(ClusterNode {
            cluster_id: n_children + pi as u32,
            level: 1,
            parent_id: None,
            member_pmids: members,
            stability: 1.0,
            label: None,
        });
    }
    let tree = ClusterTree {
        theta: 0.6,
        schedule: vec![
            LevelParams {
                min_cluster_size: 5,
                min_samples: 5,
            },
            LevelParams {
                min_cluster_size: 20,
                min_samples: 5,
            },
        ],
        nodes,
    };
    (articles, tree)
}

fn background_terms(rng: &mut ChaCha8Rng, k: usize) -> Vec<String> {
    let mut picked: Vec<usize> = Vec::with_capacity(k);
    while picked.len() < k {
        let t = rng.random_range(0..BACKGROUND.len());
        if !picked.contains(&t) {
            picked.push(t);
        }
    }
    picked.into_iter().map(|t| BACKGROUND[t].to_string()).collect()
}

/// Topic vocabularies for [`literature_corpus`]: (MeSH heading, words).
const TOPICS: &[(&str, &[&str])] = &[
    ("Glioma", &["glioma", "tumor", "resection", "temozolomide", "survival", "astrocytoma", "radiotherapy", "idh"]),
    ("Heart Failure", &["cardiac", "ventricular", "ejection", "heart", "failure", "diuretic", "hospitalization", "myocardial"]),
    ("Diabetes Mellitus", &["insulin", "glucose", "glycemic", "diabetes", "metformin", "hba1c", "pancreatic", "obesity"]),
    ("Alzheimer Disease", &["amyloid", "tau", "dementia", "cognitive", "hippocampal", "neurodegeneration", "memory", "apoe"]),
    ("Influenza", &["influenza", "vaccine", "antiviral", "hemagglutinin", "respiratory", "outbreak", "oseltamivir", "strain"]),
    ("Asthma", &["asthma", "airway", "bronchial", "inhaled", "corticosteroid", "eosinophil", "wheeze", "spirometry"]),
];

const JOURNALS: &[&str] = &["J Clin Res", "Med Rep", "Ann Transl Med", "Front Biomed", "Clin Trials Q"];
const DESIGNS: &[&str] = &["randomized controlled trial", "cohort study", "case-control study", "cross-sectional study"];

/// Literature-like articles spread over six topics: topical titles and
/// abstracts (with enrolment counts, designs and outcomes the stub model
/// can extract), MeSH terms, years 2005-2024 and heavy-tailed citation
/// counts. Pmids are consecutive from 30,000,001.
pub fn literature_corpus(n: usize, seed: u64) -> Vec<Article> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let (heading, words) = TOPICS[i % TOPICS.len()];
            let mut pick = |k: usize| -> Vec<&str> { (0..k).map(|_| words[rng.random_range(0..words.len())]).collect() };
            let title_words = pick(4);
            let body_words = pick(10);
            let mut a = Article::new(format!("{}", 30_000_001 + i));
            a.title = format!("{} and {} in {} {}", title_words[0], title_words[1], title_words[2], title_words[3]);
            let enrolled = rng.random_range(20..2000);
            let design = DESIGNS[rng.random_range(0..DESIGNS.len())];
            a.abstract_text = format!(
                "This {design} enrolled {enrolled} patients to study {}. Participants received {} therapy. \
                 The primary outcome was {} {}. Findings on {} and {} are discussed.",
                body_words[..3].join(" "),
                body_words[3],
                body_words[4],
                body_words[5],
                body_words[6],
                body_words[7]
            );
            let bg1 = BACKGROUND[rng.random_range(0..BACKGROUND.len())];
            let bg2 = BACKGROUND[rng.random_range(0..BACKGROUND.len())];
            a.mesh_terms = vec![heading.to_string(), bg1.to_string()];
            if bg2 != bg1 {
                a.mesh_terms.push(bg2.to_string());
            }
            a.journal = JOURNALS[rng.random_range(0..JOURNALS.len())].to_string();
            a.date = Some(crate::corpus::PubDate::year(rng.random_range(2005..=2024)));
            let u: f64 = rng.random_range(0.0..1.0);
            a.citation_count = (u.powi(3) * 300.0) as u64;
            a.size = (a.citation_count as f64 / 20.0 * 100.0).round() / 100.0;
            a
        })
        .collect()
}

/// Citing-paper reference lists over `articles`: each of `citing` external
/// papers cites 3-8 articles, mostly from one topic, so co-citation
/// concentrates inside topics.
pub fn citing_lists(articles: &[Article], citing: usize, seed: u64) -> Vec<(String, Vec<String>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = articles.len();
    if n == 0 {
        return Vec::new();
    }
    (0..citing)
        .map(|c| {
            let topic = rng.random_range(0..TOPICS.len());
            let k = rng.random_range(3..=8);
            let mut cited: Vec<String> = (0..k)
                .map(|_| {
                    let idx = if rng.random_bool(0.85) {
                        let slots = n.div_ceil(TOPICS.len());
                        (rng.random_range(0..slots) * TOPICS.len() + topic).min(n - 1)
                    } else {
                        rng.random_range(0..n)
                    };
                    articles[idx].pmid.clone()
                })
                .collect();
            cited.sort();
            cited.dedup();
            (format!("C{:06}", c + 1), cited)
        })
        .collect()
}

const BACKGROUND: &[&str] = &[
    "Humans", "Female", "Male", "Adult", "Aged", "Middle Aged", "Child", "Animals", "Mice",
    "Retrospective Studies", "Prospective Studies", "Risk Factors", "Treatment Outcome",
    "Cohort Studies", "Follow-Up Studies", "Prognosis", "Time Factors", "Young Adult",
    "Adolescent", "Cross-Sectional Studies",
];
