//! Twelve-article dataset shared by the agent unit tests.
//!
//! Articles 1..=5 form cluster 0 near the origin, 6..=12 form cluster 1
//! near (10, 10); cluster 2 is their common parent. Years are
//! `2018 + (i % 4)`.

use crate::clustering::{ClusterNode, ClusterTree, LevelParams};
use crate::corpus::{Article, Corpus, DatasetManifest, ManifestArtifacts, PubDate};
use crate::dataset::Dataset;
use crate::embedding::EmbeddingMatrix;
use crate::labeling::{ScoredTerm, TopicLabel};

const POS_A: [[f64; 2]; 5] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.2, 0.8]];

pub(crate) fn fixture() -> Dataset {
    let mut arts = Vec::new();
    let mut rows = Vec::new();
    for i in 1..=12usize {
        let mut a = Article::new(i.to_string());
        a.date = Some(PubDate::year(2018 + (i % 4) as i32));
        a.citation_count = (i * i) as u64;
        a.journal = if i % 3 == 0 { "J Neuro".into() } else { "Cardiol Rep".into() };
        let jitter = i as f64 * 0.01;
        if i <= 5 {
            a.title = format!("Glioma survival study {i}");
            a.abstract_text = format!("We enrolled {} patients with glioma. Survival improved after resection.", 100 + i);
            a.x = Some(POS_A[i - 1][0]);
            a.y = Some(POS_A[i - 1][1]);
            rows.push(vec![1.0, jitter, 0.0, 0.1]);
        } else {
            a.title = format!("Cardiac imaging report {i}");
            a.abstract_text = "This cohort study examined heart failure. The primary outcome was mortality.".into();
            a.x = Some(10.0 + (i % 3) as f64);
            a.y = Some(10.0 + (i % 2) as f64 + jitter);
            rows.push(vec![0.0, 0.1, 1.0, jitter]);
        }
        arts.push(a);
    }
    let ids: Vec<String> = arts.iter().map(|a| a.pmid.clone()).collect();
    let node = |id: u32, level: u32, parent: Option<u32>, members: std::ops::RangeInclusive<usize>| ClusterNode {
        cluster_id: id,
        level,
        parent_id: parent,
        member_pmids: members.map(|i| i.to_string()).collect(),
        stability: 1.0,
        label: None,
    };
    let tree = ClusterTree {
        theta: 0.6,
        schedule: vec![
            LevelParams {
                min_cluster_size: 3,
                min_samples: 3,
            },
            LevelParams {
                min_cluster_size: 6,
                min_samples: 3,
            },
        ],
        nodes: vec![node(0, 0, Some(2), 1..=5), node(1, 0, Some(2), 6..=12), node(2, 1, None, 1..=12)],
    };
    let label = |id: u32, terms: &[&str]| TopicLabel {
        cluster_id: id,
        label: terms.join(", "),
        terms: terms
            .iter()
            .enumerate()
            .map(|(k, t)| ScoredTerm {
                term: t.to_string(),
                score: 3.0 - k as f64,
            })
            .collect(),
    };
    let labels = vec![
        label(0, &["glioma", "survival", "resection"]),
        label(1, &["cardiac", "heart", "imaging"]),
        label(2, &["medicine"]),
    ];
    let manifest = DatasetManifest {
        dataset_id: "t".into(),
        n_articles: arts.len(),
        artifacts: ManifestArtifacts {
            map_tsv: "map.tsv".into(),
            ..Default::default()
        },
        pipeline_config_digest: String::new(),
        seed: 0,
    };
    let emb = EmbeddingMatrix::from_rows(ids, &rows).unwrap();
    Dataset::assemble(manifest, Corpus::new(arts).unwrap(), Some(tree), labels, vec![], Some(emb)).unwrap()
}
