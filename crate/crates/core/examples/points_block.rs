//! Encodes a dataset's points as the PTS1 column block and decodes it again.

use litmap::corpus::{Article, Corpus, DatasetManifest, ManifestArtifacts, PubDate};
use litmap::dataset::Dataset;
use litmap::server::{decode_points, encode_points};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let articles: Vec<Article> = (0..5)
        .map(|i| {
            let mut a = Article::new(format!("{}", 100 + i));
            a.date = Some(PubDate::year(2015 + i));
            a.x = Some(i as f64 * 1.5);
            a.y = Some(-(i as f64));
            a.size = 0.5 + i as f64;
            a
        })
        .collect();
    let manifest = DatasetManifest {
        dataset_id: "tiny".into(),
        n_articles: articles.len(),
        artifacts: ManifestArtifacts { map_tsv: "map.tsv".into(), ..Default::default() },
        pipeline_config_digest: String::new(),
        seed: 0,
    };
    let ds = Dataset::assemble(manifest, Corpus::new(articles)?, None, Vec::new(), Vec::new(), None)?;
    let block = encode_points(&ds);
    println!("{} bytes: magic {:?}", block.len(), std::str::from_utf8(&block[..4])?);
    let cols = decode_points(&block)?;
    for i in 0..cols.x.len() {
        println!("x {:>5.2}  y {:>5.2}  year {}  cluster {:>2}  size {:.2}", cols.x[i], cols.y[i], cols.year[i], cols.cluster[i], cols.size[i]);
    }
    Ok(())
}
