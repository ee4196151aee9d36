//! Runs the whole offline pipeline from Rust and prints the manifest.
//!
//! cargo run --example build_dataset -- OUT_DIR

use std::path::PathBuf;

use litmap::corpus::{write_tsv, Corpus};
use litmap::pipeline::{run_pipeline, EmbeddingSource, PipelineConfig, PipelineInputs};
use litmap::synth::{citing_lists, literature_corpus};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "dataset".into()));
    let input_dir = out.with_extension("input");
    std::fs::create_dir_all(&input_dir)?;

    let corpus = Corpus::new(literature_corpus(400, 42))?;
    let input = input_dir.join("corpus.tsv");
    write_tsv(&corpus, std::fs::File::create(&input)?)?;
    let mut cites = String::from("citing\tcited\n");
    for (c, l) in citing_lists(corpus.articles(), 1200, 43) {
        cites.push_str(&format!("{c}\t{}\n", l.join(";")));
    }
    let edges = input_dir.join("citing.tsv");
    std::fs::write(&edges, cites)?;

    let mut config = PipelineConfig::with_seed(42);
    config.dataset_id = "synthetic".into();
    let inputs = PipelineInputs { input, embeddings: EmbeddingSource::TestEmbedder, edges: Some(edges) };
    let manifest = run_pipeline(&inputs, &config, &out, &[], None)?;
    println!("{}", serde_json::to_string_pretty(&manifest)?);
    Ok(())
}
