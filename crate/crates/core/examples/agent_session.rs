//! Builds a small dataset and asks each specialist a question over a
//! selection, printing the wire responses.

use litmap::agents::{handle_query, AgentTools, ContextPayload};
use litmap::corpus::{write_tsv, Corpus};
use litmap::dataset::Dataset;
use litmap::model::StubModel;
use litmap::pipeline::{run_pipeline, EmbeddingSource, PipelineConfig, PipelineInputs};
use litmap::synth::literature_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("litmap-agents-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let input = dir.join("corpus.tsv");
    write_tsv(&Corpus::new(literature_corpus(150, 9))?, std::fs::File::create(&input)?)?;
    let mut config = PipelineConfig::with_seed(42);
    config.dataset_id = "demo".into();
    let inputs = PipelineInputs { input, embeddings: EmbeddingSource::TestEmbedder, edges: None };
    run_pipeline(&inputs, &config, &dir.join("out"), &[], None)?;
    let ds = Dataset::load(&dir.join("out"))?;

    let tools = AgentTools { model: &StubModel, open: None };
    let mut payloads = vec![ContextPayload::for_pmids("demo", &[], "what is known about temozolomide in glioma")];
    let mut cluster = ContextPayload::for_pmids("demo", &[], "how many papers per year");
    cluster.selection.cluster_ids = vec![0];
    payloads.push(cluster);
    let picked: Vec<&str> = ds.corpus.articles().iter().take(3).map(|a| a.pmid.as_str()).collect();
    payloads.push(ContextPayload::for_pmids("demo", &picked, "extract the population and outcome"));
    payloads.push(ContextPayload::for_pmids("demo", &picked, "find similar papers then summarize them"));

    for p in payloads {
        println!("> {}", p.query_text);
        match handle_query(&ds, p, &tools) {
            Ok(r) => println!("{}\n", serde_json::to_string_pretty(&r)?),
            Err(e) => println!("error: {e}\n"),
        }
    }
    Ok(())
}
