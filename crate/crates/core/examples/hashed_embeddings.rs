//! Embeds a synthetic corpus with the hashed tf-idf embedder, round-trips
//! the EMB1 file and lists nearest neighbours of the first article.

use std::collections::HashSet;

use litmap::embedding::{embed_hashed_tfidf, knn_exact, load_embeddings};
use litmap::synth::literature_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let articles = literature_corpus(300, 42);
    let emb = embed_hashed_tfidf(&articles, 256, 42)?;
    let path = std::env::temp_dir().join("litmap-example.emb");
    emb.matrix.write_binary(&mut std::fs::File::create(&path)?)?;
    let ids: Vec<String> = articles.iter().map(|a| a.pmid.clone()).collect();
    let matrix = load_embeddings(&path, &ids)?;
    println!("{} x {} matrix written to {}", matrix.n(), matrix.dim(), path.display());

    println!("query: {}", articles[0].title);
    for nb in knn_exact(&matrix, 0, 5, &HashSet::new())?.neighbors {
        println!("  {:.3}  {}  {}", nb.similarity, nb.id, articles[nb.index].title);
    }
    Ok(())
}
