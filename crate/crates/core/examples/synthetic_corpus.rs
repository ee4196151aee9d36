//! Writes a synthetic literature corpus and its citing lists.
//!
//! cargo run --example synthetic_corpus -- OUT_DIR [N] [SEED]

use std::path::PathBuf;

use litmap::corpus::{write_tsv, Corpus};
use litmap::synth::{citing_lists, literature_corpus};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "synthetic".into()));
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);
    std::fs::create_dir_all(&out)?;

    let corpus = Corpus::new(literature_corpus(n, seed))?;
    write_tsv(&corpus, std::fs::File::create(out.join("corpus.tsv"))?)?;
    let mut cites = String::from("citing\tcited\n");
    for (citing, cited) in citing_lists(corpus.articles(), 3 * n, seed + 1) {
        cites.push_str(&format!("{citing}\t{}\n", cited.join(";")));
    }
    std::fs::write(out.join("citing.tsv"), cites)?;
    println!("{} articles written to {}", corpus.len(), out.display());
    Ok(())
}
