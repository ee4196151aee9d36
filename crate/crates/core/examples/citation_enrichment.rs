//! Fills citation counts from recorded bibliographic responses and reports
//! the records that match no article.

use litmap::corpus::{fetch_bibliographic, merge_sources, FixtureClient};
use litmap::synth::literature_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut articles = literature_corpus(8, 1);
    for a in &mut articles {
        a.citation_count = 0;
        a.size = 0.0;
    }
    let dir = tempfile_dir()?;
    for (i, a) in articles.iter().enumerate().take(6) {
        let body = format!(r#"{{"pmid": {}, "citation_count": {}, "relative_citation_ratio": {:.2}}}"#, a.pmid, 10 * i, 0.5 * i as f64);
        std::fs::write(dir.join(format!("{}.json", a.pmid)), body)?;
    }
    std::fs::write(dir.join("999.json"), r#"{"pmid": 999, "citation_count": 4}"#)?;

    let mut wanted: Vec<String> = articles.iter().map(|a| a.pmid.clone()).collect();
    wanted.push("999".into());
    let fetched = fetch_bibliographic(&wanted, &FixtureClient::new(&dir).with_batch(3))?;
    println!("{} records, unresolved: {:?}", fetched.records.len(), fetched.unresolved);

    let (merged, report) = merge_sources(articles, &fetched.records);
    for a in &merged {
        println!("{}  cited {:>3}  size {:.2}", a.pmid, a.citation_count, a.size);
    }
    println!("unmatched enrichment records: {:?}", report.unmatched);
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let d = std::env::temp_dir().join(format!("litmap-icite-{}", std::process::id()));
    std::fs::create_dir_all(&d)?;
    Ok(d)
}
