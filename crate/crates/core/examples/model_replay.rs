//! Records model responses once and answers from the recording afterwards.

use litmap::model::{ModelClient, ModelDocument, ModelRequest, ReplayModel, StubModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("litmap-replay-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let request = ModelRequest::Answer {
        question: "does resection extent matter".into(),
        documents: vec![ModelDocument {
            pmid: "30000001".into(),
            title: "Extent of resection in glioma".into(),
            text: "Gross total resection improved survival.".into(),
        }],
    };
    let replay = ReplayModel::new(&dir);
    let live_answer = StubModel.complete(&request)?;
    let path = replay.record(&request, &live_answer)?;
    println!("recorded {} under {}", request.key(), path.display());
    println!("replayed: {}", replay.complete(&request)?);

    let other = ModelRequest::Label { terms: vec!["glioma".into()], titles: vec![] };
    println!("unrecorded request: {}", replay.complete(&other).unwrap_err());
    Ok(())
}
