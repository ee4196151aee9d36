mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixture_inputs;
use litmap::pipeline::{EmbeddingSource, PipelineConfig};

fn litmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_litmap"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let out = litmap(&["config", "--seed", "42"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(PipelineConfig::parse(&text).unwrap(), PipelineConfig::with_seed(42));
    let path = dir.join("config.txt");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn stage_subcommands_reproduce_the_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let inputs = fixture_inputs(&tmp.path().join("in"), 80, 3);
    let cfg = write_config(tmp.path());
    let edges = inputs.edges.clone().unwrap();
    let full = tmp.path().join("full");
    let out = litmap(&[
        "pipeline", "--input", p(&inputs.input), "--test-embedder", "--edges", p(&edges), "--config", p(&cfg), "--out", p(&full),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let staged = tmp.path().join("staged");
    let common = ["--config", p(&cfg), "--out", p(&staged)];
    let steps: Vec<Vec<&str>> = vec![
        vec!["ingest", "--input", p(&inputs.input), "--edges", p(&edges)],
        vec!["embed", "--test-embedder"],
        vec!["layout"],
        vec!["cluster"],
        vec!["label"],
        vec!["bundle"],
        vec!["finalize"],
    ];
    for step in steps {
        let args: Vec<&str> = step.iter().chain(common.iter()).copied().collect();
        let out = litmap(&args);
        assert!(out.status.success(), "{step:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["map.tsv", "embeddings.emb", "clusters.json", "labels.json", "edges.json", "manifest.json"] {
        assert_eq!(std::fs::read(full.join(f)).unwrap(), std::fs::read(staged.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let inputs = fixture_inputs(&tmp.path().join("in"), 30, 3);
    let cfg = write_config(tmp.path());
    let out_dir = tmp.path().join("o");

    let missing_input = litmap(&["pipeline", "--input", "/nonexistent.tsv", "--test-embedder", "--config", p(&cfg), "--out", p(&out_dir)]);
    assert_eq!(missing_input.status.code(), Some(2));

    let bad_cfg = tmp.path().join("bad.txt");
    std::fs::write(&bad_cfg, "layout.k = 15\n").unwrap();
    let no_seed = litmap(&["pipeline", "--input", p(&inputs.input), "--test-embedder", "--config", p(&bad_cfg), "--out", p(&out_dir)]);
    assert_eq!(no_seed.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&no_seed.stderr).contains("seed"));

    let no_emb = litmap(&["pipeline", "--input", p(&inputs.input), "--config", p(&cfg), "--out", p(&out_dir)]);
    assert_eq!(no_emb.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&no_emb.stderr).contains("stage embed"));
    assert!(!out_dir.join("manifest.json").exists());
    assert!(out_dir.join("pipeline_state.json").exists());

    let unknown_stage = litmap(&["pipeline", "--input", p(&inputs.input), "--test-embedder", "--config", p(&cfg), "--out", p(&out_dir), "--skip", "colour"]);
    assert_eq!(unknown_stage.status.code(), Some(2));
}

#[test]
fn label_before_cluster_names_the_missing_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let inputs = fixture_inputs(&tmp.path().join("in"), 30, 3);
    let cfg = write_config(tmp.path());
    let d = tmp.path().join("d");
    let common = ["--config", p(&cfg), "--out", p(&d)];
    let run = |head: &[&str]| litmap(&head.iter().chain(common.iter()).copied().collect::<Vec<_>>());
    assert!(run(&["ingest", "--input", p(&inputs.input)]).status.success());
    assert!(run(&["embed", "--test-embedder"]).status.success());
    assert!(run(&["layout"]).status.success());
    let out = run(&["label"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("clusters.json"));
    assert!(run(&["cluster"]).status.success());
    assert!(d.join("clusters.json").exists());
}

#[test]
fn skip_bundling_without_edges_omits_the_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let inputs = fixture_inputs(&tmp.path().join("in"), 40, 3);
    assert_eq!(inputs.embeddings, EmbeddingSource::TestEmbedder);
    let cfg = write_config(tmp.path());
    let d = tmp.path().join("d");
    let out = litmap(&["pipeline", "--input", p(&inputs.input), "--test-embedder", "--config", p(&cfg), "--out", p(&d), "--skip", "bundling"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["artifacts"].get("edges").is_none());
    assert!(manifest["artifacts"]["cluster_tree"].is_string());
}

#[test]
fn serve_reports_an_unusable_data_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let out = litmap(&["serve", "--data", p(tmp.path()), "--port", "0"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no loadable dataset"));
}
