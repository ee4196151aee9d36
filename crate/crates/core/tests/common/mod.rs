#![allow(dead_code)]

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use litmap::corpus::{write_tsv, Corpus};
use litmap::dataset::Dataset;
use litmap::model::StubModel;
use litmap::pipeline::{run_pipeline, EmbeddingSource, PipelineConfig, PipelineInputs};
use litmap::server::{router, AppState, DatasetRegistry};
use litmap::synth::{citing_lists, literature_corpus};
use tower::ServiceExt;

/// Synthetic corpus TSV plus citing-list TSV under `dir`.
pub fn fixture_inputs(dir: &Path, n: usize, seed: u64) -> PipelineInputs {
    std::fs::create_dir_all(dir).unwrap();
    let corpus = Corpus::new(literature_corpus(n, seed)).unwrap();
    let input = dir.join("corpus.tsv");
    write_tsv(&corpus, std::fs::File::create(&input).unwrap()).unwrap();
    let mut cites = String::from("citing\tcited\n");
    for (c, l) in citing_lists(corpus.articles(), 3 * n, seed + 1) {
        cites.push_str(&format!("{c}\t{}\n", l.join(";")));
    }
    let edges = dir.join("citing.tsv");
    std::fs::write(&edges, cites).unwrap();
    PipelineInputs {
        input,
        embeddings: EmbeddingSource::TestEmbedder,
        edges: Some(edges),
    }
}

/// Full pipeline over an `n`-article fixture with seed 42; returns the
/// dataset directory.
pub fn built_dataset(root: &Path, n: usize, id: &str) -> PathBuf {
    let inputs = fixture_inputs(&root.join("input"), n, 7);
    let mut config = PipelineConfig::with_seed(42);
    config.dataset_id = id.into();
    let out = root.join(id);
    run_pipeline(&inputs, &config, &out, &[], None).unwrap();
    out
}

pub fn state_for(datasets: Vec<Dataset>) -> AppState {
    let mut registry = DatasetRegistry::default();
    for d in datasets {
        registry.insert(d);
    }
    AppState {
        registry: Arc::new(registry),
        model: Arc::new(StubModel),
    }
}

/// In-process request through the router.
pub async fn oneshot(state: &AppState, method: &str, uri: &str, body: Option<&str>) -> (u16, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status().as_u16();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

/// Serves `state` on an ephemeral local port from a background runtime.
pub fn spawn_server(state: AppState) -> (SocketAddr, tokio::runtime::Runtime) {
    let rt = tokio::runtime::Runtime::new().unwrap();
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let addr = listener.local_addr().unwrap();
    rt.spawn(async move { axum::serve(listener, router(state)).await.unwrap() });
    (addr, rt)
}

/// Minimal HTTP/1.1 exchange over a fresh connection.
pub fn http(addr: SocketAddr, method: &str, path: &str, body: Option<&str>) -> (u16, Vec<u8>) {
    let mut s = TcpStream::connect(addr).unwrap();
    let body = body.unwrap_or("");
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut raw = Vec::new();
    s.read_to_end(&mut raw).unwrap();
    let split = raw.windows(4).position(|w| w == b"\r\n\r\n").expect("header terminator");
    let head = String::from_utf8_lossy(&raw[..split]);
    let status: u16 = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(!head.to_ascii_lowercase().contains("transfer-encoding: chunked"));
    (status, raw[split + 4..].to_vec())
}
