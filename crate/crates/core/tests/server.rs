mod common;

use std::path::Path;
use std::sync::{Arc, OnceLock};

use common::{built_dataset, oneshot, state_for};
use litmap::dataset::Dataset;
use litmap::model::StubModel;
use litmap::server::{decode_points, serve, AppState, DatasetRegistry, ServeConfig, ServerError};
use litmap::spatial::point_in_polygon;
use serde_json::{json, Value};

struct Fixture {
    _tmp: tempfile::TempDir,
    dir: std::path::PathBuf,
    state: AppState,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let tmp = tempfile::tempdir().unwrap();
        let dir = built_dataset(tmp.path(), 200, "lit");
        let state = state_for(vec![Dataset::load(&dir).unwrap()]);
        Fixture { _tmp: tmp, dir, state }
    })
}

fn ds() -> &'static Dataset {
    &fixture().state.registry.get("lit").unwrap().dataset
}

fn run<F: std::future::Future>(f: F) -> F::Output {
    tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap().block_on(f)
}

fn get(uri: &str) -> (u16, Vec<u8>) {
    run(oneshot(&fixture().state, "GET", uri, None))
}

fn post(uri: &str, body: &str) -> (u16, Value) {
    let (s, b) = run(oneshot(&fixture().state, "POST", uri, Some(body)));
    (s, serde_json::from_slice(&b).unwrap())
}

fn json_of(b: &[u8]) -> Value {
    serde_json::from_slice(b).unwrap()
}

#[test]
fn health_and_listing() {
    let (s, b) = get("/api/health");
    assert_eq!(s, 200);
    let v = json_of(&b);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["datasets"], 1);
    let v = json_of(&get("/api/datasets").1);
    assert_eq!(v["datasets"][0]["dataset_id"], "lit");
    assert_eq!(v["datasets"][0]["n_articles"], 200);
}

#[test]
fn corrupt_dataset_is_skipped() {
    let tmp = tempfile::tempdir().unwrap();
    let good = tmp.path().join("a");
    std::fs::create_dir(&good).unwrap();
    for f in std::fs::read_dir(&fixture().dir).unwrap() {
        let f = f.unwrap().path();
        std::fs::copy(&f, good.join(f.file_name().unwrap())).unwrap();
    }
    let bad = tmp.path().join("b");
    std::fs::create_dir(&bad).unwrap();
    std::fs::copy(fixture().dir.join("manifest.json"), bad.join("manifest.json")).unwrap();
    std::fs::write(bad.join("map.tsv"), "pmid\tx\n1\tnot-a-number\n").unwrap();
    let (reg, skipped) = DatasetRegistry::load_dir(tmp.path()).unwrap();
    assert_eq!(reg.ids().collect::<Vec<_>>(), vec!["lit"]);
    assert_eq!(skipped.len(), 1);
    assert!(skipped[0].path.ends_with("b"));
}

#[test]
fn duplicate_ids_keep_the_first() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        let d = tmp.path().join(name);
        std::fs::create_dir(&d).unwrap();
        for f in std::fs::read_dir(&fixture().dir).unwrap() {
            let f = f.unwrap().path();
            std::fs::copy(&f, d.join(f.file_name().unwrap())).unwrap();
        }
    }
    let (reg, skipped) = DatasetRegistry::load_dir(tmp.path()).unwrap();
    assert_eq!(reg.len(), 1);
    assert!(skipped[0].reason.contains("duplicate"));
}

#[test]
fn points_tsv_is_the_map_file() {
    let (s, b) = get("/api/datasets/lit/points");
    assert_eq!(s, 200);
    assert_eq!(b, std::fs::read(fixture().dir.join("map.tsv")).unwrap());
    assert_eq!(get("/api/datasets/lit/points?format=xml").0, 400);
}

#[test]
fn binary_points_decode_to_dataset_columns() {
    let (s, b) = get("/api/datasets/lit/points?format=binary");
    assert_eq!(s, 200);
    assert_eq!(&b[..4], b"PTS1");
    assert_eq!(b.len(), 8 + 200 * 18);
    let cols = decode_points(&b).unwrap();
    let ds = ds();
    for (i, a) in ds.corpus.articles().iter().enumerate() {
        let (x, y) = a.position().unwrap();
        assert_eq!(cols.x[i], x as f32);
        assert_eq!(cols.y[i], y as f32);
        assert_eq!(cols.year[i] as i32, a.year().unwrap());
        assert_eq!(cols.cluster[i] as i64, ds.point_cluster[i]);
        assert_eq!(cols.size[i], a.size as f32);
    }
}

#[test]
fn artifact_endpoints_match_files() {
    for (ep, file) in [("clusters", "clusters.json"), ("labels", "labels.json"), ("edges", "edges.json")] {
        let (s, b) = get(&format!("/api/datasets/lit/{ep}"));
        assert_eq!(s, 200, "{ep}");
        let on_disk: Value = serde_json::from_slice(&std::fs::read(fixture().dir.join(file)).unwrap()).unwrap();
        assert_eq!(json_of(&b), on_disk, "{ep}");
    }
    assert_eq!(get("/api/datasets/nope/labels").0, 404);
}

#[test]
fn articles_are_paged_and_missing_ids_listed() {
    let v = json_of(&get("/api/datasets/lit/articles").1);
    assert_eq!(v["articles"].as_array().unwrap().len(), 100);
    assert_eq!(v["pages"], 2);
    let v2 = json_of(&get("/api/datasets/lit/articles?page=1").1);
    assert_eq!(v2["articles"][0]["pmid"], ds().corpus.articles()[100].pmid);
    let a = &ds().corpus.articles()[3];
    let v = json_of(&get(&format!("/api/datasets/lit/articles?pmids={},zzz", a.pmid)).1);
    assert_eq!(v["articles"][0]["title"], a.title);
    assert_eq!(v["missing"], json!(["zzz"]));
}

fn polygon_around(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let pad = 1e-6;
    let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k] - pad);
            hi[k] = hi[k].max(p[k] + pad);
        }
    }
    vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]]
}

#[test]
fn polygon_selection_matches_linear_scan() {
    let ds = ds();
    let picks: Vec<[f64; 2]> = [5, 17, 40].iter().map(|&i| ds.spatial.coord(i)).collect();
    let poly = polygon_around(&picks);
    let (s, v) = post("/api/datasets/lit/selection/polygon", &json!({ "vertices": poly }).to_string());
    assert_eq!(s, 200);
    let mut expect: Vec<&str> = (0..ds.len())
        .filter(|&i| point_in_polygon(ds.spatial.coord(i), &poly))
        .map(|i| ds.spatial.pmid(i))
        .collect();
    expect.sort_unstable();
    assert!(expect.len() >= 3);
    assert_eq!(v["pmids"], json!(expect));
    assert_eq!(v["count"], expect.len());
}

#[test]
fn polygon_errors() {
    let b = ds().spatial.bounds();
    let far = [b.max[0] + 100.0, b.max[1] + 100.0];
    let outside = json!({ "vertices": [far, [far[0] + 1.0, far[1]], [far[0], far[1] + 1.0]] }).to_string();
    let (s, v) = post("/api/datasets/lit/selection/polygon", &outside);
    assert_eq!((s, v["count"].as_u64()), (200, Some(0)));
    let (s, _) = post("/api/datasets/lit/selection/polygon", r#"{"vertices":[[0,0],[1,1]]}"#);
    assert_eq!(s, 400);
    let (s, _) = post("/api/datasets/lit/selection/polygon", r#"{"points":[]}"#);
    assert_eq!(s, 400);
    let (s, _) = post("/api/datasets/nope/selection/polygon", &outside);
    assert_eq!(s, 404);
}

#[test]
fn trend_query_over_three_articles() {
    let arts = ds().corpus.articles();
    let pmids: Vec<&str> = [0, 1, 2].iter().map(|&i| arts[i].pmid.as_str()).collect();
    let body = json!({ "dataset_id": "lit", "selection": { "pmids": pmids }, "query_text": "publication trend" });
    let (s, v) = post("/api/agent/query", &body.to_string());
    assert_eq!(s, 200);
    let years: Vec<i32> = [0, 1, 2].iter().map(|&i| arts[i].year().unwrap()).collect();
    let (lo, hi) = (*years.iter().min().unwrap(), *years.iter().max().unwrap());
    let rows = v["data"]["rows"].as_array().unwrap();
    assert_eq!(rows.len() as i32, hi - lo + 1);
    for r in rows {
        let y = r[0].as_i64().unwrap() as i32;
        assert_eq!(r[1].as_u64().unwrap() as usize, years.iter().filter(|&&z| z == y).count());
    }
    assert_eq!(v["agent_trace"][0]["agent"], "analytical");
}

#[test]
fn validation_errors_are_field_level() {
    let body = json!({ "dataset_id": "lit", "selection": { "cluster_ids": [9999] }, "query_text": "trend" });
    let (s, v) = post("/api/agent/query", &body.to_string());
    assert_eq!(s, 422);
    assert_eq!(v["fields"][0]["field"], "selection.cluster_ids");
    let (s, v) = post("/api/agent/query", r#"{"dataset_id":"lit","selection":{"pmids":"x"}}"#);
    assert_eq!(s, 400);
    assert_eq!(v["fields"][0]["field"], "selection");
    let (s, v) = post("/api/agent/query", r#"{"query_text":"x"}"#);
    assert_eq!((s, v["fields"][0]["field"].as_str()), (400, Some("dataset_id")));
    let (s, _) = post("/api/agent/query", r#"{"dataset_id":"nope","query_text":"x"}"#);
    assert_eq!(s, 404);
    let (s, _) = post("/api/agent/query", "not json");
    assert_eq!(s, 400);
}

#[test]
fn scholar_answers_are_byte_identical() {
    let body = json!({ "dataset_id": "lit", "query_text": "what is known about glioma resection in astrocytoma" }).to_string();
    let first = run(oneshot(&fixture().state, "POST", "/api/agent/query", Some(&body)));
    assert_eq!(first.0, 200);
    for _ in 0..3 {
        assert_eq!(run(oneshot(&fixture().state, "POST", "/api/agent/query", Some(&body))), first);
    }
    let v = json_of(&first.1);
    assert!(v["text"].as_str().unwrap().contains("[PMID:"));
    assert_eq!(v["actions"][0]["action_type"], "pin_papers");
}

fn dir_digest(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn endpoints_do_not_touch_artifacts() {
    let before = dir_digest(&fixture().dir);
    get("/api/datasets/lit/points?format=binary");
    post("/api/agent/query", r#"{"dataset_id":"lit","query_text":"similar papers","selection":{"cluster_ids":[0]}}"#);
    post("/api/datasets/lit/selection/polygon", r#"{"vertices":[[0,0],[1,0],[0,1]]}"#);
    assert_eq!(dir_digest(&fixture().dir), before);
}

#[test]
fn bound_port_is_a_startup_error() {
    let held = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = held.local_addr().unwrap();
    let cfg = ServeConfig {
        addr,
        data_dir: fixture().dir.clone(),
    };
    match run(serve(cfg, Arc::new(StubModel))) {
        Err(ServerError::Bind { .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn empty_data_dir_is_a_startup_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ServeConfig {
        addr: "127.0.0.1:0".parse().unwrap(),
        data_dir: tmp.path().to_path_buf(),
    };
    assert!(matches!(run(serve(cfg, Arc::new(StubModel))), Err(ServerError::NoDatasets(_))));
}
