use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use gratis::Exec;
use gratis_cli::service::{router, ServiceConfig};

fn app(dir: &std::path::Path) -> Router {
    router(&ServiceConfig { data_dir: dir.to_path_buf(), workers: 2, cors_origin: None, exec: Exec::Parallel }).unwrap()
}

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

fn post(uri: &str, body: Value) -> Request<Body> {
    Request::post(uri).header(header::CONTENT_TYPE, "application/json").body(Body::from(body.to_string())).unwrap()
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn parse(b: &[u8]) -> Value {
    serde_json::from_slice(b).unwrap()
}

/// `(id, event, data)` triples of an SSE body.
fn sse_frames(body: &str) -> Vec<(u64, String, Value)> {
    let mut out = Vec::new();
    for block in body.split("\n\n") {
        let (mut id, mut ev, mut data) = (None, None, None);
        for line in block.lines() {
            if let Some(v) = line.strip_prefix("id: ") {
                id = Some(v.parse().unwrap());
            } else if let Some(v) = line.strip_prefix("event: ") {
                ev = Some(v.to_string());
            } else if let Some(v) = line.strip_prefix("data: ") {
                data = Some(serde_json::from_str(v).unwrap());
            }
        }
        if let (Some(i), Some(e), Some(d)) = (id, ev, data) {
            out.push((i, e, d));
        }
    }
    out
}

fn appendix_payload() -> Value {
    json!({
        "period": 12,
        "length": 120,
        "count": 2,
        "seed": 3,
        "targets": {
            "nsdiffs": 1, "x.acf1": 0.85, "entropy": 0.55, "stability": 0.73,
            "trend": 0.91, "seasonal.strength": 0.95, "garch.r2": 0.07
        },
        "ga": { "population": 10, "max_generations": 5 }
    })
}

async fn wait_done(app: &Router, id: &str) -> Value {
    for _ in 0..600 {
        let (s, b) = call(app, get(&format!("/api/jobs/{id}"))).await;
        assert_eq!(s, StatusCode::OK);
        let rec = parse(&b);
        if rec["status"] == "done" || rec["status"] == "failed" {
            return rec;
        }
        tokio::time::sleep(std::time::Duration::from_millis(50)).await;
    }
    panic!("job {id} did not finish");
}

#[tokio::test(flavor = "multi_thread")]
async fn tune_job_streams_monotone_progress() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (s, b) = call(&app, post("/api/tune", appendix_payload())).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let id = parse(&b)["job_id"].as_str().unwrap().to_string();

    // the stream stays open until the job closes it
    let (s, body) = call(&app, get(&format!("/api/jobs/{id}/events"))).await;
    assert_eq!(s, StatusCode::OK);
    let frames = sse_frames(&String::from_utf8(body).unwrap());
    let seqs: Vec<u64> = frames.iter().map(|f| f.0).collect();
    assert_eq!(seqs, (0..frames.len() as u64).collect::<Vec<_>>());
    assert_eq!(frames.last().unwrap().1, "done");
    for series in 0..2 {
        let best: Vec<f64> = frames
            .iter()
            .filter(|f| f.1 == "progress" && f.2["series_index"] == series)
            .map(|f| f.2["best_fitness"].as_f64().unwrap_or(f64::NEG_INFINITY))
            .collect();
        assert!(!best.is_empty());
        assert!(best.windows(2).all(|w| w[1] >= w[0]), "{best:?}");
    }

    let rec = wait_done(&app, &id).await;
    assert_eq!(rec["status"], "done");
    assert_eq!(rec["kind"], "tune");
    assert_eq!(rec["event_count"].as_u64().unwrap(), frames.len() as u64);

    let (s, bytes) = call(&app, get(&format!("/api/jobs/{id}/result"))).await;
    assert_eq!(s, StatusCode::OK);
    let bundle = parse(&bytes);
    assert_eq!(bundle["series"].as_array().unwrap().len(), 2);
    assert_eq!(bundle["series"][0]["values"].as_array().unwrap().len(), 120);
    let on_disk = std::fs::read(dir.path().join("jobs").join(&id).join("result.json")).unwrap();
    assert_eq!(on_disk, bytes);
    let manifest = parse(&std::fs::read(dir.path().join("jobs").join(&id).join("manifest.json")).unwrap());
    assert_eq!(manifest["status"], "done");

    // resuming after the second event replays the rest without gaps
    let req = Request::get(format!("/api/jobs/{id}/events")).header("last-event-id", "1").body(Body::empty()).unwrap();
    let (_, body) = call(&app, req).await;
    let resumed = sse_frames(&String::from_utf8(body).unwrap());
    assert_eq!(resumed.first().unwrap().0, 2);
    assert_eq!(resumed.len(), frames.len() - 2);
}

#[tokio::test(flavor = "multi_thread")]
async fn result_before_done_is_a_conflict() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let mut p = appendix_payload();
    p["ga"] = json!({ "population": 20, "max_generations": 200, "tolerance": 0.0 });
    p["count"] = json!(1);
    let (_, b) = call(&app, post("/api/tune", p)).await;
    let id = parse(&b)["job_id"].as_str().unwrap().to_string();
    let (s, b) = call(&app, get(&format!("/api/jobs/{id}/result"))).await;
    assert_eq!(s, StatusCode::CONFLICT, "{}", String::from_utf8_lossy(&b));
}

#[tokio::test]
async fn unknown_jobs_are_404() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    for uri in ["/api/jobs/unknown", "/api/jobs/unknown/events", "/api/jobs/unknown/result"] {
        assert_eq!(call(&app, get(uri)).await.0, StatusCode::NOT_FOUND, "{uri}");
    }
}

#[tokio::test]
async fn schema_violations_are_400() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let bad = [
        ("/api/tune", json!({ "period": 12 })),
        ("/api/tune", json!({ "period": 1, "length": 50, "targets": { "seasonal.strength": 0.9 } })),
        ("/api/tune", json!({ "period": 1, "length": 50, "targets": { "wiggle": 0.9 } })),
        ("/api/tune", json!({ "period": 1, "length": 50, "targets": { "trend": 0.9 }, "ga": { "populaton": 3 } })),
        ("/api/generate", json!({ "count": 0 })),
        ("/api/generate", json!({ "count": "many" })),
        ("/api/features", json!({ "series": [{ "periods": [], "values": [1.0, 2.0] }] })),
    ];
    for (uri, body) in bad {
        let (s, b) = call(&app, post(uri, body.clone())).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{uri} {body}");
        assert!(parse(&b)["error"].is_string());
    }
    let raw = Request::post("/api/generate").body(Body::from("{not json")).unwrap();
    assert_eq!(call(&app, raw).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn small_generate_is_synchronous() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (s, b) = call(&app, post("/api/generate", json!({ "period": 12, "count": 10, "length": 120, "seed": 7 }))).await;
    assert_eq!(s, StatusCode::OK);
    let v = parse(&b);
    let series = v["series"].as_array().unwrap();
    assert_eq!(series.len(), 10);
    assert!(series.iter().all(|s| s["values"].as_array().unwrap().len() == 120));
    let (_, again) = call(&app, post("/api/generate", json!({ "period": 12, "count": 10, "length": 120, "seed": 7 }))).await;
    assert_eq!(b, again);
}

#[tokio::test(flavor = "multi_thread")]
async fn large_generate_becomes_a_job() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (s, b) = call(&app, post("/api/generate", json!({ "count": 150, "length": 20, "seed": 1 }))).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let id = parse(&b)["job_id"].as_str().unwrap().to_string();
    assert_eq!(wait_done(&app, &id).await["status"], "done");
    let (s, bytes) = call(&app, get(&format!("/api/jobs/{id}/result"))).await;
    assert_eq!(s, StatusCode::OK);
    let recs = gratis::formats::read_series_jsonl(bytes.as_slice()).unwrap();
    assert_eq!(recs.len(), 150);
}

#[tokio::test]
async fn features_and_names() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let values: Vec<f64> = (0..60).map(|t| (t as f64 * 0.5).sin() + 0.01 * t as f64).collect();
    let (s, b) = call(&app, post("/api/features", json!({ "series": [{ "id": "a", "periods": [12], "values": values }] }))).await;
    assert_eq!(s, StatusCode::OK);
    let v = parse(&b);
    let row = &v["features"][0];
    assert_eq!(row["id"], "a");
    assert_eq!(row["names"].as_array().unwrap().len(), 42);
    assert_eq!(row["values"].as_array().unwrap().len(), 42);

    let (s, b) = call(&app, get("/api/feature-names")).await;
    assert_eq!(s, StatusCode::OK);
    let v = parse(&b);
    let list = v["features"].as_array().unwrap();
    assert_eq!(list.len(), 42);
    let e = list.iter().find(|f| f["name"] == "entropy").unwrap();
    assert_eq!(e["range"]["min"], 0.0);
    assert_eq!(e["range"]["max"], 1.0);
    assert_eq!(e["range"]["min_inclusive"], false);
    assert_eq!(e["range"]["max_inclusive"], true);
    assert_eq!(e["seasonal_only"], false);
    assert_eq!(list.iter().find(|f| f["name"] == "seasonal.strength").unwrap()["seasonal_only"], true);
}

#[tokio::test]
async fn cors_allows_the_ui() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let req = Request::options("/api/tune")
        .header(header::ORIGIN, "http://localhost:5173")
        .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
        .header(header::ACCESS_CONTROL_REQUEST_HEADERS, "content-type")
        .body(Body::empty())
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert!(resp.status().is_success());
    assert_eq!(resp.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN], "*");
}
