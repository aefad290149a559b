use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use matcheck_core::testkit::{blocks, designs};
use matcheck_core::{serialize_composition, Library};
use matcheck_service::router;

fn app() -> Router {
    router(Arc::new(blocks::library()), false)
}

async fn call(app: &Router, method: &str, uri: &str, body: Vec<u8>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn envelope_ok(v: &Value) -> bool {
    v["schema"] == 1 && (v.get("result").is_some() != v.get("diagnostics").is_some())
}

#[tokio::test]
async fn blocks_are_sorted_summaries() {
    let (status, v) = call(&app(), "GET", "/api/v1/blocks", vec![]).await;
    assert_eq!(status, StatusCode::OK);
    assert!(envelope_ok(&v));
    let ids: Vec<&str> = v["result"].as_array().unwrap().iter().map(|b| b["block_id"].as_str().unwrap()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    assert_eq!(ids.len(), blocks::all().len());

    let empty = router(Arc::new(Library::default()), false);
    let (_, v) = call(&empty, "GET", "/api/v1/blocks", vec![]).await;
    assert_eq!(v["result"], json!([]));
}

#[tokio::test]
async fn check_clean_demo() {
    let body = serialize_composition(&designs::env_node());
    let (status, v) = call(&app(), "POST", "/api/v1/check", body).await;
    assert_eq!(status, StatusCode::OK);
    assert!(envelope_ok(&v));
    assert_eq!(v["result"]["errors"], 0);
    let rails = v["result"]["rails"].as_array().unwrap();
    let r33 = rails.iter().find(|r| r["rail"] == "3V3").unwrap();
    assert_eq!(r33["supply_milliamps"], 300.0);
}

#[tokio::test]
async fn check_error_statuses() {
    let (status, v) = call(&app(), "POST", "/api/v1/check", b"{ nope".to_vec()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["diagnostics"][0]["code"], "P001");
    assert!(envelope_ok(&v));

    let mut doc = designs::env_node();
    doc.instances[0].block_id = "lora_module".into();
    let (status, v) = call(&app(), "POST", "/api/v1/check", serialize_composition(&doc)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["diagnostics"][0]["code"], "R001");
}

#[tokio::test]
async fn merge_payload_and_refusal() {
    let body = serialize_composition(&designs::gps_logger());
    let (status, first) = call(&app(), "POST", "/api/v1/merge", body.clone()).await;
    assert_eq!(status, StatusCode::OK);
    let flat: Value = serde_json::from_str(first["result"]["flat_json"].as_str().unwrap()).unwrap();
    assert_eq!(flat["design"], "gps_logger");
    let (_, second) = call(&app(), "POST", "/api/v1/merge", body).await;
    assert_eq!(first, second);

    let body = serialize_composition(&designs::catalog("E004").unwrap());
    let (status, v) = call(&app(), "POST", "/api/v1/merge", body).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["diagnostics"][0]["code"], "E004");
}

#[tokio::test]
async fn autoattach_reports_ambiguity() {
    let body = serialize_composition(&designs::catalog("W101").unwrap());
    let (status, v) = call(&app(), "POST", "/api/v1/autoattach", body).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["result"]["warnings"][0]["code"], "W101");
    assert_eq!(v["result"]["document"]["name"], "catalog_w101");
}

#[tokio::test]
async fn edit_connect_and_reject() {
    let doc: Value = serde_json::from_slice(&serialize_composition(&designs::catalog("W104").unwrap())).unwrap();
    let connect = |a: &str, b: &str| {
        json!({
            "document": doc,
            "op": {"op": "connect", "a": {"instance": a, "port": "SCL"}, "b": {"instance": b, "port": "SCL"}},
        })
    };
    let (status, v) = call(&app(), "POST", "/api/v1/edit", serde_json::to_vec(&connect("mcu", "sensor")).unwrap()).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert!(v["result"]["edge"].is_string());
    assert_eq!(v["result"]["document"]["edges"].as_array().unwrap().len(), 3);

    let req = json!({
        "document": doc,
        "op": {"op": "connect", "a": {"instance": "mcu", "port": "VDD"}, "b": {"instance": "sensor", "port": "VDD"}},
    });
    let (status, v) = call(&app(), "POST", "/api/v1/edit", serde_json::to_vec(&req).unwrap()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["diagnostics"][0]["code"], "C001");

    let req = json!({"document": {"schema": 1}, "op": {"op": "remove_rail", "name": "GND"}});
    let (status, v) = call(&app(), "POST", "/api/v1/edit", serde_json::to_vec(&req).unwrap()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["diagnostics"][0]["path"].as_str().unwrap().starts_with("/document"));
}

#[tokio::test]
async fn explain_and_parse_block() {
    let (status, v) = call(&app(), "GET", "/api/v1/explain/E004", vec![]).await;
    assert_eq!(status, StatusCode::OK);
    assert!(v["result"]["explanation"].as_str().unwrap().contains("supply"));
    let (status, _) = call(&app(), "GET", "/api/v1/explain/Z999", vec![]).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let pkg = matcheck_core::serialize_block(&blocks::mcu33());
    let (status, v) = call(&app(), "POST", "/api/v1/parse/block", pkg).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["result"]["block_id"], "mcu33");
    let bad = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/parse/dangling_net.block.json")).unwrap();
    let (status, v) = call(&app(), "POST", "/api/v1/parse/block", bad).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["diagnostics"][0]["code"], "P003");
}

/// Responses depend only on the request, whatever ran before it.
#[tokio::test]
async fn requests_replay_in_any_order() {
    let app = app();
    let reqs: Vec<(&str, &str, Vec<u8>)> = vec![
        ("POST", "/api/v1/check", serialize_composition(&designs::env_node())),
        ("POST", "/api/v1/merge", serialize_composition(&designs::gps_logger())),
        ("POST", "/api/v1/autoattach", serialize_composition(&designs::catalog("W102").unwrap())),
        ("POST", "/api/v1/check", serialize_composition(&designs::catalog("E005").unwrap())),
        ("GET", "/api/v1/blocks", vec![]),
    ];
    let mut forward = Vec::new();
    for (m, u, b) in &reqs {
        forward.push(call(&app, m, u, b.clone()).await);
    }
    let mut backward = Vec::new();
    for (m, u, b) in reqs.iter().rev() {
        backward.push(call(&app, m, u, b.clone()).await);
    }
    backward.reverse();
    assert_eq!(forward, backward);
}
