//! Stateless JSON API over the checker and merger.
//!
//! Every response is an envelope `{"ok", "schema": 1}` plus exactly one of
//! `result` (on success) or `diagnostics` (on failure). Documents travel in
//! each request; the only shared state is the block library loaded at
//! startup.
//!
//! | route | body | success |
//! |-------|------|---------|
//! | `GET /api/v1/blocks` | | block summaries sorted by id |
//! | `POST /api/v1/check` | composition | diagnostics, rail loads, operating voltages |
//! | `POST /api/v1/merge` | composition | `flat_json` and `bom_csv` export bytes |
//! | `POST /api/v1/autoattach` | composition | updated document and W101/W102 warnings |
//! | `POST /api/v1/edit` | `{"document", "op"}` | edited document and its diagnostics |
//! | `POST /api/v1/parse/block` | block package | canonical package |
//! | `GET /api/v1/explain/{code}` | | catalog text |
//!
//! Failures: 400 for parse errors, 422 for resolve and edit errors, 409 when
//! a merge is refused, 404 for unknown explain codes.

mod edit;

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;

use matcheck_core::checker::rail_summaries;
use matcheck_core::merger::ExportFormat;
use matcheck_core::model::InterfaceType;
use matcheck_core::{
    auto_attach_power, check_report, explain, export, merge, parse_block, parse_composition,
    resolve, serialize_block, serialize_composition, CompositionDocument, Diagnostic, Library,
    MergeError, ResolvedComposition,
};

pub const DEFAULT_PORT: u16 = 8733;
pub const API_SCHEMA: u64 = 1;

#[derive(Clone)]
struct AppState {
    library: Arc<Library>,
}

/// Builds the API router. `cors` allows any origin, for running the UI
/// from a development server.
pub fn router(library: Arc<Library>, cors: bool) -> Router {
    let app = Router::new()
        .route("/api/v1/blocks", get(blocks))
        .route("/api/v1/check", post(check_doc))
        .route("/api/v1/merge", post(merge_doc))
        .route("/api/v1/autoattach", post(autoattach))
        .route("/api/v1/edit", post(edit::edit))
        .route("/api/v1/parse/block", post(parse_block_doc))
        .route("/api/v1/explain/{code}", get(explain_code))
        .with_state(AppState { library });
    if cors {
        app.layer(CorsLayer::permissive())
    } else {
        app
    }
}

/// Serves `router` on an already-bound listener until the future is dropped.
pub async fn serve(listener: tokio::net::TcpListener, router: Router) -> std::io::Result<()> {
    axum::serve(listener, router).await
}

fn ok(result: Value) -> Response {
    Json(json!({"ok": true, "schema": API_SCHEMA, "result": result})).into_response()
}

fn fail(status: StatusCode, diagnostics: impl Serialize) -> Response {
    let body = json!({"ok": false, "schema": API_SCHEMA, "diagnostics": diagnostics});
    (status, Json(body)).into_response()
}

fn document_json(doc: &CompositionDocument) -> Value {
    serde_json::from_slice(&serialize_composition(doc)).expect("canonical JSON")
}

/// Parses and resolves a composition body, or produces the error response.
fn load(
    library: &Library,
    body: &[u8],
) -> Result<(CompositionDocument, ResolvedComposition), Response> {
    let doc = parse_composition(body).map_err(|d| fail(StatusCode::BAD_REQUEST, d))?;
    let resolved = resolve(&doc, library).map_err(|d| fail(StatusCode::UNPROCESSABLE_ENTITY, d))?;
    Ok((doc, resolved))
}

fn check_result(resolved: &ResolvedComposition) -> Value {
    let report = check_report(resolved);
    json!({
        "diagnostics": report.diagnostics,
        "errors": report.diagnostics.iter().filter(|d| d.is_error()).count(),
        "warnings": report.diagnostics.iter().filter(|d| !d.is_error()).count(),
        "rails": rail_summaries(&report.propagation.state),
        "instances": report.propagation.state.instances,
    })
}

async fn blocks(State(state): State<AppState>) -> Response {
    let summaries: Vec<Value> = state
        .library
        .iter()
        .map(|b| {
            let ports: Vec<Value> = b
                .ports()
                .iter()
                .map(|p| {
                    let mut v = json!({
                        "name": p.name,
                        "kind": p.iface.kind(),
                        "required": p.required,
                    });
                    if let Some(line) = p.iface.line() {
                        v["line"] = json!(line.as_str());
                    }
                    if let InterfaceType::Power(spec) = &p.iface {
                        v["range"] = json!(spec.range);
                    }
                    v
                })
                .collect();
            let configs: Vec<Value> = b
                .configs()
                .iter()
                .map(|o| {
                    json!({
                        "name": o.name,
                        "default": o.default_variant().name,
                        "variants": o.variants.iter().map(|v| &v.name).collect::<Vec<_>>(),
                    })
                })
                .collect();
            json!({
                "block_id": b.block_id(),
                "version": b.version(),
                "components": b.components().len(),
                "ports": ports,
                "configs": configs,
            })
        })
        .collect();
    ok(json!(summaries))
}

async fn check_doc(State(state): State<AppState>, body: Bytes) -> Response {
    match load(&state.library, &body) {
        Ok((_, resolved)) => ok(check_result(&resolved)),
        Err(resp) => resp,
    }
}

async fn merge_doc(State(state): State<AppState>, body: Bytes) -> Response {
    let (_, resolved) = match load(&state.library, &body) {
        Ok(x) => x,
        Err(resp) => return resp,
    };
    let report = check_report(&resolved);
    match merge(&resolved, &report.diagnostics) {
        Ok(merged) => {
            let flat = String::from_utf8(export(&merged, ExportFormat::FlatJson)).expect("UTF-8");
            let bom = String::from_utf8(export(&merged, ExportFormat::CsvBom)).expect("UTF-8");
            ok(json!({"flat_json": flat, "bom_csv": bom}))
        }
        Err(MergeError::Refused { .. }) => {
            let blocking: Vec<&Diagnostic> =
                report.diagnostics.iter().filter(|d| d.is_error()).collect();
            fail(StatusCode::CONFLICT, blocking)
        }
        Err(e @ MergeError::InternalInconsistency { .. }) => fail(
            StatusCode::INTERNAL_SERVER_ERROR,
            [json!({"code": "internal", "message": e.to_string()})],
        ),
    }
}

async fn autoattach(State(state): State<AppState>, body: Bytes) -> Response {
    let doc = match parse_composition(&body) {
        Ok(d) => d,
        Err(d) => return fail(StatusCode::BAD_REQUEST, d),
    };
    match auto_attach_power(&doc, &state.library) {
        Ok((doc, warnings)) => ok(json!({"document": document_json(&doc), "warnings": warnings})),
        Err(d) => fail(StatusCode::UNPROCESSABLE_ENTITY, d),
    }
}

async fn parse_block_doc(body: Bytes) -> Response {
    match parse_block(&body) {
        Ok(b) => ok(serde_json::from_slice(&serialize_block(&b)).expect("canonical JSON")),
        Err(d) => fail(StatusCode::BAD_REQUEST, d),
    }
}

async fn explain_code(Path(code): Path<String>) -> Response {
    match explain(&code) {
        Ok(text) => ok(json!({"code": code, "explanation": text})),
        Err(e) => fail(
            StatusCode::NOT_FOUND,
            [json!({"code": code, "message": e.to_string()})],
        ),
    }
}
