//! `POST /api/v1/edit`: one transactional edit on a posted document.

use std::collections::BTreeMap;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::Response;
use serde::Deserialize;
use serde_json::{json, Value};

use matcheck_core::{
    parse_composition, resolve, BlockInstance, CompositionDocument, EditError, Library, PortRef,
    PowerRail, RailKind, VoltageRange,
};

use crate::{check_result, document_json, fail, ok, AppState};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PortArg {
    instance: String,
    port: String,
}

impl From<PortArg> for PortRef {
    fn from(p: PortArg) -> Self {
        PortRef::new(&p.instance, &p.port)
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
enum Op {
    AddInstance {
        name: String,
        block_id: String,
        version: String,
        #[serde(default)]
        config: BTreeMap<String, String>,
    },
    RemoveInstance {
        name: String,
    },
    AddRail {
        name: String,
        kind: RailKind,
        min_volts: f64,
        max_volts: f64,
        #[serde(default)]
        parent: Option<String>,
        #[serde(default)]
        supply_milliamps: Option<f64>,
    },
    RemoveRail {
        name: String,
    },
    SetRailParent {
        rail: String,
        parent: Option<String>,
    },
    Attach {
        instance: String,
        port: String,
        rail: String,
    },
    Detach {
        instance: String,
        port: String,
    },
    Connect {
        a: PortArg,
        b: PortArg,
        #[serde(default)]
        net_name: Option<String>,
    },
    Disconnect {
        edge: String,
    },
    SelectConfig {
        instance: String,
        option: String,
        variant: Option<String>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EditRequest {
    document: Value,
    op: Value,
}

/// Applies `op`; on error the document is unchanged. Returns the new edge
/// id for `connect`.
fn apply(doc: &mut CompositionDocument, lib: &Library, op: Op) -> Result<Option<String>, EditError> {
    match op {
        Op::AddInstance {
            name,
            block_id,
            version,
            config,
        } => {
            let mut inst = BlockInstance::new(&name, &block_id, &version);
            inst.config = config;
            doc.add_instance(lib, inst)?;
        }
        Op::RemoveInstance { name } => doc.remove_instance(&name)?,
        Op::AddRail {
            name,
            kind,
            min_volts,
            max_volts,
            parent,
            supply_milliamps,
        } => {
            let voltage = VoltageRange::new(min_volts, max_volts)
                .map_err(|e| EditError::InvalidVoltage(e.to_string()))?;
            let mut rail = match kind {
                RailKind::Power => PowerRail::power(&name, voltage),
                RailKind::Ground => PowerRail::ground(&name),
            };
            if kind == RailKind::Ground && voltage != VoltageRange::point(0.0) {
                return Err(EditError::GroundVoltage);
            }
            rail.supply_milliamps = supply_milliamps;
            doc.add_rail(rail)?;
            if parent.is_some() {
                if let Err(e) = doc.set_rail_parent(&name, parent.as_deref()) {
                    doc.remove_rail(&name).expect("rail just added");
                    return Err(e);
                }
            }
        }
        Op::RemoveRail { name } => doc.remove_rail(&name)?,
        Op::SetRailParent { rail, parent } => doc.set_rail_parent(&rail, parent.as_deref())?,
        Op::Attach {
            instance,
            port,
            rail,
        } => doc.attach_power(lib, PortRef::new(&instance, &port), &rail)?,
        Op::Detach { instance, port } => doc.detach(&PortRef::new(&instance, &port))?,
        Op::Connect { a, b, net_name } => {
            return doc.connect_signal(lib, a.into(), b.into(), net_name).map(Some)
        }
        Op::Disconnect { edge } => doc.disconnect(&edge)?,
        Op::SelectConfig {
            instance,
            option,
            variant,
        } => doc.select_config(lib, &instance, &option, variant.as_deref())?,
    }
    Ok(None)
}

pub(crate) async fn edit(State(state): State<AppState>, body: Bytes) -> Response {
    let bad_request = |path: &str, message: String| {
        fail(
            StatusCode::BAD_REQUEST,
            [json!({"code": "P001", "path": path, "message": message})],
        )
    };
    let req: EditRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return bad_request("", e.to_string()),
    };
    let op: Op = match serde_json::from_value(req.op) {
        Ok(op) => op,
        Err(e) => return bad_request("/op", e.to_string()),
    };
    let text = serde_json::to_vec(&req.document).expect("JSON value serializes");
    let mut doc = match parse_composition(&text) {
        Ok(d) => d,
        Err(mut diags) => {
            for d in &mut diags {
                d.path = format!("/document{}", d.path);
            }
            return fail(StatusCode::BAD_REQUEST, diags);
        }
    };
    match apply(&mut doc, &state.library, op) {
        Ok(edge) => {
            let check = match resolve(&doc, &state.library) {
                Ok(resolved) => check_result(&resolved),
                Err(diags) => json!({ "diagnostics": diags }),
            };
            let mut result = json!({"document": document_json(&doc), "check": check});
            if let Some(id) = edge {
                result["edge"] = json!(id);
            }
            ok(result)
        }
        Err(e) => fail(
            StatusCode::UNPROCESSABLE_ENTITY,
            [json!({"code": e.code(), "message": e.to_string()})],
        ),
    }
}
