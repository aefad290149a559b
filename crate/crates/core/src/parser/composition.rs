use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use super::reader::{join, Obj, Reader};
use super::{check_schema, finish, parse_json, to_canonical_bytes, ParseCode, ParseDiagnostic};
use crate::mats::{
    BlockInstance, CompositionDocument, PortRef, PowerRail, RailAttachment, RailKind, SignalEdge,
};
use crate::model::{is_instance_name, is_name, is_net_name, VoltageRange};

const TOP_KEYS: &[&str] = &[
    "schema",
    "name",
    "instances",
    "rails",
    "attachments",
    "edges",
    "?layout_hint",
];

/// Parses a composition with structural validation only; library
/// references are checked later by [`crate::mats::resolve`].
pub fn parse_composition(text: &[u8]) -> Result<CompositionDocument, Vec<ParseDiagnostic>> {
    let value = parse_json(text)?;
    let mut r = Reader::default();
    let doc = read_doc(&mut r, &value);
    finish(r, doc)
}

fn name_field(r: &mut Reader, o: &Obj<'_>, key: &str, instance_rule: bool) -> Option<String> {
    let s = r.str(o, key)?;
    let ok = if instance_rule {
        is_instance_name(s)
    } else {
        is_name(s)
    };
    if !ok {
        r.error(
            ParseCode::InvalidValue,
            join(&o.path, key),
            format!("invalid {key} `{s}`"),
        );
        return None;
    }
    Some(s.to_owned())
}

fn read_port_ref(
    r: &mut Reader,
    value: &Value,
    path: &str,
    instances: &BTreeSet<String>,
) -> Option<PortRef> {
    let o = r.object(value, path, &["instance", "port"])?;
    port_ref_fields(r, &o, instances)
}

fn port_ref_fields(r: &mut Reader, o: &Obj<'_>, instances: &BTreeSet<String>) -> Option<PortRef> {
    let path = o.path.as_str();
    let instance = name_field(r, o, "instance", true);
    let port = name_field(r, o, "port", false);
    let instance = instance?;
    if !instances.contains(&instance) {
        r.error(
            ParseCode::DanglingReference,
            join(path, "instance"),
            format!("unknown instance `{instance}`"),
        );
        return None;
    }
    Some(PortRef {
        instance,
        port: port?,
    })
}

fn read_doc(r: &mut Reader, value: &Value) -> Option<CompositionDocument> {
    let top = r.object(value, "", TOP_KEYS)?;
    check_schema(r, &top);
    let name = r.str(&top, "name").map(str::to_owned);

    let mut instances = Vec::new();
    let mut instance_names = BTreeSet::new();
    for (path, v) in r.array(&top, "instances").unwrap_or_default() {
        let Some(o) = r.object(v, &path, &["name", "block_id", "version", "?config"]) else {
            continue;
        };
        let iname = name_field(r, &o, "name", true);
        let block_id = name_field(r, &o, "block_id", false);
        let version = r.str(&o, "version");
        let mut config = BTreeMap::new();
        match o.map.get("config") {
            None => {}
            Some(Value::Object(m)) => {
                for (opt, var) in m {
                    let cpath = join(&join(&path, "config"), opt);
                    match var.as_str() {
                        Some(var) if is_name(opt) && is_name(var) => {
                            config.insert(opt.clone(), var.to_owned());
                        }
                        Some(_) => r.error(ParseCode::InvalidValue, cpath, "invalid option or variant name"),
                        None => r.error(ParseCode::Malformed, cpath, "expected a variant name"),
                    }
                }
            }
            Some(_) => r.error(ParseCode::Malformed, join(&path, "config"), "expected an object"),
        }
        let (Some(iname), Some(block_id), Some(version)) = (iname, block_id, version) else {
            continue;
        };
        if !instance_names.insert(iname.clone()) {
            r.error(
                ParseCode::DuplicateInstance,
                join(&path, "name"),
                format!("duplicate instance name `{iname}`"),
            );
            continue;
        }
        instances.push(BlockInstance {
            name: iname,
            block_id,
            version: version.to_owned(),
            config,
        });
    }

    let mut rails = Vec::new();
    let mut rail_paths = BTreeMap::new();
    for (path, v) in r.array(&top, "rails").unwrap_or_default() {
        let Some(o) = r.object(
            v,
            &path,
            &["name", "kind", "voltage", "?parent", "?supply_milliamps"],
        ) else {
            continue;
        };
        let rname = name_field(r, &o, "name", false);
        let rname = rname.filter(|n| {
            let ok = is_net_name(n);
            if !ok {
                r.error(ParseCode::InvalidValue, join(&path, "name"), format!("rail name `{n}` is reserved"));
            }
            ok
        });
        let kind = r.str(&o, "kind").and_then(|k| match k {
            "power" => Some(RailKind::Power),
            "ground" => Some(RailKind::Ground),
            _ => {
                r.error(ParseCode::InvalidValue, join(&path, "kind"), format!("invalid rail kind `{k}`"));
                None
            }
        });
        let vpath = join(&path, "voltage");
        let voltage = r.object(&o.map["voltage"], &vpath, &["min_volts", "max_volts"]).and_then(|vo| {
            let (min, max) = (r.f64(&vo, "min_volts")?, r.f64(&vo, "max_volts")?);
            match VoltageRange::new(min, max) {
                Ok(v) => Some(v),
                Err(e) => {
                    r.error(ParseCode::InvalidValue, &vpath, e.to_string());
                    None
                }
            }
        });
        let parent = r.opt_str(&o, "parent");
        let supply = r.opt_f64(&o, "supply_milliamps");
        if let Ok(Some(s)) = supply {
            if !(s >= 0.0 && s.is_finite()) {
                r.error(ParseCode::InvalidValue, join(&path, "supply_milliamps"), "supply must be ≥ 0");
                continue;
            }
        }
        let (Some(rname), Some(kind), Some(voltage), Ok(parent), Ok(supply)) =
            (rname, kind, voltage, parent, supply)
        else {
            continue;
        };
        if kind == RailKind::Ground && voltage != VoltageRange::point(0.0) {
            r.error(ParseCode::InvalidValue, vpath, "ground rails must span exactly 0 V");
            continue;
        }
        if rail_paths.insert(rname.clone(), path.clone()).is_some() {
            r.error(
                ParseCode::DuplicateIdentifier,
                join(&path, "name"),
                format!("duplicate rail `{rname}`"),
            );
            continue;
        }
        rails.push(PowerRail {
            name: rname,
            kind,
            voltage,
            parent: parent.map(str::to_owned),
            supply_milliamps: supply,
        });
    }
    for rail in &rails {
        if let Some(p) = &rail.parent {
            if !rail_paths.contains_key(p) {
                r.error(
                    ParseCode::DanglingReference,
                    join(&rail_paths[&rail.name], "parent"),
                    format!("unknown parent rail `{p}`"),
                );
            }
        }
    }

    let mut attachments = Vec::new();
    let mut attached = BTreeSet::new();
    for (path, v) in r.array(&top, "attachments").unwrap_or_default() {
        let Some(o) = r.object(v, &path, &["instance", "port", "rail"]) else {
            continue;
        };
        let port = port_ref_fields(r, &o, &instance_names);
        let rail = name_field(r, &o, "rail", false);
        let (Some(port), Some(rail)) = (port, rail) else {
            continue;
        };
        if !rail_paths.contains_key(&rail) {
            r.error(
                ParseCode::DanglingReference,
                join(&path, "rail"),
                format!("unknown rail `{rail}`"),
            );
            continue;
        }
        if !attached.insert(port.clone()) {
            r.error(
                ParseCode::DuplicateIdentifier,
                &path,
                format!("{port} is attached more than once"),
            );
            continue;
        }
        attachments.push(RailAttachment { port, rail });
    }

    let mut edges = Vec::new();
    let mut edge_ids = BTreeSet::new();
    let mut pairs = BTreeSet::new();
    for (path, v) in r.array(&top, "edges").unwrap_or_default() {
        let Some(o) = r.object(v, &path, &["id", "a", "b", "?net_name"]) else {
            continue;
        };
        let id = name_field(r, &o, "id", false);
        let a = read_port_ref(r, &o.map["a"], &join(&path, "a"), &instance_names);
        let b = read_port_ref(r, &o.map["b"], &join(&path, "b"), &instance_names);
        let net_name = match r.opt_str(&o, "net_name") {
            Ok(Some(n)) if !is_net_name(n) => {
                r.error(ParseCode::InvalidValue, join(&path, "net_name"), format!("invalid net name `{n}`"));
                continue;
            }
            Ok(n) => n.map(str::to_owned),
            Err(()) => continue,
        };
        let (Some(id), Some(a), Some(b)) = (id, a, b) else {
            continue;
        };
        if a == b {
            r.error(ParseCode::InvalidValue, &path, format!("edge connects {a} to itself"));
            continue;
        }
        if !edge_ids.insert(id.clone()) {
            r.error(ParseCode::DuplicateIdentifier, join(&path, "id"), format!("duplicate edge id `{id}`"));
            continue;
        }
        let edge = SignalEdge { id, a, b, net_name };
        let key = (edge.key().0.clone(), edge.key().1.clone());
        if !pairs.insert(key) {
            r.error(
                ParseCode::DuplicateIdentifier,
                &path,
                format!("{} and {} are already connected", edge.a, edge.b),
            );
            continue;
        }
        edges.push(edge);
    }

    let layout_hint = match top.map.get("layout_hint") {
        None | Some(Value::Null) => None,
        Some(v) => Some(v.clone()),
    };

    let mut doc = CompositionDocument {
        name: name?,
        instances,
        rails,
        attachments,
        edges,
        layout_hint,
    };
    doc.normalize();
    if r.diags.is_empty() {
        if let Some(rail) = doc.rail_cycle() {
            r.error(
                ParseCode::RailCycle,
                join(&rail_paths[rail], "parent"),
                format!("rail `{rail}` is its own ancestor"),
            );
        }
    }
    r.diags.is_empty().then_some(doc)
}

fn port_ref_json(p: &PortRef) -> Value {
    json!({ "instance": p.instance, "port": p.port })
}

pub(crate) fn composition_json(doc: &CompositionDocument) -> Value {
    let mut doc = doc.clone();
    doc.normalize();
    let instances: Vec<Value> = doc
        .instances
        .iter()
        .map(|i| {
            json!({
                "name": i.name,
                "block_id": i.block_id,
                "version": i.version,
                "config": i.config,
            })
        })
        .collect();
    let rails: Vec<Value> = doc
        .rails
        .iter()
        .map(|r| {
            json!({
                "name": r.name,
                "kind": match r.kind { RailKind::Power => "power", RailKind::Ground => "ground" },
                "voltage": { "min_volts": r.voltage.min(), "max_volts": r.voltage.max() },
                "parent": r.parent,
                "supply_milliamps": r.supply_milliamps,
            })
        })
        .collect();
    let attachments: Vec<Value> = doc
        .attachments
        .iter()
        .map(|a| json!({ "instance": a.port.instance, "port": a.port.port, "rail": a.rail }))
        .collect();
    let edges: Vec<Value> = doc
        .edges
        .iter()
        .map(|e| {
            json!({
                "id": e.id,
                "a": port_ref_json(&e.a),
                "b": port_ref_json(&e.b),
                "net_name": e.net_name,
            })
        })
        .collect();
    let mut out = json!({
        "schema": super::SCHEMA_VERSION,
        "name": doc.name,
        "instances": instances,
        "rails": rails,
        "attachments": attachments,
        "edges": edges,
    });
    if let Some(h) = &doc.layout_hint {
        out["layout_hint"] = h.clone();
    }
    out
}

pub fn serialize_composition(doc: &CompositionDocument) -> Vec<u8> {
    to_canonical_bytes(&composition_json(doc))
}
