use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Map, Value};

use super::reader::{join, Obj, Reader};
use super::{check_schema, finish, parse_json, to_canonical_bytes, ParseCode, ParseDiagnostic};
use crate::model::{
    is_name, BlockParts, BusLine, ComponentInstance, ComponentToggle, ConfigOption, CurrentKind,
    CurrentSpec, Direction, I2cRole, InterfaceKind, InterfaceType, LogicLevel, Port, PortOverride,
    PowerSpec, SchematicBlock, SignalSpec, SpiRole, UartRole, Variant, VoltageRange,
    MAX_I2C_ADDRESS, NO_CONNECT,
};

const TOP_KEYS: &[&str] = &[
    "schema",
    "block_id",
    "version",
    "components",
    "nets",
    "ports",
    "configs",
    "?layout_hint",
];

/// Parses a block package. On failure every problem found is reported,
/// each with a JSON-pointer location.
pub fn parse_block(text: &[u8]) -> Result<SchematicBlock, Vec<ParseDiagnostic>> {
    let value = parse_json(text)?;
    let mut r = Reader::default();
    let block = read_block(&mut r, &value);
    finish(r, block)
}

fn name_ok(r: &mut Reader, path: &str, name: &str, what: &str) -> bool {
    if is_name(name) {
        true
    } else {
        r.error(
            ParseCode::InvalidValue,
            path,
            format!("invalid {what} name `{name}`"),
        );
        false
    }
}

fn read_block(r: &mut Reader, value: &Value) -> Option<SchematicBlock> {
    let top = r.object(value, "", TOP_KEYS)?;
    check_schema(r, &top);
    let block_id = r.str(&top, "block_id");
    if let Some(id) = block_id {
        name_ok(r, "/block_id", id, "block");
    }
    let version = r.str(&top, "version");

    // nets
    let mut nets = Vec::new();
    let mut net_set = BTreeSet::new();
    for (path, v) in r.array(&top, "nets").unwrap_or_default() {
        let Some(n) = v.as_str() else {
            r.error(ParseCode::Malformed, path, "expected a net name");
            continue;
        };
        if n == NO_CONNECT {
            r.error(ParseCode::InvalidValue, &path, format!("`{NO_CONNECT}` is reserved for no-connect pins"));
            continue;
        }
        if !name_ok(r, &path, n, "net") {
            continue;
        }
        if !net_set.insert(n.to_owned()) {
            r.error(ParseCode::DuplicateIdentifier, path, format!("duplicate net `{n}`"));
            continue;
        }
        nets.push(n.to_owned());
    }
    let mut used_nets = BTreeSet::new();

    // components
    let mut components = Vec::new();
    let mut refdes_seen = BTreeSet::new();
    for (path, v) in r.array(&top, "components").unwrap_or_default() {
        let Some(c) = r.object(v, &path, &["refdes", "value", "footprint", "pins"]) else {
            continue;
        };
        let refdes = r.str(&c, "refdes");
        let value = r.str(&c, "value");
        let footprint = r.str(&c, "footprint");
        let mut pins = BTreeMap::new();
        for (ppath, pv) in r.array(&c, "pins").unwrap_or_default() {
            let Some(p) = r.object(pv, &ppath, &["pin", "net"]) else {
                continue;
            };
            let (Some(pin), Some(net)) = (r.str(&p, "pin"), r.str(&p, "net")) else {
                continue;
            };
            if !name_ok(r, &join(&ppath, "pin"), pin, "pin") {
                continue;
            }
            if net != NO_CONNECT && !net_set.contains(net) {
                r.error(
                    ParseCode::DanglingReference,
                    join(&ppath, "net"),
                    format!("pin `{pin}` references undeclared net `{net}`"),
                );
                continue;
            }
            if pins.insert(pin.to_owned(), net.to_owned()).is_some() {
                r.error(
                    ParseCode::DuplicateIdentifier,
                    join(&ppath, "pin"),
                    format!("duplicate pin `{pin}`"),
                );
            }
            used_nets.insert(net.to_owned());
        }
        let (Some(refdes), Some(value), Some(footprint)) = (refdes, value, footprint) else {
            continue;
        };
        if !name_ok(r, &join(&path, "refdes"), refdes, "refdes") {
            continue;
        }
        if !refdes_seen.insert(refdes.to_owned()) {
            r.error(
                ParseCode::DuplicateIdentifier,
                join(&path, "refdes"),
                format!("duplicate refdes `{refdes}`"),
            );
            continue;
        }
        components.push(ComponentInstance {
            refdes: refdes.to_owned(),
            part_value: value.to_owned(),
            footprint: footprint.to_owned(),
            pins,
        });
    }

    // ports
    let mut ports = Vec::new();
    let mut port_seen = BTreeSet::new();
    for (path, v) in r.array(&top, "ports").unwrap_or_default() {
        let Some(p) = r.object(v, &path, &["name", "bound_net", "iface", "?required"]) else {
            continue;
        };
        let name = r.str(&p, "name");
        let net = r.str(&p, "bound_net");
        let required = r.bool_or(&p, "required", false);
        let iface = p
            .map
            .get("iface")
            .and_then(|iv| read_iface(r, iv, &join(&path, "iface")));
        if let Some(net) = net {
            if !net_set.contains(net) {
                r.error(
                    ParseCode::DanglingReference,
                    join(&path, "bound_net"),
                    format!("port binds undeclared net `{net}`"),
                );
            } else {
                used_nets.insert(net.to_owned());
            }
        }
        let (Some(name), Some(net), Some(required), Some(iface)) = (name, net, required, iface)
        else {
            continue;
        };
        if !name_ok(r, &join(&path, "name"), name, "port") {
            continue;
        }
        if !port_seen.insert(name.to_owned()) {
            r.error(
                ParseCode::DuplicateIdentifier,
                join(&path, "name"),
                format!("duplicate port `{name}`"),
            );
            continue;
        }
        ports.push(Port {
            name: name.to_owned(),
            iface,
            bound_net: net.to_owned(),
            required,
        });
    }

    if let Some(nets_arr) = top.map.get("nets").and_then(Value::as_array) {
        for (i, n) in nets_arr.iter().enumerate() {
            if let Some(n) = n.as_str() {
                if net_set.contains(n) && !used_nets.contains(n) {
                    r.error(
                        ParseCode::InvalidValue,
                        format!("/nets/{i}"),
                        format!("net `{n}` is not used by any pin or port"),
                    );
                }
            }
        }
    }

    // configs
    let mut configs = Vec::new();
    let mut option_seen = BTreeSet::new();
    for (path, v) in r.array(&top, "configs").unwrap_or_default() {
        if let Some(opt) = read_option(r, v, &path, &ports, &refdes_seen) {
            if !option_seen.insert(opt.name.clone()) {
                r.error(
                    ParseCode::DuplicateIdentifier,
                    join(&path, "name"),
                    format!("duplicate option `{}`", opt.name),
                );
                continue;
            }
            configs.push(opt);
        }
    }

    if !r.diags.is_empty() {
        return None;
    }
    let parts = BlockParts {
        block_id: block_id?.to_owned(),
        version: version?.to_owned(),
        components,
        nets,
        ports,
        configs,
    };
    match SchematicBlock::new(parts) {
        Ok(b) => Some(b),
        Err(e) => {
            r.error(ParseCode::InvalidValue, "", e.to_string());
            None
        }
    }
}

fn read_range(r: &mut Reader, value: &Value, path: &str, code: ParseCode) -> Option<VoltageRange> {
    let o = r.object(value, path, &["min_volts", "max_volts"])?;
    let (min, max) = (r.f64(&o, "min_volts")?, r.f64(&o, "max_volts")?);
    match VoltageRange::new(min, max) {
        Ok(v) => Some(v),
        Err(e) => {
            r.error(code, path, e.to_string());
            None
        }
    }
}

fn read_level(r: &mut Reader, value: &Value, path: &str) -> Option<LogicLevel> {
    let o = r.object(value, path, &["vil_max", "vih_min", "vol_max", "voh_min"])?;
    let vals = ["vil_max", "vih_min", "vol_max", "voh_min"].map(|k| r.f64(&o, k));
    let [Some(vil), Some(vih), Some(vol), Some(voh)] = vals else {
        return None;
    };
    match LogicLevel::new(vil, vih, vol, voh) {
        Ok(l) => Some(l),
        Err(e) => {
            r.error(ParseCode::InvalidInterface, path, e.to_string());
            None
        }
    }
}

fn read_addresses(r: &mut Reader, value: &Value, path: &str) -> Option<BTreeSet<u8>> {
    let Some(items) = value.as_array() else {
        r.error(ParseCode::Malformed, path, "expected an array of addresses");
        return None;
    };
    let mut out = BTreeSet::new();
    let mut ok = true;
    for (i, a) in items.iter().enumerate() {
        match a.as_u64() {
            Some(n) if n <= u64::from(MAX_I2C_ADDRESS) => {
                out.insert(n as u8);
            }
            _ => {
                r.error(
                    ParseCode::InvalidInterface,
                    join(path, i),
                    format!("I2C address {a} is not a 7-bit address (0..=127)"),
                );
                ok = false;
            }
        }
    }
    ok.then_some(out)
}

fn iface_error(r: &mut Reader, path: &str, msg: String) {
    r.error(ParseCode::InvalidInterface, path, msg);
}

fn enum_field<T>(
    r: &mut Reader,
    o: &Obj<'_>,
    key: &str,
    parse: impl Fn(&str) -> Option<T>,
) -> Option<T> {
    let s = r.str(o, key)?;
    let v = parse(s);
    if v.is_none() {
        iface_error(r, &join(&o.path, key), format!("invalid {key} `{s}`"));
    }
    v
}

fn read_iface(r: &mut Reader, value: &Value, path: &str) -> Option<InterfaceType> {
    let kind = value.get("kind").and_then(Value::as_str);
    let signal_keys = ["kind", "?level", "?range", "?bus"];
    let keys: Vec<&str> = match kind {
        Some("power") => vec!["kind", "range", "current"],
        Some("ground") => vec!["kind"],
        Some("gpio") => [&signal_keys[..], &["?direction"]].concat(),
        Some("analog") => signal_keys.to_vec(),
        Some("i2c") => [&signal_keys[..], &["role", "?line", "?addresses"]].concat(),
        Some("spi") | Some("uart") => [&signal_keys[..], &["role", "?line"]].concat(),
        Some(other) => {
            iface_error(r, &join(path, "kind"), format!("unknown interface kind `{other}`"));
            return None;
        }
        None => {
            r.object(value, path, &["kind"]);
            return None;
        }
    };
    let o = r.object(value, path, &keys)?;

    let read_signal = |r: &mut Reader| -> Option<SignalSpec> {
        let level = match o.map.get("level") {
            None | Some(Value::Null) => None,
            Some(v) => Some(read_level(r, v, &join(path, "level"))?),
        };
        let range = match o.map.get("range") {
            None | Some(Value::Null) => None,
            Some(v) => Some(read_range(r, v, &join(path, "range"), ParseCode::InvalidInterface)?),
        };
        let bus = r.opt_str(&o, "bus").ok()?;
        if let Some(b) = bus {
            if !is_name(b) {
                iface_error(r, &join(path, "bus"), format!("invalid bus label `{b}`"));
                return None;
            }
        }
        Some(SignalSpec {
            level,
            range,
            bus: bus.map(str::to_owned),
        })
    };
    let read_line = |r: &mut Reader, kind: InterfaceKind| -> Result<Option<BusLine>, ()> {
        let Some(s) = r.opt_str(&o, "line")? else {
            return Ok(None);
        };
        match BusLine::parse(s).filter(|l| l.valid_for(kind)) {
            Some(l) => Ok(Some(l)),
            None => {
                iface_error(r, &join(path, "line"), format!("`{s}` is not a {kind} line"));
                Err(())
            }
        }
    };

    let kind = kind.expect("matched above");
    Some(match kind {
        "power" => {
            let range = read_range(r, &o.map["range"], &join(path, "range"), ParseCode::InvalidInterface);
            let cpath = join(path, "current");
            let current = r.object(&o.map["current"], &cpath, &["kind", "max_milliamps"]).and_then(|c| {
                let kind = enum_field(r, &c, "kind", |s| match s {
                    "supplies" => Some(CurrentKind::Supplies),
                    "draws" => Some(CurrentKind::Draws),
                    _ => None,
                })?;
                let ma = r.f64(&c, "max_milliamps")?;
                match CurrentSpec::new(kind, ma) {
                    Ok(c) => Some(c),
                    Err(e) => {
                        iface_error(r, &join(&cpath, "max_milliamps"), e.to_string());
                        None
                    }
                }
            });
            InterfaceType::Power(PowerSpec {
                range: range?,
                current: current?,
            })
        }
        "ground" => InterfaceType::Ground,
        "gpio" => {
            let direction = match o.map.get("direction") {
                None => Some(Direction::Bidirectional),
                Some(_) => enum_field(r, &o, "direction", |s| match s {
                    "input" => Some(Direction::Input),
                    "output" => Some(Direction::Output),
                    "bidirectional" => Some(Direction::Bidirectional),
                    _ => None,
                }),
            };
            let signal = read_signal(r);
            InterfaceType::Gpio {
                direction: direction?,
                signal: signal?,
            }
        }
        "analog" => InterfaceType::Analog {
            signal: read_signal(r)?,
        },
        "i2c" => {
            let role = enum_field(r, &o, "role", |s| match s {
                "controller" => Some(I2cRole::Controller),
                "peripheral" => Some(I2cRole::Peripheral),
                "pullup_provider" => Some(I2cRole::PullupProvider),
                _ => None,
            });
            let line = read_line(r, InterfaceKind::I2c);
            let signal = read_signal(r);
            let addresses = match o.map.get("addresses") {
                None => Some(BTreeSet::new()),
                Some(v) => read_addresses(r, v, &join(path, "addresses")),
            };
            let iface = InterfaceType::I2c {
                role: role?,
                line: line.ok()?,
                addresses: addresses?,
                signal: signal?,
            };
            if let Err(e) = iface.validate() {
                iface_error(r, &join(path, "addresses"), e.to_string());
                return None;
            }
            iface
        }
        "spi" => {
            let role = enum_field(r, &o, "role", |s| match s {
                "controller" => Some(SpiRole::Controller),
                "peripheral" => Some(SpiRole::Peripheral),
                _ => None,
            });
            let line = read_line(r, InterfaceKind::Spi);
            let signal = read_signal(r);
            InterfaceType::Spi {
                role: role?,
                line: line.ok()?,
                signal: signal?,
            }
        }
        "uart" => {
            let role = enum_field(r, &o, "role", |s| match s {
                "dte" => Some(UartRole::Dte),
                "dce" => Some(UartRole::Dce),
                _ => None,
            });
            let line = read_line(r, InterfaceKind::Uart);
            let signal = read_signal(r);
            InterfaceType::Uart {
                role: role?,
                line: line.ok()?,
                signal: signal?,
            }
        }
        _ => unreachable!(),
    })
}

fn read_option(
    r: &mut Reader,
    value: &Value,
    path: &str,
    ports: &[Port],
    refdes: &BTreeSet<String>,
) -> Option<ConfigOption> {
    let o = r.object(value, path, &["name", "variants"])?;
    let name = r.str(&o, "name")?;
    if !name_ok(r, &join(path, "name"), name, "option") {
        return None;
    }
    let mut variants = Vec::new();
    let mut seen = BTreeSet::new();
    let mut ok = true;
    for (vpath, vv) in r.array(&o, "variants").unwrap_or_default() {
        let Some(v) = r.object(vv, &vpath, &["name", "?default", "?overrides", "?toggles"]) else {
            ok = false;
            continue;
        };
        let (Some(vname), Some(is_default)) = (r.str(&v, "name"), r.bool_or(&v, "default", false))
        else {
            ok = false;
            continue;
        };
        if !name_ok(r, &join(&vpath, "name"), vname, "variant") {
            ok = false;
            continue;
        }
        if !seen.insert(vname.to_owned()) {
            r.error(
                ParseCode::DuplicateIdentifier,
                join(&vpath, "name"),
                format!("duplicate variant `{vname}`"),
            );
            ok = false;
            continue;
        }
        let mut overrides = Vec::new();
        for (opath, ov) in r.array(&v, "overrides").unwrap_or_default() {
            let Some(oo) = r.object(ov, &opath, &["port", "?addresses", "?required"]) else {
                ok = false;
                continue;
            };
            let Some(port) = r.str(&oo, "port") else {
                ok = false;
                continue;
            };
            let Some(target) = ports.iter().find(|p| p.name == port) else {
                r.error(
                    ParseCode::DanglingReference,
                    join(&opath, "port"),
                    format!("override of unknown port `{port}`"),
                );
                ok = false;
                continue;
            };
            if oo.map.len() < 2 {
                r.error(ParseCode::InvalidValue, &opath, "override changes nothing");
                ok = false;
            }
            if let Some(av) = oo.map.get("addresses") {
                let apath = join(&opath, "addresses");
                let is_peripheral = matches!(
                    target.iface,
                    InterfaceType::I2c {
                        role: I2cRole::Peripheral,
                        ..
                    }
                );
                match read_addresses(r, av, &apath) {
                    Some(set) if !is_peripheral => {
                        let _ = set;
                        iface_error(r, &apath, format!("port `{port}` is not an I2C peripheral"));
                        ok = false;
                    }
                    Some(set) if set.is_empty() => {
                        iface_error(r, &apath, "address override must not be empty".into());
                        ok = false;
                    }
                    Some(addresses) => overrides.push(PortOverride::Addresses {
                        port: port.to_owned(),
                        addresses,
                    }),
                    None => ok = false,
                }
            }
            if oo.map.contains_key("required") {
                match r.bool_or(&oo, "required", false) {
                    Some(required) => overrides.push(PortOverride::Required {
                        port: port.to_owned(),
                        required,
                    }),
                    None => ok = false,
                }
            }
        }
        let mut toggles = Vec::new();
        for (tpath, tv) in r.array(&v, "toggles").unwrap_or_default() {
            let Some(t) = r.object(tv, &tpath, &["component", "enabled"]) else {
                ok = false;
                continue;
            };
            let (Some(component), Some(enabled)) =
                (r.str(&t, "component"), r.bool_or(&t, "enabled", true))
            else {
                ok = false;
                continue;
            };
            if !refdes.contains(component) {
                r.error(
                    ParseCode::DanglingReference,
                    join(&tpath, "component"),
                    format!("toggle of unknown component `{component}`"),
                );
                ok = false;
                continue;
            }
            toggles.push(ComponentToggle {
                component: component.to_owned(),
                enabled,
            });
        }
        variants.push(Variant {
            name: vname.to_owned(),
            is_default,
            overrides,
            toggles,
        });
    }
    let defaults = variants.iter().filter(|v| v.is_default).count();
    if ok && defaults != 1 {
        r.error(
            ParseCode::InvalidValue,
            join(path, "variants"),
            format!("option `{name}` has {defaults} default variants, expected exactly 1"),
        );
        ok = false;
    }
    ok.then(|| ConfigOption {
        name: name.to_owned(),
        variants,
    })
}

fn range_json(v: &VoltageRange) -> Value {
    json!({ "min_volts": v.min(), "max_volts": v.max() })
}

fn level_json(l: &LogicLevel) -> Value {
    json!({
        "vil_max": l.vil_max,
        "vih_min": l.vih_min,
        "vol_max": l.vol_max,
        "voh_min": l.voh_min,
    })
}

fn iface_json(iface: &InterfaceType) -> Value {
    let mut m = Map::new();
    m.insert("kind".into(), json!(iface.kind().as_str()));
    if let Some(signal) = iface.signal() {
        if let Some(l) = &signal.level {
            m.insert("level".into(), level_json(l));
        }
        if let Some(rg) = &signal.range {
            m.insert("range".into(), range_json(rg));
        }
        if let Some(b) = &signal.bus {
            m.insert("bus".into(), json!(b));
        }
    }
    if let Some(line) = iface.line() {
        m.insert("line".into(), json!(line.as_str()));
    }
    match iface {
        InterfaceType::Power(p) => {
            m.insert("range".into(), range_json(&p.range));
            let kind = match p.current.kind {
                CurrentKind::Supplies => "supplies",
                CurrentKind::Draws => "draws",
            };
            m.insert(
                "current".into(),
                json!({ "kind": kind, "max_milliamps": p.current.max_milliamps() }),
            );
        }
        InterfaceType::Gpio { direction, .. } => {
            let d = match direction {
                Direction::Input => "input",
                Direction::Output => "output",
                Direction::Bidirectional => "bidirectional",
            };
            m.insert("direction".into(), json!(d));
        }
        InterfaceType::I2c {
            role, addresses, ..
        } => {
            let role = match role {
                I2cRole::Controller => "controller",
                I2cRole::Peripheral => "peripheral",
                I2cRole::PullupProvider => "pullup_provider",
            };
            m.insert("role".into(), json!(role));
            m.insert("addresses".into(), json!(addresses));
        }
        InterfaceType::Spi { role, .. } => {
            let role = match role {
                SpiRole::Controller => "controller",
                SpiRole::Peripheral => "peripheral",
            };
            m.insert("role".into(), json!(role));
        }
        InterfaceType::Uart { role, .. } => {
            let role = match role {
                UartRole::Dte => "dte",
                UartRole::Dce => "dce",
            };
            m.insert("role".into(), json!(role));
        }
        InterfaceType::Ground | InterfaceType::Analog { .. } => {}
    }
    Value::Object(m)
}

pub(crate) fn block_json(block: &SchematicBlock) -> Value {
    let components: Vec<Value> = block
        .components()
        .iter()
        .map(|c| {
            let pins: Vec<Value> = c
                .pins
                .iter()
                .map(|(pin, net)| json!({ "pin": pin, "net": net }))
                .collect();
            json!({
                "refdes": c.refdes,
                "value": c.part_value,
                "footprint": c.footprint,
                "pins": pins,
            })
        })
        .collect();
    let ports: Vec<Value> = block
        .ports()
        .iter()
        .map(|p| {
            json!({
                "name": p.name,
                "bound_net": p.bound_net,
                "required": p.required,
                "iface": iface_json(&p.iface),
            })
        })
        .collect();
    let configs: Vec<Value> = block
        .configs()
        .iter()
        .map(|o| {
            let variants: Vec<Value> = o
                .variants
                .iter()
                .map(|v| {
                    let overrides: Vec<Value> = v
                        .overrides
                        .iter()
                        .map(|ov| match ov {
                            PortOverride::Addresses { port, addresses } => {
                                json!({ "port": port, "addresses": addresses })
                            }
                            PortOverride::Required { port, required } => {
                                json!({ "port": port, "required": required })
                            }
                        })
                        .collect();
                    let toggles: Vec<Value> = v
                        .toggles
                        .iter()
                        .map(|t| json!({ "component": t.component, "enabled": t.enabled }))
                        .collect();
                    json!({
                        "name": v.name,
                        "default": v.is_default,
                        "overrides": overrides,
                        "toggles": toggles,
                    })
                })
                .collect();
            json!({ "name": o.name, "variants": variants })
        })
        .collect();
    json!({
        "schema": super::SCHEMA_VERSION,
        "block_id": block.block_id(),
        "version": block.version(),
        "components": components,
        "nets": block.nets(),
        "ports": ports,
        "configs": configs,
    })
}

/// Canonical bytes: structurally equal blocks serialize identically.
pub fn serialize_block(block: &SchematicBlock) -> Vec<u8> {
    to_canonical_bytes(&block_json(block))
}
