//! Mats: a composition of block instances organised as a power-rail forest
//! (rails and the ports attached to them) plus a graph of binary signal
//! edges between data ports.
//!
//! Edits are transactional: every operation validates first and only then
//! mutates, so an `Err` leaves the document untouched.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostic::{Diagnostic, Severity, Subject};
use crate::library::Library;
use crate::model::{
    is_instance_name, is_net_name, ConfigError, InterfaceKind, SchematicBlock, VoltageRange,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RailKind {
    Power,
    Ground,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerRail {
    pub name: String,
    pub kind: RailKind,
    /// Nominal envelope; ground rails are always `[0, 0]`.
    pub voltage: VoltageRange,
    pub parent: Option<String>,
    /// Explicit supply budget. When absent the budget is the sum of the
    /// supplying ports attached to the rail.
    pub supply_milliamps: Option<f64>,
}

impl PowerRail {
    pub fn power(name: &str, voltage: VoltageRange) -> Self {
        Self {
            name: name.to_owned(),
            kind: RailKind::Power,
            voltage,
            parent: None,
            supply_milliamps: None,
        }
    }

    pub fn ground(name: &str) -> Self {
        Self {
            name: name.to_owned(),
            kind: RailKind::Ground,
            voltage: VoltageRange::point(0.0),
            parent: None,
            supply_milliamps: None,
        }
    }

    pub fn with_parent(mut self, parent: &str) -> Self {
        self.parent = Some(parent.to_owned());
        self
    }

    pub fn with_supply(mut self, milliamps: f64) -> Self {
        self.supply_milliamps = Some(milliamps);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockInstance {
    pub name: String,
    pub block_id: String,
    pub version: String,
    pub config: BTreeMap<String, String>,
}

impl BlockInstance {
    pub fn new(name: &str, block_id: &str, version: &str) -> Self {
        Self {
            name: name.to_owned(),
            block_id: block_id.to_owned(),
            version: version.to_owned(),
            config: BTreeMap::new(),
        }
    }
}

/// `(instance, port)` pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PortRef {
    pub instance: String,
    pub port: String,
}

impl PortRef {
    pub fn new(instance: &str, port: &str) -> Self {
        Self {
            instance: instance.to_owned(),
            port: port.to_owned(),
        }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.instance, self.port)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalEdge {
    pub id: String,
    pub a: PortRef,
    pub b: PortRef,
    pub net_name: Option<String>,
}

impl SignalEdge {
    /// Endpoints in order-insensitive canonical form.
    pub fn key(&self) -> (&PortRef, &PortRef) {
        if self.a <= self.b {
            (&self.a, &self.b)
        } else {
            (&self.b, &self.a)
        }
    }

    pub fn touches(&self, instance: &str) -> bool {
        self.a.instance == instance || self.b.instance == instance
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RailAttachment {
    pub port: PortRef,
    pub rail: String,
}

/// The persistent composition document (`*.mat.json`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompositionDocument {
    pub name: String,
    pub instances: Vec<BlockInstance>,
    pub rails: Vec<PowerRail>,
    pub attachments: Vec<RailAttachment>,
    pub edges: Vec<SignalEdge>,
    /// Opaque UI state, preserved verbatim.
    pub layout_hint: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EditError {
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("instance `{0}` already exists")]
    DuplicateInstance(String),
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("rail `{0}` already exists")]
    DuplicateRail(String),
    #[error("unknown rail `{0}`")]
    UnknownRail(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("block `{block_id}` version `{version}` is not in the library")]
    UnknownBlock { block_id: String, version: String },
    #[error("instance `{instance}` has no port `{port}`")]
    UnknownPort { instance: String, port: String },
    #[error("{0} is a power/ground port; attach it to a rail instead")]
    PowerPortEdge(PortRef),
    #[error("{0} and {1} are already connected")]
    DuplicateEdge(PortRef, PortRef),
    #[error("an edge cannot connect {0} to itself")]
    SelfLoop(PortRef),
    #[error("{0} is not a power or ground port")]
    NotPowerPort(PortRef),
    #[error("{0} is not attached to a rail")]
    NotAttached(PortRef),
    #[error("invalid voltage range: {0}")]
    InvalidVoltage(String),
    #[error("ground rails must span exactly 0 V")]
    GroundVoltage,
    #[error("invalid supply budget {0} mA")]
    InvalidSupply(f64),
    #[error("setting parent `{parent}` on rail `{rail}` creates a cycle")]
    RailCycle { rail: String, parent: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl EditError {
    /// C001 and C002 are the connection rules; every other rejection is C003.
    pub fn code(&self) -> &'static str {
        match self {
            EditError::PowerPortEdge(_) => "C001",
            EditError::DuplicateEdge(..) => "C002",
            _ => "C003",
        }
    }
}

impl CompositionDocument {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_owned(),
            ..Self::default()
        }
    }

    /// Sorts every list by its identity key. All edits keep documents
    /// normalized; parsing normalizes on load.
    pub fn normalize(&mut self) {
        self.instances.sort_by(|a, b| a.name.cmp(&b.name));
        self.rails.sort_by(|a, b| a.name.cmp(&b.name));
        self.attachments.sort_by(|a, b| a.port.cmp(&b.port));
        self.edges.sort_by(|a, b| a.id.cmp(&b.id));
    }

    pub fn instance(&self, name: &str) -> Option<&BlockInstance> {
        self.instances.iter().find(|i| i.name == name)
    }

    pub fn rail(&self, name: &str) -> Option<&PowerRail> {
        self.rails.iter().find(|r| r.name == name)
    }

    pub fn attachment(&self, port: &PortRef) -> Option<&RailAttachment> {
        self.attachments.iter().find(|a| &a.port == port)
    }

    pub fn edge(&self, id: &str) -> Option<&SignalEdge> {
        self.edges.iter().find(|e| e.id == id)
    }

    /// Smallest `eN` identifier not yet used.
    pub fn fresh_edge_id(&self) -> String {
        let used: BTreeSet<&str> = self.edges.iter().map(|e| e.id.as_str()).collect();
        (1..)
            .map(|n| format!("e{n}"))
            .find(|id| !used.contains(id.as_str()))
            .expect("unbounded id space")
    }

    /// Returns the first rail on a parent cycle, if any.
    pub fn rail_cycle(&self) -> Option<&str> {
        let parents: BTreeMap<&str, &str> = self
            .rails
            .iter()
            .filter_map(|r| r.parent.as_deref().map(|p| (r.name.as_str(), p)))
            .collect();
        for start in parents.keys() {
            let mut seen = BTreeSet::new();
            let mut cur = *start;
            while let Some(&next) = parents.get(cur) {
                if !seen.insert(cur) {
                    return Some(start);
                }
                cur = next;
            }
        }
        None
    }

    fn block_for<'l>(
        &self,
        library: &'l Library,
        instance: &str,
    ) -> Result<&'l Arc<SchematicBlock>, EditError> {
        let inst = self
            .instance(instance)
            .ok_or_else(|| EditError::UnknownInstance(instance.to_owned()))?;
        library
            .get_version(&inst.block_id, &inst.version)
            .ok_or_else(|| EditError::UnknownBlock {
                block_id: inst.block_id.clone(),
                version: inst.version.clone(),
            })
    }

    fn port_kind(&self, library: &Library, port: &PortRef) -> Result<InterfaceKind, EditError> {
        let block = self.block_for(library, &port.instance)?;
        block
            .port(&port.port)
            .map(|p| p.iface.kind())
            .ok_or_else(|| EditError::UnknownPort {
                instance: port.instance.clone(),
                port: port.port.clone(),
            })
    }

    pub fn add_instance(
        &mut self,
        library: &Library,
        instance: BlockInstance,
    ) -> Result<(), EditError> {
        if !is_instance_name(&instance.name) {
            return Err(EditError::InvalidName(instance.name));
        }
        if self.instance(&instance.name).is_some() {
            return Err(EditError::DuplicateInstance(instance.name));
        }
        let block = library
            .get_version(&instance.block_id, &instance.version)
            .ok_or_else(|| EditError::UnknownBlock {
                block_id: instance.block_id.clone(),
                version: instance.version.clone(),
            })?;
        block.apply_config(&instance.config)?;
        self.instances.push(instance);
        self.normalize();
        Ok(())
    }

    /// Removes an instance together with its edges and attachments.
    pub fn remove_instance(&mut self, name: &str) -> Result<(), EditError> {
        if self.instance(name).is_none() {
            return Err(EditError::UnknownInstance(name.to_owned()));
        }
        self.instances.retain(|i| i.name != name);
        self.edges.retain(|e| !e.touches(name));
        self.attachments.retain(|a| a.port.instance != name);
        Ok(())
    }

    pub fn add_rail(&mut self, rail: PowerRail) -> Result<(), EditError> {
        if !is_net_name(&rail.name) {
            return Err(EditError::InvalidName(rail.name));
        }
        if self.rail(&rail.name).is_some() {
            return Err(EditError::DuplicateRail(rail.name));
        }
        if rail.kind == RailKind::Ground && rail.voltage != VoltageRange::point(0.0) {
            return Err(EditError::GroundVoltage);
        }
        if let Some(s) = rail.supply_milliamps {
            if !(s.is_finite() && s >= 0.0) {
                return Err(EditError::InvalidSupply(s));
            }
        }
        if let Some(parent) = &rail.parent {
            if parent == &rail.name {
                return Err(EditError::RailCycle {
                    rail: rail.name.clone(),
                    parent: parent.clone(),
                });
            }
            if self.rail(parent).is_none() {
                return Err(EditError::UnknownRail(parent.clone()));
            }
        }
        self.rails.push(rail);
        self.normalize();
        Ok(())
    }

    /// Removes a rail and its attachments. Child rails are re-parented to
    /// the removed rail's parent so the forest stays connected.
    pub fn remove_rail(&mut self, name: &str) -> Result<(), EditError> {
        let Some(rail) = self.rail(name) else {
            return Err(EditError::UnknownRail(name.to_owned()));
        };
        let grandparent = rail.parent.clone();
        self.rails.retain(|r| r.name != name);
        for r in &mut self.rails {
            if r.parent.as_deref() == Some(name) {
                r.parent = grandparent.clone();
            }
        }
        self.attachments.retain(|a| a.rail != name);
        Ok(())
    }

    pub fn set_rail_parent(&mut self, rail: &str, parent: Option<&str>) -> Result<(), EditError> {
        if self.rail(rail).is_none() {
            return Err(EditError::UnknownRail(rail.to_owned()));
        }
        if let Some(p) = parent {
            if self.rail(p).is_none() {
                return Err(EditError::UnknownRail(p.to_owned()));
            }
        }
        let mut next = self.clone();
        for r in &mut next.rails {
            if r.name == rail {
                r.parent = parent.map(str::to_owned);
            }
        }
        if next.rail_cycle().is_some() {
            return Err(EditError::RailCycle {
                rail: rail.to_owned(),
                parent: parent.unwrap_or_default().to_owned(),
            });
        }
        *self = next;
        Ok(())
    }

    /// Attaches a power or ground port; an existing attachment is replaced.
    pub fn attach_power(
        &mut self,
        library: &Library,
        port: PortRef,
        rail: &str,
    ) -> Result<(), EditError> {
        if !self.port_kind(library, &port)?.is_power() {
            return Err(EditError::NotPowerPort(port));
        }
        if self.rail(rail).is_none() {
            return Err(EditError::UnknownRail(rail.to_owned()));
        }
        self.attachments.retain(|a| a.port != port);
        self.attachments.push(RailAttachment {
            port,
            rail: rail.to_owned(),
        });
        self.normalize();
        Ok(())
    }

    pub fn detach(&mut self, port: &PortRef) -> Result<(), EditError> {
        if self.attachment(port).is_none() {
            return Err(EditError::NotAttached(port.clone()));
        }
        self.attachments.retain(|a| &a.port != port);
        Ok(())
    }

    /// Adds a signal edge and returns its fresh identifier.
    pub fn connect_signal(
        &mut self,
        library: &Library,
        a: PortRef,
        b: PortRef,
        net_name: Option<String>,
    ) -> Result<String, EditError> {
        if a == b {
            return Err(EditError::SelfLoop(a));
        }
        for end in [&a, &b] {
            if self.port_kind(library, end)?.is_power() {
                return Err(EditError::PowerPortEdge(end.clone()));
            }
        }
        if let Some(n) = &net_name {
            if !is_net_name(n) {
                return Err(EditError::InvalidName(n.clone()));
            }
        }
        let edge = SignalEdge {
            id: self.fresh_edge_id(),
            a,
            b,
            net_name,
        };
        if self.edges.iter().any(|e| e.key() == edge.key()) {
            return Err(EditError::DuplicateEdge(edge.a, edge.b));
        }
        let id = edge.id.clone();
        self.edges.push(edge);
        self.normalize();
        Ok(id)
    }

    pub fn disconnect(&mut self, edge_id: &str) -> Result<(), EditError> {
        if self.edge(edge_id).is_none() {
            return Err(EditError::UnknownEdge(edge_id.to_owned()));
        }
        self.edges.retain(|e| e.id != edge_id);
        Ok(())
    }

    /// Pins a configuration option; `None` returns it to its default.
    pub fn select_config(
        &mut self,
        library: &Library,
        instance: &str,
        option: &str,
        variant: Option<&str>,
    ) -> Result<(), EditError> {
        let block = self.block_for(library, instance)?;
        let mut config = self.instance(instance).expect("checked").config.clone();
        match variant {
            Some(v) => {
                config.insert(option.to_owned(), v.to_owned());
            }
            None => {
                if block.config(option).is_none() {
                    return Err(ConfigError::UnknownOption {
                        block: block.block_id().to_owned(),
                        option: option.to_owned(),
                    }
                    .into());
                }
                config.remove(option);
            }
        }
        block.apply_config(&config)?;
        for i in &mut self.instances {
            if i.name == instance {
                i.config = config.clone();
            }
        }
        Ok(())
    }
}

/// An instance bound to its library block and the config-resolved copy.
#[derive(Debug, Clone)]
pub struct ResolvedInstance {
    pub instance: BlockInstance,
    pub source: Arc<SchematicBlock>,
    pub block: SchematicBlock,
}

/// A composition whose instances all resolved against a library.
#[derive(Debug, Clone)]
pub struct ResolvedComposition {
    pub doc: CompositionDocument,
    pub instances: BTreeMap<String, ResolvedInstance>,
}

impl ResolvedComposition {
    pub fn port(&self, port: &PortRef) -> Option<&crate::model::Port> {
        self.instances.get(&port.instance)?.block.port(&port.port)
    }
}

/// Binds every instance to its library block and applies its configuration.
///
/// Errors are coded R001 (unknown block), R002 (unknown port), R003 (bad
/// configuration) and R004 (port used with the wrong kind of connection).
pub fn resolve(
    doc: &CompositionDocument,
    library: &Library,
) -> Result<ResolvedComposition, Vec<Diagnostic>> {
    let mut errors = Vec::new();
    let mut instances = BTreeMap::new();
    let mut doc = doc.clone();
    doc.normalize();

    for inst in &doc.instances {
        let Some(source) = library.get_version(&inst.block_id, &inst.version) else {
            let detail = match library.get(&inst.block_id) {
                Some(b) => format!(" (library has version `{}`)", b.version()),
                None => String::new(),
            };
            errors.push(Diagnostic::new(
                "R001",
                Severity::Error,
                vec![Subject::Instance(inst.name.clone())],
                format!(
                    "instance `{}` references unknown block `{}` version `{}`{detail}",
                    inst.name, inst.block_id, inst.version
                ),
            ));
            continue;
        };
        match source.apply_config(&inst.config) {
            Ok(block) => {
                instances.insert(
                    inst.name.clone(),
                    ResolvedInstance {
                        instance: inst.clone(),
                        source: Arc::clone(source),
                        block,
                    },
                );
            }
            Err(e) => errors.push(Diagnostic::new(
                "R003",
                Severity::Error,
                vec![Subject::Instance(inst.name.clone())],
                format!("instance `{}`: {e}", inst.name),
            )),
        }
    }

    let lookup = |port: &PortRef| -> Option<InterfaceKind> {
        instances
            .get(&port.instance)
            .and_then(|i: &ResolvedInstance| i.block.port(&port.port))
            .map(|p| p.iface.kind())
    };
    let check_port = |port: &PortRef, want_power: bool, errors: &mut Vec<Diagnostic>| {
        if !instances.contains_key(&port.instance) {
            // already reported, or a dangling instance the parser rejects
            return;
        }
        match lookup(port) {
            None => errors.push(Diagnostic::new(
                "R002",
                Severity::Error,
                vec![Subject::Port(port.clone())],
                format!("instance `{}` has no port `{}`", port.instance, port.port),
            )),
            Some(kind) if kind.is_power() != want_power => errors.push(Diagnostic::new(
                "R004",
                Severity::Error,
                vec![Subject::Port(port.clone())],
                if want_power {
                    format!("{port} is a {kind} port and cannot attach to a rail")
                } else {
                    format!("{port} is a {kind} port; it must attach to a rail, not an edge")
                },
            )),
            Some(_) => {}
        }
    };
    for a in &doc.attachments {
        check_port(&a.port, true, &mut errors);
    }
    for e in &doc.edges {
        check_port(&e.a, false, &mut errors);
        check_port(&e.b, false, &mut errors);
    }

    if errors.is_empty() {
        Ok(ResolvedComposition { doc, instances })
    } else {
        errors.sort();
        errors.dedup();
        Err(errors)
    }
}

/// Outcome of automatic power attachment for one port.
fn auto_candidates<'d>(
    doc: &'d CompositionDocument,
    kind: InterfaceKind,
    accepted: &VoltageRange,
) -> Vec<&'d PowerRail> {
    doc.rails
        .iter()
        .filter(|r| match kind {
            InterfaceKind::Ground => r.kind == RailKind::Ground,
            _ => r.kind == RailKind::Power && accepted.contains(&r.voltage),
        })
        .collect()
}

/// Diagnostics auto-attachment would produce for currently unattached power
/// ports, plus the attachments it would make.
pub(crate) fn plan_auto_attach(
    resolved: &ResolvedComposition,
) -> (Vec<RailAttachment>, Vec<Diagnostic>) {
    let doc = &resolved.doc;
    let mut planned = Vec::new();
    let mut diags = Vec::new();
    for (name, inst) in &resolved.instances {
        for port in inst.block.ports() {
            let kind = port.iface.kind();
            let Some(accepted) = port.iface.accepted_range() else {
                continue;
            };
            let pref = PortRef::new(name, &port.name);
            if doc.attachment(&pref).is_some() {
                continue;
            }
            let candidates = auto_candidates(doc, kind, &accepted);
            match candidates.as_slice() {
                [rail] => planned.push(RailAttachment {
                    port: pref,
                    rail: rail.name.clone(),
                }),
                [] => diags.push(Diagnostic::new(
                    "W102",
                    Severity::Warning,
                    vec![Subject::Port(pref.clone())],
                    match kind {
                        InterfaceKind::Ground => format!("{pref}: no ground rail to attach to"),
                        _ => format!("{pref}: no rail fits inside the accepted range {accepted}"),
                    },
                )),
                many => {
                    let names: Vec<&str> = many.iter().map(|r| r.name.as_str()).collect();
                    let mut subjects = vec![Subject::Port(pref.clone())];
                    subjects.extend(names.iter().map(|n| Subject::Rail((*n).to_owned())));
                    diags.push(Diagnostic::new(
                        "W101",
                        Severity::Warning,
                        subjects,
                        format!(
                            "{pref}: ambiguous rail choice, candidates {{{}}}",
                            names.join(", ")
                        ),
                    ));
                }
            }
        }
    }
    diags.sort();
    (planned, diags)
}

/// Attaches every unattached power/ground port that has exactly one safe
/// rail (envelope contained in the port's accepted range). Ambiguous and
/// unmatched ports are left alone and reported as W101/W102.
pub fn auto_attach_power(
    doc: &CompositionDocument,
    library: &Library,
) -> Result<(CompositionDocument, Vec<Diagnostic>), Vec<Diagnostic>> {
    let resolved = resolve(doc, library)?;
    let (planned, diags) = plan_auto_attach(&resolved);
    let mut out = resolved.doc;
    out.attachments.extend(planned);
    out.normalize();
    Ok((out, diags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::blocks;

    fn lib() -> Library {
        Library::from_blocks([
            blocks::mcu33(),
            blocks::temp_sensor(),
            blocks::i2c_pullups(),
            blocks::wide_input(),
        ])
    }

    fn doc() -> CompositionDocument {
        let lib = lib();
        let mut d = CompositionDocument::new("t");
        d.add_instance(&lib, BlockInstance::new("mcu", "mcu33", "1.0")).unwrap();
        d.add_instance(&lib, BlockInstance::new("sensor", "temp_sensor", "1.0"))
            .unwrap();
        d.add_rail(PowerRail::ground("GND")).unwrap();
        d.add_rail(PowerRail::power("3V3", VoltageRange::point(3.3))).unwrap();
        d.add_rail(PowerRail::power("5V", VoltageRange::point(5.0))).unwrap();
        d
    }

    #[test]
    fn connect_signal_rules() {
        let lib = lib();
        let mut d = doc();
        let id = d
            .connect_signal(&lib, PortRef::new("mcu", "SDA"), PortRef::new("sensor", "SDA"), None)
            .unwrap();
        assert_eq!(id, "e1");
        let before = d.clone();
        let err = d
            .connect_signal(&lib, PortRef::new("mcu", "VDD"), PortRef::new("sensor", "VDD"), None)
            .unwrap_err();
        assert_eq!(err.code(), "C001");
        let err = d
            .connect_signal(&lib, PortRef::new("sensor", "SDA"), PortRef::new("mcu", "SDA"), None)
            .unwrap_err();
        assert_eq!(err.code(), "C002");
        assert_eq!(d, before);
    }

    #[test]
    fn remove_instance_cascades() {
        let lib = lib();
        let mut d = doc();
        d.connect_signal(&lib, PortRef::new("mcu", "SDA"), PortRef::new("sensor", "SDA"), None)
            .unwrap();
        d.attach_power(&lib, PortRef::new("sensor", "VDD"), "3V3").unwrap();
        d.attach_power(&lib, PortRef::new("mcu", "VDD"), "3V3").unwrap();
        d.remove_instance("sensor").unwrap();
        assert!(d.instance("sensor").is_none());
        assert!(d.edges.is_empty());
        assert_eq!(d.attachments.len(), 1);
        assert!(matches!(
            d.remove_instance("sensor"),
            Err(EditError::UnknownInstance(_))
        ));
    }

    #[test]
    fn rails_and_attachments() {
        let lib = lib();
        let mut d = doc();
        assert!(matches!(
            d.add_rail(PowerRail::power("3V3", VoltageRange::point(3.3))),
            Err(EditError::DuplicateRail(_))
        ));
        let p = PortRef::new("mcu", "VDD");
        d.attach_power(&lib, p.clone(), "5V").unwrap();
        d.attach_power(&lib, p.clone(), "3V3").unwrap();
        assert_eq!(d.attachments.len(), 1);
        assert_eq!(d.attachment(&p).unwrap().rail, "3V3");
        assert!(matches!(
            d.attach_power(&lib, PortRef::new("mcu", "SDA"), "3V3"),
            Err(EditError::NotPowerPort(_))
        ));
        d.detach(&p).unwrap();
        assert!(d.detach(&p).is_err());
    }

    #[test]
    fn rail_parent_cycles_rejected() {
        let mut d = doc();
        d.set_rail_parent("3V3", Some("5V")).unwrap();
        let before = d.clone();
        assert!(matches!(
            d.set_rail_parent("5V", Some("3V3")),
            Err(EditError::RailCycle { .. })
        ));
        assert_eq!(d, before);
        d.remove_rail("5V").unwrap();
        assert_eq!(d.rail("3V3").unwrap().parent, None);
    }

    #[test]
    fn select_config_validates() {
        let lib = lib();
        let mut d = doc();
        d.select_config(&lib, "sensor", "addr", Some("a0_vdd")).unwrap();
        assert_eq!(d.instance("sensor").unwrap().config["addr"], "a0_vdd");
        assert!(d.select_config(&lib, "sensor", "addr", Some("zzz")).is_err());
        assert!(d.select_config(&lib, "sensor", "spi_mode", None).is_err());
        d.select_config(&lib, "sensor", "addr", None).unwrap();
        assert!(d.instance("sensor").unwrap().config.is_empty());
    }

    #[test]
    fn auto_attach_examples() {
        let lib = lib();
        let mut d = doc();
        d.add_instance(&lib, BlockInstance::new("wide", "wide_input", "1.0")).unwrap();
        let (out, diags) = auto_attach_power(&d, &lib).unwrap();
        assert_eq!(out.attachment(&PortRef::new("mcu", "VDD")).unwrap().rail, "3V3");
        assert_eq!(out.attachment(&PortRef::new("mcu", "GND")).unwrap().rail, "GND");
        assert!(out.attachment(&PortRef::new("wide", "VIN")).is_none());
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, "W101");
        assert!(diags[0].message.contains("3V3") && diags[0].message.contains("5V"));

        let (again, diags2) = auto_attach_power(&out, &lib).unwrap();
        assert_eq!(again, out);
        assert_eq!(diags2, diags);
    }

    #[test]
    fn auto_attach_without_candidates() {
        let lib = lib();
        let mut d = CompositionDocument::new("t");
        d.add_instance(&lib, BlockInstance::new("mcu", "mcu33", "1.0")).unwrap();
        d.add_rail(PowerRail::power("12V", VoltageRange::point(12.0))).unwrap();
        let (out, diags) = auto_attach_power(&d, &lib).unwrap();
        assert!(out.attachments.is_empty());
        let codes: Vec<_> = diags.iter().map(|d| d.code.as_str()).collect();
        assert_eq!(codes, ["W102", "W102"]);
    }

    #[test]
    fn resolve_errors() {
        let lib = lib();
        let mut d = doc();
        d.instances.push(BlockInstance::new("ghost", "nope", "1.0"));
        let errs = resolve(&d, &lib).unwrap_err();
        assert_eq!(errs[0].code, "R001");
        assert_eq!(errs[0].subjects, vec![Subject::Instance("ghost".into())]);

        let empty = resolve(&CompositionDocument::new("e"), &lib).unwrap();
        assert!(empty.instances.is_empty());

        let mut d = doc();
        d.edges.push(SignalEdge {
            id: "e1".into(),
            a: PortRef::new("mcu", "SDA"),
            b: PortRef::new("sensor", "SDX"),
            net_name: None,
        });
        let errs = resolve(&d, &lib).unwrap_err();
        assert_eq!(errs[0].code, "R002");

        let mut d = doc();
        d.instances[1].config.insert("addr".into(), "bogus".into());
        assert_eq!(resolve(&d, &lib).unwrap_err()[0].code, "R003");
    }
}
