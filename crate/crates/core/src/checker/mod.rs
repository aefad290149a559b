//! Interface checking: bus grouping, voltage/load propagation and the rule
//! catalog, producing a sorted, deterministic diagnostic list.

mod buses;
mod catalog;
pub mod i2c;
mod propagate;

use std::collections::{BTreeMap, BTreeSet};

pub use buses::{group_buses, BusGroup};
pub use catalog::{explain, UnknownCode, CHECK_CODES};
pub use propagate::{
    propagate, OperatingVoltage, PortLevel, Propagation, PropagationState, RailState,
};

use crate::connectivity::net_classes;
use crate::diagnostic::{Diagnostic, Subject};
use crate::mats::{plan_auto_attach, PortRef, ResolvedComposition};
use crate::model::{
    BusLine, Direction, I2cRole, InterfaceKind, InterfaceType, Port, SpiRole, UartRole,
    VoltageRange,
};

/// Slack for floating-point comparisons of volts and milliamps.
const EPS: f64 = 1e-9;

/// Everything one checker run computes.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub diagnostics: Vec<Diagnostic>,
    pub groups: Vec<BusGroup>,
    pub propagation: Propagation,
}

impl CheckReport {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }
}

/// Runs the full rule catalog.
pub fn check(resolved: &ResolvedComposition) -> Vec<Diagnostic> {
    check_report(resolved).diagnostics
}

pub fn check_report(resolved: &ResolvedComposition) -> CheckReport {
    let groups = group_buses(resolved);
    let propagation = propagate(resolved);
    let mut out = Vec::new();
    let ctx = Ctx {
        resolved,
        state: &propagation.state,
    };

    for g in &groups {
        // protocol rules only make sense on a well-formed bus
        if !ctx.protocol_mismatch(g, &mut out) {
            ctx.role_conflict(g, &mut out);
            if g.protocol == InterfaceKind::I2c {
                ctx.address_conflict(g, &mut out);
                ctx.missing_pullups(g, &mut out);
            }
        }
        ctx.voltage_compat(g, &mut out);
    }
    ctx.overdraw(&mut out);
    ctx.unconnected(&mut out);
    ctx.rail_range(&mut out);
    out.extend(plan_auto_attach(resolved).1);

    out.sort();
    out.dedup();
    CheckReport {
        diagnostics: out,
        groups,
        propagation,
    }
}

struct Ctx<'a> {
    resolved: &'a ResolvedComposition,
    state: &'a PropagationState,
}

fn port_subjects<'p>(ports: impl IntoIterator<Item = &'p PortRef>) -> Vec<Subject> {
    ports.into_iter().cloned().map(Subject::Port).collect()
}

fn edge_subjects(g: &BusGroup) -> impl Iterator<Item = Subject> + '_ {
    g.edges.iter().cloned().map(Subject::Edge)
}

fn fmt_addresses(a: &BTreeSet<u8>) -> String {
    a.iter().map(|x| format!("0x{x:02x}")).collect::<Vec<_>>().join(", ")
}

impl Ctx<'_> {
    fn port(&self, p: &PortRef) -> &Port {
        self.resolved.port(p).expect("resolved port")
    }

    /// E001: mixed interface kinds or mismatched lines in one group.
    fn protocol_mismatch(&self, g: &BusGroup, out: &mut Vec<Diagnostic>) -> bool {
        let subjects = || {
            let mut s = port_subjects(&g.members);
            s.extend(edge_subjects(g));
            s
        };
        if g.mixed {
            let kinds: BTreeSet<String> = g
                .members
                .iter()
                .map(|m| format!("{m} ({})", self.port(m).iface.kind()))
                .collect();
            out.push(Diagnostic::error(
                "E001",
                subjects(),
                format!(
                    "bus mixes interface kinds: {}",
                    kinds.into_iter().collect::<Vec<_>>().join(", ")
                ),
            ));
            return true;
        }
        if matches!(g.protocol, InterfaceKind::I2c | InterfaceKind::Spi) {
            let lines: BTreeSet<BusLine> = g
                .members
                .iter()
                .filter_map(|m| self.port(m).iface.line())
                .collect();
            if lines.len() > 1 {
                let names: Vec<&str> = lines.iter().map(BusLine::as_str).collect();
                out.push(Diagnostic::error(
                    "E001",
                    subjects(),
                    format!("{} bus joins different lines: {}", g.protocol, names.join(", ")),
                ));
                return true;
            }
        }
        false
    }

    /// E002: controller/driver count rules per protocol.
    fn role_conflict(&self, g: &BusGroup, out: &mut Vec<Diagnostic>) {
        let ifaces: Vec<(&PortRef, &InterfaceType)> =
            g.members.iter().map(|m| (m, &self.port(m).iface)).collect();
        let distinct = |f: &dyn Fn(&InterfaceType) -> bool| -> BTreeSet<&str> {
            ifaces
                .iter()
                .filter(|(_, i)| f(i))
                .map(|(m, _)| m.instance.as_str())
                .collect()
        };
        let (count, what) = match g.protocol {
            InterfaceKind::I2c => (
                distinct(&|i| matches!(i, InterfaceType::I2c { role: I2cRole::Controller, .. })).len(),
                "I2C controller",
            ),
            InterfaceKind::Spi => (
                distinct(&|i| matches!(i, InterfaceType::Spi { role: SpiRole::Controller, .. })).len(),
                "SPI controller",
            ),
            InterfaceKind::Uart => {
                if ifaces.iter().any(|(_, i)| i.line().is_some()) {
                    let tx = ifaces
                        .iter()
                        .filter(|(_, i)| i.line() == Some(BusLine::Tx))
                        .count();
                    (tx, "UART transmitter")
                } else {
                    (
                        distinct(&|i| matches!(i, InterfaceType::Uart { role: UartRole::Dte, .. })).len(),
                        "UART DTE",
                    )
                }
            }
            InterfaceKind::Gpio => {
                let outputs = ifaces
                    .iter()
                    .filter(|(_, i)| {
                        matches!(i, InterfaceType::Gpio { direction: Direction::Output, .. })
                    })
                    .count();
                if outputs <= 1 {
                    return;
                }
                (outputs, "GPIO output")
            }
            _ => return,
        };
        if count != 1 {
            let mut subjects = port_subjects(&g.members);
            subjects.extend(edge_subjects(g));
            out.push(Diagnostic::error(
                "E002",
                subjects,
                format!("bus has {count} {what}s, expected exactly 1"),
            ));
        }
    }

    /// E005: no distinct address assignment exists.
    fn address_conflict(&self, g: &BusGroup, out: &mut Vec<Diagnostic>) {
        let mut candidates: BTreeMap<String, BTreeSet<u8>> = BTreeMap::new();
        for m in &g.members {
            if let InterfaceType::I2c {
                role: I2cRole::Peripheral,
                ..
            } = self.port(m).iface
            {
                let inst = &self.resolved.instances[&m.instance];
                candidates
                    .entry(m.instance.clone())
                    .or_default()
                    .extend(i2c::candidate_addresses(inst, &m.port));
            }
        }
        if candidates.len() < 2 {
            return;
        }
        // Instance subjects, so the SDA and SCL groups of one bus report once.
        if let Some(conflict) = i2c::find_conflict(&candidates) {
            out.push(Diagnostic::error(
                "E005",
                conflict.peripherals.iter().cloned().map(Subject::Instance).collect(),
                format!(
                    "I2C address conflict between {} over {{{}}}",
                    conflict.peripherals.iter().cloned().collect::<Vec<_>>().join(", "),
                    fmt_addresses(&conflict.addresses)
                ),
            ));
        }
    }

    /// W103: an I2C group without pull-ups.
    fn missing_pullups(&self, g: &BusGroup, out: &mut Vec<Diagnostic>) {
        let has_pullup = g.members.iter().any(|m| {
            matches!(
                self.port(m).iface,
                InterfaceType::I2c {
                    role: I2cRole::PullupProvider,
                    ..
                }
            )
        });
        if !has_pullup {
            out.push(Diagnostic::warning(
                "W103",
                g.instances().into_iter().map(|i| Subject::Instance(i.to_owned())).collect(),
                "I2C bus has no pull-up provider".into(),
            ));
        }
    }

    /// Whether `p` drives / receives on its group.
    fn roles(&self, p: &PortRef) -> (bool, bool) {
        match &self.port(p).iface {
            InterfaceType::Gpio { direction, .. } => match direction {
                Direction::Input => (false, true),
                Direction::Output => (true, false),
                Direction::Bidirectional => (true, true),
            },
            InterfaceType::I2c { role, .. } => match role {
                I2cRole::PullupProvider => (true, false),
                _ => (true, true),
            },
            InterfaceType::Spi { role, line, .. } => match (line, role) {
                (None, _) => (true, true),
                (Some(BusLine::Miso), SpiRole::Peripheral) => (true, false),
                (Some(BusLine::Miso), SpiRole::Controller) => (false, true),
                (Some(_), SpiRole::Controller) => (true, false),
                (Some(_), SpiRole::Peripheral) => (false, true),
            },
            InterfaceType::Uart { line, .. } => match line {
                Some(BusLine::Tx) => (true, false),
                Some(_) => (false, true),
                None => (true, true),
            },
            // analog ranges are compared symmetrically
            _ => (true, true),
        }
    }

    /// First reason a signal from `d` is not safely received by `r`.
    fn incompatibility(&self, d: &PortRef, r: &PortRef) -> Option<String> {
        let dp = self.port(d);
        let rp = self.port(r);
        let r_range = rp.iface.signal().and_then(|s| s.range);
        if let (InterfaceType::Analog { signal: ds }, InterfaceType::Analog { signal: rs }) =
            (&dp.iface, &rp.iface)
        {
            let (dr, rr) = (
                ds.range.or_else(|| self.state.operating_voltage(&d.instance)),
                rs.range.or_else(|| self.state.operating_voltage(&r.instance)),
            );
            return match (dr, rr) {
                (Some(a), Some(b)) if a.intersect(&b).is_none() => {
                    Some(format!("{d} spans {a} but {r} accepts {b}"))
                }
                _ => None,
            };
        }
        let dl = self.state.levels.get(d);
        let rl = self.state.levels.get(r);
        if let (Some(dl), Some(rl)) = (dl, rl) {
            if dl.level.voh_min + EPS < rl.level.vih_min {
                return Some(format!(
                    "{d} drives high at ≥{} V but {r} needs ≥{} V",
                    dl.level.voh_min, rl.level.vih_min
                ));
            }
            if dl.level.vol_max > rl.level.vil_max + EPS {
                return Some(format!(
                    "{d} drives low at ≤{} V but {r} needs ≤{} V",
                    dl.level.vol_max, rl.level.vil_max
                ));
            }
        }
        let d_high = self
            .state
            .operating_voltage(&d.instance)
            .map(|v| v.max())
            .or(dl.map(|l| l.level.voh_min));
        if let (Some(high), Some(limit)) = (d_high, r_range) {
            if high > limit.max() + EPS {
                return Some(format!(
                    "{d} can drive up to {high} V, beyond the {} V maximum of {r}",
                    limit.max()
                ));
            }
        }
        if let (Some(dl), Some(rl)) = (dl, rl) {
            if dl.derived && rl.derived {
                let dv = self.state.operating_voltage(&d.instance);
                let rv = self.state.operating_voltage(&r.instance);
                if let (Some(a), Some(b)) = (dv, rv) {
                    if a.intersect(&b).is_none() {
                        return Some(format!(
                            "{d} runs at {a} while {r} runs at {b}"
                        ));
                    }
                }
            }
        }
        None
    }

    /// E003: pairwise level checks between drivers and receivers.
    fn voltage_compat(&self, g: &BusGroup, out: &mut Vec<Diagnostic>) {
        let members: Vec<&PortRef> = g.members.iter().collect();
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                let (a_drv, a_rcv) = self.roles(a);
                let (b_drv, b_rcv) = self.roles(b);
                let reason = (a_drv && b_rcv)
                    .then(|| self.incompatibility(a, b))
                    .flatten()
                    .or_else(|| (b_drv && a_rcv).then(|| self.incompatibility(b, a)).flatten());
                if let Some(reason) = reason {
                    out.push(Diagnostic::error(
                        "E003",
                        port_subjects([*a, *b]),
                        reason,
                    ));
                }
            }
        }
    }

    /// E004: rail draw beyond supply.
    fn overdraw(&self, out: &mut Vec<Diagnostic>) {
        for (name, rail) in &self.state.rails {
            if let Some(supply) = rail.supply_milliamps {
                if rail.draw_milliamps > supply + EPS {
                    out.push(Diagnostic::error(
                        "E004",
                        vec![Subject::Rail(name.clone())],
                        format!(
                            "rail {name} draws {} mA but its supply is {} mA",
                            rail.draw_milliamps, supply
                        ),
                    ));
                }
            }
        }
    }

    /// E006 for required ports; W104 for optional lines of a half-connected bus.
    fn unconnected(&self, out: &mut Vec<Diagnostic>) {
        let doc = &self.resolved.doc;
        let connected: BTreeSet<&PortRef> = doc.edges.iter().flat_map(|e| [&e.a, &e.b]).collect();
        for (name, inst) in &self.resolved.instances {
            let is_connected = |p: &Port| {
                let r = PortRef::new(name, &p.name);
                if p.iface.kind().is_power() {
                    doc.attachment(&r).is_some()
                } else {
                    connected.contains(&r)
                }
            };
            let live_buses: BTreeSet<&str> = inst
                .block
                .ports()
                .iter()
                .filter(|p| is_connected(p))
                .filter_map(|p| p.iface.signal()?.bus.as_deref())
                .collect();
            for p in inst.block.ports() {
                if is_connected(p) {
                    continue;
                }
                let r = PortRef::new(name, &p.name);
                if p.required {
                    let how = if p.iface.kind().is_power() {
                        "is not attached to a rail"
                    } else {
                        "has no connection"
                    };
                    out.push(Diagnostic::error(
                        "E006",
                        vec![Subject::Port(r.clone())],
                        format!("required port {r} {how}"),
                    ));
                } else if let Some(bus) = p.iface.signal().and_then(|s| s.bus.as_deref()) {
                    if live_buses.contains(bus) {
                        out.push(Diagnostic::warning(
                            "W104",
                            vec![Subject::Port(r.clone())],
                            format!("optional port {r} of bus {bus} is left floating"),
                        ));
                    }
                }
            }
        }
    }

    /// E007: attachments outside the accepted range, and shorted rails.
    fn rail_range(&self, out: &mut Vec<Diagnostic>) {
        let doc = &self.resolved.doc;
        for a in &doc.attachments {
            let (Some(rail), Some(port)) = (doc.rail(&a.rail), self.resolved.port(&a.port)) else {
                continue;
            };
            let Some(accepted) = port.iface.accepted_range() else {
                continue;
            };
            if rail.voltage.intersect(&accepted).is_none() {
                out.push(Diagnostic::error(
                    "E007",
                    vec![Subject::Port(a.port.clone()), Subject::Rail(rail.name.clone())],
                    format!(
                        "{} accepts {accepted} but rail {} spans {}",
                        a.port, rail.name, rail.voltage
                    ),
                ));
            }
        }
        for class in net_classes(self.resolved).classes {
            if class.rails.len() > 1 {
                let names: Vec<&str> = class.rails.iter().map(String::as_str).collect();
                out.push(Diagnostic::error(
                    "E007",
                    class.rails.iter().cloned().map(Subject::Rail).collect(),
                    format!("rails {} are shorted together", names.join(" and ")),
                ));
            }
        }
    }
}

/// Rail summary served alongside diagnostics.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RailSummary {
    pub rail: String,
    pub voltage: Option<VoltageRange>,
    pub draw_milliamps: f64,
    pub supply_milliamps: Option<f64>,
}

pub fn rail_summaries(state: &PropagationState) -> Vec<RailSummary> {
    state
        .rails
        .iter()
        .map(|(name, r)| RailSummary {
            rail: name.clone(),
            voltage: r.voltage,
            draw_milliamps: r.draw_milliamps,
            supply_milliamps: r.supply_milliamps,
        })
        .collect()
}
