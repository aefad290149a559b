//! Dataflow propagation of rail voltages, rail loads, instance operating
//! voltages and port logic levels.
//!
//! The state is a lattice point: rail voltages and operating voltages only
//! narrow, and rail draws only grow as child rails report upward. Each pass
//! reads the previous state (Jacobi iteration), so the number of passes is
//! bounded by the depth of the rail forest plus one.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::mats::{PortRef, RailKind, ResolvedComposition};
use crate::model::{CurrentKind, InterfaceType, LogicLevel, VoltageRange};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum OperatingVoltage {
    /// No powering port is attached.
    Unpowered,
    Range { min_volts: f64, max_volts: f64 },
    /// Attached rails and port ranges have an empty intersection.
    Conflict,
}

impl OperatingVoltage {
    fn from_range(r: Option<VoltageRange>) -> Self {
        match r {
            Some(r) => OperatingVoltage::Range {
                min_volts: r.min(),
                max_volts: r.max(),
            },
            None => OperatingVoltage::Conflict,
        }
    }

    pub fn range(&self) -> Option<VoltageRange> {
        match *self {
            OperatingVoltage::Range {
                min_volts,
                max_volts,
            } => VoltageRange::new(min_volts, max_volts).ok(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RailState {
    /// Envelope narrowed by the ranges of supplying ports; `None` when empty.
    pub voltage: Option<VoltageRange>,
    /// Draw of attached ports plus the draw of child rails that have no
    /// supply of their own.
    pub draw_milliamps: f64,
    /// Explicit budget, else the sum of attached supplies; `None` when the
    /// rail has neither.
    pub supply_milliamps: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PortLevel {
    pub level: LogicLevel,
    /// True when computed from the operating voltage rather than declared.
    pub derived: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagationState {
    pub rails: BTreeMap<String, RailState>,
    pub instances: BTreeMap<String, OperatingVoltage>,
    pub levels: BTreeMap<PortRef, PortLevel>,
}

impl PropagationState {
    /// Starting point: nominal envelopes, no load, nothing powered.
    pub fn initial(resolved: &ResolvedComposition) -> Self {
        let rails = resolved
            .doc
            .rails
            .iter()
            .map(|r| {
                (
                    r.name.clone(),
                    RailState {
                        voltage: Some(r.voltage),
                        draw_milliamps: 0.0,
                        supply_milliamps: supply_budget(resolved, &r.name),
                    },
                )
            })
            .collect();
        let instances = resolved
            .instances
            .keys()
            .map(|n| (n.clone(), OperatingVoltage::Unpowered))
            .collect();
        Self {
            rails,
            instances,
            levels: BTreeMap::new(),
        }
    }

    /// One propagation pass over the previous state.
    pub fn step(&self, resolved: &ResolvedComposition) -> Self {
        let doc = &resolved.doc;
        let attached_ports = || {
            doc.attachments.iter().filter_map(|a| {
                let port = resolved.port(&a.port)?;
                Some((a, port))
            })
        };

        let mut rails = BTreeMap::new();
        for rail in &doc.rails {
            let prev = &self.rails[&rail.name];
            let mut voltage = prev.voltage;
            let mut draw = 0.0;
            for (a, port) in attached_ports().filter(|(a, _)| a.rail == rail.name) {
                let _ = a;
                if let InterfaceType::Power(p) = &port.iface {
                    match p.current.kind {
                        CurrentKind::Supplies => {
                            voltage = voltage.and_then(|v| v.intersect(&p.range));
                        }
                        CurrentKind::Draws => draw += p.current.max_milliamps(),
                    }
                }
            }
            for child in doc.rails.iter().filter(|c| c.parent.as_deref() == Some(&rail.name)) {
                let child_state = &self.rails[&child.name];
                if child_state.supply_milliamps.is_none() {
                    draw += child_state.draw_milliamps;
                }
            }
            rails.insert(
                rail.name.clone(),
                RailState {
                    voltage,
                    draw_milliamps: draw,
                    supply_milliamps: prev.supply_milliamps,
                },
            );
        }

        let mut instances = BTreeMap::new();
        let mut levels = BTreeMap::new();
        for (name, inst) in &resolved.instances {
            let powered: Vec<_> = inst
                .block
                .ports()
                .iter()
                .filter_map(|p| match &p.iface {
                    InterfaceType::Power(spec) => Some((p, spec)),
                    _ => None,
                })
                .collect();
            // Logic is powered by the ports that draw; pure sources fall back
            // to their outputs.
            let has_draws = powered
                .iter()
                .any(|(_, s)| s.current.kind == CurrentKind::Draws);
            let mut op: Option<Option<VoltageRange>> = None;
            for (port, spec) in powered {
                if has_draws && spec.current.kind != CurrentKind::Draws {
                    continue;
                }
                let Some(att) = doc.attachment(&PortRef::new(name, &port.name)) else {
                    continue;
                };
                let Some(rail) = self.rails.get(&att.rail) else {
                    continue;
                };
                let here = rail.voltage.and_then(|v| v.intersect(&spec.range));
                op = Some(match op {
                    None => here,
                    Some(acc) => acc.zip(here).and_then(|(a, b)| a.intersect(&b)),
                });
            }
            let op = match op {
                None => OperatingVoltage::Unpowered,
                Some(r) => OperatingVoltage::from_range(r),
            };
            // never widen past what the previous pass established
            let op = match (self.instances.get(name), op) {
                (Some(OperatingVoltage::Conflict), _) => OperatingVoltage::Conflict,
                (Some(prev @ OperatingVoltage::Range { .. }), OperatingVoltage::Range { .. }) => {
                    OperatingVoltage::from_range(prev.range().and_then(|p| {
                        p.intersect(&op.range().expect("range variant"))
                    }))
                }
                (Some(prev @ OperatingVoltage::Range { .. }), OperatingVoltage::Unpowered) => *prev,
                (_, op) => op,
            };
            for port in inst.block.ports() {
                let Some(signal) = port.iface.signal() else {
                    continue;
                };
                let level = match (&signal.level, op.range()) {
                    (Some(l), _) => Some(PortLevel {
                        level: *l,
                        derived: false,
                    }),
                    (None, Some(supply)) => Some(PortLevel {
                        level: LogicLevel::derived_from_supply(&supply),
                        derived: true,
                    }),
                    (None, None) => None,
                };
                if let Some(level) = level {
                    levels.insert(PortRef::new(name, &port.name), level);
                }
            }
            instances.insert(name.clone(), op);
        }

        Self {
            rails,
            instances,
            levels,
        }
    }

    pub fn operating_voltage(&self, instance: &str) -> Option<VoltageRange> {
        self.instances.get(instance).and_then(OperatingVoltage::range)
    }
}

fn supply_budget(resolved: &ResolvedComposition, rail: &str) -> Option<f64> {
    let r = resolved.doc.rail(rail)?;
    if r.kind == RailKind::Ground {
        return None;
    }
    if let Some(s) = r.supply_milliamps {
        return Some(s);
    }
    let supplies: Vec<f64> = resolved
        .doc
        .attachments
        .iter()
        .filter(|a| a.rail == rail)
        .filter_map(|a| match &resolved.port(&a.port)?.iface {
            InterfaceType::Power(p) if p.current.kind == CurrentKind::Supplies => {
                Some(p.current.max_milliamps())
            }
            _ => None,
        })
        .collect();
    (!supplies.is_empty()).then(|| supplies.iter().sum())
}

/// Result of [`propagate`] with the number of passes that changed state.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub state: PropagationState,
    pub passes: usize,
}

/// Iterates [`PropagationState::step`] from the initial state to its fixpoint.
pub fn propagate(resolved: &ResolvedComposition) -> Propagation {
    let mut state = PropagationState::initial(resolved);
    let mut passes = 0;
    // Each changing pass settles at least one more level of the rail forest;
    // the limit only guards against a non-monotone bug.
    let limit = resolved.doc.rails.len() + resolved.instances.len() + 2;
    loop {
        let next = state.step(resolved);
        if next == state {
            break;
        }
        state = next;
        passes += 1;
        assert!(passes <= limit, "propagation failed to converge");
    }
    Propagation { state, passes }
}
