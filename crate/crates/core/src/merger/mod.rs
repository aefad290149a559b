//! Flattening a checked composition into one netlist.
//!
//! Components are copied with instance-qualified reference designators
//! (`sensor.R1`). Nets are unified through [`net_classes`] and named by
//! precedence: rail name, then the smallest user net name on the class,
//! then the smallest qualified internal net name. A user name that would
//! collide with a rail or with a name already taken falls back to the
//! qualified name, so every merged net name is unique.

mod export;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::connectivity::{net_classes, NetNode};
use crate::diagnostic::Diagnostic;
use crate::mats::ResolvedComposition;
use crate::model::NO_CONNECT;

pub use export::{export, ExportFormat, FLAT_SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MergedComponent {
    pub refdes: String,
    pub value: String,
    pub footprint: String,
    /// Pin name to merged net name, or `NC`.
    pub pins: BTreeMap<String, String>,
}

/// Pin reference inside the merged netlist.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PinRef {
    pub refdes: String,
    pub pin: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub instance: String,
    pub block_id: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergedSchematic {
    pub design_name: String,
    /// Sorted by refdes.
    pub components: Vec<MergedComponent>,
    pub nets: BTreeMap<String, BTreeSet<PinRef>>,
    pub provenance: BTreeMap<String, Provenance>,
}

impl MergedSchematic {
    /// Merged net holding `pin`, or `None` for unknown and NC pins.
    pub fn net_of(&self, refdes: &str, pin: &str) -> Option<&str> {
        let c = self
            .components
            .binary_search_by(|c| c.refdes.as_str().cmp(refdes))
            .ok()?;
        let net = self.components[c].pins.get(pin)?;
        (net != NO_CONNECT).then_some(net.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MergeError {
    #[error("merge refused: blocking diagnostics {}", codes.join(", "))]
    Refused { codes: Vec<String> },
    #[error("internal inconsistency: rails {} share one net", rails.join(", "))]
    InternalInconsistency { rails: Vec<String> },
}

/// Merges `resolved`, refusing when `diagnostics` contains any error.
pub fn merge(
    resolved: &ResolvedComposition,
    diagnostics: &[Diagnostic],
) -> Result<MergedSchematic, MergeError> {
    let codes: BTreeSet<&str> = diagnostics
        .iter()
        .filter(|d| d.is_error())
        .map(|d| d.code.as_str())
        .collect();
    if !codes.is_empty() {
        return Err(MergeError::Refused {
            codes: codes.into_iter().map(str::to_owned).collect(),
        });
    }

    let classes = net_classes(resolved);
    let rail_names: BTreeSet<&str> = resolved.doc.rails.iter().map(|r| r.name.as_str()).collect();
    let mut taken: BTreeSet<String> = BTreeSet::new();
    let mut names: Vec<Option<String>> = vec![None; classes.classes.len()];

    // Rail classes first, then the rest ordered by fallback name, so that
    // naming never depends on input order.
    let mut order: Vec<(u8, String, usize)> = Vec::new();
    for (i, class) in classes.classes.iter().enumerate() {
        match class.rails.len() {
            0 => {
                let fallback = class.fallback_name().expect("class without rails has nets");
                order.push((1, fallback, i));
            }
            1 => order.push((0, class.rails.iter().next().unwrap().clone(), i)),
            _ => {
                return Err(MergeError::InternalInconsistency {
                    rails: class.rails.iter().cloned().collect(),
                })
            }
        }
    }
    order.sort();
    for (tier, fallback, i) in order {
        let name = if tier == 0 {
            fallback
        } else {
            classes.classes[i]
                .user_names
                .iter()
                .next()
                .filter(|n| !rail_names.contains(n.as_str()) && !taken.contains(*n))
                .cloned()
                .unwrap_or(fallback)
        };
        taken.insert(name.clone());
        names[i] = Some(name);
    }

    let mut components = Vec::new();
    let mut nets: BTreeMap<String, BTreeSet<PinRef>> = BTreeMap::new();
    let mut provenance = BTreeMap::new();
    for (iname, inst) in &resolved.instances {
        for c in inst.block.components() {
            let refdes = format!("{iname}.{}", c.refdes);
            let mut pins = BTreeMap::new();
            for (pin, net) in &c.pins {
                let merged = if net == NO_CONNECT {
                    NO_CONNECT.to_owned()
                } else {
                    let ci = classes
                        .class_index(&NetNode::internal(iname, net))
                        .expect("every block net is a node");
                    let name = names[ci].clone().expect("every class named");
                    nets.entry(name.clone()).or_default().insert(PinRef {
                        refdes: refdes.clone(),
                        pin: pin.clone(),
                    });
                    name
                };
                pins.insert(pin.clone(), merged);
            }
            provenance.insert(
                refdes.clone(),
                Provenance {
                    instance: iname.clone(),
                    block_id: inst.instance.block_id.clone(),
                    version: inst.instance.version.clone(),
                },
            );
            components.push(MergedComponent {
                refdes,
                value: c.part_value.clone(),
                footprint: c.footprint.clone(),
                pins,
            });
        }
    }
    components.sort_by(|a, b| a.refdes.cmp(&b.refdes));

    Ok(MergedSchematic {
        design_name: resolved.doc.name.clone(),
        components,
        nets,
        provenance,
    })
}
