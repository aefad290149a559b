use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::connectivity::DisjointSet;
use crate::mats::{PortRef, ResolvedComposition};
use crate::model::InterfaceKind;

/// One connected component of the signal-edge graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BusGroup {
    /// Kind shared by all members; for mixed groups, the kind of the
    /// smallest member.
    pub protocol: InterfaceKind,
    /// Members disagree on interface kind (reported as E001).
    pub mixed: bool,
    pub members: BTreeSet<PortRef>,
    pub edges: BTreeSet<String>,
}

impl BusGroup {
    pub fn instances(&self) -> BTreeSet<&str> {
        self.members.iter().map(|m| m.instance.as_str()).collect()
    }
}

/// Groups signal edges into connected components, ordered by each group's
/// smallest member.
pub fn group_buses(resolved: &ResolvedComposition) -> Vec<BusGroup> {
    let ports: BTreeSet<&PortRef> = resolved
        .doc
        .edges
        .iter()
        .flat_map(|e| [&e.a, &e.b])
        .collect();
    let ports: Vec<&PortRef> = ports.into_iter().collect();
    let ids: BTreeMap<&PortRef, usize> = ports.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let mut dsu = DisjointSet::new(ports.len());
    for e in &resolved.doc.edges {
        dsu.union(ids[&e.a], ids[&e.b]);
    }

    let mut by_root: BTreeMap<usize, (BTreeSet<PortRef>, BTreeSet<String>)> = BTreeMap::new();
    for (i, p) in ports.iter().enumerate() {
        by_root.entry(dsu.find(i)).or_default().0.insert((*p).clone());
    }
    for e in &resolved.doc.edges {
        by_root
            .get_mut(&dsu.find(ids[&e.a]))
            .expect("edge endpoint indexed")
            .1
            .insert(e.id.clone());
    }

    let mut groups: Vec<BusGroup> = by_root
        .into_values()
        .map(|(members, edges)| {
            let kinds: Vec<InterfaceKind> = members
                .iter()
                .filter_map(|m| resolved.port(m).map(|p| p.iface.kind()))
                .collect();
            let protocol = kinds.first().copied().unwrap_or(InterfaceKind::Gpio);
            let mixed = kinds.iter().any(|k| *k != protocol);
            BusGroup {
                protocol,
                mixed,
                members,
                edges,
            }
        })
        .collect();
    groups.sort_by(|a, b| a.members.first().cmp(&b.members.first()));
    groups
}
