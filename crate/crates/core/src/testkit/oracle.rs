//! Brute-force reference implementations, written independently of the
//! production algorithms they check.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::mats::{PortRef, ResolvedComposition};
use crate::model::{I2cRole, InterfaceType, NO_CONNECT};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Node {
    Pin(String, String),
    Net(String, String),
    Rail(String),
}

/// Connected-component id for every non-NC pin, keyed by
/// (qualified refdes, pin), via BFS over pins, internal nets, edges and
/// rail attachments.
pub fn pin_components(resolved: &ResolvedComposition) -> BTreeMap<(String, String), usize> {
    let mut adj: BTreeMap<Node, Vec<Node>> = BTreeMap::new();
    let mut link = |a: Node, b: Node| {
        adj.entry(a.clone()).or_default().push(b.clone());
        adj.entry(b).or_default().push(a);
    };
    let bound = |p: &PortRef| -> Node {
        let net = &resolved.instances[&p.instance]
            .block
            .port(&p.port)
            .expect("port")
            .bound_net;
        Node::Net(p.instance.clone(), net.clone())
    };
    let mut pins = Vec::new();
    for (iname, inst) in &resolved.instances {
        for c in inst.block.components() {
            for (pin, net) in &c.pins {
                if net == NO_CONNECT {
                    continue;
                }
                let node = Node::Pin(format!("{iname}.{}", c.refdes), pin.clone());
                pins.push(node.clone());
                link(node, Node::Net(iname.clone(), net.clone()));
            }
        }
    }
    for e in &resolved.doc.edges {
        link(bound(&e.a), bound(&e.b));
    }
    for a in &resolved.doc.attachments {
        link(bound(&a.port), Node::Rail(a.rail.clone()));
    }

    let mut comp: BTreeMap<Node, usize> = BTreeMap::new();
    let mut next = 0;
    for start in &pins {
        if comp.contains_key(start) {
            continue;
        }
        let mut queue = VecDeque::from([start.clone()]);
        comp.insert(start.clone(), next);
        while let Some(n) = queue.pop_front() {
            for m in adj.get(&n).into_iter().flatten() {
                if !comp.contains_key(m) {
                    comp.insert(m.clone(), next);
                    queue.push_back(m.clone());
                }
            }
        }
        next += 1;
    }
    pins.into_iter()
        .map(|p| {
            let id = comp[&p];
            match p {
                Node::Pin(r, pin) => ((r, pin), id),
                _ => unreachable!(),
            }
        })
        .collect()
}

/// Port sets connected through signal edges, by repeated reachability
/// sweeps over the raw edge list.
pub fn bus_groups(resolved: &ResolvedComposition) -> BTreeSet<BTreeSet<PortRef>> {
    let ports: BTreeSet<&PortRef> = resolved.doc.edges.iter().flat_map(|e| [&e.a, &e.b]).collect();
    let mut out = BTreeSet::new();
    for p in ports {
        let mut reach: BTreeSet<PortRef> = BTreeSet::from([p.clone()]);
        loop {
            let before = reach.len();
            for e in &resolved.doc.edges {
                if reach.contains(&e.a) || reach.contains(&e.b) {
                    reach.insert(e.a.clone());
                    reach.insert(e.b.clone());
                }
            }
            if reach.len() == before {
                break;
            }
        }
        out.insert(reach);
    }
    out
}

/// Whether the peripherals on the I2C bus containing `port` cannot all be
/// given distinct addresses, by enumerating every variant combination of
/// every unpinned option jointly and every address choice.
pub fn i2c_conflict(resolved: &ResolvedComposition, port: &PortRef) -> bool {
    let group = bus_groups(resolved)
        .into_iter()
        .find(|g| g.contains(port))
        .unwrap_or_default();
    let peripherals: BTreeMap<&str, &str> = group
        .iter()
        .filter(|m| {
            matches!(
                resolved.port(m).map(|p| &p.iface),
                Some(InterfaceType::I2c { role: I2cRole::Peripheral, .. })
            )
        })
        .map(|m| (m.instance.as_str(), m.port.as_str()))
        .collect();
    if peripherals.len() < 2 {
        return false;
    }

    // (instance, option, variants) for every unpinned option
    let mut free: Vec<(&str, &str, Vec<&str>)> = Vec::new();
    for inst in peripherals.keys() {
        let ri = &resolved.instances[*inst];
        for opt in ri.source.configs() {
            if !ri.instance.config.contains_key(&opt.name) {
                free.push((inst, &opt.name, opt.variants.iter().map(|v| v.name.as_str()).collect()));
            }
        }
    }
    let total: usize = free.iter().map(|f| f.2.len()).product();
    for mut code in 0..total {
        let mut sets: Vec<Vec<u8>> = Vec::new();
        for (inst, port) in &peripherals {
            let ri = &resolved.instances[*inst];
            let mut sel = ri.instance.config.clone();
            for (i, o, vs) in &free {
                if i == inst {
                    sel.insert((*o).to_owned(), vs[code % vs.len()].to_owned());
                    code /= vs.len();
                }
            }
            let block = ri.source.apply_config(&sel).expect("valid selection");
            match &block.port(port).expect("port").iface {
                InterfaceType::I2c { addresses, .. } => sets.push(addresses.iter().copied().collect()),
                _ => unreachable!(),
            }
        }
        if distinct_choice(&sets, &mut Vec::new()) {
            return false;
        }
    }
    true
}

fn distinct_choice(sets: &[Vec<u8>], taken: &mut Vec<u8>) -> bool {
    let Some((first, rest)) = sets.split_first() else {
        return true;
    };
    for &a in first {
        if !taken.contains(&a) {
            taken.push(a);
            if distinct_choice(rest, taken) {
                return true;
            }
            taken.pop();
        }
    }
    false
}
