//! Net unification over a resolved composition.
//!
//! Nodes are every instance's internal nets plus every rail. Signal edges
//! union the nets bound to their two ports; rail attachments union the
//! port's net with the rail.

use std::collections::{BTreeMap, BTreeSet};

use crate::mats::ResolvedComposition;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NetNode {
    /// Internal net of an instance.
    Internal { instance: String, net: String },
    Rail(String),
}

impl NetNode {
    pub fn internal(instance: &str, net: &str) -> Self {
        NetNode::Internal {
            instance: instance.to_owned(),
            net: net.to_owned(),
        }
    }

    /// `instance.net` for internal nets, the bare rail name otherwise.
    pub fn qualified_name(&self) -> String {
        match self {
            NetNode::Internal { instance, net } => format!("{instance}.{net}"),
            NetNode::Rail(r) => r.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, mut node: usize) -> usize {
        let mut root = node;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        match self.rank[a].cmp(&self.rank[b]) {
            std::cmp::Ordering::Less => self.parent[a] = b,
            std::cmp::Ordering::Greater => self.parent[b] = a,
            std::cmp::Ordering::Equal => {
                self.parent[b] = a;
                self.rank[a] = self.rank[a].saturating_add(1);
            }
        }
    }
}

/// One electrically connected class of nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetClass {
    /// Sorted; the first element is the class's identity.
    pub nodes: Vec<NetNode>,
    pub rails: BTreeSet<String>,
    /// `net_name`s of signal edges that landed in this class.
    pub user_names: BTreeSet<String>,
}

impl NetClass {
    /// Smallest qualified internal net name, if the class has one.
    pub fn fallback_name(&self) -> Option<String> {
        self.nodes
            .iter()
            .filter(|n| matches!(n, NetNode::Internal { .. }))
            .map(NetNode::qualified_name)
            .min()
    }
}

#[derive(Debug, Clone)]
pub struct NetClasses {
    /// Ordered by each class's smallest node.
    pub classes: Vec<NetClass>,
    index: BTreeMap<NetNode, usize>,
}

impl NetClasses {
    pub fn class_of(&self, node: &NetNode) -> Option<&NetClass> {
        self.index.get(node).map(|&i| &self.classes[i])
    }

    pub fn class_index(&self, node: &NetNode) -> Option<usize> {
        self.index.get(node).copied()
    }
}

pub fn net_classes(resolved: &ResolvedComposition) -> NetClasses {
    let mut nodes = BTreeSet::new();
    for (name, inst) in &resolved.instances {
        for net in inst.block.nets() {
            nodes.insert(NetNode::internal(name, net));
        }
    }
    for rail in &resolved.doc.rails {
        nodes.insert(NetNode::Rail(rail.name.clone()));
    }
    let nodes: Vec<NetNode> = nodes.into_iter().collect();
    let ids: BTreeMap<&NetNode, usize> = nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let mut dsu = DisjointSet::new(nodes.len());

    let bound = |instance: &str, port: &str| -> Option<usize> {
        let p = resolved.instances.get(instance)?.block.port(port)?;
        ids.get(&NetNode::internal(instance, &p.bound_net)).copied()
    };

    let mut named: Vec<(usize, &str)> = Vec::new();
    for e in &resolved.doc.edges {
        if let (Some(a), Some(b)) = (
            bound(&e.a.instance, &e.a.port),
            bound(&e.b.instance, &e.b.port),
        ) {
            dsu.union(a, b);
            if let Some(n) = &e.net_name {
                named.push((a, n));
            }
        }
    }
    for att in &resolved.doc.attachments {
        let rail = ids.get(&NetNode::Rail(att.rail.clone())).copied();
        if let (Some(p), Some(r)) = (bound(&att.port.instance, &att.port.port), rail) {
            dsu.union(p, r);
        }
    }

    let mut by_root: BTreeMap<usize, usize> = BTreeMap::new();
    let mut classes: Vec<NetClass> = Vec::new();
    let mut index = BTreeMap::new();
    // nodes are sorted, so classes come out ordered by their smallest node
    for (i, node) in nodes.iter().enumerate() {
        let root = dsu.find(i);
        let ci = *by_root.entry(root).or_insert_with(|| {
            classes.push(NetClass {
                nodes: Vec::new(),
                rails: BTreeSet::new(),
                user_names: BTreeSet::new(),
            });
            classes.len() - 1
        });
        if let NetNode::Rail(r) = node {
            classes[ci].rails.insert(r.clone());
        }
        classes[ci].nodes.push(node.clone());
        index.insert(node.clone(), ci);
    }
    for (node, name) in named {
        let ci = by_root[&dsu.find(node)];
        classes[ci].user_names.insert(name.to_owned());
    }
    NetClasses { classes, index }
}
