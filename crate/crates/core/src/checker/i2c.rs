//! I2C address satisfiability.
//!
//! Each peripheral may answer at any address reachable through its
//! configuration: options pinned in the composition are fixed, unpinned
//! options may take any variant, and a multi-address set means the device
//! can be brought up at any one of them. A bus is conflict-free iff every
//! peripheral can be given a distinct address, i.e. the bipartite graph
//! peripheral → candidate address has a matching saturating all
//! peripherals.

use std::collections::{BTreeMap, BTreeSet};

use crate::mats::ResolvedInstance;
use crate::model::{I2cRole, InterfaceType, PortOverride};

/// Addresses a peripheral port can take over all variants of the options
/// left unpinned by the instance.
pub fn candidate_addresses(inst: &ResolvedInstance, port: &str) -> BTreeSet<u8> {
    let source = &inst.source;
    let pinned = &inst.instance.config;
    let free: Vec<_> = source
        .configs()
        .iter()
        .filter(|o| !pinned.contains_key(&o.name))
        .filter(|o| {
            o.variants.iter().any(|v| {
                v.overrides
                    .iter()
                    .any(|ov| matches!(ov, PortOverride::Addresses { port: p, .. } if p == port))
            })
        })
        .collect();

    let mut out = BTreeSet::new();
    let mut choice = vec![0usize; free.len()];
    loop {
        let mut selections: BTreeMap<String, String> = pinned.clone();
        for (opt, &i) in free.iter().zip(&choice) {
            selections.insert(opt.name.clone(), opt.variants[i].name.clone());
        }
        if let Ok(block) = source.apply_config(&selections) {
            if let Some(InterfaceType::I2c {
                role: I2cRole::Peripheral,
                addresses,
                ..
            }) = block.port(port).map(|p| &p.iface)
            {
                out.extend(addresses.iter().copied());
            }
        }
        // odometer increment over the free options
        let mut k = 0;
        loop {
            if k == free.len() {
                return out;
            }
            choice[k] += 1;
            if choice[k] < free[k].variants.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// A set of peripherals that cannot all get distinct addresses, and the
/// addresses they compete for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AddressConflict {
    pub peripherals: BTreeSet<String>,
    pub addresses: BTreeSet<u8>,
}

/// Finds a Hall violator via augmenting paths (Kuhn's algorithm), or `None`
/// when every peripheral can be assigned a distinct address.
pub fn find_conflict(candidates: &BTreeMap<String, BTreeSet<u8>>) -> Option<AddressConflict> {
    let names: Vec<&String> = candidates.keys().collect();
    let sets: Vec<Vec<u8>> = candidates.values().map(|s| s.iter().copied().collect()).collect();
    let mut owner: BTreeMap<u8, usize> = BTreeMap::new();

    fn augment(
        u: usize,
        sets: &[Vec<u8>],
        owner: &mut BTreeMap<u8, usize>,
        seen_addr: &mut BTreeSet<u8>,
        seen_dev: &mut BTreeSet<usize>,
    ) -> bool {
        seen_dev.insert(u);
        for &a in &sets[u] {
            if !seen_addr.insert(a) {
                continue;
            }
            match owner.get(&a).copied() {
                None => {
                    owner.insert(a, u);
                    return true;
                }
                Some(v) => {
                    if augment(v, sets, owner, seen_addr, seen_dev) {
                        owner.insert(a, u);
                        return true;
                    }
                }
            }
        }
        false
    }

    for u in 0..names.len() {
        let mut seen_addr = BTreeSet::new();
        let mut seen_dev = BTreeSet::new();
        if !augment(u, &sets, &mut owner, &mut seen_addr, &mut seen_dev) {
            // The failed search visited a device set whose neighbourhood is
            // exactly the addresses it visited, one short of a matching.
            return Some(AddressConflict {
                peripherals: seen_dev.iter().map(|&i| names[i].clone()).collect(),
                addresses: seen_addr,
            });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cands(sets: &[(&str, &[u8])]) -> BTreeMap<String, BTreeSet<u8>> {
        sets.iter()
            .map(|(n, s)| (n.to_string(), s.iter().copied().collect()))
            .collect()
    }

    #[test]
    fn identical_singletons_conflict() {
        let c = find_conflict(&cands(&[("a", &[0x48]), ("b", &[0x48])])).unwrap();
        assert_eq!(c.addresses, [0x48].into());
        assert_eq!(c.peripherals.len(), 2);
    }

    #[test]
    fn selectable_sets_resolve() {
        assert!(find_conflict(&cands(&[("a", &[0x48, 0x49]), ("b", &[0x48])])).is_none());
    }

    #[test]
    fn hall_violator_is_minimal_region() {
        let c = find_conflict(&cands(&[
            ("a", &[1, 2]),
            ("b", &[1, 2]),
            ("c", &[1, 2]),
            ("d", &[7]),
        ]))
        .unwrap();
        assert_eq!(c.addresses, [1, 2].into());
        assert!(!c.peripherals.contains("d"));
    }
}
