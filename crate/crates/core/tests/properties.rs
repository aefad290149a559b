use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use matcheck_core::checker::{group_buses, propagate, PropagationState};
use matcheck_core::connectivity::{net_classes, NetNode};
use matcheck_core::model::VoltageRange;
use matcheck_core::testkit::{blocks, gen, oracle};
use matcheck_core::{
    check, merge, parse_block, parse_composition, resolve, serialize_block,
    serialize_composition, BlockInstance, CompositionDocument, Library, PortRef, PowerRail,
};

fn range() -> impl Strategy<Value = VoltageRange> {
    (-100i32..200, 0i32..100).prop_map(|(a, w)| {
        VoltageRange::new(f64::from(a) / 10.0, f64::from(a + w) / 10.0).unwrap()
    })
}

proptest! {
    #[test]
    fn intersect_commutes_and_associates(a in range(), b in range(), c in range()) {
        prop_assert_eq!(a.intersect(&b), b.intersect(&a));
        let left = a.intersect(&b).and_then(|ab| ab.intersect(&c));
        let right = b.intersect(&c).and_then(|bc| a.intersect(&bc));
        prop_assert_eq!(left, right);
        if let Some(i) = a.intersect(&b) {
            prop_assert!(a.contains(&i) && b.contains(&i));
        }
    }

    #[test]
    fn parsers_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
        let _ = parse_block(&bytes);
        let _ = parse_composition(&bytes);
    }
}

#[derive(Debug, Clone)]
enum Op {
    AddInstance(u8, u8),
    RemoveInstance(u8),
    AddRail(u8, bool),
    RemoveRail(u8),
    SetParent(u8, Option<u8>),
    Attach(u8, u8, u8),
    Detach(u8, u8),
    Connect(u8, u8, u8, u8, bool),
    Disconnect(u8),
    Select(u8, Option<u8>),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0u8..6, 0u8..10).prop_map(|(i, b)| Op::AddInstance(i, b)),
        (0u8..6).prop_map(Op::RemoveInstance),
        (0u8..4, any::<bool>()).prop_map(|(r, g)| Op::AddRail(r, g)),
        (0u8..4).prop_map(Op::RemoveRail),
        (0u8..4, proptest::option::of(0u8..4)).prop_map(|(r, p)| Op::SetParent(r, p)),
        (0u8..6, 0u8..8, 0u8..4).prop_map(|(i, p, r)| Op::Attach(i, p, r)),
        (0u8..6, 0u8..8).prop_map(|(i, p)| Op::Detach(i, p)),
        (0u8..6, 0u8..8, 0u8..6, 0u8..8, any::<bool>())
            .prop_map(|(a, p, b, q, n)| Op::Connect(a, p, b, q, n)),
        (0u8..12).prop_map(Op::Disconnect),
        (0u8..6, proptest::option::of(0u8..3)).prop_map(|(i, v)| Op::Select(i, v)),
    ]
}

fn port_of(lib: &Library, doc: &CompositionDocument, inst: u8, port: u8) -> PortRef {
    let name = format!("i{inst}");
    let p = doc
        .instance(&name)
        .and_then(|i| lib.get(&i.block_id))
        .and_then(|b| {
            let ports = b.ports();
            ports.get(usize::from(port) % ports.len().max(1)).map(|p| p.name.clone())
        })
        .unwrap_or_else(|| format!("P{port}"));
    PortRef::new(&name, &p)
}

/// Applies `op`, returning whether it succeeded.
fn apply(lib: &Library, doc: &mut CompositionDocument, op: &Op) -> bool {
    let ids: Vec<String> = lib.iter().map(|b| b.block_id().to_owned()).collect();
    let rail = |r: u8| ["3V3", "5V", "GND", "1V8"][usize::from(r)].to_owned();
    match op {
        Op::AddInstance(i, b) => {
            let id = &ids[usize::from(*b) % ids.len()];
            doc.add_instance(lib, BlockInstance::new(&format!("i{i}"), id, "1.0")).is_ok()
        }
        Op::RemoveInstance(i) => doc.remove_instance(&format!("i{i}")).is_ok(),
        Op::AddRail(r, ground) => {
            let rail = if *ground {
                PowerRail::ground(&rail(*r))
            } else {
                PowerRail::power(&rail(*r), VoltageRange::point([3.3, 5.0, 0.0, 1.8][usize::from(*r)]))
            };
            doc.add_rail(rail).is_ok()
        }
        Op::RemoveRail(r) => doc.remove_rail(&rail(*r)).is_ok(),
        Op::SetParent(r, p) => doc.set_rail_parent(&rail(*r), p.map(rail).as_deref()).is_ok(),
        Op::Attach(i, p, r) => {
            let port = port_of(lib, doc, *i, *p);
            doc.attach_power(lib, port, &rail(*r)).is_ok()
        }
        Op::Detach(i, p) => {
            let port = port_of(lib, doc, *i, *p);
            doc.detach(&port).is_ok()
        }
        Op::Connect(a, p, b, q, named) => {
            let (x, y) = (port_of(lib, doc, *a, *p), port_of(lib, doc, *b, *q));
            doc.connect_signal(lib, x, y, named.then(|| "BUS".to_owned())).is_ok()
        }
        Op::Disconnect(e) => doc.disconnect(&format!("e{e}")).is_ok(),
        Op::Select(i, v) => {
            let variant = v.map(|v| ["a0_gnd", "a0_vdd", "bogus"][usize::from(v)]);
            doc.select_config(lib, &format!("i{i}"), "addr", variant).is_ok()
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Failed edits leave the document untouched, and every reachable
    /// document resolves, round-trips and propagates monotonically.
    #[test]
    fn edits_are_transactional(ops in proptest::collection::vec(op(), 0..40)) {
        let lib = blocks::library();
        let mut doc = CompositionDocument::new("edit");
        for op in &ops {
            let before = doc.clone();
            if !apply(&lib, &mut doc, op) {
                prop_assert_eq!(&doc, &before, "{:?}", op);
            }
        }
        let resolved = resolve(&doc, &lib).expect("edits keep the document resolvable");
        prop_assert_eq!(parse_composition(&serialize_composition(&doc)).unwrap(), doc.clone());

        let mut state = PropagationState::initial(&resolved);
        loop {
            let next = state.step(&resolved);
            for (name, r) in &next.rails {
                let prev = &state.rails[name];
                if let (Some(p), Some(n)) = (prev.voltage, r.voltage) {
                    prop_assert!(p.contains(&n));
                }
                prop_assert!(prev.voltage.is_some() || r.voltage.is_none());
                prop_assert!(r.draw_milliamps + 1e-9 >= prev.draw_milliamps);
            }
            if next == state {
                break;
            }
            state = next;
        }
        let p = propagate(&resolved);
        prop_assert!(p.passes <= resolved.doc.rails.len() + resolved.instances.len());
        prop_assert_eq!(p.state, state);
    }
}

#[test]
fn round_trip_random_blocks_and_compositions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let b = gen::block(&mut rng);
        let bytes = serialize_block(&b);
        assert_eq!(parse_block(&bytes).unwrap(), b);
        assert_eq!(serialize_block(&parse_block(&bytes).unwrap()), bytes);
    }
    let lib = gen::library(&mut rng, 5);
    for _ in 0..200 {
        let d = gen::composition(&mut rng, &lib);
        let bytes = serialize_composition(&d);
        assert_eq!(parse_composition(&bytes).unwrap(), d, "{}", String::from_utf8_lossy(&bytes));
    }
}

#[test]
fn bus_groups_match_reachability() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let (lib, doc) = gen::wiring_case(&mut rng);
        let resolved = resolve(&doc, &lib).unwrap();
        let ours: BTreeSet<BTreeSet<PortRef>> =
            group_buses(&resolved).into_iter().map(|g| g.members).collect();
        assert_eq!(ours, oracle::bus_groups(&resolved));
    }
}

#[test]
fn net_classes_match_bfs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let (lib, doc) = gen::wiring_case(&mut rng);
        let resolved = resolve(&doc, &lib).unwrap();
        let classes = net_classes(&resolved);
        let bfs = oracle::pin_components(&resolved);
        let mut class_of_pin = BTreeMap::new();
        for (iname, inst) in &resolved.instances {
            for c in inst.block.components() {
                for (pin, net) in &c.pins {
                    if net != "NC" {
                        let ci = classes.class_index(&NetNode::internal(iname, net)).unwrap();
                        class_of_pin.insert((format!("{iname}.{}", c.refdes), pin.clone()), ci);
                    }
                }
            }
        }
        let pins: Vec<_> = bfs.keys().collect();
        for (i, p) in pins.iter().enumerate() {
            for q in &pins[i + 1..] {
                assert_eq!(bfs[*p] == bfs[*q], class_of_pin[*p] == class_of_pin[*q]);
            }
        }
    }
}

#[test]
fn e005_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let (lib, doc) = gen::i2c_case(&mut rng);
        let resolved = resolve(&doc, &lib).unwrap();
        let ours = check(&resolved).iter().any(|d| d.code == "E005");
        assert_eq!(ours, oracle::i2c_conflict(&resolved, &PortRef::new("mcu", "SDA")));
    }
}

#[test]
fn merge_is_order_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let (lib, doc) = gen::wiring_case(&mut rng);
        let base = merge(&resolve(&doc, &lib).unwrap(), &[]).unwrap();
        let shuffled = gen::shuffled(&mut rng, &doc);
        let again = merge(&resolve(&shuffled, &lib).unwrap(), &[]).unwrap();
        assert_eq!(base, again);
    }
}
