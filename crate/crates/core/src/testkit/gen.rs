//! Random generators for property tests. All take an explicit RNG so
//! failures reproduce from a seed.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::library::Library;
use crate::mats::{
    BlockInstance, CompositionDocument, PortRef, PowerRail, RailAttachment, RailKind, SignalEdge,
};
use crate::model::{
    BlockParts, BusLine, ComponentInstance, ComponentToggle, ConfigOption, CurrentSpec,
    Direction, I2cRole, InterfaceType, LogicLevel, Port, PortOverride, PowerSpec, SchematicBlock,
    SignalSpec, SpiRole, UartRole, Variant, VoltageRange, NO_CONNECT,
};

use super::blocks::{self, Builder};

/// Volts on a 0.1 V grid.
fn volts<R: Rng>(rng: &mut R, lo: i32, hi: i32) -> f64 {
    f64::from(rng.gen_range(lo..=hi)) / 10.0
}

fn vrange<R: Rng>(rng: &mut R) -> VoltageRange {
    let a = volts(rng, -50, 120);
    let b = a + volts(rng, 0, 60);
    VoltageRange::new(a, b).expect("ordered")
}

fn signal<R: Rng>(rng: &mut R) -> SignalSpec {
    SignalSpec {
        level: rng.gen_bool(0.3).then(|| {
            let vol = volts(rng, 0, 5);
            let vil = volts(rng, 5, 10);
            let vih = vil + volts(rng, 1, 10);
            let voh = vol + volts(rng, 1, 40);
            LogicLevel::new(vil, vih, vol, voh).expect("ordered thresholds")
        }),
        range: rng.gen_bool(0.3).then(|| vrange(rng)),
        bus: rng.gen_bool(0.4).then(|| format!("BUS{}", rng.gen_range(0..3))),
    }
}

fn addresses<R: Rng>(rng: &mut R) -> BTreeSet<u8> {
    let n = rng.gen_range(1..=3);
    (0..n).map(|_| rng.gen_range(0..=0x7f)).collect()
}

fn iface<R: Rng>(rng: &mut R) -> InterfaceType {
    let line = |rng: &mut R, options: &[BusLine]| -> Option<BusLine> {
        rng.gen_bool(0.7).then(|| *options.choose(rng).expect("nonempty"))
    };
    match rng.gen_range(0..7) {
        0 => InterfaceType::Power(PowerSpec {
            range: vrange(rng),
            current: if rng.gen() {
                CurrentSpec::draws(f64::from(rng.gen_range(0..5000)) / 10.0)
            } else {
                CurrentSpec::supplies(f64::from(rng.gen_range(0..5000)) / 10.0)
            },
        }),
        1 => InterfaceType::Ground,
        2 => InterfaceType::Gpio {
            direction: *[Direction::Input, Direction::Output, Direction::Bidirectional]
                .choose(rng)
                .unwrap(),
            signal: signal(rng),
        },
        3 => InterfaceType::Analog { signal: signal(rng) },
        4 => {
            let role = *[I2cRole::Controller, I2cRole::Peripheral, I2cRole::PullupProvider]
                .choose(rng)
                .unwrap();
            InterfaceType::I2c {
                role,
                line: line(rng, &[BusLine::Sda, BusLine::Scl]),
                addresses: if role == I2cRole::Peripheral {
                    addresses(rng)
                } else {
                    BTreeSet::new()
                },
                signal: signal(rng),
            }
        }
        5 => InterfaceType::Spi {
            role: *[SpiRole::Controller, SpiRole::Peripheral].choose(rng).unwrap(),
            line: line(rng, &[BusLine::Sck, BusLine::Mosi, BusLine::Miso, BusLine::Cs]),
            signal: signal(rng),
        },
        _ => InterfaceType::Uart {
            role: *[UartRole::Dte, UartRole::Dce].choose(rng).unwrap(),
            line: line(rng, &[BusLine::Tx, BusLine::Rx]),
            signal: signal(rng),
        },
    }
}

/// Arbitrary valid block exercising every field of the package format.
pub fn block<R: Rng>(rng: &mut R) -> SchematicBlock {
    let nets: Vec<String> = (0..rng.gen_range(1..=6)).map(|i| format!("N{i}")).collect();
    let mut used = BTreeSet::new();
    let components: Vec<ComponentInstance> = (0..rng.gen_range(1..=4))
        .map(|i| {
            let pins = (0..rng.gen_range(1..=4))
                .map(|p| {
                    let net = if rng.gen_bool(0.1) {
                        NO_CONNECT.to_owned()
                    } else {
                        nets.choose(rng).unwrap().clone()
                    };
                    used.insert(net.clone());
                    (format!("{}", p + 1), net)
                })
                .collect();
            ComponentInstance {
                refdes: format!("U{}", i + 1),
                part_value: ["10k", "100nF", "ATmega, \"QFN\"", "LM75"].choose(rng).unwrap().to_string(),
                footprint: ["R_0402", "C_0603", "QFN-32"].choose(rng).unwrap().to_string(),
                pins,
            }
        })
        .collect();
    let mut ports: Vec<Port> = (0..rng.gen_range(0..=5))
        .map(|i| {
            let net = nets.choose(rng).unwrap().clone();
            used.insert(net.clone());
            Port {
                name: format!("P{i}"),
                iface: iface(rng),
                bound_net: net,
                required: rng.gen(),
            }
        })
        .collect();
    // unused nets would be rejected; bind them to extra analog ports
    for n in &nets {
        if !used.contains(n) {
            ports.push(Port {
                name: format!("X{n}"),
                iface: InterfaceType::Analog {
                    signal: SignalSpec::default(),
                },
                bound_net: n.clone(),
                required: false,
            });
        }
    }
    let peripherals: Vec<String> = ports
        .iter()
        .filter(|p| matches!(p.iface, InterfaceType::I2c { role: I2cRole::Peripheral, .. }))
        .map(|p| p.name.clone())
        .collect();
    let configs = (0..rng.gen_range(0..=2))
        .map(|o| {
            let n = rng.gen_range(1..=3);
            let default = rng.gen_range(0..n);
            ConfigOption {
                name: format!("opt{o}"),
                variants: (0..n)
                    .map(|v| {
                        let mut overrides = Vec::new();
                        if let Some(p) = peripherals.choose(rng) {
                            if rng.gen() {
                                overrides.push(PortOverride::Addresses {
                                    port: p.clone(),
                                    addresses: addresses(rng),
                                });
                            }
                        }
                        if let Some(p) = ports.choose(rng) {
                            if rng.gen() {
                                overrides.push(PortOverride::Required {
                                    port: p.name.clone(),
                                    required: rng.gen(),
                                });
                            }
                        }
                        let toggles = if rng.gen() {
                            vec![ComponentToggle {
                                component: components.choose(rng).unwrap().refdes.clone(),
                                enabled: rng.gen(),
                            }]
                        } else {
                            vec![]
                        };
                        Variant {
                            name: format!("v{v}"),
                            is_default: v == default,
                            overrides,
                            toggles,
                        }
                    })
                    .collect(),
            }
        })
        .collect();
    SchematicBlock::new(BlockParts {
        block_id: format!("blk{}", rng.gen_range(0..1000)),
        version: format!("{}.{}", rng.gen_range(0..3), rng.gen_range(0..10)),
        components,
        nets,
        ports,
        configs,
    })
    .expect("generated block is valid")
}

/// Arbitrary syntactically valid composition over `lib` (not necessarily
/// electrically sound).
pub fn composition<R: Rng>(rng: &mut R, lib: &Library) -> CompositionDocument {
    let blocks: Vec<_> = lib.iter().cloned().collect();
    let mut doc = CompositionDocument::new(&format!("design {}", rng.gen_range(0..100)));
    for i in 0..rng.gen_range(0..=5) {
        let b = blocks.choose(rng).expect("nonempty library");
        let mut inst = BlockInstance::new(&format!("i{i}"), b.block_id(), b.version());
        for opt in b.configs() {
            if rng.gen() {
                inst.config
                    .insert(opt.name.clone(), opt.variants.choose(rng).unwrap().name.clone());
            }
        }
        doc.instances.push(inst);
    }
    for r in 0..rng.gen_range(0..=4) {
        let mut rail = if rng.gen_bool(0.2) {
            PowerRail::ground(&format!("G{r}"))
        } else {
            PowerRail::power(&format!("R{r}"), vrange(rng))
        };
        if r > 0 && rng.gen() {
            rail.parent = Some(doc.rails[rng.gen_range(0..r)].name.clone());
        }
        if rail.kind == RailKind::Power && rng.gen() {
            rail.supply_milliamps = Some(f64::from(rng.gen_range(0..10_000)) / 10.0);
        }
        doc.rails.push(rail);
    }
    let mut ports: Vec<PortRef> = Vec::new();
    for inst in &doc.instances {
        let b = lib.get(&inst.block_id).unwrap();
        ports.extend(b.ports().iter().map(|p| PortRef::new(&inst.name, &p.name)));
    }
    if !doc.rails.is_empty() {
        for p in &ports {
            if rng.gen_bool(0.3) {
                doc.attachments.push(RailAttachment {
                    port: p.clone(),
                    rail: doc.rails.choose(rng).unwrap().name.clone(),
                });
            }
        }
    }
    if ports.len() >= 2 {
        let mut pairs = BTreeSet::new();
        for _ in 0..rng.gen_range(0..=6) {
            let a = ports.choose(rng).unwrap().clone();
            let b = ports.choose(rng).unwrap().clone();
            if a == b || !pairs.insert(if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) }) {
                continue;
            }
            let id = doc.fresh_edge_id();
            doc.edges.push(SignalEdge {
                id,
                a,
                b,
                net_name: rng.gen_bool(0.3).then(|| format!("NET{}", rng.gen_range(0..4))),
            });
        }
    }
    if rng.gen_bool(0.3) {
        doc.layout_hint = Some(serde_json::json!({"zoom": rng.gen_range(1..4), "nodes": {"i0": [1, 2]}}));
    }
    doc.normalize();
    doc
}

/// Library of `n` random blocks with distinct ids.
pub fn library<R: Rng>(rng: &mut R, n: usize) -> Library {
    let mut lib = Library::default();
    while lib.len() < n {
        lib.insert(block(rng));
    }
    lib
}

/// Block for connectivity tests: power ports own their nets while data
/// ports share a small pool, so edges and attachments never short two
/// rails together.
fn wiring_block<R: Rng>(rng: &mut R, id: &str) -> SchematicBlock {
    let signal_nets: Vec<String> = (0..rng.gen_range(1..=3)).map(|i| format!("S{i}")).collect();
    let mut b = Builder::new(id, "1.0");
    let n_power = rng.gen_range(0..=2);
    let mut nets: Vec<String> = signal_nets.clone();
    for i in 0..n_power {
        let net = format!("PWR{i}");
        b = b.port(&format!("V{i}"), &net, false, blocks::draws(0.0, 12.0, 1.0));
        nets.push(net);
    }
    if rng.gen() {
        b = b.port("GND", "GND", false, InterfaceType::Ground);
        nets.push("GND".into());
    }
    for i in 0..rng.gen_range(1..=4) {
        b = b.port(
            &format!("D{i}"),
            signal_nets.choose(rng).unwrap(),
            false,
            blocks::gpio(Direction::Bidirectional, SignalSpec::default()),
        );
    }
    for c in 0..rng.gen_range(1..=3) {
        let pins: Vec<(String, String)> = (0..rng.gen_range(1..=4))
            .map(|p| {
                let net = if rng.gen_bool(0.1) {
                    NO_CONNECT.to_owned()
                } else {
                    nets.choose(rng).unwrap().clone()
                };
                (format!("{}", p + 1), net)
            })
            .collect();
        let pins: Vec<(&str, &str)> = pins.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        b = b.component(&format!("U{}", c + 1), "X", "FP", &pins);
    }
    b.build()
}

/// Composition for connectivity tests: at most 6 instances and 10 edges.
pub fn wiring_case<R: Rng>(rng: &mut R) -> (Library, CompositionDocument) {
    let lib = Library::from_blocks((0..3).map(|i| wiring_block(rng, &format!("w{i}"))));
    let mut doc = CompositionDocument::new("wiring");
    for i in 0..rng.gen_range(1..=6) {
        let id = format!("w{}", rng.gen_range(0..3));
        doc.add_instance(&lib, BlockInstance::new(&format!("i{i}"), &id, "1.0"))
            .expect("fresh instance");
    }
    for r in 0..rng.gen_range(0..=3) {
        doc.add_rail(PowerRail::power(&format!("R{r}"), VoltageRange::point(3.3)))
            .expect("fresh rail");
    }
    doc.add_rail(PowerRail::ground("GND")).expect("fresh rail");
    let mut data = Vec::new();
    let mut power = Vec::new();
    for inst in &doc.instances {
        for p in lib.get(&inst.block_id).unwrap().ports() {
            let r = PortRef::new(&inst.name, &p.name);
            if p.iface.kind().is_power() {
                power.push((r, p.iface.kind()));
            } else {
                data.push(r);
            }
        }
    }
    let rails: Vec<String> = doc.rails.iter().map(|r| r.name.clone()).collect();
    for (p, kind) in power {
        if rng.gen_bool(0.7) {
            let rail = if kind == crate::model::InterfaceKind::Ground {
                "GND".to_owned()
            } else {
                rails.choose(rng).unwrap().clone()
            };
            doc.attach_power(&lib, p, &rail).expect("valid attachment");
        }
    }
    if data.len() >= 2 {
        for _ in 0..rng.gen_range(0..=10) {
            let a = data.choose(rng).unwrap().clone();
            let b = data.choose(rng).unwrap().clone();
            let name = rng.gen_bool(0.3).then(|| format!("NET{}", rng.gen_range(0..3)));
            // duplicates and self-loops are rejected; skip them
            let _ = doc.connect_signal(&lib, a, b, name);
        }
    }
    (lib, doc)
}

/// Randomized I2C bus: one controller, pull-ups and up to 4 peripherals
/// with up to 3 address variants each, some pinned.
pub fn i2c_case<R: Rng>(rng: &mut R) -> (Library, CompositionDocument) {
    let mut lib = blocks::library();
    let mut doc = CompositionDocument::new("i2c");
    doc.add_rail(PowerRail::power("3V3", VoltageRange::point(3.3))).unwrap();
    doc.add_rail(PowerRail::ground("GND")).unwrap();
    doc.add_instance(&lib, BlockInstance::new("mcu", "mcu33", "1.0")).unwrap();
    doc.add_instance(&lib, BlockInstance::new("pullups", "i2c_pullups", "1.0")).unwrap();
    let pool: Vec<u8> = (0x48..0x4c).collect();
    let mut pinned = BTreeMap::new();
    for k in 0..rng.gen_range(1..=4) {
        let id = format!("periph{k}");
        let n_variants = rng.gen_range(1..=3);
        let default = rng.gen_range(0..n_variants);
        let n = rng.gen_range(1..=2);
        let base: Vec<u8> = pool.choose_multiple(rng, n).copied().collect();
        let mut b = Builder::new(&id, "1.0")
            .component("U1", "SENSOR", "SOT-23", &[("1", "VDD"), ("2", "GND"), ("3", "SDA"), ("4", "SCL")])
            .port("VDD", "VDD", false, blocks::draws(1.8, 3.6, 1.0))
            .port("GND", "GND", false, InterfaceType::Ground)
            .port("SDA", "SDA", false, blocks::i2c(I2cRole::Peripheral, BusLine::Sda, &base, "I2C"))
            .port("SCL", "SCL", false, blocks::i2c(I2cRole::Peripheral, BusLine::Scl, &base, "I2C"));
        if rng.gen_bool(0.8) {
            let variants = (0..n_variants)
                .map(|v| {
                    let n = rng.gen_range(1..=2);
                    let set: Vec<u8> = pool.choose_multiple(rng, n).copied().collect();
                    blocks::address_variant(&format!("v{v}"), v == default, &set, &[])
                })
                .collect();
            b = b.option(ConfigOption {
                name: "addr".into(),
                variants,
            });
            if rng.gen_bool(0.3) {
                pinned.insert(k, format!("v{}", rng.gen_range(0..n_variants)));
            }
        }
        lib.insert(b.build());
        let mut inst = BlockInstance::new(&format!("p{k}"), &id, "1.0");
        if let Some(v) = pinned.get(&k) {
            inst.config.insert("addr".into(), v.clone());
        }
        doc.add_instance(&lib, inst).unwrap();
    }
    let names: Vec<String> = doc.instances.iter().map(|i| i.name.clone()).collect();
    for n in &names {
        for (p, rail) in [("VDD", "3V3"), ("GND", "GND")] {
            let r = PortRef::new(n, p);
            if lib.get(&doc.instance(n).unwrap().block_id).unwrap().port(p).is_some() {
                doc.attach_power(&lib, r, rail).unwrap();
            }
        }
        if n != "mcu" {
            for line in ["SDA", "SCL"] {
                doc.connect_signal(&lib, PortRef::new("mcu", line), PortRef::new(n, line), None)
                    .unwrap();
            }
        }
    }
    (lib, doc)
}

/// Same document with every list shuffled (order must not matter).
pub fn shuffled<R: Rng>(rng: &mut R, doc: &CompositionDocument) -> CompositionDocument {
    let mut d = doc.clone();
    d.instances.shuffle(rng);
    d.rails.shuffle(rng);
    d.attachments.shuffle(rng);
    d.edges.shuffle(rng);
    d
}
