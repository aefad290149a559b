//! Hand-written reference blocks. The shipped `demo/` and `fixtures/`
//! packages are serializations of these.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{
    BlockParts, BusLine, ComponentInstance, ComponentToggle, ConfigOption, CurrentSpec, Direction,
    I2cRole, InterfaceType, LogicLevel, Port, PortOverride, PowerSpec, SchematicBlock,
    SignalSpec, SpiRole, UartRole, Variant, VoltageRange,
};

/// Small builder: nets are collected from pins and ports.
pub struct Builder {
    parts: BlockParts,
}

impl Builder {
    pub fn new(block_id: &str, version: &str) -> Self {
        Self {
            parts: BlockParts {
                block_id: block_id.into(),
                version: version.into(),
                ..Default::default()
            },
        }
    }

    pub fn component(mut self, refdes: &str, value: &str, footprint: &str, pins: &[(&str, &str)]) -> Self {
        self.parts.components.push(ComponentInstance {
            refdes: refdes.into(),
            part_value: value.into(),
            footprint: footprint.into(),
            pins: pins.iter().map(|(p, n)| (p.to_string(), n.to_string())).collect(),
        });
        self
    }

    pub fn port(mut self, name: &str, net: &str, required: bool, iface: InterfaceType) -> Self {
        self.parts.ports.push(Port {
            name: name.into(),
            iface,
            bound_net: net.into(),
            required,
        });
        self
    }

    pub fn option(mut self, option: ConfigOption) -> Self {
        self.parts.configs.push(option);
        self
    }

    pub fn build(mut self) -> SchematicBlock {
        let mut nets: BTreeSet<String> = self
            .parts
            .components
            .iter()
            .flat_map(|c| c.pins.values().cloned())
            .filter(|n| n != crate::model::NO_CONNECT)
            .collect();
        nets.extend(self.parts.ports.iter().map(|p| p.bound_net.clone()));
        self.parts.nets = nets.into_iter().collect();
        SchematicBlock::new(self.parts).expect("reference block is valid")
    }
}

pub fn range(min: f64, max: f64) -> VoltageRange {
    VoltageRange::new(min, max).expect("valid range")
}

pub fn draws(min: f64, max: f64, milliamps: f64) -> InterfaceType {
    InterfaceType::Power(PowerSpec {
        range: range(min, max),
        current: CurrentSpec::draws(milliamps),
    })
}

pub fn supplies(min: f64, max: f64, milliamps: f64) -> InterfaceType {
    InterfaceType::Power(PowerSpec {
        range: range(min, max),
        current: CurrentSpec::supplies(milliamps),
    })
}

fn bus(label: &str) -> SignalSpec {
    SignalSpec {
        bus: Some(label.into()),
        ..Default::default()
    }
}

pub fn i2c(role: I2cRole, line: BusLine, addresses: &[u8], label: &str) -> InterfaceType {
    InterfaceType::I2c {
        role,
        line: Some(line),
        addresses: addresses.iter().copied().collect(),
        signal: bus(label),
    }
}

pub fn uart(role: UartRole, line: BusLine, label: &str) -> InterfaceType {
    InterfaceType::Uart {
        role,
        line: Some(line),
        signal: bus(label),
    }
}

pub fn spi(role: SpiRole, line: BusLine, label: &str) -> InterfaceType {
    InterfaceType::Spi {
        role,
        line: Some(line),
        signal: bus(label),
    }
}

pub fn gpio(direction: Direction, signal: SignalSpec) -> InterfaceType {
    InterfaceType::Gpio { direction, signal }
}

/// Variant overriding the addresses of both I2C lines.
pub fn address_variant(name: &str, default: bool, addresses: &[u8], disable: &[&str]) -> Variant {
    let addresses: BTreeSet<u8> = addresses.iter().copied().collect();
    Variant {
        name: name.into(),
        is_default: default,
        overrides: ["SCL", "SDA"]
            .iter()
            .map(|p| PortOverride::Addresses {
                port: (*p).into(),
                addresses: addresses.clone(),
            })
            .collect(),
        toggles: disable
            .iter()
            .map(|c| ComponentToggle {
                component: (*c).into(),
                enabled: false,
            })
            .collect(),
    }
}

/// 3.3 V microcontroller with an I2C controller, a GPIO and a UART.
pub fn mcu33() -> SchematicBlock {
    Builder::new("mcu33", "1.0")
        .component(
            "U1",
            "STM32L031K6",
            "LQFP-32",
            &[
                ("1", "VDD"),
                ("16", "GND"),
                ("6", "GPIO0"),
                ("19", "TX"),
                ("20", "RX"),
                ("29", "SCL"),
                ("30", "SDA"),
                ("31", "NC"),
            ],
        )
        .component("C1", "100nF", "C_0402", &[("1", "VDD"), ("2", "GND")])
        .port("VDD", "VDD", true, draws(3.0, 3.6, 20.0))
        .port("GND", "GND", true, InterfaceType::Ground)
        .port("SDA", "SDA", false, i2c(I2cRole::Controller, BusLine::Sda, &[], "I2C0"))
        .port("SCL", "SCL", false, i2c(I2cRole::Controller, BusLine::Scl, &[], "I2C0"))
        .port("GPIO0", "GPIO0", false, gpio(Direction::Bidirectional, SignalSpec::default()))
        .port("TX", "TX", false, uart(UartRole::Dte, BusLine::Tx, "UART0"))
        .port("RX", "RX", false, uart(UartRole::Dte, BusLine::Rx, "UART0"))
        .build()
}

/// TMP102-style sensor; the ADD0 strap selects 0x48 or 0x49.
pub fn temp_sensor() -> SchematicBlock {
    Builder::new("temp_sensor", "1.0")
        .component(
            "U1",
            "TMP102",
            "SOT-563",
            &[("1", "SCL"), ("2", "GND"), ("3", "NC"), ("4", "ADD0"), ("5", "VDD"), ("6", "SDA")],
        )
        .component("R1", "0R", "R_0402", &[("1", "ADD0"), ("2", "GND")])
        .component("R2", "0R", "R_0402", &[("1", "ADD0"), ("2", "VDD")])
        .component("C1", "100nF", "C_0402", &[("1", "VDD"), ("2", "GND")])
        .port("VDD", "VDD", true, draws(1.4, 3.6, 1.0))
        .port("GND", "GND", true, InterfaceType::Ground)
        .port("SDA", "SDA", false, i2c(I2cRole::Peripheral, BusLine::Sda, &[0x48], "I2C"))
        .port("SCL", "SCL", false, i2c(I2cRole::Peripheral, BusLine::Scl, &[0x48], "I2C"))
        .option(ConfigOption {
            name: "addr".into(),
            variants: vec![
                address_variant("a0_gnd", true, &[0x48], &["R2"]),
                address_variant("a0_vdd", false, &[0x49], &["R1"]),
            ],
        })
        .build()
}

/// Sensor hard-wired to 0x48.
pub fn fixed_addr_sensor() -> SchematicBlock {
    Builder::new("fixed_addr_sensor", "1.0")
        .component(
            "U1",
            "LM75B",
            "SOIC-8",
            &[
                ("1", "SDA"),
                ("2", "SCL"),
                ("3", "NC"),
                ("4", "GND"),
                ("5", "GND"),
                ("6", "GND"),
                ("7", "GND"),
                ("8", "VDD"),
            ],
        )
        .port("VDD", "VDD", true, draws(2.8, 5.5, 1.0))
        .port("GND", "GND", true, InterfaceType::Ground)
        .port("SDA", "SDA", false, i2c(I2cRole::Peripheral, BusLine::Sda, &[0x48], "I2C"))
        .port("SCL", "SCL", false, i2c(I2cRole::Peripheral, BusLine::Scl, &[0x48], "I2C"))
        .build()
}

pub fn i2c_pullups() -> SchematicBlock {
    Builder::new("i2c_pullups", "1.0")
        .component("R1", "4.7k", "R_0402", &[("1", "VDD"), ("2", "SDA")])
        .component("R2", "4.7k", "R_0402", &[("1", "VDD"), ("2", "SCL")])
        .port("VDD", "VDD", true, draws(1.8, 5.5, 1.5))
        .port("SDA", "SDA", false, i2c(I2cRole::PullupProvider, BusLine::Sda, &[], "I2C"))
        .port("SCL", "SCL", false, i2c(I2cRole::PullupProvider, BusLine::Scl, &[], "I2C"))
        .build()
}

/// 5 V to 3.3 V linear regulator.
pub fn ldo_3v3() -> SchematicBlock {
    Builder::new("ldo_3v3", "1.0")
        .component(
            "U1",
            "AP2112K-3.3",
            "SOT-23-5",
            &[("1", "VIN"), ("2", "GND"), ("3", "VIN"), ("4", "NC"), ("5", "VOUT")],
        )
        .component("C1", "1uF", "C_0603", &[("1", "VIN"), ("2", "GND")])
        .component("C2", "1uF", "C_0603", &[("1", "VOUT"), ("2", "GND")])
        .port("VIN", "VIN", true, draws(4.5, 6.0, 50.0))
        .port("VOUT", "VOUT", true, supplies(3.3, 3.3, 300.0))
        .port("GND", "GND", true, InterfaceType::Ground)
        .build()
}

pub fn gps_module() -> SchematicBlock {
    Builder::new("gps_module", "1.0")
        .component(
            "U1",
            "NEO-6M",
            "u-blox-NEO",
            &[("10", "GND"), ("20", "TXD"), ("21", "RXD"), ("23", "VCC")],
        )
        .component("C1", "10uF", "C_0805", &[("1", "VCC"), ("2", "GND")])
        .port("VCC", "VCC", true, draws(2.7, 3.6, 45.0))
        .port("GND", "GND", true, InterfaceType::Ground)
        .port("TX", "TXD", true, uart(UartRole::Dce, BusLine::Tx, "UART"))
        .port("RX", "RXD", true, uart(UartRole::Dce, BusLine::Rx, "UART"))
        .build()
}

/// Module with an optional wide-range input.
pub fn wide_input() -> SchematicBlock {
    Builder::new("wide_input", "1.0")
        .component("U1", "MP1584", "SOIC-8-EP", &[("1", "VIN"), ("2", "GND")])
        .port("VIN", "VIN", false, draws(2.5, 5.5, 10.0))
        .port("GND", "GND", false, InterfaceType::Ground)
        .build()
}

/// 5 V buffer with declared TTL-compatible output levels.
pub fn gpio_out5() -> SchematicBlock {
    Builder::new("gpio_out5", "1.0")
        .component("U1", "74HCT1G125", "SOT-353", &[("3", "GND"), ("4", "OUT"), ("5", "VDD")])
        .port("VDD", "VDD", true, draws(4.5, 5.5, 1.0))
        .port("GND", "GND", true, InterfaceType::Ground)
        .port(
            "OUT",
            "OUT",
            true,
            gpio(
                Direction::Output,
                SignalSpec {
                    level: Some(LogicLevel::new(0.8, 2.0, 0.4, 4.4).expect("valid level")),
                    ..Default::default()
                },
            ),
        )
        .build()
}

/// 3.3 V input that is not 5 V tolerant.
pub fn gpio_in33() -> SchematicBlock {
    Builder::new("gpio_in33", "1.0")
        .component("U1", "74LVC1G17", "SOT-353", &[("2", "IN"), ("3", "GND"), ("5", "VDD")])
        .port("VDD", "VDD", true, draws(3.0, 3.6, 1.0))
        .port("GND", "GND", true, InterfaceType::Ground)
        .port(
            "IN",
            "IN",
            true,
            gpio(
                Direction::Input,
                SignalSpec {
                    level: Some(LogicLevel::new(0.8, 2.0, 0.4, 2.4).expect("valid level")),
                    range: Some(range(-0.3, 3.6)),
                    bus: None,
                },
            ),
        )
        .build()
}

/// SPI flash used to provoke protocol mismatches.
pub fn spi_flash() -> SchematicBlock {
    Builder::new("spi_flash", "1.0")
        .component(
            "U1",
            "W25Q32",
            "SOIC-8",
            &[
                ("1", "CS"),
                ("2", "MISO"),
                ("3", "VDD"),
                ("4", "GND"),
                ("5", "MOSI"),
                ("6", "SCK"),
                ("7", "VDD"),
                ("8", "VDD"),
            ],
        )
        .port("VDD", "VDD", true, draws(2.7, 3.6, 25.0))
        .port("GND", "GND", true, InterfaceType::Ground)
        .port("SCK", "SCK", false, spi(SpiRole::Peripheral, BusLine::Sck, "SPI"))
        .port("MOSI", "MOSI", false, spi(SpiRole::Peripheral, BusLine::Mosi, "SPI"))
        .port("MISO", "MISO", false, spi(SpiRole::Peripheral, BusLine::Miso, "SPI"))
        .port("CS", "CS", false, spi(SpiRole::Peripheral, BusLine::Cs, "SPI"))
        .build()
}

/// Every reference block.
pub fn all() -> Vec<SchematicBlock> {
    vec![
        fixed_addr_sensor(),
        gpio_in33(),
        gpio_out5(),
        gps_module(),
        i2c_pullups(),
        ldo_3v3(),
        mcu33(),
        spi_flash(),
        temp_sensor(),
        wide_input(),
    ]
}

pub fn library() -> crate::library::Library {
    crate::library::Library::from_blocks(all())
}

/// Selections map helper.
pub fn config(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}
