//! Domain vocabulary for typed schematic blocks.
//!
//! A [`SchematicBlock`] is a netlist fragment (components wired to internal
//! nets) plus typed [`Port`]s that describe what the block offers or needs at
//! its boundary. Every collection is kept in canonical order (sorted by its
//! identity key) so that structural equality is plain `==`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Pin target meaning "deliberately unconnected".
pub const NO_CONNECT: &str = "NC";

/// Highest valid 7-bit I2C address.
pub const MAX_I2C_ADDRESS: u8 = 0x7f;

/// Returns true for names usable as nets, ports, refdes, pins, rails and
/// option names. The `.` character is excluded: the merger uses it to
/// qualify names with their instance.
pub fn is_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '+' | '~' | '/' | '#'))
}

/// Names of rails and user-named nets: any [`is_name`] except the reserved
/// [`NO_CONNECT`] marker.
pub fn is_net_name(s: &str) -> bool {
    is_name(s) && s != NO_CONNECT
}

/// Instance names follow `[A-Za-z][A-Za-z0-9_]*`.
pub fn is_instance_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("voltage range [{min}, {max}] is invalid")]
    InvalidVoltageRange { min: f64, max: f64 },
    #[error("current {0} mA is invalid")]
    InvalidCurrent(f64),
    #[error("logic level thresholds are inconsistent")]
    InvalidLogicLevel,
    #[error("I2C address {0} is outside 0..=127")]
    InvalidAddress(u32),
    #[error("I2C peripheral needs at least one address")]
    MissingAddress,
    #[error("only I2C peripherals carry addresses")]
    UnexpectedAddress,
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("duplicate {what} `{name}`")]
    Duplicate { what: &'static str, name: String },
    #[error("{what} `{name}` references unknown net `{net}`")]
    DanglingNet {
        what: &'static str,
        name: String,
        net: String,
    },
    #[error("net `{0}` is not referenced by any pin or port")]
    UnusedNet(String),
    #[error("net name `{0}` is reserved")]
    ReservedNet(String),
    #[error("option `{option}`: {reason}")]
    InvalidConfig { option: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("block `{block}` has no configuration option `{option}`")]
    UnknownOption { block: String, option: String },
    #[error("option `{option}` of block `{block}` has no variant `{variant}`")]
    UnknownVariant {
        block: String,
        option: String,
        variant: String,
    },
}

/// Closed interval of volts. Negative values are allowed for bipolar rails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoltageRange {
    min_volts: f64,
    max_volts: f64,
}

impl VoltageRange {
    pub fn new(min_volts: f64, max_volts: f64) -> Result<Self, ModelError> {
        if min_volts.is_finite() && max_volts.is_finite() && min_volts <= max_volts {
            Ok(Self {
                min_volts,
                max_volts,
            })
        } else {
            Err(ModelError::InvalidVoltageRange {
                min: min_volts,
                max: max_volts,
            })
        }
    }

    pub fn point(volts: f64) -> Self {
        Self::new(volts, volts).expect("finite point voltage")
    }

    pub fn min(&self) -> f64 {
        self.min_volts
    }

    pub fn max(&self) -> f64 {
        self.max_volts
    }

    /// Intersection of two ranges, `None` when disjoint.
    pub fn intersect(&self, other: &VoltageRange) -> Option<VoltageRange> {
        voltage_ranges_intersect(self, other)
    }

    pub fn contains(&self, inner: &VoltageRange) -> bool {
        self.min_volts <= inner.min_volts && inner.max_volts <= self.max_volts
    }
}

impl fmt::Display for VoltageRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.min_volts == self.max_volts {
            write!(f, "{} V", self.min_volts)
        } else {
            write!(f, "[{}, {}] V", self.min_volts, self.max_volts)
        }
    }
}

/// Compatibility of two voltage envelopes is a non-empty intersection.
pub fn voltage_ranges_intersect(a: &VoltageRange, b: &VoltageRange) -> Option<VoltageRange> {
    let min = a.min_volts.max(b.min_volts);
    let max = a.max_volts.min(b.max_volts);
    (min <= max).then_some(VoltageRange {
        min_volts: min,
        max_volts: max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurrentKind {
    Supplies,
    Draws,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentSpec {
    pub kind: CurrentKind,
    max_milliamps: f64,
}

impl CurrentSpec {
    pub fn new(kind: CurrentKind, max_milliamps: f64) -> Result<Self, ModelError> {
        if max_milliamps.is_finite() && max_milliamps >= 0.0 {
            Ok(Self {
                kind,
                max_milliamps,
            })
        } else {
            Err(ModelError::InvalidCurrent(max_milliamps))
        }
    }

    pub fn draws(max_milliamps: f64) -> Self {
        Self::new(CurrentKind::Draws, max_milliamps).expect("valid current")
    }

    pub fn supplies(max_milliamps: f64) -> Self {
        Self::new(CurrentKind::Supplies, max_milliamps).expect("valid current")
    }

    pub fn max_milliamps(&self) -> f64 {
        self.max_milliamps
    }
}

/// Input and output thresholds of a digital pin, in volts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogicLevel {
    pub vil_max: f64,
    pub vih_min: f64,
    pub vol_max: f64,
    pub voh_min: f64,
}

impl LogicLevel {
    pub fn new(vil_max: f64, vih_min: f64, vol_max: f64, voh_min: f64) -> Result<Self, ModelError> {
        let finite = [vil_max, vih_min, vol_max, voh_min]
            .iter()
            .all(|v| v.is_finite());
        if finite && vol_max < voh_min && vil_max < vih_min {
            Ok(Self {
                vil_max,
                vih_min,
                vol_max,
                voh_min,
            })
        } else {
            Err(ModelError::InvalidLogicLevel)
        }
    }

    /// CMOS rule of thumb used when a block declares no thresholds.
    /// The result is not validated: a very low supply yields inverted levels,
    /// which the checker then reports as incompatible.
    pub fn derived_from_supply(supply: &VoltageRange) -> Self {
        Self {
            vih_min: 0.7 * supply.min(),
            vil_max: 0.3 * supply.max(),
            voh_min: supply.min() - 0.4,
            vol_max: 0.4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceKind {
    Power,
    Ground,
    Gpio,
    Analog,
    I2c,
    Spi,
    Uart,
}

impl InterfaceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            InterfaceKind::Power => "power",
            InterfaceKind::Ground => "ground",
            InterfaceKind::Gpio => "gpio",
            InterfaceKind::Analog => "analog",
            InterfaceKind::I2c => "i2c",
            InterfaceKind::Spi => "spi",
            InterfaceKind::Uart => "uart",
        }
    }

    pub fn is_power(&self) -> bool {
        matches!(self, InterfaceKind::Power | InterfaceKind::Ground)
    }
}

impl fmt::Display for InterfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Input,
    Output,
    Bidirectional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum I2cRole {
    Controller,
    Peripheral,
    PullupProvider,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpiRole {
    Controller,
    Peripheral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UartRole {
    Dte,
    Dce,
}

/// Individual wire of a bus bundle. Ports without a line stand for the
/// whole bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BusLine {
    Sda,
    Scl,
    Sck,
    Mosi,
    Miso,
    Cs,
    /// Transmit from this block's point of view.
    Tx,
    Rx,
}

impl BusLine {
    pub fn as_str(&self) -> &'static str {
        match self {
            BusLine::Sda => "sda",
            BusLine::Scl => "scl",
            BusLine::Sck => "sck",
            BusLine::Mosi => "mosi",
            BusLine::Miso => "miso",
            BusLine::Cs => "cs",
            BusLine::Tx => "tx",
            BusLine::Rx => "rx",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "sda" => BusLine::Sda,
            "scl" => BusLine::Scl,
            "sck" => BusLine::Sck,
            "mosi" => BusLine::Mosi,
            "miso" => BusLine::Miso,
            "cs" => BusLine::Cs,
            "tx" => BusLine::Tx,
            "rx" => BusLine::Rx,
            _ => return None,
        })
    }

    pub fn valid_for(&self, kind: InterfaceKind) -> bool {
        match kind {
            InterfaceKind::I2c => matches!(self, BusLine::Sda | BusLine::Scl),
            InterfaceKind::Spi => {
                matches!(self, BusLine::Sck | BusLine::Mosi | BusLine::Miso | BusLine::Cs)
            }
            InterfaceKind::Uart => matches!(self, BusLine::Tx | BusLine::Rx),
            _ => false,
        }
    }
}

/// Electrical attributes shared by every data-carrying port.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignalSpec {
    /// Declared thresholds; derived from the operating voltage when absent.
    pub level: Option<LogicLevel>,
    /// Absolute voltage the pin tolerates.
    pub range: Option<VoltageRange>,
    /// Bundle label tying the lines of one bus together, e.g. `I2C0`.
    pub bus: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpec {
    /// Accepted (draws) or produced (supplies) voltage envelope.
    pub range: VoltageRange,
    pub current: CurrentSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InterfaceType {
    Power(PowerSpec),
    Ground,
    Gpio {
        direction: Direction,
        signal: SignalSpec,
    },
    Analog {
        signal: SignalSpec,
    },
    I2c {
        role: I2cRole,
        line: Option<BusLine>,
        addresses: BTreeSet<u8>,
        signal: SignalSpec,
    },
    Spi {
        role: SpiRole,
        line: Option<BusLine>,
        signal: SignalSpec,
    },
    Uart {
        role: UartRole,
        line: Option<BusLine>,
        signal: SignalSpec,
    },
}

impl InterfaceType {
    pub fn kind(&self) -> InterfaceKind {
        match self {
            InterfaceType::Power(_) => InterfaceKind::Power,
            InterfaceType::Ground => InterfaceKind::Ground,
            InterfaceType::Gpio { .. } => InterfaceKind::Gpio,
            InterfaceType::Analog { .. } => InterfaceKind::Analog,
            InterfaceType::I2c { .. } => InterfaceKind::I2c,
            InterfaceType::Spi { .. } => InterfaceKind::Spi,
            InterfaceType::Uart { .. } => InterfaceKind::Uart,
        }
    }

    pub fn signal(&self) -> Option<&SignalSpec> {
        match self {
            InterfaceType::Power(_) | InterfaceType::Ground => None,
            InterfaceType::Gpio { signal, .. }
            | InterfaceType::Analog { signal }
            | InterfaceType::I2c { signal, .. }
            | InterfaceType::Spi { signal, .. }
            | InterfaceType::Uart { signal, .. } => Some(signal),
        }
    }

    pub fn line(&self) -> Option<BusLine> {
        match self {
            InterfaceType::I2c { line, .. }
            | InterfaceType::Spi { line, .. }
            | InterfaceType::Uart { line, .. } => *line,
            _ => None,
        }
    }

    /// Range a power or ground port accepts. Ground ports accept exactly 0 V.
    pub fn accepted_range(&self) -> Option<VoltageRange> {
        match self {
            InterfaceType::Power(p) => Some(p.range),
            InterfaceType::Ground => Some(VoltageRange::point(0.0)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            InterfaceType::I2c {
                role, addresses, ..
            } => {
                if let Some(&a) = addresses.iter().find(|&&a| a > MAX_I2C_ADDRESS) {
                    return Err(ModelError::InvalidAddress(a.into()));
                }
                match role {
                    I2cRole::Peripheral if addresses.is_empty() => Err(ModelError::MissingAddress),
                    I2cRole::Controller | I2cRole::PullupProvider if !addresses.is_empty() => {
                        Err(ModelError::UnexpectedAddress)
                    }
                    _ => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Port {
    pub name: String,
    pub iface: InterfaceType,
    pub bound_net: String,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentInstance {
    pub refdes: String,
    pub part_value: String,
    pub footprint: String,
    /// Pin name to internal net name (or [`NO_CONNECT`]).
    pub pins: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PortOverride {
    Addresses { port: String, addresses: BTreeSet<u8> },
    Required { port: String, required: bool },
}

impl PortOverride {
    pub fn port(&self) -> &str {
        match self {
            PortOverride::Addresses { port, .. } | PortOverride::Required { port, .. } => port,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ComponentToggle {
    pub component: String,
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub name: String,
    pub is_default: bool,
    pub overrides: Vec<PortOverride>,
    pub toggles: Vec<ComponentToggle>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigOption {
    pub name: String,
    pub variants: Vec<Variant>,
}

impl ConfigOption {
    pub fn default_variant(&self) -> &Variant {
        self.variants
            .iter()
            .find(|v| v.is_default)
            .expect("validated option has a default variant")
    }

    pub fn variant(&self, name: &str) -> Option<&Variant> {
        self.variants.iter().find(|v| v.name == name)
    }
}

/// Unvalidated parts of a block; see [`SchematicBlock::new`].
#[derive(Debug, Clone, Default)]
pub struct BlockParts {
    pub block_id: String,
    pub version: String,
    pub components: Vec<ComponentInstance>,
    pub nets: Vec<String>,
    pub ports: Vec<Port>,
    pub configs: Vec<ConfigOption>,
}

/// A reusable, annotated netlist fragment.
#[derive(Debug, Clone, PartialEq)]
pub struct SchematicBlock {
    block_id: String,
    version: String,
    components: Vec<ComponentInstance>,
    nets: BTreeSet<String>,
    ports: Vec<Port>,
    configs: Vec<ConfigOption>,
}

fn check_unique<'a>(
    what: &'static str,
    names: impl Iterator<Item = &'a str>,
) -> Result<(), ModelError> {
    let mut seen = BTreeSet::new();
    for name in names {
        if !is_name(name) {
            return Err(ModelError::InvalidName(name.to_owned()));
        }
        if !seen.insert(name) {
            return Err(ModelError::Duplicate {
                what,
                name: name.to_owned(),
            });
        }
    }
    Ok(())
}

impl SchematicBlock {
    /// Validates every block invariant and canonicalizes ordering.
    pub fn new(parts: BlockParts) -> Result<Self, ModelError> {
        let BlockParts {
            block_id,
            version,
            mut components,
            nets,
            mut ports,
            mut configs,
        } = parts;

        if !is_name(&block_id) {
            return Err(ModelError::InvalidName(block_id));
        }
        check_unique("net", nets.iter().map(String::as_str))?;
        if nets.iter().any(|n| n == NO_CONNECT) {
            return Err(ModelError::ReservedNet(NO_CONNECT.to_owned()));
        }
        let nets: BTreeSet<String> = nets.into_iter().collect();
        check_unique("component", components.iter().map(|c| c.refdes.as_str()))?;
        check_unique("port", ports.iter().map(|p| p.name.as_str()))?;
        check_unique("option", configs.iter().map(|c| c.name.as_str()))?;

        let mut used = BTreeSet::new();
        for c in &components {
            for (pin, net) in &c.pins {
                if !is_name(pin) {
                    return Err(ModelError::InvalidName(pin.clone()));
                }
                if net == NO_CONNECT {
                    continue;
                }
                if !nets.contains(net) {
                    return Err(ModelError::DanglingNet {
                        what: "component",
                        name: c.refdes.clone(),
                        net: net.clone(),
                    });
                }
                used.insert(net.as_str());
            }
        }
        for p in &ports {
            p.iface.validate()?;
            if !nets.contains(&p.bound_net) {
                return Err(ModelError::DanglingNet {
                    what: "port",
                    name: p.name.clone(),
                    net: p.bound_net.clone(),
                });
            }
            used.insert(p.bound_net.as_str());
        }
        if let Some(unused) = nets.iter().find(|n| !used.contains(n.as_str())) {
            return Err(ModelError::UnusedNet(unused.clone()));
        }

        for option in &mut configs {
            let bad = |reason: String| ModelError::InvalidConfig {
                option: option.name.clone(),
                reason,
            };
            if option.variants.is_empty() {
                return Err(bad("no variants".into()));
            }
            check_unique("variant", option.variants.iter().map(|v| v.name.as_str()))?;
            let defaults = option.variants.iter().filter(|v| v.is_default).count();
            if defaults != 1 {
                return Err(bad(format!("{defaults} default variants, expected exactly 1")));
            }
            for v in &mut option.variants {
                for o in &v.overrides {
                    let Some(port) = ports.iter().find(|p| p.name == o.port()) else {
                        return Err(bad(format!("override of unknown port `{}`", o.port())));
                    };
                    if let PortOverride::Addresses { addresses, .. } = o {
                        let InterfaceType::I2c {
                            role: I2cRole::Peripheral,
                            ..
                        } = port.iface
                        else {
                            return Err(bad(format!(
                                "port `{}` is not an I2C peripheral",
                                port.name
                            )));
                        };
                        if addresses.is_empty() {
                            return Err(ModelError::MissingAddress);
                        }
                        if let Some(&a) = addresses.iter().find(|&&a| a > MAX_I2C_ADDRESS) {
                            return Err(ModelError::InvalidAddress(a.into()));
                        }
                    }
                }
                for t in &v.toggles {
                    if !components.iter().any(|c| c.refdes == t.component) {
                        return Err(bad(format!("toggle of unknown component `{}`", t.component)));
                    }
                }
                v.overrides.sort_by(|a, b| {
                    (a.port(), override_rank(a)).cmp(&(b.port(), override_rank(b)))
                });
                v.toggles.sort();
            }
            option.variants.sort_by(|a, b| a.name.cmp(&b.name));
        }

        components.sort_by(|a, b| a.refdes.cmp(&b.refdes));
        ports.sort_by(|a, b| a.name.cmp(&b.name));
        configs.sort_by(|a, b| a.name.cmp(&b.name));

        Ok(Self {
            block_id,
            version,
            components,
            nets,
            ports,
            configs,
        })
    }

    pub fn block_id(&self) -> &str {
        &self.block_id
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn components(&self) -> &[ComponentInstance] {
        &self.components
    }

    pub fn nets(&self) -> &BTreeSet<String> {
        &self.nets
    }

    pub fn ports(&self) -> &[Port] {
        &self.ports
    }

    pub fn configs(&self) -> &[ConfigOption] {
        &self.configs
    }

    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn config(&self, name: &str) -> Option<&ConfigOption> {
        self.configs.iter().find(|c| c.name == name)
    }

    pub fn into_parts(self) -> BlockParts {
        BlockParts {
            block_id: self.block_id,
            version: self.version,
            components: self.components,
            nets: self.nets.into_iter().collect(),
            ports: self.ports,
            configs: self.configs,
        }
    }

    /// Resolves configuration options into a plain block.
    ///
    /// Options missing from `selections` take their default variant. The
    /// result carries no options: overrides are applied, disabled components
    /// are removed, and nets left without any pin or port are deleted.
    pub fn apply_config(
        &self,
        selections: &BTreeMap<String, String>,
    ) -> Result<SchematicBlock, ConfigError> {
        for (option, variant) in selections {
            let Some(opt) = self.config(option) else {
                return Err(ConfigError::UnknownOption {
                    block: self.block_id.clone(),
                    option: option.clone(),
                });
            };
            if opt.variant(variant).is_none() {
                return Err(ConfigError::UnknownVariant {
                    block: self.block_id.clone(),
                    option: option.clone(),
                    variant: variant.clone(),
                });
            }
        }

        let mut ports = self.ports.clone();
        let mut disabled = BTreeSet::new();
        for opt in &self.configs {
            let variant = match selections.get(&opt.name) {
                Some(name) => opt.variant(name).expect("checked above"),
                None => opt.default_variant(),
            };
            for o in &variant.overrides {
                let port = ports
                    .iter_mut()
                    .find(|p| p.name == o.port())
                    .expect("validated override");
                match o {
                    PortOverride::Addresses { addresses, .. } => {
                        if let InterfaceType::I2c { addresses: a, .. } = &mut port.iface {
                            *a = addresses.clone();
                        }
                    }
                    PortOverride::Required { required, .. } => port.required = *required,
                }
            }
            for t in &variant.toggles {
                if t.enabled {
                    disabled.remove(&t.component);
                } else {
                    disabled.insert(t.component.clone());
                }
            }
        }

        let components: Vec<ComponentInstance> = self
            .components
            .iter()
            .filter(|c| !disabled.contains(&c.refdes))
            .cloned()
            .collect();
        let mut used: BTreeSet<&str> = ports.iter().map(|p| p.bound_net.as_str()).collect();
        used.extend(components.iter().flat_map(|c| c.pins.values().map(String::as_str)));
        let nets = self
            .nets
            .iter()
            .filter(|n| used.contains(n.as_str()))
            .cloned()
            .collect();

        Ok(SchematicBlock {
            block_id: self.block_id.clone(),
            version: self.version.clone(),
            components,
            nets,
            ports,
            configs: Vec::new(),
        })
    }
}

fn override_rank(o: &PortOverride) -> u8 {
    match o {
        PortOverride::Addresses { .. } => 0,
        PortOverride::Required { .. } => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vr(a: f64, b: f64) -> VoltageRange {
        VoltageRange::new(a, b).unwrap()
    }

    fn sensor() -> SchematicBlock {
        let i2c = |line, addr: u8| InterfaceType::I2c {
            role: I2cRole::Peripheral,
            line: Some(line),
            addresses: [addr].into(),
            signal: SignalSpec::default(),
        };
        let pins = |pairs: &[(&str, &str)]| {
            pairs
                .iter()
                .map(|(p, n)| (p.to_string(), n.to_string()))
                .collect()
        };
        SchematicBlock::new(BlockParts {
            block_id: "sensor".into(),
            version: "1".into(),
            components: vec![
                ComponentInstance {
                    refdes: "U1".into(),
                    part_value: "TMP102".into(),
                    footprint: "SOT-563".into(),
                    pins: pins(&[("V+", "VDD"), ("GND", "GND"), ("SDA", "SDA"), ("SCL", "SCL"), ("ADD0", "ADDR")]),
                },
                ComponentInstance {
                    refdes: "R1".into(),
                    part_value: "0R".into(),
                    footprint: "0402".into(),
                    pins: pins(&[("1", "ADDR"), ("2", "GND")]),
                },
                ComponentInstance {
                    refdes: "R2".into(),
                    part_value: "0R".into(),
                    footprint: "0402".into(),
                    pins: pins(&[("1", "ADDR"), ("2", "VDD")]),
                },
            ],
            nets: ["VDD", "GND", "SDA", "SCL", "ADDR"].map(String::from).to_vec(),
            ports: vec![
                Port {
                    name: "VDD".into(),
                    iface: InterfaceType::Power(PowerSpec {
                        range: vr(1.4, 3.6),
                        current: CurrentSpec::draws(1.0),
                    }),
                    bound_net: "VDD".into(),
                    required: true,
                },
                Port {
                    name: "GND".into(),
                    iface: InterfaceType::Ground,
                    bound_net: "GND".into(),
                    required: true,
                },
                Port {
                    name: "SDA".into(),
                    iface: i2c(BusLine::Sda, 0x48),
                    bound_net: "SDA".into(),
                    required: true,
                },
                Port {
                    name: "SCL".into(),
                    iface: i2c(BusLine::Scl, 0x48),
                    bound_net: "SCL".into(),
                    required: true,
                },
            ],
            configs: vec![ConfigOption {
                name: "addr".into(),
                variants: vec![
                    Variant {
                        name: "0x48".into(),
                        is_default: true,
                        overrides: vec![],
                        toggles: vec![ComponentToggle {
                            component: "R2".into(),
                            enabled: false,
                        }],
                    },
                    Variant {
                        name: "0x49".into(),
                        is_default: false,
                        overrides: ["SDA", "SCL"]
                            .map(|p| PortOverride::Addresses {
                                port: p.into(),
                                addresses: [0x49].into(),
                            })
                            .to_vec(),
                        toggles: vec![ComponentToggle {
                            component: "R1".into(),
                            enabled: false,
                        }],
                    },
                ],
            }],
        })
        .unwrap()
    }

    fn addresses(block: &SchematicBlock, port: &str) -> BTreeSet<u8> {
        match &block.port(port).unwrap().iface {
            InterfaceType::I2c { addresses, .. } => addresses.clone(),
            _ => panic!("not i2c"),
        }
    }

    #[test]
    fn intersect_examples() {
        assert_eq!(vr(3.0, 3.6).intersect(&vr(3.3, 3.3)), Some(vr(3.3, 3.3)));
        assert_eq!(vr(3.0, 3.6).intersect(&vr(5.0, 5.0)), None);
        let a = vr(-12.0, 12.0);
        assert_eq!(a.intersect(&a), Some(a));
        assert!(VoltageRange::new(1.0, 0.5).is_err());
        assert!(VoltageRange::new(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn apply_config_selects_variant() {
        let b = sensor();
        let sel = [("addr".to_string(), "0x49".to_string())].into();
        let r = b.apply_config(&sel).unwrap();
        assert_eq!(addresses(&r, "SDA"), [0x49].into());
        assert!(r.components().iter().all(|c| c.refdes != "R1"));
        assert!(r.configs().is_empty());
        // input untouched
        assert_eq!(addresses(&b, "SDA"), [0x48].into());
        assert_eq!(b.components().len(), 3);
    }

    #[test]
    fn apply_config_defaults_and_idempotence() {
        let b = sensor();
        let r = b.apply_config(&BTreeMap::new()).unwrap();
        assert_eq!(addresses(&r, "SDA"), [0x48].into());
        assert_eq!(r.components().len(), 2);
        assert_eq!(r.apply_config(&BTreeMap::new()).unwrap(), r);
    }

    #[test]
    fn disabled_component_drops_orphan_net() {
        let mut parts = sensor().into_parts();
        parts.components.push(ComponentInstance {
            refdes: "R3".into(),
            part_value: "10k".into(),
            footprint: "0402".into(),
            pins: [("1".to_string(), "TP".to_string()), ("2".into(), "GND".into())].into(),
        });
        parts.nets.push("TP".into());
        parts.configs[0].variants[0].toggles.push(ComponentToggle {
            component: "R3".into(),
            enabled: false,
        });
        let b = SchematicBlock::new(parts).unwrap();
        assert!(b.nets().contains("TP"));
        let r = b.apply_config(&BTreeMap::new()).unwrap();
        assert!(!r.nets().contains("TP"));
        assert!(r.nets().contains("ADDR"));
    }

    #[test]
    fn apply_config_errors() {
        let b = sensor();
        let sel = [("spi_mode".to_string(), "0".to_string())].into();
        assert!(matches!(
            b.apply_config(&sel),
            Err(ConfigError::UnknownOption { .. })
        ));
        let sel = [("addr".to_string(), "0x50".to_string())].into();
        assert!(matches!(
            b.apply_config(&sel),
            Err(ConfigError::UnknownVariant { .. })
        ));
    }

    #[test]
    fn construction_rejects_broken_blocks() {
        let mut parts = sensor().into_parts();
        parts.ports[0].bound_net = "NOPE".into();
        assert!(matches!(
            SchematicBlock::new(parts),
            Err(ModelError::DanglingNet { .. })
        ));

        let mut parts = sensor().into_parts();
        parts.nets.push("FLOATING".into());
        assert!(matches!(SchematicBlock::new(parts), Err(ModelError::UnusedNet(_))));

        let mut parts = sensor().into_parts();
        parts.configs[0].variants[1].is_default = true;
        assert!(matches!(
            SchematicBlock::new(parts),
            Err(ModelError::InvalidConfig { .. })
        ));

        let mut parts = sensor().into_parts();
        if let InterfaceType::I2c { addresses, .. } = &mut parts.ports[2].iface {
            *addresses = [200].into();
        }
        assert!(matches!(
            SchematicBlock::new(parts),
            Err(ModelError::InvalidAddress(200))
        ));
    }

    #[test]
    fn derived_levels() {
        let l = LogicLevel::derived_from_supply(&vr(3.0, 3.6));
        assert!((l.vih_min - 2.1).abs() < 1e-12);
        assert!((l.vil_max - 1.08).abs() < 1e-12);
        assert!((l.voh_min - 2.6).abs() < 1e-12);
        assert_eq!(l.vol_max, 0.4);
    }

    #[test]
    fn names() {
        assert!(is_instance_name("sensor_2"));
        assert!(!is_instance_name("2sensor"));
        assert!(!is_instance_name(""));
        assert!(is_name("3V3"));
        assert!(is_name("+5V"));
        assert!(!is_name("a.b"));
        assert!(!is_name("a b"));
    }
}
