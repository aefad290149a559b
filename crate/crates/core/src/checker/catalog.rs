use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown diagnostic code `{0}`")]
pub struct UnknownCode(pub String);

/// Every code the interface checker can emit.
pub const CHECK_CODES: &[&str] = &[
    "E001", "E002", "E003", "E004", "E005", "E006", "E007", "W101", "W102", "W103", "W104",
];

const CATALOG: &[(&str, &str)] = &[
    (
        "E001",
        "Protocol mismatch: a bus group connects ports of different interface kinds \
         (for example I2C to SPI), or different lines of the same bus (SDA to SCL). \
         Fix: remove the edge and connect each port to a port of the same kind and line.",
    ),
    (
        "E002",
        "Bus role conflict: an I2C or SPI bus needs exactly one controller; a UART line \
         needs exactly one transmitter; a GPIO net may have at most one push-pull output. \
         Fix: remove the extra controller or driver, or add the missing one.",
    ),
    (
        "E003",
        "Voltage incompatibility: a driver's output levels are not recognised by a receiver \
         (voh_min below vih_min, or vol_max above vil_max), the driver can exceed the \
         receiver's absolute voltage range, or two supply-derived ports run from disjoint \
         operating voltages. Fix: power both blocks from compatible rails or insert a level \
         shifter.",
    ),
    (
        "E004",
        "Power overdraw: the summed draw of everything attached to a rail (including child \
         rails without their own source) exceeds the rail's supply, taken from its explicit \
         supply budget or the sum of supplying ports. Fix: move loads to another rail or \
         use a stronger supply.",
    ),
    (
        "E005",
        "I2C address conflict: the peripherals on a bus cannot all be given distinct \
         addresses under any combination of their unpinned configuration variants. Fix: \
         select a different address variant, move a device to another bus, or add an \
         address translator.",
    ),
    (
        "E006",
        "Unconnected required port: a port marked required has no signal edge (data ports) \
         or rail attachment (power and ground ports). Fix: connect or attach the port.",
    ),
    (
        "E007",
        "Rail out of range: a port is attached to a rail whose envelope does not overlap the \
         voltage range the port accepts, or two different rails end up shorted into one net. \
         Fix: attach the port to a suitable rail.",
    ),
    (
        "W101",
        "Ambiguous power attachment: more than one rail fits inside this port's accepted \
         range, so it was not attached automatically. Fix: pick one of the listed candidate \
         rails manually.",
    ),
    (
        "W102",
        "No power attachment candidate: no rail fits inside this port's accepted range (or \
         there is no ground rail for a ground port). Fix: add a suitable rail or attach the \
         port manually.",
    ),
    (
        "W103",
        "Missing I2C pull-ups: an I2C bus has no pull-up provider, so SDA and SCL will not \
         return high. Fix: add a pull-up block to the bus.",
    ),
    (
        "W104",
        "Floating optional bus line: an optional port is unconnected while other lines of the \
         same bus on that instance are connected. Fix: connect it if the bus needs it, or \
         ignore this notice.",
    ),
    (
        "R001",
        "Unknown block: an instance references a block id and version that are not in the \
         library. Fix: add the block package to a library directory or correct the reference.",
    ),
    (
        "R002",
        "Unknown port: an edge or attachment names a port the resolved block does not have.",
    ),
    (
        "R003",
        "Configuration error: an instance selects an option or variant the block does not \
         define.",
    ),
    (
        "R004",
        "Port kind misuse: power and ground ports attach to rails; every other port connects \
         through signal edges.",
    ),
    (
        "C001",
        "Power and ground ports cannot be wired with signal edges; attach them to a rail.",
    ),
    ("C002", "The two ports are already connected by an edge."),
    (
        "C003",
        "Invalid edit: the operation names a missing instance, port, rail or edge, or would \
         break a document invariant (duplicate name, rail cycle, wrong port kind). The \
         document is left unchanged.",
    ),
];

/// Cause and fix guidance for a diagnostic code.
pub fn explain(code: &str) -> Result<&'static str, UnknownCode> {
    CATALOG
        .iter()
        .find(|(c, _)| *c == code)
        .map(|(_, text)| *text)
        .ok_or_else(|| UnknownCode(code.to_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_total() {
        for code in CHECK_CODES {
            assert!(!explain(code).unwrap().is_empty());
        }
        let e004 = explain("E004").unwrap();
        assert!(e004.contains("supply") && e004.contains("draw"));
        assert_eq!(explain("Z999"), Err(UnknownCode("Z999".into())));
    }
}
