//! Byte-deterministic exports of a merged schematic.
//!
//! `flat-json`:
//!
//! ```text
//! { "schema": 1, "design": "...",
//!   "components": [{"refdes", "value", "footprint", "pins": [{"name", "net"}]}],
//!   "nets": [{"name", "pins": [{"refdes", "pin"}]}],
//!   "provenance": [{"refdes", "instance", "block_id", "version"}] }
//! ```
//!
//! Every array is sorted by its first field; no-connect pins carry
//! `"net": "NC"`. `csv-bom` is RFC-4180 CSV with a `refdes,value,footprint`
//! header and one row per component, sorted by refdes.

use std::fmt;
use std::str::FromStr;

use serde_json::{json, Value};

use super::MergedSchematic;

pub const FLAT_SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    FlatJson,
    CsvBom,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flat-json" => Ok(ExportFormat::FlatJson),
            "csv-bom" => Ok(ExportFormat::CsvBom),
            _ => Err(format!("unknown export format `{s}`")),
        }
    }
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportFormat::FlatJson => "flat-json",
            ExportFormat::CsvBom => "csv-bom",
        })
    }
}

pub fn export(merged: &MergedSchematic, format: ExportFormat) -> Vec<u8> {
    match format {
        ExportFormat::FlatJson => {
            let mut out =
                serde_json::to_vec_pretty(&flat_json(merged)).expect("JSON values always serialize");
            out.push(b'\n');
            out
        }
        ExportFormat::CsvBom => csv_bom(merged),
    }
}

/// The `flat-json` document as a JSON value.
pub fn flat_json(merged: &MergedSchematic) -> Value {
    let components: Vec<Value> = merged
        .components
        .iter()
        .map(|c| {
            let pins: Vec<Value> = c
                .pins
                .iter()
                .map(|(name, net)| json!({"name": name, "net": net}))
                .collect();
            json!({
                "refdes": c.refdes,
                "value": c.value,
                "footprint": c.footprint,
                "pins": pins,
            })
        })
        .collect();
    let nets: Vec<Value> = merged
        .nets
        .iter()
        .map(|(name, pins)| {
            let pins: Vec<Value> = pins
                .iter()
                .map(|p| json!({"refdes": p.refdes, "pin": p.pin}))
                .collect();
            json!({"name": name, "pins": pins})
        })
        .collect();
    let provenance: Vec<Value> = merged
        .provenance
        .iter()
        .map(|(refdes, p)| {
            json!({
                "refdes": refdes,
                "instance": p.instance,
                "block_id": p.block_id,
                "version": p.version,
            })
        })
        .collect();
    json!({
        "schema": FLAT_SCHEMA_VERSION,
        "design": merged.design_name,
        "components": components,
        "nets": nets,
        "provenance": provenance,
    })
}

fn csv_bom(merged: &MergedSchematic) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["refdes", "value", "footprint"])
        .expect("writing to memory");
    for c in &merged.components {
        w.write_record([&c.refdes, &c.value, &c.footprint])
            .expect("writing to memory");
    }
    w.into_inner().expect("flushing to memory")
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::merger::MergedComponent;

    fn sample() -> MergedSchematic {
        MergedSchematic {
            design_name: "d".into(),
            components: vec![MergedComponent {
                refdes: "u.R1".into(),
                value: "10k, 1%".into(),
                footprint: "0402 \"small\"".into(),
                pins: BTreeMap::from([("1".into(), "NC".into())]),
            }],
            nets: BTreeMap::new(),
            provenance: BTreeMap::new(),
        }
    }

    #[test]
    fn bom_quotes_per_rfc4180() {
        let bom = String::from_utf8(export(&sample(), ExportFormat::CsvBom)).unwrap();
        assert_eq!(
            bom,
            "refdes,value,footprint\nu.R1,\"10k, 1%\",\"0402 \"\"small\"\"\"\n"
        );
        let mut r = csv::Reader::from_reader(bom.as_bytes());
        let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
        assert_eq!(&rows[0][1], "10k, 1%");
    }

    #[test]
    fn empty_design_has_empty_arrays() {
        let empty = MergedSchematic {
            design_name: "e".into(),
            components: vec![],
            nets: BTreeMap::new(),
            provenance: BTreeMap::new(),
        };
        let v: Value = serde_json::from_slice(&export(&empty, ExportFormat::FlatJson)).unwrap();
        assert_eq!(v["components"], json!([]));
        assert_eq!(v["nets"], json!([]));
        assert_eq!(v["schema"], json!(1));
    }
}
