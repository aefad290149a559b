//! Block-package (`*.block.json`) and composition (`*.mat.json`) formats.
//!
//! Both are strict JSON documents carrying `"schema": 1`. Unknown keys are
//! rejected. Serialization is canonical: object keys sorted, arrays sorted
//! by their identity key, two-space indentation and a trailing newline.
//!
//! Parse error catalog:
//!
//! | code | meaning |
//! |------|---------|
//! | P001 | malformed document (syntax, wrong JSON type, missing key) |
//! | P002 | unknown key |
//! | P003 | dangling reference |
//! | P004 | duplicate identifier |
//! | P005 | invalid interface field |
//! | P006 | invalid value (name, range, config, schema version) |
//! | P010 | duplicate instance name |
//! | P011 | rail parent cycle |

mod block;
mod composition;
mod reader;

use std::fmt;

use serde::Serialize;
use serde_json::Value;

pub use block::{parse_block, serialize_block};
pub use composition::{parse_composition, serialize_composition};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParseCode {
    Malformed,
    UnknownKey,
    DanglingReference,
    DuplicateIdentifier,
    InvalidInterface,
    InvalidValue,
    DuplicateInstance,
    RailCycle,
}

impl ParseCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ParseCode::Malformed => "P001",
            ParseCode::UnknownKey => "P002",
            ParseCode::DanglingReference => "P003",
            ParseCode::DuplicateIdentifier => "P004",
            ParseCode::InvalidInterface => "P005",
            ParseCode::InvalidValue => "P006",
            ParseCode::DuplicateInstance => "P010",
            ParseCode::RailCycle => "P011",
        }
    }
}

/// A located parse failure. `path` is a JSON pointer into the document; for
/// syntax errors it is empty and `line`/`column` locate the fault instead.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ParseDiagnostic {
    pub code: &'static str,
    pub path: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

impl ParseDiagnostic {
    pub fn new(code: ParseCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code: code.as_str(),
            path: path.into(),
            message: message.into(),
            line: None,
            column: None,
        }
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at ", self.code)?;
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}")?,
            _ if self.path.is_empty() => f.write_str("/")?,
            _ => f.write_str(&self.path)?,
        }
        write!(f, ": {}", self.message)
    }
}

/// Decodes UTF-8 and JSON syntax.
fn parse_json(text: &[u8]) -> Result<Value, Vec<ParseDiagnostic>> {
    let s = std::str::from_utf8(text).map_err(|e| {
        vec![ParseDiagnostic::new(
            ParseCode::Malformed,
            "",
            format!("input is not UTF-8 (byte {})", e.valid_up_to()),
        )]
    })?;
    serde_json::from_str(s).map_err(|e| {
        let mut d = ParseDiagnostic::new(ParseCode::Malformed, "", format!("invalid JSON: {e}"));
        d.line = Some(e.line());
        d.column = Some(e.column());
        vec![d]
    })
}

fn check_schema(r: &mut reader::Reader, obj: &reader::Obj<'_>) {
    if let Some(v) = obj.map.get("schema") {
        if v.as_u64() != Some(SCHEMA_VERSION) {
            r.error(
                ParseCode::InvalidValue,
                reader::join(&obj.path, "schema"),
                format!("unsupported schema version {v}, expected {SCHEMA_VERSION}"),
            );
        }
    }
}

fn to_canonical_bytes(value: &Value) -> Vec<u8> {
    // serde_json's default map is ordered, so keys come out sorted.
    let mut out = serde_json::to_vec_pretty(value).expect("JSON values always serialize");
    out.push(b'\n');
    out
}

fn finish<T>(r: reader::Reader, value: Option<T>) -> Result<T, Vec<ParseDiagnostic>> {
    let mut diags = r.diags;
    match value {
        Some(v) if diags.is_empty() => Ok(v),
        _ => {
            if diags.is_empty() {
                diags.push(ParseDiagnostic::new(ParseCode::Malformed, "", "invalid document"));
            }
            diags.sort();
            diags.dedup();
            Err(diags)
        }
    }
}
