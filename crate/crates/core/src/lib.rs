//! Typed schematic blocks.
//!
//! A block is a small netlist whose boundary ports carry interface types
//! (power, ground, GPIO, analog, I2C, SPI, UART). A composition (a "mats"
//! document) instantiates blocks, organises their power ports into a rail
//! forest and wires data ports with signal edges. This crate parses and
//! serializes both formats, checks compositions against an electrical rule
//! catalog and merges clean compositions into one flat netlist.
//!
//! ```
//! use matcheck_core::{check, merge, resolve, CompositionDocument, Library};
//!
//! let lib = Library::default();
//! let doc = CompositionDocument::new("empty");
//! let resolved = resolve(&doc, &lib).unwrap();
//! let diags = check(&resolved);
//! assert!(diags.is_empty());
//! assert!(merge(&resolved, &diags).unwrap().components.is_empty());
//! ```

pub mod checker;
pub mod connectivity;
pub mod diagnostic;
pub mod library;
pub mod mats;
pub mod merger;
pub mod model;
pub mod parser;
#[cfg(any(test, feature = "testkit"))]
pub mod testkit;

pub use checker::{check, check_report, explain, CheckReport};
pub use diagnostic::{Diagnostic, Severity, Subject};
pub use library::{Library, LibraryError};
pub use mats::{
    auto_attach_power, resolve, BlockInstance, CompositionDocument, EditError, PortRef, PowerRail,
    RailKind, ResolvedComposition,
};
pub use merger::{export, merge, ExportFormat, MergeError, MergedSchematic};
pub use model::{SchematicBlock, VoltageRange};
pub use parser::{
    parse_block, parse_composition, serialize_block, serialize_composition, ParseDiagnostic,
};
