use std::cmp::Ordering;
use std::fmt;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::mats::PortRef;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

/// What a diagnostic points at.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subject {
    Instance(String),
    Port(PortRef),
    Rail(String),
    Edge(String),
}

impl Subject {
    pub fn instance(&self) -> Option<&str> {
        match self {
            Subject::Instance(i) => Some(i),
            Subject::Port(p) => Some(&p.instance),
            _ => None,
        }
    }
}

impl Serialize for Subject {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        match self {
            Subject::Instance(name) => {
                map.serialize_entry("kind", "instance")?;
                map.serialize_entry("instance", name)?;
            }
            Subject::Port(p) => {
                map.serialize_entry("kind", "port")?;
                map.serialize_entry("instance", &p.instance)?;
                map.serialize_entry("port", &p.port)?;
            }
            Subject::Rail(name) => {
                map.serialize_entry("kind", "rail")?;
                map.serialize_entry("rail", name)?;
            }
            Subject::Edge(id) => {
                map.serialize_entry("kind", "edge")?;
                map.serialize_entry("edge", id)?;
            }
        }
        map.end()
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Instance(i) => write!(f, "instance {i}"),
            Subject::Port(p) => write!(f, "port {p}"),
            Subject::Rail(r) => write!(f, "rail {r}"),
            Subject::Edge(e) => write!(f, "edge {e}"),
        }
    }
}

/// A coded, located check result.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Diagnostic {
    pub code: String,
    pub severity: Severity,
    pub subjects: Vec<Subject>,
    pub message: String,
    /// Key into the explanation catalog (see [`crate::checker::explain`]).
    pub explanation_key: String,
}

impl Diagnostic {
    pub fn new(
        code: &str,
        severity: Severity,
        mut subjects: Vec<Subject>,
        message: String,
    ) -> Self {
        debug_assert!(!subjects.is_empty(), "{code} without subjects");
        subjects.sort();
        subjects.dedup();
        Self {
            code: code.to_owned(),
            severity,
            subjects,
            message,
            explanation_key: code.to_owned(),
        }
    }

    pub fn error(code: &str, subjects: Vec<Subject>, message: String) -> Self {
        Self::new(code, Severity::Error, subjects, message)
    }

    pub fn warning(code: &str, subjects: Vec<Subject>, message: String) -> Self {
        Self::new(code, Severity::Warning, subjects, message)
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl Ord for Diagnostic {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.severity, &self.code, &self.subjects, &self.message).cmp(&(
            other.severity,
            &other.code,
            &other.subjects,
            &other.message,
        ))
    }
}

impl PartialOrd for Diagnostic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}]: {}", self.code, self.message)
    }
}
