//! Strict, location-tracking walker over a `serde_json::Value` tree.

use serde_json::{Map, Value};

use super::{ParseCode, ParseDiagnostic};

/// Appends one JSON-pointer segment.
pub(crate) fn join(path: &str, segment: impl std::fmt::Display) -> String {
    let seg = segment.to_string().replace('~', "~0").replace('/', "~1");
    format!("{path}/{seg}")
}

#[derive(Default)]
pub(crate) struct Reader {
    pub diags: Vec<ParseDiagnostic>,
}

pub(crate) struct Obj<'a> {
    pub map: &'a Map<String, Value>,
    pub path: String,
}

impl Reader {
    pub fn error(&mut self, code: ParseCode, path: impl Into<String>, message: impl Into<String>) {
        self.diags.push(ParseDiagnostic::new(code, path, message));
    }

    /// Opens an object, rejecting unknown keys and reporting missing
    /// required ones. `keys` lists allowed keys; a leading `?` marks a key
    /// as optional.
    pub fn object<'a>(&mut self, value: &'a Value, path: &str, keys: &[&str]) -> Option<Obj<'a>> {
        let Some(map) = value.as_object() else {
            self.error(ParseCode::Malformed, path, "expected an object");
            return None;
        };
        let mut ok = true;
        for key in map.keys() {
            let allowed = keys
                .iter()
                .any(|k| k.strip_prefix('?').unwrap_or(k) == key);
            if !allowed {
                self.error(
                    ParseCode::UnknownKey,
                    join(path, key),
                    format!("unknown key `{key}`"),
                );
            }
        }
        for key in keys.iter().filter(|k| !k.starts_with('?')) {
            if !map.contains_key(*key) {
                self.error(
                    ParseCode::Malformed,
                    path,
                    format!("missing required key `{key}`"),
                );
                ok = false;
            }
        }
        ok.then(|| Obj {
            map,
            path: path.to_owned(),
        })
    }

    pub fn str<'a>(&mut self, obj: &Obj<'a>, key: &str) -> Option<&'a str> {
        let v = obj.map.get(key)?;
        let s = v.as_str();
        if s.is_none() {
            self.error(ParseCode::Malformed, join(&obj.path, key), "expected a string");
        }
        s
    }

    /// Optional string; JSON `null` counts as absent.
    pub fn opt_str<'a>(&mut self, obj: &Obj<'a>, key: &str) -> Result<Option<&'a str>, ()> {
        match obj.map.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => {
                self.error(ParseCode::Malformed, join(&obj.path, key), "expected a string or null");
                Err(())
            }
        }
    }

    pub fn f64(&mut self, obj: &Obj<'_>, key: &str) -> Option<f64> {
        let v = obj.map.get(key)?;
        let n = v.as_f64();
        if n.is_none() {
            self.error(ParseCode::Malformed, join(&obj.path, key), "expected a number");
        }
        n
    }

    pub fn opt_f64(&mut self, obj: &Obj<'_>, key: &str) -> Result<Option<f64>, ()> {
        match obj.map.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => match v.as_f64() {
                Some(n) => Ok(Some(n)),
                None => {
                    self.error(ParseCode::Malformed, join(&obj.path, key), "expected a number or null");
                    Err(())
                }
            },
        }
    }

    pub fn bool_or(&mut self, obj: &Obj<'_>, key: &str, default: bool) -> Option<bool> {
        match obj.map.get(key) {
            None => Some(default),
            Some(Value::Bool(b)) => Some(*b),
            Some(_) => {
                self.error(ParseCode::Malformed, join(&obj.path, key), "expected a boolean");
                None
            }
        }
    }

    /// Array elements with their paths. A missing optional key yields an
    /// empty list.
    pub fn array<'a>(&mut self, obj: &Obj<'a>, key: &str) -> Option<Vec<(String, &'a Value)>> {
        let path = join(&obj.path, key);
        match obj.map.get(key) {
            None => Some(Vec::new()),
            Some(Value::Array(items)) => Some(
                items
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (join(&path, i), v))
                    .collect(),
            ),
            Some(_) => {
                self.error(ParseCode::Malformed, path, "expected an array");
                None
            }
        }
    }
}
