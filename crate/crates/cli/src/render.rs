//! Text and JSON output. Results go to stdout; notices to stderr. In JSON
//! mode stdout carries exactly one document.

use std::io::IsTerminal;
use std::path::Path;

use anstyle::{AnsiColor, Style};
use serde_json::{json, Value};

use matcheck_core::{Diagnostic, ParseDiagnostic};

use crate::Color;

pub struct Printer {
    pub json: bool,
    color: bool,
}

const ERROR: Style = AnsiColor::Red.on_default().bold();
const WARNING: Style = AnsiColor::Yellow.on_default().bold();
const DIM: Style = Style::new().dimmed();

impl Printer {
    pub fn new(json: bool, color: Color) -> Self {
        let color = match color {
            Color::Always => true,
            Color::Never => false,
            Color::Auto => {
                !json && std::io::stdout().is_terminal() && std::env::var_os("NO_COLOR").is_none()
            }
        };
        Self { json, color }
    }

    fn paint(&self, style: Style, text: &str) -> String {
        if self.color {
            format!("{style}{text}{style:#}")
        } else {
            text.to_owned()
        }
    }

    /// `text` with its leading code painted by severity.
    pub fn paint_code(&self, code: &str, error: bool, text: &str) -> String {
        match text.strip_prefix(code) {
            Some(rest) => {
                let style = if error { ERROR } else { WARNING };
                format!("{}{rest}", self.paint(style, code))
            }
            None => text.to_owned(),
        }
    }

    pub fn line(&self, text: &str) {
        println!("{text}");
    }

    pub fn notice(&self, text: &str) {
        eprintln!("{}", self.paint(DIM, &format!("note: {text}")));
    }

    pub fn document(&self, v: &Value) {
        println!("{}", serde_json::to_string_pretty(v).expect("JSON value serializes"));
    }

    pub fn diagnostic(&self, d: &Diagnostic) {
        let (style, label) = if d.is_error() {
            (ERROR, "error")
        } else {
            (WARNING, "warning")
        };
        let head = self.paint(style, &format!("{label}[{}]", d.code));
        let subjects: Vec<String> = d.subjects.iter().map(ToString::to_string).collect();
        println!("{head}: {}", d.message);
        if !subjects.is_empty() {
            println!("  {} {}", self.paint(DIM, "at"), subjects.join(", "));
        }
    }

    /// Reports coded diagnostics from `stage` (`resolve` or `check`).
    pub fn diagnostics(&self, stage: &str, diags: &[Diagnostic]) {
        if self.json {
            let errors = diags.iter().filter(|d| d.is_error()).count();
            self.document(&json!({
                "ok": errors == 0,
                "stage": stage,
                "errors": errors,
                "warnings": diags.len() - errors,
                "diagnostics": diags,
            }));
            return;
        }
        for d in diags {
            self.diagnostic(d);
        }
        let errors = diags.iter().filter(|d| d.is_error()).count();
        if diags.is_empty() {
            eprintln!("no diagnostics");
        } else {
            eprintln!("{errors} error(s), {} warning(s)", diags.len() - errors);
        }
    }

    pub fn parse_failure(&self, path: &Path, diags: &[ParseDiagnostic]) {
        if self.json {
            self.document(&json!({
                "ok": false,
                "stage": "parse",
                "path": path.display().to_string(),
                "diagnostics": diags,
            }));
            return;
        }
        for d in diags {
            eprintln!("{}: {}", path.display(), self.paint_code(d.code, true, &d.to_string()));
        }
    }

    pub fn refused(&self, codes: &[String], diags: &[Diagnostic]) {
        if self.json {
            self.document(&json!({
                "ok": false,
                "stage": "merge",
                "blocking": codes,
                "diagnostics": diags,
            }));
            return;
        }
        for d in diags {
            self.diagnostic(d);
        }
        eprintln!("merge refused: blocking diagnostics {}", codes.join(", "));
    }

    /// Failure without diagnostics (I/O, unknown code, internal error).
    pub fn fatal(&self, kind: &str, message: &str) {
        if self.json {
            self.document(&json!({"ok": false, "error": kind, "message": message}));
        } else {
            eprintln!("{}: {message}", self.paint(ERROR, "error"));
        }
    }
}
