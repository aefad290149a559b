//! `matcheck`: validate block packages, check and merge compositions.
//!
//! Exit codes: 0 ok, 1 diagnostics, 2 I/O or parse failure, 3 merge refused.

mod render;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use matcheck_core::merger::ExportFormat;
use matcheck_core::{
    check, explain, export, merge, parse_block, parse_composition, resolve, Library,
    LibraryError, MergeError,
};

use render::Printer;

const EXIT_OK: u8 = 0;
const EXIT_DIAGNOSTICS: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_REFUSED: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Color {
    Auto,
    Always,
    Never,
}

#[derive(Debug, Parser)]
#[command(name = "matcheck", version, about = "Interface checker and merger for typed schematic blocks")]
struct Cli {
    /// Output format. JSON mode prints exactly one document on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    #[arg(long, global = true, value_enum, default_value_t = Color::Auto)]
    color: Color,

    /// Block library directory; repeatable, later directories shadow
    /// earlier ones. Defaults to the MATCHECK_LIB path list.
    #[arg(long = "lib", global = true, value_name = "DIR")]
    libs: Vec<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse block packages and report format errors.
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Run the interface checker on a composition.
    Check {
        composition: PathBuf,
        /// Treat warnings as errors.
        #[arg(long)]
        deny_warnings: bool,
    },
    /// Check, then merge into a flat netlist.
    Merge {
        composition: PathBuf,
        /// Flat JSON netlist output; printed to stdout when omitted.
        #[arg(short = 'o', long = "output", value_name = "FILE")]
        output: Option<PathBuf>,
        /// CSV bill of materials output.
        #[arg(long, value_name = "FILE")]
        bom: Option<PathBuf>,
    },
    /// Print the cause and fix guidance for a diagnostic code.
    Explain { code: String },
    /// Start the HTTP check service.
    Serve {
        #[arg(long, default_value_t = matcheck_service::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Allow cross-origin requests (for a UI on a development server).
        #[arg(long)]
        dev_cors: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.format == Format::Json;
    let p = Printer::new(json, cli.color);
    let code = match &cli.command {
        Command::Validate { paths } => validate(&p, paths),
        Command::Check {
            composition,
            deny_warnings,
        } => run_check(&p, &cli.libs, composition, *deny_warnings),
        Command::Merge {
            composition,
            output,
            bom,
        } => run_merge(&p, &cli.libs, composition, output.as_deref(), bom.as_deref()),
        Command::Explain { code } => run_explain(&p, code),
        Command::Serve {
            port,
            host,
            dev_cors,
        } => serve(&p, &cli.libs, host, *port, *dev_cors),
    };
    ExitCode::from(code)
}

fn library_dirs(flags: &[PathBuf]) -> Vec<PathBuf> {
    if !flags.is_empty() {
        return flags.to_vec();
    }
    match std::env::var_os("MATCHECK_LIB") {
        Some(v) => std::env::split_paths(&v).filter(|p| !p.as_os_str().is_empty()).collect(),
        None => Vec::new(),
    }
}

fn load_library(p: &Printer, flags: &[PathBuf]) -> Result<Library, u8> {
    match Library::load_dirs(&library_dirs(flags)) {
        Ok((lib, shadowed)) => {
            for s in shadowed {
                p.notice(&format!(
                    "block `{}` from {} shadows {}",
                    s.block_id,
                    s.kept.display(),
                    s.replaced.display()
                ));
            }
            Ok(lib)
        }
        Err(LibraryError::Io { path, source }) => {
            p.fatal("io", &format!("{}: {source}", path.display()));
            Err(EXIT_INPUT)
        }
        Err(LibraryError::Parse { path, diagnostics }) => {
            p.parse_failure(&path, &diagnostics);
            Err(EXIT_INPUT)
        }
    }
}

fn read(p: &Printer, path: &Path) -> Result<Vec<u8>, u8> {
    std::fs::read(path).map_err(|e| {
        p.fatal("io", &format!("{}: {e}", path.display()));
        EXIT_INPUT
    })
}

fn validate(p: &Printer, paths: &[PathBuf]) -> u8 {
    let mut files = Vec::new();
    let mut any_invalid = false;
    for path in paths {
        let bytes = match read(p, path) {
            Ok(b) => b,
            Err(code) => return code,
        };
        let diagnostics = parse_block(&bytes).err().unwrap_or_default();
        any_invalid |= !diagnostics.is_empty();
        if !p.json {
            for d in &diagnostics {
                p.line(&format!("{}: {}", path.display(), p.paint_code(d.code, true, &d.to_string())));
            }
        }
        files.push(json!({
            "path": path.display().to_string(),
            "ok": diagnostics.is_empty(),
            "diagnostics": diagnostics,
        }));
    }
    if p.json {
        p.document(&json!({"ok": !any_invalid, "files": files}));
    }
    if any_invalid {
        EXIT_DIAGNOSTICS
    } else {
        EXIT_OK
    }
}

/// Loads library and composition and resolves; on failure returns the exit
/// code after reporting.
fn prepare(
    p: &Printer,
    libs: &[PathBuf],
    path: &Path,
) -> Result<matcheck_core::ResolvedComposition, u8> {
    let lib = load_library(p, libs)?;
    let bytes = read(p, path)?;
    let doc = parse_composition(&bytes).map_err(|d| {
        p.parse_failure(path, &d);
        EXIT_INPUT
    })?;
    resolve(&doc, &lib).map_err(|d| {
        p.diagnostics("resolve", &d);
        EXIT_DIAGNOSTICS
    })
}

fn run_check(p: &Printer, libs: &[PathBuf], path: &Path, deny_warnings: bool) -> u8 {
    let resolved = match prepare(p, libs, path) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let diags = check(&resolved);
    p.diagnostics("check", &diags);
    let errors = diags.iter().any(|d| d.is_error());
    if errors || (deny_warnings && !diags.is_empty()) {
        EXIT_DIAGNOSTICS
    } else {
        EXIT_OK
    }
}

fn write_file(p: &Printer, path: &Path, bytes: &[u8]) -> Result<(), u8> {
    let result = std::fs::File::create(path).and_then(|mut f| f.write_all(bytes));
    result.map_err(|e| {
        p.fatal("io", &format!("{}: {e}", path.display()));
        EXIT_INPUT
    })
}

fn run_merge(
    p: &Printer,
    libs: &[PathBuf],
    path: &Path,
    output: Option<&Path>,
    bom: Option<&Path>,
) -> u8 {
    let resolved = match prepare(p, libs, path) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let diags = check(&resolved);
    let merged = match merge(&resolved, &diags) {
        Ok(m) => m,
        Err(MergeError::Refused { codes }) => {
            p.refused(&codes, &diags);
            return EXIT_REFUSED;
        }
        Err(e @ MergeError::InternalInconsistency { .. }) => {
            p.fatal("internal", &e.to_string());
            return EXIT_REFUSED;
        }
    };
    let flat = export(&merged, ExportFormat::FlatJson);
    if let Some(out) = output {
        if let Err(code) = write_file(p, out, &flat) {
            return code;
        }
    }
    if let Some(out) = bom {
        if let Err(code) = write_file(p, out, &export(&merged, ExportFormat::CsvBom)) {
            return code;
        }
    }
    let warnings: Vec<_> = diags.iter().filter(|d| !d.is_error()).collect();
    if p.json {
        let mut doc = json!({
            "ok": true,
            "design": merged.design_name,
            "components": merged.components.len(),
            "nets": merged.nets.len(),
            "warnings": warnings,
        });
        if let Some(out) = output {
            doc["output"] = json!(out.display().to_string());
        } else {
            doc["flat"] = serde_json::from_slice(&flat).expect("flat JSON parses");
        }
        if let Some(out) = bom {
            doc["bom"] = json!(out.display().to_string());
        }
        p.document(&doc);
    } else {
        for d in &warnings {
            p.diagnostic(d);
        }
        if output.is_none() {
            std::io::stdout().write_all(&flat).ok();
        }
        p.notice(&format!(
            "merged {}: {} components, {} nets",
            merged.design_name,
            merged.components.len(),
            merged.nets.len()
        ));
    }
    EXIT_OK
}

fn run_explain(p: &Printer, code: &str) -> u8 {
    match explain(code) {
        Ok(text) => {
            if p.json {
                p.document(&json!({"code": code, "explanation": text}));
            } else {
                p.line(&format!("{code}: {text}"));
            }
            EXIT_OK
        }
        Err(e) => {
            p.fatal("unknown_code", &e.to_string());
            EXIT_DIAGNOSTICS
        }
    }
}

fn serve(p: &Printer, libs: &[PathBuf], host: &str, port: u16, dev_cors: bool) -> u8 {
    let lib = match load_library(p, libs) {
        Ok(l) => Arc::new(l),
        Err(code) => return code,
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            p.fatal("io", &e.to_string());
            return EXIT_INPUT;
        }
    };
    let result = runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port)).await?;
        p.notice(&format!(
            "serving {} blocks on http://{}",
            lib.len(),
            listener.local_addr()?
        ));
        matcheck_service::serve(listener, matcheck_service::router(lib, dev_cors)).await
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            p.fatal("io", &e.to_string());
            EXIT_INPUT
        }
    }
}
