//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines always reach stdout.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::net::TcpStream;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use matcheck_core::merger::ExportFormat;
use matcheck_core::testkit::{blocks, gen, oracle};
use matcheck_core::{
    check, export, merge, parse_block, parse_composition, resolve, serialize_block,
    serialize_composition, BlockInstance, CompositionDocument, Library, PortRef,
};

const CODES: [&str; 11] = [
    "E001", "E002", "E003", "E004", "E005", "E006", "E007", "W101", "W102", "W103", "W104",
];

type Outcome = Result<String, String>;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn load_lib(dir: &str) -> Library {
    Library::load_dirs(&[root().join(dir)]).expect("library loads").0
}

fn load_doc(path: &Path) -> CompositionDocument {
    parse_composition(&std::fs::read(path).expect("fixture readable")).expect("fixture parses")
}

fn catalog_coverage() -> Outcome {
    let start = Instant::now();
    let lib = load_lib("fixtures/blocks");
    for code in CODES {
        let path = root().join(format!("fixtures/catalog/{}.mat.json", code.to_lowercase()));
        let resolved = resolve(&load_doc(&path), &lib).map_err(|d| format!("{code}: {d:?}"))?;
        let got: BTreeSet<String> = check(&resolved).into_iter().map(|d| d.code).collect();
        if got != BTreeSet::from([code.to_owned()]) {
            return Err(format!("{code} fixture produced {got:?}"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(5) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("{} fixtures, exact codes, {elapsed:.2?}", CODES.len()))
}

fn connectivity_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let mut pairs = 0usize;
    for case in 0..200 {
        let (lib, doc) = gen::wiring_case(&mut rng);
        let resolved = resolve(&doc, &lib).map_err(|d| format!("case {case}: {d:?}"))?;
        let merged = merge(&resolved, &[]).map_err(|e| format!("case {case}: {e}"))?;
        let bfs = oracle::pin_components(&resolved);
        let pins: Vec<_> = bfs.keys().collect();
        for (i, p) in pins.iter().enumerate() {
            let np = merged.net_of(&p.0, &p.1);
            for q in &pins[i + 1..] {
                let nq = merged.net_of(&q.0, &q.1);
                if (bfs[*p] == bfs[*q]) != (np.is_some() && np == nq) {
                    return Err(format!("case {case}: {p:?} vs {q:?}"));
                }
                pairs += 1;
            }
        }
    }
    Ok(format!("200 compositions, {pairs} pin pairs agree"))
}

fn i2c_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut conflicts = 0;
    for case in 0..100 {
        let (lib, doc) = gen::i2c_case(&mut rng);
        let resolved = resolve(&doc, &lib).map_err(|d| format!("case {case}: {d:?}"))?;
        let ours = check(&resolved).iter().any(|d| d.code == "E005");
        let brute = oracle::i2c_conflict(&resolved, &PortRef::new("mcu", "SDA"));
        if ours != brute {
            return Err(format!("case {case}: checker {ours}, brute force {brute}"));
        }
        conflicts += usize::from(brute);
    }
    Ok(format!("100 buses agree ({conflicts} with conflicts)"))
}

fn all_fixtures() -> Vec<(PathBuf, &'static str)> {
    let mut v: Vec<_> = CODES
        .iter()
        .map(|c| (root().join(format!("fixtures/catalog/{}.mat.json", c.to_lowercase())), "fixtures/blocks"))
        .collect();
    v.push((root().join("demo/env_node.mat.json"), "demo/blocks"));
    v.push((root().join("demo/gps_logger.mat.json"), "demo/blocks"));
    v
}

fn run_cli(lib: &str, args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_matcheck"))
        .current_dir(root())
        .env_remove("MATCHECK_LIB")
        .args(["--format", "json", "--lib", lib])
        .args(args)
        .output()
        .expect("binary runs");
    let mut bytes = out.stdout;
    bytes.extend(format!("exit {:?}", out.status.code()).bytes());
    bytes
}

fn determinism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let dir = std::env::temp_dir().join(format!("matcheck-determinism-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let fixtures = all_fixtures();
    for (path, lib) in &fixtures {
        let doc = load_doc(path);
        let mut baseline: Option<(Vec<u8>, Vec<u8>)> = None;
        for run in 0..10 {
            let shuffled = if run == 0 { doc.clone() } else { gen::shuffled(&mut rng, &doc) };
            let file = dir.join("input.mat.json");
            std::fs::write(&file, serialize_composition(&shuffled)).map_err(|e| e.to_string())?;
            let f = file.to_str().unwrap();
            let outputs = (run_cli(lib, &["check", f]), run_cli(lib, &["merge", f]));
            match &baseline {
                None => baseline = Some(outputs),
                Some(b) if *b != outputs => {
                    return Err(format!("{} differs on run {run}", path.display()));
                }
                Some(_) => {}
            }
        }
    }
    std::fs::remove_dir_all(&dir).ok();
    Ok(format!("{} fixtures x 10 shuffled runs, byte-identical", fixtures.len()))
}

fn round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for i in 0..500 {
        let b = gen::block(&mut rng);
        let bytes = serialize_block(&b);
        match parse_block(&bytes) {
            Ok(p) if p == b && serialize_block(&p) == bytes => {}
            _ => return Err(format!("block {i} does not round-trip")),
        }
    }
    let lib = gen::library(&mut rng, 6);
    for i in 0..500 {
        let d = gen::composition(&mut rng, &lib);
        let bytes = serialize_composition(&d);
        match parse_composition(&bytes) {
            Ok(p) if p == d && serialize_composition(&p) == bytes => {}
            _ => return Err(format!("composition {i} does not round-trip")),
        }
    }

    // Half pure noise, half mutations of valid documents.
    let seeds: Vec<Vec<u8>> = blocks::all()
        .iter()
        .map(serialize_block)
        .chain([serialize_composition(&matcheck_core::testkit::designs::env_node())])
        .collect();
    let mut crashes = 0;
    let (mut accepted, mut rejected) = (0, 0);
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    for i in 0..10_000 {
        let buf: Vec<u8> = if i % 2 == 0 {
            let n = rng.gen_range(0..512);
            (0..n).map(|_| rng.gen()).collect()
        } else {
            let mut b = seeds[rng.gen_range(0..seeds.len())].clone();
            for _ in 0..rng.gen_range(1..8) {
                let at = rng.gen_range(0..b.len());
                match rng.gen_range(0..3) {
                    0 => b[at] = rng.gen(),
                    1 => {
                        b.remove(at);
                    }
                    _ => b.insert(at, b"{}[]\":,0-e.\\"[rng.gen_range(0..12)]),
                }
            }
            b
        };
        match catch_unwind(AssertUnwindSafe(|| {
            (parse_block(&buf).is_ok(), parse_composition(&buf).is_ok())
        })) {
            Ok((a, b)) => {
                if a || b {
                    accepted += 1;
                } else {
                    rejected += 1;
                }
            }
            Err(_) => crashes += 1,
        }
    }
    std::panic::set_hook(hook);
    if crashes > 0 {
        return Err(format!("{crashes} fuzz inputs panicked"));
    }
    Ok(format!(
        "500 blocks + 500 compositions; 10000 fuzz buffers, 0 crashes ({accepted} parsed, {rejected} diagnosed)"
    ))
}

fn end_to_end_demo() -> Outcome {
    let lib = load_lib("demo/blocks");
    let mut summary = Vec::new();
    for name in ["env_node", "gps_logger"] {
        let doc = load_doc(&root().join(format!("demo/{name}.mat.json")));
        let resolved = resolve(&doc, &lib).map_err(|d| format!("{name}: {d:?}"))?;
        let diags = check(&resolved);
        if diags.iter().any(|d| d.is_error()) {
            return Err(format!("{name}: {diags:?}"));
        }
        if name == "env_node" && diags.iter().any(|d| d.code == "W103") {
            return Err("env_node reports W103".into());
        }
        let merged = merge(&resolved, &diags).map_err(|e| format!("{name}: {e}"))?;
        let bom = String::from_utf8(export(&merged, ExportFormat::CsvBom)).unwrap();
        let rows = bom.lines().count() - 1;
        let expected: usize = resolved.instances.values().map(|i| i.block.components().len()).sum();
        if rows != expected {
            return Err(format!("{name}: {rows} BOM rows, {expected} block components"));
        }
        summary.push(format!("{name} {rows} rows"));
    }
    Ok(format!("clean, merged, conserved ({})", summary.join(", ")))
}

/// 20 instances: the sensor node plus extra sensors and a GPS on the same
/// rails and bus.
fn twenty_instances() -> CompositionDocument {
    let lib = blocks::library();
    let mut doc = matcheck_core::testkit::designs::env_node();
    let add = |doc: &mut CompositionDocument, name: &str, block: &str| {
        doc.add_instance(&lib, BlockInstance::new(name, block, "1.0")).unwrap();
        if block == "gps_module" {
            doc.attach_power(&lib, PortRef::new(name, "VCC"), "3V3").unwrap();
        } else {
            doc.attach_power(&lib, PortRef::new(name, "VDD"), "3V3").unwrap();
            if lib.get(block).unwrap().port("GND").is_some() {
                doc.attach_power(&lib, PortRef::new(name, "GND"), "GND").unwrap();
            }
        }
    };
    add(&mut doc, "gps", "gps_module");
    doc.connect_signal(&lib, PortRef::new("mcu", "TX"), PortRef::new("gps", "RX"), None).unwrap();
    doc.connect_signal(&lib, PortRef::new("mcu", "RX"), PortRef::new("gps", "TX"), None).unwrap();
    for i in 0..15 {
        let name = format!("s{i}");
        add(&mut doc, &name, "temp_sensor");
        for line in ["SDA", "SCL"] {
            doc.connect_signal(&lib, PortRef::new("mcu", line), PortRef::new(&name, line), None)
                .unwrap();
        }
    }
    assert_eq!(doc.instances.len(), 20);
    doc
}

fn post(addr: std::net::SocketAddr, path: &str, body: &[u8]) -> std::io::Result<(u16, Vec<u8>)> {
    let mut s = TcpStream::connect(addr)?;
    write!(
        s,
        "POST {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    )?;
    s.write_all(body)?;
    let mut resp = Vec::new();
    s.read_to_end(&mut resp)?;
    let text = String::from_utf8_lossy(&resp);
    let status = text.split(' ').nth(1).and_then(|c| c.parse().ok()).unwrap_or(0);
    let body = text.split_once("\r\n\r\n").map(|(_, b)| b.as_bytes().to_vec()).unwrap_or_default();
    Ok((status, body))
}

fn realtime_budget() -> Outcome {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let listener = runtime
        .block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))
        .map_err(|e| e.to_string())?;
    let addr = listener.local_addr().map_err(|e| e.to_string())?;
    let app = matcheck_service::router(Arc::new(blocks::library()), false);
    runtime.spawn(matcheck_service::serve(listener, app));

    let body = serialize_composition(&twenty_instances());
    let (status, first) = post(addr, "/api/v1/check", &body).map_err(|e| e.to_string())?;
    if status != 200 {
        return Err(format!("status {status}: {}", String::from_utf8_lossy(&first)));
    }
    let mut times = Vec::with_capacity(100);
    for _ in 0..100 {
        let start = Instant::now();
        let (status, _) = post(addr, "/api/v1/check", &body).map_err(|e| e.to_string())?;
        times.push(start.elapsed());
        if status != 200 {
            return Err(format!("status {status}"));
        }
    }
    times.sort();
    let median = (times[49] + times[50]) / 2;
    if median > Duration::from_millis(50) {
        return Err(format!("median {median:.2?}"));
    }
    Ok(format!("20 instances, 100 requests, median {median:.2?}, max {:.2?}", times[99]))
}

fn main() {
    // Cargo passes libtest flags; the only one honoured is --list.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("diagnostic catalog coverage", catalog_coverage),
        ("connectivity oracle equivalence", connectivity_oracle),
        ("i2c conflict oracle equivalence", i2c_oracle),
        ("determinism", determinism),
        ("round-trip and fuzz", round_trip),
        ("end-to-end demo", end_to_end_demo),
        ("real-time check budget", realtime_budget),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
