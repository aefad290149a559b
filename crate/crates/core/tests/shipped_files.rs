//! The JSON files under `demo/` and `fixtures/` are serializations of the
//! reference designs in `testkit`. Run with `MATCHECK_REGENERATE=1` to
//! rewrite them after changing a reference design.

use std::path::{Path, PathBuf};

use matcheck_core::testkit::{blocks, designs};
use matcheck_core::{checker::CHECK_CODES, serialize_block, serialize_composition};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn expect_file(path: PathBuf, bytes: Vec<u8>) {
    if std::env::var_os("MATCHECK_REGENERATE").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &bytes).unwrap();
        return;
    }
    let on_disk = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(on_disk == bytes, "{} is stale; regenerate it", path.display());
}

#[test]
fn demo_files_match_reference_designs() {
    let demo = [
        blocks::mcu33(),
        blocks::ldo_3v3(),
        blocks::temp_sensor(),
        blocks::i2c_pullups(),
        blocks::gps_module(),
    ];
    for b in demo {
        let path = root().join(format!("demo/blocks/{}.block.json", b.block_id()));
        expect_file(path, serialize_block(&b));
    }
    for doc in [designs::env_node(), designs::gps_logger()] {
        let path = root().join(format!("demo/{}.mat.json", doc.name));
        expect_file(path, serialize_composition(&doc));
    }
}

#[test]
fn fixture_files_match_reference_designs() {
    for b in blocks::all() {
        let path = root().join(format!("fixtures/blocks/{}.block.json", b.block_id()));
        expect_file(path, serialize_block(&b));
    }
    for code in CHECK_CODES {
        let doc = designs::catalog(code).unwrap();
        let path = root().join(format!("fixtures/catalog/{}.mat.json", code.to_ascii_lowercase()));
        expect_file(path, serialize_composition(&doc));
    }
}
