//! Block libraries: directories of `*.block.json` packages.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::model::SchematicBlock;
use crate::parser::{parse_block, ParseDiagnostic};

pub const BLOCK_SUFFIX: &str = ".block.json";

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid block package")]
    Parse {
        path: PathBuf,
        diagnostics: Vec<ParseDiagnostic>,
    },
}

/// A library entry replaced by a later directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shadowed {
    pub block_id: String,
    pub kept: PathBuf,
    pub replaced: PathBuf,
}

/// Immutable map from block id to block.
#[derive(Debug, Clone, Default)]
pub struct Library {
    blocks: BTreeMap<String, Arc<SchematicBlock>>,
}

impl Library {
    pub fn from_blocks(blocks: impl IntoIterator<Item = SchematicBlock>) -> Self {
        let mut lib = Self::default();
        for b in blocks {
            lib.insert(b);
        }
        lib
    }

    /// Inserts a block, returning the one it replaced.
    pub fn insert(&mut self, block: SchematicBlock) -> Option<Arc<SchematicBlock>> {
        self.blocks
            .insert(block.block_id().to_owned(), Arc::new(block))
    }

    pub fn get(&self, block_id: &str) -> Option<&Arc<SchematicBlock>> {
        self.blocks.get(block_id)
    }

    /// Versions are opaque text and must match exactly.
    pub fn get_version(&self, block_id: &str, version: &str) -> Option<&Arc<SchematicBlock>> {
        self.get(block_id).filter(|b| b.version() == version)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Blocks in block-id order.
    pub fn iter(&self) -> impl Iterator<Item = &Arc<SchematicBlock>> {
        self.blocks.values()
    }

    /// Loads every `*.block.json` in the given directories (non-recursive).
    /// Later directories shadow earlier ones on block-id collisions.
    pub fn load_dirs<P: AsRef<Path>>(dirs: &[P]) -> Result<(Self, Vec<Shadowed>), LibraryError> {
        let mut lib = Self::default();
        let mut origin: BTreeMap<String, PathBuf> = BTreeMap::new();
        let mut shadowed = Vec::new();
        for dir in dirs {
            let dir = dir.as_ref();
            let io = |source| LibraryError::Io {
                path: dir.to_path_buf(),
                source,
            };
            let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(io)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.ends_with(BLOCK_SUFFIX))
                })
                .collect();
            files.sort();
            for path in files {
                let bytes = std::fs::read(&path).map_err(|source| LibraryError::Io {
                    path: path.clone(),
                    source,
                })?;
                let block = parse_block(&bytes).map_err(|diagnostics| LibraryError::Parse {
                    path: path.clone(),
                    diagnostics,
                })?;
                let id = block.block_id().to_owned();
                if let Some(prev) = origin.insert(id.clone(), path.clone()) {
                    shadowed.push(Shadowed {
                        block_id: id,
                        kept: path.clone(),
                        replaced: prev,
                    });
                }
                lib.insert(block);
            }
        }
        Ok((lib, shadowed))
    }
}
