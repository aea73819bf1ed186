use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::chain::BlockBundle;

use super::store::{ChainStore, IngestMode};

/// Append-only file of accepted blocks, one JSON record per line.
#[derive(Debug)]
pub struct ChainLog {
    path: PathBuf,
    file: File,
}

impl ChainLog {
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(ChainLog { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, bundle: &BlockBundle) -> io::Result<()> {
        let mut line = serde_json::to_string(bundle).map_err(io::Error::other)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()
    }

    /// Reads every record. A missing file yields no records.
    pub fn read_all(path: impl AsRef<Path>) -> io::Result<Vec<BlockBundle>> {
        let file = match File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        let mut out = Vec::new();
        for (index, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bundle = serde_json::from_str(&line).map_err(|e| {
                io::Error::new(io::ErrorKind::InvalidData, format!("record {}: {e}", index + 1))
            })?;
            out.push(bundle);
        }
        Ok(out)
    }

    /// Rebuilds a store by replaying the log. Records that no longer
    /// validate are skipped and counted.
    pub fn replay(path: impl AsRef<Path>, now: u64) -> io::Result<(ChainStore, usize)> {
        let mut store = ChainStore::new();
        let mut skipped = 0;
        for bundle in Self::read_all(path)? {
            if store.ingest(bundle, now, IngestMode::Replay).is_err() {
                skipped += 1;
            }
        }
        Ok((store, skipped))
    }
}
