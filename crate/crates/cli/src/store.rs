use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Command, ExperimentConfig};

pub const MANIFEST: &str = "manifest.json";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
const CHUNK_DIR: &str = "chunks";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub version: String,
    pub command: Command,
    pub config: ExperimentConfig,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    pub complete: bool,
    /// sha256 of every file written by the run, keyed by path relative to
    /// the output directory.
    pub files: BTreeMap<String, String>,
    /// Finished stream ranges `[start, end)` per `(command, n)` cell.
    pub completed: BTreeMap<String, Vec<[u64; 2]>>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn read_manifest(dir: &Path) -> Result<Option<RunManifest>> {
    let path = dir.join(MANIFEST);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?))
}

/// Files whose content no longer matches the manifest checksum.
pub fn verify(dir: &Path) -> Result<Vec<String>> {
    let Some(manifest) = read_manifest(dir)? else {
        bail!("no {MANIFEST} in {}", dir.display());
    };
    let mut bad = Vec::new();
    for (name, sum) in &manifest.files {
        match fs::read(dir.join(name)) {
            Ok(bytes) if sha256_hex(&bytes) == *sum => {}
            _ => bad.push(name.clone()),
        }
    }
    Ok(bad)
}

/// Output directory of one run: persisted sample chunks, result files and
/// the manifest describing them.
#[derive(Debug)]
pub struct RunStore {
    dir: PathBuf,
    manifest: RunManifest,
    chunk: usize,
}

impl RunStore {
    /// Open `cfg`'s output directory, keeping finished chunks of an earlier
    /// run with the same configuration and discarding those of any other.
    pub fn open(cfg: &ExperimentConfig) -> Result<Self> {
        let dir = cfg.resolved_output_dir();
        fs::create_dir_all(dir.join(CHUNK_DIR)).with_context(|| format!("creating {}", dir.display()))?;
        let fresh = RunManifest {
            version: VERSION.to_string(),
            command: cfg.command,
            config: cfg.clone(),
            started_unix: now_unix(),
            finished_unix: None,
            complete: false,
            files: BTreeMap::new(),
            completed: BTreeMap::new(),
        };
        let mut manifest = fresh.clone();
        if let Some(old) = read_manifest(&dir).ok().flatten() {
            if old.version == VERSION && old.config.identity() == cfg.identity() {
                manifest.files = old.files;
                manifest.completed = old.completed;
            } else {
                for name in old.files.keys() {
                    let _ = fs::remove_file(dir.join(name));
                }
            }
        }
        let mut store = Self { dir, manifest, chunk: cfg.chunk };
        store.drop_corrupt_chunks();
        store.save()?;
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    fn chunk_name(cell: &str, start: u64, end: u64) -> String {
        format!("{CHUNK_DIR}/{cell}.{start}-{end}.f64")
    }

    fn drop_corrupt_chunks(&mut self) {
        let dir = self.dir.clone();
        let files = &mut self.manifest.files;
        for (cell, ranges) in self.manifest.completed.iter_mut() {
            ranges.retain(|&[start, end]| {
                let name = Self::chunk_name(cell, start, end);
                let ok = files
                    .get(&name)
                    .is_some_and(|sum| fs::read(dir.join(&name)).is_ok_and(|b| sha256_hex(&b) == *sum));
                if !ok {
                    files.remove(&name);
                }
                ok
            });
        }
    }

    fn save(&self) -> Result<()> {
        let tmp = self.dir.join(format!("{MANIFEST}.tmp"));
        let text = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(&tmp, text).with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, self.dir.join(MANIFEST))?;
        Ok(())
    }

    /// Write a result file and record its checksum.
    pub fn write_file(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.files.insert(name.to_string(), sha256_hex(bytes));
        self.save()
    }

    /// Records of `width` values for streams `0..streams` of `cell`, in
    /// stream order. Chunks persisted by an earlier identical run are
    /// reused; the rest are computed by `compute(range)` and persisted.
    pub fn cell<F>(&mut self, cell: &str, streams: u64, width: usize, mut compute: F) -> Result<Vec<f64>>
    where
        F: FnMut(std::ops::Range<u64>) -> Result<Vec<f64>>,
    {
        let chunk = self.chunk as u64;
        let mut out = Vec::with_capacity(streams as usize * width);
        let mut start = 0;
        while start < streams {
            let end = (start + chunk).min(streams);
            let name = Self::chunk_name(cell, start, end);
            let done = self.manifest.completed.get(cell).is_some_and(|r| r.contains(&[start, end]));
            let values = if done {
                let bytes = fs::read(self.dir.join(&name))?;
                bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect()
            } else {
                let values = compute(start..end)?;
                if values.len() != (end - start) as usize * width {
                    bail!("cell {cell} produced {} values for {} streams", values.len(), end - start);
                }
                let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
                self.write_file(&name, &bytes)?;
                let ranges = self.manifest.completed.entry(cell.to_string()).or_default();
                ranges.push([start, end]);
                ranges.sort_unstable();
                self.save()?;
                values
            };
            out.extend(values);
            start = end;
        }
        Ok(out)
    }

    pub fn finish(mut self) -> Result<RunManifest> {
        self.manifest.complete = true;
        self.manifest.finished_unix = Some(now_unix());
        self.save()?;
        Ok(self.manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dir: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(Command::Simulate);
        cfg.output_dir = Some(dir.to_path_buf());
        cfg.chunk = 3;
        cfg
    }

    #[test]
    fn chunks_are_reused_by_identical_runs() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = config(tmp.path());
        let mut calls = 0;
        let mut store = RunStore::open(&cfg).unwrap();
        let first = store
            .cell("x", 7, 2, |r| {
                calls += 1;
                Ok(r.flat_map(|s| [s as f64, -(s as f64)]).collect())
            })
            .unwrap();
        assert_eq!(calls, 3);
        assert_eq!(first.len(), 14);
        store.finish().unwrap();

        let mut store = RunStore::open(&cfg).unwrap();
        let again = store.cell("x", 7, 2, |_| panic!("recomputed")).unwrap();
        assert_eq!(first, again);
        assert!(verify(tmp.path()).unwrap().is_empty());
    }

    #[test]
    fn edited_chunks_are_detected_and_recomputed() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = config(tmp.path());
        let mut store = RunStore::open(&cfg).unwrap();
        store.cell("x", 4, 1, |r| Ok(r.map(|s| s as f64).collect())).unwrap();
        let chunk = tmp.path().join(RunStore::chunk_name("x", 0, 3));
        fs::write(&chunk, [0u8; 24]).unwrap();
        assert_eq!(verify(tmp.path()).unwrap(), vec![RunStore::chunk_name("x", 0, 3)]);

        let mut recomputed = Vec::new();
        let mut store = RunStore::open(&cfg).unwrap();
        store
            .cell("x", 4, 1, |r| {
                recomputed.push(r.clone());
                Ok(r.map(|s| s as f64).collect())
            })
            .unwrap();
        assert_eq!(recomputed, vec![0..3]);
    }

    #[test]
    fn a_different_config_starts_over() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = config(tmp.path());
        let mut store = RunStore::open(&cfg).unwrap();
        store.cell("x", 3, 1, |r| Ok(r.map(|s| s as f64).collect())).unwrap();
        let other = ExperimentConfig { seed: 1, ..cfg };
        let store = RunStore::open(&other).unwrap();
        assert!(store.manifest().completed.is_empty());
        assert!(!tmp.path().join(RunStore::chunk_name("x", 0, 3)).exists());
    }
}
