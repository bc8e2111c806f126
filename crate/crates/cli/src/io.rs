//! Output plumbing: atomic writes, run manifests, and the thread cap.

use anyhow::{Context, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes `bytes` to `path` via a temp file and rename, creating parent
/// directories as needed.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    let nonce = TEMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp.{}.{}", std::process::id(), nonce));
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Execution record written next to every command's outputs. The wall time
/// here is the only timestamp any subcommand emits; payload outputs are
/// byte-stable across reruns.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub config: serde_json::Value,
    pub wall_time_ms: f64,
}

pub struct ManifestBuilder {
    command: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    config: serde_json::Value,
    started: Instant,
}

impl ManifestBuilder {
    pub fn start() -> Self {
        let command = std::env::args().collect::<Vec<_>>().join(" ");
        ManifestBuilder {
            command,
            inputs: Vec::new(),
            outputs: Vec::new(),
            config: serde_json::Value::Null,
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn config<T: Serialize>(&mut self, value: &T) {
        self.config = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
    }

    /// Writes the manifest as `<anchor>.manifest.json` (or
    /// `manifest.json` inside `anchor` when it is a directory).
    pub fn write(mut self, anchor: &Path) -> Result<()> {
        self.inputs.sort();
        self.outputs.sort();
        let manifest = RunManifest {
            command: self.command,
            inputs: self.inputs,
            outputs: self.outputs,
            config: self.config,
            wall_time_ms: self.started.elapsed().as_secs_f64() * 1e3,
        };
        let path = if anchor.is_dir() {
            anchor.join("manifest.json")
        } else {
            let mut name = anchor.as_os_str().to_owned();
            name.push(".manifest.json");
            PathBuf::from(name)
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        atomic_write(&path, &bytes)
    }
}

/// Worker cap: `CRAFT_KERNELS_THREADS` when set (minimum 1), otherwise the
/// machine's available parallelism.
pub fn thread_cap() -> usize {
    if let Ok(raw) = std::env::var("CRAFT_KERNELS_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Applies `f` to every item on up to [`thread_cap`] scoped workers,
/// preserving input order in the results.
pub fn for_each_parallel<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = thread_cap().min(items.len()).max(1);
    if workers <= 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    let mut results: Vec<Option<R>> = std::iter::repeat_with(|| None).take(items.len()).collect();
    std::thread::scope(|scope| {
        for (item_chunk, slot_chunk) in items.chunks(chunk).zip(results.chunks_mut(chunk)) {
            let f = &f;
            scope.spawn(move || {
                for (item, slot) in item_chunk.iter().zip(slot_chunk.iter_mut()) {
                    *slot = Some(f(item));
                }
            });
        }
    });
    results.into_iter().map(|r| r.unwrap()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_preserves_order() {
        let items: Vec<u64> = (0..97).collect();
        let out = for_each_parallel(&items, |x| x * 2);
        assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
    }

    #[test]
    fn atomic_write_creates_parents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b/c.txt");
        atomic_write(&path, b"hello").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"hello");
    }
}
