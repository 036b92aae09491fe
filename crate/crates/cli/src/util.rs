//! Small filesystem and timing helpers shared by the subcommands.

use std::path::Path;
use std::time::Instant;

use pcseg_core::Result;

/// Write a file atomically: write to a sibling temp path, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Pretty JSON with a trailing newline, the shape every artifact uses.
pub fn to_json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(pcseg_core::Error::from)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Run a closure, returning its output and the elapsed milliseconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e3)
}
