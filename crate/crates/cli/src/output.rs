//! Output plumbing: atomic file writes and the version header that every
//! artifact carries.

use std::fs;
use std::path::Path;

use anyhow::Context;

pub const BUILD_ID: &str = concat!("gasket-walk ", env!("CARGO_PKG_VERSION"));

/// Header line for CSV artifacts.
pub fn csv_header() -> String {
    format!("# {}\n", BUILD_ID)
}

/// Writes via a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, content: &str) -> anyhow::Result<()> {
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    fs::write(&tmp, content)
        .with_context(|| format!("writing temporary file {}", tmp.display()))?;
    fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} into place", path.display()))?;
    Ok(())
}

/// Writes to the given path atomically, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => write_atomic(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}
