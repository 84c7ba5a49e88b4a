use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::CliError;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("cannot write {}: {e}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", dir.display())))
}

/// Writes `dir/name` through a temporary file in the same directory and a
/// rename, so readers never observe a partial file.
pub fn write_atomic<F>(dir: &Path, name: &str, fill: F) -> Result<PathBuf, CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    let target = dir.join(name);
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| io_err(&target, e))?;
    fill(tmp.as_file_mut())?;
    tmp.as_file_mut().flush().map_err(|e| io_err(&target, e))?;
    tmp.persist(&target).map_err(|e| io_err(&target, e.error))?;
    Ok(target)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    write_atomic(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| CliError::Runtime(format!("encoding {name}: {e}")))?;
        w.write_all(b"\n")
            .map_err(|e| CliError::Runtime(format!("writing {name}: {e}")))
    })
}
