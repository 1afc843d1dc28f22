use std::io::{self, BufWriter, Write};
use std::path::Path;

use tempfile::NamedTempFile;

use crate::failure::Failure;

/// Writes `path` through a temporary file in the same directory, renaming it
/// into place only when `fill` succeeds.
pub fn write_atomically<F>(path: &Path, fill: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> Result<(), Failure>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = NamedTempFile::new_in(dir).map_err(|e| Failure::io(dir.display(), e))?;
    let mut writer = BufWriter::new(tmp);
    fill(&mut writer)?;
    let tmp = writer
        .into_inner()
        .map_err(|e| Failure::io(path.display(), e.error()))?;
    tmp.persist(path)
        .map_err(|e| Failure::io(path.display(), e.error))?;
    Ok(())
}

/// Writes to `path` atomically, or to standard output when `path` is `None`.
pub fn write_to<F>(path: Option<&Path>, fill: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> Result<(), Failure>,
{
    match path {
        Some(p) => write_atomically(p, fill),
        None => {
            let stdout = io::stdout();
            let mut lock = BufWriter::new(stdout.lock());
            fill(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}
