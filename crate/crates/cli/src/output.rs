use std::env;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::CliError;

pub const OUT_DIR_VAR: &str = "CONTAIN_OUT_DIR";

/// Where a relative output path lands: under `$CONTAIN_OUT_DIR` when it is
/// set, otherwise under `base`. Absolute paths are used as given.
pub fn resolve(path: &Path, base: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match env::var_os(OUT_DIR_VAR) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => base.join(path),
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Io(parent.to_path_buf(), e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

/// Writes to `path` (resolved against the working directory) or stdout.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(&resolve(p, Path::new("")), contents),
        None => io::stdout()
            .lock()
            .write_all(contents.as_bytes())
            .map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e)),
    }
}

/// A versioned CSV document: `# format=1`, the header, then the rows, all
/// LF-terminated.
pub fn csv_document<I: IntoIterator<Item = String>>(header: &str, rows: I) -> String {
    let mut out = String::from("# format=1\n");
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}
