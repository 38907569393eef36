//! Byte-stable CSV/JSON emission and atomic file replacement.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// 17 significant digits in scientific notation; `inf`/`-inf` for
/// infinities. NaN is refused.
pub fn number(x: f64) -> Result<String, CliError> {
    if x.is_nan() {
        return Err(CliError::Numeric("NaN reached the output".into()));
    }
    Ok(if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:.16e}")
    })
}

/// CSV text with a fixed header and `\n` line endings.
#[derive(Debug, Clone)]
pub struct Table {
    columns: usize,
    text: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self {
            columns: header.len(),
            text,
        }
    }

    pub fn row(&mut self, values: &[f64]) -> Result<(), CliError> {
        let cells = values.iter().map(|&v| number(v)).collect::<Result<Vec<_>, _>>()?;
        self.raw(&cells)
    }

    /// Row of preformatted cells.
    pub fn raw<S: AsRef<str>>(&mut self, cells: &[S]) -> Result<(), CliError> {
        if cells.len() != self.columns {
            return Err(CliError::Numeric(format!(
                "row has {} cells for {} columns",
                cells.len(),
                self.columns
            )));
        }
        let line: Vec<&str> = cells.iter().map(AsRef::as_ref).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.text.lines().count() - 1
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

pub fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Writes through a temporary sibling and renames it over `path`, so a
/// reader never sees a half-written file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<PathBuf, CliError> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Config(format!("{} is not a file path", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(path.to_path_buf())
}
