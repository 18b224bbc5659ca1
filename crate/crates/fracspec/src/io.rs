//! Reading observation series from text files.
//!
//! Format: one number per line. Blank lines and lines starting with `#`
//! (after leading whitespace) are skipped, so simulation output that echoes
//! its configuration as a comment header reads back directly.

use std::path::Path;

use crate::error::{Error, Result};
use crate::stats::Series;

/// Reads a series from a one-value-per-line text file.
pub fn read_series(path: impl AsRef<Path>) -> Result<Series> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let value: f64 = line.parse().map_err(|_| {
            Error::Parse(format!(
                "{}:{}: expected a number, got {line:?}",
                path.display(),
                idx + 1
            ))
        })?;
        if !value.is_finite() {
            return Err(Error::Parse(format!(
                "{}:{}: non-finite value {line:?}",
                path.display(),
                idx + 1
            )));
        }
        values.push(value);
    }
    Series::new(values)
}
