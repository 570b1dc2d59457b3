use std::path::Path;

use tempfile::NamedTempFile;

use crate::error::{CliError, Result};
use crate::runner::Table;

/// Serializes `table` as CSV with a header row.
pub fn to_csv_bytes(table: &Table) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))
}

/// Writes the table to `path` atomically: the data goes to a sibling
/// temporary file that is renamed into place only once complete.
pub fn write_csv(path: &Path, table: &Table) -> Result<()> {
    let bytes = to_csv_bytes(table)?;
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    std::io::Write::write_all(&mut tmp, &bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
