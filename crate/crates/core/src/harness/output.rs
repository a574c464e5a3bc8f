use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::HarnessError;

pub const CSV_SCHEMA_VERSION: u32 = 1;

pub fn csv_header_line(schema: &str) -> String {
    format!("# neuromesh-csv schema={schema} version={CSV_SCHEMA_VERSION}")
}

/// Serializes `rows` under a versioned comment line. Column names come from
/// the row type, so an empty table still gets its header.
pub fn csv_string<T: Serialize>(schema: &str, columns: &[&str], rows: &[T]) -> Result<String, HarnessError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(columns)?;
    for r in rows {
        w.serialize(r)?;
    }
    let body = w.into_inner().map_err(|e| HarnessError::Csv(e.into_error().into()))?;
    Ok(format!(
        "{}\n{}",
        csv_header_line(schema),
        String::from_utf8(body).expect("csv output is UTF-8")
    ))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(io)
}

pub fn write_csv<T: Serialize>(
    dir: &Path,
    schema: &str,
    columns: &[&str],
    rows: &[T],
) -> Result<PathBuf, HarnessError> {
    let path = dir.join(format!("{schema}.csv"));
    write_text(&path, &csv_string(schema, columns, rows)?)?;
    Ok(path)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub task: String,
    pub config_path: String,
    pub config_sha256: String,
    pub seed: u64,
    /// `config` or `NEUROMESH_SEED`.
    pub seed_source: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf, HarnessError> {
        let path = dir.join(format!("{}_manifest.toml", self.command));
        let text = toml::to_string(self).map_err(|e| HarnessError::Manifest(e.to_string()))?;
        write_text(&path, &text)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: u32,
        b: f64,
    }

    #[test]
    fn versioned_header_then_columns() {
        let s = csv_string("demo", &["a", "b"], &[Row { a: 1, b: 0.5 }]).unwrap();
        assert_eq!(s, "# neuromesh-csv schema=demo version=1\na,b\n1,0.5\n");
        let empty: &[Row] = &[];
        assert_eq!(
            csv_string("demo", &["a", "b"], empty).unwrap(),
            "# neuromesh-csv schema=demo version=1\na,b\n"
        );
    }

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
