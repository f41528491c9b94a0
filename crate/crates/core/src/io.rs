//! Small file helpers shared by the CSV/JSON writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn create_file(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Shortest representation that round-trips exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create_file(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_json(&text)
}

/// Parses JSON, turning serde's messages into config errors that name the
/// path of the offending field.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let msg = e.into_inner().to_string();
        // A missing field is reported at its parent.
        let named = msg
            .starts_with("missing field")
            .then(|| msg.split('`').nth(1))
            .flatten();
        let field = match (path.as_str(), named) {
            (".", Some(n)) => n.to_string(),
            (".", None) => "<document>".to_string(),
            (p, Some(n)) => format!("{p}.{n}"),
            (p, None) => p.to_string(),
        };
        Error::config(field, msg)
    })
}

/// Hex SHA-256 of a value's JSON serialization; recorded in output headers.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).unwrap_or_default();
    let digest = Sha256::digest(&bytes);
    hex::encode(&digest[..8])
}

/// Writes rows of already-formatted cells under a header, with optional
/// `# key: value` comment lines first.
pub fn write_csv(
    path: &Path,
    comments: &[(String, String)],
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut w = create_file(path)?;
    let io = |e| Error::io(path, e);
    for (k, v) in comments {
        writeln!(w, "# {k}: {v}").map_err(io)?;
    }
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for row in rows {
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    #[allow(dead_code)]
    struct Cfg {
        dt: f64,
    }

    #[test]
    fn json_errors_name_the_field() {
        match parse_json::<Cfg>(r#"{"dt": 1.0, "bogus": 2}"#) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "bogus"),
            other => panic!("unexpected {other:?}"),
        }
        match parse_json::<Cfg>("{}") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "dt"),
            other => panic!("unexpected {other:?}"),
        }
        #[derive(Debug, serde::Deserialize)]
        #[allow(dead_code)]
        struct Outer {
            inner: Cfg,
        }
        match parse_json::<Outer>(r#"{"inner": {"dt": "x"}}"#) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "inner.dt"),
            other => panic!("unexpected {other:?}"),
        }
        match parse_json::<Outer>(r#"{"inner": {}}"#) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "inner.dt"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn float_formatting_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-12, 4.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
