use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] privsearch::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("writing output: {0}")]
    Write(#[from] std::io::Error),
    #[error("encoding csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("encoding json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "UsageError",
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } | CliError::Write(_) => "IOError",
            CliError::Csv(_) | CliError::Json(_) => "EncodingError",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(_) => 3,
            CliError::Io { .. } | CliError::Write(_) | CliError::Csv(_) | CliError::Json(_) => 4,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Serialize)]
struct ErrorObject<'a> {
    kind: &'a str,
    message: String,
}

pub fn error_json(kind: &str, message: String) -> String {
    serde_json::to_string(&ErrorObject { kind, message }).expect("error object serializes")
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    tool_version: &'static str,
    subcommand: &'a str,
    config: &'a C,
    results: &'a R,
}

pub fn json_report<C: Serialize, R: Serialize>(subcommand: &str, config: &C, results: &R) -> Result<Vec<u8>, CliError> {
    let envelope = Envelope {
        tool_version: env!("CARGO_PKG_VERSION"),
        subcommand,
        config,
        results,
    };
    let mut out = serde_json::to_vec_pretty(&envelope)?;
    out.push(b'\n');
    Ok(out)
}

pub fn csv_table<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| CliError::Write(e.into_error()))
}

/// Writes to `out` via a sibling temporary file and a rename, or to stdout.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    let Some(path) = out else {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(bytes)?;
        return Ok(stdout.flush()?);
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}
