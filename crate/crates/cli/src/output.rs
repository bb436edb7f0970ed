use aipw_design::{Error, SCHEMA_VERSION};
use serde::Serialize;
use serde_json::{Map, Value};
use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_DATA: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError { code: EXIT_VALIDATION, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError { code: EXIT_DATA, message: message.into() }
    }

    /// Maps a library error to an exit code. Degenerate and singular inputs
    /// count as data errors when `from_data` is set.
    pub fn from_core(e: Error, from_data: bool) -> Self {
        let code = match &e {
            Error::Infeasible { .. } => EXIT_INFEASIBLE,
            Error::Data(_) => EXIT_DATA,
            Error::Degenerate(_) | Error::Singular(_) if from_data => EXIT_DATA,
            _ => EXIT_VALIDATION,
        };
        CliError { code, message: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

pub fn format_of(path: Option<&Path>, default: Format) -> CliResult<Format> {
    let Some(path) = path else { return Ok(default) };
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("json") => Ok(Format::Json),
        Some("csv") => Ok(Format::Csv),
        _ => Err(CliError::validation(format!("--out {}: extension must be .json or .csv", path.display()))),
    }
}

/// Serializes `body` as an object and adds `schema_version` and `tool_version`.
pub fn envelope<T: Serialize>(body: &T) -> CliResult<Map<String, Value>> {
    let mut map = match serde_json::to_value(body).map_err(|e| CliError::data(e.to_string()))? {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    map.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    map.insert("tool_version".into(), Value::from(env!("CARGO_PKG_VERSION")));
    Ok(map)
}

fn open_out(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn write_json(value: &Map<String, Value>, path: Option<&Path>) -> CliResult<()> {
    let mut out = open_out(path)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::data(e.to_string()))?;
    quiet_pipe(writeln!(out, "{text}").and_then(|_| out.flush()))
}

/// A reader that hung up early (`| head`) is not an error.
fn quiet_pipe(r: io::Result<()>) -> CliResult<()> {
    match r {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(CliError::data(e.to_string())),
        _ => Ok(()),
    }
}

pub fn write_with<F>(path: Option<&Path>, f: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> Result<(), Error>,
{
    let mut out = open_out(path)?;
    f(&mut out).map_err(|e| CliError::from_core(e, true))?;
    quiet_pipe(out.flush())
}
