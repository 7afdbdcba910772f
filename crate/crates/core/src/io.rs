//! Versioned JSON documents for instances and schedules.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::domain::{FleetSchedule, Instance};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("malformed JSON at byte {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("unsupported schema_version {found} (expected {SCHEMA_VERSION})")]
    Version { found: Value },
    #[error("document does not match the schema: {0}")]
    Schema(String),
    #[error("invalid instance: {0}")]
    Invalid(#[from] crate::domain::DomainError),
}

#[derive(Serialize)]
struct Versioned<'a, T> {
    schema_version: u64,
    #[serde(flatten)]
    body: &'a T,
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

pub fn to_json<T: Serialize>(body: &T) -> String {
    let doc = Versioned {
        schema_version: SCHEMA_VERSION,
        body,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("documents serialize");
    s.push('\n');
    s
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, IoError> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| IoError::Syntax {
        offset: byte_offset(text, e.line(), e.column()),
        msg: e.to_string(),
    })?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| IoError::Schema("top level must be an object".into()))?;
    match obj.remove("schema_version") {
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION) => {}
        Some(found) => return Err(IoError::Version { found }),
        None => return Err(IoError::Schema("missing schema_version".into())),
    }
    serde_json::from_value(value).map_err(|e| IoError::Schema(e.to_string()))
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, IoError> {
    let inst: Instance = from_json(&read(path.as_ref())?)?;
    inst.validate()?;
    Ok(inst)
}

pub fn save_instance(path: impl AsRef<Path>, instance: &Instance) -> Result<(), IoError> {
    write(path.as_ref(), &to_json(instance))
}

pub fn load_schedule(path: impl AsRef<Path>) -> Result<FleetSchedule, IoError> {
    from_json(&read(path.as_ref())?)
}

pub fn save_schedule(path: impl AsRef<Path>, schedule: &FleetSchedule) -> Result<(), IoError> {
    write(path.as_ref(), &to_json(schedule))
}
