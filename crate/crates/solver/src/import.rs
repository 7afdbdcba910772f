use std::collections::HashMap;
use std::path::Path;

use crate::error::SolverError;
use crate::model::Model;

/// Parses solver output in `name value` lines into a value vector aligned with
/// `model`'s variables. Variables that are not mentioned are 0. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_values(model: &Model, text: &str) -> Result<Vec<f64>, SolverError> {
    let index: HashMap<&str, usize> = model
        .vars()
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect();
    let mut values = vec![0.0; model.num_vars()];
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(SolverError::Parse {
                line: n + 1,
                msg: format!("expected `name value`, got `{line}`"),
            });
        };
        let idx = *index.get(name).ok_or_else(|| SolverError::Parse {
            line: n + 1,
            msg: format!("unknown variable `{name}`"),
        })?;
        values[idx] = value.parse().map_err(|_| SolverError::Parse {
            line: n + 1,
            msg: format!("bad number `{value}`"),
        })?;
    }
    Ok(values)
}

pub fn import_values(model: &Model, path: impl AsRef<Path>) -> Result<Vec<f64>, SolverError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SolverError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_values(model, &text)
}
