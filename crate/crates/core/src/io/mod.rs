// SPDX-License-Identifier: Apache-2.0

//! Versioned JSON file formats and CSV export.
//!
//! Numbers are written in shortest round-trip decimal form, so loading a
//! saved file reproduces every `f64` bit for bit. Writes go to a temporary
//! file in the target directory that is renamed into place only once fully
//! written; a failed write never leaves a partial file behind.

mod bundle;
mod csv;
mod scenario;
mod tokens;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bundle::{bundle_to_json, load_bundle, parse_bundle, save_bundle, Bundle};
pub use csv::{metrics_csv, plot_data_csv, samples_csv};
pub use scenario::{log_to_json, parse_log, parse_scenario, scenario_to_json};
pub use tokens::{load_tokens, parse_tokens, save_tokens, tokens_to_json};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Units {
    length: String,
    time: String,
    angle: String,
}

impl Units {
    fn si() -> Self {
        Self {
            length: "meters".into(),
            time: "seconds".into(),
            angle: "radians".into(),
        }
    }

    fn check(&self) -> Result<()> {
        if *self != Self::si() {
            return Err(Error::validation(
                "units must be {length: meters, time: seconds, angle: radians}",
            ));
        }
        Ok(())
    }
}

fn check_version(version: u32) -> Result<()> {
    if version != FORMAT_VERSION {
        return Err(Error::validation(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    Ok(())
}

/// Deserializes `text`, reporting the JSON path of the first offending field.
pub(crate) fn from_json<T: DeserializeOwned>(text: &str, source: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| Error::Parse {
        path: e.path().to_string(),
        message: format!("{source}: {}", e.inner()),
    })?;
    de.end().map_err(|e| Error::Parse {
        path: ".".into(),
        message: format!("{source}: {e}"),
    })?;
    Ok(value)
}

/// Pretty JSON with a trailing newline.
pub(crate) fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

/// Writes `contents` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Loads any JSON document this crate can deserialize (e.g. a [`MetricReport`](crate::MetricReport)).
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json(&read_text(path)?, &path.display().to_string())
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write_atomic(path, to_json(value).as_bytes())
}
