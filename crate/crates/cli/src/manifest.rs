//! Run manifests.
//!
//! Timestamps honour `SOURCE_DATE_EPOCH`; with it set, two runs of the same
//! scenario and seed produce byte-identical manifests.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::error::{invalid, runtime, CliResult};
use crate::scenario::digest;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputFile {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// File name of the scenario, without directories.
    pub scenario: String,
    pub scenario_sha256: String,
    pub seed: u64,
    pub started_at: String,
    pub finished_at: String,
    /// Every file written by the run except this manifest.
    pub files: Vec<OutputFile>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub(crate) fn describe(name: &str, bytes: &[u8]) -> OutputFile {
    OutputFile {
        name: name.to_string(),
        bytes: bytes.len(),
        sha256: digest(bytes),
    }
}

/// Current time in RFC 3339, or `SOURCE_DATE_EPOCH` when it is set.
pub fn timestamp() -> CliResult<String> {
    let secs = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v
            .trim()
            .parse::<i64>()
            .map_err(|e| invalid(format!("SOURCE_DATE_EPOCH `{v}`: {e}")))?,
        Err(_) => SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_err(runtime)?
            .as_secs() as i64,
    };
    let t = OffsetDateTime::from_unix_timestamp(secs).map_err(runtime)?;
    t.format(&Rfc3339).map_err(runtime)
}
