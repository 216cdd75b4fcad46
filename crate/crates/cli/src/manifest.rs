use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Params;
use crate::error::CliResult;
use crate::format::write_json;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance written next to every output file set. Passing the manifest
/// back as `--config` replays the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Params,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prng: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// UTC, RFC 3339. Taken from `SOURCE_DATE_EPOCH` when that is set so a
    /// whole output directory can be made byte-reproducible.
    pub timestamp: String,
    /// Files written by the run, relative to the manifest.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, parameters: Params) -> Self {
        Self {
            command: command.into(),
            parameters,
            version: aoi_harq::VERSION.into(),
            prng: None,
            seed: None,
            timestamp: timestamp(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        write_json(&dir.join(MANIFEST_FILE), self)
    }
}

fn timestamp() -> String {
    let epoch = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok());
    let when = match epoch.and_then(|s| chrono::DateTime::from_timestamp(s, 0)) {
        Some(t) => t,
        None => chrono::Utc::now(),
    };
    when.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}
