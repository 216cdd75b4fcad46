use std::io::Write;
use std::path::Path;
use std::time::Instant;

use aoi_harq::optimize::{
    exhaustive_search_capped, heuristic_search, SearchSpace, DEFAULT_WIDTH_CAP,
};
use aoi_harq::ProtocolKind;
use serde::Serialize;

use crate::config::{Method, Params};
use crate::error::{finite, CliError, CliResult};
use crate::format::write_json;
use crate::manifest::RunManifest;

pub const OUTPUT_FILE: &str = "optimize.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeRow {
    pub protocol: ProtocolKind,
    pub method: Method,
    pub n_optimal: Vec<u64>,
    pub m: usize,
    pub aoi_min: f64,
    pub evaluations: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeOutput {
    pub results: Vec<OptimizeRow>,
}

pub fn search_space(p: &Params, kind: ProtocolKind) -> CliResult<SearchSpace> {
    let s = p.search.clone().unwrap_or_default();
    let n_min = s
        .n_min
        .ok_or_else(|| CliError::config("--n-min is required"))?;
    let n_max = s
        .n_max
        .ok_or_else(|| CliError::config("--n-max is required"))?;
    let spec = p
        .channel_spec()?
        .ok_or_else(|| CliError::config("a channel (--snr-db or --gamma, with --k) is required"))?;
    Ok(SearchSpace::new(n_min, n_max, spec, p.delays(), kind)?)
}

/// Runs the configured search on one space.
pub fn search(p: &Params, space: &SearchSpace) -> CliResult<OptimizeRow> {
    let s = p.search.clone().unwrap_or_default();
    let method = s.method.unwrap_or(Method::Exhaustive);
    let start = Instant::now();
    let result = match method {
        Method::Exhaustive => {
            exhaustive_search_capped(space, s.width_cap.unwrap_or(DEFAULT_WIDTH_CAP))?
        }
        Method::Heuristic => heuristic_search(space)?,
    };
    let wall_time_s = start.elapsed().as_secs_f64();
    Ok(OptimizeRow {
        protocol: space.kind(),
        method,
        m: result.n_optimal.m(),
        n_optimal: result.n_optimal.lengths().to_vec(),
        aoi_min: finite("aoi_min", result.aoi_min)?,
        evaluations: result.evaluations,
        wall_time_s,
    })
}

pub fn run<W: Write>(p: &Params, out: Option<&Path>, mut stdout: W) -> CliResult<OptimizeOutput> {
    let results = p
        .protocol()
        .kinds()
        .iter()
        .map(|&kind| search(p, &search_space(p, kind)?))
        .collect::<CliResult<Vec<_>>>()?;
    let output = OptimizeOutput { results };
    let text = serde_json::to_string_pretty(&output).expect("serializable");
    writeln!(stdout, "{text}").map_err(crate::error::io_err("<stdout>"))?;
    if let Some(dir) = out {
        super::create_dir(dir)?;
        write_json(&dir.join(OUTPUT_FILE), &output)?;
        let mut manifest = RunManifest::new("optimize", p.resolved());
        manifest.outputs.push(OUTPUT_FILE.into());
        manifest.write(dir)?;
    }
    Ok(output)
}
