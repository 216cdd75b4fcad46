use std::io::Write;
use std::path::Path;

use aoi_harq::analytics::{evaluate, moments};
use aoi_harq::sim::{run as simulate, AgeTrace, RenewalRecord, SimConfig, SimOutput, PRNG_ID};
use aoi_harq::ProtocolKind;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Params;
use crate::error::{finite, io_err, CliError, CliResult};
use crate::format::{create_file, g17, write_json};
use crate::manifest::RunManifest;

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub avg_aoi: f64,
    pub avg_peak_aoi: f64,
    pub mean_t: f64,
    pub mean_t2: f64,
    pub mean_r: f64,
    pub mean_tau_v: f64,
}

impl Stats {
    fn relative_error(&self, exact: &Stats) -> Stats {
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        Stats {
            avg_aoi: rel(self.avg_aoi, exact.avg_aoi),
            avg_peak_aoi: rel(self.avg_peak_aoi, exact.avg_peak_aoi),
            mean_t: rel(self.mean_t, exact.mean_t),
            mean_t2: rel(self.mean_t2, exact.mean_t2),
            // R is identically zero when the last round never fails
            mean_r: if exact.mean_r == 0.0 {
                self.mean_r
            } else {
                rel(self.mean_r, exact.mean_r)
            },
            mean_tau_v: rel(self.mean_tau_v, exact.mean_tau_v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolSummary {
    pub protocol: ProtocolKind,
    pub simulated: Stats,
    pub closed_form: Stats,
    pub relative_error: Stats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub prng: &'static str,
    pub seed: u64,
    pub cycles: u64,
    pub protocols: Vec<ProtocolSummary>,
}

pub fn cycles_file(kind: ProtocolKind) -> String {
    format!("{kind}_cycles.csv")
}

pub fn trace_file(kind: ProtocolKind) -> String {
    format!("{kind}_trace.csv")
}

fn summarize(kind: ProtocolKind, p: &Params, out: &SimOutput) -> CliResult<ProtocolSummary> {
    let cfg = p.harq_config()?;
    let exact = evaluate(kind, &cfg)?;
    let m = moments(kind, &cfg)?;
    let closed_form = Stats {
        avg_aoi: exact.avg_aoi,
        avg_peak_aoi: exact.avg_peak_aoi,
        mean_t: m.mean_t,
        mean_t2: m.second_t,
        mean_r: m.mean_r,
        mean_tau_v: m.mean_tau_v,
    };
    let t = &out.totals;
    let simulated = Stats {
        avg_aoi: finite("simulated avg_aoi", out.result.avg_aoi)?,
        avg_peak_aoi: finite("simulated avg_peak_aoi", out.result.avg_peak_aoi)?,
        mean_t: t.mean_t(),
        mean_t2: t.mean_t2(),
        mean_r: t.mean_r(),
        mean_tau_v: t.mean_tau_v(),
    };
    Ok(ProtocolSummary {
        protocol: kind,
        relative_error: simulated.relative_error(&closed_form),
        simulated,
        closed_form,
    })
}

// Integer-only tables are written directly; they are the bulk of the output.
fn write_cycles(path: &Path, records: &[RenewalRecord]) -> CliResult<()> {
    let mut w = create_file(path)?;
    let mut body = || -> std::io::Result<()> {
        w.write_all(b"j,R,V,T,t_success\n")?;
        for (j, rec) in records.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{}",
                j + 1,
                rec.r,
                rec.v,
                rec.t,
                rec.t_success
            )?;
        }
        w.flush()
    };
    body().map_err(io_err(path))
}

fn write_trace(path: &Path, trace: &AgeTrace) -> CliResult<()> {
    let mut w = create_file(path)?;
    let mut body = || -> std::io::Result<()> {
        w.write_all(b"t,delta\n")?;
        for (k, delta) in trace.values.iter().enumerate() {
            writeln!(w, "{},{}", trace.start + k as u64, delta)?;
        }
        w.flush()
    };
    body().map_err(io_err(path))
}

/// Simulates every requested protocol with the same seed and writes the
/// cycle tables, optional traces, the summary and the manifest into `dir`.
pub fn run(p: &Params, dir: &Path) -> CliResult<Summary> {
    let sim = p.sim.clone().unwrap_or_default();
    let seed = sim
        .seed
        .ok_or_else(|| CliError::config("a seed (--seed) is required"))?;
    let cycles = sim
        .cycles
        .ok_or_else(|| CliError::config("a cycle count (--cycles) is required"))?;
    let cfg = p.harq_config()?;
    let sim_cfg = SimConfig::new(seed, cycles)?.with_trace(sim.trace.unwrap_or(false));

    let kinds = p.protocol().kinds();
    let outputs: Vec<SimOutput> = kinds
        .par_iter()
        .map(|&kind| simulate(kind, &cfg, &sim_cfg))
        .collect::<aoi_harq::Result<_>>()?;

    super::create_dir(dir)?;
    let mut manifest = RunManifest::new("simulate", p.resolved());
    manifest.prng = Some(PRNG_ID.into());
    manifest.seed = Some(seed);
    let mut protocols = Vec::with_capacity(kinds.len());
    for (&kind, out) in kinds.iter().zip(&outputs) {
        let name = cycles_file(kind);
        write_cycles(&dir.join(&name), &out.records)?;
        manifest.outputs.push(name);
        if let Some(trace) = &out.trace {
            let name = trace_file(kind);
            write_trace(&dir.join(&name), trace)?;
            manifest.outputs.push(name);
        }
        protocols.push(summarize(kind, p, out)?);
    }
    let summary = Summary {
        prng: PRNG_ID,
        seed,
        cycles,
        protocols,
    };
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    manifest.outputs.push(SUMMARY_FILE.into());
    manifest.write(dir)?;
    Ok(summary)
}

/// One line per protocol for the terminal.
pub fn report(summary: &Summary) -> String {
    summary
        .protocols
        .iter()
        .map(|s| {
            format!(
                "{}: avg_aoi {} (closed form {}, rel err {:.2e}), avg_peak_aoi {} (closed form {}, rel err {:.2e})\n",
                s.protocol,
                g17(s.simulated.avg_aoi),
                g17(s.closed_form.avg_aoi),
                s.relative_error.avg_aoi,
                g17(s.simulated.avg_peak_aoi),
                g17(s.closed_form.avg_peak_aoi),
                s.relative_error.avg_peak_aoi,
            )
        })
        .collect()
}
