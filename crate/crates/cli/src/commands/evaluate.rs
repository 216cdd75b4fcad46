use std::io::Write;
use std::path::Path;

use aoi_harq::analytics::{
    case_reduction, evaluate, rateless_aoi, CaseReduction, FixedIncrement, DEFAULT_ROUND_CAP,
};
use aoi_harq::fbl::epsilon_at;
use aoi_harq::ProtocolKind;

use crate::config::{CaseKind, Params};
use crate::error::{finite, CliError, CliResult};
use crate::format::{create_file, csv_writer, g17};
use crate::manifest::RunManifest;

pub const OUTPUT_FILE: &str = "evaluate.csv";
pub const DEFAULT_RATELESS_TOL: f64 = 1e-9;

/// One evaluated protocol and formula family.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub protocol: String,
    pub formula: &'static str,
    pub avg_aoi: f64,
    /// Not defined for the classical case reductions.
    pub avg_peak_aoi: Option<f64>,
    /// Series terms summed, rateless only.
    pub terms: Option<usize>,
}

pub fn rows(p: &Params) -> CliResult<Vec<EvalRow>> {
    if let Some(case) = &p.case {
        let kind = case
            .kind
            .ok_or_else(|| CliError::config("--case is required with --n1, --eps1 or --m"))?;
        return Ok(vec![case_row(p, kind)?]);
    }
    if p.rateless.is_some() {
        return Ok(vec![rateless_row(p)?]);
    }
    let cfg = p.harq_config()?;
    p.protocol()
        .kinds()
        .iter()
        .map(|&kind| {
            let r = evaluate(kind, &cfg)?;
            Ok(EvalRow {
                protocol: kind.to_string(),
                formula: "unified",
                avg_aoi: finite("avg_aoi", r.avg_aoi)?,
                avg_peak_aoi: Some(finite("avg_peak_aoi", r.avg_peak_aoi)?),
                terms: None,
            })
        })
        .collect()
}

fn case_row(p: &Params, kind: CaseKind) -> CliResult<EvalRow> {
    let case = p.case.clone().unwrap_or_default();
    let n1 = || {
        case.n1
            .ok_or_else(|| CliError::config("--n1 is required for this case"))
    };
    // eps1 may be given directly or derived from the channel at n1.
    let eps1 = || -> CliResult<f64> {
        match (case.eps1, p.channel_spec()?) {
            (Some(e), _) => Ok(e),
            (None, Some(spec)) => Ok(epsilon_at(&spec, n1()?)),
            (None, None) => Err(CliError::config(
                "--eps1 or a channel is required for this case",
            )),
        }
    };
    let reduction = match kind {
        CaseKind::NonArq => CaseReduction::NonArq {
            n1: n1()?,
            eps1: eps1()?,
        },
        CaseKind::Tarq => CaseReduction::TruncatedArq {
            n1: n1()?,
            eps1: eps1()?,
            m: case
                .m
                .ok_or_else(|| CliError::config("--m is required for tarq"))?,
        },
        CaseKind::ClassicalArq => CaseReduction::ClassicalArq {
            n1: n1()?,
            eps1: eps1()?,
        },
        CaseKind::HarqIr => {
            let cfg = p.harq_config()?;
            CaseReduction::HarqIr {
                n: cfg.n().clone(),
                e: cfg.e().clone(),
            }
        }
    };
    Ok(EvalRow {
        protocol: ProtocolKind::Reactive.to_string(),
        formula: "case-reduction",
        avg_aoi: finite("avg_aoi", case_reduction(&reduction)?)?,
        avg_peak_aoi: None,
        terms: None,
    })
}

fn rateless_row(p: &Params) -> CliResult<EvalRow> {
    let r = p.rateless.clone().unwrap_or_default();
    let spec = p.channel_spec()?.ok_or_else(|| {
        CliError::config("rateless evaluation needs a channel (--snr-db or --gamma, with --k)")
    })?;
    let tol = r.tol.unwrap_or(DEFAULT_RATELESS_TOL);
    if !(tol > 0.0 && tol < 1.0) {
        return Err(CliError::config("rateless tolerance must lie in (0, 1)"));
    }
    let step = r.step.unwrap_or(1);
    if step == 0 {
        return Err(CliError::config("rateless step must be at least 1"));
    }
    let out = rateless_aoi(
        &FixedIncrement(step),
        r.n1.unwrap_or(100),
        &spec,
        &p.delays(),
        tol,
        r.round_cap.unwrap_or(DEFAULT_ROUND_CAP),
    )?;
    Ok(EvalRow {
        protocol: "rateless".into(),
        formula: "rateless",
        avg_aoi: finite("avg_aoi", out.result.avg_aoi)?,
        avg_peak_aoi: Some(finite("avg_peak_aoi", out.result.avg_peak_aoi)?),
        terms: Some(out.terms),
    })
}

fn write_rows<W: Write>(rows: &[EvalRow], inner: W) -> CliResult<()> {
    let mut w = csv_writer(inner);
    w.write_record(["protocol", "formula", "avg_aoi", "avg_peak_aoi", "terms"])?;
    for r in rows {
        w.write_record([
            r.protocol.clone(),
            r.formula.to_string(),
            g17(r.avg_aoi),
            r.avg_peak_aoi.map(g17).unwrap_or_default(),
            r.terms.map(|t| t.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Prints the rows as CSV and, with `out`, also writes them and a manifest.
pub fn run<W: Write>(p: &Params, out: Option<&Path>, stdout: W) -> CliResult<()> {
    let rows = rows(p)?;
    write_rows(&rows, stdout)?;
    if let Some(dir) = out {
        super::create_dir(dir)?;
        write_rows(&rows, create_file(&dir.join(OUTPUT_FILE))?)?;
        let mut manifest = RunManifest::new("evaluate", p.resolved());
        manifest.outputs.push(OUTPUT_FILE.into());
        manifest.write(dir)?;
    }
    Ok(())
}
