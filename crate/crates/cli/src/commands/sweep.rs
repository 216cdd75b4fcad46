//! Grid sweeps. Every grid point is an ordinary single-point config, so a
//! one-point sweep reproduces `evaluate` or `optimize` exactly. Rows come out
//! in grid order (SNR, then tau_p, then m) whatever the worker count.

use std::path::Path;

use aoi_harq::analytics::evaluate;
use aoi_harq::{BlockAssignment, DelayProfile, ProtocolKind};
use rayon::prelude::*;

use super::optimize::{search, search_space};
use crate::config::{
    db_to_linear, ChannelParams, Method, Params, Preset, ProtocolChoice, SearchParams, SweepParams,
    SweepTask,
};
use crate::error::{finite, CliError, CliResult};
use crate::format::{create_file, csv_writer, g17, join_u64};
use crate::manifest::RunManifest;

pub const OUTPUT_FILE: &str = "sweep.csv";

/// Grid and constants of the figure presets; tau_p axes use unit steps
/// unless noted.
pub fn preset_params(preset: Preset) -> Params {
    let channel = Some(ChannelParams {
        snr_db: None,
        gamma: None,
        k: Some(100),
    });
    let range = |lo: u64, hi: u64| {
        Some(SearchParams {
            n_min: Some(lo),
            n_max: Some(hi),
            method: Some(Method::Exhaustive),
            width_cap: None,
        })
    };
    match preset {
        // Each point is a 2^21 search, so tau_p advances in steps of 10.
        Preset::Fig3 => Params {
            protocol: Some(ProtocolChoice::Both),
            channel,
            delays: Some(DelayProfile::new(20, 0, 30, 1)),
            search: range(100, 120),
            sweep: Some(SweepParams {
                preset: Some(preset),
                task: Some(SweepTask::Optimize),
                snr_db: Some(vec![0.7, 1.3, 1.9]),
                tau_p: Some((0..=200).step_by(10).collect()),
                tau_f_offset: Some(1),
                ..Default::default()
            }),
            ..Default::default()
        },
        Preset::Fig5 => Params {
            channel,
            delays: Some(DelayProfile::new(20, 0, 30, 1)),
            sweep: Some(SweepParams {
                preset: Some(preset),
                task: Some(SweepTask::Evaluate),
                snr_db: Some(vec![0.0, 1.0, 2.0, 3.0]),
                tau_p: Some((0..=200).collect()),
                m: Some((1..=20).collect()),
                tau_f_offset: Some(1),
                n1: Some(100),
                step: Some(1),
            }),
            ..Default::default()
        },
        Preset::Fig6 => Params {
            channel,
            delays: Some(DelayProfile::new(20, 50, 200, 51)),
            search: range(100, 120),
            sweep: Some(SweepParams {
                preset: Some(preset),
                task: Some(SweepTask::Compare),
                snr_db: Some((0..=12).map(|i| i as f64 * 0.25).collect()),
                tau_p: Some(vec![50]),
                tau_f_offset: Some(1),
                ..Default::default()
            }),
            ..Default::default()
        },
    }
}

/// Fills in the preset named in `p` underneath the given settings.
pub fn with_preset(p: Params) -> Params {
    match p.sweep.as_ref().and_then(|s| s.preset) {
        Some(preset) => preset_params(preset).overlay(p),
        None => p,
    }
}

/// One grid point: the config evaluated there and its m, if any.
struct Point {
    params: Params,
    m: Option<usize>,
}

fn grid(p: &Params) -> CliResult<Vec<Point>> {
    let sweep = p.sweep.clone().unwrap_or_default();
    let base = p.delays();
    let channel = p.channel.clone().unwrap_or_default();

    let snrs: Vec<ChannelParams> = match &sweep.snr_db {
        Some(grid) => grid
            .iter()
            .map(|&db| ChannelParams {
                snr_db: Some(db),
                gamma: None,
                k: channel.k,
            })
            .collect(),
        None => vec![channel],
    };
    let tau_ps = sweep.tau_p.clone().unwrap_or_else(|| vec![base.tau_p]);
    let ms: Vec<Option<usize>> = match (&sweep.m, sweep.task.unwrap_or(SweepTask::Evaluate)) {
        (Some(ms), SweepTask::Evaluate) => ms.iter().copied().map(Some).collect(),
        (Some(_), _) => {
            return Err(CliError::config(
                "an m grid only applies to the evaluate task",
            ))
        }
        (None, _) => vec![None],
    };

    let mut points = Vec::with_capacity(snrs.len() * tau_ps.len() * ms.len());
    for c in &snrs {
        for &tau_p in &tau_ps {
            let tau_f = sweep.tau_f_offset.map_or(base.tau_f, |off| tau_p + off);
            for &m in &ms {
                let mut params = p.clone();
                params.channel = Some(c.clone());
                params.delays = Some(DelayProfile::new(base.tau_c, tau_p, base.tau_d, tau_f));
                if let Some(m) = m {
                    let n = BlockAssignment::uniform(
                        sweep.n1.unwrap_or(100),
                        sweep.step.unwrap_or(1),
                        m,
                    )?;
                    params.n = Some(n.lengths().to_vec());
                    params.e = None;
                }
                points.push(Point { params, m });
            }
        }
    }
    Ok(points)
}

const POINT_COLUMNS: [&str; 7] = ["snr_db", "gamma", "k", "tau_c", "tau_p", "tau_d", "tau_f"];

fn point_cells(p: &Params) -> CliResult<Vec<String>> {
    let c = p.resolved().channel.unwrap_or_default();
    let d = p.delays();
    let opt_f = |x: Option<f64>| x.map(g17).unwrap_or_default();
    Ok(vec![
        opt_f(c.snr_db.or(c.gamma.map(|g| 10.0 * g.log10()))),
        opt_f(c.gamma.or(c.snr_db.map(db_to_linear))),
        c.k.map(|k| k.to_string()).unwrap_or_default(),
        d.tau_c.to_string(),
        d.tau_p.to_string(),
        d.tau_d.to_string(),
        d.tau_f.to_string(),
    ])
}

fn header(task: SweepTask) -> Vec<&'static str> {
    let extra: &[&str] = match task {
        SweepTask::Evaluate => &[
            "m",
            "n_1",
            "n_m",
            "reactive_avg_aoi",
            "reactive_avg_peak_aoi",
            "proactive_avg_aoi",
            "proactive_avg_peak_aoi",
            "reactive_minus_proactive",
        ],
        SweepTask::Optimize => &[
            "n_min",
            "n_max",
            "protocol",
            "method",
            "m",
            "n_optimal",
            "aoi_min",
            "evaluations",
        ],
        SweepTask::Compare => &[
            "n_min",
            "n_max",
            "finest_reactive",
            "optimal_reactive",
            "optimal_m",
            "optimal_n",
            "finest_proactive",
        ],
    };
    POINT_COLUMNS.iter().chain(extra).copied().collect()
}

fn point_rows(task: SweepTask, point: &Point) -> CliResult<Vec<Vec<String>>> {
    let p = &point.params;
    let cells = point_cells(p)?;
    let row = |extra: Vec<String>| cells.iter().cloned().chain(extra).collect::<Vec<_>>();
    match task {
        SweepTask::Evaluate => {
            let cfg = p.harq_config()?;
            let re = evaluate(ProtocolKind::Reactive, &cfg)?;
            let pro = evaluate(ProtocolKind::Proactive, &cfg)?;
            let diff = finite("reactive - proactive", re.avg_aoi - pro.avg_aoi)?;
            Ok(vec![row(vec![
                point.m.unwrap_or(cfg.m()).to_string(),
                cfg.n().lengths()[0].to_string(),
                cfg.n().last().to_string(),
                g17(finite("reactive avg_aoi", re.avg_aoi)?),
                g17(re.avg_peak_aoi),
                g17(finite("proactive avg_aoi", pro.avg_aoi)?),
                g17(pro.avg_peak_aoi),
                g17(diff),
            ])])
        }
        SweepTask::Optimize => p
            .protocol()
            .kinds()
            .iter()
            .map(|&kind| {
                let space = search_space(p, kind)?;
                let r = search(p, &space)?;
                Ok(row(vec![
                    space.n_min().to_string(),
                    space.n_max().to_string(),
                    kind.to_string(),
                    r.method.as_str().to_string(),
                    r.m.to_string(),
                    join_u64(&r.n_optimal),
                    g17(r.aoi_min),
                    r.evaluations.to_string(),
                ]))
            })
            .collect(),
        SweepTask::Compare => {
            let space = search_space(p, ProtocolKind::Reactive)?;
            let finest = BlockAssignment::uniform(space.n_min(), 1, space.width())?;
            let mut finest_params = p.clone();
            finest_params.n = Some(finest.lengths().to_vec());
            finest_params.e = None;
            let cfg = finest_params.harq_config()?;
            let finest_re = evaluate(ProtocolKind::Reactive, &cfg)?.avg_aoi;
            let finest_pro = evaluate(ProtocolKind::Proactive, &cfg)?.avg_aoi;
            let best = search(p, &space)?;
            Ok(vec![row(vec![
                space.n_min().to_string(),
                space.n_max().to_string(),
                g17(finite("finest reactive", finest_re)?),
                g17(best.aoi_min),
                best.m.to_string(),
                join_u64(&best.n_optimal),
                g17(finite("finest proactive", finest_pro)?),
            ])])
        }
    }
}

/// Runs the sweep described by `p` (preset already applied) into
/// `dir/sweep.csv` and returns the number of data rows.
pub fn run(p: &Params, dir: &Path) -> CliResult<usize> {
    let task = p
        .sweep
        .as_ref()
        .and_then(|s| s.task)
        .unwrap_or(SweepTask::Evaluate);
    let points = grid(p)?;
    let rows: Vec<Vec<Vec<String>>> = points
        .par_iter()
        .map(|point| point_rows(task, point))
        .collect::<CliResult<_>>()?;

    super::create_dir(dir)?;
    let mut w = csv_writer(create_file(&dir.join(OUTPUT_FILE))?);
    w.write_record(header(task))?;
    let mut count = 0;
    for row in rows.iter().flatten() {
        w.write_record(row)?;
        count += 1;
    }
    w.flush().map_err(csv::Error::from)?;

    let mut manifest = RunManifest::new("sweep", p.resolved());
    manifest.outputs.push(OUTPUT_FILE.into());
    manifest.write(dir)?;
    Ok(count)
}
