//! JSON run configuration.
//!
//! One document mirrors the library types: `n`, `e` and `delays` are a
//! `HarqConfig`, `channel` a `ChannelSpec` (with the SNR in dB or linear),
//! and one optional section per subcommand. Every field is optional in the
//! file; command-line flags are merged on top and the result is recorded in
//! the run manifest, which can itself be passed back as `--config`.

use std::path::Path;

use aoi_harq::fbl::error_vector;
use aoi_harq::{BlockAssignment, ChannelSpec, DelayProfile, ErrorVector, HarqConfig, ProtocolKind};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{io_err, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolChoice {
    Reactive,
    Proactive,
    Both,
}

impl ProtocolChoice {
    pub fn kinds(self) -> &'static [ProtocolKind] {
        match self {
            ProtocolChoice::Reactive => &[ProtocolKind::Reactive],
            ProtocolChoice::Proactive => &[ProtocolKind::Proactive],
            ProtocolChoice::Both => &ProtocolKind::ALL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CaseKind {
    NonArq,
    Tarq,
    ClassicalArq,
    HarqIr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exhaustive,
    Heuristic,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exhaustive => "exhaustive",
            Method::Heuristic => "heuristic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig3,
    Fig5,
    Fig6,
}

/// Per-point task of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepTask {
    /// Closed-form AoI of the finest-grained assignment for every m.
    Evaluate,
    /// Age-optimal assignment over [n_min, n_max].
    Optimize,
    /// Finest reactive vs optimal reactive vs finest proactive.
    Compare,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<CaseKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatelessParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round_cap: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycles: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_min: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_cap: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<SweepTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_p: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<usize>>,
    /// `tau_f = tau_p + tau_f_offset` at every grid point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_f_offset: Option<u64>,
    /// First cumulative length of the finest-grained assignments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays: Option<DelayProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<CaseParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rateless: Option<RatelessParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepParams>,
}

/// Recursive object merge; scalars and arrays in `over` replace `base`.
fn merge_values(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (key, value) in o {
                match b.get_mut(&key) {
                    Some(slot) => merge_values(slot, value),
                    None => {
                        b.insert(key, value);
                    }
                }
            }
        }
        (slot, value) => *slot = value,
    }
}

impl Params {
    /// Reads a config file. A run manifest is accepted too, in which case its
    /// recorded parameters are used.
    pub fn load(path: &Path) -> CliResult<Params> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let json_err = |source| CliError::Json {
            path: path.into(),
            source,
        };
        let mut value: Value = serde_json::from_str(&text).map_err(json_err)?;
        if value.get("command").is_some_and(Value::is_string) {
            if let Some(params) = value.get_mut("parameters") {
                let params = params.take();
                value = params;
            }
        }
        serde_json::from_value(value).map_err(json_err)
    }

    /// `self` with every field set in `over` replacing it. Setting either SNR
    /// form on top drops the other one from the base.
    pub fn overlay(self, over: Params) -> Params {
        let snr_overridden = over
            .channel
            .as_ref()
            .is_some_and(|c| c.snr_db.is_some() || c.gamma.is_some());
        let mut base = self;
        if snr_overridden {
            if let Some(c) = base.channel.as_mut() {
                c.snr_db = None;
                c.gamma = None;
            }
        }
        let mut value = serde_json::to_value(base).expect("serializable");
        merge_values(
            &mut value,
            serde_json::to_value(over).expect("serializable"),
        );
        serde_json::from_value(value).expect("merge of two valid configs is valid")
    }

    pub fn protocol(&self) -> ProtocolChoice {
        self.protocol.unwrap_or(ProtocolChoice::Both)
    }

    pub fn delays(&self) -> DelayProfile {
        self.delays.unwrap_or(DelayProfile::ZERO)
    }

    /// Channel from the `channel` section. The linear SNR wins when both
    /// forms are present, so a recorded manifest replays bit for bit.
    pub fn channel_spec(&self) -> CliResult<Option<ChannelSpec>> {
        let Some(c) = &self.channel else {
            return Ok(None);
        };
        let gamma = match (c.gamma, c.snr_db) {
            (Some(g), _) => g,
            (None, Some(db)) => db_to_linear(db),
            (None, None) => return Ok(None),
        };
        let k =
            c.k.ok_or_else(|| CliError::config("channel.k (--k) is required with an SNR"))?;
        Ok(Some(ChannelSpec::new(gamma, k)?))
    }

    /// Validated `(n, e, delays)` bundle. `e` comes from the file or flags
    /// when given, otherwise from the finite-blocklength model.
    pub fn harq_config(&self) -> CliResult<HarqConfig> {
        let n = self
            .n
            .clone()
            .ok_or_else(|| CliError::config("block assignment n (--n) is required"))?;
        let n = BlockAssignment::new(n)?;
        let e = match (&self.e, self.channel_spec()?) {
            (Some(e), _) => ErrorVector::new(e.clone())?,
            (None, Some(spec)) => error_vector(&spec, &n)?,
            (None, None) => {
                return Err(CliError::config(
                    "need an error vector (--eps) or a channel (--snr-db or --gamma, with --k)",
                ))
            }
        };
        Ok(aoi_harq::validate_config(n, e, self.delays())?)
    }

    /// Copy with derived values filled in for the manifest: both SNR forms
    /// are recorded.
    pub fn resolved(&self) -> Params {
        let mut out = self.clone();
        if let Some(c) = out.channel.as_mut() {
            match (c.gamma, c.snr_db) {
                (None, Some(db)) => c.gamma = Some(db_to_linear(db)),
                (Some(g), None) => c.snr_db = Some(10.0 * g.log10()),
                _ => {}
            }
        }
        out
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Parses `c,p,d,f` into a delay profile.
pub fn parse_delays(s: &str) -> Result<DelayProfile, String> {
    let parts = parse_list::<u64>(s)?;
    match parts[..] {
        [c, p, d, f] => Ok(DelayProfile::new(c, p, d, f)),
        _ => Err(format!(
            "expected four delays tau_c,tau_p,tau_d,tau_f, got {}",
            parts.len()
        )),
    }
}

/// Comma-separated list.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<T>()
                .map_err(|e| format!("{part:?}: {e}"))
        })
        .collect()
}

/// Grid given either as a list `a,b,c` or as an inclusive range
/// `start:stop:step`.
pub fn parse_grid_f64(s: &str) -> Result<Vec<f64>, String> {
    let Some((start, stop, step)) = split_range(s) else {
        return parse_list(s);
    };
    let (start, stop, step): (f64, f64, f64) = (
        start.parse().map_err(|e| format!("{start:?}: {e}"))?,
        stop.parse().map_err(|e| format!("{stop:?}: {e}"))?,
        step.parse().map_err(|e| format!("{step:?}: {e}"))?,
    );
    if !(step > 0.0) || stop < start {
        return Err(format!("empty or invalid range {s:?}"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    // Rounding to 1e-9 keeps 0.1-style steps free of accumulated noise.
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

pub fn parse_grid_u64(s: &str) -> Result<Vec<u64>, String> {
    let Some((start, stop, step)) = split_range(s) else {
        return parse_list(s);
    };
    let (start, stop, step): (u64, u64, u64) = (
        start.parse().map_err(|e| format!("{start:?}: {e}"))?,
        stop.parse().map_err(|e| format!("{stop:?}: {e}"))?,
        step.parse().map_err(|e| format!("{step:?}: {e}"))?,
    );
    if step == 0 || stop < start {
        return Err(format!("empty or invalid range {s:?}"));
    }
    Ok((start..=stop).step_by(step as usize).collect())
}

pub fn parse_grid_usize(s: &str) -> Result<Vec<usize>, String> {
    Ok(parse_grid_u64(s)?.into_iter().map(|x| x as usize).collect())
}

fn split_range(s: &str) -> Option<(&str, &str, &str)> {
    let mut it = s.split(':');
    let (a, b, c) = (it.next()?, it.next()?, it.next()?);
    it.next()
        .is_none()
        .then_some((a.trim(), b.trim(), c.trim()))
}
