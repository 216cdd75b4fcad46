//! Domain types shared by the analytic, simulation and search modules.
//!
//! Every type here is immutable once built, and every constructor enforces
//! the structural invariants of the HARQ status-update model. Time is
//! measured in channel uses throughout.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four deterministic delay constants of one HARQ link, in channel uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct DelayProfile {
    /// Coding delay.
    pub tau_c: u64,
    /// Propagation delay.
    pub tau_p: u64,
    /// Decoding delay.
    pub tau_d: u64,
    /// Feedback delay.
    pub tau_f: u64,
}

impl DelayProfile {
    pub const ZERO: DelayProfile = DelayProfile {
        tau_c: 0,
        tau_p: 0,
        tau_d: 0,
        tau_f: 0,
    };

    pub fn new(tau_c: u64, tau_p: u64, tau_d: u64, tau_f: u64) -> Self {
        Self {
            tau_c,
            tau_p,
            tau_d,
            tau_f,
        }
    }

    /// Per-round overhead paid on top of transmission: decoding, feedback and
    /// propagation delay.
    pub fn script_t(&self) -> u64 {
        self.tau_d + self.tau_f + self.tau_p
    }
}

/// Cumulative code lengths `n_1 < n_2 < ... < n_m` available to the decoder
/// after each transmission round.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct BlockAssignment(Vec<u64>);

impl BlockAssignment {
    pub fn new(lengths: Vec<u64>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::EmptyAssignment);
        }
        let mut prev = 0u64;
        for (idx, &value) in lengths.iter().enumerate() {
            if value <= prev {
                return Err(Error::NonMonotoneN {
                    round: idx + 1,
                    prev,
                    value,
                });
            }
            prev = value;
        }
        Ok(Self(lengths))
    }

    /// `n_1, n_1 + step, ..., n_1 + (m-1)*step`.
    pub fn uniform(first: u64, step: u64, m: usize) -> Result<Self> {
        Self::new((0..m as u64).map(|i| first + i * step).collect())
    }

    /// Number of rounds.
    pub fn m(&self) -> usize {
        self.0.len()
    }

    pub fn lengths(&self) -> &[u64] {
        &self.0
    }

    /// `n_i` for a 1-based round index.
    pub fn n(&self, round: usize) -> Option<u64> {
        round.checked_sub(1).and_then(|i| self.0.get(i).copied())
    }

    /// Last cumulative length `n_m`.
    pub fn last(&self) -> u64 {
        self.0[self.0.len() - 1]
    }

    /// Per-round increment `n_i - n_{i-1}` with `n_0 = 0`; 1-based.
    pub fn ell(&self, round: usize) -> Option<u64> {
        let cur = self.n(round)?;
        let prev = if round == 1 { 0 } else { self.0[round - 2] };
        Some(cur - prev)
    }

    pub fn increments(&self) -> impl Iterator<Item = u64> + '_ {
        std::iter::once(0)
            .chain(self.0.iter().copied())
            .zip(self.0.iter().copied())
            .map(|(prev, cur)| cur - prev)
    }
}

impl TryFrom<Vec<u64>> for BlockAssignment {
    type Error = Error;

    fn try_from(value: Vec<u64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<BlockAssignment> for Vec<u64> {
    fn from(value: BlockAssignment) -> Self {
        value.0
    }
}

/// Residual decoding-failure probabilities `eps_1 >= ... >= eps_m`, each in
/// the open interval (0, 1). Round 0 is the virtual `eps_0 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ErrorVector(Vec<f64>);

impl ErrorVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyAssignment);
        }
        for (idx, &value) in values.iter().enumerate() {
            // written so that NaN fails too
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::DegenerateEpsilon {
                    round: idx + 1,
                    value,
                });
            }
            if idx > 0 && value > values[idx - 1] {
                return Err(Error::NonMonotoneE {
                    round: idx + 1,
                    prev: values[idx - 1],
                    value,
                });
            }
        }
        Ok(Self(values))
    }

    pub fn m(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// `eps_i` for `i` in `0..=m`, with `eps_0 = 1`.
    pub fn eps(&self, round: usize) -> Option<f64> {
        if round == 0 {
            Some(1.0)
        } else {
            self.0.get(round - 1).copied()
        }
    }

    /// Failure probability after the final round, `eps_m`.
    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

impl TryFrom<Vec<f64>> for ErrorVector {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<ErrorVector> for Vec<f64> {
    fn from(value: ErrorVector) -> Self {
        value.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    /// Stop-and-wait: every further round waits for the previous NACK.
    Reactive,
    /// Rounds are sent back to back until an ACK arrives.
    Proactive,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 2] = [ProtocolKind::Reactive, ProtocolKind::Proactive];

    pub fn as_str(&self) -> &'static str {
        match self {
            ProtocolKind::Reactive => "reactive",
            ProtocolKind::Proactive => "proactive",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "reactive" => Ok(ProtocolKind::Reactive),
            "proactive" => Ok(ProtocolKind::Proactive),
            other => Err(format!("unknown protocol '{other}'")),
        }
    }
}

/// Where an [`AoiResult`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Simulated,
    TruncatedSeries,
}

/// Average AoI and average peak AoI, in channel uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AoiResult {
    pub avg_aoi: f64,
    pub avg_peak_aoi: f64,
    pub provenance: Provenance,
}

/// A validated `(n, e, delays)` bundle: the only configuration accepted by
/// the analytic formulas, the simulator and the serializers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig")]
pub struct HarqConfig {
    n: BlockAssignment,
    e: ErrorVector,
    delays: DelayProfile,
}

#[derive(Deserialize)]
struct RawConfig {
    n: Vec<u64>,
    e: Vec<f64>,
    delays: DelayProfile,
}

impl TryFrom<RawConfig> for HarqConfig {
    type Error = Error;

    fn try_from(raw: RawConfig) -> Result<Self> {
        validate_config(
            BlockAssignment::new(raw.n)?,
            ErrorVector::new(raw.e)?,
            raw.delays,
        )
    }
}

/// Bundles a block assignment, its error vector and a delay profile, checking
/// that they describe the same number of rounds.
pub fn validate_config(
    n: BlockAssignment,
    e: ErrorVector,
    delays: DelayProfile,
) -> Result<HarqConfig> {
    if n.m() != e.m() {
        return Err(Error::LengthMismatch { n: n.m(), e: e.m() });
    }
    Ok(HarqConfig { n, e, delays })
}

impl HarqConfig {
    /// Validates raw vectors in one step.
    pub fn from_parts(n: Vec<u64>, e: Vec<f64>, delays: DelayProfile) -> Result<Self> {
        validate_config(BlockAssignment::new(n)?, ErrorVector::new(e)?, delays)
    }

    pub fn n(&self) -> &BlockAssignment {
        &self.n
    }

    pub fn e(&self) -> &ErrorVector {
        &self.e
    }

    pub fn delays(&self) -> &DelayProfile {
        &self.delays
    }

    pub fn m(&self) -> usize {
        self.n.m()
    }
}
