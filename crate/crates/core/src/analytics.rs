//! Closed-form AoI evaluation for reactive and proactive HARQ.
//!
//! A renewal cycle runs between two consecutive successful decodings. With
//! `R` failed packets and the successful packet decoded in round `V`, its
//! length is `T = tau_m * R + tau_V`, where `tau_i` is the time from
//! generating an update to receiving its `i`-th feedback:
//!
//! * reactive: `tau_i = n_i + tau_c + i * T_rt`
//! * proactive: `tau_i = n_i + tau_c + T_rt`
//!
//! with `T_rt = tau_d + tau_f + tau_p`. `R` is geometric with ratio `eps_m`
//! and `P(V = i) = (eps_{i-1} - eps_i) / (1 - eps_m)`, independent of `R`.
//! Every closed form below follows from those two distributions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbl::{epsilon_at, ChannelSpec};
use crate::model::{
    AoiResult, BlockAssignment, DelayProfile, ErrorVector, HarqConfig, ProtocolKind, Provenance,
};
use crate::sum::NeumaierSum;

/// First and second moments of the renewal-cycle quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleMoments {
    /// `E[T]`, mean cycle length.
    pub mean_t: f64,
    /// `E[T^2]`.
    pub second_t: f64,
    /// `E[tau_V]`, mean generation-to-final-feedback time of a delivered update.
    pub mean_tau_v: f64,
    /// `E[tau_V^2]`.
    pub second_tau_v: f64,
    /// `E[R]`, mean number of failed packets per cycle.
    pub mean_r: f64,
    /// `E[R^2]`.
    pub second_r: f64,
}

/// `tau_i` for a 1-based round, straight from the lengths.
fn tau(kind: ProtocolKind, n: &[u64], d: &DelayProfile, round: usize) -> u64 {
    let rounds = match kind {
        ProtocolKind::Reactive => round as u64,
        ProtocolKind::Proactive => 1,
    };
    n[round - 1] + d.tau_c + rounds * d.script_t()
}

/// Time from generating an update until its feedback for `round` (1-based)
/// reaches the transmitter.
pub fn round_completion_time(
    kind: ProtocolKind,
    n: &BlockAssignment,
    d: &DelayProfile,
    round: usize,
) -> Result<u64> {
    if round == 0 || round > n.m() {
        return Err(Error::IndexOutOfRange {
            index: round,
            m: n.m(),
        });
    }
    Ok(tau(kind, n.lengths(), d, round))
}

/// The two sums shared by all closed forms:
///
/// * `a = tau_1 + sum_{i<m} (tau_{i+1} - tau_i) eps_i`
/// * `b = tau_1^2 + sum_{i<m} (tau_{i+1}^2 - tau_i^2) eps_i`
///
/// so that `E[T] = a / (1 - eps_m)`.
#[derive(Debug, Clone, Copy)]
struct Sums {
    a: f64,
    b: f64,
    tau_m: f64,
    eps_m: f64,
}

fn sums(kind: ProtocolKind, n: &[u64], e: &[f64], d: &DelayProfile) -> Sums {
    debug_assert_eq!(n.len(), e.len());
    let m = n.len();
    let tau1 = tau(kind, n, d, 1) as f64;
    let mut a = NeumaierSum::new();
    let mut b = NeumaierSum::new();
    a += tau1;
    b += tau1 * tau1;
    for i in 1..m {
        // (tau_{i+1} - tau_i) and (tau_{i+1} + tau_i), exact in integers
        let lo = tau(kind, n, d, i);
        let hi = tau(kind, n, d, i + 1);
        let diff = (hi - lo) as f64;
        let total = (hi + lo) as f64;
        a += diff * e[i - 1];
        b += diff * total * e[i - 1];
    }
    Sums {
        a: a.value(),
        b: b.value(),
        tau_m: tau(kind, n, d, m) as f64,
        eps_m: e[m - 1],
    }
}

fn check_tail(e: &[f64]) -> Result<()> {
    let last = e[e.len() - 1];
    if !(last < 1.0) {
        return Err(Error::DegenerateEpsilon {
            round: e.len(),
            value: last,
        });
    }
    Ok(())
}

/// Average AoI from raw slices. `n` and `e` must describe a valid bundle.
pub(crate) fn avg_aoi_raw(kind: ProtocolKind, n: &[u64], e: &[f64], d: &DelayProfile) -> f64 {
    let s = sums(kind, n, e, d);
    -0.5 - d.tau_f as f64 + s.a / (1.0 - s.eps_m) + s.b / (2.0 * s.a)
}

pub(crate) fn peak_aoi_raw(kind: ProtocolKind, n: &[u64], e: &[f64], d: &DelayProfile) -> f64 {
    let s = sums(kind, n, e, d);
    let tail = 1.0 - s.eps_m;
    -1.0 - d.tau_f as f64 - s.tau_m * s.eps_m / tail + 2.0 * s.a / tail
}

/// All six cycle moments of a validated configuration.
pub fn moments(kind: ProtocolKind, cfg: &HarqConfig) -> Result<CycleMoments> {
    let n = cfg.n().lengths();
    let e = cfg.e().values();
    let d = cfg.delays();
    check_tail(e)?;

    let s = sums(kind, n, e, d);
    let eps_m = s.eps_m;
    let tail = 1.0 - eps_m;

    let mean_r = eps_m / tail;
    let second_r = (eps_m * eps_m + eps_m) / (tail * tail);

    // P(V = i) summed by parts against tau_i and tau_i^2.
    let mean_tau_v = (s.a - s.tau_m * eps_m) / tail;
    let second_tau_v = (s.b - s.tau_m * s.tau_m * eps_m) / tail;

    let mean_t = s.a / tail;

    // E[T^2] = tau_m^2 (1 + eps_m) / (1 - eps_m)^2
    //        - sum_{i<m} (1 - eps_i)/(1 - eps_m) (tau_{i+1} - tau_i)
    //              [tau_i + tau_{i+1} + 2 tau_m eps_m / (1 - eps_m)]
    let mut second_t = NeumaierSum::new();
    second_t += s.tau_m * s.tau_m * (1.0 + eps_m) / (tail * tail);
    let cross = 2.0 * s.tau_m * eps_m / tail;
    for i in 1..n.len() {
        let lo = tau(kind, n, d, i);
        let hi = tau(kind, n, d, i + 1);
        let weight = (1.0 - e[i - 1]) / tail;
        second_t += -weight * (hi - lo) as f64 * ((hi + lo) as f64 + cross);
    }

    Ok(CycleMoments {
        mean_t,
        second_t: second_t.value(),
        mean_tau_v,
        second_tau_v,
        mean_r,
        second_r,
    })
}

/// Renewal-reward average AoI `E[T^2] / (2 E[T]) + E[tau_V] - tau_f - 1/2`.
pub fn renewal_reward_aoi(m: &CycleMoments, d: &DelayProfile) -> f64 {
    m.second_t / (2.0 * m.mean_t) + m.mean_tau_v - d.tau_f as f64 - 0.5
}

/// Average peak AoI from moments, `E[T] + E[tau_V] - tau_f - 1`.
pub fn renewal_peak_aoi(m: &CycleMoments, d: &DelayProfile) -> f64 {
    -1.0 - d.tau_f as f64 + m.mean_t + m.mean_tau_v
}

/// Closed-form average AoI.
pub fn avg_aoi_closed_form(kind: ProtocolKind, cfg: &HarqConfig) -> Result<f64> {
    check_tail(cfg.e().values())?;
    Ok(avg_aoi_raw(
        kind,
        cfg.n().lengths(),
        cfg.e().values(),
        cfg.delays(),
    ))
}

/// Closed-form average peak AoI.
pub fn peak_aoi_closed_form(kind: ProtocolKind, cfg: &HarqConfig) -> Result<f64> {
    check_tail(cfg.e().values())?;
    Ok(peak_aoi_raw(
        kind,
        cfg.n().lengths(),
        cfg.e().values(),
        cfg.delays(),
    ))
}

/// Both closed-form metrics tagged as [`Provenance::ClosedForm`].
pub fn evaluate(kind: ProtocolKind, cfg: &HarqConfig) -> Result<AoiResult> {
    Ok(AoiResult {
        avg_aoi: avg_aoi_closed_form(kind, cfg)?,
        avg_peak_aoi: peak_aoi_closed_form(kind, cfg)?,
        provenance: Provenance::ClosedForm,
    })
}

/// `avg_reactive - avg_proactive` for the same bundle. Never negative beyond
/// rounding; zero exactly when `m = 1` or the round overhead is zero.
pub fn compare_protocols(cfg: &HarqConfig) -> Result<f64> {
    Ok(avg_aoi_closed_form(ProtocolKind::Reactive, cfg)?
        - avg_aoi_closed_form(ProtocolKind::Proactive, cfg)?)
}

/// Classical protocols that fall out of the reactive closed form when all
/// delays are zero. Each variant is evaluated with its own specialised
/// formula.
#[derive(Debug, Clone, PartialEq)]
pub enum CaseReduction {
    /// Fixed-rate code without retransmission.
    NonArq { n1: u64, eps1: f64 },
    /// The same packet repeated up to `m` times: `n_i = i n_1`,
    /// `eps_i = eps_1^i`.
    TruncatedArq { n1: u64, eps1: f64, m: u32 },
    /// Truncated ARQ without a retransmission limit.
    ClassicalArq { n1: u64, eps1: f64 },
    /// Incremental redundancy with arbitrary `n` and `e`.
    HarqIr { n: BlockAssignment, e: ErrorVector },
}

fn check_eps(round: usize, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::DegenerateEpsilon { round, value })
    }
}

/// Average AoI of one of the classical special cases.
pub fn case_reduction(case: &CaseReduction) -> Result<f64> {
    match *case {
        CaseReduction::NonArq { n1, eps1 } => {
            check_eps(1, eps1)?;
            let n1 = n1 as f64;
            Ok(-0.5 + n1 / (1.0 - eps1) + n1 / 2.0)
        }
        CaseReduction::TruncatedArq { n1, eps1, m } => {
            check_eps(1, eps1)?;
            if m == 0 {
                return Err(Error::EmptyAssignment);
            }
            let em = eps1.powi(m as i32);
            let n1 = n1 as f64;
            Ok(-0.5 + n1 * (2.0 / (1.0 - eps1) - 0.5 - m as f64 * em / (1.0 - em)))
        }
        CaseReduction::ClassicalArq { n1, eps1 } => {
            check_eps(1, eps1)?;
            Ok(-0.5 + n1 as f64 * (2.0 / (1.0 - eps1) - 0.5))
        }
        CaseReduction::HarqIr { ref n, ref e } => {
            if n.m() != e.m() {
                return Err(Error::LengthMismatch { n: n.m(), e: e.m() });
            }
            let n = n.lengths();
            let e = e.values();
            let m = n.len();
            let n1 = n[0] as f64;
            let mut first = NeumaierSum::new();
            let mut second = NeumaierSum::new();
            first += n1;
            second += n1 * n1;
            for i in 0..m - 1 {
                let (lo, hi) = (n[i] as f64, n[i + 1] as f64);
                first += (hi - lo) * e[i];
                second += (hi * hi - lo * lo) * e[i];
            }
            let first = first.value();
            Ok(-0.5 + first / (1.0 - e[m - 1]) + second.value() / (2.0 * first))
        }
    }
}

/// Rule producing the next cumulative length of an unbounded schedule.
pub trait Schedule {
    /// `n_{round+1}` given `n_round`. Must be strictly larger than `current`.
    fn next_length(&self, round: usize, current: u64) -> u64;
}

/// `n_{i+1} = n_i + step`; `FixedIncrement(1)` is symbol-by-symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedIncrement(pub u64);

impl Schedule for FixedIncrement {
    fn next_length(&self, _round: usize, current: u64) -> u64 {
        current + self.0
    }
}

impl<F: Fn(usize, u64) -> u64> Schedule for F {
    fn next_length(&self, round: usize, current: u64) -> u64 {
        self(round, current)
    }
}

/// Result of a truncated rateless evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatelessOutcome {
    pub result: AoiResult,
    /// Number of series terms summed.
    pub terms: usize,
    /// Relative change of the average AoI when the truncation point was
    /// doubled for the last time.
    pub doubling_change: f64,
}

pub const DEFAULT_ROUND_CAP: usize = 1_000_000;

/// Running partial sums of the two rateless series.
struct SeriesState<'a, S: Schedule + ?Sized> {
    schedule: &'a S,
    spec: &'a ChannelSpec,
    round: usize,
    length: u64,
    offset: f64,
    first: NeumaierSum,
    second: NeumaierSum,
}

impl<S: Schedule + ?Sized> SeriesState<'_, S> {
    /// Adds term `round`; returns (term of first series, term of second, eps).
    fn step(&mut self) -> Result<(f64, f64, f64)> {
        let next = self.schedule.next_length(self.round, self.length);
        if next <= self.length {
            return Err(Error::NonMonotoneN {
                round: self.round + 1,
                prev: self.length,
                value: next,
            });
        }
        let eps = epsilon_at(self.spec, self.length);
        let inc = (next - self.length) as f64;
        let t1 = inc * eps;
        let t2 = inc * (self.offset + (next + self.length) as f64) * eps;
        self.first += t1;
        self.second += t2;
        self.length = next;
        self.round += 1;
        Ok((t1, t2, eps))
    }
}

/// Average and peak AoI of a rateless code, i.e. proactive HARQ with an
/// unbounded number of rounds, by truncating its two infinite series.
///
/// The truncation point `M` is the first round whose series terms are both
/// below `tol` times the quantities they feed, with `eps_M < tol`. `M` is then
/// doubled until a doubling moves the result by less than `tol` relative.
pub fn rateless_aoi<S: Schedule + ?Sized>(
    schedule: &S,
    first_length: u64,
    spec: &ChannelSpec,
    d: &DelayProfile,
    tol: f64,
    round_cap: usize,
) -> Result<RatelessOutcome> {
    if first_length == 0 {
        return Err(Error::NonMonotoneN {
            round: 1,
            prev: 0,
            value: 0,
        });
    }
    assert!(tol > 0.0, "tolerance must be positive");
    let base = (d.tau_c + first_length + d.script_t()) as f64;
    let mut state = SeriesState {
        schedule,
        spec,
        round: 1,
        length: first_length,
        offset: 2.0 * (d.tau_c + d.script_t()) as f64,
        first: NeumaierSum::new(),
        second: NeumaierSum::new(),
    };
    let eval = |state: &SeriesState<'_, S>| {
        let a = base + state.first.value();
        let b = base * base + state.second.value();
        let avg = -0.5 - d.tau_f as f64 + a + b / (2.0 * a);
        let peak = -1.0 - d.tau_f as f64 + 2.0 * a;
        (avg, peak)
    };

    loop {
        let (t1, t2, eps) = state.step()?;
        let a = base + state.first.value();
        let b = base * base + state.second.value();
        if t1 < tol * a && t2 < tol * b && eps < tol {
            break;
        }
        if state.round > round_cap {
            return Err(Error::NoConvergence { cap: round_cap });
        }
    }

    let mut terms = state.round - 1;
    let (mut avg, mut peak) = eval(&state);
    loop {
        if 2 * terms > round_cap {
            return Err(Error::NoConvergence { cap: round_cap });
        }
        while state.round - 1 < 2 * terms {
            state.step()?;
        }
        terms *= 2;
        let (avg2, peak2) = eval(&state);
        let change = ((avg2 - avg) / avg2)
            .abs()
            .max(((peak2 - peak) / peak2).abs());
        avg = avg2;
        peak = peak2;
        if change < tol {
            return Ok(RatelessOutcome {
                result: AoiResult {
                    avg_aoi: avg,
                    avg_peak_aoi: peak,
                    provenance: Provenance::TruncatedSeries,
                },
                terms,
                doubling_change: change,
            });
        }
    }
}
