//! Seedable Monte Carlo renewal simulator.
//!
//! Each generated packet draws one uniform `x` and its feedback in round `i`
//! is an ACK iff `x >= eps_i`. Because `e` is non-increasing the feedback
//! sequence is monotone: once a round decodes, every later round would too.
//! Packets whose final round fails add one failed packet to the cycle; the
//! first packet whose final round succeeds closes the cycle in its first
//! successful round.
//!
//! The generator is ChaCha8 seeded with `seed_from_u64(seed)`. Parallel runs
//! give worker `w` the ChaCha stream `w` of the same seed; a single run is
//! stream 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AoiResult, ErrorVector, HarqConfig, ProtocolKind, Provenance};

/// Identifier recorded in run manifests.
pub const PRNG_ID: &str = "rand_chacha::ChaCha8Rng/seed_from_u64/stream=worker";

/// Consecutive failed packets after which a cycle is declared runaway.
pub const RUNAWAY_LIMIT: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    /// Number of successful decodings to simulate after the warm-up cycle.
    pub cycles: u64,
    /// Keep the per-slot age sequence.
    pub emit_trace: bool,
}

impl SimConfig {
    pub fn new(seed: u64, cycles: u64) -> Result<Self> {
        if cycles == 0 {
            return Err(Error::InvalidSimConfig("cycles must be at least 1".into()));
        }
        Ok(Self {
            seed,
            cycles,
            emit_trace: false,
        })
    }

    pub fn with_trace(mut self, emit: bool) -> Self {
        self.emit_trace = emit;
        self
    }
}

/// One renewal cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenewalRecord {
    /// Failed packets before the delivered one.
    pub r: u64,
    /// Round (1-based) in which the delivered packet decoded.
    pub v: usize,
    /// Cycle length.
    pub t: u64,
    /// Absolute slot of the successful decode closing this cycle.
    pub t_success: u64,
}

/// Instantaneous age `values[k] = age(start + k)` over whole renewal cycles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgeTrace {
    pub start: u64,
    pub values: Vec<u64>,
}

impl AgeTrace {
    pub fn horizon(&self) -> u64 {
        self.values.len() as u64
    }
}

/// Integer cycle-level aggregates; merging is exact and order independent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimTotals {
    pub cycles: u64,
    pub sum_t: u128,
    pub sum_t2: u128,
    /// Sum of per-slot ages over all cycles.
    pub sum_age: u128,
    /// Sum of the age just before each successful decode.
    pub sum_peak: u128,
    pub sum_r: u128,
    pub sum_r2: u128,
    pub sum_tau_v: u128,
}

impl SimTotals {
    pub fn merge(mut self, other: SimTotals) -> SimTotals {
        self.cycles += other.cycles;
        self.sum_t += other.sum_t;
        self.sum_t2 += other.sum_t2;
        self.sum_age += other.sum_age;
        self.sum_peak += other.sum_peak;
        self.sum_r += other.sum_r;
        self.sum_r2 += other.sum_r2;
        self.sum_tau_v += other.sum_tau_v;
        self
    }

    /// Ratio-of-sums average AoI and mean peak AoI.
    pub fn result(&self) -> AoiResult {
        AoiResult {
            avg_aoi: self.sum_age as f64 / self.sum_t as f64,
            avg_peak_aoi: self.sum_peak as f64 / self.cycles as f64,
            provenance: Provenance::Simulated,
        }
    }

    pub fn mean_t(&self) -> f64 {
        self.sum_t as f64 / self.cycles as f64
    }

    pub fn mean_t2(&self) -> f64 {
        self.sum_t2 as f64 / self.cycles as f64
    }

    pub fn mean_r(&self) -> f64 {
        self.sum_r as f64 / self.cycles as f64
    }

    pub fn mean_tau_v(&self) -> f64 {
        self.sum_tau_v as f64 / self.cycles as f64
    }

    fn add_cycle(&mut self, r: u64, t: u64, tau_v: u64, prev_tau_v: u64, tau_f: u64) {
        let t128 = t as u128;
        // age restarts at prev_tau_v - tau_f and climbs by one per slot
        let offset = (prev_tau_v - tau_f) as u128;
        self.cycles += 1;
        self.sum_t += t128;
        self.sum_t2 += t128 * t128;
        self.sum_age += t128 * (t128 - 1) / 2 + t128 * offset;
        self.sum_peak += t128 - 1 + offset;
        self.sum_r += r as u128;
        self.sum_r2 += (r as u128) * (r as u128);
        self.sum_tau_v += tau_v as u128;
    }
}

/// Output of [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub result: AoiResult,
    pub totals: SimTotals,
    pub records: Vec<RenewalRecord>,
    pub trace: Option<AgeTrace>,
}

/// Feedback bits of one packet: bit `i` is set iff `draw >= eps_{i+1}`.
pub fn sample_feedback(draw: f64, e: &ErrorVector) -> Vec<bool> {
    e.values().iter().map(|&eps| draw >= eps).collect()
}

/// First round whose threshold the draw clears, if any (1-based).
fn success_round(draw: f64, eps: &[f64]) -> Option<usize> {
    let idx = eps.partition_point(|&e| draw < e);
    (idx < eps.len()).then_some(idx + 1)
}

struct CycleSampler {
    eps: Vec<f64>,
    taus: Vec<u64>,
    tau_f: u64,
}

impl CycleSampler {
    fn new(kind: ProtocolKind, cfg: &HarqConfig) -> Self {
        let d = cfg.delays();
        let per_round = d.script_t();
        let taus = cfg
            .n()
            .lengths()
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let rounds = match kind {
                    ProtocolKind::Reactive => i as u64 + 1,
                    ProtocolKind::Proactive => 1,
                };
                n + d.tau_c + rounds * per_round
            })
            .collect();
        Self {
            eps: cfg.e().values().to_vec(),
            taus,
            tau_f: d.tau_f,
        }
    }

    fn tau_m(&self) -> u64 {
        self.taus[self.taus.len() - 1]
    }

    /// Draws packets until one is delivered; returns (R, V).
    fn cycle<R: Rng>(&self, rng: &mut R) -> Result<(u64, usize)> {
        let mut failures = 0u64;
        loop {
            let draw: f64 = rng.random();
            if let Some(v) = success_round(draw, &self.eps) {
                return Ok((failures, v));
            }
            failures += 1;
            if failures >= RUNAWAY_LIMIT {
                return Err(Error::RunawayCycle { failures });
            }
        }
    }

    fn length(&self, r: u64, v: usize) -> (u64, u64) {
        let tau_v = self.taus[v - 1];
        (self.tau_m() * r + tau_v, tau_v)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Simulates `sim.cycles` renewal cycles after one discarded warm-up cycle.
pub fn run(kind: ProtocolKind, cfg: &HarqConfig, sim: &SimConfig) -> Result<SimOutput> {
    if sim.cycles == 0 {
        return Err(Error::InvalidSimConfig("cycles must be at least 1".into()));
    }
    let sampler = CycleSampler::new(kind, cfg);
    let mut rng = stream_rng(sim.seed, 0);

    let (r0, v0) = sampler.cycle(&mut rng)?;
    let (t0, mut prev_tau_v) = sampler.length(r0, v0);
    let mut t_success = t0;

    let mut totals = SimTotals::default();
    let mut records = Vec::with_capacity(sim.cycles as usize);
    let mut trace = sim.emit_trace.then(|| AgeTrace {
        start: t_success,
        values: Vec::new(),
    });

    for _ in 0..sim.cycles {
        let (r, v) = sampler.cycle(&mut rng)?;
        let (t, tau_v) = sampler.length(r, v);
        totals.add_cycle(r, t, tau_v, prev_tau_v, sampler.tau_f);
        if let Some(trace) = trace.as_mut() {
            let base = prev_tau_v - sampler.tau_f;
            trace.values.extend((0..t).map(|x| base + x));
        }
        t_success += t;
        records.push(RenewalRecord { r, v, t, t_success });
        prev_tau_v = tau_v;
    }

    Ok(SimOutput {
        result: totals.result(),
        totals,
        records,
        trace,
    })
}

fn run_totals(sampler: &CycleSampler, seed: u64, stream: u64, cycles: u64) -> Result<SimTotals> {
    let mut rng = stream_rng(seed, stream);
    let (r0, v0) = sampler.cycle(&mut rng)?;
    let (_, mut prev_tau_v) = sampler.length(r0, v0);
    let mut totals = SimTotals::default();
    for _ in 0..cycles {
        let (r, v) = sampler.cycle(&mut rng)?;
        let (t, tau_v) = sampler.length(r, v);
        totals.add_cycle(r, t, tau_v, prev_tau_v, sampler.tau_f);
        prev_tau_v = tau_v;
    }
    Ok(totals)
}

/// Splits `cycles` over `streams` independent ChaCha streams of `seed`, runs
/// them in parallel and sums their aggregates. Stream `w` gets
/// `cycles / streams` cycles plus one if `w < cycles % streams`; each stream
/// discards its own warm-up cycle. With `streams = 1` the totals equal those
/// of [`run`].
pub fn run_streams(
    kind: ProtocolKind,
    cfg: &HarqConfig,
    seed: u64,
    cycles: u64,
    streams: u64,
) -> Result<SimTotals> {
    if cycles == 0 || streams == 0 {
        return Err(Error::InvalidSimConfig(
            "cycles and streams must be at least 1".into(),
        ));
    }
    let sampler = CycleSampler::new(kind, cfg);
    let base = cycles / streams;
    let extra = cycles % streams;
    let parts: Vec<SimTotals> = (0..streams)
        .into_par_iter()
        .map(|w| {
            let n = base + u64::from(w < extra);
            if n == 0 {
                Ok(SimTotals::default())
            } else {
                run_totals(&sampler, seed, w, n)
            }
        })
        .collect::<Result<_>>()?;
    Ok(parts
        .into_iter()
        .fold(SimTotals::default(), SimTotals::merge))
}

/// Normalised frequencies of `R` (index = number of failures) and of `V`
/// (index 0 = round 1) over `m` rounds.
pub fn empirical_distributions(records: &[RenewalRecord], m: usize) -> (Vec<f64>, Vec<f64>) {
    let max_r = records.iter().map(|r| r.r).max().unwrap_or(0) as usize;
    let mut r_hist = vec![0u64; max_r + 1];
    let mut v_hist = vec![0u64; m];
    for rec in records {
        r_hist[rec.r as usize] += 1;
        v_hist[rec.v - 1] += 1;
    }
    let total = records.len().max(1) as f64;
    (
        r_hist.into_iter().map(|c| c as f64 / total).collect(),
        v_hist.into_iter().map(|c| c as f64 / total).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics;
    use crate::model::DelayProfile;

    fn e3() -> ErrorVector {
        ErrorVector::new(vec![0.3, 0.2, 0.1]).unwrap()
    }

    #[test]
    fn feedback_thresholds() {
        assert_eq!(sample_feedback(0.99, &e3()), vec![true, true, true]);
        assert_eq!(sample_feedback(0.15, &e3()), vec![false, false, true]);
        assert_eq!(sample_feedback(0.0, &e3()), vec![false, false, false]);
        assert_eq!(sample_feedback(0.2, &e3()), vec![false, true, true]);
    }

    #[test]
    fn success_round_matches_feedback() {
        let e = e3();
        for k in 0..1000 {
            let draw = k as f64 / 1000.0;
            let bits = sample_feedback(draw, &e);
            let first = bits.iter().position(|&b| b).map(|i| i + 1);
            assert_eq!(success_round(draw, e.values()), first);
        }
    }

    #[test]
    fn zero_cycles_rejected() {
        assert!(SimConfig::new(1, 0).is_err());
    }

    #[test]
    fn deterministic_cycles_match_closed_form() {
        let cfg =
            HarqConfig::from_parts(vec![100], vec![1e-12], DelayProfile::new(2, 5, 3, 6)).unwrap();
        let out = run(
            ProtocolKind::Reactive,
            &cfg,
            &SimConfig::new(7, 100_000).unwrap(),
        )
        .unwrap();
        assert!(out.records.iter().all(|r| r.r == 0 && r.v == 1));
        let closed = analytics::avg_aoi_closed_form(ProtocolKind::Reactive, &cfg).unwrap();
        assert!(((out.result.avg_aoi - closed) / closed).abs() < 1e-4);
    }

    #[test]
    fn single_cycle() {
        let cfg = HarqConfig::from_parts(vec![100], vec![1e-12], DelayProfile::ZERO).unwrap();
        let out = run(
            ProtocolKind::Proactive,
            &cfg,
            &SimConfig::new(0, 1).unwrap(),
        )
        .unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].r, 0);
    }

    #[test]
    fn records_obey_cycle_equation() {
        let cfg = HarqConfig::from_parts(
            vec![100, 110, 120],
            vec![0.3, 0.2, 0.1],
            DelayProfile::new(2, 5, 3, 6),
        )
        .unwrap();
        for kind in ProtocolKind::ALL {
            let out = run(kind, &cfg, &SimConfig::new(3, 5000).unwrap()).unwrap();
            let tau = |i: usize| {
                analytics::round_completion_time(kind, cfg.n(), cfg.delays(), i).unwrap()
            };
            let mut prev = out.records[0].t_success - out.records[0].t;
            for rec in &out.records {
                assert_eq!(rec.t, tau(3) * rec.r + tau(rec.v));
                assert_eq!(rec.t_success, prev + rec.t);
                prev = rec.t_success;
            }
        }
    }

    #[test]
    fn trace_sums_to_age_total() {
        let cfg = HarqConfig::from_parts(
            vec![100, 110, 120],
            vec![0.3, 0.2, 0.1],
            DelayProfile::new(2, 5, 3, 6),
        )
        .unwrap();
        let sim = SimConfig::new(11, 2000).unwrap().with_trace(true);
        let out = run(ProtocolKind::Reactive, &cfg, &sim).unwrap();
        let trace = out.trace.unwrap();
        let total: u128 = trace.values.iter().map(|&v| v as u128).sum();
        assert_eq!(total, out.totals.sum_age);
        assert_eq!(trace.horizon() as u128, out.totals.sum_t);
        // sawtooth: +1 per slot inside a cycle, reset at each decode
        let mut slot = 0usize;
        for rec in &out.records {
            let seg = &trace.values[slot..slot + rec.t as usize];
            assert!(seg.windows(2).all(|w| w[1] == w[0] + 1));
            slot += rec.t as usize;
        }
    }

    #[test]
    fn reset_value_is_previous_tau_v_minus_feedback() {
        let d = DelayProfile::new(2, 5, 3, 6);
        let cfg = HarqConfig::from_parts(vec![100, 110], vec![0.4, 0.2], d).unwrap();
        let kind = ProtocolKind::Proactive;
        let out = run(
            kind,
            &cfg,
            &SimConfig::new(5, 200).unwrap().with_trace(true),
        )
        .unwrap();
        let trace = out.trace.unwrap();
        let mut slot = out.records[0].t as usize;
        for pair in out.records.windows(2) {
            let tau_v = analytics::round_completion_time(kind, cfg.n(), &d, pair[0].v).unwrap();
            assert_eq!(trace.values[slot], tau_v - d.tau_f);
            slot += pair[1].t as usize;
        }
    }

    #[test]
    fn same_seed_same_output() {
        let cfg = HarqConfig::from_parts(
            vec![100, 110, 120],
            vec![0.3, 0.2, 0.1],
            DelayProfile::new(2, 5, 3, 6),
        )
        .unwrap();
        let sim = SimConfig::new(42, 10_000).unwrap();
        let a = run(ProtocolKind::Reactive, &cfg, &sim).unwrap();
        let b = run(ProtocolKind::Reactive, &cfg, &sim).unwrap();
        assert_eq!(a, b);
        let c = run(
            ProtocolKind::Reactive,
            &cfg,
            &SimConfig::new(43, 10_000).unwrap(),
        )
        .unwrap();
        assert_ne!(a.totals, c.totals);
    }

    #[test]
    fn single_stream_equals_run() {
        let cfg = HarqConfig::from_parts(
            vec![100, 110, 120],
            vec![0.3, 0.2, 0.1],
            DelayProfile::new(2, 5, 3, 6),
        )
        .unwrap();
        let a = run(
            ProtocolKind::Proactive,
            &cfg,
            &SimConfig::new(9, 3000).unwrap(),
        )
        .unwrap();
        let b = run_streams(ProtocolKind::Proactive, &cfg, 9, 3000, 1).unwrap();
        assert_eq!(a.totals, b);
        let four = run_streams(ProtocolKind::Proactive, &cfg, 9, 3001, 4).unwrap();
        assert_eq!(four.cycles, 3001);
        assert_eq!(
            four,
            run_streams(ProtocolKind::Proactive, &cfg, 9, 3001, 4).unwrap()
        );
    }

    #[test]
    fn two_round_v_distribution() {
        let cfg =
            HarqConfig::from_parts(vec![10, 20], vec![0.5, 0.25], DelayProfile::ZERO).unwrap();
        let out = run(
            ProtocolKind::Reactive,
            &cfg,
            &SimConfig::new(1, 200_000).unwrap(),
        )
        .unwrap();
        let (_, v) = empirical_distributions(&out.records, 2);
        assert!((v[0] - 2.0 / 3.0).abs() < 0.01);
        assert!((v[1] - 1.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn nearly_perfect_channel_has_no_failures() {
        let cfg = HarqConfig::from_parts(vec![10], vec![1e-15], DelayProfile::ZERO).unwrap();
        let out = run(
            ProtocolKind::Reactive,
            &cfg,
            &SimConfig::new(1, 10_000).unwrap(),
        )
        .unwrap();
        let (r, _) = empirical_distributions(&out.records, 1);
        assert_eq!(r, vec![1.0]);
    }
}
