//! Age-optimal block assignment over `n_min <= n_1 < ... < n_m <= n_max`.
//!
//! Candidates are indexed by a bitmask `p` of width `n_max - n_min + 1`: bit
//! `a` (1-based) set means `n_min + a - 1` is one of the cumulative lengths,
//! so a mask with `m` set bits is an assignment with `m` rounds.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::avg_aoi_raw;
use crate::error::{Error, Result};
use crate::fbl::{epsilon_at, ChannelSpec};
use crate::model::{BlockAssignment, DelayProfile, ProtocolKind};

/// Largest width [`exhaustive_search`] accepts by default.
pub const DEFAULT_WIDTH_CAP: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    n_min: u64,
    n_max: u64,
    spec: ChannelSpec,
    delays: DelayProfile,
    kind: ProtocolKind,
}

impl SearchSpace {
    pub fn new(
        n_min: u64,
        n_max: u64,
        spec: ChannelSpec,
        delays: DelayProfile,
        kind: ProtocolKind,
    ) -> Result<Self> {
        if n_min < spec.k() {
            return Err(Error::InvalidSpace(format!(
                "n_min {n_min} is below the message length {}",
                spec.k()
            )));
        }
        if n_max < n_min {
            return Err(Error::InvalidSpace(format!(
                "n_max {n_max} is below n_min {n_min}"
            )));
        }
        Ok(Self {
            n_min,
            n_max,
            spec,
            delays,
            kind,
        })
    }

    pub fn n_min(&self) -> u64 {
        self.n_min
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub fn spec(&self) -> &ChannelSpec {
        &self.spec
    }

    pub fn delays(&self) -> &DelayProfile {
        &self.delays
    }

    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    /// `eps(n)` for every `n` in the range; index 0 is `n_min`.
    fn epsilon_table(&self) -> Result<Vec<f64>> {
        (self.n_min..=self.n_max)
            .enumerate()
            .map(|(i, n)| {
                let eps = epsilon_at(&self.spec, n);
                if eps < 1.0 {
                    Ok(eps)
                } else {
                    Err(Error::DegenerateEpsilon {
                        round: i + 1,
                        value: eps,
                    })
                }
            })
            .collect()
    }
}

/// Selection vector over the `width` candidate lengths.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bitmask(Vec<bool>);

impl Bitmask {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if !bits.iter().any(|&b| b) {
            return Err(Error::EmptyMask);
        }
        Ok(Self(bits))
    }

    /// Low bit first: bit 0 of `bits` is position 1.
    pub fn from_bits(bits: u64, width: usize) -> Result<Self> {
        assert!(width <= 64);
        Self::new((0..width).map(|i| bits >> i & 1 == 1).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

/// Set-bit positions `a_1 < ... < a_m` become `n_i = a_i + n_min - 1`.
pub fn mask_to_assignment(p: &Bitmask, n_min: u64) -> Result<BlockAssignment> {
    let lengths: Vec<u64> = p
        .bits()
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| n_min + i as u64)
        .collect();
    if lengths.is_empty() {
        return Err(Error::EmptyMask);
    }
    BlockAssignment::new(lengths)
}

/// Inverse of [`mask_to_assignment`] for a mask of the given width.
pub fn assignment_to_mask(n: &BlockAssignment, n_min: u64, width: usize) -> Result<Bitmask> {
    let mut bits = vec![false; width];
    for &len in n.lengths() {
        let pos = len
            .checked_sub(n_min)
            .map(|p| p as usize)
            .filter(|&p| p < width);
        match pos {
            Some(p) => bits[p] = true,
            None => {
                return Err(Error::InvalidSpace(format!(
                    "length {len} outside [{n_min}, {}]",
                    n_min + width as u64 - 1
                )))
            }
        }
    }
    Bitmask::new(bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMethod {
    Exhaustive,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub n_optimal: BlockAssignment,
    pub aoi_min: f64,
    /// Number of candidates scored.
    pub evaluations: u64,
    pub method: SearchMethod,
}

/// Best candidate seen so far: (aoi, lengths).
#[derive(Debug, Clone)]
struct Best {
    aoi: f64,
    lengths: Vec<u64>,
}

/// Lower AoI wins; ties go to fewer rounds, then the lexicographically
/// smaller assignment.
fn better(a: &Best, b: &Best) -> bool {
    match a.aoi.partial_cmp(&b.aoi) {
        Some(Ordering::Less) => true,
        Some(Ordering::Greater) => false,
        _ => (a.lengths.len(), &a.lengths) < (b.lengths.len(), &b.lengths),
    }
}

fn pick(a: Option<Best>, b: Option<Best>) -> Option<Best> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if better(&b, &a) { b } else { a }),
        (a, None) => a,
        (None, b) => b,
    }
}

struct Scorer<'a> {
    space: &'a SearchSpace,
    eps: &'a [f64],
}

impl Scorer<'_> {
    fn score_positions(
        &self,
        positions: &[usize],
        lengths: &mut Vec<u64>,
        eps: &mut Vec<f64>,
    ) -> f64 {
        lengths.clear();
        eps.clear();
        for &p in positions {
            lengths.push(self.space.n_min + p as u64);
            eps.push(self.eps[p]);
        }
        avg_aoi_raw(self.space.kind, lengths, eps, &self.space.delays)
    }

    fn score_mask(
        &self,
        mask: u64,
        positions: &mut Vec<usize>,
        lengths: &mut Vec<u64>,
        eps: &mut Vec<f64>,
    ) -> f64 {
        positions.clear();
        let mut bits = mask;
        while bits != 0 {
            positions.push(bits.trailing_zeros() as usize);
            bits &= bits - 1;
        }
        self.score_positions(positions, lengths, eps)
    }
}

/// Scores every non-empty mask; refuses widths above [`DEFAULT_WIDTH_CAP`].
pub fn exhaustive_search(space: &SearchSpace) -> Result<SearchResult> {
    exhaustive_search_capped(space, DEFAULT_WIDTH_CAP)
}

/// [`exhaustive_search`] with an explicit width cap (at most 63).
pub fn exhaustive_search_capped(space: &SearchSpace, width_cap: usize) -> Result<SearchResult> {
    let width = space.width();
    let cap = width_cap.min(63);
    if width > cap {
        return Err(Error::WidthExceeded { width, cap });
    }
    let eps = space.epsilon_table()?;
    let scorer = Scorer { space, eps: &eps };
    let total: u64 = 1 << width;

    const CHUNK: u64 = 1 << 12;
    let chunks = total.div_ceil(CHUNK);
    let best = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut positions = Vec::with_capacity(width);
            let mut lengths = Vec::with_capacity(width);
            let mut es = Vec::with_capacity(width);
            let mut local: Option<Best> = None;
            for mask in (c * CHUNK).max(1)..((c + 1) * CHUNK).min(total) {
                let aoi = scorer.score_mask(mask, &mut positions, &mut lengths, &mut es);
                let wins = match &local {
                    None => true,
                    Some(cur) => {
                        aoi < cur.aoi
                            || (aoi == cur.aoi
                                && (lengths.len(), &lengths[..])
                                    < (cur.lengths.len(), &cur.lengths[..]))
                    }
                };
                if wins {
                    local = Some(Best {
                        aoi,
                        lengths: lengths.clone(),
                    });
                }
            }
            local
        })
        .reduce(|| None, pick)
        .expect("at least one candidate");

    Ok(SearchResult {
        n_optimal: BlockAssignment::new(best.lengths)?,
        aoi_min: best.aoi,
        evaluations: total - 1,
        method: SearchMethod::Exhaustive,
    })
}

/// Advances `idx` to the next `k`-combination of `0..n` in lexicographic
/// order; false when exhausted.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Best assignment with exactly `m` rounds, and the number scored.
fn best_with_rounds(scorer: &Scorer<'_>, width: usize, m: usize) -> (Best, u64) {
    let mut idx: Vec<usize> = (0..m).collect();
    let mut lengths = Vec::with_capacity(m);
    let mut eps = Vec::with_capacity(m);
    let mut best: Option<Best> = None;
    let mut count = 0u64;
    loop {
        let aoi = scorer.score_positions(&idx, &mut lengths, &mut eps);
        count += 1;
        // combinations arrive in lexicographic order, so only strict
        // improvements replace the incumbent
        if best.as_ref().is_none_or(|b| aoi < b.aoi) {
            best = Some(Best {
                aoi,
                lengths: lengths.clone(),
            });
        }
        if !next_combination(&mut idx, width) {
            break;
        }
    }
    (best.expect("m <= width"), count)
}

/// Early-terminating search over increasing `m`: stops at the first `m`
/// whose best AoI is strictly worse than the best with `m - 1` rounds and
/// returns the latter.
pub fn heuristic_search(space: &SearchSpace) -> Result<SearchResult> {
    let width = space.width();
    let eps = space.epsilon_table()?;
    let scorer = Scorer { space, eps: &eps };

    let mut previous: Option<Best> = None;
    let mut evaluations = 0u64;
    for m in 1..=width {
        let (best_m, count) = best_with_rounds(&scorer, width, m);
        evaluations += count;
        let prev_aoi = previous.as_ref().map_or(f64::INFINITY, |b| b.aoi);
        if best_m.aoi > prev_aoi {
            break;
        }
        // ties keep the smaller m
        if best_m.aoi < prev_aoi {
            previous = Some(best_m);
        }
    }
    let best = previous.expect("m = 1 always improves on infinity");
    Ok(SearchResult {
        n_optimal: BlockAssignment::new(best.lengths)?,
        aoi_min: best.aoi,
        evaluations,
        method: SearchMethod::Heuristic,
    })
}
