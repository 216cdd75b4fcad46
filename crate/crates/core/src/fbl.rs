//! Finite-blocklength error model for the real AWGN channel.
//!
//! The residual error after receiving `n` coded symbols of a `k`-bit message
//! is approximated by the normal approximation
//! `Q((C - k/n - log2(n)/(2n)) / sqrt(V/n))`.

use std::f64::consts::{LOG2_E, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BlockAssignment, ErrorVector};

/// Error probabilities below this value are clamped up to it so that closed
/// forms and geometric retransmission counts stay finite.
pub const EPSILON_FLOOR: f64 = 1e-300;

/// Linear SNR and message length of one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    gamma: f64,
    k: u64,
}

impl ChannelSpec {
    pub fn new(gamma: f64, k: u64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidChannel(format!(
                "SNR must be positive and finite, got {gamma}"
            )));
        }
        if k == 0 {
            return Err(Error::InvalidChannel(
                "message length k must be at least 1".into(),
            ));
        }
        Ok(Self { gamma, k })
    }

    /// Linear SNR.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Message length in information bits.
    pub fn k(&self) -> u64 {
        self.k
    }

    /// Shannon capacity in bits per channel use.
    pub fn capacity(&self) -> f64 {
        (1.0 + self.gamma).log2()
    }

    /// Channel dispersion in bits² per channel use.
    pub fn dispersion(&self) -> f64 {
        let g1 = 1.0 + self.gamma;
        (1.0 - 1.0 / (g1 * g1)) * LOG2_E * LOG2_E
    }
}

/// Gaussian tail probability `P(Z > x)` for a standard normal `Z`.
///
/// Computed as `erfc(x / sqrt 2) / 2`. Results that underflow `f64` (x above
/// roughly 38.5) are returned as the smallest positive subnormal so that the
/// value stays strictly positive.
pub fn q_function(x: f64) -> f64 {
    let q = 0.5 * libm::erfc(x / SQRT_2);
    if q > 0.0 {
        q
    } else if x.is_nan() {
        f64::NAN
    } else {
        f64::from_bits(1)
    }
}

/// Normal-approximation decoding error after `n` received symbols.
pub fn epsilon_at(spec: &ChannelSpec, n: u64) -> f64 {
    assert!(n >= 1, "code length must be positive");
    let nf = n as f64;
    let numerator = spec.capacity() - spec.k as f64 / nf - 0.5 * nf.log2() / nf;
    let scale = (spec.dispersion() / nf).sqrt();
    q_function(numerator / scale).max(EPSILON_FLOOR)
}

/// Source of per-round residual error probabilities.
///
/// `epsilon(n)` must be non-increasing in `n` for the resulting vectors to be
/// valid. Only the finite-blocklength model ships; other code-specific error
/// curves can implement this trait.
pub trait ErrorModel {
    fn epsilon(&self, n: u64) -> f64;
}

impl ErrorModel for ChannelSpec {
    fn epsilon(&self, n: u64) -> f64 {
        epsilon_at(self, n)
    }
}

/// Error vector of `n` under an arbitrary error model.
pub fn error_vector_with<M: ErrorModel + ?Sized>(
    model: &M,
    n: &BlockAssignment,
) -> Result<ErrorVector> {
    ErrorVector::new(n.lengths().iter().map(|&len| model.epsilon(len)).collect())
}

/// Finite-blocklength error vector of `n`.
///
/// Fails with [`Error::DegenerateEpsilon`] when some round's error rounds to 1
/// in double precision, i.e. the rate is far above capacity.
pub fn error_vector(spec: &ChannelSpec, n: &BlockAssignment) -> Result<ErrorVector> {
    error_vector_with(spec, n)
}
