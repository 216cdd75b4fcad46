//! Reference computations that do not go through the library's formulas.
#![allow(dead_code)]

use aoi_harq::{DelayProfile, ProtocolKind};

/// Gauss-Legendre nodes and weights on [-1, 1] via Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Upper Gaussian tail by quadrature of the density.
///
/// For x >= 0 this integrates phi(x) * exp(-x s - s^2 / 2) over s in
/// [0, S] where the integrand has fallen below e^-745; negative x uses the
/// complement.
pub fn q_quadrature(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - q_quadrature(-x);
    }
    let phi = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let upper = -x + (x * x + 1490.0).sqrt();
    let nodes = gauss_legendre(24);
    let panels = 400;
    let h = upper / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let a = p as f64 * h;
        let mut panel = 0.0;
        for &(t, w) in &nodes {
            let s = a + 0.5 * h * (t + 1.0);
            panel += w * (-x * s - 0.5 * s * s).exp();
        }
        total += 0.5 * h * panel;
    }
    phi * total
}

/// Moments obtained by summing over the joint law of (R, V) term by term.
#[derive(Debug, Clone, Copy)]
pub struct OracleMoments {
    pub mean_t: f64,
    pub second_t: f64,
    pub mean_tau_v: f64,
    pub second_tau_v: f64,
    pub mean_r: f64,
    pub second_r: f64,
}

pub fn taus(kind: ProtocolKind, n: &[u64], d: &DelayProfile) -> Vec<f64> {
    let rt = (d.tau_d + d.tau_f + d.tau_p) as f64;
    n.iter()
        .enumerate()
        .map(|(i, &len)| {
            let rounds = match kind {
                ProtocolKind::Reactive => (i + 1) as f64,
                ProtocolKind::Proactive => 1.0,
            };
            len as f64 + d.tau_c as f64 + rounds * rt
        })
        .collect()
}

pub fn moments_by_enumeration(
    kind: ProtocolKind,
    n: &[u64],
    e: &[f64],
    d: &DelayProfile,
) -> OracleMoments {
    let m = n.len();
    let tau = taus(kind, n, d);
    let eps_m = e[m - 1];
    let a_max = ((1e-15f64).ln() / eps_m.ln()).ceil().max(1.0) as u64;
    let p_v: Vec<f64> = (0..m)
        .map(|i| {
            let prev = if i == 0 { 1.0 } else { e[i - 1] };
            (prev - e[i]) / (1.0 - eps_m)
        })
        .collect();

    let mut acc = [0.0f64; 6];
    let mut p_r = 1.0 - eps_m;
    for a in 0..=a_max {
        let af = a as f64;
        for i in 0..m {
            let p = p_r * p_v[i];
            let t = tau[m - 1] * af + tau[i];
            acc[0] += p * t;
            acc[1] += p * t * t;
            acc[2] += p * tau[i];
            acc[3] += p * tau[i] * tau[i];
            acc[4] += p * af;
            acc[5] += p * af * af;
        }
        p_r *= eps_m;
    }
    OracleMoments {
        mean_t: acc[0],
        second_t: acc[1],
        mean_tau_v: acc[2],
        second_tau_v: acc[3],
        mean_r: acc[4],
        second_r: acc[5],
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

/// Small deterministic generator for randomized property sweeps
/// (SplitMix64).
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Integer in [lo, hi].
    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.next_u64() % (hi - lo + 1)
    }
}

/// Random bundle: m in [1, 6], increments in [1, 50], eps non-increasing in
/// [0.001, 0.99], delays in [0, 100].
pub fn random_bundle(rng: &mut SplitMix) -> (Vec<u64>, Vec<f64>, DelayProfile) {
    let m = rng.range(1, 6) as usize;
    let mut n = vec![rng.range(1, 200)];
    for _ in 1..m {
        let step = rng.range(1, 50);
        n.push(n.last().unwrap() + step);
    }
    let mut e: Vec<f64> = (0..m).map(|_| 0.001 + 0.989 * rng.uniform()).collect();
    e.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let d = DelayProfile::new(
        rng.range(0, 100),
        rng.range(0, 100),
        rng.range(0, 100),
        rng.range(0, 100),
    );
    (n, e, d)
}
