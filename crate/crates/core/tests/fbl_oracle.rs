mod common;

use aoi_harq::fbl::{epsilon_at, q_function};
use aoi_harq::ChannelSpec;
use common::{q_quadrature, rel};

#[test]
fn quadrature_oracle_is_sound() {
    // Q(1) to 17 digits
    assert!(rel(q_quadrature(1.0), 0.158_655_253_931_457_05) < 1e-14);
    assert!(rel(q_quadrature(0.0), 0.5) < 1e-14);
}

#[test]
fn q_at_one() {
    let q = q_function(1.0);
    assert!(rel(q, q_quadrature(1.0)) < 1e-12);
    assert!((q - 0.158_655).abs() < 1e-6);
}

#[test]
fn q_relative_error_grid() {
    let mut x = -37.0;
    while x <= 37.0 {
        let got = q_function(x);
        let want = q_quadrature(x);
        assert!(rel(got, want) <= 1e-12, "x = {x}: {got} vs {want}");
        x += 0.25;
    }
}

#[test]
fn epsilon_at_zero_db_double_rate() {
    let spec = ChannelSpec::new(1.0, 100).unwrap();
    let n = 200f64;
    let v = spec.dispersion();
    let arg = (1.0 - 0.5 - 0.5 * n.log2() / n) / (v / n).sqrt();
    assert!((arg - 5.44).abs() < 0.01);
    let eps = epsilon_at(&spec, 200);
    assert!(rel(eps, q_quadrature(arg)) < 1e-12);
    assert!((eps - 2.6e-8).abs() < 0.1e-8);
}
