//! Closed-form level values for the Birmingham family.
//!
//! For `g = dr²/f + r²h_k` with `f = k + r² − 2m·r^{2−n}` the only nonzero
//! traceless Ricci component is `T^r_r = −(n−1)(n−2)·m·r^{−n}`, so on the
//! level `r` the flux `−∫ T^r_r g^{rr} ∂_rV ν_r dA` reduces to
//! `(n−1)(n−2)·m·vol(h_k)·√f·∂_rV / r`. Level values are compared within
//! the roundoff bound the pipeline reports for each row.

use std::f64::consts::PI;

use alh_core::backgrounds::birmingham_background;
use alh_core::mass::{end_mass, energy_momentum, MassConfig};

/// Area of the unit round `S^{n−1}` by direct integration of the
/// `sin^{j}` factors, `∫₀^π sin^j = (j−1)/j · ∫₀^π sin^{j−2}`.
fn round_area(n: usize) -> f64 {
    let mut sin_int = vec![PI, 2.0];
    for j in 2..n {
        let next = (j as f64 - 1.0) / j as f64 * sin_int[j - 2];
        sin_int.push(next);
    }
    2.0 * PI * sin_int[1..n - 1].iter().product::<f64>()
}

fn f(n: usize, k: f64, m: f64, r: f64) -> f64 {
    k + r * r - 2.0 * m * r.powi(2 - n as i32)
}

#[test]
fn round_area_values() {
    assert!((round_area(3) - 4.0 * PI).abs() < 1e-14);
    assert!((round_area(4) - 2.0 * PI * PI).abs() < 1e-13);
}

#[test]
fn spherical_level_values_match_the_series() {
    for (n, m) in [(3, 0.1), (3, 0.5), (3, 1.0), (4, 0.3)] {
        let g = birmingham_background(n, 1, m).unwrap().metric;
        let em = energy_momentum(&g, &MassConfig::default(), 1e-9).unwrap();
        let c = ((n - 1) * (n - 2)) as f64 * round_area(n);
        for row in &em.results[0].table {
            let r = row.level;
            let want = c * m * f(n, 1.0, m, r).sqrt() / (1.0 + r * r).sqrt();
            assert!((row.value - want).abs() <= 1e-9 * want.abs() + row.noise, "n={n} m={m} r={r}: {} vs {want}", row.value);
        }
        let m0 = em.components[0];
        assert!((m0 / m - c).abs() <= 1e-6 * c, "n={n}: {}", m0 / m);
    }
}

#[test]
fn toroidal_level_values_match_the_series() {
    for (n, m) in [(3, -0.2), (3, -0.4), (4, -0.1)] {
        let model = birmingham_background(n, 0, m).unwrap();
        let res = end_mass(&model.metric, &model.potentials[0], &MassConfig::default()).unwrap();
        let c = ((n - 1) * (n - 2)) as f64;
        for row in &res.table {
            let r = row.level;
            let want = c * m * f(n, 0.0, m, r).sqrt() / r;
            assert!((row.value - want).abs() <= 1e-9 * want.abs() + row.noise, "n={n} m={m} r={r}: {} vs {want}", row.value);
        }
        assert!(res.m < 0.0 && (res.m - c * m).abs() <= 1e-6 * (c * m).abs(), "{}", res.m);
    }
}
