use alh_core::backgrounds::{birmingham_background, boost_isometry, pullback_metric};
use alh_core::mass::{energy_momentum, minkowski_norm2, MassConfig};

#[test]
fn boosted_energy_momentum_transforms_as_a_covector() {
    let g = birmingham_background(3, 1, 0.4).unwrap().metric;
    let cfg = MassConfig::default();
    let before = energy_momentum(&g, &cfg, 1e-9).unwrap();
    let phi = boost_isometry(3, 2, 0.3).unwrap();
    let after = energy_momentum(&pullback_metric(&g, &phi).unwrap(), &cfg, 1e-9).unwrap();
    let predicted = phi.transform_energy_momentum(&before.components);
    let scale = minkowski_norm2(&before.components).abs().sqrt();
    for (a, p) in after.components.iter().zip(&predicted) {
        assert!((a - p).abs() <= 1e-5 * scale, "{:?} vs {predicted:?}", after.components);
    }
    assert!((after.norm2 - before.norm2).abs() <= 1e-5 * before.norm2.abs());
    assert_eq!(after.class, before.class);
    // The boost mixes the energy with the second spatial component only.
    assert!(predicted[2].abs() > 0.1 * scale && after.components[1].abs() <= 1e-8 * scale);
}
