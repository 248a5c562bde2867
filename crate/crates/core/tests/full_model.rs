use fanodiag::full_diag::{FullModel, FullOptions};
use fanodiag::{BathSpectrum, Cutoff, ModelParams};

#[test]
fn commutator_sum_rule_strong_damping() {
    let s = BathSpectrum::drude(0.5, Cutoff::Finite(20.0));
    let p = ModelParams::new(1.0, 0.5, Cutoff::Finite(20.0)).unwrap();
    let m = FullModel::new(&s, &p, FullOptions::default()).unwrap();
    for &t in &[1.0, 5.0, 20.0] {
        let r = m.sum_rule(t).unwrap();
        assert!((r.total - 1.0).abs() <= 1e-4, "t={t}: {r:?}");
    }
}

#[test]
fn counter_rotating_weight_is_small_at_weak_damping() {
    let s = BathSpectrum::drude(1e-3, Cutoff::Infinite);
    let p = ModelParams::new(1.0, 1e-3, Cutoff::Infinite).unwrap();
    let m = FullModel::new(&s, &p, FullOptions::default()).unwrap();
    for k in 0..=20 {
        let t = 250.0 * k as f64;
        let (ca, cd) = m.c_coefficients(t).unwrap();
        assert!(cd.norm() <= 1e-2 * ca.norm(), "t={t}: {ca} {cd}");
    }
}
