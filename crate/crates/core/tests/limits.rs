use tunnel_core::scattering::amplitudes;
use tunnel_core::timescales::{d_dwell, d_eff, d_phase, longwave_limits, scaling_limit, widths, x_start};
use tunnel_core::{BarrierSpec, ParticleSpec};

const K_SLOW: f64 = 1e-6;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn structure(kappa0_d: f64, beta: f64) -> (ParticleSpec, BarrierSpec) {
    let p = ParticleSpec::gaas();
    let d = 0.5;
    (p, BarrierSpec::from_kappa0(kappa0_d / d, d, beta, 0.0, &p).unwrap())
}

#[test]
fn slow_barrier_ratios() {
    for x in [0.5, 1.0, 2.0] {
        let (_, b) = structure(x, 1.0);
        let w = widths(&b, K_SLOW);
        let d = b.width();
        assert!(rel(w.d_phase / d, 2.0 / (x * x.tanh())) <= 1e-4);
        assert!(rel(w.d_eff / d, 2.0 / x * (0.5 * x).tanh()) <= 1e-4);
        assert!(rel(w.x_start / d, -2.0 / (x * x.sinh())) <= 1e-4);
        assert!((w.d_dwell / d).abs() <= 1e-4);
    }
}

#[test]
fn slow_well_ratios() {
    for x in [0.5, 1.0, 2.0] {
        let (_, b) = structure(x, -1.0);
        let w = widths(&b, K_SLOW);
        let d = b.width();
        assert!(rel(w.d_phase / d, -2.0 / (x * x.tan())) <= 1e-4);
        assert!(rel(w.d_eff / d, 2.0 / x * (0.5 * x).tan()) <= 1e-4);
        assert!(rel(w.x_start / d, 2.0 / (x * x.sin())) <= 1e-4);
        assert!((w.d_dwell / d).abs() <= 1e-4);
    }
}

#[test]
fn limit_record_matches_slow_evaluation() {
    for beta in [1.0, -1.0] {
        for x in [0.5, 1.0, 2.0] {
            let (_, b) = structure(x, beta);
            let lim = longwave_limits(&b).unwrap();
            let w = widths(&b, K_SLOW);
            let d = b.width();
            assert!(rel(w.d_phase / d, lim.d_phase_over_d.value) <= 1e-4);
            assert!(rel(w.d_eff / d, lim.d_eff_over_d.value) <= 1e-4);
            assert!(rel(w.x_start / d, lim.x_start_over_d.value) <= 1e-4);
            assert_eq!(lim.d_dwell_over_d.value, 0.0);
        }
    }
}

#[test]
fn barrier_limits_at_unit_strength() {
    let (_, b) = structure(1.0, 1.0);
    let lim = longwave_limits(&b).unwrap();
    assert!(rel(lim.d_phase_over_d.value, 2.0 / 1f64.tanh()) < 1e-15);
    assert!(rel(lim.d_eff_over_d.value, 2.0 * 0.5f64.tanh()) < 1e-15);
    assert!(rel(lim.x_start_over_d.value, -2.0 / 1f64.sinh()) < 1e-15);
}

#[test]
fn slow_dwell_grows_quadratically() {
    for beta in [1.0, -1.0] {
        let (_, b) = structure(1.0, beta);
        let (k1, k2) = (1e-4, 1e-2);
        let exponent = (d_dwell(&b, k2) / d_dwell(&b, k1)).ln() / (k2 / k1).ln();
        assert!((exponent - 2.0).abs() <= 0.05, "beta {beta}: exponent {exponent}");
    }
}

#[test]
fn weak_structure_is_transparent_in_d_eff_only() {
    let (_, b) = structure(1e-4, 1.0);
    let d = b.width();
    let k_hi = 10.0 * b.kappa0();
    let mut worst: f64 = 0.0;
    for i in 0..=400 {
        let k = 1e-4 * (k_hi / 1e-4).powf(i as f64 / 400.0);
        worst = worst.max((d_eff(&b, k) / d - 1.0).abs());
    }
    assert!(worst <= 1e-6, "max |d_eff/d - 1| = {worst}");
    assert!(d_phase(&b, K_SLOW) / d > 1e3);
}

#[test]
fn phase_length_diverges_for_weakening_barriers() {
    let values: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&x| longwave_limits(&structure(x, 1.0).1).unwrap().d_phase_over_d.value)
        .collect();
    assert!(values.windows(2).all(|w| w[1] > w[0]));
    let eff: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&x| longwave_limits(&structure(x, 1.0).1).unwrap().d_eff_over_d.value)
        .collect();
    assert!((eff[2] - 1.0).abs() < 1e-6);
}

#[test]
fn fixed_lambda_scaling() {
    let p = ParticleSpec::gaas();
    for beta in [1.0, -1.0] {
        let mut gaps = Vec::new();
        for d in [1e-3, 1e-4, 1e-5] {
            let s = scaling_limit(1.0, 1.0, d, beta, &p).unwrap();
            assert_eq!(s.target_transmission, 0.8);
            gaps.push((s.transmission - s.target_transmission).abs());
            assert!((s.d_eff_over_d - 1.0).abs() <= 1e-3);
            assert!(rel(s.x_start, -s.d_phase_over_d * d) <= 1e-3);
            assert!(rel(s.x_start, s.target_x_start) <= 1e-2);
        }
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "beta {beta}: {gaps:?}");
        assert!(gaps[2] <= 1e-6);
    }
}

#[test]
fn scaling_dwell_tends_to_limit_transmission() {
    let p = ParticleSpec::gaas();
    for beta in [1.0, -1.0] {
        let s = scaling_limit(1.0, 1.0, 1e-5, beta, &p).unwrap();
        assert!(rel(s.d_dwell_over_d, s.target_d_dwell_over_d) <= 1e-4);
    }
}

#[test]
fn fast_particles_see_the_bare_width() {
    for beta in [1.0, -1.0] {
        let (p, b) = structure(1.0, beta);
        let k = 100.0 * b.kappa0();
        let d = b.width();
        assert!((d_phase(&b, k) / d - 1.0).abs() <= 1e-3);
        assert!((d_dwell(&b, k) / d - 1.0).abs() <= 1e-3);
        assert!((d_eff(&b, k) / d - 1.0).abs() <= 1e-3);
        assert!((x_start(&b, k) / d).abs() <= 1e-3);
        assert!(amplitudes(&b.potential(), &p, k).unwrap().transmission > 0.999);
    }
}
