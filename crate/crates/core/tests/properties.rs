use proptest::prelude::*;
use tunnel_core::decomposition::channel_amplitudes;
use tunnel_core::scattering::{amplitudes, transfer_matrix, StationaryState};
use tunnel_core::timescales::widths;
use tunnel_core::{BarrierSpec, ParticleSpec};

fn structure() -> impl Strategy<Value = (f64, f64, f64)> {
    // (V0 in eV, d in nm, k in 1/nm)
    (prop_oneof![-2.0..-1e-3f64, 1e-3..2.0f64], 0.05..20.0f64, 1e-3..5.0f64)
}

proptest! {
    #[test]
    fn flux_is_conserved((v0, d, k) in structure()) {
        let p = ParticleSpec::gaas();
        let b = BarrierSpec::new(v0, d, 0.0, &p).unwrap();
        let s = amplitudes(&b.potential(), &p, k).unwrap();
        prop_assert!((s.transmission + s.reflection - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn transfer_matrix_is_unimodular((v0, d, k) in structure()) {
        let p = ParticleSpec::gaas();
        prop_assume!((v0 - p.energy(k)).abs() > 1e-9 && d * k < 50.0);
        let b = BarrierSpec::new(v0, d.min(3.0), 0.0, &p).unwrap();
        let m = transfer_matrix(&b.potential(), &p, k).unwrap();
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        prop_assert!((det.norm() - 1.0).abs() <= 1e-12 * (m[0][0].norm_sqr()).max(1.0));
    }

    #[test]
    fn phase_identity((v0, d, k) in structure()) {
        let p = ParticleSpec::gaas();
        let b = BarrierSpec::new(v0, d, 0.0, &p).unwrap();
        let w = widths(&b, k);
        prop_assume!(w.d_phase.is_finite() && w.d_eff.is_finite() && w.x_start.is_finite());
        let scale = w.d_phase.abs().max(w.d_eff.abs()).max(w.x_start.abs()).max(d);
        prop_assert!((w.d_phase - (w.d_eff - w.x_start)).abs() <= 1e-10 * scale);
    }

    #[test]
    fn channel_split((v0, d, k) in structure()) {
        let p = ParticleSpec::gaas();
        let b = BarrierSpec::new(v0, d, 1.0, &p).unwrap();
        let c = channel_amplitudes(&b, &p, k).unwrap();
        let s = amplitudes(&b.potential(), &p, k).unwrap();
        prop_assert!((c.c_tr + c.c_ref - 1.0).norm() <= 1e-12);
        prop_assert!((c.c_tr.norm_sqr() - s.transmission).abs() <= 1e-12);
        prop_assert!((c.c_tr.norm_sqr() + c.c_ref.norm_sqr() - 1.0).abs() <= 1e-12);
        prop_assert!((c.c_tr.conj() * c.c_ref).re.abs() <= 1e-12);
        prop_assert!(c.gamma >= 0.0 && c.gamma < std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn below_barrier_d_eff_is_positive(d in 0.05..20.0f64, v0 in 1e-3..2.0f64, frac in 0.01..0.99f64) {
        let p = ParticleSpec::gaas();
        let b = BarrierSpec::new(v0, d, 0.0, &p).unwrap();
        let k = p.wavenumber(frac * v0).unwrap();
        prop_assert!(widths(&b, k).d_eff > 0.0);
    }

    #[test]
    fn energy_roundtrip(e in 1e-9..10.0f64) {
        let p = ParticleSpec::gaas();
        let k = p.wavenumber(e).unwrap();
        prop_assert!((p.energy(k) - e).abs() <= 1e-12 * e);
    }

    #[test]
    fn stationary_state_is_smooth_at_edges((v0, d, k) in structure()) {
        let p = ParticleSpec::gaas();
        prop_assume!(d < 5.0);
        let b = BarrierSpec::new(v0, d, 2.0, &p).unwrap();
        let st = StationaryState::new(&b.potential(), &p, k).unwrap();
        for x in [b.left(), b.right()] {
            let eps = 1e-9 * x.abs().max(1.0);
            let (l, dl) = st.value_and_derivative(x - eps);
            let (r, dr) = st.value_and_derivative(x + eps);
            let scale = l.norm().max(1.0);
            prop_assert!((l - r).norm() <= 1e-7 * scale);
            prop_assert!((dl - dr).norm() <= 1e-6 * dl.norm().max(k * scale));
        }
    }

    #[test]
    fn free_barrier_degenerates(d in 0.05..20.0f64, k in 1e-3..5.0f64) {
        let p = ParticleSpec::gaas();
        let b = BarrierSpec::new(0.0, d, 0.0, &p).unwrap();
        let w = widths(&b, k);
        prop_assert_eq!((w.d_phase, w.d_dwell, w.d_eff, w.x_start), (d, d, d, 0.0));
    }
}
