use num_complex::Complex64 as C64;
use proptest::prelude::*;

use vcoher::model::{
    build_conventional, build_liouvillian_parts, equations_of_motion, full_generator, generator_terms,
    max_abs, DensityVector, Frame, Mat3,
};
use vcoher::response::{normalized_coherence, CoherenceMode};
use vcoher::solver::{harmonic_balance, RESIDUAL_TOL};
use vcoher::SystemParams;

fn params() -> impl Strategy<Value = SystemParams> {
    (
        (0.2..3.0f64, 0.2..3.0f64, 0.0..0.98f64),
        (0.0..5.0f64, -6.3..6.3f64, 0.0..2.0f64, -6.3..6.3f64),
        (-5.0..5.0f64, -5.0..5.0f64),
    )
        .prop_map(|((gamma2, gamma3, eta), (omega_c_mag, phi_c, omega_p_mag, phi_p), (delta_c, delta))| SystemParams {
            gamma2,
            gamma3,
            eta,
            omega_c_mag,
            phi_c,
            omega_p_mag,
            phi_p,
            delta_c,
            delta,
        })
}

/// Random Hermitian, positive, unit-trace density matrix.
fn density() -> impl Strategy<Value = Mat3> {
    prop::array::uniform18(-1.0..1.0f64).prop_filter_map("degenerate", |v| {
        let a = Mat3::from_fn(|i, j| C64::new(v[2 * (3 * i + j)], v[2 * (3 * i + j) + 1]));
        let h = a * a.adjoint();
        let tr = h.trace();
        (tr.re > 1e-6).then(|| h / tr)
    })
}

fn off_resonant() -> impl Strategy<Value = SystemParams> {
    (params(), 0.3..4.0f64, prop::bool::ANY).prop_map(|(p, d, neg)| SystemParams {
        delta: if neg { -d } else { d },
        ..p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn trace_is_conserved(p in params(), rho in density(), t in 0.0..20.0f64) {
        let d = equations_of_motion(&p, &rho, t);
        prop_assert!(d.trace().norm() <= 1e-12, "{}", d.trace().norm());
        let (l0, lf, lb) = full_generator(&generator_terms(&p, Frame::SingleRotating));
        for l in [l0, lf, lb] {
            for c in 0..9 {
                let col_trace = l[(0, c)] + l[(4, c)] + l[(8, c)];
                prop_assert!(col_trace.norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn reduced_generator_reproduces_equations_of_motion(p in params(), rho in density(), t in 0.0..20.0f64) {
        let parts = build_liouvillian_parts(&p);
        let r = DensityVector::from_matrix(&rho).0;
        let reduced = parts.reduced_derivative(&r, p.omega_p(), p.delta, t);
        let direct = DensityVector::from_matrix(&equations_of_motion(&p, &rho, t)).0;
        let scale = max_abs(&direct).max(1.0);
        prop_assert!(max_abs(&(reduced - direct)) / scale <= 1e-12);
    }

    #[test]
    fn hermitian_states_stay_hermitian(p in params(), rho in density(), t in 0.0..20.0f64) {
        let d = equations_of_motion(&p, &rho, t);
        prop_assert!(max_abs(&(d - d.adjoint())) <= 1e-12);
    }

    #[test]
    fn common_phase_of_both_fields_is_a_gauge(p in off_resonant(), alpha in -3.2..3.2f64) {
        let p = SystemParams { omega_p_mag: 0.01, ..p };
        let shifted = SystemParams { phi_c: p.phi_c + alpha, phi_p: p.phi_p + alpha, ..p };
        for mode in [CoherenceMode::FloquetR1, CoherenceMode::StaticFull] {
            let a = normalized_coherence(&p, mode).unwrap();
            let b = normalized_coherence(&shifted, mode).unwrap();
            prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1e-3), "{mode}: {a} vs {b}");
        }
    }

    #[test]
    fn resonant_static_forms_agree(p in params()) {
        let p = SystemParams { delta: 0.0, ..p };
        let (mc, lc) = build_conventional(&p);
        let parts = build_liouvillian_parts(&p);
        let (ms, ls) = vcoher::model::assemble_static(&parts, p.omega_p());
        prop_assert!(max_abs(&(mc - ms)) <= 1e-12);
        prop_assert!(max_abs(&(lc - ls)) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn harmonic_balance_is_hermitian_and_solves_its_system(p in off_resonant(), k_max in 1usize..7) {
        let sol = harmonic_balance(&build_liouvillian_parts(&p), p.delta, p.omega_p(), k_max).unwrap();
        prop_assert!(sol.hermiticity_defect() <= 1e-9, "{}", sol.hermiticity_defect());
        let res = sol.residual_norm.expect("residual recorded");
        prop_assert!(res <= RESIDUAL_TOL, "{res}");
        prop_assert_eq!(sol.iter().count(), 2 * k_max + 1);
    }

    #[test]
    fn periodic_state_is_a_density_matrix(p in off_resonant()) {
        let p = SystemParams { omega_p_mag: p.omega_p_mag.min(0.5), ..p };
        let sol = harmonic_balance(&build_liouvillian_parts(&p), p.delta, p.omega_p(), 8).unwrap();
        let period = 2.0 * std::f64::consts::PI / p.delta.abs();
        for s in 0..8 {
            let (rho, herm) = DensityVector(sol.evaluate(p.delta, period * s as f64 / 8.0)).to_matrix();
            prop_assert!(herm <= 1e-9);
            prop_assert!((rho.trace() - C64::new(1.0, 0.0)).norm() <= 1e-12);
            for i in 0..3 {
                prop_assert!(rho[(i, i)].re >= -1e-6, "population {} = {}", i + 1, rho[(i, i)].re);
            }
        }
    }
}
