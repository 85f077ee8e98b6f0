use fluorotraj::contextual::{cv_for, povm_element, Observable};
use fluorotraj::measurement::{kraus_update, update_with_loss_dephasing, QuadratureSample};
use fluorotraj::mlp::ideal::{ideal_h_prime, p_at_energy, EnergyRoots};
use fluorotraj::sme::{rouchon_step, CMatrix, Channel, GeneralState, OperatorSet};
use fluorotraj::{BlochState, MeasurementParams};
use num_complex::Complex64;
use proptest::prelude::*;

fn ball_point() -> impl Strategy<Value = BlochState> {
    (0.0..=1.0f64, 0.0..=std::f64::consts::PI, 0.0..std::f64::consts::TAU)
        .prop_map(|(r, th, ph)| BlochState::new(1.0 + r * th.cos(), r * th.sin() * ph.cos(), r * th.sin() * ph.sin()))
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-4.0..4.0f64, -4.0..4.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn matrix(n: usize, scale: f64) -> impl Strategy<Value = CMatrix> {
    proptest::collection::vec(complex(), n * n).prop_map(move |v| CMatrix::from_vec(n, n, v) * Complex64::new(scale, 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kraus_update_stays_in_ball(s in ball_point(), a in complex(), eps in 0.0..0.1f64) {
        let next = kraus_update(&s, a, eps).unwrap();
        prop_assert!(next.is_physical());
    }

    #[test]
    fn lossy_update_stays_in_ball(s in ball_point(), a in complex(), eta in 0.0..=1.0f64, gphi in 0.0..1.0f64, dt in 0.001..0.05f64) {
        let p = MeasurementParams::new(1.0, gphi, eta, dt).unwrap();
        prop_assert!(update_with_loss_dephasing(&s, &p, a).unwrap().is_physical());
    }

    #[test]
    fn quadrature_alpha_round_trip(a in complex(), dt in 1e-4..0.1f64) {
        let back = QuadratureSample::from_alpha(a, dt).to_alpha(dt);
        prop_assert!((back - a).norm() < 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn povm_elements_are_positive(a in complex(), eps in 0.0..0.5f64) {
        let e = povm_element(a, eps);
        let ev = e.symmetric_eigen().eigenvalues;
        prop_assert!(ev.iter().all(|v| *v >= -1e-15));
    }

    #[test]
    fn identity_cv_is_one(a in complex(), eps in 0.001..0.5f64) {
        prop_assert_eq!(cv_for(Observable::Identity, eps).unwrap().eval(a), 1.0);
    }

    #[test]
    fn energy_roots_solve_the_hamiltonian(theta in -3.0..3.0f64, e in -2.0..2.0f64) {
        if let EnergyRoots::Pair(hi, lo) = p_at_energy(theta, e, 1.0) {
            for p in [hi, lo] {
                prop_assert!((ideal_h_prime(theta, p, 1.0) - e).abs() < 1e-9 * (1.0 + p * p));
            }
        }
    }

    #[test]
    fn rouchon_step_is_a_state(h in matrix(3, 0.5), l1 in matrix(3, 0.6), l2 in matrix(3, 0.6), eta in 0.0..=1.0f64, r in proptest::collection::vec(-30.0..30.0f64, 2)) {
        let herm = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        let ops = OperatorSet::new(herm, vec![Channel { operator: l1, eta }, Channel { operator: l2, eta: 1.0 - eta }]).unwrap();
        let c = |v: f64| Complex64::new(v, 0.0);
        let rho = GeneralState::new(CMatrix::from_row_slice(3, 3, &[c(0.5), c(0.1), c(0.0), c(0.1), c(0.3), c(0.05), c(0.0), c(0.05), c(0.2)])).unwrap();
        let dt = 0.05 / ops.dissipation_scale().max(1.0);
        let next = rouchon_step(&rho, &r, dt, &ops).unwrap();
        prop_assert!((next.0.trace() - c(1.0)).norm() < 1e-14);
        prop_assert!(next.min_eigenvalue() >= -1e-10);
    }
}
