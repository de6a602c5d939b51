use std::f64::consts::{FRAC_PI_2, PI};

use catmet_core::channels::lossy_state;
use catmet_core::measure::{phase_uncertainty, PhaseResponse};
use catmet_core::{
    cat, loss_channel, phase_rotation, qfi, rho_derivative, CatParams, LossModel, Observable, ObservableKind,
    Pi2Pulse,
};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

fn qfi_of(rho: &catmet_core::DensityMatrix) -> f64 {
    qfi(rho, &rho_derivative(rho), 1).unwrap().f_q
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn lossy_states_are_physical(n in 1usize..16, theta in 0.0..=FRAC_PI_2, varphi in 0.0..2.0 * PI, eta in 0.3..=1.0f64) {
        let s = cat(&CatParams::with_varphi(theta, varphi, n).unwrap()).unwrap();
        let rho = lossy_state(&s, &LossModel::from_eta(eta, 1.0).unwrap()).unwrap();
        prop_assert!(rho.check_physical().is_ok());
        prop_assert!((rho.mean_number() - n as f64 * eta).abs() < 1e-9);
    }

    #[test]
    fn qfi_ignores_accumulated_phase(n in 1usize..14, theta in 0.0..=FRAC_PI_2, eta in 0.5..=1.0f64, phi in -PI..PI) {
        let s = cat(&CatParams::new(theta, n).unwrap()).unwrap();
        let rho = lossy_state(&s, &LossModel::from_eta(eta, 0.0).unwrap()).unwrap();
        let (f0, f1) = (qfi_of(&rho), qfi_of(&phase_rotation(&rho, phi)));
        prop_assert!((f0 - f1).abs() <= 1e-9 * f0.max(1.0));
    }

    #[test]
    fn qfi_within_heisenberg_bound(n in 1usize..14, theta in 0.0..=FRAC_PI_2, eta in 0.5..=1.0f64) {
        let s = cat(&CatParams::new(theta, n).unwrap()).unwrap();
        let rho = lossy_state(&s, &LossModel::from_eta(eta, 1.0).unwrap()).unwrap();
        let f = qfi_of(&rho);
        prop_assert!(f >= -1e-12);
        prop_assert!(f <= (n * n) as f64 + 1e-9);
    }

    #[test]
    fn damping_composes(n in 1usize..12, theta in 0.0..=FRAC_PI_2, e1 in 0.4..=1.0f64, e2 in 0.4..=1.0f64) {
        let rho = cat(&CatParams::new(theta, n).unwrap()).unwrap().density();
        let two_step = loss_channel(&loss_channel(&rho, e1, e2).unwrap(), e2, e1).unwrap();
        let one_step = loss_channel(&rho, e1 * e2, e1 * e2).unwrap();
        prop_assert!(two_step.max_abs_diff(&one_step) < 1e-12);
    }

    #[test]
    fn readout_never_beats_qcrb(n in 2usize..12, theta in 0.0..=FRAC_PI_2, eta in 0.6..=1.0f64) {
        let s = cat(&CatParams::new(theta, n).unwrap()).unwrap();
        let rho = lossy_state(&s, &LossModel::from_eta(eta, 1.0).unwrap()).unwrap();
        let bound = qfi(&rho, &rho_derivative(&rho), 1).unwrap().delta_phi_min;
        let pulse = Pi2Pulse::new(n).unwrap();
        for kind in [ObservableKind::ParityB, ObservableKind::Jz] {
            let resp = PhaseResponse::new(&rho, &pulse, Observable::single_shot(kind)).unwrap();
            if let Ok(w) = resp.best() {
                prop_assert!(w.delta_phi >= bound - 1e-9, "{kind}: {} < {bound}", w.delta_phi);
            }
        }
    }

    #[test]
    fn fast_readout_matches_pipeline(n in 2usize..10, theta in 0.05..1.5f64, eta in 0.6..=1.0f64, phi in 0.1..3.0f64) {
        let s = cat(&CatParams::new(theta, n).unwrap()).unwrap();
        let model = LossModel::from_eta(eta, 1.0).unwrap();
        let rho = lossy_state(&s, &model).unwrap();
        let pulse = Pi2Pulse::new(n).unwrap();
        for kind in [ObservableKind::ParityB, ObservableKind::Jz] {
            let obs = Observable::single_shot(kind);
            let fast = PhaseResponse::new(&rho, &pulse, obs).unwrap();
            let direct = phase_uncertainty(&s, &model, obs, phi);
            if let (Ok(a), Ok(b)) = (fast.at(phi), direct) {
                prop_assert!((a.delta_phi - b).abs() <= 1e-7 * b.max(1.0));
            }
        }
    }
}
