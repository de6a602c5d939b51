//! Shared inputs for the criterion benches.

use catmet_core::channels::lossy_state;
use catmet_core::{cat, CatParams, DensityMatrix, LossModel, PureState};

/// Cat state at `2θ = two_theta_pi · π`.
pub fn cat_input(two_theta_pi: f64, n: usize) -> PureState {
    let theta = 0.5 * two_theta_pi * std::f64::consts::PI;
    cat(&CatParams::new(theta, n).expect("valid params")).expect("cat state")
}

/// The `η = 0.95` output used by most benches.
pub fn lossy_fixture(n: usize) -> (PureState, LossModel, DensityMatrix) {
    let input = cat_input(0.49, n);
    let model = LossModel::from_eta(0.95, 1.0).expect("valid eta");
    let rho = lossy_state(&input, &model).expect("loss channel");
    (input, model, rho)
}
