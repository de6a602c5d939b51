//! Phase estimation with two-mode spin cat states under one-body particle loss.
//!
//! The pipeline is: build an input state in the fixed-`N` sector ([`states`]),
//! accumulate a phase while particles leak out of both modes ([`channels`]),
//! then either bound the achievable precision with the quantum Fisher
//! information ([`fisher`]) or simulate a concrete readout after a π/2 pulse
//! ([`measure`]). [`sweep`] runs the parameter scans on top of that.
//!
//! Everything lives in the block-diagonal representation over total particle
//! number sectors `0..=N`; no operator used here mixes sectors except the
//! ladder operators, which lower by exactly one.

pub mod channels;
pub mod density;
mod eigen;
pub mod error;
pub mod fisher;
pub mod hilbert;
pub mod measure;
pub mod states;
pub mod sweep;
pub mod validate;

pub use num_complex::Complex64 as C64;

pub use channels::{loss_channel, phase_rotation, pi2_pulse, LossModel, Pi2Pulse};
pub use density::DensityMatrix;
pub use error::{Error, Result};
pub use fisher::{pure_qfi, qfi, rho_derivative, QfiResult};
pub use hilbert::{BlockOperator, OperatorKind, SectorBasis};
pub use measure::{best_working_point, phase_uncertainty, Observable, ObservableKind, WorkingPoint};
pub use states::{cat, scs, CatParams, PureState};
pub use sweep::{
    measurement_compare, optimal_theta, theta_scan, time_scan, GridSpec, OptimalTheta, PrecisionRecord,
    SweepConfig, SweepKind,
};

/// Standard quantum limit `1/√N`.
pub fn sql(n: usize) -> f64 {
    1.0 / (n as f64).sqrt()
}

/// Heisenberg limit `1/N`.
pub fn heisenberg_limit(n: usize) -> f64 {
    1.0 / n as f64
}
