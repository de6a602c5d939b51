//! Readout after a π/2 pulse and the error-propagation phase uncertainty
//! `Δφ = ΔÔ / (√N_m |∂⟨Ô⟩/∂φ|)`.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channels::{lossy_state, phase_rotation, LossModel, Pi2Pulse};
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::fisher::rho_derivative;
use crate::hilbert::{sector_block, OperatorKind, SectorBasis};
use crate::states::PureState;
use crate::C64;

/// Below this `|∂⟨Ô⟩/∂φ|` the working point is treated as degenerate.
pub const SLOPE_TOL: f64 = 1e-12;
/// The search skips phases where `Var(Ô) < VAR_FLOOR · ⟨Ô²⟩`. There the
/// variance and slope vanish together and `1 − ⟨Ô⟩²`-type cancellation
/// leaves only round-off; Δφ approaches a finite limit that the search
/// reaches from outside the floor, within ~1e−6 relative and from above.
pub const VAR_FLOOR: f64 = 1e-6;
pub const PHASE_GRID: usize = 720;
pub const PHASE_RESOLUTION: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    /// `Π̂_b = exp(iπ b̂†b̂)`
    #[serde(rename = "parity", alias = "parity_b")]
    ParityB,
    /// `Ĵz = (b̂†b̂ − â†â)/2`
    Jz,
}

impl ObservableKind {
    pub fn name(&self) -> &'static str {
        match self {
            ObservableKind::ParityB => "parity",
            ObservableKind::Jz => "jz",
        }
    }

    fn operator(&self) -> OperatorKind {
        match self {
            ObservableKind::ParityB => OperatorKind::ParityB,
            ObservableKind::Jz => OperatorKind::Jz,
        }
    }

    fn diagonal(&self, n: usize, k: usize) -> f64 {
        match self {
            ObservableKind::ParityB => {
                if (n - k).is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                }
            }
            ObservableKind::Jz => SectorBasis::jz_value(n, k),
        }
    }
}

impl fmt::Display for ObservableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObservableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "parity" | "parity_b" => Ok(ObservableKind::ParityB),
            "jz" => Ok(ObservableKind::Jz),
            other => Err(Error::invalid(format!("unknown observable `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observable {
    pub kind: ObservableKind,
    pub n_m: u32,
}

impl Observable {
    pub fn new(kind: ObservableKind, n_m: u32) -> Result<Self> {
        if n_m < 1 {
            return Err(Error::invalid("repetition count must be >= 1"));
        }
        Ok(Self { kind, n_m })
    }

    pub fn single_shot(kind: ObservableKind) -> Self {
        Self { kind, n_m: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkingPoint {
    pub phi_star: f64,
    pub delta_phi: f64,
    pub mean_o: f64,
    pub var_o: f64,
    pub slope: f64,
}

impl WorkingPoint {
    fn from_moments(phi: f64, mean: f64, second: f64, slope: f64, n_m: u32) -> Result<Self> {
        if slope.abs() < SLOPE_TOL || !slope.is_finite() {
            return Err(Error::DegenerateWorkingPoint { phi, slope });
        }
        let var_o = (second - mean * mean).max(0.0);
        Ok(Self {
            phi_star: phi,
            delta_phi: var_o.sqrt() / ((n_m as f64).sqrt() * slope.abs()),
            mean_o: mean,
            var_o,
            slope,
        })
    }
}

/// `(⟨Ô⟩, ⟨Ô²⟩)` on a post-pulse state.
pub fn expectation(rho_f: &DensityMatrix, obs: ObservableKind) -> (f64, f64) {
    let mean = rho_f.expect_diagonal(|n, k| obs.diagonal(n, k));
    let second = rho_f.expect_diagonal(|n, k| obs.diagonal(n, k).powi(2));
    (mean, second)
}

/// Δφ at a fixed phase by running the full pipeline: loss, rotation by `phi`,
/// π/2 pulse, moments. The slope is `tr[Ô Û†(−i[Ĵz, ρ_out])Û]`.
pub fn phase_uncertainty(
    input: &PureState,
    model: &LossModel,
    obs: Observable,
    phi: f64,
) -> Result<f64> {
    Ok(working_point_at(input, model, obs, phi)?.delta_phi)
}

pub fn working_point_at(
    input: &PureState,
    model: &LossModel,
    obs: Observable,
    phi: f64,
) -> Result<WorkingPoint> {
    let rho_out = phase_rotation(&lossy_state(input, model)?, phi);
    let pulse = Pi2Pulse::new(rho_out.n_max())?;
    let rho_f = pulse.apply(&rho_out)?;
    let (mean, second) = expectation(&rho_f, obs.kind);
    let (slope, _) = expectation(&pulse.apply(&rho_derivative(&rho_out))?, obs.kind);
    WorkingPoint::from_moments(phi, mean, second, slope, obs.n_m)
}

/// Post-pulse moments of one observable as trigonometric polynomials in φ.
///
/// Rotation multiplies `ρ_rc` by `e^{−iφ(c−r)}`, so with `Ô′ = Û Ô Û†`,
/// `⟨Ô⟩(φ) = Σ_d M_d e^{−iφd}` over integer `d ∈ [−N, N]`, and the slope is
/// the term-wise derivative. This is the same quantity the pipeline in
/// [`phase_uncertainty`] computes, evaluated in O(N) per phase.
#[derive(Debug, Clone)]
pub struct PhaseResponse {
    n_max: usize,
    mean: Vec<C64>,
    second: Vec<C64>,
    n_m: u32,
}

impl PhaseResponse {
    pub fn new(lossy: &DensityMatrix, pulse: &Pi2Pulse, obs: Observable) -> Result<Self> {
        let n_max = lossy.n_max();
        if pulse.n_max() < n_max {
            return Err(Error::invalid("pulse built for fewer sectors than the state"));
        }
        let len = 2 * n_max + 1;
        let mut mean = vec![C64::default(); len];
        let mut second = vec![C64::default(); len];
        for n in 0..=n_max {
            let op = sector_block(obs.kind.operator(), n);
            let o1 = pulse.heisenberg(n, &op);
            let o2 = pulse.heisenberg(n, &(&op * &op));
            accumulate(&mut mean, &o1, lossy.block(n), n_max);
            accumulate(&mut second, &o2, lossy.block(n), n_max);
        }
        Ok(Self {
            n_max,
            mean,
            second,
            n_m: obs.n_m,
        })
    }

    fn series(&self, coeffs: &[C64], phi: f64, derivative: bool) -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let d = i as f64 - self.n_max as f64;
                let e = C64::from_polar(1.0, -phi * d);
                let term = m * e;
                if derivative {
                    (term * C64::new(0.0, -d)).re
                } else {
                    term.re
                }
            })
            .sum()
    }

    pub fn mean(&self, phi: f64) -> f64 {
        self.series(&self.mean, phi, false)
    }

    pub fn second_moment(&self, phi: f64) -> f64 {
        self.series(&self.second, phi, false)
    }

    pub fn slope(&self, phi: f64) -> f64 {
        self.series(&self.mean, phi, true)
    }

    pub fn at(&self, phi: f64) -> Result<WorkingPoint> {
        WorkingPoint::from_moments(
            phi,
            self.mean(phi),
            self.second_moment(phi),
            self.slope(phi),
            self.n_m,
        )
    }

    fn delta_phi_or_inf(&self, phi: f64) -> f64 {
        match self.at(phi) {
            Ok(w) if w.var_o >= VAR_FLOOR * self.second_moment(phi).abs() => w.delta_phi,
            _ => f64::INFINITY,
        }
    }

    /// Minimize Δφ over φ: 720-point grid on `[0, 2π)`, then golden-section
    /// refinement inside the bracketing grid cells.
    pub fn best(&self) -> Result<WorkingPoint> {
        let h = TAU / PHASE_GRID as f64;
        let (best_i, best_val) = (0..PHASE_GRID)
            .map(|i| (i, self.delta_phi_or_inf(i as f64 * h)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty grid");
        if !best_val.is_finite() {
            return Err(Error::NoWorkingPoint);
        }
        let center = best_i as f64 * h;
        let refined = golden_section(|x| self.delta_phi_or_inf(x), center - h, center + h, PHASE_RESOLUTION);
        let phi = wrap_phase(refined);
        if self.delta_phi_or_inf(phi) <= best_val {
            self.at(phi)
        } else {
            self.at(center)
        }
    }
}

// coeffs[d + N] += Σ_{c − r = d} O′_{cr} ρ_{rc}
fn accumulate(coeffs: &mut [C64], op: &DMatrix<C64>, rho: &DMatrix<C64>, n_max: usize) {
    let dim = rho.nrows();
    for r in 0..dim {
        for c in 0..dim {
            let d = c as isize - r as isize;
            coeffs[(d + n_max as isize) as usize] += op[(c, r)] * rho[(r, c)];
        }
    }
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Best working point of `obs` for `input` under `model`.
pub fn best_working_point(
    input: &PureState,
    model: &LossModel,
    obs: Observable,
) -> Result<WorkingPoint> {
    let lossy = lossy_state(input, model)?;
    let pulse = Pi2Pulse::new(lossy.n_max())?;
    PhaseResponse::new(&lossy, &pulse, obs)?.best()
}

/// Reports `phi` in `[0, 2π)`.
pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}
