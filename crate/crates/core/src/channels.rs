//! Phase accumulation under one-body loss, and the π/2 readout pulse.
//!
//! Two routes evolve a state through
//! `dρ/dt = −i[δĴz, ρ] + γ_a D[â]ρ + γ_b D[b̂]ρ`:
//!
//! * [`loss_channel`] followed by [`phase_rotation`]: the exact integrated
//!   channel. Each mode's damping commutes with the phase rotation, so the
//!   two can be applied in either order.
//! * [`lindblad_evolve`]: fixed-step RK4 on the master equation itself, kept
//!   as an independent check of the first route.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::fisher::hermitian_eig;
use crate::hilbert::{sector_block, OperatorKind, SectorBasis};
use crate::states::PureState;
use crate::C64;

/// Damping rates, level splitting and accumulation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub delta: f64,
    pub t: f64,
}

impl LossModel {
    pub fn new(gamma_a: f64, gamma_b: f64, delta: f64, t: f64) -> Result<Self> {
        let m = Self {
            gamma_a,
            gamma_b,
            delta,
            t,
        };
        m.validate()?;
        Ok(m)
    }

    /// Equal rates in both modes, `δ = 1`.
    pub fn symmetric(gamma: f64, t: f64) -> Result<Self> {
        Self::new(gamma, gamma, 1.0, t)
    }

    /// Equal-rate model with unit time whose survival fraction is `eta`.
    pub fn from_eta(eta: f64, delta: f64) -> Result<Self> {
        check_eta(eta)?;
        let gamma = -eta.ln();
        Self::new(gamma, gamma, delta, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.gamma_a, self.gamma_b, self.delta, self.t]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::invalid("loss model parameters must be finite"));
        }
        if self.gamma_a < 0.0 || self.gamma_b < 0.0 {
            return Err(Error::invalid("damping rates must be >= 0"));
        }
        if self.t < 0.0 {
            return Err(Error::invalid("accumulation time must be >= 0"));
        }
        Ok(())
    }

    pub fn eta_a(&self) -> f64 {
        (-self.gamma_a * self.t).exp()
    }

    pub fn eta_b(&self) -> f64 {
        (-self.gamma_b * self.t).exp()
    }

    /// Accumulated phase `φ = δT`.
    pub fn phi(&self) -> f64 {
        self.delta * self.t
    }

    /// `min(1e−3, 0.1/(δN), 0.1/(γN))`, ignoring zero rates.
    pub fn default_step(&self, n: usize) -> f64 {
        let n = n.max(1) as f64;
        let gamma = self.gamma_a.max(self.gamma_b);
        let mut dt: f64 = 1e-3;
        if self.delta != 0.0 {
            dt = dt.min(0.1 / (self.delta.abs() * n));
        }
        if gamma > 0.0 {
            dt = dt.min(0.1 / (gamma * n));
        }
        dt
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::invalid(format!("survival fraction {eta} outside (0, 1]")));
    }
    Ok(())
}

/// `ρ ↦ e^{−iφĴz} ρ e^{iφĴz}`, applied element-wise since `Ĵz` is diagonal.
pub fn phase_rotation(rho: &DensityMatrix, phi: f64) -> DensityMatrix {
    rho.map_blocks(|_, b| {
        // z_r − z_c = c − r within a sector.
        DMatrix::from_fn(b.nrows(), b.ncols(), |r, c| {
            b[(r, c)] * C64::from_polar(1.0, -phi * (c as f64 - r as f64))
        })
    })
}

/// `w[n][l] = √(C(n,l) (1−η)^l η^{n−l})`, the amplitude for `l` of `n`
/// particles in one mode to be lost.
fn loss_weights(eta: f64, n_max: usize) -> Vec<Vec<f64>> {
    let ln_eta = eta.ln();
    let ln_loss = (1.0 - eta).ln();
    let lp = |ln_x: f64, p: usize| if p == 0 { 0.0 } else { ln_x * p as f64 };
    (0..=n_max)
        .map(|n| {
            let mut ln_binom = 0.0;
            (0..=n)
                .map(|l| {
                    if l > 0 {
                        ln_binom += ((n - l + 1) as f64).ln() - (l as f64).ln();
                    }
                    (0.5 * (ln_binom + lp(ln_loss, l) + lp(ln_eta, n - l))).exp()
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Copy)]
enum Mode {
    A,
    B,
}

// Σ_l A_l ρ A_l† for one mode, with A_l = √((1−η)^l / l!) η^{n̂/2} â^l.
fn damp_mode(rho: &DensityMatrix, eta: f64, mode: Mode) -> DensityMatrix {
    if eta == 1.0 {
        return rho.clone();
    }
    let n_max = rho.n_max();
    let w = loss_weights(eta, n_max);
    let mut out = DensityMatrix::zeros(n_max);
    for s in 0..=n_max {
        let src = rho.block(s);
        #[allow(clippy::needless_range_loop)]
        for l in 0..=s {
            let dst = out.block_mut(s - l);
            let dim = s - l + 1;
            for r in 0..dim {
                for c in 0..dim {
                    // (source offset, mode occupation) for each index
                    let (sr, or, sc, oc) = match mode {
                        Mode::A => (r + l, r + l, c + l, c + l),
                        Mode::B => (r, s - r, c, s - c),
                    };
                    dst[(r, c)] += src[(sr, sc)] * (w[or][l] * w[oc][l]);
                }
            }
        }
    }
    out
}

/// Exact one-body loss: survival fraction `eta_a` in mode a, `eta_b` in b.
pub fn loss_channel(rho: &DensityMatrix, eta_a: f64, eta_b: f64) -> Result<DensityMatrix> {
    check_eta(eta_a)?;
    check_eta(eta_b)?;
    Ok(damp_mode(&damp_mode(rho, eta_a, Mode::A), eta_b, Mode::B))
}

/// Output state `ρ_out` for `input` after accumulating `model.phi()` under loss.
pub fn evolve_exact(input: &DensityMatrix, model: &LossModel) -> Result<DensityMatrix> {
    model.validate()?;
    let lossy = loss_channel(input, model.eta_a(), model.eta_b())?;
    Ok(phase_rotation(&lossy, model.phi()))
}

/// Loss only, no phase: the φ-independent part of `ρ_out`.
pub fn lossy_state(input: &PureState, model: &LossModel) -> Result<DensityMatrix> {
    model.validate()?;
    loss_channel(&input.density(), model.eta_a(), model.eta_b())
}

fn lindblad_rhs(rho: &DensityMatrix, model: &LossModel) -> DensityMatrix {
    let n_max = rho.n_max();
    let mut out = DensityMatrix::zeros(n_max);
    let (ga, gb, delta) = (model.gamma_a, model.gamma_b, model.delta);
    for n in 0..=n_max {
        let b = rho.block(n);
        let upper = (n < n_max).then(|| rho.block(n + 1));
        let dst = out.block_mut(n);
        for r in 0..=n {
            for c in 0..=n {
                let (zr, zc) = (SectorBasis::jz_value(n, r), SectorBasis::jz_value(n, c));
                let (nar, nac) = (r as f64, c as f64);
                let (nbr, nbc) = ((n - r) as f64, (n - c) as f64);
                let decay = C64::new(-0.5 * (ga * (nar + nac) + gb * (nbr + nbc)), -delta * (zr - zc));
                let mut v = decay * b[(r, c)];
                if let Some(up) = upper {
                    // â ρ â†: offset r+1 in sector n+1 → r in sector n
                    v += up[(r + 1, c + 1)] * (ga * ((r + 1) as f64 * (c + 1) as f64).sqrt());
                    // b̂ ρ b̂†: offset unchanged, n_b drops by one
                    v += up[(r, c)] * (gb * ((n + 1 - r) as f64 * (n + 1 - c) as f64).sqrt());
                }
                dst[(r, c)] = v;
            }
        }
    }
    out
}

/// Fixed-step RK4 integration of the master equation from 0 to `model.t`.
///
/// The step is shrunk so that an integer number of steps lands on `model.t`.
pub fn lindblad_evolve(rho: &DensityMatrix, model: &LossModel, dt: f64) -> Result<DensityMatrix> {
    model.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(format!("time step {dt} must be > 0")));
    }
    if model.t == 0.0 {
        return Ok(rho.clone());
    }
    let steps = (model.t / dt).ceil().max(1.0) as usize;
    let h = model.t / steps as f64;
    let mut state = rho.clone();
    for step in 0..steps {
        let k1 = lindblad_rhs(&state, model);
        let k2 = lindblad_rhs(&(&state + &(&k1 * (0.5 * h))), model);
        let k3 = lindblad_rhs(&(&state + &(&k2 * (0.5 * h))), model);
        let k4 = lindblad_rhs(&(&state + &(&k3 * h)), model);
        let incr = &(&(&k1 + &(&k2 * 2.0)) + &(&(&k3 * 2.0) + &k4)) * (h / 6.0);
        state = &state + &incr;
        if !state.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "non-finite density matrix at step {step} (t = {:.6}); dt = {h:e} is too large",
                (step + 1) as f64 * h
            )));
        }
    }
    Ok(state)
}

/// `ρ^f = Û† ρ Û` with `Û = exp[i(π/2)Ĵx]`, one unitary per sector.
#[derive(Debug, Clone)]
pub struct Pi2Pulse {
    unitaries: Vec<DMatrix<C64>>,
}

impl Pi2Pulse {
    pub fn new(n_max: usize) -> Result<Self> {
        let unitaries = (0..=n_max)
            .map(|n| {
                let jx = sector_block(OperatorKind::Jx, n);
                let eig = hermitian_eig(&jx)?;
                let phases = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    n + 1,
                    eig.values.iter().map(|&l| C64::from_polar(1.0, FRAC_PI_2 * l)),
                ));
                Ok(&eig.vectors * phases * eig.vectors.adjoint())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { unitaries })
    }

    pub fn n_max(&self) -> usize {
        self.unitaries.len() - 1
    }

    pub fn unitary(&self, n: usize) -> &DMatrix<C64> {
        &self.unitaries[n]
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.n_max() > self.n_max() {
            return Err(Error::invalid("pulse built for fewer sectors than the state"));
        }
        Ok(rho.map_blocks(|n, b| {
            let u = &self.unitaries[n];
            u.adjoint() * b * u
        }))
    }

    /// `Û Ô Û†` for a sector block, so that `tr(Ô ρ^f) = tr((Û Ô Û†) ρ)`.
    pub fn heisenberg(&self, n: usize, op: &DMatrix<C64>) -> DMatrix<C64> {
        let u = &self.unitaries[n];
        u * op * u.adjoint()
    }
}

pub fn pi2_pulse(rho: &DensityMatrix) -> Result<DensityMatrix> {
    Pi2Pulse::new(rho.n_max())?.apply(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{cat, ghz, CatParams};
    use approx::assert_abs_diff_eq;

    fn fock(n_max: usize, n_a: usize, n_b: usize) -> DensityMatrix {
        let mut rho = DensityMatrix::zeros(n_max);
        rho.block_mut(n_a + n_b)[(n_a, n_a)] = C64::new(1.0, 0.0);
        rho
    }

    #[test]
    fn rotation_identity_and_fock_invariance() {
        let rho = cat(&CatParams::new(0.6, 6).unwrap()).unwrap().density();
        assert_eq!(phase_rotation(&rho, 0.0), rho);
        let f = fock(4, 1, 3);
        assert_eq!(phase_rotation(&f, 1.234), f);
    }

    #[test]
    fn rotation_composes() {
        let rho = cat(&CatParams::new(0.6, 6).unwrap()).unwrap().density();
        let twice = phase_rotation(&phase_rotation(&rho, 0.3), 0.9);
        let once = phase_rotation(&rho, 1.2);
        assert!(twice.max_abs_diff(&once) < 1e-14);
    }

    #[test]
    fn noon_coherence_phase() {
        let n = 6;
        let phi = 0.37;
        let rho = phase_rotation(&ghz(n).unwrap().density(), phi);
        // |n_a = 0⟩ has z = +N/2, |n_a = N⟩ has z = −N/2
        let coh = rho.block(n)[(0, n)];
        let expected = C64::from_polar(0.5, -phi * n as f64);
        assert_abs_diff_eq!((coh - expected).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn unit_eta_is_identity() {
        let rho = cat(&CatParams::new(0.6, 5).unwrap()).unwrap().density();
        assert_eq!(loss_channel(&rho, 1.0, 1.0).unwrap(), rho);
    }

    #[test]
    fn rejects_bad_eta() {
        let rho = fock(2, 1, 1);
        assert!(loss_channel(&rho, 0.0, 1.0).is_err());
        assert!(loss_channel(&rho, 1.0, 1.5).is_err());
        assert!(loss_channel(&rho, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn single_particle_decay() {
        let eta = 0.7;
        let out = loss_channel(&fock(1, 0, 1), 1.0, eta).unwrap();
        assert_abs_diff_eq!(out.block(1)[(0, 0)].re, eta, epsilon = 1e-15);
        assert_abs_diff_eq!(out.block(0)[(0, 0)].re, 1.0 - eta, epsilon = 1e-15);
        assert_abs_diff_eq!(out.block(1)[(1, 1)].norm(), 0.0);
    }

    #[test]
    fn loss_preserves_trace_and_scales_number() {
        let rho = cat(&CatParams::new(0.5, 10).unwrap()).unwrap().density();
        let out = loss_channel(&rho, 0.8, 0.8).unwrap();
        assert_abs_diff_eq!(out.trace(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.mean_number(), 8.0, epsilon = 1e-12);
        out.check_physical().unwrap();
    }

    #[test]
    fn loss_semigroup() {
        let rho = cat(&CatParams::new(0.9, 8).unwrap()).unwrap().density();
        let two = loss_channel(&loss_channel(&rho, 0.9, 0.8).unwrap(), 0.7, 0.95).unwrap();
        let one = loss_channel(&rho, 0.63, 0.76).unwrap();
        assert!(two.max_abs_diff(&one) < 1e-10);
    }

    #[test]
    fn lossless_integration_conserves_purity() {
        let rho = cat(&CatParams::new(0.5, 6).unwrap()).unwrap().density();
        let model = LossModel::new(0.0, 0.0, 1.0, 0.8).unwrap();
        let out = lindblad_evolve(&rho, &model, model.default_step(6)).unwrap();
        assert_abs_diff_eq!(out.purity(), 1.0, epsilon = 1e-9);
        assert!(out.max_abs_diff(&phase_rotation(&rho, 0.8)) < 1e-9);
    }

    #[test]
    fn integrator_matches_channel() {
        let n = 10;
        let rho = cat(&CatParams::new(0.7, n).unwrap()).unwrap().density();
        let model = LossModel::symmetric(0.2, 1.0).unwrap();
        let rk = lindblad_evolve(&rho, &model, model.default_step(n)).unwrap();
        let exact = evolve_exact(&rho, &model).unwrap();
        assert!(rk.trace_distance(&exact).unwrap() < 1e-6);
        assert_abs_diff_eq!(rk.mean_number(), n as f64 * (-0.2f64).exp(), epsilon = 1e-7);
    }

    #[test]
    fn integrator_asymmetric_rates() {
        let n = 5;
        let rho = cat(&CatParams::new(0.4, n).unwrap()).unwrap().density();
        let model = LossModel::new(0.1, 0.3, 0.7, 0.5).unwrap();
        let rk = lindblad_evolve(&rho, &model, model.default_step(n)).unwrap();
        let exact = evolve_exact(&rho, &model).unwrap();
        assert!(rk.trace_distance(&exact).unwrap() < 1e-8);
    }

    #[test]
    fn integrator_blows_up_with_huge_step() {
        let rho = cat(&CatParams::new(0.4, 12).unwrap()).unwrap().density();
        let model = LossModel::symmetric(1e6, 1e3).unwrap();
        let err = lindblad_evolve(&rho, &model, 100.0).unwrap_err();
        assert!(matches!(err, Error::NumericalFailure(_)));
        assert!(lindblad_evolve(&rho, &model, 0.0).is_err());
    }

    #[test]
    fn pulse_vacuum_and_fourfold_identity() {
        let rho = loss_channel(&cat(&CatParams::new(0.8, 7).unwrap()).unwrap().density(), 0.9, 0.9)
            .unwrap();
        let pulse = Pi2Pulse::new(7).unwrap();
        let out = pulse.apply(&rho).unwrap();
        assert_abs_diff_eq!((out.block(0)[(0, 0)] - rho.block(0)[(0, 0)]).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.trace(), rho.trace(), epsilon = 1e-12);
        let mut back = rho.clone();
        for _ in 0..4 {
            back = pulse.apply(&back).unwrap();
        }
        assert!(back.max_abs_diff(&rho) < 1e-9);
    }

    #[test]
    fn pulse_unitaries_are_unitary() {
        let pulse = Pi2Pulse::new(12).unwrap();
        for n in 0..=12 {
            let u = pulse.unitary(n);
            let id = DMatrix::<C64>::identity(n + 1, n + 1);
            assert!(crate::density::max_abs(&(u * u.adjoint() - id)) < 1e-12);
        }
    }

    // Wigner small-d d^j_{m'm}(β), arguments doubled so half-integer j works.
    fn wigner_d(j2: i64, mp2: i64, m2: i64, beta: f64) -> f64 {
        let fact = |x: i64| (1..=x).map(|v| v as f64).product::<f64>();
        let (jpm, jmm) = ((j2 + m2) / 2, (j2 - m2) / 2);
        let (jpmp, jmmp) = ((j2 + mp2) / 2, (j2 - mp2) / 2);
        let pref = (fact(jpmp) * fact(jmmp) * fact(jpm) * fact(jmm)).sqrt();
        let dm = (mp2 - m2) / 2;
        let (c, s) = ((beta / 2.0).cos(), (beta / 2.0).sin());
        let mut total = 0.0;
        for k in 0..=j2 {
            let terms = [jpm - k, k, dm + k, jmmp - k];
            if terms.iter().any(|&t| t < 0) {
                continue;
            }
            let denom: f64 = terms.iter().map(|&t| fact(t)).product();
            let sign = if (dm + k) % 2 == 0 { 1.0 } else { -1.0 };
            total += sign / denom
                * c.powi((j2 - 2 * k - dm) as i32)
                * s.powi((2 * k + dm) as i32);
        }
        pref * total
    }

    #[test]
    fn pulse_on_dicke_states_matches_wigner_d() {
        for n in 1..=4usize {
            for k in 0..=n {
                // |J, m⟩ with m = (n_a − n_b)/2 at n_a = k
                let m2 = 2 * k as i64 - n as i64;
                let out = pi2_pulse(&fock(n, k, n - k)).unwrap();
                for kp in 0..=n {
                    let mp2 = 2 * kp as i64 - n as i64;
                    let d = wigner_d(n as i64, mp2, m2, FRAC_PI_2);
                    assert_abs_diff_eq!(out.block(n)[(kp, kp)].re, d * d, epsilon = 1e-12);
                }
            }
            // m = J ends up with ⟨Ĵz⟩ = 0
            let out = pi2_pulse(&fock(n, n, 0)).unwrap();
            let jz = out.expect_diagonal(SectorBasis::jz_value);
            assert_abs_diff_eq!(jz, 0.0, epsilon = 1e-12);
        }
    }
}
