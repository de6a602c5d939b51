//! Spin coherent states, two-branch spin cat states and their Husimi Q
//! distribution on the generalized Bloch sphere.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::hilbert::SectorBasis;
use crate::C64;

pub const NORM_TOL: f64 = 1e-12;

/// Polar angle, azimuth and particle number of a coherent or cat state.
///
/// `theta ∈ [0, π]` is accepted; `theta` and `π − theta` give the same cat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatParams {
    pub theta: f64,
    pub varphi: f64,
    pub n: usize,
}

impl CatParams {
    pub fn new(theta: f64, n: usize) -> Result<Self> {
        Self::with_varphi(theta, 0.0, n)
    }

    pub fn with_varphi(theta: f64, varphi: f64, n: usize) -> Result<Self> {
        let p = Self { theta, varphi, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::invalid("particle number must be >= 1"));
        }
        if !self.theta.is_finite() || !(0.0..=PI).contains(&self.theta) {
            return Err(Error::invalid(format!(
                "theta = {} outside [0, pi]",
                self.theta
            )));
        }
        if !self.varphi.is_finite() {
            return Err(Error::invalid("varphi must be finite"));
        }
        Ok(())
    }
}

/// Normalized amplitude vector over one fixed-`n` sector, indexed by `n_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    sector: usize,
    amplitudes: DVector<C64>,
}

impl PureState {
    pub fn new(sector: usize, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != sector + 1 {
            return Err(Error::invalid(format!(
                "sector {sector} needs {} amplitudes, got {}",
                sector + 1,
                amplitudes.len()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("state norm {norm} is not 1")));
        }
        Ok(Self { sector, amplitudes })
    }

    /// Scales `amplitudes` to unit norm.
    pub fn normalized(sector: usize, amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("cannot normalize a zero or non-finite vector"));
        }
        Self::new(sector, amplitudes.unscale(norm))
    }

    pub fn sector(&self) -> usize {
        self.sector
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, n_a: usize) -> C64 {
        self.amplitudes[n_a]
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `(⟨Ĵz⟩, ⟨Ĵz²⟩)`.
    pub fn jz_moments(&self) -> (f64, f64) {
        let n = self.sector;
        self.amplitudes
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(m1, m2), (k, c)| {
                let z = SectorBasis::jz_value(n, k);
                let p = c.norm_sqr();
                (m1 + z * p, m2 + z * z * p)
            })
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }
}

/// Coherent-state amplitudes for `n` particles, valid for `n = 0` as well.
///
/// Offset `k` (`n_a = k`) carries `√C(n,k) cos^{n−k}(θ/2) sin^k(θ/2) e^{−ikφ}`.
/// Evaluated in log space so large `n` does not overflow the binomial.
/// `theta` must lie in `[0, π]`, where both half-angle factors are nonnegative.
pub(crate) fn scs_amplitudes(theta: f64, varphi: f64, n: usize) -> DVector<C64> {
    let (s, c) = (theta / 2.0).sin_cos();
    let (ln_s, ln_c) = (s.max(0.0).ln(), c.max(0.0).ln());
    let mut ln_binom = 0.0;
    DVector::from_iterator(
        n + 1,
        (0..=n).map(|k| {
            if k > 0 {
                ln_binom += ((n - k + 1) as f64).ln() - (k as f64).ln();
            }
            let ln_mag = log_power(ln_c, n - k) + log_power(ln_s, k) + 0.5 * ln_binom;
            C64::from_polar(ln_mag.exp(), -(k as f64) * varphi)
        }),
    )
}

// ln(x^p) with 0^0 = 1.
fn log_power(ln_x: f64, p: usize) -> f64 {
    if p == 0 {
        0.0
    } else {
        ln_x * p as f64
    }
}

/// Spin coherent state `|θ, φ⟩` in the sector of `params.n` particles.
pub fn scs(params: &CatParams) -> Result<PureState> {
    params.validate()?;
    let amps = scs_amplitudes(params.theta, params.varphi, params.n);
    // Exact normalization is analytic; renormalize only to absorb round-off.
    PureState::normalized(params.n, amps)
}

/// Spin cat state `N_C (|θ, φ⟩ + |π − θ, φ⟩)`.
pub fn cat(params: &CatParams) -> Result<PureState> {
    let (state, _) = cat_with_normalization(params)?;
    Ok(state)
}

/// The cat state together with its normalization factor `N_C`.
pub fn cat_with_normalization(params: &CatParams) -> Result<(PureState, f64)> {
    params.validate()?;
    let a = scs_amplitudes(params.theta, params.varphi, params.n);
    let b = scs_amplitudes(PI - params.theta, params.varphi, params.n);
    let sum = a + b;
    let norm = sum.norm();
    Ok((PureState::normalized(params.n, sum)?, 1.0 / norm))
}

/// GHZ / NOON state `(|0, N⟩ + |N, 0⟩)/√2`.
pub fn ghz(n: usize) -> Result<PureState> {
    cat(&CatParams::new(0.0, n)?)
}

/// States whose overlap with spin coherent probes can be evaluated.
pub trait HusimiSource {
    /// `Q(θ, φ)`, the bare overlap without a sphere-measure prefactor.
    fn husimi_at(&self, theta: f64, varphi: f64) -> f64;
}

impl HusimiSource for PureState {
    fn husimi_at(&self, theta: f64, varphi: f64) -> f64 {
        let probe = scs_amplitudes(theta, varphi, self.sector);
        probe.dotc(&self.amplitudes).norm_sqr()
    }
}

impl HusimiSource for DensityMatrix {
    fn husimi_at(&self, theta: f64, varphi: f64) -> f64 {
        self.blocks()
            .iter()
            .enumerate()
            .map(|(n, block)| {
                let probe = scs_amplitudes(theta, varphi, n);
                (probe.adjoint() * block * &probe)[(0, 0)].re
            })
            .sum()
    }
}

/// Q on arbitrary `(θ_s, φ_s)` sample points.
pub fn husimi_q<S: HusimiSource + Sync>(state: &S, grid: &[(f64, f64)]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::invalid("empty Husimi grid"));
    }
    Ok(grid
        .par_iter()
        .map(|&(t, p)| state.husimi_at(t, p).max(0.0))
        .collect())
}

/// Equiangular `θ_s ∈ [0, π]`, `φ_s ∈ [0, 2π]` grid, both ends included.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiGrid {
    pub n_theta: usize,
    pub n_varphi: usize,
}

impl Default for HusimiGrid {
    fn default() -> Self {
        Self {
            n_theta: 181,
            n_varphi: 361,
        }
    }
}

impl HusimiGrid {
    pub fn points(&self) -> Result<Vec<(f64, f64)>> {
        if self.n_theta < 2 || self.n_varphi < 2 {
            return Err(Error::invalid("Husimi grid needs at least 2 samples per axis"));
        }
        let dt = PI / (self.n_theta - 1) as f64;
        let dp = 2.0 * PI / (self.n_varphi - 1) as f64;
        Ok((0..self.n_theta)
            .flat_map(|i| (0..self.n_varphi).map(move |j| (i as f64 * dt, j as f64 * dp)))
            .collect())
    }
}

/// CSV with header `theta_s,varphi_s,Q`.
pub fn write_husimi_csv<W: Write>(mut out: W, grid: &[(f64, f64)], q: &[f64]) -> io::Result<()> {
    writeln!(out, "theta_s,varphi_s,Q")?;
    for (&(t, p), v) in grid.iter().zip(q) {
        writeln!(out, "{},{},{}", fmt12(t), fmt12(p), fmt12(*v))?;
    }
    Ok(())
}

/// 12 significant digits, scientific notation.
pub fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}
