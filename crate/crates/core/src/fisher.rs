//! Quantum Fisher information of the lossy output state.
//!
//! With `ρ_out = Σ_j p_j |ψ_j⟩⟨ψ_j|` the QFI is evaluated directly from the
//! eigenpairs,
//!
//! ```text
//! F_Q = Σ_{j,k : p_j + p_k > cutoff} 2/(p_j + p_k) |⟨ψ_k|ρ′|ψ_j⟩|²
//! ```
//!
//! and `Δφ_min = 1/√(N_m F_Q)`. Loss commutes with the phase rotation, so all
//! φ-dependence of `ρ_out` is unitary and `ρ′ = −i[Ĵz, ρ_out]` exactly.
//! Both `ρ_out` and `ρ′` are block-diagonal, so only pairs inside one sector
//! contribute.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channels::{lossy_state, LossModel};
use crate::density::{max_abs, DensityMatrix, HERMITIAN_TOL};
use crate::eigen::jacobi_eigh;
use crate::error::{Error, Result};
use crate::hilbert::SectorBasis;
use crate::states::PureState;
use crate::C64;

/// Eigenvalue-pair cutoff for the spectral sum.
pub const DEFAULT_CUTOFF: f64 = 1e-12;

/// Eigenvalues in descending order; column `i` of `vectors` belongs to `values[i]`.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

/// Eigendecomposition of a dense Hermitian block.
pub fn hermitian_eig(block: &DMatrix<C64>) -> Result<EigenPairs> {
    if !block.is_square() {
        return Err(Error::invalid("eigendecomposition of a non-square block"));
    }
    let dev = max_abs(&(block - block.adjoint()));
    if dev > HERMITIAN_TOL {
        return Err(Error::invalid(format!(
            "block is not Hermitian (deviation {dev:e})"
        )));
    }
    let dim = block.nrows();
    if dim == 0 {
        return Ok(EigenPairs {
            values: vec![],
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let (raw, raw_vectors) = jacobi_eigh(block).ok_or_else(|| {
        Error::NumericalFailure(format!("Jacobi eigensolver did not converge on a {dim}x{dim} block"))
    })?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]));
    let values = order.iter().map(|&i| raw[i]).collect();
    let vectors = DMatrix::from_fn(dim, dim, |r, c| raw_vectors[(r, order[c])]);
    Ok(EigenPairs { values, vectors })
}

/// Per-sector eigenpairs of a block-diagonal state.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub sectors: Vec<EigenPairs>,
}

impl EigenDecomposition {
    pub fn of(rho: &DensityMatrix) -> Result<Self> {
        let sectors = rho
            .blocks()
            .iter()
            .map(hermitian_eig)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sectors })
    }

    pub fn eigenvalue_sum(&self) -> f64 {
        self.sectors.iter().flat_map(|s| &s.values).sum()
    }

    /// `Σ_j p_j |ψ_j⟩⟨ψ_j|`.
    pub fn reconstruct(&self) -> Result<DensityMatrix> {
        DensityMatrix::from_blocks(
            self.sectors
                .iter()
                .map(|s| {
                    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                        s.values.len(),
                        s.values.iter().map(|&p| C64::new(p, 0.0)),
                    ));
                    &s.vectors * d * s.vectors.adjoint()
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiResult {
    pub f_q: f64,
    pub delta_phi_min: f64,
    pub n_m: u32,
}

impl QfiResult {
    pub fn new(f_q: f64, n_m: u32) -> Self {
        Self {
            f_q,
            delta_phi_min: cramer_rao(f_q, n_m),
            n_m,
        }
    }
}

/// `1/√(N_m F_Q)`; infinite when `F_Q = 0`.
pub fn cramer_rao(f_q: f64, n_m: u32) -> f64 {
    1.0 / (n_m as f64 * f_q).sqrt()
}

/// `ρ′ = −i[Ĵz, ρ]`.
pub fn rho_derivative(rho_out: &DensityMatrix) -> DensityMatrix {
    rho_out.map_blocks(|n, b| {
        DMatrix::from_fn(n + 1, n + 1, |r, c| {
            let dz = SectorBasis::jz_value(n, r) - SectorBasis::jz_value(n, c);
            C64::new(0.0, -dz) * b[(r, c)]
        })
    })
}

pub fn qfi(rho_out: &DensityMatrix, rho_prime: &DensityMatrix, n_m: u32) -> Result<QfiResult> {
    qfi_with_cutoff(rho_out, rho_prime, n_m, DEFAULT_CUTOFF)
}

pub fn qfi_with_cutoff(
    rho_out: &DensityMatrix,
    rho_prime: &DensityMatrix,
    n_m: u32,
    cutoff: f64,
) -> Result<QfiResult> {
    if rho_out.n_max() != rho_prime.n_max() {
        return Err(Error::invalid("state and derivative use different bases"));
    }
    if n_m < 1 {
        return Err(Error::invalid("repetition count must be >= 1"));
    }
    let eig = EigenDecomposition::of(rho_out)?;
    let mut f_q = 0.0;
    let mut any_pair = false;
    for (sector, pairs) in eig.sectors.iter().enumerate() {
        let p = &pairs.values;
        // p[0] is the largest eigenvalue of the sector.
        if p.is_empty() || 2.0 * p[0] < cutoff {
            continue;
        }
        let m = pairs.vectors.adjoint() * rho_prime.block(sector) * &pairs.vectors;
        for j in 0..p.len() {
            for k in 0..p.len() {
                let s = p[j] + p[k];
                if s > cutoff {
                    any_pair = true;
                    f_q += 2.0 / s * m[(k, j)].norm_sqr();
                }
            }
        }
    }
    if !any_pair {
        return Err(Error::DegenerateState { cutoff });
    }
    Ok(QfiResult::new(f_q, n_m))
}

/// `4 Var(Ĵz)` for a pure input.
pub fn pure_qfi(state: &PureState) -> f64 {
    let (m1, m2) = state.jz_moments();
    4.0 * (m2 - m1 * m1)
}

/// QFI of `input` after loss under `model`.
pub fn output_qfi(input: &PureState, model: &LossModel, n_m: u32) -> Result<QfiResult> {
    let rho = lossy_state(input, model)?;
    qfi(&rho, &rho_derivative(&rho), n_m)
}

/// Symmetric logarithmic derivative `L` with `ρ′ = (Lρ + ρL)/2`, built per
/// sector from the eigenpairs.
pub fn sld(rho_out: &DensityMatrix, rho_prime: &DensityMatrix, cutoff: f64) -> Result<DensityMatrix> {
    let eig = EigenDecomposition::of(rho_out)?;
    let blocks = eig
        .sectors
        .iter()
        .enumerate()
        .map(|(n, pairs)| {
            let v = &pairs.vectors;
            let m = v.adjoint() * rho_prime.block(n) * v;
            let p = &pairs.values;
            let l_eig = DMatrix::from_fn(n + 1, n + 1, |k, j| {
                let s = p[k] + p[j];
                if s > cutoff {
                    m[(k, j)] * (2.0 / s)
                } else {
                    C64::default()
                }
            });
            v * l_eig * v.adjoint()
        })
        .collect();
    DensityMatrix::from_blocks(blocks)
}

/// `tr[L ρ L]` from a materialized SLD.
pub fn qfi_from_sld(rho_out: &DensityMatrix, sld: &DensityMatrix) -> f64 {
    rho_out
        .blocks()
        .iter()
        .zip(sld.blocks())
        .map(|(r, l)| (l * r * l).trace().re)
        .sum()
}
