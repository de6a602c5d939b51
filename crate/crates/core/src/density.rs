//! Block-diagonal density matrices over sectors `0..=N`.
//!
//! One-body loss only moves population downward between sectors and never
//! creates coherence between them, so a state that starts in a single sector
//! stays block-diagonal. The same container also carries `ρ′ = dρ/dφ` and
//! the one-sided products returned by [`crate::hilbert::apply`].

use std::io::{self, Write};
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fisher::hermitian_eig;
use crate::states::PureState;
use crate::C64;

pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    blocks: Vec<DMatrix<C64>>,
}

impl DensityMatrix {
    pub fn zeros(n_max: usize) -> Self {
        Self {
            blocks: (0..=n_max).map(|n| DMatrix::zeros(n + 1, n + 1)).collect(),
        }
    }

    pub fn from_blocks(blocks: Vec<DMatrix<C64>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::invalid("density matrix needs at least one sector"));
        }
        for (n, b) in blocks.iter().enumerate() {
            if b.nrows() != n + 1 || b.ncols() != n + 1 {
                return Err(Error::invalid(format!(
                    "sector {n} block is {}x{}, expected {}x{}",
                    b.nrows(),
                    b.ncols(),
                    n + 1,
                    n + 1
                )));
            }
        }
        Ok(Self { blocks })
    }

    /// `|ψ⟩⟨ψ|` embedded in sectors `0..=ψ.sector()`.
    pub fn from_pure(state: &PureState) -> Self {
        let mut rho = Self::zeros(state.sector());
        let v = state.amplitudes();
        *rho.block_mut(state.sector()) = v * v.adjoint();
        rho
    }

    pub fn n_max(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn block(&self, n: usize) -> &DMatrix<C64> {
        &self.blocks[n]
    }

    pub fn block_mut(&mut self, n: usize) -> &mut DMatrix<C64> {
        &mut self.blocks[n]
    }

    pub fn blocks(&self) -> &[DMatrix<C64>] {
        &self.blocks
    }

    pub fn map_blocks(&self, mut f: impl FnMut(usize, &DMatrix<C64>) -> DMatrix<C64>) -> Self {
        Self {
            blocks: self.blocks.iter().enumerate().map(|(n, b)| f(n, b)).collect(),
        }
    }

    pub fn trace_complex(&self) -> C64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }

    pub fn trace(&self) -> f64 {
        self.trace_complex().re
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (b * b).trace().re)
            .sum()
    }

    /// `Σ_n Σ_k f(n, k) ρ_n[k, k]` for an operator diagonal in the Fock basis.
    pub fn expect_diagonal(&self, f: impl Fn(usize, usize) -> f64) -> f64 {
        self.blocks
            .iter()
            .enumerate()
            .map(|(n, b)| (0..=n).map(|k| f(n, k) * b[(k, k)].re).sum::<f64>())
            .sum()
    }

    /// `tr(ρ (n̂_a + n̂_b))`.
    pub fn mean_number(&self) -> f64 {
        self.expect_diagonal(|n, _| n as f64)
    }

    pub fn max_hermitian_deviation(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| max_abs(&(b - b.adjoint())))
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue over all blocks.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let mut min = f64::INFINITY;
        for b in &self.blocks {
            let h = hermitize(b);
            let eig = hermitian_eig(&h)?;
            if let Some(&last) = eig.values.last() {
                min = min.min(last);
            }
        }
        Ok(min)
    }

    /// `½ ‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if self.n_max() != other.n_max() {
            return Err(Error::invalid("trace distance between different bases"));
        }
        let mut total = 0.0;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            let eig = hermitian_eig(&hermitize(&(a - b)))?;
            total += eig.values.iter().map(|x| x.abs()).sum::<f64>();
        }
        Ok(0.5 * total)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| max_abs(&(a - b)))
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| b.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    /// Unit trace, Hermitian blocks, and no eigenvalue below `−1e−10`.
    pub fn check_physical(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NumericalFailure(format!("trace {tr} differs from 1")));
        }
        let herm = self.max_hermitian_deviation();
        if herm > HERMITIAN_TOL {
            return Err(Error::NumericalFailure(format!(
                "block not Hermitian (deviation {herm:e})"
            )));
        }
        let min = self.min_eigenvalue()?;
        if min < -POSITIVITY_TOL {
            return Err(Error::NumericalFailure(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_blocks(|_, b| b.scale(s))
    }

    /// Debug dump, one CSV row `sector,row,col,re,im` per stored element.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "sector,row,col,re,im")?;
        for (n, b) in self.blocks.iter().enumerate() {
            for r in 0..b.nrows() {
                for c in 0..b.ncols() {
                    let z = b[(r, c)];
                    writeln!(out, "{n},{r},{c},{:.17e},{:.17e}", z.re, z.im)?;
                }
            }
        }
        Ok(())
    }
}

impl Add for &DensityMatrix {
    type Output = DensityMatrix;

    fn add(self, rhs: &DensityMatrix) -> DensityMatrix {
        assert_eq!(self.n_max(), rhs.n_max());
        self.map_blocks(|n, b| b + &rhs.blocks[n])
    }
}

impl Sub for &DensityMatrix {
    type Output = DensityMatrix;

    fn sub(self, rhs: &DensityMatrix) -> DensityMatrix {
        assert_eq!(self.n_max(), rhs.n_max());
        self.map_blocks(|n, b| b - &rhs.blocks[n])
    }
}

impl Mul<f64> for &DensityMatrix {
    type Output = DensityMatrix;

    fn mul(self, rhs: f64) -> DensityMatrix {
        self.scale(rhs)
    }
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `(M + M†)/2`; removes round-off asymmetry before an eigensolve.
pub(crate) fn hermitize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_misshapen_blocks() {
        let blocks = vec![DMatrix::zeros(1, 1), DMatrix::zeros(3, 3)];
        assert!(DensityMatrix::from_blocks(blocks).is_err());
        assert!(DensityMatrix::from_blocks(vec![]).is_err());
    }

    #[test]
    fn trace_distance_of_orthogonal_projectors() {
        let mut a = DensityMatrix::zeros(2);
        let mut b = DensityMatrix::zeros(2);
        a.block_mut(2)[(0, 0)] = C64::new(1.0, 0.0);
        b.block_mut(1)[(1, 1)] = C64::new(1.0, 0.0);
        assert!((a.trace_distance(&b).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(a.trace_distance(&a).unwrap(), 0.0);
    }

    #[test]
    fn physical_check_flags_bad_trace() {
        let mut a = DensityMatrix::zeros(1);
        a.block_mut(0)[(0, 0)] = C64::new(0.5, 0.0);
        assert!(a.check_physical().is_err());
        a.block_mut(0)[(0, 0)] = C64::new(1.0, 0.0);
        assert!(a.check_physical().is_ok());
    }

    #[test]
    fn csv_dump_has_one_row_per_element() {
        let rho = DensityMatrix::zeros(2);
        let mut buf = Vec::new();
        rho.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 1 + 4 + 9);
        assert!(text.starts_with("sector,row,col,re,im\n"));
    }
}
