//! Truncated two-mode Fock space split into fixed total-number sectors.
//!
//! Sector `n` holds the `n + 1` states `|n_a, n_b⟩` with `n_a + n_b = n`,
//! ordered by `n_a` ascending, so offset `k` inside the sector is `n_a = k`.
//! The Dicke label used throughout is `|J, m⟩ ↔ |n_a = J + m, n_b = J − m⟩`
//! with `J = n/2`, and `Ĵz = (n_b − n_a)/2`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SectorBasis {
    n_max: usize,
}

impl SectorBasis {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::invalid("basis needs n_max >= 1"));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn num_sectors(&self) -> usize {
        self.n_max + 1
    }

    pub fn sector_dim(&self, n: usize) -> usize {
        n + 1
    }

    /// Total number of Fock states across all sectors, `(N+1)(N+2)/2`.
    pub fn dim(&self) -> usize {
        (self.n_max + 1) * (self.n_max + 2) / 2
    }

    /// Position of `(sector, offset)` in the flattened basis.
    pub fn global_index(&self, n: usize, k: usize) -> usize {
        debug_assert!(n <= self.n_max && k <= n);
        n * (n + 1) / 2 + k
    }

    /// `(n_a, n_b)` for offset `k` of sector `n`.
    pub fn occupation(&self, n: usize, k: usize) -> (usize, usize) {
        (k, n - k)
    }

    /// Sector offset of `|n_a, n_b⟩`.
    pub fn offset_of(&self, n_a: usize, n_b: usize) -> Option<(usize, usize)> {
        let n = n_a + n_b;
        (n <= self.n_max).then_some((n, n_a))
    }

    /// Eigenvalue of `Ĵz = (n_b − n_a)/2` at offset `k` of sector `n`.
    pub fn jz_value(n: usize, k: usize) -> f64 {
        (n as f64 - 2.0 * k as f64) / 2.0
    }
}

/// Operators the rest of the crate needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    A,
    B,
    Jx,
    Jy,
    Jz,
    NumA,
    NumB,
    ParityB,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 8] = [
        OperatorKind::A,
        OperatorKind::B,
        OperatorKind::Jx,
        OperatorKind::Jy,
        OperatorKind::Jz,
        OperatorKind::NumA,
        OperatorKind::NumB,
        OperatorKind::ParityB,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::A => "a",
            OperatorKind::B => "b",
            OperatorKind::Jx => "jx",
            OperatorKind::Jy => "jy",
            OperatorKind::Jz => "jz",
            OperatorKind::NumA => "num_a",
            OperatorKind::NumB => "num_b",
            OperatorKind::ParityB => "parity_b",
        }
    }

    pub fn is_ladder(&self) -> bool {
        matches!(self, OperatorKind::A | OperatorKind::B)
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OperatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown operator kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockShape {
    /// `blocks[n]` is `(n+1) × (n+1)`.
    SectorPreserving,
    /// `blocks[n]` is `n × (n+1)`, mapping sector `n` to `n − 1`.
    Lowering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Sandwich,
}

/// An operator stored as one dense block per sector.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    kind: OperatorKind,
    basis: SectorBasis,
    blocks: Vec<DMatrix<C64>>,
}

impl BlockOperator {
    pub fn build(basis: SectorBasis, kind: OperatorKind) -> Self {
        let blocks = (0..basis.num_sectors())
            .map(|n| sector_block(kind, n))
            .collect();
        Self {
            kind,
            basis,
            blocks,
        }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn basis(&self) -> SectorBasis {
        self.basis
    }

    pub fn shape(&self) -> BlockShape {
        if self.kind.is_ladder() {
            BlockShape::Lowering
        } else {
            BlockShape::SectorPreserving
        }
    }

    pub fn block(&self, n: usize) -> &DMatrix<C64> {
        &self.blocks[n]
    }

    pub fn blocks(&self) -> &[DMatrix<C64>] {
        &self.blocks
    }
}

/// Block of `kind` acting on sector `n`.
pub fn sector_block(kind: OperatorKind, n: usize) -> DMatrix<C64> {
    let dim = n + 1;
    let re = |x: f64| C64::new(x, 0.0);
    match kind {
        // ⟨k−1, n−k| â |k, n−k⟩ = √k
        OperatorKind::A => DMatrix::from_fn(n, dim, |r, c| {
            if c == r + 1 {
                re((c as f64).sqrt())
            } else {
                C64::default()
            }
        }),
        // b̂ keeps n_a, so offset k in sector n lands on offset k in sector n−1.
        OperatorKind::B => DMatrix::from_fn(n, dim, |r, c| {
            if c == r {
                re(((n - c) as f64).sqrt())
            } else {
                C64::default()
            }
        }),
        OperatorKind::Jx | OperatorKind::Jy => {
            let mut m = DMatrix::zeros(dim, dim);
            for k in 0..n {
                // â†b̂ |k, n−k⟩ = √((k+1)(n−k)) |k+1, n−k−1⟩
                let s = (((k + 1) * (n - k)) as f64).sqrt() / 2.0;
                if kind == OperatorKind::Jx {
                    m[(k + 1, k)] = re(s);
                    m[(k, k + 1)] = re(s);
                } else {
                    // Ĵy = (b̂†â − â†b̂)/2i so that [Ĵx, Ĵy] = iĴz with Ĵz = (n_b − n_a)/2.
                    m[(k + 1, k)] = C64::new(0.0, s);
                    m[(k, k + 1)] = C64::new(0.0, -s);
                }
            }
            m
        }
        OperatorKind::Jz => diag(dim, |k| SectorBasis::jz_value(n, k)),
        OperatorKind::NumA => diag(dim, |k| k as f64),
        OperatorKind::NumB => diag(dim, |k| (n - k) as f64),
        OperatorKind::ParityB => diag(dim, |k| if (n - k).is_multiple_of(2) { 1.0 } else { -1.0 }),
    }
}

fn diag(dim: usize, f: impl Fn(usize) -> f64) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |r, c| {
        if r == c {
            C64::new(f(r), 0.0)
        } else {
            C64::default()
        }
    })
}

/// Apply `op` to a block-diagonal `rho`.
///
/// `Left` and `Right` need a sector-preserving operator. `Sandwich` computes
/// `op ρ op†`; for a ladder operator sector `n` of ρ lands in sector `n − 1`
/// of the result and the top sector of the result is zero.
pub fn apply(op: &BlockOperator, rho: &DensityMatrix, side: Side) -> Result<DensityMatrix> {
    if op.basis().n_max() != rho.n_max() {
        return Err(Error::invalid(format!(
            "basis mismatch: operator n_max {} vs state n_max {}",
            op.basis().n_max(),
            rho.n_max()
        )));
    }
    let n_max = rho.n_max();
    match (op.shape(), side) {
        (BlockShape::SectorPreserving, Side::Left) => Ok(rho.map_blocks(|n, b| op.block(n) * b)),
        (BlockShape::SectorPreserving, Side::Right) => Ok(rho.map_blocks(|n, b| b * op.block(n))),
        (BlockShape::SectorPreserving, Side::Sandwich) => {
            Ok(rho.map_blocks(|n, b| op.block(n) * b * op.block(n).adjoint()))
        }
        (BlockShape::Lowering, Side::Sandwich) => {
            let blocks = (0..=n_max)
                .map(|n| {
                    if n == n_max {
                        DMatrix::zeros(n + 1, n + 1)
                    } else {
                        let l = op.block(n + 1);
                        l * rho.block(n + 1) * l.adjoint()
                    }
                })
                .collect();
            DensityMatrix::from_blocks(blocks)
        }
        (BlockShape::Lowering, _) => Err(Error::invalid(format!(
            "one-sided product with ladder operator `{}` leaves the block-diagonal form",
            op.kind()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn basis(n: usize) -> SectorBasis {
        SectorBasis::new(n).unwrap()
    }

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn rejects_empty_basis() {
        assert!(matches!(SectorBasis::new(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(basis(1).dim(), 3);
        assert_eq!(basis(2).dim(), 6);
        assert_eq!(basis(40).dim(), 861);
        let b = basis(1);
        assert_eq!(b.occupation(0, 0), (0, 0));
        assert_eq!(b.occupation(1, 0), (0, 1));
        assert_eq!(b.occupation(1, 1), (1, 0));
    }

    #[test]
    fn global_index_is_contiguous() {
        let b = basis(7);
        let mut expected = 0;
        for n in 0..=7 {
            for k in 0..=n {
                assert_eq!(b.global_index(n, k), expected);
                expected += 1;
            }
        }
        assert_eq!(expected, b.dim());
    }

    #[test]
    fn unknown_kind_is_rejected() {
        assert!("jw".parse::<OperatorKind>().is_err());
        assert_eq!("parity_b".parse::<OperatorKind>().unwrap(), OperatorKind::ParityB);
    }

    #[test]
    fn spot_values() {
        let b = basis(4);
        let jz = BlockOperator::build(b, OperatorKind::Jz);
        let (n, k) = b.offset_of(0, 4).unwrap();
        assert_eq!(jz.block(n)[(k, k)].re, 2.0);

        let par = BlockOperator::build(b, OperatorKind::ParityB);
        let (n, k) = b.offset_of(1, 3).unwrap();
        assert_eq!(par.block(n)[(k, k)].re, -1.0);

        // â|2,0⟩ = √2|1,0⟩
        let a = BlockOperator::build(b, OperatorKind::A);
        let (n, k) = b.offset_of(2, 0).unwrap();
        let (n1, k1) = b.offset_of(1, 0).unwrap();
        assert_eq!(n1, n - 1);
        assert_abs_diff_eq!(a.block(n)[(k1, k)].re, 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn sector_preserving_are_hermitian() {
        let b = basis(9);
        for kind in OperatorKind::ALL.into_iter().filter(|k| !k.is_ladder()) {
            let op = BlockOperator::build(b, kind);
            for m in op.blocks() {
                assert!(max_abs(&(m - m.adjoint())) < 1e-12, "{kind} not Hermitian");
            }
        }
    }

    #[test]
    fn angular_momentum_algebra() {
        let b = basis(10);
        let jx = BlockOperator::build(b, OperatorKind::Jx);
        let jy = BlockOperator::build(b, OperatorKind::Jy);
        let jz = BlockOperator::build(b, OperatorKind::Jz);
        let i = C64::new(0.0, 1.0);
        for n in 0..=10 {
            let comm = jx.block(n) * jy.block(n) - jy.block(n) * jx.block(n);
            assert!(max_abs(&(comm - jz.block(n) * i)) < 1e-12);
        }
    }

    #[test]
    fn number_and_parity_identities() {
        let b = basis(8);
        let a = BlockOperator::build(b, OperatorKind::A);
        let bb = BlockOperator::build(b, OperatorKind::B);
        let par = BlockOperator::build(b, OperatorKind::ParityB);
        for n in 1..=8 {
            let total = a.block(n).adjoint() * a.block(n) + bb.block(n).adjoint() * bb.block(n);
            let id = DMatrix::<C64>::identity(n + 1, n + 1);
            assert!(max_abs(&(total - id.scale(n as f64))) < 1e-12);
            let sq = par.block(n) * par.block(n);
            assert!(max_abs(&(sq - id)) < 1e-15);
        }
    }

    #[test]
    fn ladder_matches_number_operator() {
        let b = basis(5);
        let a = BlockOperator::build(b, OperatorKind::A);
        let na = BlockOperator::build(b, OperatorKind::NumA);
        for n in 1..=5 {
            let ada = a.block(n).adjoint() * a.block(n);
            assert!(max_abs(&(ada - na.block(n))) < 1e-12);
        }
    }

    #[test]
    fn sandwich_lowers_sector() {
        let b = basis(3);
        let mut rho = DensityMatrix::zeros(3);
        let (n, k) = b.offset_of(1, 0).unwrap();
        rho.block_mut(n)[(k, k)] = C64::new(1.0, 0.0);
        let a = BlockOperator::build(b, OperatorKind::A);
        let out = apply(&a, &rho, Side::Sandwich).unwrap();
        assert_abs_diff_eq!(out.block(0)[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.trace(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn left_product_with_identity_state() {
        let b = basis(4);
        let rho = DensityMatrix::from_blocks((0..=4).map(|n| DMatrix::identity(n + 1, n + 1)).collect())
            .unwrap();
        let jz = BlockOperator::build(b, OperatorKind::Jz);
        let out = apply(&jz, &rho, Side::Left).unwrap();
        for n in 0..=4 {
            assert_eq!(out.block(n), jz.block(n));
        }
    }

    #[test]
    fn one_sided_ladder_and_mismatch_rejected() {
        let a = BlockOperator::build(basis(3), OperatorKind::A);
        let rho = DensityMatrix::zeros(3);
        assert!(apply(&a, &rho, Side::Left).is_err());
        let rho4 = DensityMatrix::zeros(4);
        let jz = BlockOperator::build(basis(3), OperatorKind::Jz);
        assert!(matches!(apply(&jz, &rho4, Side::Left), Err(Error::InvalidArgument(_))));
    }
}
