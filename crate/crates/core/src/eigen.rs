//! Cyclic Jacobi eigensolver for small dense Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary and then applies a real Jacobi rotation, so the iteration stays in
//! complex arithmetic only where needed. Blocks here are at most `(N+1)²`.

use nalgebra::DMatrix;

use crate::C64;

const MAX_SWEEPS: usize = 100;

/// Returns unsorted eigenvalues and the matrix whose columns are the matching
/// orthonormal eigenvectors, or `None` if the sweeps fail to converge.
pub(crate) fn jacobi_eigh(a: &DMatrix<C64>) -> Option<(Vec<f64>, DMatrix<C64>)> {
    let n = a.nrows();
    // row-major working copy
    let mut m: Vec<C64> = (0..n * n).map(|i| a[(i / n, i % n)]).collect();
    let mut v: Vec<C64> = (0..n * n)
        .map(|i| if i / n == i % n { C64::new(1.0, 0.0) } else { C64::default() })
        .collect();
    for i in 0..n {
        m[i * n + i] = C64::new(m[i * n + i].re, 0.0);
    }
    let scale = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if scale == 0.0 || !scale.is_finite() {
        return scale.is_finite().then(|| (vec![0.0; n], identity(n)));
    }
    let tol = f64::EPSILON * scale;

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| m[p * n + q].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            let values = (0..n).map(|i| m[i * n + i].re).collect();
            return Some((values, DMatrix::from_row_slice(n, n, &v)));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                let g = apq.norm();
                if g <= tol * 1e-3 {
                    continue;
                }
                let phase = apq / g; // e^{iα}
                let (app, aqq) = (m[p * n + p].re, m[q * n + q].re);
                let tau = (aqq - app) / (2.0 * g);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G = diag(1, e^{−iα}) · [[c, s], [−s, c]]
                let gpp = C64::new(c, 0.0);
                let gpq = C64::new(s, 0.0);
                let gqp = -phase.conj() * s;
                let gqq = phase.conj() * c;
                // A ← A G
                for k in 0..n {
                    let (akp, akq) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = akp * gpp + akq * gqp;
                    m[k * n + q] = akp * gpq + akq * gqq;
                }
                // A ← G† A
                for k in 0..n {
                    let (apk, aqk) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = gpp.conj() * apk + gqp.conj() * aqk;
                    m[q * n + k] = gpq.conj() * apk + gqq.conj() * aqk;
                }
                m[p * n + q] = C64::default();
                m[q * n + p] = C64::default();
                m[p * n + p] = C64::new(m[p * n + p].re, 0.0);
                m[q * n + q] = C64::new(m[q * n + q].re, 0.0);
                // V ← V G
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = vkp * gpp + vkq * gqp;
                    v[k * n + q] = vkp * gpq + vkq * gqq;
                }
            }
        }
    }
    None
}

fn identity(n: usize) -> DMatrix<C64> {
    DMatrix::identity(n, n)
}
