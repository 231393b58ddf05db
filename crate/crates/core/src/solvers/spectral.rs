//! Extreme eigenvalues of `B A` for an SPD pair, used to probe spectral
//! equivalence of preconditioners.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{FeecError, Result};
use crate::sparse::CsrMatrix;

use super::{cg_run, Preconditioner};

/// Ritz bounds `(λ_min, λ_max)` of `B A` from the Lanczos tridiagonal hidden
/// in preconditioned CG started from `rhs`.
pub fn lanczos_spectrum_bounds(a: &CsrMatrix, precond: &dyn Preconditioner, rhs: &[f64], maxit: usize) -> Result<(f64, f64)> {
    let run = cg_run(a, rhs, precond, 1e-14, maxit)?;
    tridiagonal_extremes(&run.coeffs)
}

fn tridiagonal_extremes(coeffs: &[(f64, f64)]) -> Result<(f64, f64)> {
    let m = coeffs.len();
    if m == 0 {
        return Err(FeecError::InvalidInput("no Lanczos steps".into()));
    }
    let mut t = DMatrix::zeros(m, m);
    for j in 0..m {
        let (alpha, _) = coeffs[j];
        let mut d = 1.0 / alpha;
        if j > 0 {
            let (ap, bp) = coeffs[j - 1];
            d += bp / ap;
        }
        t[(j, j)] = d;
        if j + 1 < m {
            let off = coeffs[j].1.sqrt() / alpha;
            t[(j, j + 1)] = off;
            t[(j + 1, j)] = off;
        }
    }
    let ev = SymmetricEigen::new(t).eigenvalues;
    Ok((ev.min(), ev.max()))
}

/// Dense oracle: eigenvalues of `Lᵀ B L` with `A = L Lᵀ`, where `B` is
/// materialized column by column.
pub fn dense_spectrum_bounds(a: &CsrMatrix, precond: &dyn Preconditioner) -> Result<(f64, f64)> {
    let n = a.nrows();
    let chol = a
        .to_dense()
        .cholesky()
        .ok_or_else(|| FeecError::InvalidInput("matrix is not positive definite".into()))?;
    let l = chol.l();
    let mut b = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = precond.apply(&e);
        for i in 0..n {
            b[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    let b = (&b + b.transpose()) * 0.5;
    let m = l.transpose() * b * &l;
    let ev = SymmetricEigen::new(m).eigenvalues;
    Ok((ev.min(), ev.max()))
}
