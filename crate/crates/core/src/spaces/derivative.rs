use super::{Family, FormSpace};
use crate::error::{FeecError, Result};
use crate::sparse::CsrMatrix;

/// Signed incidence matrix mapping Whitney `k`-form coefficients to
/// `(k+1)`-form coefficients; entries are -1, 0 or +1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<i8>,
}

impl IncidenceMatrix {
    pub fn to_csr(&self) -> CsrMatrix {
        CsrMatrix::from_raw(
            self.nrows,
            self.ncols,
            self.indptr.clone(),
            self.indices.clone(),
            self.values.iter().map(|&v| v as f64).collect(),
        )
    }

    /// Exact integer product `self * other`, returned as its nonzero entries.
    pub fn product_nonzeros(&self, other: &IncidenceMatrix) -> Vec<(usize, usize, i64)> {
        assert_eq!(self.ncols, other.nrows);
        let mut out = Vec::new();
        let mut acc = vec![0i64; other.ncols];
        let mut touched = Vec::new();
        for i in 0..self.nrows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                let k = self.indices[p];
                for q in other.indptr[k]..other.indptr[k + 1] {
                    let j = other.indices[q];
                    if acc[j] == 0 {
                        touched.push(j);
                    }
                    acc[j] += self.values[p] as i64 * other.values[q] as i64;
                }
            }
            for &j in &touched {
                if acc[j] != 0 {
                    out.push((i, j, acc[j]));
                }
                acc[j] = 0;
            }
            touched.clear();
        }
        out
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| (self.indptr[i]..self.indptr[i + 1]).map(|p| self.values[p] as f64 * x[self.indices[p]]).sum())
            .collect()
    }
}

/// `D_k` for a Whitney (or Lagrange) `k`-form space.
pub fn exterior_derivative(space: &FormSpace) -> Result<IncidenceMatrix> {
    if !matches!(space.family(), Family::TrimmedP1 | Family::LagrangeP1) {
        return Err(FeecError::DimensionMismatch(format!("no incidence for {:?}", space.family())));
    }
    let mesh = space.mesh();
    let n = mesh.dim();
    let k = space.k();
    if k >= n {
        return Err(FeecError::DimensionMismatch(format!("D_{k} in {n}D")));
    }
    let rows = mesh.n_simplices(k + 1);
    let mut indptr = vec![0];
    let mut indices = Vec::with_capacity(rows * (k + 2));
    let mut values = Vec::with_capacity(rows * (k + 2));
    // top-dimensional DOFs are taken with respect to the coordinate orientation
    let mut top_sign = vec![1i8; if k + 1 == n { rows } else { 0 }];
    for (c, s) in top_sign.iter_mut().enumerate() {
        *s = mesh.orientation(c);
    }
    for s in 0..rows {
        let verts = mesh.simplex(k + 1, s);
        let mut entries: Vec<(usize, i8)> = (0..=k + 1)
            .map(|skip| {
                let face: Vec<usize> = (0..=k + 1).filter(|&i| i != skip).map(|i| verts[i]).collect();
                let id = mesh.lookup(&face).expect("face of a simplex is in the mesh");
                let mut sign = if skip % 2 == 0 { 1 } else { -1 };
                if k + 1 == n {
                    sign *= top_sign[s];
                }
                (id, sign)
            })
            .collect();
        entries.sort_by_key(|e| e.0);
        for (id, v) in entries {
            indices.push(id);
            values.push(v);
        }
        indptr.push(indices.len());
    }
    Ok(IncidenceMatrix { nrows: rows, ncols: mesh.n_simplices(k), indptr, indices, values })
}
