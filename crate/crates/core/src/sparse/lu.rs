//! Left-looking sparse LU with threshold partial pivoting that prefers the
//! diagonal, after a fill-reducing column ordering.

use super::{minimum_degree, CsrMatrix};
use crate::error::{FeecError, Result};

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<f64>,
    pinv: Vec<usize>,
    q: Vec<usize>,
}

impl SparseLu {
    /// Factor a square matrix. `tol` in (0, 1] is the diagonal preference
    /// threshold (1 means plain partial pivoting).
    pub fn factor(a: &CsrMatrix, tol: f64) -> Result<SparseLu> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(FeecError::DimensionMismatch(format!("{}x{} matrix", n, a.ncols())));
        }
        let q = minimum_degree(a);
        // columns of a are rows of its transpose
        let at = a.transpose();
        let mut lp = vec![0; n + 1];
        let mut up = vec![0; n + 1];
        let mut li: Vec<usize> = Vec::with_capacity(4 * a.nnz());
        let mut lx: Vec<f64> = Vec::with_capacity(4 * a.nnz());
        let mut ui: Vec<usize> = Vec::with_capacity(4 * a.nnz());
        let mut ux: Vec<f64> = Vec::with_capacity(4 * a.nnz());
        let mut pinv = vec![NONE; n];
        let mut x = vec![0.0; n];
        let mut mark = vec![false; n];
        let mut reach: Vec<usize> = Vec::with_capacity(n);
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for k in 0..n {
            lp[k] = li.len();
            up[k] = ui.len();
            let col = q[k];
            let (rows, vals) = at.row(col);
            let col_scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            // depth-first search for the nonzero pattern of L \ a(:, col)
            reach.clear();
            for &r in rows {
                if mark[r] {
                    continue;
                }
                mark[r] = true;
                stack.push((r, 0));
                while let Some(&mut (j, ref mut next)) = stack.last_mut() {
                    let jj = pinv[j];
                    let children: &[usize] = if jj == NONE { &[] } else { &li[lp[jj] + 1..lp[jj + 1]] };
                    let mut pushed = false;
                    while *next < children.len() {
                        let c = children[*next];
                        *next += 1;
                        if !mark[c] {
                            mark[c] = true;
                            stack.push((c, 0));
                            pushed = true;
                            break;
                        }
                    }
                    if !pushed {
                        reach.push(j);
                        stack.pop();
                    }
                }
            }
            for (&r, &v) in rows.iter().zip(vals) {
                x[r] = v;
            }
            // reverse postorder is a topological order
            for idx in (0..reach.len()).rev() {
                let j = reach[idx];
                let jj = pinv[j];
                if jj == NONE {
                    continue;
                }
                let xj = x[j];
                for p in lp[jj] + 1..lp[jj + 1] {
                    x[li[p]] -= lx[p] * xj;
                }
            }
            let mut ipiv = NONE;
            let mut best = -1.0;
            for &i in reach.iter().rev() {
                if pinv[i] == NONE {
                    if x[i].abs() > best {
                        best = x[i].abs();
                        ipiv = i;
                    }
                } else {
                    ui.push(pinv[i]);
                    ux.push(x[i]);
                }
            }
            if ipiv == NONE || best <= 1e-13 * col_scale.max(f64::MIN_POSITIVE) || best == 0.0 {
                return Err(FeecError::Singular { dof: col });
            }
            if pinv[col] == NONE && x[col].abs() >= tol * best {
                ipiv = col;
            }
            let pivot = x[ipiv];
            ui.push(k);
            ux.push(pivot);
            pinv[ipiv] = k;
            li.push(ipiv);
            lx.push(1.0);
            for &i in reach.iter().rev() {
                if pinv[i] == NONE {
                    li.push(i);
                    lx.push(x[i] / pivot);
                }
                x[i] = 0.0;
                mark[i] = false;
            }
        }
        lp[n] = li.len();
        up[n] = ui.len();
        for r in li.iter_mut() {
            *r = pinv[*r];
        }
        Ok(SparseLu { n, lp, li, lx, up, ui, ux, pinv, q })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored entries in the factors.
    pub fn fill(&self) -> usize {
        self.li.len() + self.ui.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[self.pinv[i]] = b[i];
        }
        for j in 0..n {
            let yj = y[j];
            if yj != 0.0 {
                for p in self.lp[j] + 1..self.lp[j + 1] {
                    y[self.li[p]] -= self.lx[p] * yj;
                }
            }
        }
        for j in (0..n).rev() {
            let last = self.up[j + 1] - 1;
            y[j] /= self.ux[last];
            let yj = y[j];
            if yj != 0.0 {
                for p in self.up[j]..last {
                    y[self.ui[p]] -= self.ux[p] * yj;
                }
            }
        }
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[self.q[k]] = y[k];
        }
        x
    }
}
