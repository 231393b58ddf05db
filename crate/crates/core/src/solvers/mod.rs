//! Direct and Krylov solvers with pluggable preconditioners.

mod hx;
mod spectral;

use std::time::Instant;

use crate::assembly::LinearSystem;
use crate::error::{FeecError, Result};
use crate::sparse::{dot, norm2, CsrMatrix, SparseLu};

pub use hx::{build_hx_preconditioner, AuxiliarySpacePreconditioner};
pub use spectral::{dense_spectrum_bounds, lanczos_spectrum_bounds};

pub const DEFAULT_DIRECT_CAP: usize = 50_000;

/// Approximate inverse `B ≈ A⁻¹`.
pub trait Preconditioner: Sync {
    fn apply(&self, r: &[f64]) -> Vec<f64>;
    fn name(&self) -> String;
}

pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        r.to_vec()
    }
    fn name(&self) -> String {
        "none".into()
    }
}

pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let d = a.diagonal();
        if let Some(i) = d.iter().position(|&v| v == 0.0) {
            return Err(FeecError::Singular { dof: i });
        }
        Ok(Jacobi { inv_diag: d.iter().map(|v| 1.0 / v).collect() })
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        r.iter().zip(&self.inv_diag).map(|(a, b)| a * b).collect()
    }
    fn name(&self) -> String {
        "jacobi".into()
    }
}

/// Exact inverse through a sparse LU factorization.
pub struct DirectInverse {
    lu: SparseLu,
}

impl DirectInverse {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        Ok(DirectInverse { lu: SparseLu::factor(a, 0.1)? })
    }
}

impl Preconditioner for DirectInverse {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        self.lu.solve(r)
    }
    fn name(&self) -> String {
        "direct".into()
    }
}

/// `diag(B_1, B_2, ...)` acting on consecutive index blocks.
pub struct BlockDiagonal {
    pub blocks: Vec<(usize, Box<dyn Preconditioner + Send>)>,
}

impl Preconditioner for BlockDiagonal {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(r.len());
        let mut off = 0;
        for (size, b) in &self.blocks {
            out.extend(b.apply(&r[off..off + size]));
            off += size;
        }
        out
    }
    fn name(&self) -> String {
        let names: Vec<String> = self.blocks.iter().map(|b| b.1.name()).collect();
        format!("block({})", names.join("|"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub seconds: f64,
    pub preconditioner: String,
}

/// Sparse LU solve of the reduced system, with one step of iterative
/// refinement when the first residual exceeds 1e-10 relative.
pub fn solve_direct(system: &LinearSystem, cap: usize) -> Result<(Vec<f64>, SolveReport)> {
    solve_direct_matrix(&system.matrix, &system.rhs, cap)
}

pub fn solve_direct_matrix(a: &CsrMatrix, b: &[f64], cap: usize) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let n = b.len();
    if n > cap {
        return Err(FeecError::TooLarge { n, cap });
    }
    let nb = norm2(b);
    if nb == 0.0 {
        return Ok((vec![0.0; n], SolveReport { iterations: 0, relative_residual: 0.0, seconds: 0.0, preconditioner: "direct".into() }));
    }
    let lu = SparseLu::factor(a, 0.1)?;
    let mut x = lu.solve(b);
    let mut rel = 0.0;
    for step in 0..3 {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        rel = norm2(&r) / nb;
        if rel <= 1e-13 || step == 2 {
            break;
        }
        let dx = lu.solve(&r);
        x.iter_mut().zip(dx).for_each(|(xi, d)| *xi += d);
    }
    Ok((x, SolveReport { iterations: 1, relative_residual: rel, seconds: start.elapsed().as_secs_f64(), preconditioner: "direct".into() }))
}

/// Preconditioned conjugate gradients; stops when `sqrt(rᵀBr / r₀ᵀBr₀) <= tol`.
pub fn solve_cg(a: &CsrMatrix, b: &[f64], precond: &dyn Preconditioner, tol: f64, maxit: usize) -> Result<(Vec<f64>, SolveReport)> {
    let run = cg_run(a, b, precond, tol, maxit)?;
    if !run.converged {
        return Err(FeecError::MaxIterations { maxit, residual: run.report.relative_residual });
    }
    Ok((run.x, run.report))
}

pub(crate) struct CgRun {
    pub x: Vec<f64>,
    pub report: SolveReport,
    pub converged: bool,
    /// Lanczos coefficients `(α_j, β_j)` of every completed step.
    pub coeffs: Vec<(f64, f64)>,
}

pub(crate) fn cg_run(a: &CsrMatrix, b: &[f64], precond: &dyn Preconditioner, tol: f64, maxit: usize) -> Result<CgRun> {
    let start = Instant::now();
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = precond.apply(&r);
    let mut rz = dot(&r, &z);
    let finish = |x: Vec<f64>, it: usize, rel: f64, converged: bool, coeffs: Vec<(f64, f64)>| CgRun {
        x,
        report: SolveReport {
            iterations: it,
            relative_residual: rel,
            seconds: start.elapsed().as_secs_f64(),
            preconditioner: precond.name(),
        },
        converged,
        coeffs,
    };
    if rz <= 0.0 {
        if norm2(b) == 0.0 {
            return Ok(finish(x, 0, 0.0, true, Vec::new()));
        }
        return Err(FeecError::InvalidInput("preconditioner is not positive definite".into()));
    }
    let rz0 = rz;
    let mut p = z.clone();
    let mut coeffs = Vec::new();
    let mut ap = vec![0.0; n];
    let mut rel = 1.0;
    for it in 1..=maxit {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(FeecError::InvalidInput("matrix is not positive definite".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = precond.apply(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        coeffs.push((alpha, beta));
        rz = rz_new;
        rel = (rz.max(0.0) / rz0).sqrt();
        if rel <= tol || rz <= 0.0 {
            return Ok(finish(x, it, rel, true, coeffs));
        }
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(finish(x, maxit, rel, false, coeffs))
}

/// Preconditioned MINRES for symmetric (possibly indefinite) systems with a
/// symmetric positive definite preconditioner.
pub fn solve_minres(a: &CsrMatrix, b: &[f64], precond: &dyn Preconditioner, tol: f64, maxit: usize) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let n = b.len();
    let mut x = vec![0.0; n];
    let report = |it: usize, rel: f64| SolveReport {
        iterations: it,
        relative_residual: rel,
        seconds: start.elapsed().as_secs_f64(),
        preconditioner: precond.name(),
    };
    let mut v_old = vec![0.0; n];
    let mut v = b.to_vec();
    let mut z = precond.apply(&v);
    let vz = dot(&v, &z);
    if vz <= 0.0 {
        if norm2(b) == 0.0 {
            return Ok((x, report(0, 0.0)));
        }
        return Err(FeecError::InvalidInput("preconditioner is not positive definite".into()));
    }
    let mut gamma = vz.sqrt();
    let gamma0 = gamma;
    let mut gamma_old = 1.0;
    let mut eta = gamma;
    let (mut s_old, mut s) = (0.0, 0.0);
    let (mut c_old, mut c) = (1.0, 1.0);
    let mut w_old = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut az = vec![0.0; n];
    for it in 1..=maxit {
        z.iter_mut().for_each(|zi| *zi /= gamma);
        a.mul_vec_into(&z, &mut az);
        let delta = dot(&az, &z);
        let v_new: Vec<f64> = (0..n).map(|i| az[i] - (delta / gamma) * v[i] - (gamma / gamma_old) * v_old[i]).collect();
        let z_new = precond.apply(&v_new);
        let gamma_new = dot(&v_new, &z_new).max(0.0).sqrt();
        let alpha0 = c * delta - c_old * s * gamma;
        let alpha1 = (alpha0 * alpha0 + gamma_new * gamma_new).sqrt();
        let alpha2 = s * delta + c_old * c * gamma;
        let alpha3 = s_old * gamma;
        let c_new = alpha0 / alpha1;
        let s_new = gamma_new / alpha1;
        let w_new: Vec<f64> = (0..n).map(|i| (z[i] - alpha3 * w_old[i] - alpha2 * w[i]) / alpha1).collect();
        for i in 0..n {
            x[i] += c_new * eta * w_new[i];
        }
        eta *= -s_new;
        let rel = eta.abs() / gamma0;
        if rel <= tol || gamma_new == 0.0 {
            return Ok((x, report(it, rel)));
        }
        v_old = std::mem::replace(&mut v, v_new);
        z = z_new;
        gamma_old = gamma;
        gamma = gamma_new;
        c_old = c;
        c = c_new;
        s_old = s;
        s = s_new;
        w_old = std::mem::replace(&mut w, w_new);
    }
    Err(FeecError::MaxIterations { maxit, residual: eta.abs() / gamma0 })
}
