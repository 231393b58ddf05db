//! Explicit residual estimators for the H(d) problems and the mixed Hodge
//! Laplacian.

use std::sync::Arc;

use rayon::prelude::*;

use super::{
    cell_geometries, explicit_report, p1_projection_coeffs, robust_constants, CellFn, EstimatorReport, Functional,
    FunctionalKind, WeightMode, Weighting, RESIDUAL_DEGREE,
};
use crate::assembly::{HdDiscretization, HodgeDiscretization, ProblemKind, ProblemSpec};
use crate::error::{FeecError, Result};
use crate::forms::{codifferential, FormField};
use crate::geometry::Vec3;
use crate::mesh::SimplicialMesh;
use crate::quadrature::simplex_rule;
use crate::spaces::{CellGeometry, DiscreteField, FormSpace};

fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn scale(s: f64, a: &Vec3) -> Vec3 {
    [s * a[0], s * a[1], s * a[2]]
}

/// Constant `d` of a discrete field on every cell.
pub(crate) fn cell_derivatives(field: &DiscreteField, geoms: &[CellGeometry]) -> Result<Vec<Vec3>> {
    geoms.par_iter().map(|g| field.derivative_with(g)).collect()
}

/// Elementwise `δf`: from the analytic Jacobian when available, otherwise
/// from the L² projection of `f` onto degree-1 polynomials on each cell.
pub(crate) fn load_coderivative<'a>(f: &'a FormField, mesh: &SimplicialMesh, geoms: &[CellGeometry]) -> CellFn<'a> {
    let n = mesh.dim();
    let k = f.k;
    if let Some(jac) = &f.jacobian {
        let jac = Arc::clone(jac);
        return Box::new(move |_, _, _, x| codifferential(k, n, &jac(x)));
    }
    let rule = simplex_rule(n, RESIDUAL_DEGREE);
    let per_cell: Vec<Vec3> = geoms
        .par_iter()
        .map(|g| {
            let mut b = vec![[0.0; 3]; n + 1];
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let v = f.eval(&g.point(&p[..=n]));
                for i in 0..=n {
                    for c in 0..3 {
                        b[i][c] += g.volume * w * p[i] * v[c];
                    }
                }
            }
            let a = p1_projection_coeffs(&b, g.volume);
            let mut j = [[0.0; 3]; 3];
            for i in 0..=n {
                for c in 0..3 {
                    for d in 0..3 {
                        j[c][d] += a[i][c] * g.grads[i][d];
                    }
                }
            }
            codifferential(k, n, &j)
        })
        .collect();
    Box::new(move |c, _, _, _| per_cell[c])
}

/// Residual estimator of `(ε d u_h, d v) + (κ u_h, v) = (f, v)`; `u` holds
/// the full coefficient vector.
pub fn hd_residual_estimator(problem: &ProblemSpec, disc: &HdDiscretization, u: &[f64], mode: WeightMode) -> Result<EstimatorReport> {
    hd_functionals(problem, disc, u, mode, |mesh, fs, mode| Ok(explicit_report(mesh, fs, 2, None, mode, false)))
}

/// Builds the H(d) residual functionals (slot, functional) with the weights
/// of `mode` and hands them to `consume` together with the resolved mode.
pub(crate) fn hd_functionals<R>(
    problem: &ProblemSpec,
    disc: &HdDiscretization,
    u: &[f64],
    mode: WeightMode,
    consume: impl FnOnce(&SimplicialMesh, &[(usize, Functional)], WeightMode) -> Result<R>,
) -> Result<R> {
    if problem.kind == ProblemKind::HodgeLaplacian {
        return Err(FeecError::Unsupported("H(d) estimator on a Hodge Laplacian".into()));
    }
    let space = &disc.space;
    let mesh = space.mesh();
    let n = mesh.dim();
    let k = space.k();
    if k >= n {
        return Err(FeecError::Unsupported(format!("H(d) estimator for k={k} in {n}D")));
    }
    let (w1, w2, mode) = match mode {
        WeightMode::Standard => (Weighting::Standard, Weighting::Standard, mode),
        WeightMode::Robust { .. } => {
            let (epsilon, kappa) = robust_constants(&disc.epsilon, &disc.kappa)?;
            (
                Weighting::RobustGradient { kappa },
                Weighting::RobustRegular { epsilon, kappa },
                WeightMode::Robust { epsilon, kappa },
            )
        }
    };
    let uh = DiscreteField::new(space.clone(), u.to_vec())?;
    let geoms = cell_geometries(mesh);
    let du = cell_derivatives(&uh, &geoms)?;
    let (eps, kap) = (&disc.epsilon, &disc.kappa);
    let f = &problem.load;
    let uh = &uh;
    let g = move |c: usize, geo: &CellGeometry, b: &[f64], x: &Vec3| sub(&f.eval(x), &scale(kap[c], &uh.eval_with(geo, b)));
    let flux: CellFn = Box::new(move |c, _, _, _| scale(eps[c], &du[c]));
    let regular = Functional { kind: FunctionalKind::B, degree: k, g: Box::new(g), delta_g: None, q: Some(flux), weighting: w2 };
    let mut functionals = Vec::new();
    if k == 0 {
        functionals.push((0, regular));
    } else {
        let gradient = Functional {
            kind: FunctionalKind::A,
            degree: k,
            g: Box::new(g),
            delta_g: Some(load_coderivative(f, mesh, &geoms)),
            q: None,
            weighting: w1,
        };
        functionals.push((0, gradient));
        functionals.push((1, regular));
    }
    consume(mesh, &functionals, mode)
}

/// Residual estimator of the mixed Hodge Laplacian with `σ_h ∈ V^{k-1}`,
/// `u_h ∈ V^k` given as full coefficient vectors.
pub fn hodge_residual_estimator(problem: &ProblemSpec, disc: &HodgeDiscretization, sigma: &[f64], u: &[f64]) -> Result<EstimatorReport> {
    if problem.kind != ProblemKind::HodgeLaplacian {
        return Err(FeecError::Unsupported("hodge_residual_estimator needs a Hodge Laplacian".into()));
    }
    let mesh = disc.u_space.mesh();
    crate::assembly::check_trivial_harmonics(mesh, problem.k)?;
    hodge_functionals(problem, &disc.sigma_space, &disc.u_space, sigma, u, |mesh, fs, l2| {
        Ok(explicit_report(mesh, fs, 4, l2, WeightMode::Standard, true))
    })
}

/// Builds the Hodge-Laplacian residual functionals (slot, functional) and the
/// `k = n` L² functional, and hands them to `consume`.
pub(crate) fn hodge_functionals<R>(
    problem: &ProblemSpec,
    sigma_space: &FormSpace,
    u_space: &FormSpace,
    sigma: &[f64],
    u: &[f64],
    consume: impl FnOnce(&SimplicialMesh, &[(usize, Functional)], Option<&Functional>) -> Result<R>,
) -> Result<R> {
    let mesh = u_space.mesh();
    let n = mesh.dim();
    let k = problem.k;
    let sh = DiscreteField::new(sigma_space.clone(), sigma.to_vec())?;
    let uh = DiscreteField::new(u_space.clone(), u.to_vec())?;
    let geoms = cell_geometries(mesh);
    let dsig = cell_derivatives(&sh, &geoms)?;
    let du = if k < n { cell_derivatives(&uh, &geoms)? } else { vec![[0.0; 3]; mesh.n_cells()] };
    let f = &problem.load;
    let (sh, uh, dsig, du) = (&sh, &uh, &dsig, &du);
    let minus_sigma = move |_: usize, geo: &CellGeometry, b: &[f64], _: &Vec3| scale(-1.0, &sh.eval_with(geo, b));
    let data = move |c: usize, _: &CellGeometry, _: &[f64], x: &Vec3| sub(&f.eval(x), &dsig[c]);
    let w = Weighting::Standard;
    let mut fs = Vec::new();
    if k >= 2 {
        fs.push((0, Functional { kind: FunctionalKind::A, degree: k - 1, g: Box::new(minus_sigma), delta_g: None, q: None, weighting: w }));
    }
    let minus_u: CellFn = Box::new(move |_, geo, b, _| scale(-1.0, &uh.eval_with(geo, b)));
    fs.push((1, Functional { kind: FunctionalKind::B, degree: k - 1, g: Box::new(minus_sigma), delta_g: None, q: Some(minus_u), weighting: w }));
    let l2 = if k < n {
        fs.push((
            2,
            Functional { kind: FunctionalKind::A, degree: k, g: Box::new(data), delta_g: Some(load_coderivative(f, mesh, &geoms)), q: None, weighting: w },
        ));
        let flux: CellFn = Box::new(move |c, _, _, _| du[c]);
        fs.push((3, Functional { kind: FunctionalKind::B, degree: k, g: Box::new(data), delta_g: None, q: Some(flux), weighting: w }));
        None
    } else {
        Some(Functional { kind: FunctionalKind::B, degree: k, g: Box::new(data), delta_g: None, q: None, weighting: Weighting::L2 })
    };
    consume(mesh, &fs, l2.as_ref())
}
