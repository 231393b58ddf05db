//! Implicit estimators from local H¹ problems on vertex patches.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::explicit::{hd_functionals, hodge_functionals};
use super::{cell_geometries, explicit_report, EstimatorReport, Functional, FunctionalKind, WeightMode, RESIDUAL_DEGREE};
use crate::assembly::{HdDiscretization, HodgeDiscretization, ProblemSpec};
use crate::error::{FeecError, Result};
use crate::forms::n_components;
use crate::geometry::{dot, Vec3};
use crate::mesh::SimplicialMesh;
use crate::quadrature::simplex_rule;
use crate::spaces::CellGeometry;

/// Discrete solution handed to [`local_implicit_estimator`].
pub enum SolutionRef<'a, 'm> {
    Hd { disc: &'a HdDiscretization<'m>, u: &'a [f64] },
    Hodge { disc: &'a HodgeDiscretization<'m>, sigma: &'a [f64], u: &'a [f64] },
}

#[derive(Debug, Clone)]
pub struct ImplicitEstimate {
    /// Per-cell redistribution of the patch values (jump columns are zero).
    pub report: EstimatorReport,
    /// `‖η_i‖²_{H¹}` per vertex and residual group.
    pub vertex_values: Vec<Vec<f64>>,
}

/// Componentwise quadratic Lagrange functions on the patch of a vertex that
/// vanish on the interior patch boundary and on Γ: the P2 function of the
/// vertex and those of the midpoints of its edges.
#[derive(Debug, Clone)]
pub struct PatchSpace {
    pub vertex: usize,
    pub cells: Vec<usize>,
    /// `None` for the vertex node, `Some(j)` for the midpoint of edge `(vertex, j)`.
    pub nodes: Vec<Option<usize>>,
}

impl PatchSpace {
    pub fn new(mesh: &SimplicialMesh, vertex: usize) -> Result<Self> {
        let cells = mesh.vertex_patch(vertex)?.to_vec();
        let mut nodes = Vec::new();
        if !mesh.in_gamma(0, vertex) {
            nodes.push(None);
        }
        let mut nbrs: Vec<usize> = cells.iter().flat_map(|&c| mesh.cell(c).iter().copied()).filter(|&v| v != vertex).collect();
        nbrs.sort_unstable();
        nbrs.dedup();
        for j in nbrs {
            let e = mesh.lookup(&[vertex.min(j), vertex.max(j)]).expect("patch edge");
            if !mesh.in_gamma(1, e) {
                nodes.push(Some(j));
            }
        }
        Ok(PatchSpace { vertex, cells, nodes })
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// Values and gradients of the patch basis restricted to cell `g`, as
    /// `(patch node index, value, gradient)`.
    pub fn local_basis(&self, mesh: &SimplicialMesh, g: &CellGeometry, bary: &[f64]) -> Vec<(usize, f64, Vec3)> {
        let cell = mesh.cell(g.cell);
        let li = cell.iter().position(|&v| v == self.vertex).expect("cell in patch");
        let gi = g.grads[li];
        let l = bary[li];
        let mut out = Vec::with_capacity(self.nodes.len());
        for (a, node) in self.nodes.iter().enumerate() {
            match node {
                None => {
                    let s = 4.0 * l - 1.0;
                    out.push((a, l * (2.0 * l - 1.0), [s * gi[0], s * gi[1], s * gi[2]]));
                }
                Some(j) => {
                    if let Some(lj) = cell.iter().position(|v| v == j) {
                        let m = bary[lj];
                        let gj = g.grads[lj];
                        let grad = [4.0 * (m * gi[0] + l * gj[0]), 4.0 * (m * gi[1] + l * gj[1]), 4.0 * (m * gi[2] + l * gj[2])];
                        out.push((a, 4.0 * l * m, grad));
                    }
                }
            }
        }
        out
    }

    /// `(∇φ_a, ∇φ_b) + (φ_a, φ_b)` on the patch.
    pub fn h1_matrix(&self, mesh: &SimplicialMesh, geoms: &[CellGeometry]) -> DMatrix<f64> {
        let n = mesh.dim();
        let rule = simplex_rule(n, 4);
        let m = self.dim();
        let mut a = DMatrix::zeros(m, m);
        for &c in &self.cells {
            let g = &geoms[c];
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let basis = self.local_basis(mesh, g, &p[..=n]);
                for (ia, va, ga) in &basis {
                    for (ib, vb, gb) in &basis {
                        a[(*ia, *ib)] += g.volume * w * (dot(ga, gb) + va * vb);
                    }
                }
            }
        }
        a
    }
}

/// Proxy of `d(φ e_c)` for a `t`-form test function with scalar factor φ.
fn test_derivative(t: usize, n: usize, grad: &Vec3, comp: usize) -> Vec3 {
    match (t, n) {
        (0, _) => *grad,
        (1, 2) => [if comp == 0 { -grad[1] } else { grad[0] }, 0.0, 0.0],
        (1, 3) => {
            let mut e = [0.0; 3];
            e[comp] = 1.0;
            crate::geometry::cross(grad, &e)
        }
        (2, 3) => [grad[comp], 0.0, 0.0],
        _ => [0.0; 3],
    }
}

/// `sup ⟨ℓ, v⟩² / ‖v‖²_{H¹}` over the patch space, for each functional.
fn patch_values(mesh: &SimplicialMesh, geoms: &[CellGeometry], patch: &PatchSpace, fs: &[(usize, Functional)]) -> Result<Vec<f64>> {
    let m = patch.dim();
    if m == 0 {
        return Ok(vec![0.0; fs.len()]);
    }
    let n = mesh.dim();
    let chol = patch
        .h1_matrix(mesh, geoms)
        .cholesky()
        .ok_or_else(|| FeecError::Singular { dof: patch.vertex })?;
    let rule = simplex_rule(n, RESIDUAL_DEGREE);
    let mut out = Vec::with_capacity(fs.len());
    for (_, f) in fs {
        let t = f.test_degree();
        let nct = n_components(t, n);
        let mut rhs = DMatrix::zeros(m, nct);
        for &c in &patch.cells {
            let g = &geoms[c];
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let b = &p[..=n];
                let x = g.point(b);
                let gv = (f.g)(c, g, b, &x);
                let qv = f.q.as_ref().map(|q| q(c, g, b, &x));
                for (a, val, grad) in patch.local_basis(mesh, g, b) {
                    for comp in 0..nct {
                        let dphi = test_derivative(t, n, &grad, comp);
                        let l = match f.kind {
                            FunctionalKind::A => dot(&gv, &dphi),
                            FunctionalKind::B => val * gv[comp] - qv.map_or(0.0, |q| dot(&q, &dphi)),
                        };
                        rhs[(a, comp)] += g.volume * w * l;
                    }
                }
            }
        }
        let x = chol.solve(&rhs);
        let mut total = 0.0;
        for comp in 0..nct {
            let xc: DVector<f64> = x.column(comp).into();
            let bc: DVector<f64> = rhs.column(comp).into();
            total += xc.dot(&bc);
        }
        out.push(total.max(0.0));
    }
    Ok(out)
}

fn implicit_from_functionals(
    mesh: &SimplicialMesh,
    fs: &[(usize, Functional)],
    l2: Option<&Functional>,
    n_groups: usize,
    hodge: bool,
) -> Result<ImplicitEstimate> {
    let explicit = explicit_report(mesh, fs, n_groups, l2, WeightMode::Standard, hodge);
    let geoms = cell_geometries(mesh);
    let per_vertex: Vec<Vec<f64>> = (0..mesh.n_vertices())
        .into_par_iter()
        .map(|v| {
            let patch = PatchSpace::new(mesh, v)?;
            let vals = patch_values(mesh, &geoms, &patch, fs)?;
            let mut slots = vec![0.0; n_groups];
            for ((slot, _), val) in fs.iter().zip(vals) {
                slots[*slot] = val;
            }
            Ok(slots)
        })
        .collect::<Result<_>>()?;
    let nc = mesh.n_cells();
    let patch_volume: Vec<f64> = (0..mesh.n_vertices())
        .map(|v| mesh.vertex_patch(v).map(|cs| cs.iter().map(|&c| mesh.volume(c)).sum()).unwrap_or(0.0))
        .collect();
    let mut groups = vec![(vec![0.0; nc], vec![0.0; nc]); n_groups];
    for c in 0..nc {
        for &v in mesh.cell(c) {
            let share = mesh.volume(c) / patch_volume[v];
            for s in 0..n_groups {
                groups[s].0[c] += share * per_vertex[v][s];
            }
        }
        for s in 0..n_groups {
            groups[s].0[c] = groups[s].0[c].sqrt();
        }
    }
    let osc_sq: Vec<f64> = explicit.osc_cells.iter().map(|o| o * o).collect();
    let report = EstimatorReport::assemble(groups, explicit.l2.clone(), osc_sq, WeightMode::Standard, hodge);
    Ok(ImplicitEstimate { report, vertex_values: per_vertex })
}

/// Implicit estimator: for every vertex the residual functionals are
/// measured in the dual H¹ norm of the local patch space, and the patch
/// values are split among the patch cells in proportion to volume.
pub fn local_implicit_estimator(problem: &ProblemSpec, solution: SolutionRef) -> Result<ImplicitEstimate> {
    match solution {
        SolutionRef::Hd { disc, u } => hd_functionals(problem, disc, u, WeightMode::Standard, |mesh, fs, _| {
            implicit_from_functionals(mesh, fs, None, 2, false)
        }),
        SolutionRef::Hodge { disc, sigma, u } => {
            crate::assembly::check_trivial_harmonics(disc.u_space.mesh(), problem.k)?;
            hodge_functionals(problem, &disc.sigma_space, &disc.u_space, sigma, u, |mesh, fs, l2| {
                implicit_from_functionals(mesh, fs, l2, 4, true)
            })
        }
    }
}
