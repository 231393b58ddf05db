//! Weighted mass and stiffness forms, load vectors, the H(d) systems and the
//! mixed Hodge-Laplacian saddle systems with essential conditions on Γ.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{FeecError, Result};
use crate::forms::FormField;
use crate::geometry::{cross, sub, Vec3};
use crate::mesh::{GammaSelector, SimplicialMesh};
use crate::quadrature::simplex_rule;
use crate::spaces::{exterior_derivative, CellGeometry, Family, FormSpace};
use crate::sparse::{dot, CsrMatrix, Triplets};

/// Quadrature degree for load vectors and data integrals; high enough that
/// smooth loads on coarse meshes are integrated to about 1e-6 relative.
pub const LOAD_DEGREE: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// `(ε d u, d v) + (κ u, v) = (f, v)` for `0 <= k <= n-1`.
    HdPositive,
    /// Mixed Hodge Laplacian for `1 <= k <= n`.
    HodgeLaplacian,
    /// The `k = 0` case of [`ProblemKind::HdPositive`].
    ReactionDiffusion,
}

/// Piecewise constant coefficient, evaluated at cell centroids.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Piecewise(Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Piecewise(_) => write!(f, "Piecewise(..)"),
        }
    }
}

impl Coefficient {
    pub fn cell_values(&self, mesh: &SimplicialMesh) -> Vec<f64> {
        match self {
            Coefficient::Constant(c) => vec![*c; mesh.n_cells()],
            Coefficient::Piecewise(f) => (0..mesh.n_cells())
                .map(|c| {
                    let pts = mesh.cell_points(c);
                    let mut x = [0.0; 3];
                    for p in &pts {
                        for d in 0..3 {
                            x[d] += p[d] / pts.len() as f64;
                        }
                    }
                    f(&x)
                })
                .collect(),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(c) => Some(*c),
            Coefficient::Piecewise(_) => None,
        }
    }
}

/// Manufactured solution: `u`, `d u` and for mixed problems `σ`, `d σ`.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub u: FormField,
    pub du: FormField,
    pub sigma: Option<FormField>,
    pub dsigma: Option<FormField>,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub k: usize,
    pub epsilon: Coefficient,
    pub kappa: Coefficient,
    pub load: FormField,
    pub gamma: GammaSelector,
    pub exact: Option<ExactSolution>,
}

impl ProblemSpec {
    pub fn validate(&self, mesh: &SimplicialMesh) -> Result<()> {
        let n = mesh.dim();
        match self.kind {
            ProblemKind::HdPositive if self.k >= n => {
                return Err(FeecError::Unsupported(format!("H(d) problem with k={} in {n}D", self.k)))
            }
            ProblemKind::ReactionDiffusion if self.k != 0 => {
                return Err(FeecError::Unsupported("reaction-diffusion needs k=0".into()))
            }
            ProblemKind::HodgeLaplacian if self.k == 0 || self.k > n => {
                return Err(FeecError::Unsupported(format!("Hodge Laplacian with k={} in {n}D", self.k)))
            }
            _ => {}
        }
        if self.load.k != self.k {
            return Err(FeecError::InvalidInput(format!("load is a {}-form, expected {}", self.load.k, self.k)));
        }
        for (name, c) in [("epsilon", &self.epsilon), ("kappa", &self.kappa)] {
            if c.cell_values(mesh).iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(FeecError::InvalidInput(format!("{name} must be positive on every cell")));
            }
        }
        if self.kind == ProblemKind::HodgeLaplacian {
            check_trivial_harmonics(mesh, self.k)?;
        }
        Ok(())
    }
}

/// Whitelist of configurations with no harmonic forms: a contractible-looking
/// mesh (Euler characteristic 1) with Γ empty, or Γ the whole boundary and `k < n`.
pub fn check_trivial_harmonics(mesh: &SimplicialMesh, k: usize) -> Result<()> {
    let n = mesh.dim();
    if mesh.euler_characteristic() != 1 {
        return Err(FeecError::NontrivialHarmonics("domain is not contractible".into()));
    }
    let ng = mesh.gamma_faces().len();
    let nb = mesh.boundary_faces().len();
    if ng == 0 || (ng == nb && k < n) {
        Ok(())
    } else if ng == nb {
        Err(FeecError::NontrivialHarmonics(format!("k={k}=n with Γ = whole boundary (constants)")))
    } else {
        Err(FeecError::NontrivialHarmonics("Γ must be empty or the whole boundary".into()))
    }
}

fn check_weights(weights: &[f64], mesh: &SimplicialMesh) -> Result<()> {
    if weights.len() != mesh.n_cells() {
        return Err(FeecError::DimensionMismatch("one weight per cell expected".into()));
    }
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(FeecError::InvalidInput("weights must be positive".into()));
    }
    Ok(())
}

fn assemble_cells<F>(mesh: &SimplicialMesh, nrows: usize, ncols: usize, local: F) -> CsrMatrix
where
    F: Fn(usize) -> (Vec<usize>, Vec<usize>, Vec<f64>) + Sync + Send,
{
    let locals: Vec<_> = (0..mesh.n_cells()).into_par_iter().map(&local).collect();
    let mut t = Triplets::new(nrows, ncols);
    for (rows, cols, vals) in locals {
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                t.push(i, j, vals[a * cols.len() + b]);
            }
        }
    }
    t.build()
}

/// `(w u, v)` over the full (unconstrained) DOF set; `weights` per cell.
pub fn assemble_mass(space: &FormSpace, weights: &[f64]) -> Result<CsrMatrix> {
    let mesh = space.mesh();
    check_weights(weights, mesh)?;
    let n = mesh.dim();
    let rule = simplex_rule(n, 2);
    Ok(assemble_cells(mesh, space.n_dofs(), space.n_dofs(), |c| {
        let g = CellGeometry::new(mesh, c);
        let dofs = space.local_dofs(c);
        let m = dofs.len();
        let mut vals = vec![0.0; m * m];
        for (b, w) in rule.points.iter().zip(&rule.weights) {
            let phi = space.local_basis(&g, &b[..=n]);
            for i in 0..m {
                for j in 0..m {
                    vals[i * m + j] += w * crate::geometry::dot(&phi[i], &phi[j]);
                }
            }
        }
        let s = weights[c] * g.volume;
        vals.iter_mut().for_each(|v| *v *= s);
        (dofs.clone(), dofs, vals)
    }))
}

/// Componentwise `(w ∇u, ∇v)` for Lagrange or vector Lagrange spaces.
pub fn assemble_h1_stiffness(space: &FormSpace, weights: &[f64]) -> Result<CsrMatrix> {
    let mesh = space.mesh();
    check_weights(weights, mesh)?;
    if !matches!(space.family(), Family::LagrangeP1 | Family::VectorLagrangeP1)
        && !(space.family() == Family::TrimmedP1 && space.k() == 0)
    {
        return Err(FeecError::Unsupported(format!("H1 stiffness on {:?}", space.family())));
    }
    let n = mesh.dim();
    let nc = space.n_components();
    Ok(assemble_cells(mesh, space.n_dofs(), space.n_dofs(), |c| {
        let g = CellGeometry::new(mesh, c);
        let dofs = space.local_dofs(c);
        let m = dofs.len();
        let mut vals = vec![0.0; m * m];
        for a in 0..=n {
            for b in 0..=n {
                let s = weights[c] * g.volume * crate::geometry::dot(&g.grads[a], &g.grads[b]);
                for comp in 0..nc {
                    vals[(a * nc + comp) * m + b * nc + comp] = s;
                }
            }
        }
        (dofs.clone(), dofs, vals)
    }))
}

/// `D_kᵀ M_{k+1}(ε) D_k` over the full DOF sets.
pub fn assemble_stiffness(space_k: &FormSpace, space_k1: &FormSpace, eps: &[f64]) -> Result<CsrMatrix> {
    if space_k1.k() != space_k.k() + 1 || !std::ptr::eq(space_k.mesh(), space_k1.mesh()) {
        return Err(FeecError::DimensionMismatch("spaces do not form a complex pair".into()));
    }
    let d = exterior_derivative(space_k)?.to_csr();
    let m = assemble_mass(space_k1, eps)?;
    Ok(d.transpose().matmul(&m.matmul(&d)))
}

/// `b_i = (f, φ_i)` with a [`LOAD_DEGREE`] rule.
pub fn assemble_load(space: &FormSpace, f: &FormField) -> Vec<f64> {
    let mesh = space.mesh();
    let n = mesh.dim();
    let rule = simplex_rule(n, LOAD_DEGREE);
    let locals: Vec<(Vec<usize>, Vec<f64>)> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let g = CellGeometry::new(mesh, c);
            let dofs = space.local_dofs(c);
            let mut vals = vec![0.0; dofs.len()];
            for (b, w) in rule.points.iter().zip(&rule.weights) {
                let x = g.point(&b[..=n]);
                let fx = f.eval(&x);
                let phi = space.local_basis(&g, &b[..=n]);
                for (v, p) in vals.iter_mut().zip(&phi) {
                    *v += w * crate::geometry::dot(&fx, p);
                }
            }
            vals.iter_mut().for_each(|v| *v *= g.volume);
            (dofs, vals)
        })
        .collect();
    let mut b = vec![0.0; space.n_dofs()];
    for (dofs, vals) in locals {
        for (d, v) in dofs.iter().zip(vals) {
            b[*d] += v;
        }
    }
    b
}

/// Canonical DOFs of continuous piecewise linear proxies in the Whitney
/// space: rows are Whitney DOFs, columns vector-Lagrange DOFs.
pub fn nodal_embedding(vector: &FormSpace, whitney: &FormSpace) -> Result<CsrMatrix> {
    if vector.family() != Family::VectorLagrangeP1 || whitney.family() != Family::TrimmedP1 || vector.k() != whitney.k() {
        return Err(FeecError::DimensionMismatch("nodal embedding needs VectorLagrangeP1 -> TrimmedP1".into()));
    }
    let mesh = whitney.mesh();
    let n = mesh.dim();
    let k = whitney.k();
    let nc = vector.n_components();
    let mut t = Triplets::new(whitney.n_dofs(), vector.n_dofs());
    for s in 0..whitney.n_dofs() {
        let verts = mesh.simplex(k, s);
        let pts = mesh.simplex_points(k, s);
        let weight: Vec3 = match k {
            0 => [1.0, 0.0, 0.0],
            1 => sub(&pts[1], &pts[0]),
            2 if n == 3 => crate::geometry::scale(0.5, &cross(&sub(&pts[1], &pts[0]), &sub(&pts[2], &pts[0]))),
            _ => [crate::geometry::simplex_measure(&pts, n).abs(), 0.0, 0.0],
        };
        let share = 1.0 / verts.len() as f64;
        for &v in verts {
            for comp in 0..nc {
                if weight[comp] != 0.0 {
                    t.push(s, v * nc + comp, share * weight[comp]);
                }
            }
        }
    }
    Ok(t.build())
}

/// Reduced linear system on the free DOFs, possibly with two blocks.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// For each block, the free DOFs of the underlying space.
    pub free: Vec<Vec<usize>>,
    /// For each block, the full DOF count of the underlying space.
    pub full_sizes: Vec<usize>,
}

impl LinearSystem {
    pub fn n(&self) -> usize {
        self.rhs.len()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.free.iter().map(|f| f.len()).collect()
    }

    /// Scatter a reduced solution back to full coefficient vectors per block.
    pub fn expand(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.free.len());
        let mut off = 0;
        for (free, &size) in self.free.iter().zip(&self.full_sizes) {
            let mut full = vec![0.0; size];
            for (l, &g) in free.iter().enumerate() {
                full[g] = x[off + l];
            }
            off += free.len();
            out.push(full);
        }
        out
    }

    /// `b - A x`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.matrix.mul_vec(x);
        self.rhs.iter().zip(ax).map(|(b, a)| b - a).collect()
    }

    /// `max_i |(b - A x)_i| / ‖b‖₂` (zero when `b = 0` and `x` solves exactly).
    pub fn galerkin_defect(&self, x: &[f64]) -> f64 {
        let r = self.residual(x);
        let m = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let nb = dot(&self.rhs, &self.rhs).sqrt();
        if nb == 0.0 {
            m
        } else {
            m / nb
        }
    }
}

/// Discrete H(d) problem: the trial space and the reduced system.
#[derive(Debug, Clone)]
pub struct HdDiscretization<'m> {
    pub space: FormSpace<'m>,
    pub system: LinearSystem,
    pub epsilon: Vec<f64>,
    pub kappa: Vec<f64>,
}

pub fn assemble_hd<'m>(problem: &ProblemSpec, mesh: &'m SimplicialMesh) -> Result<HdDiscretization<'m>> {
    if problem.kind == ProblemKind::HodgeLaplacian {
        return Err(FeecError::Unsupported("assemble_hd on a Hodge Laplacian".into()));
    }
    problem.validate(mesh)?;
    let k = problem.k;
    let family = if k == 0 { Family::LagrangeP1 } else { Family::TrimmedP1 };
    let space = FormSpace::new(mesh, k, family, true)?;
    let next = FormSpace::new(mesh, k + 1, Family::TrimmedP1, true)?;
    let eps = problem.epsilon.cell_values(mesh);
    let kap = problem.kappa.cell_values(mesh);
    let a = assemble_stiffness(&space, &next, &eps)?.add(1.0, &assemble_mass(&space, &kap)?, 1.0);
    let b = assemble_load(&space, &problem.load);
    let free = space.free_dofs();
    let system = LinearSystem {
        matrix: a.submatrix(&free, &free),
        rhs: free.iter().map(|&i| b[i]).collect(),
        free: vec![free],
        full_sizes: vec![space.n_dofs()],
    };
    Ok(HdDiscretization { space, system, epsilon: eps, kappa: kap })
}

/// Discrete mixed Hodge Laplacian: σ in `V^{k-1}`, u in `V^k`.
#[derive(Debug, Clone)]
pub struct HodgeDiscretization<'m> {
    pub sigma_space: FormSpace<'m>,
    pub u_space: FormSpace<'m>,
    pub system: LinearSystem,
    /// Block-diagonal Riesz operators of `V^{k-1}` and `V^k` on the free DOFs.
    pub riesz: [CsrMatrix; 2],
}

/// Symmetric form `[[M, -Bᵀ], [-B, -K]] (σ, u) = (0, -b)` of
/// `(σ,τ) - (dτ,u) = 0`, `(dσ,v) + (du,dv) = (f,v)`, with `B = M_k D_{k-1}`.
pub fn assemble_hodge_laplacian<'m>(problem: &ProblemSpec, mesh: &'m SimplicialMesh) -> Result<HodgeDiscretization<'m>> {
    if problem.kind != ProblemKind::HodgeLaplacian {
        return Err(FeecError::Unsupported("not a Hodge Laplacian problem".into()));
    }
    problem.validate(mesh)?;
    let n = mesh.dim();
    let k = problem.k;
    let ones = vec![1.0; mesh.n_cells()];
    let vs = FormSpace::new(mesh, k - 1, Family::TrimmedP1, true)?;
    let vu = FormSpace::new(mesh, k, Family::TrimmedP1, true)?;
    let ms = assemble_mass(&vs, &ones)?;
    let mu = assemble_mass(&vu, &ones)?;
    let d = exterior_derivative(&vs)?.to_csr();
    let bmat = mu.matmul(&d);
    let kmat = if k < n {
        let next = FormSpace::new(mesh, k + 1, Family::TrimmedP1, true)?;
        assemble_stiffness(&vu, &next, &ones)?
    } else {
        CsrMatrix::zeros(vu.n_dofs(), vu.n_dofs())
    };
    let b = assemble_load(&vu, &problem.load);
    let fs = vs.free_dofs();
    let fu = vu.free_dofs();
    let m11 = ms.submatrix(&fs, &fs);
    let b21 = bmat.submatrix(&fu, &fs);
    let k22 = kmat.submatrix(&fu, &fu);
    let matrix = CsrMatrix::block2(&m11, &b21.transpose().scaled(-1.0), &b21.scaled(-1.0), &k22.scaled(-1.0));
    let mut rhs = vec![0.0; fs.len()];
    rhs.extend(fu.iter().map(|&i| -b[i]));
    let dsd = d.transpose().matmul(&mu.matmul(&d)).submatrix(&fs, &fs);
    let riesz = [m11.add(1.0, &dsd, 1.0), mu.submatrix(&fu, &fu).add(1.0, &k22, 1.0)];
    let system = LinearSystem {
        matrix,
        rhs,
        free: vec![fs, fu],
        full_sizes: vec![vs.n_dofs(), vu.n_dofs()],
    };
    Ok(HodgeDiscretization { sigma_space: vs, u_space: vu, system, riesz })
}
