//! Lowest-order discrete de Rham complex on a [`SimplicialMesh`].

mod derivative;
mod interpolate;
pub mod whitney;

use std::fmt::Write as _;

use crate::error::{FeecError, Result};
use crate::forms::n_components;
use crate::geometry::Vec3;
use crate::mesh::{binomial, SimplicialMesh};

pub use derivative::{exterior_derivative, IncidenceMatrix};
pub use interpolate::{canonical_interpolate, clement_interpolate, quasi_interpolate_pih};
pub use whitney::CellGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Whitney forms, one DOF `∫_Δ tr v` per k-simplex.
    TrimmedP1,
    /// Continuous piecewise linears (k = 0).
    LagrangeP1,
    /// Piecewise constants (k = n), one value per cell.
    PiecewiseP0,
    /// `C(n,k)` continuous piecewise linear proxy components.
    VectorLagrangeP1,
}

/// What a degree of freedom is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofEntity {
    Simplex { dim: usize, id: usize },
    VertexComponent { vertex: usize, component: usize },
    Cell(usize),
}

#[derive(Debug, Clone)]
pub struct FormSpace<'m> {
    mesh: &'m SimplicialMesh,
    k: usize,
    family: Family,
    gamma: bool,
    n_dofs: usize,
    constrained: Vec<bool>,
}

impl<'m> FormSpace<'m> {
    /// Build `V_h^k` of the given family; with `gamma` the DOFs carried by
    /// simplices in the closure of Γ are constrained.
    pub fn new(mesh: &'m SimplicialMesh, k: usize, family: Family, gamma: bool) -> Result<Self> {
        let n = mesh.dim();
        let ok = match family {
            Family::TrimmedP1 | Family::VectorLagrangeP1 => k <= n,
            Family::LagrangeP1 => k == 0,
            Family::PiecewiseP0 => k == n,
        };
        if !ok {
            return Err(FeecError::Unsupported(format!("{family:?} with k={k} in {n}D")));
        }
        let (n_dofs, constrained) = match family {
            Family::TrimmedP1 | Family::LagrangeP1 => {
                let m = mesh.n_simplices(k);
                (m, (0..m).map(|i| gamma && mesh.in_gamma(k, i)).collect())
            }
            Family::PiecewiseP0 => (mesh.n_cells(), vec![false; mesh.n_cells()]),
            Family::VectorLagrangeP1 => {
                let nc = binomial(n, k);
                let m = mesh.n_vertices() * nc;
                (m, (0..m).map(|i| gamma && mesh.in_gamma(0, i / nc)).collect())
            }
        };
        Ok(FormSpace { mesh, k, family, gamma, n_dofs, constrained })
    }

    pub fn mesh(&self) -> &'m SimplicialMesh {
        self.mesh
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn has_gamma(&self) -> bool {
        self.gamma
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn is_constrained(&self, i: usize) -> bool {
        self.constrained[i]
    }

    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }

    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.n_dofs).filter(|&i| !self.constrained[i]).collect()
    }

    /// Number of scalar components of the proxy of a field in this space.
    pub fn n_components(&self) -> usize {
        match self.family {
            Family::VectorLagrangeP1 => binomial(self.mesh.dim(), self.k),
            _ => n_components(self.k, self.mesh.dim()),
        }
    }

    pub fn dof_entity(&self, i: usize) -> DofEntity {
        match self.family {
            Family::TrimmedP1 | Family::LagrangeP1 => DofEntity::Simplex { dim: self.k, id: i },
            Family::PiecewiseP0 => DofEntity::Cell(i),
            Family::VectorLagrangeP1 => {
                let nc = self.n_components();
                DofEntity::VertexComponent { vertex: i / nc, component: i % nc }
            }
        }
    }

    /// Global DOFs of cell `c` in the order of [`Self::local_basis`].
    pub fn local_dofs(&self, c: usize) -> Vec<usize> {
        match self.family {
            Family::TrimmedP1 | Family::LagrangeP1 => self.mesh.cell_subsimplices(self.k, c).to_vec(),
            Family::PiecewiseP0 => vec![c],
            Family::VectorLagrangeP1 => {
                let nc = self.n_components();
                let mut out = Vec::with_capacity(nc * (self.mesh.dim() + 1));
                for &v in self.mesh.cell(c) {
                    for comp in 0..nc {
                        out.push(v * nc + comp);
                    }
                }
                out
            }
        }
    }

    /// Proxies of the local basis functions at barycentric point `bary`.
    pub fn local_basis(&self, g: &CellGeometry, bary: &[f64]) -> Vec<Vec3> {
        let n = self.mesh.dim();
        match self.family {
            Family::TrimmedP1 | Family::LagrangeP1 => whitney::basis(self.k, n, g, bary),
            Family::PiecewiseP0 => vec![[1.0, 0.0, 0.0]],
            Family::VectorLagrangeP1 => {
                let nc = self.n_components();
                let mut out = Vec::with_capacity(nc * (n + 1));
                for &l in bary.iter().take(n + 1) {
                    for comp in 0..nc {
                        let mut v = [0.0; 3];
                        v[comp] = l;
                        out.push(v);
                    }
                }
                out
            }
        }
    }

    /// Proxies of `d` of the local basis (constant on the cell).
    pub fn local_derivative(&self, g: &CellGeometry) -> Result<Vec<Vec3>> {
        let n = self.mesh.dim();
        match self.family {
            Family::TrimmedP1 | Family::LagrangeP1 => Ok(whitney::derivative(self.k, n, g)),
            Family::PiecewiseP0 => Ok(vec![[0.0; 3]]),
            Family::VectorLagrangeP1 => Err(FeecError::Unsupported("derivative of VectorLagrangeP1".into())),
        }
    }
}

/// Coefficient vector over a [`FormSpace`].
#[derive(Debug, Clone)]
pub struct DiscreteField<'m> {
    pub space: FormSpace<'m>,
    pub coeffs: Vec<f64>,
}

impl<'m> DiscreteField<'m> {
    pub fn new(space: FormSpace<'m>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return Err(FeecError::DimensionMismatch(format!(
                "{} coefficients for {} DOFs",
                coeffs.len(),
                space.n_dofs()
            )));
        }
        Ok(DiscreteField { space, coeffs })
    }

    pub fn zeros(space: FormSpace<'m>) -> Self {
        let n = space.n_dofs();
        DiscreteField { space, coeffs: vec![0.0; n] }
    }

    pub fn mesh(&self) -> &'m SimplicialMesh {
        self.space.mesh()
    }

    fn check_point(&self, cell: usize, bary: &[f64]) -> Result<()> {
        let n = self.mesh().dim();
        if cell >= self.mesh().n_cells() {
            return Err(FeecError::InvalidInput(format!("cell {cell} out of range")));
        }
        if bary.len() != n + 1 {
            return Err(FeecError::DimensionMismatch(format!("{} barycentric coordinates", bary.len())));
        }
        for &b in bary {
            if b < -1e-12 {
                return Err(FeecError::PointOutsideCell { cell, coord: b });
            }
        }
        Ok(())
    }

    /// Proxy value at a barycentric point of `cell`.
    pub fn evaluate_proxy(&self, cell: usize, bary: &[f64]) -> Result<Vec3> {
        self.check_point(cell, bary)?;
        let g = CellGeometry::new(self.mesh(), cell);
        Ok(self.eval_with(&g, bary))
    }

    /// Proxy value using precomputed cell geometry (no bounds checks).
    pub fn eval_with(&self, g: &CellGeometry, bary: &[f64]) -> Vec3 {
        let dofs = self.space.local_dofs(g.cell);
        let basis = self.space.local_basis(g, bary);
        let mut v = [0.0; 3];
        for (d, b) in dofs.iter().zip(&basis) {
            let c = self.coeffs[*d];
            v[0] += c * b[0];
            v[1] += c * b[1];
            v[2] += c * b[2];
        }
        v
    }

    /// Proxy of `d` of the field on `cell` (constant for Whitney forms).
    pub fn derivative_with(&self, g: &CellGeometry) -> Result<Vec3> {
        let dofs = self.space.local_dofs(g.cell);
        let basis = self.space.local_derivative(g)?;
        let mut v = [0.0; 3];
        for (d, b) in dofs.iter().zip(&basis) {
            let c = self.coeffs[*d];
            v[0] += c * b[0];
            v[1] += c * b[1];
            v[2] += c * b[2];
        }
        Ok(v)
    }

    /// `dof-index value` lines.
    pub fn to_ascii(&self) -> String {
        let mut s = String::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            writeln!(s, "{i} {c:?}").unwrap();
        }
        s
    }
}
