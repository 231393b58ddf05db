//! Nodal auxiliary-space preconditioner for `ε D_kᵀ M D_k + κ M` on Whitney
//! edge (k = 1) and face (k = 2, n = 3) spaces.

use crate::assembly::{assemble_h1_stiffness, assemble_mass, nodal_embedding, HdDiscretization};
use crate::error::{FeecError, Result};
use crate::sparse::{CsrMatrix, SparseLu};
use crate::spaces::{exterior_derivative, Family, FormSpace};

use super::Preconditioner;

/// `B = S + T₁ A₁⁻¹ T₁ᵀ + T₂ A₂⁻¹ T₂ᵀ` with a Jacobi smoother `S`, the
/// "gradient" transfer `T₁` from the (k−1)-level auxiliary space and the
/// nodal embedding `T₂` of vector-valued P1 fields.
pub struct AuxiliarySpacePreconditioner {
    inv_diag: Vec<f64>,
    transfers: [CsrMatrix; 2],
    transfers_t: [CsrMatrix; 2],
    inner: [SparseLu; 2],
}

impl AuxiliarySpacePreconditioner {
    pub fn aux_sizes(&self) -> [usize; 2] {
        [self.inner[0].dim(), self.inner[1].dim()]
    }
}

fn restrict(m: &CsrMatrix, rows: &[usize], cols: &[usize]) -> CsrMatrix {
    m.submatrix(rows, cols)
}

pub fn build_hx_preconditioner(disc: &HdDiscretization) -> Result<AuxiliarySpacePreconditioner> {
    let space = &disc.space;
    let mesh = space.mesh();
    let n = mesh.dim();
    let k = space.k();
    if !(k == 1 || (n == 3 && k == 2)) {
        return Err(FeecError::Unsupported(format!("auxiliary-space preconditioner for k={k} in {n}D")));
    }
    let eps = &disc.epsilon;
    let kap = &disc.kappa;
    let free = space.free_dofs();

    // Level k-1: scalar P1 for edges, vector P1 lifted through D_1 for faces.
    let (t1_full, aux1) = if k == 1 {
        let scalar = FormSpace::new(mesh, 0, Family::LagrangeP1, true)?;
        (exterior_derivative(&scalar)?.to_csr(), scalar)
    } else {
        let edges = FormSpace::new(mesh, 1, Family::TrimmedP1, true)?;
        let vec1 = FormSpace::new(mesh, 1, Family::VectorLagrangeP1, true)?;
        let d1 = exterior_derivative(&edges)?.to_csr();
        (d1.matmul(&nodal_embedding(&vec1, &edges)?), vec1)
    };
    let free1 = aux1.free_dofs();
    let a1 = assemble_h1_stiffness(&aux1, kap)?.add(1.0, &assemble_mass(&aux1, kap)?, 1.0);
    let a1 = restrict(&a1, &free1, &free1);

    let vec_k = FormSpace::new(mesh, k, Family::VectorLagrangeP1, true)?;
    let t2_full = nodal_embedding(&vec_k, space)?;
    let free2 = vec_k.free_dofs();
    let a2 = assemble_h1_stiffness(&vec_k, eps)?.add(1.0, &assemble_mass(&vec_k, kap)?, 1.0);
    let a2 = restrict(&a2, &free2, &free2);

    let t1 = restrict(&t1_full, &free, &free1);
    let t2 = restrict(&t2_full, &free, &free2);
    let diag = disc.system.matrix.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(FeecError::Singular { dof: i });
    }
    Ok(AuxiliarySpacePreconditioner {
        inv_diag: diag.iter().map(|d| 1.0 / d).collect(),
        transfers_t: [t1.transpose(), t2.transpose()],
        transfers: [t1, t2],
        inner: [SparseLu::factor(&a1, 0.1)?, SparseLu::factor(&a2, 0.1)?],
    })
}

impl Preconditioner for AuxiliarySpacePreconditioner {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = r.iter().zip(&self.inv_diag).map(|(a, b)| a * b).collect();
        for i in 0..2 {
            let y = self.inner[i].solve(&self.transfers_t[i].mul_vec(r));
            let z = self.transfers[i].mul_vec(&y);
            out.iter_mut().zip(z).for_each(|(o, v)| *o += v);
        }
        out
    }
    fn name(&self) -> String {
        "hx".into()
    }
}
