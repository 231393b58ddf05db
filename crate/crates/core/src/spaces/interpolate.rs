use rayon::prelude::*;

use super::{DiscreteField, Family, FormSpace};
use crate::error::Result;
use crate::geometry::{self, cross, dot, sub, Vec3};
use crate::mesh::{SimplicialMesh, NONE};
use crate::quadrature::simplex_rule;

const MEAN_DEGREE: usize = 5;

/// `∫_Δ tr c` for a constant proxy `c` on the simplex with vertices `pts`.
fn constant_dof(k: usize, n: usize, pts: &[Vec3], c: &Vec3) -> f64 {
    match k {
        0 => c[0],
        1 => dot(c, &sub(&pts[1], &pts[0])),
        2 if n == 3 => 0.5 * dot(c, &cross(&sub(&pts[1], &pts[0]), &sub(&pts[2], &pts[0]))),
        _ => c[0] * geometry::simplex_measure(pts, n).abs(),
    }
}

fn simplex_mean<F: Fn(&Vec3) -> Vec3>(pts: &[Vec3], v: &F) -> Vec3 {
    let rule = simplex_rule(pts.len() - 1, MEAN_DEGREE);
    let mut m = [0.0; 3];
    for (b, w) in rule.points.iter().zip(&rule.weights) {
        let x = geometry::from_barycentric(pts, &b[..pts.len()]);
        let val = v(&x);
        for d in 0..3 {
            m[d] += w * val[d];
        }
    }
    m
}

/// Canonical interpolant: every DOF is the integral `∫_Δ tr v` evaluated by a
/// rule of the given degree (nodal values / cell means for Lagrange and P0).
pub fn canonical_interpolate<'m, F>(space: &FormSpace<'m>, v: F, degree: usize) -> DiscreteField<'m>
where
    F: Fn(&Vec3) -> Vec3 + Sync,
{
    let mesh = space.mesh();
    let n = mesh.dim();
    let k = space.k();
    let coeffs: Vec<f64> = match space.family() {
        Family::TrimmedP1 | Family::LagrangeP1 => (0..space.n_dofs())
            .into_par_iter()
            .map(|i| {
                let pts = mesh.simplex_points(k, i);
                let rule = simplex_rule(k, degree);
                let mut s = 0.0;
                for (b, w) in rule.points.iter().zip(&rule.weights) {
                    let x = geometry::from_barycentric(&pts, &b[..=k]);
                    s += w * constant_dof(k, n, &pts, &v(&x));
                }
                s
            })
            .collect(),
        Family::PiecewiseP0 => (0..mesh.n_cells()).into_par_iter().map(|c| simplex_mean(&mesh.cell_points(c), &v)[0]).collect(),
        Family::VectorLagrangeP1 => {
            let nc = space.n_components();
            (0..space.n_dofs()).map(|i| v(&mesh.vertices()[i / nc])[i % nc]).collect()
        }
    };
    DiscreteField { space: space.clone(), coeffs }
}

/// For each `k`-simplex the averaging region: the smallest-id adjacent cell,
/// or with `gamma` the smallest-id Γ face when the simplex lies in Γ.
/// Returns `(is_face, id)` pairs.
fn averaging_regions(mesh: &SimplicialMesh, k: usize, gamma: bool) -> Vec<(bool, usize)> {
    let n = mesh.dim();
    let mut owner = vec![(false, NONE); mesh.n_simplices(k)];
    if gamma && k < n {
        for f in mesh.gamma_faces() {
            let verts = mesh.simplex(n - 1, f);
            for sub in crate::mesh::local_subsets(n - 1, k) {
                let vs: Vec<usize> = sub.iter().map(|&l| verts[l]).collect();
                let id = mesh.lookup(&vs).expect("subsimplex of a face");
                if owner[id].1 == NONE {
                    owner[id] = (true, f);
                }
            }
        }
    }
    for c in 0..mesh.n_cells() {
        for &s in mesh.cell_subsimplices(k, c) {
            if owner[s].1 == NONE {
                owner[s] = (false, c);
            }
        }
    }
    owner
}

struct Means {
    cells: Vec<Vec3>,
    faces: std::collections::HashMap<usize, Vec3>,
}

fn region_means<F>(mesh: &SimplicialMesh, regions: &[(bool, usize)], v: &F) -> Means
where
    F: Fn(&Vec3) -> Vec3 + Sync,
{
    let n = mesh.dim();
    let cells: Vec<Vec3> = (0..mesh.n_cells()).into_par_iter().map(|c| simplex_mean(&mesh.cell_points(c), v)).collect();
    let mut face_ids: Vec<usize> = regions.iter().filter(|r| r.0).map(|r| r.1).collect();
    face_ids.sort_unstable();
    face_ids.dedup();
    let faces = face_ids
        .into_iter()
        .map(|f| (f, simplex_mean(&mesh.simplex_points(n - 1, f), v)))
        .collect();
    Means { cells, faces }
}

/// Quasi-interpolation `Π_h^k`: DOF `i` is `∫_{Δ_i} tr Q_{σ_i} v` with
/// `Q_σ` the mean over the averaging region `σ_i`.
pub fn quasi_interpolate_pih<'m, F>(mesh: &'m SimplicialMesh, k: usize, v: F, gamma: bool) -> Result<DiscreteField<'m>>
where
    F: Fn(&Vec3) -> Vec3 + Sync,
{
    let space = FormSpace::new(mesh, k, Family::TrimmedP1, gamma)?;
    let n = mesh.dim();
    let regions = averaging_regions(mesh, k, gamma);
    let means = region_means(mesh, &regions, &v);
    let coeffs = regions
        .iter()
        .enumerate()
        .map(|(i, &(is_face, id))| {
            let c = if is_face { means.faces[&id] } else { means.cells[id] };
            constant_dof(k, n, &mesh.simplex_points(k, i), &c)
        })
        .collect();
    DiscreteField::new(space, coeffs)
}

/// Coefficient-wise Clément interpolation into continuous piecewise linear
/// proxies: every component at vertex `z` is the mean over the averaging
/// region of `z`, so at `k = 0` this agrees with [`quasi_interpolate_pih`].
pub fn clement_interpolate<'m, F>(mesh: &'m SimplicialMesh, k: usize, v: F, gamma: bool) -> Result<DiscreteField<'m>>
where
    F: Fn(&Vec3) -> Vec3 + Sync,
{
    let space = FormSpace::new(mesh, k, Family::VectorLagrangeP1, gamma)?;
    let nc = space.n_components();
    let regions = averaging_regions(mesh, 0, gamma);
    let means = region_means(mesh, &regions, &v);
    let mut coeffs = vec![0.0; space.n_dofs()];
    for (z, &(is_face, id)) in regions.iter().enumerate() {
        let c = if is_face { means.faces[&id] } else { means.cells[id] };
        coeffs[z * nc..(z + 1) * nc].copy_from_slice(&c[..nc]);
    }
    DiscreteField::new(space, coeffs)
}
