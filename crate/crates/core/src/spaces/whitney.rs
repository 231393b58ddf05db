//! Local Whitney basis proxies. Local k-subsets are taken in lexicographic
//! order of the cell's ascending vertex list, which matches the global
//! orientation of every subsimplex.

use crate::geometry::{self, cross, Vec3};
use crate::mesh::SimplicialMesh;

#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub cell: usize,
    pub points: Vec<Vec3>,
    pub grads: Vec<Vec3>,
    pub volume: f64,
    /// Orientation of the ascending vertex order.
    pub sign: f64,
    pub diameter: f64,
}

impl CellGeometry {
    pub fn new(mesh: &SimplicialMesh, cell: usize) -> Self {
        let points = mesh.cell_points(cell);
        let (grads, signed) = geometry::barycentric_gradients(&points, mesh.dim());
        let diameter = geometry::diameter(&points);
        CellGeometry { cell, points, grads, volume: signed.abs(), sign: signed.signum(), diameter }
    }

    pub fn point(&self, bary: &[f64]) -> Vec3 {
        geometry::from_barycentric(&self.points, bary)
    }
}

fn comb(a: &Vec3, sa: f64, b: &Vec3, sb: f64) -> Vec3 {
    [sa * a[0] + sb * b[0], sa * a[1] + sb * b[1], sa * a[2] + sb * b[2]]
}

/// Proxies of the Whitney `k`-form basis at `bary`.
pub fn basis(k: usize, n: usize, g: &CellGeometry, bary: &[f64]) -> Vec<Vec3> {
    let gr = &g.grads;
    match (k, n) {
        (0, _) => bary[..=n].iter().map(|&l| [l, 0.0, 0.0]).collect(),
        (1, _) => {
            let mut out = Vec::with_capacity(6);
            for a in 0..=n {
                for b in a + 1..=n {
                    out.push(comb(&gr[b], bary[a], &gr[a], -bary[b]));
                }
            }
            out
        }
        (2, 3) => {
            let mut out = Vec::with_capacity(4);
            for a in 0..4 {
                for b in a + 1..4 {
                    for c in b + 1..4 {
                        let t1 = cross(&gr[b], &gr[c]);
                        let t2 = cross(&gr[c], &gr[a]);
                        let t3 = cross(&gr[a], &gr[b]);
                        let mut v = [0.0; 3];
                        for d in 0..3 {
                            v[d] = 2.0 * (bary[a] * t1[d] + bary[b] * t2[d] + bary[c] * t3[d]);
                        }
                        out.push(v);
                    }
                }
            }
            out
        }
        (k, n) if k == n => vec![[1.0 / g.volume, 0.0, 0.0]],
        _ => panic!("Whitney {k}-forms in {n}D"),
    }
}

/// Proxies of `d` of the Whitney `k`-form basis (constant on the cell).
pub fn derivative(k: usize, n: usize, g: &CellGeometry) -> Vec<Vec3> {
    let gr = &g.grads;
    match (k, n) {
        (0, _) => gr[..=n].to_vec(),
        (1, 2) => {
            let mut out = Vec::with_capacity(3);
            for a in 0..3 {
                for b in a + 1..3 {
                    out.push([2.0 * geometry::det2(&gr[a], &gr[b]), 0.0, 0.0]);
                }
            }
            out
        }
        (1, 3) => {
            let mut out = Vec::with_capacity(6);
            for a in 0..4 {
                for b in a + 1..4 {
                    out.push(geometry::scale(2.0, &cross(&gr[a], &gr[b])));
                }
            }
            out
        }
        (2, 3) => {
            let mut out = Vec::with_capacity(4);
            for a in 0..4 {
                for b in a + 1..4 {
                    for c in b + 1..4 {
                        out.push([6.0 * geometry::det3(&gr[a], &gr[b], &gr[c]), 0.0, 0.0]);
                    }
                }
            }
            out
        }
        (k, n) if k == n => vec![[0.0; 3]],
        _ => panic!("Whitney {k}-forms in {n}D"),
    }
}
