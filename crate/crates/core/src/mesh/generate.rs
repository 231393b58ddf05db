use std::collections::HashSet;

use super::SimplicialMesh;
use crate::error::{FeecError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// [0,1]^2
    UnitSquare,
    /// [0,1]^3
    UnitCube,
    /// [-1,1]^2 without the quadrant x > 0, y < 0
    LShape,
    /// [-1,1]^3 without the octant x, y, z > 0
    Fichera,
}

impl Domain {
    pub fn dim(self) -> usize {
        match self {
            Domain::UnitSquare | Domain::LShape => 2,
            Domain::UnitCube | Domain::Fichera => 3,
        }
    }

    pub fn parse(s: &str) -> Result<Domain> {
        match s {
            "unit-square" | "square" => Ok(Domain::UnitSquare),
            "unit-cube" | "cube" => Ok(Domain::UnitCube),
            "l-shape" | "lshape" => Ok(Domain::LShape),
            "fichera" => Ok(Domain::Fichera),
            _ => Err(FeecError::Unsupported(format!("domain {s}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Domain::UnitSquare => "unit-square",
            Domain::UnitCube => "unit-cube",
            Domain::LShape => "l-shape",
            Domain::Fichera => "fichera",
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 2 {
        vec![vec![0, 1], vec![1, 0]]
    } else {
        vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ]
    }
}

/// Kuhn triangulation of the structured grid with `cells_per_axis` boxes of
/// side `1/per_unit` starting at `origin`, keeping boxes for which `keep` is true.
fn kuhn_grid(
    dim: usize,
    origin: f64,
    per_unit: usize,
    cells_per_axis: usize,
    keep: impl Fn(&[usize]) -> bool,
) -> Result<SimplicialMesh> {
    let np = cells_per_axis + 1;
    let grid_id = |ix: &[usize]| -> usize {
        let mut id = 0;
        for d in (0..dim).rev() {
            id = id * np + ix[d];
        }
        id
    };
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let boxes = cells_per_axis.pow(dim as u32);
    let perms = permutations(dim);
    for b in 0..boxes {
        let mut ix = vec![0; dim];
        let mut r = b;
        for v in ix.iter_mut() {
            *v = r % cells_per_axis;
            r /= cells_per_axis;
        }
        if !keep(&ix) {
            continue;
        }
        for p in &perms {
            let mut cur = ix.clone();
            let mut cell = vec![grid_id(&cur)];
            for &axis in p {
                cur[axis] += 1;
                cell.push(grid_id(&cur));
            }
            cells.push(cell);
        }
    }
    // compact to used grid points, numbered in grid order
    let total = np.pow(dim as u32);
    let mut used = vec![false; total];
    for c in &cells {
        for &v in c {
            used[v] = true;
        }
    }
    let mut new_id = vec![usize::MAX; total];
    let mut vertices = Vec::new();
    for g in 0..total {
        if used[g] {
            new_id[g] = vertices.len();
            let mut r = g;
            let mut x = [0.0; 3];
            for xd in x.iter_mut().take(dim) {
                *xd = origin + (r % np) as f64 / per_unit as f64;
                r /= np;
            }
            vertices.push(x);
        }
    }
    for c in cells.iter_mut() {
        for v in c.iter_mut() {
            *v = new_id[*v];
        }
    }
    SimplicialMesh::from_cells(dim, vertices, &cells, &HashSet::new())
}

/// Structured Kuhn mesh of `domain`. For the unit square and cube `m` is the
/// number of subdivisions per edge; for the L-shape and Fichera domains it is
/// the number of subdivisions per unit length.
pub fn generate_structured(domain: Domain, m: usize) -> Result<SimplicialMesh> {
    if m == 0 {
        return Err(FeecError::InvalidInput("m must be at least 1".into()));
    }
    match domain {
        Domain::UnitSquare => kuhn_grid(2, 0.0, m, m, |_| true),
        Domain::UnitCube => kuhn_grid(3, 0.0, m, m, |_| true),
        Domain::LShape => kuhn_grid(2, -1.0, m, 2 * m, |ix| !(ix[0] >= m && ix[1] < m)),
        Domain::Fichera => kuhn_grid(3, -1.0, m, 2 * m, |ix| {
            !(ix[0] >= m && ix[1] >= m && ix[2] >= m)
        }),
    }
}
