//! Tagged (Maubach) bisection with conformity closure. In two dimensions this
//! is newest-vertex bisection.

use std::collections::{HashMap, HashSet};

use super::{simplex_key, SimplexKey, SimplicialMesh};
use crate::error::Result;

/// Maps every cell of a refined mesh to the cell of the coarse mesh it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinementMap {
    pub parent: Vec<usize>,
}

impl RefinementMap {
    /// Compose with a later refinement: `self` maps mid → coarse, `next` fine → mid.
    pub fn then(&self, next: &RefinementMap) -> RefinementMap {
        RefinementMap { parent: next.parent.iter().map(|&p| self.parent[p]).collect() }
    }

    pub fn identity(n: usize) -> RefinementMap {
        RefinementMap { parent: (0..n).collect() }
    }
}

struct Work {
    dim: usize,
    vertices: Vec<[f64; 3]>,
    midpoints: HashMap<(usize, usize), usize>,
    essential: HashSet<SimplexKey>,
}

impl Work {
    fn midpoint(&mut self, a: usize, b: usize) -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&z) = self.midpoints.get(&key) {
            return z;
        }
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        let z = self.vertices.len();
        self.vertices.push([
            0.5 * (pa[0] + pb[0]),
            0.5 * (pa[1] + pb[1]),
            0.5 * (pa[2] + pb[2]),
        ]);
        self.midpoints.insert(key, z);
        z
    }

    /// Split `cell` (bisection order) with tag `t` into two children.
    fn split(&mut self, cell: &[usize], t: usize) -> ([Vec<usize>; 2], u8) {
        let n = self.dim;
        let (a, b) = (cell[0], cell[t]);
        let z = self.midpoint(a, b);
        // essential faces through the refinement edge split in two
        for skip in 0..=n {
            if skip == 0 || skip == t {
                continue;
            }
            let face: Vec<usize> = (0..=n).filter(|&i| i != skip).map(|i| cell[i]).collect();
            let key = simplex_key(&face);
            if self.essential.remove(&key) {
                for old in [a, b] {
                    let child: Vec<usize> = face.iter().map(|&v| if v == old { z } else { v }).collect();
                    self.essential.insert(simplex_key(&child));
                }
            }
        }
        let mut c1 = Vec::with_capacity(n + 1);
        c1.extend_from_slice(&cell[..t]);
        c1.push(z);
        c1.extend_from_slice(&cell[t + 1..]);
        let mut c2 = Vec::with_capacity(n + 1);
        c2.extend_from_slice(&cell[1..=t]);
        c2.push(z);
        c2.extend_from_slice(&cell[t + 1..]);
        let new_tag = if t > 1 { t - 1 } else { n };
        ([c1, c2], new_tag as u8)
    }

    fn has_split_edge(&self, cell: &[usize]) -> bool {
        for i in 0..cell.len() {
            for j in i + 1..cell.len() {
                let key = (cell[i].min(cell[j]), cell[i].max(cell[j]));
                if self.midpoints.contains_key(&key) {
                    return true;
                }
            }
        }
        false
    }
}

impl SimplicialMesh {
    /// Bisect every marked cell at least once and close the result to a
    /// conforming mesh. Returns the refined mesh and the child → parent map.
    pub fn bisect(&self, marked: &[usize]) -> Result<(SimplicialMesh, RefinementMap)> {
        let n = self.dim();
        let nc = self.n_cells();
        let mut work = Work {
            dim: n,
            vertices: self.vertices().to_vec(),
            midpoints: HashMap::new(),
            essential: self.essential_keys(),
        };
        let mut cells: Vec<Vec<usize>> = (0..nc).map(|c| self.cell_ordered(c).to_vec()).collect();
        let mut tags: Vec<u8> = (0..nc).map(|c| self.cell_tag(c)).collect();
        let mut gens: Vec<u32> = (0..nc).map(|c| self.generation(c)).collect();
        let mut origin: Vec<usize> = (0..nc).collect();
        let mut refine = vec![false; nc];
        for &m in marked {
            if m < nc {
                refine[m] = true;
            } else {
                return Err(crate::error::FeecError::InvalidInput(format!("marked cell {m} out of range")));
            }
        }
        while refine.iter().any(|&r| r) {
            let mut nc2 = Vec::with_capacity(cells.len() + 16);
            let mut nt = Vec::with_capacity(cells.len() + 16);
            let mut ng = Vec::with_capacity(cells.len() + 16);
            let mut no = Vec::with_capacity(cells.len() + 16);
            for (i, cell) in cells.iter().enumerate() {
                if refine[i] {
                    let (children, t) = work.split(cell, tags[i] as usize);
                    for ch in children {
                        nc2.push(ch);
                        nt.push(t);
                        ng.push(gens[i] + 1);
                        no.push(origin[i]);
                    }
                } else {
                    nc2.push(cell.clone());
                    nt.push(tags[i]);
                    ng.push(gens[i]);
                    no.push(origin[i]);
                }
            }
            cells = nc2;
            tags = nt;
            gens = ng;
            origin = no;
            refine = cells.iter().map(|c| work.has_split_edge(c)).collect();
        }
        let ordered: Vec<usize> = cells.into_iter().flatten().collect();
        let mesh = SimplicialMesh::build(n, work.vertices, ordered, tags, gens, &work.essential)?;
        Ok((mesh, RefinementMap { parent: origin }))
    }

    /// Bisect every cell `n` times, halving the mesh size.
    pub fn refine_uniform(&self) -> Result<(SimplicialMesh, RefinementMap)> {
        let mut mesh = self.clone();
        let mut map = RefinementMap::identity(self.n_cells());
        for _ in 0..self.dim() {
            let all: Vec<usize> = (0..mesh.n_cells()).collect();
            let (m, r) = mesh.bisect(&all)?;
            map = map.then(&r);
            mesh = m;
        }
        Ok((mesh, map))
    }
}
