//! Conforming simplicial meshes in two and three dimensions.

mod generate;
pub mod io;
mod refine;

use std::collections::{HashMap, HashSet};

use crate::error::{FeecError, Result};
use crate::geometry::{self, Vec3};

pub use generate::{generate_structured, Domain};
pub use refine::RefinementMap;

/// Marker for unused slots in fixed-size index arrays.
pub const NONE: usize = usize::MAX;

/// Sorted vertex tuple padded with [`NONE`].
pub type SimplexKey = [usize; 4];

pub fn simplex_key(verts: &[usize]) -> SimplexKey {
    let mut k = [NONE; 4];
    k[..verts.len()].copy_from_slice(verts);
    k[..verts.len()].sort_unstable();
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Interior,
    GammaEssential,
    GammaNatural,
}

/// Which boundary faces carry the essential condition.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaSelector {
    WholeBoundary,
    None,
    /// Boundary faces lying in the plane `x[axis] == value`.
    Plane { axis: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceGeometry {
    pub face: usize,
    /// Outward on the boundary; from the lower to the higher cell id inside.
    pub normal: Vec3,
    pub area: f64,
    pub diameter: f64,
    /// Adjacent cells, lower id first; the second entry is [`NONE`] on the boundary.
    pub cells: [usize; 2],
}

/// Lexicographic list of the `d+1`-element subsets of `0..=n`.
pub fn local_subsets(n: usize, d: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, end: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..end {
            cur.push(i);
            rec(i + 1, end, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n + 1, d + 1, &mut Vec::new(), &mut out);
    out
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    dim: usize,
    vertices: Vec<Vec3>,
    /// `simplices[d]` flattened with stride `d + 1`, each tuple ascending.
    simplices: Vec<Vec<usize>>,
    index: Vec<HashMap<SimplexKey, usize>>,
    /// `cell_sub[d][c * binomial(n+1, d+1) + l]`: global id of local subset `l`.
    cell_sub: Vec<Vec<usize>>,
    local: Vec<Vec<Vec<usize>>>,
    face_cells: Vec<[usize; 2]>,
    boundary_tag: Vec<BoundaryTag>,
    in_gamma: Vec<Vec<bool>>,
    /// Cells in bisection order (stride n+1) with their bisection tag.
    ordered: Vec<usize>,
    tags: Vec<u8>,
    generation: Vec<u32>,
    orientation: Vec<i8>,
    volumes: Vec<f64>,
    vertex_cells: Vec<Vec<usize>>,
}

impl SimplicialMesh {
    /// Build a mesh from cells given in bisection order; every listed cell gets
    /// the initial tag `n` and generation 0. Faces listed in `essential` are
    /// tagged as Γ.
    pub fn from_cells(
        dim: usize,
        vertices: Vec<Vec3>,
        cells: &[Vec<usize>],
        essential: &HashSet<SimplexKey>,
    ) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(FeecError::Unsupported(format!("mesh dimension {dim}")));
        }
        let mut ordered = Vec::with_capacity(cells.len() * (dim + 1));
        for c in cells {
            if c.len() != dim + 1 {
                return Err(FeecError::InvalidInput(format!("cell with {} vertices", c.len())));
            }
            if c.iter().any(|&v| v >= vertices.len()) {
                return Err(FeecError::InvalidInput("cell references missing vertex".into()));
            }
            ordered.extend_from_slice(c);
        }
        let tags = vec![dim as u8; cells.len()];
        let generation = vec![0; cells.len()];
        Self::build(dim, vertices, ordered, tags, generation, essential)
    }

    fn build(
        dim: usize,
        vertices: Vec<Vec3>,
        ordered: Vec<usize>,
        tags: Vec<u8>,
        generation: Vec<u32>,
        essential: &HashSet<SimplexKey>,
    ) -> Result<Self> {
        let n = dim;
        let ncells = tags.len();
        let local: Vec<Vec<Vec<usize>>> = (0..=n).map(|d| local_subsets(n, d)).collect();
        let mut simplices: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
        let mut index: Vec<HashMap<SimplexKey, usize>> = vec![HashMap::new(); n + 1];
        let mut cell_sub: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
        simplices[0] = (0..vertices.len()).collect();
        let mut orientation = Vec::with_capacity(ncells);
        let mut volumes = Vec::with_capacity(ncells);
        let mut vertex_cells = vec![Vec::new(); vertices.len()];
        for c in 0..ncells {
            let mut sorted: Vec<usize> = ordered[c * (n + 1)..(c + 1) * (n + 1)].to_vec();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(FeecError::InvalidInput(format!("degenerate cell {c}")));
            }
            let pts: Vec<Vec3> = sorted.iter().map(|&v| vertices[v]).collect();
            let vol = geometry::simplex_measure(&pts, n);
            if vol == 0.0 {
                return Err(FeecError::InvalidInput(format!("zero-volume cell {c}")));
            }
            orientation.push(if vol > 0.0 { 1 } else { -1 });
            volumes.push(vol.abs());
            for &v in &sorted {
                vertex_cells[v].push(c);
            }
            for d in 0..=n {
                for sub in &local[d] {
                    let verts: Vec<usize> = sub.iter().map(|&l| sorted[l]).collect();
                    let id = if d == 0 {
                        verts[0]
                    } else {
                        let key = simplex_key(&verts);
                        let next = index[d].len();
                        let id = *index[d].entry(key).or_insert(next);
                        if id == next {
                            simplices[d].extend_from_slice(&verts);
                        }
                        id
                    };
                    cell_sub[d].push(id);
                }
            }
        }
        if vertex_cells.iter().any(|v| v.is_empty()) {
            return Err(FeecError::InvalidInput("mesh has vertices not used by any cell".into()));
        }
        let nfaces = index[n - 1].len();
        let mut face_cells = vec![[NONE, NONE]; nfaces];
        let per = binomial(n + 1, n);
        for c in 0..ncells {
            for l in 0..per {
                let f = cell_sub[n - 1][c * per + l];
                let slot = &mut face_cells[f];
                if slot[0] == NONE {
                    slot[0] = c;
                } else if slot[1] == NONE {
                    slot[1] = c;
                } else {
                    return Err(FeecError::InvalidInput(format!("face {f} has more than two cells")));
                }
            }
        }
        let mut mesh = SimplicialMesh {
            dim,
            vertices,
            simplices,
            index,
            cell_sub,
            local,
            face_cells,
            boundary_tag: Vec::new(),
            in_gamma: Vec::new(),
            ordered,
            tags,
            generation,
            orientation,
            volumes,
            vertex_cells,
        };
        mesh.apply_gamma(essential)?;
        Ok(mesh)
    }

    fn apply_gamma(&mut self, essential: &HashSet<SimplexKey>) -> Result<()> {
        let n = self.dim;
        let nfaces = self.n_simplices(n - 1);
        let mut tags = vec![BoundaryTag::Interior; nfaces];
        let mut in_gamma: Vec<Vec<bool>> = (0..=n).map(|d| vec![false; self.n_simplices(d)]).collect();
        let mut found = 0;
        for (f, tag) in tags.iter_mut().enumerate() {
            if self.face_cells[f][1] != NONE {
                continue;
            }
            let verts = self.simplex(n - 1, f);
            if essential.contains(&simplex_key(verts)) {
                *tag = BoundaryTag::GammaEssential;
                found += 1;
                for d in 0..n {
                    for sub in local_subsets(n - 1, d) {
                        let vs: Vec<usize> = sub.iter().map(|&l| verts[l]).collect();
                        let id = self.lookup(&vs).expect("sub-simplex of a face");
                        in_gamma[d][id] = true;
                    }
                }
            } else {
                *tag = BoundaryTag::GammaNatural;
            }
        }
        if found != essential.len() {
            return Err(FeecError::InvalidInput("essential face is not a boundary face".into()));
        }
        self.boundary_tag = tags;
        self.in_gamma = in_gamma;
        Ok(())
    }

    /// Retag the boundary according to `selector`.
    pub fn mark_gamma(mut self, selector: &GammaSelector) -> Result<Self> {
        let n = self.dim;
        let mut essential = HashSet::new();
        let tol = 1e-12;
        let mut straddles = 0;
        for f in self.boundary_faces() {
            let verts = self.simplex(n - 1, f);
            let take = match selector {
                GammaSelector::WholeBoundary => true,
                GammaSelector::None => false,
                GammaSelector::Plane { axis, value } => {
                    if *axis >= n {
                        return Err(FeecError::InvalidInput(format!("plane axis {axis} in {n}D")));
                    }
                    let offs: Vec<f64> = verts.iter().map(|&v| self.vertices[v][*axis] - value).collect();
                    let on = offs.iter().all(|o| o.abs() <= tol);
                    let below = offs.iter().any(|&o| o < -tol);
                    let above = offs.iter().any(|&o| o > tol);
                    if below && above {
                        straddles += 1;
                    }
                    on
                }
            };
            if take {
                essential.insert(simplex_key(verts));
            }
        }
        if let GammaSelector::Plane { axis, value } = selector {
            if essential.is_empty() && straddles > 0 {
                return Err(FeecError::SelectorSplitsFace(format!(
                    "plane x{axis}={value} cuts {straddles} boundary faces"
                )));
            }
        }
        self.apply_gamma(&essential)?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.tags.len()
    }

    pub fn n_simplices(&self, d: usize) -> usize {
        self.simplices[d].len() / (d + 1)
    }

    /// Sorted vertex tuple of simplex `i` of dimension `d`.
    pub fn simplex(&self, d: usize, i: usize) -> &[usize] {
        &self.simplices[d][i * (d + 1)..(i + 1) * (d + 1)]
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        self.simplex(self.dim, c)
    }

    /// Cell vertices in bisection order.
    pub fn cell_ordered(&self, c: usize) -> &[usize] {
        &self.ordered[c * (self.dim + 1)..(c + 1) * (self.dim + 1)]
    }

    pub fn cell_tag(&self, c: usize) -> u8 {
        self.tags[c]
    }

    pub fn generation(&self, c: usize) -> u32 {
        self.generation[c]
    }

    pub fn lookup(&self, verts: &[usize]) -> Option<usize> {
        let d = verts.len() - 1;
        if d == 0 {
            return (verts[0] < self.vertices.len()).then_some(verts[0]);
        }
        self.index.get(d)?.get(&simplex_key(verts)).copied()
    }

    /// Local subsets of `0..=n` of size `d+1`, in the order used by [`Self::cell_subsimplices`].
    pub fn local_subsets(&self, d: usize) -> &[Vec<usize>] {
        &self.local[d]
    }

    /// Global ids of the `d`-subsimplices of cell `c`.
    pub fn cell_subsimplices(&self, d: usize, c: usize) -> &[usize] {
        let per = binomial(self.dim + 1, d + 1);
        &self.cell_sub[d][c * per..(c + 1) * per]
    }

    pub fn cell_points(&self, c: usize) -> Vec<Vec3> {
        self.cell(c).iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn simplex_points(&self, d: usize, i: usize) -> Vec<Vec3> {
        self.simplex(d, i).iter().map(|&v| self.vertices[v]).collect()
    }

    /// Sign of the sorted vertex order relative to the coordinate orientation.
    pub fn orientation(&self, c: usize) -> i8 {
        self.orientation[c]
    }

    pub fn volume(&self, c: usize) -> f64 {
        self.volumes[c]
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    pub fn cell_diameter(&self, c: usize) -> f64 {
        geometry::diameter(&self.cell_points(c))
    }

    pub fn face_cells(&self, f: usize) -> [usize; 2] {
        self.face_cells[f]
    }

    pub fn boundary_tag(&self, f: usize) -> BoundaryTag {
        self.boundary_tag[f]
    }

    pub fn boundary_faces(&self) -> Vec<usize> {
        (0..self.face_cells.len()).filter(|&f| self.face_cells[f][1] == NONE).collect()
    }

    /// Whether simplex `i` of dimension `d` lies in the closure of Γ.
    pub fn in_gamma(&self, d: usize, i: usize) -> bool {
        d < self.dim && self.in_gamma[d][i]
    }

    pub fn gamma_faces(&self) -> Vec<usize> {
        (0..self.boundary_tag.len())
            .filter(|&f| self.boundary_tag[f] == BoundaryTag::GammaEssential)
            .collect()
    }

    pub fn essential_keys(&self) -> HashSet<SimplexKey> {
        self.gamma_faces()
            .into_iter()
            .map(|f| simplex_key(self.simplex(self.dim - 1, f)))
            .collect()
    }

    /// Cells containing vertex `v`, ascending.
    pub fn vertex_patch(&self, v: usize) -> Result<&[usize]> {
        self.vertex_cells
            .get(v)
            .map(|c| c.as_slice())
            .ok_or_else(|| FeecError::InvalidInput(format!("vertex {v} out of range")))
    }

    /// Geometry of `(n-1)`-face `f`.
    pub fn face_geometry(&self, f: usize) -> FaceGeometry {
        let n = self.dim;
        let verts = self.simplex(n - 1, f);
        let pts: Vec<Vec3> = verts.iter().map(|&v| self.vertices[v]).collect();
        let mut normal = if n == 2 {
            let t = geometry::sub(&pts[1], &pts[0]);
            [t[1], -t[0], 0.0]
        } else {
            geometry::cross(&geometry::sub(&pts[1], &pts[0]), &geometry::sub(&pts[2], &pts[0]))
        };
        let len = geometry::norm(&normal);
        normal = geometry::scale(1.0 / len, &normal);
        let cells = self.face_cells[f];
        let opposite = self
            .cell(cells[0])
            .iter()
            .copied()
            .find(|v| !verts.contains(v))
            .expect("cell has a vertex off the face");
        let away = geometry::sub(&pts[0], &self.vertices[opposite]);
        if geometry::dot(&away, &normal) < 0.0 {
            normal = geometry::scale(-1.0, &normal);
        }
        FaceGeometry {
            face: f,
            normal,
            area: geometry::simplex_measure(&pts, n),
            diameter: geometry::diameter(&pts),
            cells,
        }
    }

    /// Faces carrying jump terms: interior faces and boundary faces off Γ.
    pub fn skeleton(&self) -> Vec<FaceGeometry> {
        (0..self.face_cells.len())
            .filter(|&f| self.boundary_tag[f] != BoundaryTag::GammaEssential)
            .map(|f| self.face_geometry(f))
            .collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        (0..=self.dim)
            .map(|d| if d % 2 == 0 { 1 } else { -1 } * self.n_simplices(d) as i64)
            .sum()
    }

    /// Largest circumradius/inradius ratio over all cells.
    pub fn max_shape_ratio(&self) -> f64 {
        (0..self.n_cells())
            .map(|c| geometry::shape_ratio(&self.cell_points(c), self.dim))
            .fold(0.0, f64::max)
    }

    /// Every face has one or two cells and boundary faces close up; returns
    /// the number of boundary faces. Used to audit conformity.
    pub fn check_conformity(&self) -> Result<usize> {
        let n = self.dim;
        let mut bfaces = 0;
        for f in 0..self.face_cells.len() {
            if self.face_cells[f][0] == NONE {
                return Err(FeecError::InvalidInput(format!("orphan face {f}")));
            }
            if self.face_cells[f][1] == NONE {
                bfaces += 1;
            }
        }
        // the boundary of the boundary is empty: every (n-2)-simplex of a
        // boundary face is shared by an even number of boundary faces
        let mut count: HashMap<SimplexKey, usize> = HashMap::new();
        for f in self.boundary_faces() {
            let verts = self.simplex(n - 1, f);
            for skip in 0..n {
                let sub: Vec<usize> = (0..n).filter(|&i| i != skip).map(|i| verts[i]).collect();
                *count.entry(simplex_key(&sub)).or_default() += 1;
            }
        }
        if count.values().any(|&c| c % 2 == 1) {
            return Err(FeecError::InvalidInput("boundary is not closed (hanging node)".into()));
        }
        Ok(bfaces)
    }
}
