//! A posteriori estimators: explicit residual estimators (standard and
//! robustly weighted), implicit local-patch estimators and data oscillation.
//!
//! Every residual is expressed through functionals of two shapes, one per
//! piece of a regular decomposition of the test function:
//!
//! * type A, `⟨ℓ, ψ⟩ = (g, dψ)` with a `j`-form `g`, tested with `(j-1)`-forms;
//!   element residual `δg`, face jump `⟦tr⋆ g⟧`;
//! * type B, `⟨ℓ, φ⟩ = (g, φ) - (q, dφ)` with a `j`-form `g` and a `(j+1)`-form
//!   `q`, tested with `j`-forms; element residual `g - δq`, face jump `⟦tr⋆ q⟧`.

mod explicit;
mod implicit;

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{FeecError, Result};
use crate::forms::trace_quantity;
use crate::geometry::{dot, Vec3};
use crate::mesh::{SimplicialMesh, NONE};
use crate::quadrature::simplex_rule;
use crate::spaces::CellGeometry;

pub use explicit::{hd_residual_estimator, hodge_residual_estimator};
pub use implicit::{local_implicit_estimator, ImplicitEstimate, PatchSpace, SolutionRef};

/// Quadrature degree for element and face residual norms.
pub const RESIDUAL_DEGREE: usize = 9;

/// Pointwise evaluation on a cell: `(cell, geometry, barycentric, x)`.
pub type CellFn<'a> = Box<dyn Fn(usize, &CellGeometry, &[f64], &Vec3) -> Vec3 + Sync + 'a>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightMode {
    Standard,
    /// Weights for constant `ε`, `κ` that make the estimate uniform in both.
    Robust { epsilon: f64, kappa: f64 },
}

/// Weights of one residual group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weighting {
    /// `h_T` on elements, `h_S^{1/2}` on faces.
    Standard,
    /// Gradient-part group: `κ^{-1/2} h_T`, `κ^{-1/2} h_S^{1/2}`.
    RobustGradient { kappa: f64 },
    /// `h̄ = min(ε^{-1/2} h, κ^{-1/2})` on elements, `ε^{-1/4} h̄_S^{1/2}` on faces.
    RobustRegular { epsilon: f64, kappa: f64 },
    /// Plain L² norm, no faces.
    L2,
}

impl Weighting {
    pub fn volume(&self, h: f64) -> f64 {
        match *self {
            Weighting::Standard => h,
            Weighting::RobustGradient { kappa } => h / kappa.sqrt(),
            Weighting::RobustRegular { epsilon, kappa } => hbar(h, epsilon, kappa),
            Weighting::L2 => 1.0,
        }
    }

    pub fn face(&self, h: f64) -> f64 {
        match *self {
            Weighting::Standard => h.sqrt(),
            Weighting::RobustGradient { kappa } => (h / kappa).sqrt(),
            Weighting::RobustRegular { epsilon, kappa } => epsilon.powf(-0.25) * hbar(h, epsilon, kappa).sqrt(),
            Weighting::L2 => 0.0,
        }
    }
}

/// `min(ε^{-1/2} h, κ^{-1/2})`.
pub fn hbar(h: f64, epsilon: f64, kappa: f64) -> f64 {
    (h / epsilon.sqrt()).min(1.0 / kappa.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalKind {
    A,
    B,
}

/// One residual group, see the module documentation.
pub struct Functional<'a> {
    pub kind: FunctionalKind,
    /// Degree of `g`.
    pub degree: usize,
    pub g: CellFn<'a>,
    /// Elementwise `δg` (type A only).
    pub delta_g: Option<CellFn<'a>>,
    /// The flux `q` (type B only); its elementwise coderivative must vanish.
    pub q: Option<CellFn<'a>>,
    pub weighting: Weighting,
}

impl Functional<'_> {
    /// Degree of the test forms.
    pub fn test_degree(&self) -> usize {
        match self.kind {
            FunctionalKind::A => self.degree - 1,
            FunctionalKind::B => self.degree,
        }
    }

    fn volume_residual(&self, c: usize, g: &CellGeometry, b: &[f64], x: &Vec3) -> Vec3 {
        match self.kind {
            FunctionalKind::A => self.delta_g.as_ref().map_or([0.0; 3], |d| d(c, g, b, x)),
            FunctionalKind::B => (self.g)(c, g, b, x),
        }
    }

    fn trace(&self, n: usize, c: usize, g: &CellGeometry, b: &[f64], x: &Vec3, normal: &Vec3) -> Option<Vec3> {
        match self.kind {
            FunctionalKind::A => Some(trace_quantity(self.degree, n, &(self.g)(c, g, b, x), normal)),
            FunctionalKind::B => self.q.as_ref().map(|q| trace_quantity(self.degree + 1, n, &q(c, g, b, x), normal)),
        }
    }
}

/// Per-cell indicators split by residual group.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    /// `(volume, jump)` norms per group and cell; the jump part of a cell is
    /// its share of the face terms (½ per interior face, all of a boundary face).
    pub groups: Vec<(Vec<f64>, Vec<f64>)>,
    /// Plain L² residual per cell (mixed problems with `k = n`).
    pub l2: Option<Vec<f64>>,
    pub eta_cells: Vec<f64>,
    pub osc_cells: Vec<f64>,
    pub eta: f64,
    pub osc: f64,
    pub mode: WeightMode,
    /// Hodge-Laplacian layout (four groups and the L² column in CSV).
    pub hodge: bool,
}

impl EstimatorReport {
    fn assemble(groups: Vec<(Vec<f64>, Vec<f64>)>, l2: Option<Vec<f64>>, osc_sq: Vec<f64>, mode: WeightMode, hodge: bool) -> Self {
        let nc = osc_sq.len();
        let mut eta_sq = vec![0.0; nc];
        for (v, j) in &groups {
            for c in 0..nc {
                eta_sq[c] += v[c] * v[c] + j[c] * j[c];
            }
        }
        if let Some(l) = &l2 {
            for c in 0..nc {
                eta_sq[c] += l[c] * l[c];
            }
        }
        let eta = eta_sq.iter().sum::<f64>().sqrt();
        let osc = osc_sq.iter().sum::<f64>().sqrt();
        EstimatorReport {
            groups,
            l2,
            eta_cells: eta_sq.iter().map(|v| v.sqrt()).collect(),
            osc_cells: osc_sq.iter().map(|v| v.sqrt()).collect(),
            eta,
            osc,
            mode,
            hodge,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.eta_cells.len()
    }

    /// Marking indicators `(η_T² + osc_T²)^{1/2}`.
    pub fn indicators(&self) -> Vec<f64> {
        self.eta_cells.iter().zip(&self.osc_cells).map(|(e, o)| (e * e + o * o).sqrt()).collect()
    }

    pub fn group_total(&self, g: usize) -> f64 {
        let (v, j) = &self.groups[g];
        v.iter().chain(j.iter()).map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from("cell_id,eta_total,vol1,jump1,vol2,jump2,osc");
        if self.hodge {
            h.push_str(",vol3,jump3,vol4,jump4,l2");
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        let ng = if self.hodge { 4 } else { 2 };
        let get = |g: usize, c: usize| self.groups.get(g).map_or((0.0, 0.0), |(v, j)| (v[c], j[c]));
        for c in 0..self.n_cells() {
            let (v1, j1) = get(0, c);
            let (v2, j2) = get(1, c);
            write!(out, "{c},{:?},{v1:?},{j1:?},{v2:?},{j2:?},{:?}", self.eta_cells[c], self.osc_cells[c]).unwrap();
            if ng == 4 {
                let (v3, j3) = get(2, c);
                let (v4, j4) = get(3, c);
                let l = self.l2.as_ref().map_or(0.0, |l| l[c]);
                write!(out, ",{v3:?},{j3:?},{v4:?},{j4:?},{l:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// `(|T|/((d+1)(d+2))) (I + 11ᵀ)` inverted in closed form, applied to `b`.
fn p1_projection_coeffs(b: &[Vec3], measure: f64) -> Vec<Vec3> {
    let m = b.len();
    let d = (m - 1) as f64;
    let s = (d + 1.0) * (d + 2.0) / measure;
    let mut sum = [0.0; 3];
    for bi in b {
        for k in 0..3 {
            sum[k] += bi[k];
        }
    }
    b.iter()
        .map(|bi| {
            let mut v = [0.0; 3];
            for k in 0..3 {
                v[k] = s * (bi[k] - sum[k] / (d + 2.0));
            }
            v
        })
        .collect()
}

/// `‖v‖²` and `‖v - Q v‖²` on a simplex, `Q` the L² projection onto
/// degree-1 polynomials; `vals` are samples at the points of `rule`.
fn norm_and_oscillation(points: &[[f64; 4]], weights: &[f64], vals: &[Vec3], dim: usize, measure: f64) -> (f64, f64) {
    let mut b = vec![[0.0; 3]; dim + 1];
    let mut nrm = 0.0;
    for ((p, w), v) in points.iter().zip(weights).zip(vals) {
        nrm += w * dot(v, v);
        for i in 0..=dim {
            for k in 0..3 {
                b[i][k] += measure * w * p[i] * v[k];
            }
        }
    }
    let coef = p1_projection_coeffs(&b, measure);
    let mut osc = 0.0;
    for ((p, w), v) in points.iter().zip(weights).zip(vals) {
        let mut d = *v;
        for i in 0..=dim {
            for k in 0..3 {
                d[k] -= p[i] * coef[i][k];
            }
        }
        osc += w * dot(&d, &d);
    }
    // Rules with negative weights can push a vanishing norm slightly below zero.
    ((measure * nrm).max(0.0), (measure * osc).max(0.0))
}

/// Squared weighted norms of one group: `(vol², jump², osc²)` per cell.
struct GroupNorms {
    vol: Vec<f64>,
    jump: Vec<f64>,
    osc: Vec<f64>,
}

fn cell_bary_of_face_point(mesh: &SimplicialMesh, c: usize, face: &[usize], fb: &[f64]) -> Vec<f64> {
    let n = mesh.dim();
    let cell = mesh.cell(c);
    let mut b = vec![0.0; n + 1];
    for (fi, v) in face.iter().enumerate() {
        let li = cell.iter().position(|w| w == v).expect("face vertex in cell");
        b[li] = fb[fi];
    }
    b
}

fn evaluate_group(mesh: &SimplicialMesh, geoms: &[CellGeometry], f: &Functional) -> GroupNorms {
    let n = mesh.dim();
    let rule = simplex_rule(n, RESIDUAL_DEGREE);
    let cells: Vec<(f64, f64)> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let g = &geoms[c];
            let vals: Vec<Vec3> = rule
                .points
                .iter()
                .map(|p| {
                    let b = &p[..=n];
                    f.volume_residual(c, g, b, &g.point(b))
                })
                .collect();
            let (nrm, osc) = norm_and_oscillation(&rule.points, &rule.weights, &vals, n, g.volume);
            let w = f.weighting.volume(g.diameter);
            (w * w * nrm, w * w * osc)
        })
        .collect();
    let mut vol = Vec::with_capacity(cells.len());
    let mut osc = Vec::with_capacity(cells.len());
    for (v, o) in cells {
        vol.push(v);
        osc.push(o);
    }
    let mut jump = vec![0.0; mesh.n_cells()];
    if f.weighting != Weighting::L2 && (f.kind == FunctionalKind::A || f.q.is_some()) {
        let frule = simplex_rule(n - 1, RESIDUAL_DEGREE);
        let faces: Vec<usize> = (0..mesh.n_simplices(n - 1)).filter(|&s| !mesh.in_gamma(n - 1, s)).collect();
        let contributions: Vec<([usize; 2], f64, f64)> = faces
            .par_iter()
            .map(|&s| {
                let fg = mesh.face_geometry(s);
                let verts = mesh.simplex(n - 1, s);
                let mut vals = Vec::with_capacity(frule.len());
                for p in &frule.points {
                    let fb = &p[..n];
                    let mut jv = [0.0; 3];
                    for (side, &c) in fg.cells.iter().enumerate() {
                        if c == NONE {
                            continue;
                        }
                        let b = cell_bary_of_face_point(mesh, c, verts, fb);
                        let g = &geoms[c];
                        let t = f.trace(n, c, g, &b, &g.point(&b), &fg.normal).unwrap_or([0.0; 3]);
                        let sign = if side == 0 { 1.0 } else { -1.0 };
                        for k in 0..3 {
                            jv[k] += sign * t[k];
                        }
                    }
                    vals.push(jv);
                }
                let (nrm, osc) = norm_and_oscillation(&frule.points, &frule.weights, &vals, n - 1, fg.area);
                let w = f.weighting.face(fg.diameter);
                (fg.cells, w * w * nrm, w * w * osc)
            })
            .collect();
        for (cells, j2, o2) in contributions {
            let share = if cells[1] == NONE { 1.0 } else { 0.5 };
            for &c in cells.iter().filter(|&&c| c != NONE) {
                jump[c] += share * j2;
                osc[c] += share * o2;
            }
        }
    }
    GroupNorms { vol, jump, osc }
}

pub(crate) fn cell_geometries(mesh: &SimplicialMesh) -> Vec<CellGeometry> {
    (0..mesh.n_cells()).into_par_iter().map(|c| CellGeometry::new(mesh, c)).collect()
}

/// Explicit estimate of the residual functionals; `slots` places each
/// functional into a report group (missing groups are reported as zero).
pub(crate) fn explicit_report(
    mesh: &SimplicialMesh,
    functionals: &[(usize, Functional)],
    n_groups: usize,
    l2: Option<&Functional>,
    mode: WeightMode,
    hodge: bool,
) -> EstimatorReport {
    let geoms = cell_geometries(mesh);
    let nc = mesh.n_cells();
    let mut groups = vec![(vec![0.0; nc], vec![0.0; nc]); n_groups];
    let mut osc = vec![0.0; nc];
    for (slot, f) in functionals {
        let g = evaluate_group(mesh, &geoms, f);
        for c in 0..nc {
            groups[*slot].0[c] = g.vol[c].sqrt();
            groups[*slot].1[c] = g.jump[c].sqrt();
            osc[c] += g.osc[c];
        }
    }
    let l2_col = l2.map(|f| {
        let g = evaluate_group(mesh, &geoms, f);
        for c in 0..nc {
            osc[c] += g.osc[c];
        }
        g.vol.iter().map(|v| v.sqrt()).collect()
    });
    EstimatorReport::assemble(groups, l2_col, osc, mode, hodge)
}

/// Residual norm estimate of a functional given directly by an element
/// residual `r` and a face jump `jump` (evaluated at a point of a face with
/// its unit normal); one group in the report.
pub fn h1_residual_norm_estimate(
    mesh: &SimplicialMesh,
    r: &(dyn Fn(usize, &Vec3) -> Vec3 + Sync),
    jump: &(dyn Fn(usize, &Vec3, &Vec3) -> Vec3 + Sync),
    mode: WeightMode,
) -> EstimatorReport {
    let n = mesh.dim();
    let weighting = match mode {
        WeightMode::Standard => Weighting::Standard,
        WeightMode::Robust { epsilon, kappa } => Weighting::RobustRegular { epsilon, kappa },
    };
    let geoms = cell_geometries(mesh);
    let rule = simplex_rule(n, RESIDUAL_DEGREE);
    let nc = mesh.n_cells();
    let mut vol = vec![0.0; nc];
    let mut osc = vec![0.0; nc];
    for c in 0..nc {
        let g = &geoms[c];
        let vals: Vec<Vec3> = rule.points.iter().map(|p| r(c, &g.point(&p[..=n]))).collect();
        let (nrm, o) = norm_and_oscillation(&rule.points, &rule.weights, &vals, n, g.volume);
        let w = weighting.volume(g.diameter);
        vol[c] = w * w * nrm;
        osc[c] = w * w * o;
    }
    let mut jmp = vec![0.0; nc];
    let frule = simplex_rule(n - 1, RESIDUAL_DEGREE);
    for s in 0..mesh.n_simplices(n - 1) {
        if mesh.in_gamma(n - 1, s) {
            continue;
        }
        let fg = mesh.face_geometry(s);
        let pts = mesh.simplex_points(n - 1, s);
        let vals: Vec<Vec3> = frule
            .points
            .iter()
            .map(|p| jump(s, &crate::geometry::from_barycentric(&pts, &p[..n]), &fg.normal))
            .collect();
        let (nrm, o) = norm_and_oscillation(&frule.points, &frule.weights, &vals, n - 1, fg.area);
        let w = weighting.face(fg.diameter);
        let share = if fg.cells[1] == NONE { 1.0 } else { 0.5 };
        for &c in fg.cells.iter().filter(|&&c| c != NONE) {
            jmp[c] += share * w * w * nrm;
            osc[c] += share * w * w * o;
        }
    }
    let groups = vec![(vol.iter().map(|v| v.sqrt()).collect(), jmp.iter().map(|v| v.sqrt()).collect())];
    EstimatorReport::assemble(groups, None, osc, mode, false)
}

/// Data oscillation of a report's residuals is computed together with the
/// indicators; this returns the per-cell values.
pub fn oscillation(report: &EstimatorReport) -> &[f64] {
    &report.osc_cells
}

/// Constant `ε`, `κ` required for robust weights.
pub(crate) fn robust_constants(eps: &[f64], kappa: &[f64]) -> Result<(f64, f64)> {
    let e = eps[0];
    let k = kappa[0];
    if eps.iter().any(|&v| v != e) || kappa.iter().any(|&v| v != k) {
        return Err(FeecError::Unsupported("robust weights need constant epsilon and kappa".into()));
    }
    Ok((e, k))
}
