//! Solve–estimate–mark–refine driver, true errors against manufactured
//! solutions and convergence histories.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::assembly::{assemble_hd, assemble_hodge_laplacian, HdDiscretization, HodgeDiscretization, ProblemKind, ProblemSpec};
use crate::error::{FeecError, Result};
use crate::estimators::{hd_residual_estimator, hodge_residual_estimator, local_implicit_estimator, EstimatorReport, SolutionRef, WeightMode};
use crate::forms::FormField;
use crate::geometry::{dot, to_barycentric, Vec3};
use crate::mesh::{RefinementMap, SimplicialMesh};
use crate::quadrature::simplex_rule;
use crate::solvers::{
    build_hx_preconditioner, solve_cg, solve_direct, solve_minres, BlockDiagonal, DirectInverse, Jacobi, Preconditioner,
    SolveReport, DEFAULT_DIRECT_CAP,
};
use crate::spaces::{CellGeometry, DiscreteField, FormSpace};

/// Quadrature degree of true-error integrals.
pub const ERROR_DEGREE: usize = 7;

fn diff_sq(a: &Vec3, b: &Vec3) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    dot(&d, &d)
}

/// `(Σ_T w0_T ‖v - v_h‖², Σ_T w1_T ‖dv - dv_h‖²)`.
fn field_error(field: &DiscreteField, v: &FormField, dv: Option<&FormField>, w0: &[f64], w1: &[f64]) -> Result<(f64, f64)> {
    let mesh = field.mesh();
    let n = mesh.dim();
    let rule = simplex_rule(n, ERROR_DEGREE);
    let parts: Vec<(f64, f64)> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let g = CellGeometry::new(mesh, c);
            let dh = match dv {
                Some(_) => field.derivative_with(&g)?,
                None => [0.0; 3],
            };
            let (mut e0, mut e1) = (0.0, 0.0);
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let b = &p[..=n];
                let x = g.point(b);
                e0 += w * diff_sq(&v.eval(&x), &field.eval_with(&g, b));
                if let Some(dv) = dv {
                    e1 += w * diff_sq(&dv.eval(&x), &dh);
                }
            }
            Ok((w0[c] * g.volume * e0, w1[c] * g.volume * e1))
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueError {
    pub total: f64,
    /// Mixed problems: `‖σ - σ_h‖_{V^{k-1}}`.
    pub sigma: Option<f64>,
    /// Mixed problems: `‖u - u_h‖_{V^k}`.
    pub u: Option<f64>,
}

/// `(ε‖d(u - u_h)‖² + κ‖u - u_h‖²)^{1/2}`, or for the Hodge Laplacian the
/// pair of `V^{k-1}` and `V^k` errors.
pub fn true_error(problem: &ProblemSpec, solution: SolutionRef) -> Result<TrueError> {
    let exact = problem.exact.as_ref().ok_or(FeecError::MissingExactSolution)?;
    match solution {
        SolutionRef::Hd { disc, u } => {
            let uh = DiscreteField::new(disc.space.clone(), u.to_vec())?;
            let (e0, e1) = field_error(&uh, &exact.u, Some(&exact.du), &disc.kappa, &disc.epsilon)?;
            Ok(TrueError { total: (e0 + e1).sqrt(), sigma: None, u: None })
        }
        SolutionRef::Hodge { disc, sigma, u } => {
            let mesh = disc.u_space.mesh();
            let n = mesh.dim();
            let ones = vec![1.0; mesh.n_cells()];
            let sig = exact.sigma.as_ref().ok_or(FeecError::MissingExactSolution)?;
            let dsig = exact.dsigma.as_ref().ok_or(FeecError::MissingExactSolution)?;
            let sh = DiscreteField::new(disc.sigma_space.clone(), sigma.to_vec())?;
            let uh = DiscreteField::new(disc.u_space.clone(), u.to_vec())?;
            let (s0, s1) = field_error(&sh, sig, Some(dsig), &ones, &ones)?;
            let du = if problem.k < n { Some(&exact.du) } else { None };
            let (u0, u1) = field_error(&uh, &exact.u, du, &ones, &ones)?;
            let (es, eu) = ((s0 + s1).sqrt(), (u0 + u1).sqrt());
            Ok(TrueError { total: (es * es + eu * eu).sqrt(), sigma: Some(es), u: Some(eu) })
        }
    }
}

/// Smallest set of cells carrying at least `θ²` of `Σ η_T²`: cells sorted by
/// decreasing indicator (ties by id) and taken greedily.
pub fn dorfler_mark(indicators: &[f64], theta: f64) -> Result<Vec<usize>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(FeecError::InvalidInput(format!("marking parameter {theta} outside (0, 1]")));
    }
    let mut order: Vec<usize> = (0..indicators.len()).collect();
    order.sort_by(|&a, &b| indicators[b].total_cmp(&indicators[a]).then(a.cmp(&b)));
    let total: f64 = order.iter().map(|&c| indicators[c] * indicators[c]).sum();
    if total == 0.0 {
        return Ok(Vec::new());
    }
    let target = theta * theta * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for c in order {
        if acc >= target || indicators[c] == 0.0 {
            break;
        }
        acc += indicators[c] * indicators[c];
        marked.push(c);
    }
    Ok(marked)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorChoice {
    Residual,
    ResidualRobust,
    LocalImplicit,
}

impl EstimatorChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "residual" => Ok(EstimatorChoice::Residual),
            "residual-robust" => Ok(EstimatorChoice::ResidualRobust),
            "local-implicit" => Ok(EstimatorChoice::LocalImplicit),
            _ => Err(FeecError::InvalidInput(format!("unknown estimator '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marking {
    Dorfler(f64),
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverChoice {
    Direct,
    /// CG (auxiliary-space or Jacobi preconditioned) for H(d) problems,
    /// block-preconditioned MINRES for mixed ones.
    Iterative { tol: f64, maxit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceError {
    /// No error column.
    None,
    /// Against the manufactured solution.
    Exact,
    /// Against the solution on a mesh refined uniformly twice (flagged approximate).
    FineMesh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AfemConfig {
    pub estimator: EstimatorChoice,
    pub marking: Marking,
    pub max_iters: usize,
    pub max_dofs: Option<usize>,
    pub eta_tol: Option<f64>,
    pub solver: SolverChoice,
    pub reference: ReferenceError,
    /// Record wall-clock seconds (otherwise the column is left empty so that
    /// output files are reproducible byte for byte).
    pub timings: bool,
}

impl Default for AfemConfig {
    fn default() -> Self {
        AfemConfig {
            estimator: EstimatorChoice::Residual,
            marking: Marking::Dorfler(0.5),
            max_iters: 10,
            max_dofs: None,
            eta_tol: None,
            solver: SolverChoice::Direct,
            reference: ReferenceError::Exact,
            timings: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AfemRow {
    pub iter: usize,
    pub ndofs: usize,
    pub cells: usize,
    pub eta: f64,
    pub osc: f64,
    pub err_total: Option<f64>,
    pub err_sigma: Option<f64>,
    pub err_u: Option<f64>,
    pub solve: SolveReport,
    pub galerkin_defect: f64,
    pub theta: Option<f64>,
    pub marked: usize,
}

impl AfemRow {
    pub fn effectivity(&self) -> Option<f64> {
        self.err_total.map(|e| if e > 0.0 { self.eta / e } else { f64::INFINITY })
    }
}

#[derive(Debug, Clone)]
pub struct AfemHistory {
    pub rows: Vec<AfemRow>,
    pub hodge: bool,
    /// Errors measured against a finer discrete solution.
    pub approx: bool,
    pub timings: bool,
    pub final_report: EstimatorReport,
    pub final_mesh: SimplicialMesh,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:?}"))
}

impl AfemHistory {
    pub fn csv_header(&self) -> String {
        let mut h = String::from("iter,ndofs,eta,osc,err_total");
        if self.hodge {
            h.push_str(",err_sigma,err_u");
        }
        h.push_str(",effectivity,iters,seconds");
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for r in &self.rows {
            write!(out, "{},{},{:?},{:?},{}", r.iter, r.ndofs, r.eta, r.osc, fmt_opt(r.err_total)).unwrap();
            if self.hodge {
                write!(out, ",{},{}", fmt_opt(r.err_sigma), fmt_opt(r.err_u)).unwrap();
            }
            let secs = if self.timings { format!("{:?}", r.solve.seconds) } else { String::new() };
            writeln!(out, ",{},{},{}", fmt_opt(r.effectivity()), r.solve.iterations, secs).unwrap();
        }
        out
    }
}

/// Effectivity series `η / error` and its max/min ratio; `None` for the
/// ratio when some error vanishes (infinite effectivity).
#[derive(Debug, Clone, PartialEq)]
pub struct Effectivity {
    pub series: Vec<f64>,
    pub ratio: Option<f64>,
    pub infinite: bool,
}

pub fn effectivity(history: &AfemHistory) -> Result<Effectivity> {
    let series: Vec<f64> = history.rows.iter().map(|r| r.effectivity().ok_or(FeecError::MissingExactSolution)).collect::<Result<_>>()?;
    Ok(effectivity_of(&series))
}

pub fn effectivity_of(series: &[f64]) -> Effectivity {
    let infinite = series.iter().any(|v| !v.is_finite());
    let (lo, hi) = series.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let ratio = if infinite || series.is_empty() || lo <= 0.0 { None } else { Some(hi / lo) };
    Effectivity { series: series.to_vec(), ratio, infinite }
}

/// A discretized problem on a mesh.
pub enum Discretization<'m> {
    Hd(HdDiscretization<'m>),
    Hodge(HodgeDiscretization<'m>),
}

impl<'m> Discretization<'m> {
    pub fn new(problem: &ProblemSpec, mesh: &'m SimplicialMesh) -> Result<Self> {
        match problem.kind {
            ProblemKind::HodgeLaplacian => Ok(Discretization::Hodge(assemble_hodge_laplacian(problem, mesh)?)),
            _ => Ok(Discretization::Hd(assemble_hd(problem, mesh)?)),
        }
    }

    pub fn system(&self) -> &crate::assembly::LinearSystem {
        match self {
            Discretization::Hd(d) => &d.system,
            Discretization::Hodge(d) => &d.system,
        }
    }

    pub fn solve(&self, solver: SolverChoice) -> Result<(Vec<f64>, SolveReport)> {
        let sys = self.system();
        match solver {
            SolverChoice::Direct => solve_direct(sys, DEFAULT_DIRECT_CAP),
            SolverChoice::Iterative { tol, maxit } => match self {
                Discretization::Hd(d) => {
                    let pre: Box<dyn Preconditioner> = match build_hx_preconditioner(d) {
                        Ok(b) => Box::new(b),
                        Err(FeecError::Unsupported(_)) => Box::new(Jacobi::new(&sys.matrix)?),
                        Err(e) => return Err(e),
                    };
                    solve_cg(&sys.matrix, &sys.rhs, pre.as_ref(), tol, maxit)
                }
                Discretization::Hodge(d) => {
                    let sizes = sys.block_sizes();
                    let pre = BlockDiagonal {
                        blocks: vec![
                            (sizes[0], Box::new(DirectInverse::new(&d.riesz[0])?)),
                            (sizes[1], Box::new(DirectInverse::new(&d.riesz[1])?)),
                        ],
                    };
                    solve_minres(&sys.matrix, &sys.rhs, &pre, tol, maxit)
                }
            },
        }
    }

    pub fn spaces(&self) -> Vec<FormSpace<'m>> {
        match self {
            Discretization::Hd(h) => vec![h.space.clone()],
            Discretization::Hodge(h) => vec![h.sigma_space.clone(), h.u_space.clone()],
        }
    }

    /// Full coefficient vectors per block.
    pub fn expand(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.system().expand(x)
    }

    pub fn solution_ref<'a>(&'a self, full: &'a [Vec<f64>]) -> SolutionRef<'a, 'm> {
        match self {
            Discretization::Hd(disc) => SolutionRef::Hd { disc, u: &full[0] },
            Discretization::Hodge(disc) => SolutionRef::Hodge { disc, sigma: &full[0], u: &full[1] },
        }
    }
}

pub fn estimate(problem: &ProblemSpec, solution: SolutionRef, choice: EstimatorChoice) -> Result<EstimatorReport> {
    match (choice, solution) {
        (EstimatorChoice::LocalImplicit, s) => Ok(local_implicit_estimator(problem, s)?.report),
        (EstimatorChoice::Residual, SolutionRef::Hd { disc, u }) => hd_residual_estimator(problem, disc, u, WeightMode::Standard),
        (EstimatorChoice::ResidualRobust, SolutionRef::Hd { disc, u }) => {
            hd_residual_estimator(problem, disc, u, WeightMode::Robust { epsilon: 0.0, kappa: 0.0 })
        }
        (EstimatorChoice::Residual, SolutionRef::Hodge { disc, sigma, u }) => hodge_residual_estimator(problem, disc, sigma, u),
        (EstimatorChoice::ResidualRobust, SolutionRef::Hodge { .. }) => {
            Err(FeecError::Unsupported("robust weights apply to H(d) problems only".into()))
        }
    }
}

/// Error of a coarse solution against the solution on `fine`, a refinement
/// of the coarse mesh with cell ancestry `map`; measured in the energy norm
/// (H(d) problems) or the `V^{k-1} × V^k` norm (mixed problems).
pub fn reference_error(
    problem: &ProblemSpec,
    coarse: (&Discretization, &[Vec<f64>]),
    fine: (&Discretization, &[Vec<f64>]),
    map: &RefinementMap,
) -> Result<TrueError> {
    let (cd, cu) = coarse;
    let (fd, fu) = fine;
    let (cs, fs) = (cd.spaces(), fd.spaces());
    let fmesh = fs[0].mesh();
    let cmesh = cs[0].mesh();
    let n = fmesh.dim();
    let rule = simplex_rule(n, 4);
    let mut errs = Vec::new();
    for b in 0..cs.len() {
        let ch = DiscreteField::new(cs[b].clone(), cu[b].clone())?;
        let fh = DiscreteField::new(fs[b].clone(), fu[b].clone())?;
        let (w0, w1) = match cd {
            Discretization::Hd(_) => (problem.kappa.cell_values(fmesh), problem.epsilon.cell_values(fmesh)),
            Discretization::Hodge(_) => (vec![1.0; fmesh.n_cells()], vec![1.0; fmesh.n_cells()]),
        };
        let with_d = cs[b].k() < n;
        let parts: Vec<(f64, f64)> = (0..fmesh.n_cells())
            .into_par_iter()
            .map(|c| {
                let fg = CellGeometry::new(fmesh, c);
                let pc = map.parent[c];
                let cg = CellGeometry::new(cmesh, pc);
                let cpts = cmesh.cell_points(pc);
                let (mut e0, mut e1) = (0.0, 0.0);
                if with_d {
                    e1 = diff_sq(&fh.derivative_with(&fg)?, &ch.derivative_with(&cg)?);
                }
                for (p, w) in rule.points.iter().zip(&rule.weights) {
                    let x = fg.point(&p[..=n]);
                    let cb = to_barycentric(&cpts, n, &x);
                    e0 += w * diff_sq(&fh.eval_with(&fg, &p[..=n]), &ch.eval_with(&cg, &cb));
                }
                Ok((w0[c] * fg.volume * e0, w1[c] * fg.volume * e1))
            })
            .collect::<Result<_>>()?;
        let (a, d) = parts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        errs.push((a + d).sqrt());
    }
    Ok(match errs.len() {
        1 => TrueError { total: errs[0], sigma: None, u: None },
        _ => TrueError { total: (errs[0] * errs[0] + errs[1] * errs[1]).sqrt(), sigma: Some(errs[0]), u: Some(errs[1]) },
    })
}

/// Adaptive loop: assemble, solve, estimate, measure the error, record, test
/// the stopping rule, mark and bisect.
pub fn afem_loop(problem: &ProblemSpec, initial: SimplicialMesh, cfg: &AfemConfig) -> Result<AfemHistory> {
    if cfg.max_iters == 0 {
        return Err(FeecError::InvalidInput("max_iters must be at least 1".into()));
    }
    if cfg.reference == ReferenceError::Exact && problem.exact.is_none() {
        return Err(FeecError::MissingExactSolution);
    }
    let hodge = problem.kind == ProblemKind::HodgeLaplacian;
    let mut mesh = initial;
    let mut rows: Vec<AfemRow> = Vec::new();
    for iter in 0.. {
        mesh.check_conformity()?;
        let disc = Discretization::new(problem, &mesh)?;
        let (x, solve) = disc.solve(cfg.solver)?;
        let galerkin_defect = disc.system().galerkin_defect(&x);
        let full = disc.expand(&x);
        let report = estimate(problem, disc.solution_ref(&full), cfg.estimator)?;
        let err = match cfg.reference {
            ReferenceError::None => None,
            ReferenceError::Exact => Some(true_error(problem, disc.solution_ref(&full))?),
            ReferenceError::FineMesh => {
                let (m1, r1) = mesh.refine_uniform()?;
                let (m2, r2) = m1.refine_uniform()?;
                let fine = Discretization::new(problem, &m2)?;
                let (xf, _) = fine.solve(cfg.solver)?;
                let ff = fine.expand(&xf);
                Some(reference_error(problem, (&disc, &full), (&fine, &ff), &r1.then(&r2))?)
            }
        };
        let ndofs = disc.system().n();
        if let Some(prev) = rows.last() {
            if ndofs <= prev.ndofs {
                return Err(FeecError::InvalidInput("refinement did not increase the number of unknowns".into()));
            }
        }
        let mut row = AfemRow {
            iter,
            ndofs,
            cells: mesh.n_cells(),
            eta: report.eta,
            osc: report.osc,
            err_total: err.map(|e| e.total),
            err_sigma: err.and_then(|e| e.sigma),
            err_u: err.and_then(|e| e.u),
            solve,
            galerkin_defect,
            theta: None,
            marked: 0,
        };
        let stop = iter + 1 >= cfg.max_iters
            || cfg.eta_tol.is_some_and(|t| report.eta <= t)
            || cfg.max_dofs.is_some_and(|m| ndofs >= m);
        if stop {
            rows.push(row);
            drop(disc);
            return Ok(AfemHistory { rows, hodge, approx: cfg.reference == ReferenceError::FineMesh, timings: cfg.timings, final_report: report, final_mesh: mesh });
        }
        let next = match cfg.marking {
            Marking::Uniform => {
                row.marked = mesh.n_cells();
                mesh.refine_uniform()?.0
            }
            Marking::Dorfler(theta) => {
                let marked = dorfler_mark(&report.indicators(), theta)?;
                row.theta = Some(theta);
                row.marked = marked.len();
                if marked.is_empty() {
                    rows.push(row);
                    drop(disc);
                    return Ok(AfemHistory { rows, hodge, approx: cfg.reference == ReferenceError::FineMesh, timings: cfg.timings, final_report: report, final_mesh: mesh });
                }
                mesh.bisect(&marked)?.0
            }
        };
        rows.push(row);
        drop(disc);
        mesh = next;
    }
    unreachable!()
}
