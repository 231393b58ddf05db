//! Benchmark registry: manufactured smooth solutions with analytic Jacobians
//! and the L-shape singular benchmarks.

use std::f64::consts::PI;

use crate::assembly::{Coefficient, ExactSolution, ProblemKind, ProblemSpec};
use crate::error::{FeecError, Result};
use crate::forms::FormField;
use crate::geometry::Vec3;
use crate::mesh::{Domain, GammaSelector};

#[derive(Debug, Clone)]
pub struct ProblemInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub domain: Domain,
    pub kind: ProblemKind,
    pub k: usize,
    pub gamma: GammaSelector,
    pub has_exact: bool,
}

pub fn registry() -> Vec<ProblemInfo> {
    use ProblemKind::*;
    let info = |name, description, domain, kind, k, gamma, has_exact| ProblemInfo { name, description, domain, kind, k, gamma, has_exact };
    let whole = GammaSelector::WholeBoundary;
    vec![
        info("reaction_diffusion_square", "k=0, u = sin(πx)sin(πy), u = 0 on ∂Ω", Domain::UnitSquare, ReactionDiffusion, 0, whole.clone(), true),
        info("maxwell_square", "k=1 in 2D, u = (sin πy, sin πx) + ∇(sin πx sin πy), tangential trace 0", Domain::UnitSquare, HdPositive, 1, whole.clone(), true),
        info("maxwell_cube", "k=1, u = w + ∇φ with w = (sin πy sin πz, ...), u×ν = 0", Domain::UnitCube, HdPositive, 1, whole.clone(), true),
        info("graddiv_cube", "k=2, u = curl w + ∇(cos πx cos πy cos πz), u·ν = 0", Domain::UnitCube, HdPositive, 2, whole.clone(), true),
        info("constant_maxwell_cube", "k=1, f = κc with a constant c, no essential boundary", Domain::UnitCube, HdPositive, 1, GammaSelector::None, true),
        info("constant_graddiv_cube", "k=2, f = κc with a constant c, no essential boundary", Domain::UnitCube, HdPositive, 2, GammaSelector::None, true),
        info("mixed_poisson_square", "Hodge k=2 in 2D, p = sin πx sin πy, natural boundary", Domain::UnitSquare, HodgeLaplacian, 2, GammaSelector::None, true),
        info("mixed_poisson_cube", "Hodge k=3, p = sin πx sin πy sin πz, natural boundary", Domain::UnitCube, HodgeLaplacian, 3, GammaSelector::None, true),
        info("hodge_k1_cube", "Hodge k=1, σ = -div u, essential boundary on ∂Ω", Domain::UnitCube, HodgeLaplacian, 1, whole.clone(), true),
        info("lshape_reaction_diffusion", "k=0 on the L-shape, f = 1, u = 0 on ∂Ω (corner singularity)", Domain::LShape, ReactionDiffusion, 0, whole.clone(), false),
        info("lshape_curl", "k=1 in 2D on the L-shape, f = (1, -1), tangential trace 0", Domain::LShape, HdPositive, 1, whole, false),
    ]
}

pub fn lookup(name: &str) -> Result<ProblemInfo> {
    registry()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| FeecError::InvalidInput(format!("unknown problem '{name}'")))
}

/// The constant used by the `constant_*` benchmarks.
pub const CONSTANT_FORM: Vec3 = [0.6, -1.1, 1.7];

const P2: f64 = PI * PI;

/// sin and cos of `πx_i`.
struct Trig {
    s: Vec3,
    c: Vec3,
}

fn trig(x: &Vec3) -> Trig {
    Trig {
        s: [(PI * x[0]).sin(), (PI * x[1]).sin(), (PI * x[2]).sin()],
        c: [(PI * x[0]).cos(), (PI * x[1]).cos(), (PI * x[2]).cos()],
    }
}

fn lin(a: f64, u: &Vec3, b: f64, v: &Vec3) -> Vec3 {
    [a * u[0] + b * v[0], a * u[1] + b * v[1], a * u[2] + b * v[2]]
}

fn lin_j(a: f64, u: &[Vec3; 3], b: f64, v: &[Vec3; 3]) -> [Vec3; 3] {
    [lin(a, &u[0], b, &v[0]), lin(a, &u[1], b, &v[1]), lin(a, &u[2], b, &v[2])]
}

// 3D fields: w = (sin πy sin πz, sin πz sin πx, sin πx sin πy),
// φ = sin πx sin πy sin πz, ψ = cos πx cos πy cos πz.

fn w3(t: &Trig) -> Vec3 {
    [t.s[1] * t.s[2], t.s[2] * t.s[0], t.s[0] * t.s[1]]
}

fn w3_jac(t: &Trig) -> [Vec3; 3] {
    let (s, c) = (&t.s, &t.c);
    [
        [0.0, PI * c[1] * s[2], PI * s[1] * c[2]],
        [PI * c[0] * s[2], 0.0, PI * s[0] * c[2]],
        [PI * c[0] * s[1], PI * s[0] * c[1], 0.0],
    ]
}

fn curl_w3(t: &Trig) -> Vec3 {
    let (s, c) = (&t.s, &t.c);
    [PI * s[0] * (c[1] - c[2]), PI * s[1] * (c[2] - c[0]), PI * s[2] * (c[0] - c[1])]
}

fn curl_w3_jac(t: &Trig) -> [Vec3; 3] {
    let (s, c) = (&t.s, &t.c);
    [
        [P2 * c[0] * (c[1] - c[2]), -P2 * s[0] * s[1], P2 * s[0] * s[2]],
        [P2 * s[1] * s[0], P2 * c[1] * (c[2] - c[0]), -P2 * s[1] * s[2]],
        [-P2 * s[2] * s[0], P2 * s[2] * s[1], P2 * c[2] * (c[0] - c[1])],
    ]
}

fn phi3(t: &Trig) -> f64 {
    t.s[0] * t.s[1] * t.s[2]
}

fn grad_phi3(t: &Trig) -> Vec3 {
    let (s, c) = (&t.s, &t.c);
    [PI * c[0] * s[1] * s[2], PI * s[0] * c[1] * s[2], PI * s[0] * s[1] * c[2]]
}

fn hess_phi3(t: &Trig) -> [Vec3; 3] {
    let (s, c) = (&t.s, &t.c);
    let d = -P2 * phi3(t);
    let xy = P2 * c[0] * c[1] * s[2];
    let xz = P2 * c[0] * s[1] * c[2];
    let yz = P2 * s[0] * c[1] * c[2];
    [[d, xy, xz], [xy, d, yz], [xz, yz, d]]
}

fn psi3(t: &Trig) -> f64 {
    t.c[0] * t.c[1] * t.c[2]
}

fn grad_psi3(t: &Trig) -> Vec3 {
    let (s, c) = (&t.s, &t.c);
    [-PI * s[0] * c[1] * c[2], -PI * c[0] * s[1] * c[2], -PI * c[0] * c[1] * s[2]]
}

fn hess_psi3(t: &Trig) -> [Vec3; 3] {
    let (s, c) = (&t.s, &t.c);
    let d = -P2 * psi3(t);
    let xy = P2 * s[0] * s[1] * c[2];
    let xz = P2 * s[0] * c[1] * s[2];
    let yz = P2 * c[0] * s[1] * s[2];
    [[d, xy, xz], [xy, d, yz], [xz, yz, d]]
}

fn scalar_jac(g: Vec3) -> [Vec3; 3] {
    [g, [0.0; 3], [0.0; 3]]
}

fn field(k: usize, v: impl Fn(&Trig, &Vec3) -> Vec3 + Send + Sync + 'static, j: impl Fn(&Trig) -> [Vec3; 3] + Send + Sync + 'static) -> FormField {
    FormField::new(k, move |x| v(&trig(x), x)).with_jacobian(move |x| j(&trig(x)))
}

fn value_only(k: usize, v: impl Fn(&Trig) -> Vec3 + Send + Sync + 'static) -> FormField {
    FormField::new(k, move |x| v(&trig(x)))
}

/// Build the problem `name` with constant coefficients ε, κ. Hodge-Laplacian
/// problems ignore ε and κ.
pub fn build_problem(name: &str, epsilon: f64, kappa: f64) -> Result<ProblemSpec> {
    let info = lookup(name)?;
    if !(epsilon > 0.0 && kappa > 0.0 && epsilon.is_finite() && kappa.is_finite()) {
        return Err(FeecError::InvalidInput("epsilon and kappa must be positive".into()));
    }
    let (e, kp) = (epsilon, kappa);
    let (load, exact) = match name {
        "reaction_diffusion_square" => {
            let a = 2.0 * P2 * e + kp;
            let grad = |t: &Trig| [PI * t.c[0] * t.s[1], PI * t.s[0] * t.c[1], 0.0];
            let load = field(0, move |t, _| [a * t.s[0] * t.s[1], 0.0, 0.0], move |t| scalar_jac(lin(a, &grad(t), 0.0, &[0.0; 3])));
            let u = value_only(0, |t| [t.s[0] * t.s[1], 0.0, 0.0]);
            let du = value_only(1, grad);
            (load, Some(ExactSolution { u, du, sigma: None, dsigma: None }))
        }
        "maxwell_square" => {
            let w = |t: &Trig| [t.s[1], t.s[0], 0.0];
            let wj = |t: &Trig| [[0.0, PI * t.c[1], 0.0], [PI * t.c[0], 0.0, 0.0], [0.0; 3]];
            let g = |t: &Trig| [PI * t.c[0] * t.s[1], PI * t.s[0] * t.c[1], 0.0];
            let h = |t: &Trig| {
                let d = -P2 * t.s[0] * t.s[1];
                let xy = P2 * t.c[0] * t.c[1];
                [[d, xy, 0.0], [xy, d, 0.0], [0.0; 3]]
            };
            let a = e * P2 + kp;
            let load = field(1, move |t, _| lin(a, &w(t), kp, &g(t)), move |t| lin_j(a, &wj(t), kp, &h(t)));
            let u = value_only(1, move |t| lin(1.0, &w(t), 1.0, &g(t)));
            let du = value_only(2, |t| [PI * (t.c[0] - t.c[1]), 0.0, 0.0]);
            (load, Some(ExactSolution { u, du, sigma: None, dsigma: None }))
        }
        "maxwell_cube" => {
            let a = 2.0 * P2 * e + kp;
            let load = field(1, move |t, _| lin(a, &w3(t), kp, &grad_phi3(t)), move |t| lin_j(a, &w3_jac(t), kp, &hess_phi3(t)));
            let u = value_only(1, |t| lin(1.0, &w3(t), 1.0, &grad_phi3(t)));
            let du = value_only(2, curl_w3);
            (load, Some(ExactSolution { u, du, sigma: None, dsigma: None }))
        }
        "graddiv_cube" => {
            let a = 3.0 * P2 * e + kp;
            let load = field(2, move |t, _| lin(kp, &curl_w3(t), a, &grad_psi3(t)), move |t| lin_j(kp, &curl_w3_jac(t), a, &hess_psi3(t)));
            let u = value_only(2, |t| lin(1.0, &curl_w3(t), 1.0, &grad_psi3(t)));
            let du = value_only(3, |t| [-3.0 * P2 * psi3(t), 0.0, 0.0]);
            (load, Some(ExactSolution { u, du, sigma: None, dsigma: None }))
        }
        "constant_maxwell_cube" | "constant_graddiv_cube" => {
            let c = CONSTANT_FORM;
            let k = info.k;
            (
                FormField::constant(k, [kp * c[0], kp * c[1], kp * c[2]]),
                Some(ExactSolution { u: FormField::constant(k, c), du: FormField::zero(k + 1), sigma: None, dsigma: None }),
            )
        }
        "mixed_poisson_square" => {
            let load = field(2, |t, _| [2.0 * P2 * t.s[0] * t.s[1], 0.0, 0.0], |t| {
                scalar_jac([2.0 * P2 * PI * t.c[0] * t.s[1], 2.0 * P2 * PI * t.s[0] * t.c[1], 0.0])
            });
            let u = value_only(2, |t| [t.s[0] * t.s[1], 0.0, 0.0]);
            let sigma = value_only(1, |t| [PI * t.s[0] * t.c[1], -PI * t.c[0] * t.s[1], 0.0]);
            let dsigma = value_only(2, |t| [2.0 * P2 * t.s[0] * t.s[1], 0.0, 0.0]);
            (load, Some(ExactSolution { u, du: FormField::zero(3), sigma: Some(sigma), dsigma: Some(dsigma) }))
        }
        "mixed_poisson_cube" => {
            let load = field(3, |t, _| [3.0 * P2 * phi3(t), 0.0, 0.0], |t| scalar_jac(lin(3.0 * P2, &grad_phi3(t), 0.0, &[0.0; 3])));
            let u = value_only(3, |t| [phi3(t), 0.0, 0.0]);
            let sigma = value_only(2, |t| lin(-1.0, &grad_phi3(t), 0.0, &[0.0; 3]));
            let dsigma = value_only(3, |t| [3.0 * P2 * phi3(t), 0.0, 0.0]);
            (load, Some(ExactSolution { u, du: FormField::zero(4), sigma: Some(sigma), dsigma: Some(dsigma) }))
        }
        "hodge_k1_cube" => {
            let load = field(1, |t, _| lin(3.0 * P2, &grad_phi3(t), 2.0 * P2, &w3(t)), |t| {
                lin_j(3.0 * P2, &hess_phi3(t), 2.0 * P2, &w3_jac(t))
            });
            let u = value_only(1, |t| lin(1.0, &w3(t), 1.0, &grad_phi3(t)));
            let du = value_only(2, curl_w3);
            let sigma = value_only(0, |t| [3.0 * P2 * phi3(t), 0.0, 0.0]);
            let dsigma = value_only(1, |t| lin(3.0 * P2, &grad_phi3(t), 0.0, &[0.0; 3]));
            (load, Some(ExactSolution { u, du, sigma: Some(sigma), dsigma: Some(dsigma) }))
        }
        "lshape_reaction_diffusion" => (FormField::constant(0, [1.0, 0.0, 0.0]), None),
        "lshape_curl" => (FormField::constant(1, [1.0, -1.0, 0.0]), None),
        _ => unreachable!("registry and builder out of sync"),
    };
    Ok(ProblemSpec {
        kind: info.kind,
        k: info.k,
        epsilon: Coefficient::Constant(epsilon),
        kappa: Coefficient::Constant(kappa),
        load,
        gamma: info.gamma,
        exact,
    })
}
