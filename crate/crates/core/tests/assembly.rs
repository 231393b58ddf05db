use feec_core::assembly::{
    assemble_h1_stiffness, assemble_hd, assemble_hodge_laplacian, assemble_load, assemble_mass, assemble_stiffness,
    nodal_embedding, Coefficient, ProblemKind, ProblemSpec,
};
use feec_core::forms::FormField;
use feec_core::geometry::Vec3;
use feec_core::mesh::{generate_structured, Domain, GammaSelector, SimplicialMesh};
use feec_core::solvers::{solve_direct, DEFAULT_DIRECT_CAP};
use feec_core::spaces::{canonical_interpolate, exterior_derivative, CellGeometry, Family, FormSpace};
use feec_core::sparse::dot;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

fn mesh(domain: Domain, m: usize, gamma: GammaSelector) -> SimplicialMesh {
    generate_structured(domain, m).unwrap().mark_gamma(&gamma).unwrap()
}

fn hd_problem(k: usize, load: FormField, gamma: GammaSelector) -> ProblemSpec {
    ProblemSpec {
        kind: if k == 0 { ProblemKind::ReactionDiffusion } else { ProblemKind::HdPositive },
        k,
        epsilon: Coefficient::Constant(1.0),
        kappa: Coefficient::Constant(1.0),
        load,
        gamma,
        exact: None,
    }
}

#[test]
fn p0_mass_is_cell_volumes() {
    let m = mesh(Domain::UnitCube, 2, GammaSelector::None);
    let space = FormSpace::new(&m, 3, Family::PiecewiseP0, false).unwrap();
    let mass = assemble_mass(&space, &vec![1.0; m.n_cells()]).unwrap();
    assert_eq!(mass.nnz(), m.n_cells());
    for c in 0..m.n_cells() {
        assert!((mass.get(c, c) - m.volume(c)).abs() < 1e-15);
    }
}

#[test]
fn p1_reference_triangle_mass() {
    let verts = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
    let m = SimplicialMesh::from_cells(2, verts, &[vec![0, 1, 2]], &HashSet::new()).unwrap();
    let space = FormSpace::new(&m, 0, Family::LagrangeP1, false).unwrap();
    let mass = assemble_mass(&space, &[1.0]).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let expect = 0.5 / 12.0 * if i == j { 2.0 } else { 1.0 };
            assert!((mass.get(i, j) - expect).abs() < 1e-15, "{i} {j}");
        }
    }
}

#[test]
fn edge_mass_positive_definite() {
    let m = mesh(Domain::UnitCube, 1, GammaSelector::None);
    let space = FormSpace::new(&m, 1, Family::TrimmedP1, false).unwrap();
    let mass = assemble_mass(&space, &vec![1.0; m.n_cells()]).unwrap();
    assert!(mass.symmetry_error() <= 1e-12 * mass.max_abs());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let x: Vec<f64> = (0..space.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert!(dot(&x, &mass.mul_vec(&x)) > 0.0);
    }
}

#[test]
fn nonpositive_weight_rejected() {
    let m = mesh(Domain::UnitSquare, 1, GammaSelector::None);
    let space = FormSpace::new(&m, 1, Family::TrimmedP1, false).unwrap();
    assert!(assemble_mass(&space, &[1.0, 0.0]).is_err());
}

#[test]
fn stiffness_annihilates_exact_forms() {
    let m = mesh(Domain::UnitCube, 2, GammaSelector::None);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ones = vec![1.0; m.n_cells()];
    for k in 1..=2 {
        let prev = FormSpace::new(&m, k - 1, Family::TrimmedP1, false).unwrap();
        let vk = FormSpace::new(&m, k, Family::TrimmedP1, false).unwrap();
        let next = FormSpace::new(&m, k + 1, Family::TrimmedP1, false).unwrap();
        let s = assemble_stiffness(&vk, &next, &ones).unwrap();
        assert!(s.symmetry_error() <= 1e-12 * s.max_abs());
        let x: Vec<f64> = (0..prev.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = exterior_derivative(&prev).unwrap().apply(&x);
        let r = s.mul_vec(&y);
        assert!(r.iter().all(|v| v.abs() < 1e-12), "k={k}");
    }
}

#[test]
fn scalar_stiffness_matches_gradient_assembly() {
    let m = mesh(Domain::UnitSquare, 3, GammaSelector::None);
    let v0 = FormSpace::new(&m, 0, Family::LagrangeP1, false).unwrap();
    let v1 = FormSpace::new(&m, 1, Family::TrimmedP1, false).unwrap();
    let ones = vec![1.0; m.n_cells()];
    let s = assemble_stiffness(&v0, &v1, &ones).unwrap();
    let h1 = assemble_h1_stiffness(&v0, &ones).unwrap();
    // Independent oracle: gradients of the hat functions from the inverse of
    // the edge matrix of each triangle.
    let nv = m.n_vertices();
    let mut oracle = vec![vec![0.0; nv]; nv];
    for c in 0..m.n_cells() {
        let vs = m.cell(c);
        let p = m.cell_points(c);
        let (a, b) = ([p[1][0] - p[0][0], p[1][1] - p[0][1]], [p[2][0] - p[0][0], p[2][1] - p[0][1]]);
        let det = a[0] * b[1] - a[1] * b[0];
        let g1 = [b[1] / det, -b[0] / det];
        let g2 = [-a[1] / det, a[0] / det];
        let g = [[-g1[0] - g2[0], -g1[1] - g2[1]], g1, g2];
        let area = det.abs() / 2.0;
        for i in 0..3 {
            for j in 0..3 {
                oracle[vs[i]][vs[j]] += area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
            }
        }
    }
    for i in 0..nv {
        for j in 0..nv {
            assert!((s.get(i, j) - oracle[i][j]).abs() < 1e-12);
            assert!((h1.get(i, j) - oracle[i][j]).abs() < 1e-12);
        }
    }
}

#[test]
fn gradient_interpolant_in_curl_kernel() {
    let m = mesh(Domain::UnitCube, 2, GammaSelector::None);
    let v1 = FormSpace::new(&m, 1, Family::TrimmedP1, false).unwrap();
    let v2 = FormSpace::new(&m, 2, Family::TrimmedP1, false).unwrap();
    let s = assemble_stiffness(&v1, &v2, &vec![1.0; m.n_cells()]).unwrap();
    let x = canonical_interpolate(&v1, |_| [0.3, -1.2, 2.0], 2);
    assert!(s.mul_vec(&x.coeffs).iter().all(|v| v.abs() < 1e-12));
}

/// Conical-product Gauss–Legendre rule on a simplex via the Duffy map.
fn duffy_rule(dim: usize, order: usize) -> Vec<(Vec<f64>, f64)> {
    let (x, w) = gauss_legendre(order);
    let mut out = Vec::new();
    if dim == 2 {
        for (a, wa) in x.iter().zip(&w) {
            for (b, wb) in x.iter().zip(&w) {
                let l1 = a;
                let l2 = b * (1.0 - a);
                out.push((vec![1.0 - l1 - l2, *l1, l2], wa * wb * (1.0 - a) * 2.0));
            }
        }
    } else {
        for (a, wa) in x.iter().zip(&w) {
            for (b, wb) in x.iter().zip(&w) {
                for (c, wc) in x.iter().zip(&w) {
                    let l1 = a;
                    let l2 = b * (1.0 - a);
                    let l3 = c * (1.0 - a) * (1.0 - b);
                    let jac = (1.0 - a) * (1.0 - a) * (1.0 - b);
                    out.push((vec![1.0 - l1 - l2 - l3, *l1, l2, l3], wa * wb * wc * jac * 6.0));
                }
            }
        }
    }
    out
}

/// Gauss–Legendre nodes and weights on [0, 1] by Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        xs.push(0.5 * (1.0 - x));
        ws.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (xs, ws)
}

#[test]
fn load_vector_matches_high_order_oracle() {
    let f = |x: &Vec3| -> Vec3 {
        let pi = std::f64::consts::PI;
        [(pi * x[1]).sin() * (pi * x[2]).sin(), (pi * x[2]).sin() * (pi * x[0]).cos(), (pi * x[0]).sin() * (pi * x[1]).sin()]
    };
    for (domain, k) in [(Domain::UnitSquare, 1), (Domain::UnitCube, 1), (Domain::UnitCube, 2), (Domain::UnitSquare, 0)] {
        let m = mesh(domain, if domain == Domain::UnitCube { 3 } else { 4 }, GammaSelector::None);
        let n = m.dim();
        let family = if k == 0 { Family::LagrangeP1 } else { Family::TrimmedP1 };
        let space = FormSpace::new(&m, k, family, false).unwrap();
        let field = FormField::new(k, f);
        let b = assemble_load(&space, &field);
        let rule = duffy_rule(n, 8);
        let mut oracle = vec![0.0; space.n_dofs()];
        for c in 0..m.n_cells() {
            let g = CellGeometry::new(&m, c);
            for (bary, w) in &rule {
                let x = g.point(bary);
                let fx = f(&x);
                for (d, phi) in space.local_dofs(c).iter().zip(space.local_basis(&g, bary)) {
                    oracle[*d] += w * g.volume * (fx[0] * phi[0] + fx[1] * phi[1] + fx[2] * phi[2]);
                }
            }
        }
        let scale = oracle.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (bi, oi) in b.iter().zip(&oracle) {
            assert!((bi - oi).abs() <= 1e-6 * scale, "{domain:?} k={k}: {bi} vs {oi}");
        }
    }
}

#[test]
fn constant_load_on_cells() {
    let m = mesh(Domain::UnitSquare, 2, GammaSelector::None);
    let space = FormSpace::new(&m, 2, Family::PiecewiseP0, false).unwrap();
    let b = assemble_load(&space, &FormField::constant(2, [2.5, 0.0, 0.0]));
    for c in 0..m.n_cells() {
        assert!((b[c] - 2.5 * m.volume(c)).abs() < 1e-14);
    }
    let z = assemble_load(&FormSpace::new(&m, 1, Family::TrimmedP1, false).unwrap(), &FormField::zero(1));
    assert!(z.iter().all(|&v| v == 0.0));
}

#[test]
fn nodal_embedding_reproduces_linear_fields() {
    let lin = |x: &Vec3| -> Vec3 { [1.0 + 2.0 * x[1] - x[2], 0.5 * x[0] + x[2], -x[0] + 3.0 * x[1] + 0.25] };
    for (domain, k) in [(Domain::UnitCube, 1), (Domain::UnitCube, 2), (Domain::UnitSquare, 1), (Domain::UnitCube, 0)] {
        let m = mesh(domain, 2, GammaSelector::None);
        let n = m.dim();
        let whitney = FormSpace::new(&m, k, Family::TrimmedP1, false).unwrap();
        let vector = FormSpace::new(&m, k, Family::VectorLagrangeP1, false).unwrap();
        let nc = vector.n_components();
        let mut nodal = vec![0.0; vector.n_dofs()];
        for v in 0..m.n_vertices() {
            let val = lin(&m.vertices()[v]);
            for comp in 0..nc {
                nodal[v * nc + comp] = val[comp];
            }
        }
        let p = nodal_embedding(&vector, &whitney).unwrap();
        let got = p.mul_vec(&nodal);
        let expect = canonical_interpolate(&whitney, |x| {
            let v = lin(x);
            let mut out = [0.0; 3];
            out[..nc].copy_from_slice(&v[..nc]);
            out
        }, 4);
        for (a, b) in got.iter().zip(&expect.coeffs) {
            assert!((a - b).abs() < 1e-12, "{domain:?} k={k} n={n}");
        }
    }
}

#[test]
fn constant_data_solved_exactly() {
    for (k, c) in [(1usize, [0.4, -1.0, 2.0]), (2, [1.5, 0.25, -0.75])] {
        let m = mesh(Domain::UnitCube, 2, GammaSelector::None);
        let kappa = 3.0;
        let mut p = hd_problem(k, FormField::constant(k, [kappa * c[0], kappa * c[1], kappa * c[2]]), GammaSelector::None);
        p.kappa = Coefficient::Constant(kappa);
        let disc = assemble_hd(&p, &m).unwrap();
        let (x, _) = solve_direct(&disc.system, DEFAULT_DIRECT_CAP).unwrap();
        assert!(disc.system.galerkin_defect(&x) <= 1e-9);
        let full = &disc.system.expand(&x)[0];
        let expect = canonical_interpolate(&disc.space, move |_| c, 2);
        for (a, b) in full.iter().zip(&expect.coeffs) {
            assert!((a - b).abs() < 1e-10, "k={k}");
        }
    }
}

#[test]
fn hd_energy_identity_and_symmetry() {
    let f = FormField::new(1, |x: &Vec3| [x[1].sin(), x[2] * x[0], 1.0 + x[0]]);
    let m = mesh(Domain::UnitCube, 2, GammaSelector::WholeBoundary);
    let disc = assemble_hd(&hd_problem(1, f, GammaSelector::WholeBoundary), &m).unwrap();
    let a = &disc.system.matrix;
    assert!(a.symmetry_error() <= 1e-12 * a.max_abs());
    let (x, _) = solve_direct(&disc.system, DEFAULT_DIRECT_CAP).unwrap();
    assert!(disc.system.galerkin_defect(&x) <= 1e-9);
    let energy = dot(&x, &a.mul_vec(&x));
    assert!((energy - dot(&disc.system.rhs, &x)).abs() <= 1e-10 * energy);
}

fn hodge(k: usize, load: FormField, gamma: GammaSelector) -> ProblemSpec {
    ProblemSpec {
        kind: ProblemKind::HodgeLaplacian,
        k,
        epsilon: Coefficient::Constant(1.0),
        kappa: Coefficient::Constant(1.0),
        load,
        gamma,
        exact: None,
    }
}

#[test]
fn hodge_zero_load_gives_zero() {
    let m = mesh(Domain::UnitCube, 1, GammaSelector::WholeBoundary);
    let disc = assemble_hodge_laplacian(&hodge(1, FormField::zero(1), GammaSelector::WholeBoundary), &m).unwrap();
    let (x, _) = solve_direct(&disc.system, DEFAULT_DIRECT_CAP).unwrap();
    assert!(x.iter().all(|&v| v == 0.0));
}

#[test]
fn mixed_poisson_conservation() {
    let m = mesh(Domain::UnitSquare, 2, GammaSelector::None);
    let disc = assemble_hodge_laplacian(&hodge(2, FormField::constant(2, [1.0, 0.0, 0.0]), GammaSelector::None), &m).unwrap();
    let a = &disc.system.matrix;
    assert!(a.symmetry_error() <= 1e-12 * a.max_abs());
    let ns = disc.system.block_sizes()[0];
    // u-block of the matrix is zero for k = n.
    for i in ns..disc.system.n() {
        let (cols, vals) = a.row(i);
        assert!(cols.iter().zip(vals).all(|(&j, &v)| j < ns || v == 0.0));
    }
    let (x, _) = solve_direct(&disc.system, DEFAULT_DIRECT_CAP).unwrap();
    assert!(disc.system.galerkin_defect(&x) <= 1e-9);
    let sigma = &disc.system.expand(&x)[0];
    let d = exterior_derivative(&disc.sigma_space).unwrap();
    let div = d.apply(sigma);
    // Top-form DOFs are cell integrals of div σ_h.
    let total: f64 = div.iter().sum();
    assert!((total - 1.0).abs() < 1e-12, "{total}");
}

#[test]
fn hodge_whitelist() {
    let m = mesh(Domain::UnitSquare, 2, GammaSelector::WholeBoundary);
    assert!(assemble_hodge_laplacian(&hodge(2, FormField::zero(2), GammaSelector::WholeBoundary), &m).is_err());
    let m = mesh(Domain::UnitSquare, 2, GammaSelector::Plane { axis: 0, value: 0.0 });
    assert!(assemble_hodge_laplacian(&hodge(1, FormField::zero(1), GammaSelector::None), &m).is_err());
}
