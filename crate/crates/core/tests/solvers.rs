use feec_core::assembly::{assemble_hd, assemble_hodge_laplacian, Coefficient, ProblemKind, ProblemSpec};
use feec_core::forms::FormField;
use feec_core::geometry::Vec3;
use feec_core::mesh::{generate_structured, Domain, GammaSelector, SimplicialMesh};
use feec_core::solvers::{
    build_hx_preconditioner, dense_spectrum_bounds, lanczos_spectrum_bounds, solve_cg, solve_direct, solve_direct_matrix,
    solve_minres, BlockDiagonal, DirectInverse, Identity, Jacobi, Preconditioner, DEFAULT_DIRECT_CAP,
};
use feec_core::sparse::{dot, norm2, CsrMatrix};
use feec_core::FeecError;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> CsrMatrix {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let a = &g * g.transpose() + DMatrix::identity(n, n) * (n as f64);
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..n {
            t.push((i, j, a[(i, j)]));
        }
    }
    CsrMatrix::from_triplets(n, n, &t)
}

fn rand_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn cube(m: usize, gamma: GammaSelector) -> SimplicialMesh {
    generate_structured(Domain::UnitCube, m).unwrap().mark_gamma(&gamma).unwrap()
}

fn hd(k: usize, eps: f64, kappa: f64) -> ProblemSpec {
    let pi = std::f64::consts::PI;
    ProblemSpec {
        kind: if k == 0 { ProblemKind::ReactionDiffusion } else { ProblemKind::HdPositive },
        k,
        epsilon: Coefficient::Constant(eps),
        kappa: Coefficient::Constant(kappa),
        load: FormField::new(k, move |x: &Vec3| [(pi * x[1]).sin(), (pi * x[2]).sin() * x[0], 1.0 + x[0] * x[1]]),
        gamma: GammaSelector::WholeBoundary,
        exact: None,
    }
}

#[test]
fn direct_examples() {
    let id = CsrMatrix::identity(5);
    let b = vec![1.0, -2.0, 3.0, 0.5, 7.0];
    assert_eq!(solve_direct_matrix(&id, &b, DEFAULT_DIRECT_CAP).unwrap().0, b);
    let one = CsrMatrix::from_triplets(1, 1, &[(0, 0, 2.0)]);
    assert_eq!(solve_direct_matrix(&one, &[4.0], DEFAULT_DIRECT_CAP).unwrap().0, vec![2.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a = random_spd(50, &mut rng);
    let b = rand_vec(50, &mut rng);
    let (x, rep) = solve_direct_matrix(&a, &b, DEFAULT_DIRECT_CAP).unwrap();
    assert!(rep.relative_residual <= 1e-10);
    let oracle = a.to_dense().cholesky().unwrap().solve(&DVector::from_vec(b));
    for i in 0..50 {
        assert!((x[i] - oracle[i]).abs() <= 1e-9 * oracle.amax());
    }
}

#[test]
fn direct_errors() {
    let sing = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 1.0)]);
    assert!(matches!(solve_direct_matrix(&sing, &[1.0, 1.0, 1.0], 10), Err(FeecError::Singular { dof: 2 })));
    assert!(matches!(
        solve_direct_matrix(&CsrMatrix::identity(4), &[1.0; 4], 3),
        Err(FeecError::TooLarge { n: 4, cap: 3 })
    ));
}

#[test]
fn cg_examples() {
    let a = CsrMatrix::diagonal_matrix(&[1.0, 4.0, 9.0, 100.0]);
    let (x, rep) = solve_cg(&a, &[0.0; 4], &Identity, 1e-10, 10).unwrap();
    assert_eq!((x, rep.iterations), (vec![0.0; 4], 0));
    let jac = Jacobi::new(&a).unwrap();
    let (x, rep) = solve_cg(&a, &[1.0, 1.0, 1.0, 1.0], &jac, 1e-12, 10).unwrap();
    assert_eq!(rep.iterations, 1);
    assert!((x[3] - 0.01).abs() < 1e-15);
    assert!(matches!(solve_cg(&a, &[1.0, 1.0, 1.0, 1.0], &Identity, 1e-12, 2), Err(FeecError::MaxIterations { .. })));
}

#[test]
fn cg_laplacian_matches_direct() {
    let m = generate_structured(Domain::UnitSquare, 4).unwrap().mark_gamma(&GammaSelector::WholeBoundary).unwrap();
    let disc = assemble_hd(&hd(0, 1.0, 1.0), &m).unwrap();
    let sys = &disc.system;
    let (xd, _) = solve_direct(sys, DEFAULT_DIRECT_CAP).unwrap();
    let (xc, rep) = solve_cg(&sys.matrix, &sys.rhs, &Identity, 1e-12, 1000).unwrap();
    assert!(rep.relative_residual <= 1e-12);
    let diff: Vec<f64> = xd.iter().zip(&xc).map(|(a, b)| a - b).collect();
    assert!(norm2(&diff) <= 1e-9 * norm2(&xd));
    assert!(sys.galerkin_defect(&xc) <= 1e-9);
}

#[test]
fn minres_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_spd(40, &mut rng);
    let b = rand_vec(40, &mut rng);
    let (_, cg) = solve_cg(&a, &b, &Identity, 1e-10, 500).unwrap();
    let (x, mr) = solve_minres(&a, &b, &Identity, 1e-10, 500).unwrap();
    assert!(mr.iterations <= 2 * cg.iterations && cg.iterations <= 2 * mr.iterations);
    let r: Vec<f64> = b.iter().zip(a.mul_vec(&x)).map(|(bi, ai)| bi - ai).collect();
    assert!(norm2(&r) <= 1e-9 * norm2(&b));
    let (z, rep) = solve_minres(&a, &[0.0; 40], &Identity, 1e-10, 10).unwrap();
    assert!(z.iter().all(|&v| v == 0.0) && rep.iterations == 0);
}

#[test]
fn minres_mixed_poisson_matches_direct() {
    let m = generate_structured(Domain::UnitSquare, 2).unwrap();
    let p = ProblemSpec {
        kind: ProblemKind::HodgeLaplacian,
        k: 2,
        epsilon: Coefficient::Constant(1.0),
        kappa: Coefficient::Constant(1.0),
        load: FormField::new(2, |x: &Vec3| [x[0] * x[1] + 1.0, 0.0, 0.0]),
        gamma: GammaSelector::None,
        exact: None,
    };
    let disc = assemble_hodge_laplacian(&p, &m).unwrap();
    let sys = &disc.system;
    let (xd, _) = solve_direct(sys, DEFAULT_DIRECT_CAP).unwrap();
    let sizes = sys.block_sizes();
    let precond = BlockDiagonal {
        blocks: vec![
            (sizes[0], Box::new(DirectInverse::new(&disc.riesz[0]).unwrap()) as Box<dyn Preconditioner + Send>),
            (sizes[1], Box::new(DirectInverse::new(&disc.riesz[1]).unwrap())),
        ],
    };
    let (xm, rep) = solve_minres(&sys.matrix, &sys.rhs, &precond, 1e-12, 500).unwrap();
    assert!(rep.iterations < 40, "{}", rep.iterations);
    let diff: Vec<f64> = xd.iter().zip(&xm).map(|(a, b)| a - b).collect();
    assert!(norm2(&diff) <= 1e-8 * norm2(&xd));
    assert!(sys.galerkin_defect(&xm) <= 1e-9);
}

#[test]
fn hx_is_linear_symmetric_positive() {
    for k in [1, 2] {
        let m = cube(2, GammaSelector::WholeBoundary);
        let disc = assemble_hd(&hd(k, 1.0, 1.0), &m).unwrap();
        let b = build_hx_preconditioner(&disc).unwrap();
        let n = disc.system.n();
        assert!(b.apply(&vec![0.0; n]).iter().all(|&v| v == 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        for _ in 0..20 {
            let x = rand_vec(n, &mut rng);
            let y = rand_vec(n, &mut rng);
            let (bx, by) = (b.apply(&x), b.apply(&y));
            let (l, r) = (dot(&bx, &y), dot(&by, &x));
            assert!((l - r).abs() <= 1e-10 * l.abs().max(r.abs()));
            assert!(dot(&bx, &x) > 0.0);
        }
    }
}

#[test]
fn hx_unsupported_degree() {
    let m = cube(1, GammaSelector::WholeBoundary);
    let disc = assemble_hd(&hd(0, 1.0, 1.0), &m).unwrap();
    assert!(matches!(build_hx_preconditioner(&disc), Err(FeecError::Unsupported(_))));
}

fn hd_with_gamma(k: usize, gamma: GammaSelector) -> ProblemSpec {
    ProblemSpec { gamma, ..hd(k, 1.0, 1.0) }
}

#[test]
fn hx_iterations_mesh_independent() {
    let mut its = Vec::new();
    for mm in [2, 3, 4] {
        let m = cube(mm, GammaSelector::None);
        let disc = assemble_hd(&hd_with_gamma(1, GammaSelector::None), &m).unwrap();
        let b = build_hx_preconditioner(&disc).unwrap();
        let (x, rep) = solve_cg(&disc.system.matrix, &disc.system.rhs, &b, 1e-8, 500).unwrap();
        let (xd, _) = solve_direct(&disc.system, DEFAULT_DIRECT_CAP).unwrap();
        let e: Vec<f64> = x.iter().zip(&xd).map(|(a, b)| a - b).collect();
        let a = &disc.system.matrix;
        assert!(dot(&e, &a.mul_vec(&e)).sqrt() <= 1e-6 * dot(&xd, &a.mul_vec(&xd)).sqrt());
        its.push(rep.iterations as f64);
    }
    let (lo, hi) = its.iter().fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi <= 1.5 * lo, "{its:?}");
}

#[test]
fn lanczos_probe_matches_dense_oracle() {
    let m = cube(1, GammaSelector::None);
    let disc = assemble_hd(&hd(1, 1.0, 1.0), &m).unwrap();
    let b = build_hx_preconditioner(&disc).unwrap();
    let a = &disc.system.matrix;
    let (dlo, dhi) = dense_spectrum_bounds(a, &b).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rhs = rand_vec(a.nrows(), &mut rng);
    let (llo, lhi) = lanczos_spectrum_bounds(a, &b, &rhs, 200).unwrap();
    assert!((llo - dlo).abs() <= 1e-6 * dlo && (lhi - dhi).abs() <= 1e-6 * dhi, "{llo} {lhi} vs {dlo} {dhi}");
}

#[test]
fn hx_robust_over_coefficients() {
    let m = cube(3, GammaSelector::WholeBoundary);
    let mut its = Vec::new();
    for eps in [1.0, 1e-2] {
        for kappa in [1.0, 1e2] {
            let disc = assemble_hd(&hd(1, eps, kappa), &m).unwrap();
            let b = build_hx_preconditioner(&disc).unwrap();
            let (_, rep) = solve_cg(&disc.system.matrix, &disc.system.rhs, &b, 1e-8, 500).unwrap();
            its.push(rep.iterations as f64);
        }
    }
    let (lo, hi) = its.iter().fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi <= 2.0 * lo, "{its:?}");
}

#[test]
fn hx_spectral_interval_bounded_with_essential_boundary() {
    let mut conds = Vec::new();
    for mm in [2, 3, 4] {
        let m = cube(mm, GammaSelector::WholeBoundary);
        let disc = assemble_hd(&hd(1, 1.0, 1.0), &m).unwrap();
        let b = build_hx_preconditioner(&disc).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rhs = rand_vec(disc.system.n(), &mut rng);
        let (lo, hi) = lanczos_spectrum_bounds(&disc.system.matrix, &b, &rhs, 1000).unwrap();
        conds.push(hi / lo);
        let (_, hx) = solve_cg(&disc.system.matrix, &disc.system.rhs, &b, 1e-8, 500).unwrap();
        let (_, plain) = solve_cg(&disc.system.matrix, &disc.system.rhs, &Identity, 1e-8, 5000).unwrap();
        assert!(hx.iterations <= plain.iterations);
    }
    assert!(conds[2] <= 2.0 * conds[0], "{conds:?}");
}
