use feec_core::afem::{
    afem_loop, dorfler_mark, effectivity, effectivity_of, true_error, AfemConfig, Discretization, EstimatorChoice, Marking, ReferenceError,
    SolverChoice,
};
use feec_core::mesh::{generate_structured, SimplicialMesh};
use feec_core::problems::{build_problem, lookup, CONSTANT_FORM};
use feec_core::spaces::canonical_interpolate;
use proptest::prelude::*;

fn initial(name: &str, m: usize) -> SimplicialMesh {
    let info = lookup(name).unwrap();
    generate_structured(info.domain, m).unwrap().mark_gamma(&info.gamma).unwrap()
}

#[test]
fn dorfler_full_fraction_marks_every_nonzero_cell() {
    let eta = [0.3, 0.0, 1.2, 0.7, 0.0];
    assert_eq!(dorfler_mark(&eta, 1.0).unwrap(), vec![2, 3, 0]);
}

#[test]
fn dorfler_dominant_cell() {
    let eta = [0.1, 5.0, 0.2, 0.1];
    assert_eq!(dorfler_mark(&eta, 0.5).unwrap(), vec![1]);
}

#[test]
fn dorfler_ties_by_id_and_errors() {
    assert_eq!(dorfler_mark(&[1.0, 1.0, 1.0, 1.0], 0.5).unwrap(), vec![0]);
    assert_eq!(dorfler_mark(&[1.0, 1.0, 1.0, 1.0], 0.75).unwrap(), vec![0, 1, 2]);
    assert!(dorfler_mark(&[0.0, 0.0], 0.5).unwrap().is_empty());
    assert!(dorfler_mark(&[1.0], 0.0).is_err());
    assert!(dorfler_mark(&[1.0], 1.5).is_err());
}

proptest! {
    #[test]
    fn dorfler_is_minimal(eta in prop::collection::vec(0.0f64..1.0, 1..11), theta in 0.05f64..=1.0) {
        let marked = dorfler_mark(&eta, theta).unwrap();
        let total: f64 = eta.iter().map(|v| v * v).sum();
        let target = theta * theta * total;
        let sum: f64 = marked.iter().map(|&c| eta[c] * eta[c]).sum();
        prop_assert!(sum >= target * (1.0 - 1e-12));
        // Exhaustive search for the smallest admissible set.
        let n = eta.len();
        let mut best = usize::MAX;
        for mask in 0u32..(1 << n) {
            let s: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| eta[i] * eta[i]).sum();
            if s >= target {
                best = best.min(mask.count_ones() as usize);
            }
        }
        prop_assert_eq!(marked.len(), best);
    }
}

#[test]
fn effectivity_examples() {
    let e = effectivity_of(&[1.0, 1.0, 1.0]);
    assert_eq!(e.series, vec![1.0; 3]);
    assert_eq!(e.ratio, Some(1.0));
    assert_eq!(effectivity_of(&[2.5]).ratio, Some(1.0));
    let inf = effectivity_of(&[1.0, f64::INFINITY]);
    assert!(inf.infinite);
    assert_eq!(inf.ratio, None);
}

#[test]
fn interpolant_of_exact_solution_has_zero_error() {
    for name in ["constant_maxwell_cube", "constant_graddiv_cube"] {
        let p = build_problem(name, 2.0, 3.0).unwrap();
        let m = initial(name, 2);
        let disc = Discretization::new(&p, &m).unwrap();
        let Discretization::Hd(hd) = &disc else { panic!("H(d) problem") };
        let u = canonical_interpolate(&hd.space, |_| CONSTANT_FORM, 2).coeffs;
        let full = vec![u];
        let e = true_error(&p, disc.solution_ref(&full)).unwrap();
        assert!(e.total <= 1e-10, "{name}: {}", e.total);
    }
}

#[test]
fn missing_exact_solution_is_an_error() {
    let p = build_problem("lshape_reaction_diffusion", 1.0, 1.0).unwrap();
    let m = initial("lshape_reaction_diffusion", 1);
    let disc = Discretization::new(&p, &m).unwrap();
    let (x, _) = disc.solve(SolverChoice::Direct).unwrap();
    let full = disc.expand(&x);
    assert!(true_error(&p, disc.solution_ref(&full)).is_err());
    assert!(afem_loop(&p, m.clone(), &AfemConfig::default()).is_err());
}

/// Least-squares slope of `log err` against `log(1/m)`.
fn rate(levels: &[usize], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = levels.iter().map(|&m| -(m as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

#[test]
fn energy_error_converges_at_first_order() {
    let levels = [4, 8, 16];
    let p = build_problem("maxwell_square", 1.0, 1.0).unwrap();
    let errs: Vec<f64> = levels
        .iter()
        .map(|&l| {
            let m = initial("maxwell_square", l);
            let disc = Discretization::new(&p, &m).unwrap();
            let (x, _) = disc.solve(SolverChoice::Direct).unwrap();
            let full = disc.expand(&x);
            true_error(&p, disc.solution_ref(&full)).unwrap().total
        })
        .collect();
    let r = rate(&levels, &errs);
    assert!((r - 1.0).abs() <= 0.25, "rate {r} from {errs:?}");
}

#[test]
fn single_iteration_gives_one_row() {
    let p = build_problem("reaction_diffusion_square", 1.0, 1.0).unwrap();
    let cfg = AfemConfig { max_iters: 1, ..AfemConfig::default() };
    let h = afem_loop(&p, initial("reaction_diffusion_square", 2), &cfg).unwrap();
    assert_eq!(h.rows.len(), 1);
    assert_eq!(h.rows[0].iter, 0);
}

#[test]
fn estimator_decreases_under_dorfler_refinement() {
    for name in ["reaction_diffusion_square", "maxwell_square", "mixed_poisson_square"] {
        let p = build_problem(name, 1.0, 1.0).unwrap();
        let cfg = AfemConfig { max_iters: 5, marking: Marking::Dorfler(0.5), ..AfemConfig::default() };
        let h = afem_loop(&p, initial(name, 2), &cfg).unwrap();
        assert_eq!(h.rows.len(), 5);
        for w in h.rows.windows(2) {
            assert!(w[1].ndofs > w[0].ndofs);
            assert!(w[1].eta < w[0].eta, "{name}: {} -> {}", w[0].eta, w[1].eta);
        }
        for r in &h.rows {
            assert!(r.galerkin_defect <= 1e-9, "{name}: {}", r.galerkin_defect);
            assert!(r.eta >= 0.0 && r.osc >= 0.0 && r.err_total.unwrap() >= 0.0);
        }
        // The last row stops before marking.
        for r in &h.rows[..4] {
            assert_eq!(r.theta, Some(0.5));
            assert!(r.marked > 0);
        }
        assert_eq!(h.rows[4].theta, None);
        h.final_mesh.check_conformity().unwrap();
        assert!(effectivity(&h).unwrap().ratio.unwrap() <= 3.0);
    }
}

#[test]
fn exact_discrete_solution_stops_immediately() {
    let p = build_problem("constant_maxwell_cube", 1.0, 2.0).unwrap();
    let cfg = AfemConfig { max_iters: 5, eta_tol: Some(1e-9), ..AfemConfig::default() };
    let h = afem_loop(&p, initial("constant_maxwell_cube", 1), &cfg).unwrap();
    assert_eq!(h.rows.len(), 1);
    assert!(h.rows[0].eta <= 1e-9);
}

#[test]
fn stop_on_dof_budget_and_uniform_marking() {
    let p = build_problem("reaction_diffusion_square", 1.0, 1.0).unwrap();
    let cfg = AfemConfig { max_iters: 20, max_dofs: Some(200), marking: Marking::Uniform, ..AfemConfig::default() };
    let h = afem_loop(&p, initial("reaction_diffusion_square", 2), &cfg).unwrap();
    let last = h.rows.last().unwrap();
    assert!(last.ndofs >= 200);
    assert!(h.rows[..h.rows.len() - 1].iter().all(|r| r.ndofs < 200));
    for w in h.rows.windows(2) {
        assert_eq!(w[1].cells, 4 * w[0].cells);
    }
}

#[test]
fn iterative_solvers_match_direct() {
    for name in ["maxwell_cube", "mixed_poisson_square"] {
        let p = build_problem(name, 1.0, 1.0).unwrap();
        let base = AfemConfig { max_iters: 2, ..AfemConfig::default() };
        let iter = AfemConfig { solver: SolverChoice::Iterative { tol: 1e-12, maxit: 2000 }, ..base.clone() };
        let a = afem_loop(&p, initial(name, 2), &base).unwrap();
        let b = afem_loop(&p, initial(name, 2), &iter).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.ndofs, rb.ndofs);
            assert!((ra.eta - rb.eta).abs() <= 1e-8 * ra.eta, "{name}");
            assert!(rb.solve.iterations > 0);
        }
    }
}

#[test]
fn fine_mesh_reference_for_singular_problem() {
    let p = build_problem("lshape_reaction_diffusion", 1.0, 1.0).unwrap();
    let cfg = AfemConfig { max_iters: 3, reference: ReferenceError::FineMesh, ..AfemConfig::default() };
    let h = afem_loop(&p, initial("lshape_reaction_diffusion", 2), &cfg).unwrap();
    assert!(h.approx);
    assert_eq!(h.rows.len(), 3);
    for r in &h.rows {
        let e = r.effectivity().unwrap();
        assert!(e.is_finite() && e > 1.0, "{e}");
    }
}

#[test]
fn local_implicit_loop_runs() {
    let p = build_problem("maxwell_square", 1.0, 1.0).unwrap();
    let cfg = AfemConfig { max_iters: 3, estimator: EstimatorChoice::LocalImplicit, ..AfemConfig::default() };
    let h = afem_loop(&p, initial("maxwell_square", 2), &cfg).unwrap();
    assert_eq!(h.rows.len(), 3);
    assert!(h.rows[2].eta < h.rows[0].eta);
}

#[test]
fn history_csv_is_reproducible() {
    let p = build_problem("hodge_k1_cube", 1.0, 1.0).unwrap();
    let cfg = AfemConfig { max_iters: 3, ..AfemConfig::default() };
    let a = afem_loop(&p, initial("hodge_k1_cube", 1), &cfg).unwrap();
    let b = afem_loop(&p, initial("hodge_k1_cube", 1), &cfg).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.final_report.to_csv(), b.final_report.to_csv());
    let csv = a.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "iter,ndofs,eta,osc,err_total,err_sigma,err_u,effectivity,iters,seconds");
    for (i, l) in lines.enumerate() {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f.len(), 10);
        assert_eq!(f[0], i.to_string());
        assert_eq!(f[2].parse::<f64>().unwrap(), a.rows[i].eta);
        assert!(f[9].is_empty());
    }
    let timed = AfemConfig { timings: true, ..cfg };
    let t = afem_loop(&p, initial("hodge_k1_cube", 1), &timed).unwrap();
    assert!(t.to_csv().lines().nth(1).unwrap().split(',').nth(9).unwrap().parse::<f64>().is_ok());
}

#[test]
fn estimator_choice_parsing() {
    assert_eq!(EstimatorChoice::parse("residual").unwrap(), EstimatorChoice::Residual);
    assert_eq!(EstimatorChoice::parse("residual-robust").unwrap(), EstimatorChoice::ResidualRobust);
    assert_eq!(EstimatorChoice::parse("local-implicit").unwrap(), EstimatorChoice::LocalImplicit);
    assert!(EstimatorChoice::parse("hierarchical").is_err());
}
