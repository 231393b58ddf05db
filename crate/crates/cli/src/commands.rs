use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use feec_core::afem::{afem_loop, effectivity, AfemConfig};
use feec_core::assembly::{assemble_hd, ProblemKind};
use feec_core::mesh::io::read_mesh;
use feec_core::mesh::{generate_structured, Domain, SimplicialMesh};
use feec_core::problems::{build_problem, registry};
use feec_core::solvers::{build_hx_preconditioner, lanczos_spectrum_bounds, solve_cg, Identity, Jacobi, Preconditioner};
use feec_core::FeecError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::{CliError, OUTPUT_ROOT_VAR};

fn load_config(path: &str) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read config {path}: {e}")))?;
    ExperimentConfig::parse(&text)
}

fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    let dir = Path::new(&cfg.output_dir);
    match std::env::var_os(OUTPUT_ROOT_VAR) {
        Some(root) if dir.is_relative() => Path::new(&root).join(dir),
        _ => dir.to_path_buf(),
    }
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Create the output directory and echo the resolved config into it.
fn prepare_output(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let dir = output_dir(cfg);
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    write(&dir.join("config.cfg"), &cfg.to_text())?;
    Ok(dir)
}

fn initial_mesh(cfg: &ExperimentConfig) -> Result<SimplicialMesh, CliError> {
    Ok(generate_structured(cfg.domain, cfg.m)?.mark_gamma(&cfg.gamma)?)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:?}"))
}

pub fn run(path: &str) -> Result<(), CliError> {
    let cfg = load_config(path)?;
    let mesh = initial_mesh(&cfg)?;
    let dir = prepare_output(&cfg)?;
    let afem = AfemConfig {
        estimator: cfg.estimator,
        marking: cfg.marking,
        max_iters: cfg.max_iters,
        max_dofs: cfg.max_dofs,
        eta_tol: cfg.eta_tol,
        solver: cfg.solver,
        reference: cfg.reference,
        timings: cfg.timings,
    };
    let sweep = cfg.sweep();
    let mut summary =
        String::from("epsilon,kappa,iterations,ndofs,eta,err_total,effectivity_min,effectivity_max,effectivity_ratio\n");
    for &(eps, kappa) in &sweep {
        let mut problem = build_problem(&cfg.problem, eps, kappa)?;
        problem.gamma = cfg.gamma.clone();
        let history = afem_loop(&problem, mesh.clone(), &afem)?;
        let suffix = if sweep.len() == 1 { String::new() } else { format!("_eps{eps:e}_kappa{kappa:e}") };
        write(&dir.join(format!("history{suffix}.csv")), &history.to_csv())?;
        write(&dir.join(format!("estimator{suffix}.csv")), &history.final_report.to_csv())?;

        let last = history.rows.last().expect("afem_loop records at least one row");
        let (lo, hi, ratio) = match effectivity(&history) {
            Ok(e) => {
                let lo = e.series.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = e.series.iter().copied().fold(0.0, f64::max);
                (Some(lo), Some(hi), e.ratio)
            }
            Err(_) => (None, None, None),
        };
        writeln!(
            summary,
            "{eps:?},{kappa:?},{},{},{:?},{},{},{},{}",
            history.rows.len(),
            last.ndofs,
            last.eta,
            opt(last.err_total),
            opt(lo),
            opt(hi),
            opt(ratio)
        )
        .unwrap();
    }
    if sweep.len() > 1 {
        write(&dir.join("summary.csv"), &summary)?;
    }
    Ok(())
}

pub fn precond_bench(path: &str) -> Result<(), CliError> {
    let cfg = load_config(path)?;
    let initial = initial_mesh(&cfg)?;
    let dir = prepare_output(&cfg)?;
    let mut csv = String::from(
        "epsilon,kappa,level,ndofs,preconditioner,iterations,converged,relative_residual,cond_estimate,seconds\n",
    );
    for (eps, kappa) in cfg.sweep() {
        let mut problem = build_problem(&cfg.problem, eps, kappa)?;
        if problem.kind != ProblemKind::HdPositive {
            return Err(FeecError::Unsupported(format!("precond-bench needs an H(d) problem, {} is not", cfg.problem)).into());
        }
        problem.gamma = cfg.gamma.clone();
        let mut mesh = initial.clone();
        for level in 0..cfg.bench_levels {
            if level > 0 {
                mesh = mesh.refine_uniform()?.0;
            }
            let disc = assemble_hd(&problem, &mesh)?;
            let a = &disc.system.matrix;
            let n = disc.system.n();
            // A random right-hand side excites the whole spectrum; smooth loads
            // converge in a handful of steps whatever the conditioning.
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ level as u64);
            let probe: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let pres: Vec<Box<dyn Preconditioner>> =
                vec![Box::new(Identity), Box::new(Jacobi::new(a)?), Box::new(build_hx_preconditioner(&disc)?)];
            for (name, pre) in ["none", "jacobi", "hx"].iter().zip(&pres) {
                let start = Instant::now();
                let (iterations, converged, residual) =
                    match solve_cg(a, &probe, pre.as_ref(), cfg.bench_tol, cfg.bench_maxit) {
                        Ok((_, report)) => (report.iterations, true, report.relative_residual),
                        Err(FeecError::MaxIterations { maxit, residual }) => (maxit, false, residual),
                        Err(e) => return Err(e.into()),
                    };
                let seconds = start.elapsed().as_secs_f64();
                let (lo, hi) = lanczos_spectrum_bounds(a, pre.as_ref(), &probe, cfg.bench_maxit.min(2000))?;
                let secs = if cfg.timings { format!("{seconds:?}") } else { String::new() };
                writeln!(
                    csv,
                    "{eps:?},{kappa:?},{level},{n},{name},{iterations},{converged},{residual:?},{:?},{secs}",
                    hi / lo
                )
                .unwrap();
            }
        }
    }
    write(&dir.join("precond_bench.csv"), &csv)?;
    Ok(())
}

/// A `domain:m` generator spec, or `None` when `spec` does not name a domain.
fn generator_spec(spec: &str) -> Option<Result<SimplicialMesh, CliError>> {
    let (name, m) = spec.split_once(':')?;
    let domain = Domain::parse(name).ok()?;
    Some(match m.parse::<usize>() {
        Ok(m) if m > 0 => generate_structured(domain, m).map_err(CliError::from),
        _ => Err(CliError::Input(format!("invalid subdivision count in `{spec}`"))),
    })
}

pub fn mesh_info(spec: &str) -> Result<(), CliError> {
    let mesh = match generator_spec(spec) {
        Some(mesh) => mesh?,
        None => {
            let text =
                fs::read_to_string(spec).map_err(|e| CliError::Input(format!("cannot read mesh {spec}: {e}")))?;
            read_mesh(&text).map_err(|e| CliError::Input(format!("invalid mesh {spec}: {e}")))?
        }
    };
    let counts: Vec<String> = ["V", "E", "F", "T"][..=mesh.dim()]
        .iter()
        .enumerate()
        .map(|(d, label)| format!("{label}={}", mesh.n_simplices(d)))
        .collect();
    println!("{}, chi={}", counts.join(" "), mesh.euler_characteristic());
    println!("shape ratio (max circumradius/inradius) = {:.6}", mesh.max_shape_ratio());
    println!("volume = {:?}", mesh.total_volume());
    Ok(())
}

pub fn list_problems() -> Result<(), CliError> {
    for p in registry() {
        let exact = if p.has_exact { "manufactured" } else { "reference mesh" };
        println!("{:<28} k={} {:<12} {:<15} {}", p.name, p.k, p.domain.name(), exact, p.description);
    }
    Ok(())
}
