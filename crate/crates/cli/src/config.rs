//! Experiment configuration.
//!
//! Grammar: one `key = value` per line, grouped under `[section]` headers.
//! `#` starts a comment. Lists are comma separated. Unknown sections or keys
//! are rejected so that typos do not silently fall back to defaults.
//!
//! ```text
//! [problem]
//! name = maxwell_cube        # registry key (see `feec list-problems`)
//! domain = unit-cube         # optional, must match the registry entry
//! m = 2                      # initial subdivisions per unit length
//! gamma = boundary           # boundary | none | plane:x=0
//! k = 1                      # optional, must match the registry entry
//! epsilon = 1                # value or sweep list
//! kappa = 1, 1e2             # value or sweep list
//!
//! [estimator]
//! kind = residual            # residual | residual-robust | local-implicit
//!
//! [afem]
//! marking = dorfler          # dorfler | uniform
//! theta = 0.5
//! max_iters = 4
//! max_dofs = 20000           # optional
//! eta_tol = 1e-3             # optional
//! solver = direct            # direct | iterative
//! tol = 1e-10                # iterative solver tolerance
//! maxit = 5000
//! reference = exact          # exact | fine-mesh | none
//!
//! [output]
//! dir = out/maxwell_cube     # relative paths resolve against $FEEC_OUTPUT_ROOT
//! seed = 1
//! timings = false
//!
//! [bench]
//! levels = 3
//! tol = 1e-8
//! maxit = 20000
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use feec_core::afem::{EstimatorChoice, Marking, ReferenceError, SolverChoice};
use feec_core::mesh::{Domain, GammaSelector};
use feec_core::problems::{lookup, ProblemInfo};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: String,
    pub domain: Domain,
    pub m: usize,
    pub gamma: GammaSelector,
    pub k: usize,
    pub epsilon: Vec<f64>,
    pub kappa: Vec<f64>,
    pub estimator: EstimatorChoice,
    pub marking: Marking,
    pub max_iters: usize,
    pub max_dofs: Option<usize>,
    pub eta_tol: Option<f64>,
    pub solver: SolverChoice,
    pub reference: ReferenceError,
    pub output_dir: String,
    pub seed: u64,
    pub timings: bool,
    pub bench_levels: usize,
    pub bench_tol: f64,
    pub bench_maxit: usize,
}

const KEYS: &[(&str, &[&str])] = &[
    ("problem", &["name", "domain", "m", "gamma", "k", "epsilon", "kappa"]),
    ("estimator", &["kind"]),
    ("afem", &["marking", "theta", "max_iters", "max_dofs", "eta_tol", "solver", "tol", "maxit", "reference"]),
    ("output", &["dir", "seed", "timings"]),
    ("bench", &["levels", "tol", "maxit"]),
];

type Entries = BTreeMap<(String, String), (usize, String)>;

fn tokenize(text: &str) -> Result<Entries, CliError> {
    let mut section: Option<String> = None;
    let mut entries = Entries::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| CliError::parse(line_no, "unterminated section header"))?
                .trim();
            if !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(CliError::parse(line_no, format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::parse(line_no, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section
            .clone()
            .ok_or_else(|| CliError::parse(line_no, "key outside of any section"))?;
        let allowed = KEYS.iter().find(|(s, _)| *s == sec).unwrap().1;
        if !allowed.contains(&key) {
            return Err(CliError::parse(line_no, format!("unknown key `{key}` in [{sec}]")));
        }
        if value.is_empty() {
            return Err(CliError::parse(line_no, format!("empty value for `{key}`")));
        }
        if entries.insert((sec.clone(), key.to_string()), (line_no, value.to_string())).is_some() {
            return Err(CliError::parse(line_no, format!("duplicate key `{key}` in [{sec}]")));
        }
    }
    Ok(entries)
}

struct Reader {
    entries: Entries,
}

impl Reader {
    fn raw(&self, sec: &str, key: &str) -> Option<&(usize, String)> {
        self.entries.get(&(sec.to_string(), key.to_string()))
    }

    fn get<T>(&self, sec: &str, key: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<T>, CliError> {
        match self.raw(sec, key) {
            None => Ok(None),
            Some((line, v)) => f(v)
                .map(Some)
                .ok_or_else(|| CliError::parse(*line, format!("invalid value `{v}` for [{sec}] {key}"))),
        }
    }

    fn list(&self, sec: &str, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.get(sec, key, |v| v.split(',').map(|s| s.trim().parse::<f64>().ok()).collect())
    }

    fn line(&self, sec: &str, key: &str) -> usize {
        self.raw(sec, key).map_or(0, |e| e.0)
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

pub fn parse_gamma(s: &str) -> Option<GammaSelector> {
    match s {
        "boundary" | "all" => Some(GammaSelector::WholeBoundary),
        "none" => Some(GammaSelector::None),
        _ => {
            let (axis, value) = s.strip_prefix("plane:")?.split_once('=')?;
            let axis = ["x", "y", "z"].iter().position(|a| *a == axis.trim())?;
            Some(GammaSelector::Plane { axis, value: value.trim().parse().ok()? })
        }
    }
}

fn gamma_name(g: &GammaSelector) -> String {
    match g {
        GammaSelector::WholeBoundary => "boundary".into(),
        GammaSelector::None => "none".into(),
        GammaSelector::Plane { axis, value } => format!("plane:{}={value:?}", ["x", "y", "z"][*axis]),
    }
}

fn estimator_name(e: EstimatorChoice) -> &'static str {
    match e {
        EstimatorChoice::Residual => "residual",
        EstimatorChoice::ResidualRobust => "residual-robust",
        EstimatorChoice::LocalImplicit => "local-implicit",
    }
}

fn list_text(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let r = Reader { entries: tokenize(text)? };
        let name = r
            .raw("problem", "name")
            .map(|e| e.1.clone())
            .ok_or_else(|| CliError::parse(0, "[problem] name is required"))?;
        let info: ProblemInfo =
            lookup(&name).map_err(|e| CliError::parse(r.line("problem", "name"), e.to_string()))?;

        let domain = r.get("problem", "domain", |v| Domain::parse(v).ok())?.unwrap_or(info.domain);
        if domain != info.domain {
            return Err(CliError::parse(
                r.line("problem", "domain"),
                format!("problem {name} is posed on {}", info.domain.name()),
            ));
        }
        let k = r.get("problem", "k", |v| v.parse().ok())?.unwrap_or(info.k);
        if k != info.k {
            return Err(CliError::parse(r.line("problem", "k"), format!("problem {name} has k={}", info.k)));
        }
        let m = r.get("problem", "m", |v| v.parse().ok().filter(|&m: &usize| m > 0))?.unwrap_or(2);
        let gamma = r.get("problem", "gamma", parse_gamma)?.unwrap_or(info.gamma.clone());
        let positive = |v: &Vec<f64>| v.iter().all(|x| *x > 0.0 && x.is_finite());
        let epsilon = r.list("problem", "epsilon")?.unwrap_or(vec![1.0]);
        let kappa = r.list("problem", "kappa")?.unwrap_or(vec![1.0]);
        if !positive(&epsilon) {
            return Err(CliError::parse(r.line("problem", "epsilon"), "epsilon values must be positive"));
        }
        if !positive(&kappa) {
            return Err(CliError::parse(r.line("problem", "kappa"), "kappa values must be positive"));
        }

        let estimator = r
            .get("estimator", "kind", |v| EstimatorChoice::parse(v).ok())?
            .unwrap_or(EstimatorChoice::Residual);

        let theta = r.get("afem", "theta", |v| v.parse().ok().filter(|t: &f64| *t > 0.0 && *t <= 1.0))?;
        let marking = match r.raw("afem", "marking").map(|e| e.1.as_str()) {
            None | Some("dorfler") => Marking::Dorfler(theta.unwrap_or(0.5)),
            Some("uniform") => Marking::Uniform,
            Some(other) => {
                return Err(CliError::parse(r.line("afem", "marking"), format!("unknown marking `{other}`")))
            }
        };
        let max_iters = r.get("afem", "max_iters", |v| v.parse().ok())?.unwrap_or(4);
        let max_dofs = r.get("afem", "max_dofs", |v| v.parse().ok())?;
        let eta_tol = r.get("afem", "eta_tol", |v| v.parse().ok().filter(|t: &f64| *t > 0.0))?;
        let tol = r.get("afem", "tol", |v| v.parse().ok().filter(|t: &f64| *t > 0.0))?.unwrap_or(1e-10);
        let maxit = r.get("afem", "maxit", |v| v.parse().ok())?.unwrap_or(5000);
        let solver = match r.raw("afem", "solver").map(|e| e.1.as_str()) {
            None | Some("direct") => SolverChoice::Direct,
            Some("iterative") => SolverChoice::Iterative { tol, maxit },
            Some(other) => return Err(CliError::parse(r.line("afem", "solver"), format!("unknown solver `{other}`"))),
        };
        let reference = r
            .get("afem", "reference", |v| match v {
                "exact" => Some(ReferenceError::Exact),
                "fine-mesh" => Some(ReferenceError::FineMesh),
                "none" => Some(ReferenceError::None),
                _ => None,
            })?
            .unwrap_or(if info.has_exact { ReferenceError::Exact } else { ReferenceError::FineMesh });

        let output_dir = r.raw("output", "dir").map(|e| e.1.clone()).unwrap_or(format!("out/{name}"));
        let seed = r.get("output", "seed", |v| v.parse().ok())?.unwrap_or(1);
        let timings = r.get("output", "timings", parse_bool)?.unwrap_or(false);

        let bench_levels = r.get("bench", "levels", |v| v.parse().ok().filter(|&l: &usize| l > 0))?.unwrap_or(3);
        let bench_tol = r.get("bench", "tol", |v| v.parse().ok().filter(|t: &f64| *t > 0.0))?.unwrap_or(1e-8);
        let bench_maxit = r.get("bench", "maxit", |v| v.parse().ok())?.unwrap_or(20000);

        Ok(ExperimentConfig {
            problem: name,
            domain,
            m,
            gamma,
            k,
            epsilon,
            kappa,
            estimator,
            marking,
            max_iters,
            max_dofs,
            eta_tol,
            solver,
            reference,
            output_dir,
            seed,
            timings,
            bench_levels,
            bench_tol,
            bench_maxit,
        })
    }

    /// All settings, defaults included, in the input grammar.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let w = &mut s;
        writeln!(w, "[problem]").unwrap();
        writeln!(w, "name = {}", self.problem).unwrap();
        writeln!(w, "domain = {}", self.domain.name()).unwrap();
        writeln!(w, "m = {}", self.m).unwrap();
        writeln!(w, "gamma = {}", gamma_name(&self.gamma)).unwrap();
        writeln!(w, "k = {}", self.k).unwrap();
        writeln!(w, "epsilon = {}", list_text(&self.epsilon)).unwrap();
        writeln!(w, "kappa = {}", list_text(&self.kappa)).unwrap();
        writeln!(w, "\n[estimator]\nkind = {}", estimator_name(self.estimator)).unwrap();
        writeln!(w, "\n[afem]").unwrap();
        match self.marking {
            Marking::Dorfler(t) => writeln!(w, "marking = dorfler\ntheta = {t:?}").unwrap(),
            Marking::Uniform => writeln!(w, "marking = uniform").unwrap(),
        }
        writeln!(w, "max_iters = {}", self.max_iters).unwrap();
        if let Some(d) = self.max_dofs {
            writeln!(w, "max_dofs = {d}").unwrap();
        }
        if let Some(t) = self.eta_tol {
            writeln!(w, "eta_tol = {t:?}").unwrap();
        }
        match self.solver {
            SolverChoice::Direct => writeln!(w, "solver = direct").unwrap(),
            SolverChoice::Iterative { tol, maxit } => {
                writeln!(w, "solver = iterative\ntol = {tol:?}\nmaxit = {maxit}").unwrap()
            }
        }
        let reference = match self.reference {
            ReferenceError::Exact => "exact",
            ReferenceError::FineMesh => "fine-mesh",
            ReferenceError::None => "none",
        };
        writeln!(w, "reference = {reference}").unwrap();
        writeln!(w, "\n[output]\ndir = {}\nseed = {}\ntimings = {}", self.output_dir, self.seed, self.timings).unwrap();
        writeln!(w, "\n[bench]\nlevels = {}\ntol = {:?}\nmaxit = {}", self.bench_levels, self.bench_tol, self.bench_maxit)
            .unwrap();
        s
    }

    /// (ε, κ) pairs of the sweep, ε outermost.
    pub fn sweep(&self) -> Vec<(f64, f64)> {
        self.epsilon.iter().flat_map(|&e| self.kappa.iter().map(move |&k| (e, k))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::parse("[problem]\nname = maxwell_cube\n").unwrap();
        assert_eq!(c.k, 1);
        assert_eq!(c.domain, Domain::UnitCube);
        assert_eq!(c.sweep(), vec![(1.0, 1.0)]);
        assert_eq!(c.reference, ReferenceError::Exact);
        assert_eq!(c.marking, Marking::Dorfler(0.5));
    }

    #[test]
    fn resolved_text_parses_back() {
        let text = "[problem]\nname = lshape_curl\nkappa = 1, 1e2 # sweep\ngamma = plane:x=0\n[afem]\nsolver = iterative\nmaxit = 7\nmax_dofs = 100\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.gamma, GammaSelector::Plane { axis: 0, value: 0.0 });
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("[problem]\nname = nope\n", 2),
            ("[problem]\nname = maxwell_cube\nk = 2\n", 3),
            ("name = maxwell_cube\n", 1),
            ("[problem]\nname = maxwell_cube\n[afem]\ntheta = 1.5\n", 4),
            ("[problem]\nname = maxwell_cube\n[afem]\nthet = 0.5\n", 4),
            ("[problem]\nname = maxwell_cube\nkappa = 1, -1\n", 3),
            ("[problem]\nname = maxwell_cube\n[junk]\n", 3),
            ("[problem]\nname = maxwell_cube\nm = 2\nm = 3\n", 4),
        ];
        for (text, line) in cases {
            match ExperimentConfig::parse(text) {
                Err(CliError::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}
