//! `gaussprob`: evaluate Gaussian probability functions, their gradients and
//! subdifferential enclosures from a JSON problem file.
//!
//! Exit codes: 0 success, 2 Slater condition violated, 3 invalid flags or problem,
//! 4 numerical failure.

mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gaussprob::estimators::{
    check_growth, oracle::fd_gradient, oracle_probability_mc, run_diagnostics, DiagnosticsOptions, DiagnosticsReport,
    OracleEstimate,
};
use gaussprob::paper_example::{nonsmoothness_witness, WitnessTable, DEFAULT_QUAD_TOL};
use gaussprob::problem::DEFAULT_TIE_TOLERANCE;
use gaussprob::radial::{DEFAULT_CUTOFF_TAIL, DEFAULT_ROOT_TOLERANCE};
use gaussprob::{
    sample_mc, sample_qmc_shifted, ConeTerm, Error, Estimate, Estimator, EstimatorOptions, GradientEstimate, Problem,
    RadialConfig, SamplerTag, SphereSample, SubdiffEnclosure, TiePolicy,
};
use report::{csv_document, key_value_table, num, to_value, Format, Report};
use serde::Serialize;

const DEFAULT_T_GRID: &str = "0.1,0.01,0.001,0.0001";

#[derive(Parser)]
#[command(name = "gaussprob", version, about = "Gaussian probability functions via spheric-radial decomposition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Probability estimate at x.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Use the interval path, which also accepts points with g(x, 0) >= 0.
        #[arg(long)]
        interval: bool,
    },
    /// Gradient estimate at x under one tie policy.
    Grad {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "lowest")]
        policy: String,
    },
    /// Tie-policy enclosure of the Clarke subdifferential at x.
    Subdiff {
        #[command(flatten)]
        common: Common,
        /// Comma-separated: lowest, highest, max:J, min:J, extremes, all.
        #[arg(long, default_value = "all")]
        policies: String,
        #[command(flatten)]
        growth: GrowthArgs,
    },
    /// Direct Monte Carlo probability, optionally with finite-difference gradients.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Number of Gaussian draws.
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
        draws: u64,
        /// Also report central differences of the sphere estimate.
        #[arg(long)]
        fd: bool,
        /// Finite-difference step; defaults to 1e-4 (1 + |x_j|).
        #[arg(long)]
        fd_step: Option<f64>,
    },
    /// Regularity diagnostics at x.
    Check {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        growth: GrowthArgs,
        /// Nice-direction probes, `;`-separated vectors; defaults to ±e_j.
        #[arg(long, allow_hyphen_values = true)]
        directions: Option<String>,
        #[arg(long, default_value_t = 256)]
        bound_directions: usize,
    },
    /// Non-Lipschitz witness table of the built-in one-dimensional example.
    Example {
        /// Comma-separated t values in (0, 1).
        #[arg(long = "t", default_value = DEFAULT_T_GRID)]
        t_grid: String,
        #[arg(long, default_value_t = DEFAULT_QUAD_TOL)]
        quad_tol: f64,
        /// Defaults to csv.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    problem: PathBuf,
    /// Decision vector, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    x: String,
    #[arg(long, value_enum, default_value_t = SamplerKind::Qmc)]
    sampler: SamplerKind,
    #[arg(long, default_value_t = 16384, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent digital shifts (qmc only).
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    replicates: u64,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, default_value_t = DEFAULT_TIE_TOLERANCE)]
    tie_tol: f64,
    #[arg(long, default_value_t = DEFAULT_ROOT_TOLERANCE)]
    root_tol: f64,
    /// Chi tail mass beyond the effectively-infinite cutoff.
    #[arg(long, default_value_t = DEFAULT_CUTOFF_TAIL)]
    cutoff_tail: f64,
    /// Disable the parallel direction loop.
    #[arg(long)]
    serial: bool,
}

#[derive(Args)]
struct GrowthArgs {
    /// Growth constant l of the envelope.
    #[arg(long, default_value_t = 1.0)]
    l: f64,
    #[arg(long, default_value_t = 2000)]
    probes: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SamplerKind {
    Mc,
    Qmc,
}

enum Failure {
    Slater(String),
    Invalid(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Slater(_) => 2,
            Failure::Invalid(_) => 3,
            Failure::Numerical(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Slater(m) | Failure::Invalid(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let text = e.to_string();
        match e {
            Error::SlaterViolation { .. } => Failure::Slater(text),
            Error::RootNotConverged(_) | Error::QuadratureFailure(_) | Error::DegenerateDenominator { .. } => {
                Failure::Numerical(text)
            }
            _ => Failure::Invalid(text),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Invalid(msg.into())
}

fn parse_vector(src: &str, what: &str) -> Outcome<Vec<f64>> {
    let values = src
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| invalid(format!("{what}: `{}`: {e}", s.trim()))))
        .collect::<Outcome<Vec<f64>>>()?;
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(invalid(format!("{what}: {bad} is not finite")));
    }
    Ok(values)
}

fn positive(value: f64, flag: &str) -> Outcome<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(format!("--{flag} must be positive and finite, got {value}")))
    }
}

#[derive(Serialize)]
struct SamplerInfo {
    kind: SamplerKind,
    requested: u64,
    #[serde(rename = "N")]
    n: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    replicates: Option<u64>,
    tag: SamplerTag,
}

#[derive(Serialize)]
struct Tolerances {
    tie_tolerance: f64,
    root_tolerance: f64,
    cutoff_tail: f64,
    r_max_level: f64,
    r_max: f64,
}

#[derive(Serialize)]
struct Provenance {
    problem: String,
    x: Vec<f64>,
    sampler: SamplerInfo,
    tolerances: Tolerances,
    parallel: bool,
}

struct Session {
    problem: Problem,
    estimator: Estimator,
    sample: SphereSample,
    x: Vec<f64>,
    provenance: Provenance,
    format: Format,
}

impl Session {
    fn open(c: &Common) -> Outcome<Self> {
        let radial = RadialConfig {
            tie_tolerance: positive(c.tie_tol, "tie-tol")?,
            root_tolerance: positive(c.root_tol, "root-tol")?,
            cutoff_tail: positive(c.cutoff_tail, "cutoff-tail")?,
        };
        if radial.cutoff_tail >= 1.0 {
            return Err(invalid("--cutoff-tail must be below 1"));
        }
        let text = std::fs::read_to_string(&c.problem)
            .map_err(|e| invalid(format!("cannot read {}: {e}", c.problem.display())))?;
        let problem = Problem::from_json(&text)?;
        let x = parse_vector(&c.x, "--x")?;
        if x.len() != problem.system.n() {
            return Err(invalid(format!("--x has {} entries but the problem has n = {}", x.len(), problem.system.n())));
        }
        let options = EstimatorOptions { radial, parallel: !c.serial };
        let estimator = Estimator::new(&problem.system, &problem.model, options)?;
        let m = problem.system.m();
        let count = usize::try_from(c.samples).map_err(|_| invalid("--samples is too large"))?;
        let (sample, replicates) = match c.sampler {
            SamplerKind::Mc => (sample_mc(m, count, c.seed)?, None),
            SamplerKind::Qmc => {
                if c.replicates > c.samples {
                    return Err(invalid("--replicates cannot exceed --samples"));
                }
                (sample_qmc_shifted(m, count, c.replicates as usize, c.seed)?, Some(c.replicates))
            }
        };
        let engine = estimator.engine();
        let provenance = Provenance {
            problem: c.problem.display().to_string(),
            x: x.clone(),
            sampler: SamplerInfo {
                kind: c.sampler,
                requested: c.samples,
                n: sample.len(),
                seed: c.seed,
                replicates,
                tag: sample.tag().clone(),
            },
            tolerances: Tolerances {
                tie_tolerance: radial.tie_tolerance,
                root_tolerance: radial.root_tolerance,
                cutoff_tail: radial.cutoff_tail,
                r_max_level: 1.0 - radial.cutoff_tail,
                r_max: engine.cutoff(),
            },
            parallel: options.parallel,
        };
        Ok(Self { problem, estimator, sample, x, provenance, format: c.format.unwrap_or(Format::Json) })
    }

    fn emit<R: Serialize>(&self, command: &str, result: &R, table: impl FnOnce(&R) -> Vec<Vec<String>>) -> Outcome<String> {
        render(command, &self.provenance, result, self.format, table)
    }
}

fn render<P: Serialize, R: Serialize>(
    command: &str,
    provenance: &P,
    result: &R,
    format: Format,
    table: impl FnOnce(&R) -> Vec<Vec<String>>,
) -> Outcome<String> {
    let report = Report { command, version: env!("CARGO_PKG_VERSION"), provenance, result };
    let value = to_value(&report).map_err(Failure::Numerical)?;
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&value).map_err(|e| Failure::Numerical(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => csv_document(&value, &table(result)),
    })
}

fn vector_rows(label: &str, value: &[f64], stderr: &[f64], out: &mut Vec<Vec<String>>) {
    for (j, (v, s)) in value.iter().zip(stderr).enumerate() {
        out.push(vec![label.to_string(), (j + 1).to_string(), num(*v), num(*s)]);
    }
}

fn eval_table(e: &Estimate) -> Vec<Vec<String>> {
    vec![
        ["value", "stderr", "N", "tie_fraction", "infinite_fraction", "residual_infinite_mass"].map(String::from).to_vec(),
        vec![num(e.value), num(e.stderr), e.n.to_string(), num(e.tie_fraction), num(e.infinite_fraction), num(e.residual_infinite_mass)],
    ]
}

fn grad_table(g: &GradientEstimate) -> Vec<Vec<String>> {
    let mut rows = vec![["policy", "coordinate", "value", "stderr"].map(String::from).to_vec()];
    vector_rows(&g.policy.to_string(), &g.value, &g.stderr, &mut rows);
    rows
}

fn subdiff_table(s: &SubdiffEnclosure) -> Vec<Vec<String>> {
    let mut rows = vec![["policy", "coordinate", "value", "stderr"].map(String::from).to_vec()];
    for p in &s.policies {
        vector_rows(&p.policy.to_string(), &p.value, &p.stderr, &mut rows);
    }
    let zeros = vec![0.0; s.hull_lower.len()];
    vector_rows("hull_lower", &s.hull_lower, &zeros, &mut rows);
    vector_rows("hull_upper", &s.hull_upper, &zeros, &mut rows);
    rows
}

#[derive(Serialize)]
struct OracleReport {
    mc: OracleEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    fd_gradient: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fd_step: Option<f64>,
}

fn oracle_table(o: &OracleReport) -> Vec<Vec<String>> {
    let mut rows = vec![["quantity", "coordinate", "value", "stderr"].map(String::from).to_vec()];
    rows.push(vec!["probability".into(), String::new(), num(o.mc.value), num(o.mc.stderr)]);
    for (j, g) in o.fd_gradient.iter().flatten().enumerate() {
        rows.push(vec!["fd_gradient".into(), (j + 1).to_string(), num(*g), String::new()]);
    }
    rows
}

#[derive(Serialize)]
struct CheckReport {
    growth_ok: bool,
    cone_term: ConeTerm,
    diagnostics: DiagnosticsReport,
}

#[derive(Serialize)]
struct ExampleProvenance {
    t_grid: Vec<f64>,
    quad_tol: f64,
}

fn cone_term(growth_ok: bool) -> ConeTerm {
    if growth_ok {
        ConeTerm::Trivial
    } else {
        ConeTerm::Nontrivial
    }
}

fn run(command: Command) -> Outcome<String> {
    match command {
        Command::Eval { common, interval } => {
            let s = Session::open(&common)?;
            let e = if interval {
                s.estimator.probability_interval(&s.x, &s.sample)?
            } else {
                s.estimator.probability(&s.x, &s.sample)?
            };
            s.emit(if interval { "eval-interval" } else { "eval" }, &e, eval_table)
        }
        Command::Grad { common, policy } => {
            let s = Session::open(&common)?;
            let policy: TiePolicy = policy.parse()?;
            if policy.coordinate().is_some_and(|j| j >= s.x.len()) {
                return Err(invalid(format!("policy `{policy}` refers to a coordinate beyond n = {}", s.x.len())));
            }
            let g = s.estimator.gradient_with_policy(&s.x, &s.sample, policy)?;
            s.emit("grad", &g, grad_table)
        }
        Command::Subdiff { common, policies, growth } => {
            let s = Session::open(&common)?;
            let policies = TiePolicy::parse_list(&policies, s.x.len())?;
            let l = positive(growth.l, "l")?;
            let enclosure = s.estimator.subdifferential(&s.x, &s.sample, &policies)?;
            let check = check_growth(s.estimator.engine(), &s.x, l, growth.probes, common.seed)?;
            let enclosure = enclosure.with_cone_term(cone_term(check.ok));
            s.emit("subdiff", &enclosure, subdiff_table)
        }
        Command::Oracle { common, draws, fd, fd_step } => {
            let s = Session::open(&common)?;
            if let Some(h) = fd_step {
                positive(h, "fd-step")?;
            }
            let draws = usize::try_from(draws).map_err(|_| invalid("--draws is too large"))?;
            let mc = oracle_probability_mc(&s.problem.system, &s.problem.model, &s.x, draws, common.seed)?;
            let fd_gradient = if fd { Some(fd_gradient(&s.estimator, &s.x, &s.sample, fd_step)?) } else { None };
            let report = OracleReport { mc, fd_gradient, fd_step: if fd { fd_step } else { None } };
            s.emit("oracle", &report, oracle_table)
        }
        Command::Check { common, growth, directions, bound_directions } => {
            let s = Session::open(&common)?;
            let directions = match directions {
                None => None,
                Some(src) => Some(
                    src.split(';')
                        .map(|d| {
                            let v = parse_vector(d, "--directions")?;
                            if v.len() != s.x.len() {
                                return Err(invalid(format!("direction `{d}` does not have n = {} entries", s.x.len())));
                            }
                            Ok(v)
                        })
                        .collect::<Outcome<Vec<_>>>()?,
                ),
            };
            let opts = DiagnosticsOptions {
                l: positive(growth.l, "l")?,
                probes: growth.probes,
                seed: common.seed,
                directions,
                bound_directions,
            };
            let diagnostics = run_diagnostics(&s.estimator, &s.x, &s.sample, &opts)?;
            let report = CheckReport { growth_ok: diagnostics.growth.ok, cone_term: cone_term(diagnostics.growth.ok), diagnostics };
            s.emit("check", &report, |r| key_value_table(&serde_json::to_value(r).unwrap_or_default()))
        }
        Command::Example { t_grid, quad_tol, format } => {
            let t_grid = parse_vector(&t_grid, "--t")?;
            let quad_tol = positive(quad_tol, "quad-tol")?;
            let table = nonsmoothness_witness(&t_grid, quad_tol)?;
            let provenance = ExampleProvenance { t_grid, quad_tol };
            render("example", &provenance, &table, format.unwrap_or(Format::Csv), witness_rows)
        }
    }
}

fn witness_rows(table: &WitnessTable) -> Vec<Vec<String>> {
    table
        .to_csv()
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
