//! Configuration-driven experiment runner behind the `fitted-hjb` binary.
//!
//! Artifacts written to the output directory:
//! - `errors.csv`: one row per scheme and step count
//! - `operator_<scheme>.csv`, `load_<scheme>.csv`: `E` and `F` at `τ = T` for a uniform control
//! - `policy.csv` (`policy_fdm.csv` for the second scheme): controls at `τ = T`
//! - `mmatrix.txt`: M-matrix audit of the system matrices
//! - `order.txt`: fitted temporal orders (`convergence` only)

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::error::Error;
use crate::fdm::FdmScheme;
use crate::fitted_fvm::{export, fitted_scheme, m_matrix_check, SpatialScheme};
use crate::metrics::{l2_spacetime_error, order_from_records, ErrorRecord};
use crate::problem::validate;
use crate::stepper::{self, Solution};

pub use config::{RunConfig, SchemeChoice};

#[derive(Debug, Parser)]
#[command(name = "fitted-hjb", version, about = "Fitted finite volume solver for degenerate HJB equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for every configured step count and write errors.csv.
    Run(RunArgs),
    /// Like `run`, then fit temporal orders into order.txt; needs two or more step counts.
    Convergence(RunArgs),
    /// Probe the coefficient hypotheses on the configured mesh and control grid.
    Validate(RunArgs),
}

/// Flags override the matching config entries.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML configuration file.
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = ["fitted", "fdm", "both"])]
    pub scheme: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub steps: Option<Vec<usize>>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub control_samples: Option<usize>,
    #[arg(long)]
    pub dump_operator: bool,
    #[arg(long)]
    pub dump_policy: bool,
    #[arg(long)]
    pub mmatrix_audit: bool,
    #[arg(long, value_parser = ["derived", "as-printed"])]
    pub psi_sign: Option<String>,
    #[arg(long)]
    pub wall_time: bool,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(Error),
    Audit(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Solver(_) => 2,
            Self::Audit(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Solver(e) => write!(f, "solver failure: {e}"),
            Self::Audit(m) => write!(f, "audit failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Self::Config(m),
            Error::Parameters(m) | Error::Mesh(m) | Error::ControlSet(m) => Self::Config(m),
            other => Self::Solver(other),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Solver(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// What a run produced, for callers that want more than the files.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<ErrorRecord>,
    pub orders: Vec<(String, f64)>,
    pub audit_passed: Option<bool>,
    pub out_dir: PathBuf,
}

/// Parses `args`, dispatches, and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Run(a) => load(a).and_then(|c| execute(&c, false).map(|o| report_outcome(&o))),
        Command::Convergence(a) => load(a).and_then(|c| execute(&c, true).map(|o| report_outcome(&o))),
        Command::Validate(a) => load(a).and_then(|c| run_validate(&c)),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn report_outcome(o: &RunOutcome) {
    for r in &o.records {
        println!("{}", r.csv_row());
    }
    for (scheme, slope) in &o.orders {
        println!("{scheme} temporal order {slope:.4}");
    }
}

/// Reads the config file and applies command-line overrides.
pub fn load(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    // parse once raw so overrides go through the same validation
    let mut cfg: toml::Table = toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    let section = |cfg: &mut toml::Table, name: &str| -> toml::Table {
        match cfg.remove(name) {
            Some(toml::Value::Table(t)) => t,
            _ => toml::Table::new(),
        }
    };
    let mut time = section(&mut cfg, "time");
    let mut solver = section(&mut cfg, "solver");
    let mut output = section(&mut cfg, "output");
    let mut problem = section(&mut cfg, "problem");
    if let Some(steps) = &args.steps {
        time.insert(
            "steps".into(),
            toml::Value::Array(steps.iter().map(|&s| toml::Value::Integer(s as i64)).collect()),
        );
    }
    if let Some(theta) = args.theta {
        time.insert("theta".into(), theta.into());
    }
    if let Some(scheme) = &args.scheme {
        solver.insert("scheme".into(), scheme.clone().into());
    }
    if let Some(n) = args.control_samples {
        solver.insert("control_samples".into(), (n as i64).into());
    }
    if let Some(out) = &args.out {
        output.insert("dir".into(), out.display().to_string().into());
    }
    for (flag, key) in [
        (args.dump_operator, "dump_operator"),
        (args.dump_policy, "dump_policy"),
        (args.mmatrix_audit, "mmatrix_audit"),
        (args.wall_time, "wall_time"),
    ] {
        if flag {
            output.insert(key.into(), true.into());
        }
    }
    if let Some(psi) = &args.psi_sign {
        problem.insert("psi_sign".into(), psi.clone().into());
    }
    cfg.insert("time".into(), time.into());
    cfg.insert("solver".into(), solver.into());
    cfg.insert("output".into(), output.into());
    cfg.insert("problem".into(), problem.into());
    text = toml::to_string(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(RunConfig::from_toml(&text)?)
}

fn scheme_by_name(name: &str, dim: usize) -> Box<dyn SpatialScheme> {
    match name {
        "fdm" => Box::new(FdmScheme),
        _ => fitted_scheme(dim),
    }
}

/// Runs every configured scheme and step count and writes the artifacts.
pub fn execute(cfg: &RunConfig, convergence: bool) -> Result<RunOutcome, CliError> {
    let mut steps = cfg.time.steps.clone();
    if convergence {
        steps.sort_unstable();
        steps.dedup();
        if steps.len() < 2 {
            return Err(CliError::Config("convergence needs at least two distinct step counts".into()));
        }
    }
    let resolved = cfg.resolve()?;
    let (problem, mesh, controls) = (resolved.problem.as_ref(), &resolved.mesh, &resolved.controls);
    let out_dir = cfg.output.dir.clone();
    fs::create_dir_all(&out_dir).map_err(|e| io_err(&out_dir, e))?;

    let mut records = Vec::new();
    let mut audit_text = String::new();
    let mut audit_passed = true;
    let counts = mesh.intervals();
    let horizon = problem.horizon();
    let has_exact = problem.exact_value(0.0, &mesh.point(&vec![1; mesh.dim()])).is_some();
    for (k, &name) in cfg.solver.scheme.names().iter().enumerate() {
        let scheme = scheme_by_name(name, mesh.dim());
        let mut last: Option<Solution> = None;
        for &m in &steps {
            info!("{name}: m = {m}");
            let start = Instant::now();
            let solution = stepper::solve(scheme.as_ref(), problem, mesh, controls, &cfg.stepper(m))?;
            let wall = start.elapsed().as_secs_f64() * 1e3;
            let l2 = if has_exact {
                l2_spacetime_error(&solution.levels, m, solution.dt, mesh, |t, x| {
                    problem.exact_value(t, x).unwrap_or(f64::NAN)
                })?
            } else {
                f64::NAN
            };
            records.push(ErrorRecord {
                scheme: name.to_string(),
                n: counts.clone(),
                m,
                theta: cfg.time.theta,
                l2_error: l2,
                max_policy_iters: solution.max_policy_iters(),
                wall_ms: cfg.output.wall_time.then_some(wall),
            });
            if cfg.output.mmatrix_audit {
                let failed = solution.audit_failures.len();
                if failed == 0 {
                    let _ = writeln!(audit_text, "{name} m={m}: all levels pass ({} levels)", solution.audited_levels);
                } else {
                    audit_passed = false;
                    let (level, report) = &solution.audit_failures[0];
                    let _ = writeln!(
                        audit_text,
                        "{name} m={m}: {failed} of {} levels fail; first at level {level}: {}",
                        solution.audited_levels,
                        report.summary()
                    );
                }
            }
            last = Some(solution);
        }
        if cfg.output.mmatrix_audit {
            audit_samples(scheme.as_ref(), &resolved, name, &mut audit_text)?;
        }
        if cfg.output.dump_operator {
            let alpha = cfg.output.dump_control.unwrap_or(controls.hi());
            let op = scheme.assemble(problem, mesh, horizon, &vec![alpha; mesh.unknowns()])?;
            write_with(&out_dir.join(format!("operator_{name}.csv")), |w| export::write_triplets(&op, w))?;
            write_with(&out_dir.join(format!("load_{name}.csv")), |w| export::write_load(&op, w))?;
        }
        if cfg.output.dump_policy {
            let file = if k == 0 { "policy.csv".to_string() } else { format!("policy_{name}.csv") };
            let solution = last.as_ref().expect("at least one step count");
            write_policy(&out_dir.join(file), mesh, solution.policies.last().expect("at least one step"))?;
        }
    }

    write_with(&out_dir.join("errors.csv"), |w| {
        writeln!(w, "{}", ErrorRecord::CSV_HEADER)?;
        for r in &records {
            writeln!(w, "{}", r.csv_row())?;
        }
        Ok(())
    })?;

    let mut orders = Vec::new();
    if convergence {
        let mut text = String::new();
        for &name in cfg.solver.scheme.names() {
            let rows: Vec<ErrorRecord> = records.iter().filter(|r| r.scheme == name).cloned().collect();
            match order_from_records(&rows, horizon) {
                Ok(slope) => {
                    let _ = writeln!(text, "{name} {slope:.6}");
                    orders.push((name.to_string(), slope));
                }
                Err(e) => {
                    let _ = writeln!(text, "{name} unavailable ({e})");
                }
            }
        }
        write_with(&out_dir.join("order.txt"), |w| w.write_all(text.as_bytes()))?;
    }

    let audit = if cfg.output.mmatrix_audit {
        write_with(&out_dir.join("mmatrix.txt"), |w| w.write_all(audit_text.as_bytes()))?;
        Some(audit_passed)
    } else {
        None
    };
    let outcome = RunOutcome { records, orders, audit_passed: audit, out_dir };
    if audit == Some(false) {
        return Err(CliError::Audit(format!("see {}", outcome.out_dir.join("mmatrix.txt").display())));
    }
    Ok(outcome)
}

// E(α) for every sample at τ = 0 and τ = T, reported but not gating
fn audit_samples(
    scheme: &dyn SpatialScheme,
    resolved: &config::Resolved,
    name: &str,
    text: &mut String,
) -> Result<(), CliError> {
    let (problem, mesh) = (resolved.problem.as_ref(), &resolved.mesh);
    for tau in [0.0, problem.horizon()] {
        let mut failing = Vec::new();
        for &alpha in resolved.controls.samples() {
            let op = scheme.assemble(problem, mesh, tau, &vec![alpha; mesh.unknowns()])?;
            let report = m_matrix_check(&op);
            if !report.is_m_matrix {
                failing.push((alpha, report));
            }
        }
        if failing.is_empty() {
            let _ = writeln!(text, "{name} E(tau={tau}): all control samples pass");
        } else {
            let (alpha, report) = &failing[0];
            let _ = writeln!(
                text,
                "{name} E(tau={tau}): {} of {} control samples fail; first alpha={alpha}: {}",
                failing.len(),
                resolved.controls.len(),
                report.summary()
            );
        }
    }
    Ok(())
}

fn write_with(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

fn write_policy(path: &Path, mesh: &crate::mesh::TensorMesh, policy: &[f64]) -> Result<(), CliError> {
    write_with(path, |w| {
        let coords = ["x", "y", "z"];
        let dim = mesh.dim();
        let names: Vec<String> =
            (0..dim).map(|i| coords.get(i).map(|c| c.to_string()).unwrap_or(format!("x{}", i + 1))).collect();
        writeln!(w, "flat_index,{},alpha", names.join(","))?;
        for (flat, alpha) in policy.iter().enumerate() {
            let idx = mesh.multi_index(flat).expect("interior");
            let ordinal = mesh.linearize(&idx).expect("interior");
            let point = mesh.point(idx.as_slice());
            let coords: Vec<String> = point.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{ordinal},{},{alpha:e}", coords.join(","))?;
        }
        Ok(())
    })
}

fn run_validate(cfg: &RunConfig) -> Result<(), CliError> {
    let resolved = cfg.resolve()?;
    let violations = validate(resolved.problem.as_ref(), &resolved.mesh, &resolved.controls);
    if violations.is_empty() {
        println!("no violations on {} probes", 3 * resolved.mesh.unknowns() * resolved.controls.len());
        return Ok(());
    }
    let mut kinds: Vec<(String, usize, f64)> = Vec::new();
    for v in &violations {
        let key = format!("{:?}", v.kind);
        match kinds.iter_mut().find(|k| k.0 == key) {
            Some(k) => {
                k.1 += 1;
                k.2 = k.2.max(v.value.abs());
            }
            None => kinds.push((key, 1, v.value.abs())),
        }
    }
    for (kind, count, worst) in kinds {
        println!("{kind}: {count} probes, largest magnitude {worst:e}");
    }
    Ok(())
}
