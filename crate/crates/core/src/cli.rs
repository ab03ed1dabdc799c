//! Command-line front end: `kernels`, `feasibility`, `solve`, `verify` and
//! `example41`.
//!
//! Exit codes: 0 success, 1 malformed input, 2 non-convergence, 3 degenerate
//! operator, 4 verification failure.

use crate::error::Error;
use crate::funcspace::GridFunction;
use crate::kernels::{make_kernel_set, BcKind};
use crate::oracle::{verify_candidate, VerificationReport};
use crate::problem::{make_preset, PresetParams, ProblemSpec};
use crate::solver::{log_spaced, problem_feasibility, SolutionPair, Solver, SolverOptions};
use crate::fmt_num;
use clap::{Parser, Subcommand};
use log::debug;
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// `bc_residual` above this fails `verify`.
pub const VERIFY_BC_TOL: f64 = 1e-3;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "RETBEAM_THREADS";

#[derive(Parser, Debug)]
#[command(name = "retbeam", version, about = "Solution pairs for fourth-order retarded boundary value problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate the Green's kernel and the gamma cubics.
    Kernels {
        #[arg(long)]
        bc: i64,
        /// Subintervals of [0, 1] per axis.
        #[arg(long, default_value_t = 8)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the radius admissibility value of a problem.
    Feasibility {
        #[arg(long)]
        config: PathBuf,
        /// One or more radii, comma separated.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        rho: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute (rho, lambda) pairs.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Radii, comma separated; overrides the config.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        rhos: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory receiving one profile CSV per converged pair.
        #[arg(long)]
        profiles: Option<PathBuf>,
    },
    /// Re-check pairs written by `solve`.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        /// Read solution profiles from here instead of re-solving.
        #[arg(long)]
        profiles: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in delay example end to end.
    Example41 {
        /// Also write the summary as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Output locations; command-line flags take precedence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub pairs: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// JSON run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: String,
    #[serde(default)]
    pub params: PresetParams,
    #[serde(default)]
    pub bc_j: Option<i64>,
    #[serde(default)]
    pub rhos: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output: OutputPaths,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        cfg.solver.validate()?;
        if let Some(rhos) = &cfg.rhos {
            check_rhos(rhos)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Preset parameters with `bc_j` folded in as `j`.
    pub fn preset_params(&self) -> Result<PresetParams, CliError> {
        let mut params = self.params.clone();
        if let Some(j) = self.bc_j {
            BcKind::new(j)?;
            match params.get("j") {
                Some(&pj) if pj != j as f64 => {
                    return Err(CliError::Config(format!("bc_j = {j} conflicts with params.j = {pj}")));
                }
                _ => {
                    params.insert("j".into(), j as f64);
                }
            }
        }
        Ok(params)
    }

    pub fn spec(&self) -> Result<ProblemSpec, CliError> {
        Ok(make_preset(&self.preset, &self.preset_params()?)?)
    }

    pub fn default_rhos(&self) -> Vec<f64> {
        self.rhos.clone().unwrap_or_else(default_rhos)
    }
}

/// Ten log-spaced radii in `[0.1, 10]`.
pub fn default_rhos() -> Vec<f64> {
    log_spaced(0.1, 10.0, 10)
}

/// `1/(6(1+ρ²))`, the analytic lower bound for the delay example.
pub fn example41_bound(rho: f64) -> f64 {
    1.0 / (6.0 * (1.0 + rho * rho))
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Solve(Error),
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Solve(e) => solver_exit_code(e),
            CliError::Verify(_) => EXIT_VERIFY,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::Verify(m) => f.write_str(m),
            CliError::Solve(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } | Error::DegenerateOperator { .. } => CliError::Solve(e),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn solver_exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
        Error::DegenerateOperator { .. } => EXIT_DEGENERATE,
        _ => EXIT_CONFIG,
    }
}

/// Degenerate operators outrank non-convergence, which outranks success.
fn worst(a: i32, b: i32) -> i32 {
    let rank = |c: i32| match c {
        EXIT_OK => 0,
        EXIT_NONCONVERGENCE => 1,
        EXIT_VERIFY => 2,
        EXIT_DEGENERATE => 3,
        _ => 4,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

fn check_rhos(rhos: &[f64]) -> Result<(), CliError> {
    if rhos.is_empty() {
        return Err(CliError::Config("rhos must not be empty".into()));
    }
    if let Some(bad) = rhos.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(CliError::Config(format!("rho must be positive and finite (got {bad})")));
    }
    Ok(())
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let count: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&c| c > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer (got {raw:?})")))?;
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(count).build_global() {
        // already configured in this process
        debug!("thread pool not rebuilt: {e}");
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match configure_threads().and_then(|_| dispatch(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32, CliError> {
    match cmd {
        Command::Kernels { bc, grid, out } => kernels_cmd(bc, grid, out.as_deref()),
        Command::Feasibility { config, rho, out } => {
            let cfg = RunConfig::load(&config)?;
            feasibility_cmd(&cfg, &rho, out.as_deref())
        }
        Command::Solve {
            config,
            rhos,
            out,
            profiles,
        } => {
            let cfg = RunConfig::load(&config)?;
            let rhos = rhos.unwrap_or_else(|| cfg.default_rhos());
            let out = out.or_else(|| cfg.output.pairs.clone());
            let profiles = profiles.or_else(|| cfg.output.profiles.clone());
            solve_cmd(&cfg, &rhos, out.as_deref(), profiles.as_deref())
        }
        Command::Verify {
            config,
            pairs,
            profiles,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            let out = out.or_else(|| cfg.output.report.clone());
            verify_cmd(&cfg, &pairs, profiles.as_deref(), out.as_deref())
        }
        Command::Example41 { out } => example41_cmd(out.as_deref()),
    }
}

fn kernels_cmd(bc: i64, n: usize, out: Option<&Path>) -> Result<i32, CliError> {
    let ks = make_kernel_set(BcKind::new(bc)?);
    if n == 0 {
        return Err(CliError::Config("--grid must be positive".into()));
    }
    let pts: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let mut w = csv::Writer::from_writer(open_out(out)?);
    w.write_record(["kind", "s", "t", "value", "dt", "dtt"])?;
    for &s in &pts {
        for &t in &pts {
            w.write_record([
                "k".to_string(),
                fmt_num(s),
                fmt_num(t),
                fmt_num(ks.k(t, s, 0)),
                fmt_num(ks.k(t, s, 1)),
                fmt_num(ks.k(t, s, 2)),
            ])?;
        }
    }
    for i in 0..4 {
        for &t in &pts {
            w.write_record([
                format!("gamma{i}"),
                String::new(),
                fmt_num(t),
                fmt_num(ks.gamma(i, t, 0)),
                fmt_num(ks.gamma(i, t, 1)),
                fmt_num(ks.gamma(i, t, 2)),
            ])?;
        }
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn feasibility_cmd(cfg: &RunConfig, rhos: &[f64], out: Option<&Path>) -> Result<i32, CliError> {
    check_rhos(rhos)?;
    let spec = cfg.spec()?;
    let mut w = csv::Writer::from_writer(open_out(out)?);
    w.write_record(["rho", "condc", "bound"])?;
    for &rho in rhos {
        let value = problem_feasibility(&spec, rho, &cfg.solver)?.ok_or_else(|| {
            CliError::Config(format!("preset {} defines no lower bounds", cfg.preset))
        })?;
        let bound = if cfg.preset == "example41" {
            fmt_num(example41_bound(rho))
        } else {
            String::new()
        };
        w.write_record([fmt_num(rho), fmt_num(value), bound])?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}

/// Profile file name for the `k`-th pair of a sweep.
pub fn profile_name(k: usize) -> String {
    format!("pair_{k:03}.csv")
}

fn write_profile(dir: &Path, k: usize, u: &GridFunction) -> Result<(), CliError> {
    let path = dir.join(profile_name(k));
    let file = File::create(&path).map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    u.write_csv(BufWriter::new(file))?;
    Ok(())
}

fn pair_record(p: &SolutionPair) -> [String; 6] {
    [
        fmt_num(p.rho),
        fmt_num(p.lambda),
        fmt_num(p.residual),
        p.iterations.to_string(),
        fmt_num(p.min_u),
        fmt_num(p.norm_check),
    ]
}

fn solve_cmd(cfg: &RunConfig, rhos: &[f64], out: Option<&Path>, profiles: Option<&Path>) -> Result<i32, CliError> {
    check_rhos(rhos)?;
    let spec = cfg.spec()?;
    let solver = Solver::new(&spec, cfg.solver)?;
    if let Some(dir) = profiles {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    }
    let mut code = EXIT_OK;
    let mut w = csv::Writer::from_writer(open_out(out)?);
    w.write_record(["rho", "lambda", "residual", "iterations", "min_u", "norm_check"])?;
    for (k, (rho, res)) in rhos.iter().zip(solver.sweep(rhos)).enumerate() {
        match res {
            Ok(pair) => {
                w.write_record(pair_record(&pair))?;
                if let Some(dir) = profiles {
                    write_profile(dir, k, &pair.u)?;
                }
            }
            Err(e) => {
                eprintln!("rho = {rho}: {e}");
                code = worst(code, solver_exit_code(&e));
            }
        }
    }
    w.flush()?;
    Ok(code)
}

#[derive(Deserialize)]
struct PairRow {
    rho: f64,
    lambda: f64,
}

fn read_pairs(path: &Path) -> Result<Vec<PairRow>, CliError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let rows = rd
        .deserialize()
        .collect::<Result<Vec<PairRow>, _>>()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if rows.is_empty() {
        return Err(CliError::Config(format!("{}: no pairs", path.display())));
    }
    for r in &rows {
        if !(r.rho > 0.0 && r.lambda >= 0.0) {
            return Err(CliError::Config(format!("bad pair (rho = {}, lambda = {})", r.rho, r.lambda)));
        }
    }
    Ok(rows)
}

fn report_ok(r: &VerificationReport) -> bool {
    r.rhs_sign_ok && r.bc_residual.is_finite() && r.bc_residual <= VERIFY_BC_TOL
}

fn verify_cmd(cfg: &RunConfig, pairs: &Path, profiles: Option<&Path>, out: Option<&Path>) -> Result<i32, CliError> {
    let rows = read_pairs(pairs)?;
    let spec = cfg.spec()?;
    let grid = spec.grid(cfg.solver.n)?;
    let rhos: Vec<f64> = rows.iter().map(|r| r.rho).collect();
    // candidate profiles: from disk, or re-solved with the same options
    let candidates: Vec<Result<GridFunction, CliError>> = match profiles {
        Some(dir) => (0..rows.len())
            .map(|k| {
                let path = dir.join(profile_name(k));
                let file = File::open(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                Ok(GridFunction::read_csv(grid, io::BufReader::new(file))?)
            })
            .collect(),
        None => Solver::new(&spec, cfg.solver)?
            .sweep(&rhos)
            .into_iter()
            .map(|r| r.map(|p| p.u).map_err(CliError::from))
            .collect(),
    };
    let mut code = EXIT_OK;
    let mut w = csv::Writer::from_writer(open_out(out)?);
    w.write_record([
        "rho",
        "lambda",
        "max_deviation",
        "bc_residual",
        "ic_u",
        "ic_du",
        "ic_ddu",
        "rhs_sign_ok",
        "oracle_min",
    ])?;
    for (row, cand) in rows.iter().zip(candidates) {
        let u = match cand {
            Ok(u) => u,
            Err(e) => {
                eprintln!("rho = {}: {e}", row.rho);
                code = worst(code, e.exit_code());
                continue;
            }
        };
        let rep = verify_candidate(&spec, row.lambda, &u);
        if !report_ok(&rep) {
            eprintln!("rho = {}: verification failed (bc_residual = {:e})", row.rho, rep.bc_residual);
            code = worst(code, EXIT_VERIFY);
        }
        w.write_record([
            fmt_num(row.rho),
            fmt_num(row.lambda),
            fmt_num(rep.max_deviation),
            fmt_num(rep.bc_residual),
            fmt_num(rep.ic_residuals[0]),
            fmt_num(rep.ic_residuals[1]),
            fmt_num(rep.ic_residuals[2]),
            rep.rhs_sign_ok.to_string(),
            fmt_num(rep.oracle_min),
        ])?;
    }
    w.flush()?;
    Ok(code)
}

/// One line of the `example41` summary.
#[derive(Clone, Debug)]
pub struct SummaryRow {
    pub rho: f64,
    pub condc: f64,
    pub bound: f64,
    pub pair: Result<(SolutionPair, VerificationReport), Error>,
}

/// Feasibility, default sweep and verification for the built-in example.
pub fn example41_summary(opts: &SolverOptions) -> Result<Vec<SummaryRow>, CliError> {
    let spec = make_preset("example41", &PresetParams::new())?;
    let rhos = default_rhos();
    let solver = Solver::new(&spec, *opts)?;
    let mut rows = Vec::with_capacity(rhos.len());
    for (rho, res) in rhos.iter().zip(solver.sweep(&rhos)) {
        let condc = problem_feasibility(&spec, *rho, opts)?.unwrap_or(f64::NAN);
        let pair = res.map(|p| {
            let rep = verify_candidate(&spec, p.lambda, &p.u);
            (p, rep)
        });
        rows.push(SummaryRow {
            rho: *rho,
            condc,
            bound: example41_bound(*rho),
            pair,
        });
    }
    Ok(rows)
}

fn example41_cmd(out: Option<&Path>) -> Result<i32, CliError> {
    let rows = example41_summary(&SolverOptions::default())?;
    let header = [
        "rho",
        "lambda",
        "residual",
        "iterations",
        "condc",
        "bound",
        "max_deviation",
        "bc_residual",
    ];
    let mut code = EXIT_OK;
    let mut table = Vec::with_capacity(rows.len());
    for row in &rows {
        if row.condc.is_nan() || row.condc < row.bound {
            eprintln!("rho = {}: condc {} below bound {}", row.rho, row.condc, row.bound);
            code = worst(code, EXIT_VERIFY);
        }
        let cells = match &row.pair {
            Ok((p, rep)) => {
                if !report_ok(rep) {
                    code = worst(code, EXIT_VERIFY);
                }
                [
                    fmt_num(p.rho),
                    fmt_num(p.lambda),
                    fmt_num(p.residual),
                    p.iterations.to_string(),
                    fmt_num(row.condc),
                    fmt_num(row.bound),
                    fmt_num(rep.max_deviation),
                    fmt_num(rep.bc_residual),
                ]
            }
            Err(e) => {
                eprintln!("rho = {}: {e}", row.rho);
                code = worst(code, solver_exit_code(e));
                let na = || "nan".to_string();
                [fmt_num(row.rho), na(), na(), na(), fmt_num(row.condc), fmt_num(row.bound), na(), na()]
            }
        };
        table.push(cells);
    }
    let mut stdout = io::stdout().lock();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| table.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    writeln!(stdout, "{}", line(header.to_vec()))?;
    for r in &table {
        writeln!(stdout, "{}", line(r.iter().map(String::as_str).collect()))?;
    }
    stdout.flush()?;
    if let Some(path) = out {
        let mut w = csv::Writer::from_writer(open_out(Some(path))?);
        w.write_record(header)?;
        for r in &table {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(code)
}
