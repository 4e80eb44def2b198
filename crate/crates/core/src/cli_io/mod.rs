//! Command-line front end: argument parsing, command dispatch, structured
//! outputs and run manifests.

pub mod format;
pub mod manifest;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::consumption_ode::{check_lambda_sufficient, solve_g, GParams};
use crate::error::{Error, Result};
use crate::hamiltonian::{saddle_with, HamiltonianInputs, PairSearch, SaddleOptions, SaddleSolution};
use crate::model_config::{load_spec, LambdaSpec, MarketSpec};
use crate::opportunity_pde::{
    bsde_residual, solve_pde, OpportunitySolution, PdeOptions, ResidualConfig, ResidualStats,
};
use crate::par::Execution;
use crate::simulator::{verify_martingale, AdversePolicy, Scenario, SimConfig, Verdict, VerdictReport};
use crate::strategy::{strategy_at, StrategySlice};
use format::{fmt_f64, to_json, Table};
use manifest::{config_hash, manifest_path, sha256_file, sha256_hex, OutputRecord, RunManifest};

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "ROBUST_FORWARD_THREADS";

#[derive(Debug, Clone, Parser)]
#[command(
    name = "robust-forward",
    version,
    about = "Robust forward investment and consumption preferences"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    /// Manifest to write (or, for `reproduce`, to read). Defaults to
    /// `<first output>.manifest.json`.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Parse and validate a config file.
    Validate(ConfigArg),
    /// Saddle point of the randomized Hamiltonian at one state.
    Saddle(SaddleArgs),
    /// Solve the opportunity-process equation on a grid.
    Solve(SolveArgs),
    /// Normalizing process and consumption rule along a frozen factor.
    Consumption(ConsumptionArgs),
    /// Strategy and worst case at `(t, v)` or along a sweep in `v`.
    Strategy(StrategyArgs),
    /// Monte Carlo drift test of the value process.
    Verify(VerifyArgs),
    /// Re-run a recorded command and compare output hashes.
    Reproduce,
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArg {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, alias = "grid", default_value_t = 201)]
    pub grid_n: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

impl GridArgs {
    fn options(&self, exec: Execution) -> PdeOptions {
        PdeOptions {
            execution: exec,
            ..PdeOptions::with_grid(self.grid_n, self.tol)
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SaddleArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Factor value; the domain midpoint by default.
    #[arg(long)]
    pub v: Option<f64>,
    /// Comma-separated `z`, one entry per asset; zeros by default.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub z: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub zbar: f64,
    /// Search every grid pair instead of the chord endpoints.
    #[arg(long)]
    pub exhaustive: bool,
    /// Also run the pointwise oracle and report the duality gap.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also run the pathwise residual check.
    #[arg(long)]
    pub residual: bool,
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ConsumptionArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    pub tmax: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub v0: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StrategyArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub v: Option<f64>,
    /// `vlo:vhi:n`; writes one CSV row per point.
    #[arg(long, allow_hyphen_values = true)]
    pub sweep: Option<String>,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// optimal-vs-worst, suboptimal-vs-worst or optimal-vs-adverse.
    #[arg(long, default_value = "optimal-vs-worst")]
    pub scenario: String,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub suboptimal_scale: f64,
    /// Comma-separated constant adverse drift; with `--adverse-sigma`.
    #[arg(long, value_delimiter = ',')]
    pub adverse_b: Vec<f64>,
    /// Comma-separated constant adverse volatility, one Dirac mass per asset.
    #[arg(long, value_delimiter = ',')]
    pub adverse_sigma: Vec<f64>,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance_rel: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub v0: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Per-path CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary JSON file, also printed to stdout.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Saddle(_) => "saddle",
            Command::Solve(_) => "solve",
            Command::Consumption(_) => "consumption",
            Command::Strategy(_) => "strategy",
            Command::Verify(_) => "verify",
            Command::Reproduce => "reproduce",
        }
    }

    fn config_mut(&mut self) -> Option<&mut PathBuf> {
        match self {
            Command::Validate(a) => Some(&mut a.config),
            Command::Saddle(a) => Some(&mut a.config),
            Command::Solve(a) => Some(&mut a.config),
            Command::Consumption(a) => Some(&mut a.config),
            Command::Strategy(a) => Some(&mut a.config),
            Command::Verify(a) => Some(&mut a.config),
            Command::Reproduce => None,
        }
    }

    fn outputs_mut(&mut self) -> Vec<&mut PathBuf> {
        match self {
            Command::Saddle(a) => a.out.iter_mut().collect(),
            Command::Solve(a) => a.out.iter_mut().collect(),
            Command::Consumption(a) => a.out.iter_mut().collect(),
            Command::Strategy(a) => a.out.iter_mut().collect(),
            Command::Verify(a) => a.out.iter_mut().chain(a.summary.iter_mut()).collect(),
            Command::Validate(_) | Command::Reproduce => Vec::new(),
        }
    }

    fn outputs(&self) -> Vec<PathBuf> {
        self.clone().outputs_mut().into_iter().map(|p| p.clone()).collect()
    }
}

/// What a command reports back for the manifest.
struct Outcome {
    spec: Option<MarketSpec>,
    seed: Option<u64>,
    /// Error to raise after outputs and manifest are written.
    deferred: Option<Error>,
}

impl Outcome {
    fn new(spec: MarketSpec) -> Self {
        Self {
            spec: Some(spec),
            seed: None,
            deferred: None,
        }
    }
}

/// Sets the global worker count from the environment; a no-op when unset or
/// when the pool already exists.
pub fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

/// Runs one command line (without the program name), writing the primary
/// result to `stdout`.
pub fn run(args: &[String], stdout: &mut dyn Write) -> Result<()> {
    let argv = std::iter::once("robust-forward".to_string()).chain(args.iter().cloned());
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            write!(stdout, "{e}")?;
            return Ok(());
        }
        Err(e) => return Err(Error::Usage(e.to_string())),
    };
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    if let Command::Reproduce = cli.command {
        let path = cli
            .manifest
            .ok_or_else(|| Error::Usage("reproduce needs --manifest <path>".into()))?;
        return reproduce(&path, exec, stdout);
    }

    let started_at = chrono::Utc::now().to_rfc3339();
    let mut buf = Vec::new();
    let outcome = execute(&cli.command, exec, &mut buf)?;
    stdout.write_all(&buf)?;

    let outputs = cli.command.outputs();
    if let Some(mpath) = manifest_path(cli.manifest.as_deref(), outputs.first().map(PathBuf::as_path)) {
        let config_path = cli.command.clone().config_mut().map(|p| p.display().to_string());
        let records = outputs
            .iter()
            .map(|p| {
                Ok(OutputRecord {
                    path: p.display().to_string(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let m = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: cli.command.name().to_string(),
            args: args.to_vec(),
            cwd: std::env::current_dir()?.display().to_string(),
            config_path,
            config_hash: outcome.spec.as_ref().map(config_hash),
            seed: outcome.seed,
            started_at,
            finished_at: chrono::Utc::now().to_rfc3339(),
            outputs: records,
            stdout_sha256: sha256_hex(&buf),
        };
        m.save(&mpath)?;
    }
    match outcome.deferred {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn execute(cmd: &Command, exec: Execution, out: &mut Vec<u8>) -> Result<Outcome> {
    match cmd {
        Command::Validate(a) => cmd_validate(a, out),
        Command::Saddle(a) => cmd_saddle(a, out),
        Command::Solve(a) => cmd_solve(a, exec, out),
        Command::Consumption(a) => cmd_consumption(a, exec, out),
        Command::Strategy(a) => cmd_strategy(a, exec, out),
        Command::Verify(a) => cmd_verify(a, exec, out),
        Command::Reproduce => Err(Error::Usage("reproduce cannot be nested".into())),
    }
}

fn emit<T: Serialize>(value: &T, out: &mut Vec<u8>, file: Option<&Path>) -> Result<()> {
    let text = to_json(value)?;
    out.extend_from_slice(text.as_bytes());
    if let Some(p) = file {
        std::fs::write(p, text)?;
    }
    Ok(())
}

fn midpoint(spec: &MarketSpec) -> f64 {
    let d = spec.factor.v_domain;
    0.5 * (d.lo + d.hi)
}

#[derive(Serialize)]
struct ValidateReport {
    valid: bool,
    n_assets: usize,
    config_hash: String,
}

fn cmd_validate(a: &ConfigArg, out: &mut Vec<u8>) -> Result<Outcome> {
    let spec = load_spec(&a.config)?;
    emit(
        &ValidateReport {
            valid: true,
            n_assets: spec.n_assets,
            config_hash: config_hash(&spec),
        },
        out,
        None,
    )?;
    Ok(Outcome::new(spec))
}

#[derive(Serialize)]
struct SaddleReport {
    v: f64,
    inputs: HamiltonianInputs,
    solution: SaddleSolution,
}

fn cmd_saddle(a: &SaddleArgs, out: &mut Vec<u8>) -> Result<Outcome> {
    let spec = load_spec(&a.config)?;
    let v = a.v.unwrap_or_else(|| midpoint(&spec));
    if !spec.factor.v_domain.contains(v) {
        return Err(Error::validation("v", "must lie in the factor domain"));
    }
    let z = if a.z.is_empty() {
        vec![0.0; spec.n_assets]
    } else {
        a.z.clone()
    };
    let inputs = HamiltonianInputs::at_factor(&spec, v, z, a.zbar);
    let opts = SaddleOptions {
        pairs: if a.exhaustive {
            PairSearch::Exhaustive
        } else {
            PairSearch::UpperChord
        },
        verify: a.oracle,
        ..SaddleOptions::default()
    };
    let solution = saddle_with(&spec, &inputs, &opts)?;
    emit(&SaddleReport { v, inputs, solution }, out, a.out.as_deref())?;
    Ok(Outcome::new(spec))
}

#[derive(Serialize)]
struct SolveReport {
    grid_n: usize,
    h: f64,
    iterations: usize,
    tol: f64,
    residual_inf_norm: f64,
    upwind_nodes: usize,
    y_inf_norm: f64,
    uniform_bound: f64,
    y_mid: f64,
    residual: Option<ResidualStats>,
}

pub fn solution_table(sol: &OpportunitySolution) -> Table {
    let mut t = Table::new(&["v", "y", "y_prime", "y_second", "z", "z_bar", "hstar", "residual"]);
    for j in 0..sol.v_grid.len() {
        t.push_floats(&[
            sol.v_grid[j],
            sol.y[j],
            sol.y_prime[j],
            sol.y_second[j],
            sol.z_of_v[j],
            sol.zbar_of_v[j],
            sol.hstar[j],
            sol.residual[j],
        ]);
    }
    t
}

fn cmd_solve(a: &SolveArgs, exec: Execution, out: &mut Vec<u8>) -> Result<Outcome> {
    let spec = load_spec(&a.config)?;
    let sol = solve_pde(&spec, &a.grid.options(exec))?;
    let residual = if a.residual {
        Some(bsde_residual(
            &spec,
            &sol,
            &ResidualConfig {
                horizon: a.horizon,
                n_paths: a.paths,
                dt: a.dt,
                seed: a.seed,
                v0: None,
                execution: exec,
            },
        )?)
    } else {
        None
    };
    if let Some(p) = &a.out {
        solution_table(&sol).write(p)?;
    }
    emit(
        &SolveReport {
            grid_n: sol.v_grid.len(),
            h: sol.h(),
            iterations: sol.iterations,
            tol: sol.tol,
            residual_inf_norm: sol.residual_inf_norm,
            upwind_nodes: sol.upwind_nodes,
            y_inf_norm: sol.y_inf_norm(),
            uniform_bound: sol.uniform_bound(),
            y_mid: sol.y_at(midpoint(&spec)),
            residual,
        },
        out,
        None,
    )?;
    let mut o = Outcome::new(spec);
    o.seed = a.residual.then_some(a.seed);
    Ok(o)
}

#[derive(Serialize)]
struct ConsumptionReport {
    v0: f64,
    y0: f64,
    t_max: f64,
    steps: usize,
    admissible: bool,
    margin: f64,
    violation_time: Option<f64>,
    /// Closed-form sufficient condition, for discounted weights only.
    lambda_sufficient: Option<bool>,
}

fn cmd_consumption(a: &ConsumptionArgs, exec: Execution, out: &mut Vec<u8>) -> Result<Outcome> {
    let spec = load_spec(&a.config)?;
    let v0 = a.v0.unwrap_or_else(|| midpoint(&spec));
    if !spec.factor.v_domain.contains(v0) {
        return Err(Error::validation("v0", "must lie in the factor domain"));
    }
    let sol = solve_pde(&spec, &a.grid.options(exec))?;
    let y0 = sol.y_at(v0);
    let curve = solve_g(|_| y0, &GParams::from(&spec), a.tmax, a.dt)?;
    if let Some(p) = &a.out {
        let mut t = Table::new(&["t", "Y", "g", "lambda", "c_star", "margin"]);
        for k in 0..curve.t_grid.len() {
            t.push_floats(&[
                curve.t_grid[k],
                curve.y[k],
                curve.g[k],
                curve.lambda_vals[k],
                curve.c_star[k],
                curve.margin_path[k],
            ]);
        }
        t.write(p)?;
    }
    let lambda_sufficient = match spec.lambda {
        LambdaSpec::Discounted {
            alpha_bar,
            beta_lo,
            d_lo,
        } => Some(check_lambda_sufficient(
            spec.g0,
            spec.kappa_rra,
            alpha_bar,
            beta_lo,
            d_lo,
        )),
        _ => None,
    };
    emit(
        &ConsumptionReport {
            v0,
            y0,
            t_max: a.tmax,
            steps: curve.t_grid.len().saturating_sub(1),
            admissible: curve.admissible,
            margin: curve.margin,
            violation_time: curve.violation_time,
            lambda_sufficient,
        },
        out,
        None,
    )?;
    let mut o = Outcome::new(spec);
    o.deferred = curve.ensure_admissible().err();
    Ok(o)
}

fn parse_sweep(s: &str) -> Result<(f64, f64, usize)> {
    let bad = || Error::Usage(format!("--sweep expects vlo:vhi:n, got {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n < 2 || !(lo < hi) {
        return Err(bad());
    }
    Ok((lo, hi, n))
}

fn strategy_table(n_assets: usize, slices: &[StrategySlice]) -> Table {
    let mut header = vec!["t".to_string(), "v".to_string()];
    for i in 0..n_assets {
        for f in ["pi_star", "b_star", "m_u_lo", "m_u_hi", "m_w", "rho_eff"] {
            header.push(format!("{f}_{i}"));
        }
    }
    header.push("c_star".into());
    header.push("h_star".into());
    let mut t = Table {
        header,
        rows: Vec::new(),
    };
    for s in slices {
        let mut row = vec![s.t, s.v];
        for i in 0..n_assets {
            let m = s.m_star[i];
            row.extend_from_slice(&[s.pi_star[i], s.b_star[i], m.u_lo, m.u_hi, m.w, s.rho_eff[i]]);
        }
        row.push(s.c_star);
        row.push(s.h_star);
        t.push_floats(&row);
    }
    t
}

fn cmd_strategy(a: &StrategyArgs, exec: Execution, out: &mut Vec<u8>) -> Result<Outcome> {
    let spec = load_spec(&a.config)?;
    if !(a.dt > 0.0) || !(a.t >= 0.0) {
        return Err(Error::validation("t", "need t ≥ 0 and dt > 0"));
    }
    let sol = solve_pde(&spec, &a.grid.options(exec))?;
    let v = a.v.unwrap_or_else(|| midpoint(&spec));
    let y0 = sol.y_at(v);
    let t_max = ((a.t / a.dt).ceil().max(1.0)) * a.dt;
    let curve = solve_g(|_| y0, &GParams::from(&spec), t_max, a.dt)?;
    match &a.sweep {
        None => {
            let slice = strategy_at(&spec, &sol, &curve, a.t, v)?;
            emit(&slice, out, a.out.as_deref())?;
        }
        Some(s) => {
            let (lo, hi, n) = parse_sweep(s)?;
            let vs: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
            let slices = crate::par::try_map_indexed(n, exec, |k| strategy_at(&spec, &sol, &curve, a.t, vs[k]))?;
            let table = strategy_table(spec.n_assets, &slices);
            let bytes = table.to_bytes()?;
            match &a.out {
                Some(p) => std::fs::write(p, &bytes)?,
                None => out.extend_from_slice(&bytes),
            }
        }
    }
    Ok(Outcome::new(spec))
}

#[derive(Serialize)]
struct VerifySummary {
    seed: u64,
    n_steps: usize,
    dt: f64,
    horizon: f64,
    exits: usize,
    qv_b_ratio: f64,
    report: VerdictReport,
}

fn cmd_verify(a: &VerifyArgs, exec: Execution, out: &mut Vec<u8>) -> Result<Outcome> {
    let spec = load_spec(&a.config)?;
    let scenario: Scenario = a.scenario.parse()?;
    let adverse = match (a.adverse_b.is_empty(), a.adverse_sigma.is_empty()) {
        (true, true) => AdversePolicy::Boundary,
        (false, false) => AdversePolicy::Constant {
            b: a.adverse_b.clone(),
            sigma: a.adverse_sigma.clone(),
        },
        _ => return Err(Error::Usage("--adverse-b and --adverse-sigma go together".into())),
    };
    let sim = SimConfig {
        n_paths: a.paths,
        dt: a.dt,
        horizon: a.horizon,
        seed: a.seed,
        scenario,
        adverse,
        suboptimal_scale: a.suboptimal_scale,
        v0: a.v0,
        tolerance_rel: a.tolerance_rel,
        record_paths: 0,
        execution: exec,
        ..SimConfig::default()
    };
    let sol = solve_pde(&spec, &a.grid.options(exec))?;
    let v0 = a.v0.unwrap_or_else(|| midpoint(&spec));
    let y0 = sol.y_at(v0);
    let curve = solve_g(|_| y0, &GParams::from(&spec), a.horizon, a.dt)?;
    let (report, bundle) = verify_martingale(&spec, &sol, &curve, &sim)?;
    if let Some(p) = &a.out {
        let mut t = Table::new(&["path_id", "R_0", "R_T", "exit_count"]);
        for s in &bundle.paths {
            t.push(vec![
                s.path_id.to_string(),
                fmt_f64(s.r0),
                fmt_f64(s.r_t),
                s.exits.to_string(),
            ]);
        }
        t.write(p)?;
    }
    let verdict = report.verdict;
    let summary = VerifySummary {
        seed: a.seed,
        n_steps: bundle.n_steps,
        dt: bundle.dt,
        horizon: bundle.horizon,
        exits: bundle.exits,
        qv_b_ratio: bundle.qv_b_ratio,
        report: report.clone(),
    };
    emit(&summary, out, a.summary.as_deref())?;
    let mut o = Outcome::new(spec);
    o.seed = Some(a.seed);
    o.deferred = match verdict {
        Verdict::Pass => None,
        Verdict::Fail => Some(Error::Check(format!(
            "{scenario} verdict FAIL (drift {:e})",
            report.drift
        ))),
        Verdict::Inconclusive => report.into_result().err(),
    };
    Ok(o)
}

#[derive(Serialize)]
struct OutputCheck {
    path: String,
    expected: String,
    actual: String,
    matches: bool,
}

#[derive(Serialize)]
struct ReproduceReport {
    manifest: String,
    command: String,
    stdout_matches: bool,
    outputs: Vec<OutputCheck>,
    all_match: bool,
}

/// Re-runs the command recorded in a manifest with outputs redirected to a
/// scratch directory, and compares content hashes.
pub fn reproduce(path: &Path, exec_override: Execution, stdout: &mut dyn Write) -> Result<()> {
    let m = RunManifest::load(path)?;
    let argv = std::iter::once("robust-forward".to_string()).chain(m.args.iter().cloned());
    let cli =
        Cli::try_parse_from(argv).map_err(|e| Error::ConfigMismatch(format!("manifest args do not parse: {e}")))?;
    let mut cmd = cli.command;
    if let Command::Reproduce = cmd {
        return Err(Error::ConfigMismatch("manifest records a reproduce run".into()));
    }
    if let Some(c) = cmd.config_mut() {
        *c = m.resolve(&c.display().to_string());
    }
    let scratch = std::env::temp_dir().join(format!(
        "robust-forward-reproduce-{}-{}",
        std::process::id(),
        chrono::Utc::now().timestamp_nanos_opt().unwrap_or_default()
    ));
    std::fs::create_dir_all(&scratch)?;
    let mut fresh = Vec::new();
    for (k, p) in cmd.outputs_mut().into_iter().enumerate() {
        let name = p
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        *p = scratch.join(format!("{k}-{name}"));
        fresh.push(p.clone());
    }
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        exec_override
    };

    let result = (|| {
        let mut buf = Vec::new();
        let outcome = execute(&cmd, exec, &mut buf)?;
        if let (Some(want), Some(spec)) = (&m.config_hash, &outcome.spec) {
            if *want != config_hash(spec) {
                return Err(Error::ConfigMismatch(format!(
                    "config {} changed since the recorded run",
                    m.config_path.as_deref().unwrap_or("?")
                )));
            }
        }
        if fresh.len() != m.outputs.len() {
            return Err(Error::ConfigMismatch("output list differs from the manifest".into()));
        }
        let outputs = m
            .outputs
            .iter()
            .zip(&fresh)
            .map(|(rec, p)| {
                let actual = sha256_file(p)?;
                Ok(OutputCheck {
                    path: rec.path.clone(),
                    matches: actual == rec.sha256,
                    expected: rec.sha256.clone(),
                    actual,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let stdout_matches = sha256_hex(&buf) == m.stdout_sha256;
        let all_match = stdout_matches && outputs.iter().all(|o| o.matches);
        Ok(ReproduceReport {
            manifest: path.display().to_string(),
            command: m.command.clone(),
            stdout_matches,
            outputs,
            all_match,
        })
    })();
    let _ = std::fs::remove_dir_all(&scratch);
    let report = result?;
    stdout.write_all(to_json(&report)?.as_bytes())?;
    if report.all_match {
        Ok(())
    } else {
        Err(Error::Check("reproduced outputs differ from the manifest".into()))
    }
}

/// Entry point for the binary: runs and maps errors to exit codes.
pub fn main_with_args(args: Vec<String>) -> i32 {
    if let Err(e) = init_threads() {
        eprintln!("robust-forward: {e}");
        return e.exit_code();
    }
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&args, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("robust-forward: {e}");
            e.exit_code()
        }
    }
}
