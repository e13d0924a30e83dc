//! Command-line driver.
//!
//! Exit codes: 0 success or passing verdict, 1 failing verdict, 2 usage or
//! configuration error, 3 singular matrix.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;

use crate::analysis::{
    directional_matrix, hyperbolicity_scan_with, invariance_suite, random_rotation, spectrum_with,
    symmetrization_check, InvarianceReport, ScanOptions, Tolerances, TOL_COND, TOL_IMAG,
};
use crate::assembly::{assemble_system, assemble_system_bgk, preset, InnerProjection, ModelSpec};
use crate::error::{Error, Result};
use crate::export;
use crate::projection::validate_projection;
use crate::solver::{run, Boundary, Grid1D, InitialCondition, SolverConfig};
use crate::state::{maxwellian_state, sample_state, StateVector};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SINGULAR: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "moment-forge", version, about = "Derive, analyse and simulate hyperbolic moment systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Assemble B, A_d (or Grad-type fluxes) and the BGK source at a state.
    Derive(DeriveArgs),
    /// Spectrum and hyperbolicity verdict of the directional matrix at a state.
    Spectrum(SpectrumArgs),
    /// Sample random states and directions and count hyperbolic verdicts.
    Scan(ScanArgs),
    /// Rotational and Galilean spectral checks at a state.
    Invariance(InvarianceArgs),
    /// Run the 1D finite-volume solver.
    Simulate(SimulateArgs),
    /// Check projection identities, invertibility of B and symmetrizability.
    Validate(ValidateArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Ps1 {
    With,
    Without,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Preset name, e.g. HME1D, HMEND, AHME, HR13, QBMEND.
    #[arg(long)]
    model: String,
    /// Moment order M (defaults to 3).
    #[arg(short = 'M', long = "order")]
    order: Option<usize>,
    /// Spatial dimension D (defaults to the state's; otherwise 1 for 1D presets and 3 for the rest).
    #[arg(short = 'D', long = "dim")]
    dim: Option<usize>,
    /// Inner projection in the scaled-velocity θ-derivative.
    #[arg(long, value_enum)]
    ps1: Option<Ps1>,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file (or directory for CSV); stdout when omitted.
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct ToleranceArgs {
    #[arg(long, default_value_t = TOL_IMAG)]
    tol_imag: f64,
    #[arg(long, default_value_t = TOL_COND)]
    tol_cond: f64,
}

impl ToleranceArgs {
    fn get(&self) -> Tolerances {
        Tolerances { imag: self.tol_imag, cond: self.tol_cond }
    }
}

#[derive(Args, Debug)]
struct DeriveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// maxwellian:rho,u1,..,uD,theta | file:PATH | sample:SEED[,AMPLITUDE] | inline JSON
    #[arg(long)]
    state: String,
    /// Fill the BGK source with this relaxation time.
    #[arg(long)]
    tau: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    state: String,
    /// Unit direction n, comma separated (defaults to e₁).
    #[arg(long)]
    direction: Option<String>,
    #[command(flatten)]
    tol: ToleranceArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum number of stored witnesses.
    #[arg(long, default_value_t = 10)]
    witnesses: usize,
    /// Also record the symmetrization residual of every trial.
    #[arg(long)]
    symmetrization: bool,
    #[command(flatten)]
    tol: ToleranceArgs,
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InvarianceArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    state: String,
    /// Seed for the random rotations.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    rotations: u64,
    /// Galilean shift Δu, comma separated (defaults to 0.5 in every direction).
    #[arg(long)]
    shift: Option<String>,
    #[arg(long)]
    direction: Option<String>,
    /// Pass threshold for the spectral errors.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// sod | sod-heat-flux[:AMPLITUDE] | uniform:rho,u,theta | wave[:AMPLITUDE] | file:PATH
    #[arg(long, default_value = "sod")]
    initial: String,
    #[arg(long, default_value_t = 200)]
    cells: usize,
    #[arg(long, default_value_t = 0.1)]
    t_end: f64,
    #[arg(long, default_value_t = 0.5)]
    cfl: f64,
    /// Relaxation time ("inf" disables collisions).
    #[arg(long, default_value_t = f64::INFINITY)]
    tau: f64,
    #[arg(long, value_enum, default_value = "copy")]
    boundary: BoundaryArg,
    /// Number of snapshots after t = 0.
    #[arg(long, default_value_t = 1)]
    snapshots: usize,
    #[arg(long, default_value_t = 1_000_000)]
    max_steps: usize,
    /// Existing directory receiving snapshot CSVs and diagnostics.json.
    #[arg(long, short = 'o')]
    output: PathBuf,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum BoundaryArg {
    Copy,
    Periodic,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// State at which the state-dependent checks run (Maxwellian by default).
    #[arg(long)]
    state: Option<String>,
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

/// Failure carrying its exit code.
struct Fail(i32, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(exit_code(&e), e.to_string())
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Singular(_) => EXIT_SINGULAR,
        Error::NonHyperbolicCell { .. } | Error::Positivity { .. } => EXIT_VERDICT,
        _ => EXIT_USAGE,
    }
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("'{t}' is not a number"))))
        .collect()
}

/// D used when neither -D nor the state fixes it.
fn natural_dim(name: &str) -> usize {
    if name.ends_with("1D") || name == "QBMEAltProjection" {
        1
    } else {
        3
    }
}

fn build_model(args: &ModelArgs, state_dim: Option<usize>) -> Result<ModelSpec> {
    let dim = args.dim.or(state_dim).unwrap_or_else(|| natural_dim(&args.model));
    let spec = preset(&args.model, args.order.unwrap_or(3), dim)?;
    Ok(match args.ps1 {
        Some(Ps1::With) => spec.with_ps1(InnerProjection::WithInnerProjection),
        Some(Ps1::Without) => spec.with_ps1(InnerProjection::WithoutInnerProjection),
        None => spec,
    })
}

enum StateSource {
    Explicit(StateVector),
    Maxwellian { rho: f64, u: Vec<f64>, theta: f64 },
    Sample { seed: u64, amplitude: f64 },
}

fn parse_state_source(text: &str) -> Result<StateSource> {
    let text = text.trim();
    if text.starts_with('{') {
        return Ok(StateSource::Explicit(serde_json::from_str(text)?));
    }
    if let Some(path) = text.strip_prefix("file:") {
        let body = fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {path}: {e}")))?;
        return Ok(StateSource::Explicit(serde_json::from_str(&body)?));
    }
    if let Some(rest) = text.strip_prefix("maxwellian:") {
        let v = parse_list(rest)?;
        if v.len() < 3 {
            return Err(Error::Parse("maxwellian needs rho, at least one velocity component and theta".into()));
        }
        return Ok(StateSource::Maxwellian { rho: v[0], u: v[1..v.len() - 1].to_vec(), theta: v[v.len() - 1] });
    }
    if let Some(rest) = text.strip_prefix("sample:") {
        let parts: Vec<&str> = rest.split(',').collect();
        let seed = parts[0].trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad seed '{}'", parts[0])))?;
        let amplitude = match parts.get(1) {
            Some(a) => a.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad amplitude '{a}'")))?,
            None => 0.5,
        };
        return Ok(StateSource::Sample { seed, amplitude });
    }
    Err(Error::Parse(format!(
        "unrecognised state '{text}'; use maxwellian:..., file:PATH, sample:SEED[,AMP] or inline JSON"
    )))
}

/// Resolves model and state together; the state's dimension fills in -D.
fn model_and_state(args: &ModelArgs, text: &str) -> Result<(ModelSpec, StateVector)> {
    let source = parse_state_source(text)?;
    let state_dim = match &source {
        StateSource::Explicit(s) => Some(s.dim()),
        StateSource::Maxwellian { u, .. } => Some(u.len()),
        StateSource::Sample { .. } => None,
    };
    let spec = build_model(args, state_dim)?;
    let state = match source {
        StateSource::Explicit(s) => s,
        StateSource::Maxwellian { rho, u, theta } => {
            if spec.uses_tensor_temperature() {
                crate::state::gaussian_state(rho, u, DMatrix::identity(spec.dim, spec.dim) * theta, spec.order)?
            } else {
                maxwellian_state(rho, u, theta, spec.order)?
            }
        }
        StateSource::Sample { seed, amplitude } => sample_state(seed, &spec, amplitude)?,
    };
    Ok((spec, state))
}

fn direction(text: Option<&str>, dim: usize) -> Result<Vec<f64>> {
    match text {
        None => {
            let mut n = vec![0.0; dim];
            n[0] = 1.0;
            Ok(n)
        }
        Some(t) => {
            let v = parse_list(t)?;
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return Err(Error::InvalidParameter("direction must be non-zero".into()));
            }
            Ok(v.iter().map(|x| x / norm).collect())
        }
    }
}

fn emit(text: &str, output: Option<&Path>) -> std::result::Result<(), Fail> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Fail(EXIT_USAGE, format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(v: &T, output: Option<&Path>) -> std::result::Result<(), Fail> {
    emit(&export::to_json(v).map_err(Error::from)?, output)
}

fn require_dir(dir: &Path) -> std::result::Result<(), Fail> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(Fail(EXIT_USAGE, format!("output directory {} does not exist", dir.display())))
    }
}

fn write_file(dir: &Path, name: &str, text: &str) -> std::result::Result<(), Fail> {
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| Fail(EXIT_USAGE, format!("cannot write {}: {e}", p.display())))
}

fn cmd_derive(a: &DeriveArgs) -> std::result::Result<i32, Fail> {
    let (spec, state) = model_and_state(&a.model, &a.state)?;
    let sys = match a.tau {
        Some(tau) => assemble_system_bgk(&spec, &state, tau)?,
        None => assemble_system(&spec, &state)?,
    };
    match a.out.format {
        Format::Json => emit_json(&export::system_json(&spec, &state, &sys), a.out.output.as_deref())?,
        Format::Csv => {
            let dir = a
                .out
                .output
                .as_deref()
                .ok_or_else(|| Fail(EXIT_USAGE, "CSV output needs --output DIR".into()))?;
            require_dir(dir)?;
            write_file(dir, "B.csv", &export::matrix_csv(&sys.b))?;
            let prefix = if spec.regularized { "A" } else { "F" };
            for d in 0..sys.dim() {
                write_file(dir, &format!("{prefix}{}.csv", d + 1), &export::matrix_csv(&sys.a[d]))?;
                if spec.regularized {
                    write_file(dir, &format!("F{}.csv", d + 1), &export::matrix_csv(&sys.flux(d)))?;
                }
            }
            write_file(dir, "source.csv", &export::vector_csv(&sys.source))?;
            write_file(dir, "ordering.csv", &export::ordering_csv(&spec))?;
            let meta = json!({
                "model": spec,
                "state": state,
                "variables": spec.variable_labels()?,
                "kind": sys.kind,
            });
            write_file(dir, "metadata.json", &export::to_json(&meta).map_err(Error::from)?)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_spectrum(a: &SpectrumArgs) -> std::result::Result<i32, Fail> {
    let (spec, state) = model_and_state(&a.model, &a.state)?;
    let n = direction(a.direction.as_deref(), spec.dim)?;
    let sys = assemble_system(&spec, &state)?;
    let report = spectrum_with(&directional_matrix(&sys, &n)?, a.tol.get());
    let code = if report.is_hyperbolic() { EXIT_OK } else { EXIT_VERDICT };
    match a.out.format {
        Format::Json => {
            let v = json!({"model": spec.name, "order": spec.order, "dim": spec.dim, "direction": n, "state": state, "report": report});
            emit_json(&v, a.out.output.as_deref())?;
        }
        Format::Csv => emit(&export::spectrum_csv(&report), a.out.output.as_deref())?,
    }
    Ok(code)
}

fn cmd_scan(a: &ScanArgs) -> std::result::Result<i32, Fail> {
    let spec = build_model(&a.model, None)?;
    let options = ScanOptions { max_witnesses: a.witnesses, symmetrization: a.symmetrization, tolerances: a.tol.get() };
    let report = hyperbolicity_scan_with(&spec, a.trials, a.amplitude, a.seed, &options)?;
    emit_json(&report, a.output.as_deref())?;
    Ok(if report.hyperbolic_fraction == 1.0 { EXIT_OK } else { EXIT_VERDICT })
}

fn cmd_invariance(a: &InvarianceArgs) -> std::result::Result<i32, Fail> {
    let (spec, state) = model_and_state(&a.model, &a.state)?;
    let n = direction(a.direction.as_deref(), spec.dim)?;
    let du = match &a.shift {
        Some(t) => parse_list(t)?,
        None => vec![0.5; spec.dim],
    };
    let mut worst = InvarianceReport { rotation_error: 0.0, galilean_error: 0.0 };
    for k in 0..a.rotations.max(1) {
        let r = random_rotation(a.seed.wrapping_add(k), spec.dim);
        let rep = invariance_suite(&spec, &state, &r, &du, &n)?;
        worst.rotation_error = worst.rotation_error.max(rep.rotation_error);
        worst.galilean_error = worst.galilean_error.max(rep.galilean_error);
    }
    let pass = worst.max_error() <= a.tol;
    let v = json!({"model": spec.name, "order": spec.order, "dim": spec.dim, "rotations": a.rotations.max(1), "seed": a.seed, "shift": du, "report": worst, "pass": pass});
    emit_json(&v, a.output.as_deref())?;
    Ok(if pass { EXIT_OK } else { EXIT_VERDICT })
}

fn parse_initial(text: &str) -> Result<InitialCondition> {
    let (head, arg) = match text.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (text, None),
    };
    let amp = |default: f64| -> Result<f64> {
        match arg {
            Some(a) => a.trim().parse().map_err(|_| Error::Parse(format!("bad amplitude '{a}'"))),
            None => Ok(default),
        }
    };
    match head {
        "sod" => Ok(InitialCondition::Sod),
        "sod-heat-flux" => Ok(InitialCondition::SodHeatFlux { amplitude: amp(1.0)? }),
        "wave" => Ok(InitialCondition::Wave { amplitude: amp(0.1)? }),
        "uniform" => {
            let v = parse_list(arg.unwrap_or("1,0,1"))?;
            if v.len() != 3 {
                return Err(Error::Parse("uniform needs rho,u,theta".into()));
            }
            Ok(InitialCondition::Uniform { rho: v[0], u: v[1], theta: v[2] })
        }
        "file" => {
            let path = arg.ok_or_else(|| Error::Parse("file: needs a path".into()))?;
            let body = fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {path}: {e}")))?;
            let grid: Grid1D = serde_json::from_str(&body)?;
            Ok(InitialCondition::Grid { grid })
        }
        _ => Err(Error::Parse(format!("unknown initial condition '{text}'"))),
    }
}

fn cmd_simulate(a: &SimulateArgs) -> std::result::Result<i32, Fail> {
    require_dir(&a.output)?;
    let model = build_model(&a.model, Some(1))?;
    let config = SolverConfig {
        model,
        cfl: a.cfl,
        tau: a.tau,
        t_end: a.t_end,
        boundary: match a.boundary {
            BoundaryArg::Copy => Boundary::Copy,
            BoundaryArg::Periodic => Boundary::Periodic,
        },
        initial: parse_initial(&a.initial)?,
        cells: a.cells,
        snapshots: a.snapshots,
        max_steps: a.max_steps,
    };
    let traj = run(&config)?;
    for (k, snap) in traj.snapshots.iter().enumerate() {
        write_file(&a.output, &format!("snapshot_{k:04}.csv"), &export::snapshot_csv(&snap.grid, config.model.order))?;
    }
    let times: Vec<f64> = traj.snapshots.iter().map(|s| s.time).collect();
    let v = json!({"config": config, "snapshot_times": times, "diagnostics": traj.diagnostics});
    write_file(&a.output, "diagnostics.json", &export::to_json(&v).map_err(Error::from)?)?;
    if let Some(ab) = &traj.diagnostics.abort {
        eprintln!("run aborted: {}", ab.message);
        return Ok(EXIT_VERDICT);
    }
    Ok(EXIT_OK)
}

fn cmd_validate(a: &ValidateArgs) -> std::result::Result<i32, Fail> {
    let (spec, state) = match &a.state {
        Some(t) => model_and_state(&a.model, t)?,
        None => {
            let spec = build_model(&a.model, None)?;
            let s = sample_state(0, &spec, 0.0)?;
            let s = if spec.uses_tensor_temperature() {
                crate::state::gaussian_state(1.0, vec![0.0; spec.dim], DMatrix::identity(spec.dim, spec.dim), spec.order)?
            } else {
                maxwellian_state(1.0, vec![0.0; spec.dim], 1.0, spec.order).unwrap_or(s)
            };
            (spec, s)
        }
    };
    let projection = validate_projection(&spec.projection_at(state.theta())?);
    let sys = assemble_system(&spec, &state)?;
    let cond = sys.b_condition();
    let symmetrization = match symmetrization_check(&spec, &state) {
        Ok(r) => Some(r),
        Err(Error::NonOrthogonalProjection(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let mut verdicts = Vec::new();
    let mut hyperbolic = true;
    for d in 0..spec.dim {
        let mut n = vec![0.0; spec.dim];
        n[d] = 1.0;
        let r = spectrum_with(&directional_matrix(&sys, &n)?, Tolerances::default());
        hyperbolic &= r.is_hyperbolic();
        verdicts.push(r.verdict);
    }
    let sym_ok = !spec.regularized || symmetrization.is_none_or(|r| r <= 1e-10);
    let pass = projection.pass && cond < 1e8 && hyperbolic && sym_ok;
    let v = json!({
        "model": spec,
        "state": state,
        "projection": projection,
        "b_condition": cond,
        "symmetrization_residual": symmetrization,
        "axis_verdicts": verdicts,
        "pass": pass,
    });
    emit_json(&v, a.output.as_deref())?;
    Ok(if pass { EXIT_OK } else { EXIT_VERDICT })
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Derive(a) => cmd_derive(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Invariance(a) => cmd_invariance(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(code) => code,
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

/// Entry point for the binary: honours MOMENT_FORGE_THREADS, then runs.
pub fn main_with_env() -> i32 {
    if let Ok(v) = std::env::var("MOMENT_FORGE_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: MOMENT_FORGE_THREADS must be a positive integer, got '{v}'");
                return EXIT_USAGE;
            }
        }
    }
    run_cli(std::env::args_os())
}
