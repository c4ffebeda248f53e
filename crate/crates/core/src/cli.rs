//! Command-line front end.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 configuration error,
//! 3 regime mismatch, 4 verification failure. Errors are reported as one
//! JSON object on stderr.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::beamsim::{simulate, simulate_with_trajectory, ForcingSpec};
use crate::biortho::{AnalyticConfig, Strategy};
use crate::control::{
    cost_sweep, synthesize_null_control, synthesize_profiles, ControlDiagnostics, ControlKind,
    ControlSignal, Profiles, SynthesisOptions,
};
use crate::error::{Error, Result};
use crate::modal::{angle_cos, sine_coeffs, BeamState};
use crate::spectrum::{
    classify_regime, cluster_map, default_epsilon, frequency_set, RegimeReport, SpectralParams,
};

#[derive(Debug, Parser)]
#[command(name = "beamctl", version, about = "Null-control synthesis for the damped beam")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct BeamArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 8)]
    pub modes: usize,
}

impl BeamArgs {
    fn params(&self) -> Result<SpectralParams> {
        SpectralParams::new(self.alpha, self.rho, self.modes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IcFormat {
    /// `n,u0,u1` sine coefficients.
    Coeffs,
    /// `x,u0,u1` samples on a uniform grid of `[0, π]`.
    Samples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Gram,
    Analytic,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Gram => Strategy::Gram,
            StrategyArg::Analytic => Strategy::Analytic,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct IcArgs {
    /// Initial data CSV; defaults to `u⁰ = φ₁`, `u¹ = 0`.
    #[arg(long)]
    pub ic: Option<PathBuf>,
    /// Format of `--ic`; detected from the header when omitted.
    #[arg(long, value_enum)]
    pub ic_format: Option<IcFormat>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub beam: BeamArgs,
    #[arg(long = "T", default_value_t = 1.0)]
    pub t_final: f64,
    #[command(flatten)]
    pub ic: IcArgs,
    #[arg(long, value_enum, default_value_t = StrategyArg::Gram)]
    pub strategy: StrategyArg,
    /// Cluster threshold.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Target endpoint energy in the weak regime.
    #[arg(long, default_value_t = 1e-3)]
    pub eps_weak: f64,
    /// Left end of the control patch; with `--b` selects interior control.
    #[arg(long, requires = "b", allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, requires = "a", allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Control CSV.
    #[arg(long, default_value = "control.csv")]
    pub out: PathBuf,
    #[arg(long, default_value = "manifest.json")]
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "manifest.json")]
    pub manifest: PathBuf,
    /// Control CSV; defaults to the path recorded in the manifest.
    #[arg(long)]
    pub control: Option<PathBuf>,
    /// Relative endpoint energy tolerance (absolute `eps_weak` for weak controls).
    #[arg(long)]
    pub tol: Option<f64>,
    /// SimResult JSON; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trajectory CSV `t,n,re,im`.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub beam: BeamArgs,
    #[command(flatten)]
    pub ic: IcArgs,
    #[arg(long = "T-list", value_delimiter = ',', default_value = "1,0.5,0.25,0.125")]
    pub t_list: Vec<f64>,
    #[arg(long, value_enum, default_value_t = StrategyArg::Gram)]
    pub strategy: StrategyArg,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// CSV `T,norm`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frequencies, roots and regime.
    Spectrum {
        #[command(flatten)]
        beam: BeamArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster map and the induced actuator profiles.
    Clusters {
        #[command(flatten)]
        beam: BeamArgs,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Null control CSV plus a JSON manifest.
    Synthesize(SynthArgs),
    /// Re-simulates a synthesized control.
    Verify(VerifyArgs),
    /// Control norm against the horizon.
    CostSweep(SweepArgs),
    /// Angles between restricted eigenfunctions.
    Angles {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long, default_value_t = 10)]
        max: usize,
        /// CSV `n,m,cos_phi`; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub params: SpectralParams,
    pub t_final: f64,
    pub regime: RegimeReport,
    pub kind: ControlKind,
    pub strategy: Strategy,
    pub norm: f64,
    pub diagnostics: ControlDiagnostics,
    pub profiles: Option<Profiles>,
    pub interval: Option<(f64, f64)>,
    pub eps_weak: f64,
    pub initial_state: BeamState,
    pub control_csv: PathBuf,
    pub intervals: usize,
    pub x_points: Option<usize>,
}

/// Outcome of a command that did not fail outright.
enum Outcome {
    Ok,
    VerificationFailed(String),
}

/// Runs the CLI on `argv` and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            report("Usage", &e.to_string());
            return 2;
        }
    };
    if let Err(e) = configure_threads() {
        report(e.kind(), &e.to_string());
        return 2;
    }
    match dispatch(cli.command) {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::VerificationFailed(msg)) => {
            report("VerificationFailed", &msg);
            4
        }
        Err(e) => {
            report(e.kind(), &e.to_string());
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::RegimeMismatch { .. } => 3,
        Error::InvalidParams(_)
        | Error::InvalidInput(_)
        | Error::EpsilonTooLarge { .. }
        | Error::DegenerateInterval { .. }
        | Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_) => 2,
        _ => 1,
    }
}

fn report(kind: &str, message: &str) {
    let line = json!({ "error": kind, "message": message.trim() });
    eprintln!("{line}");
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("BEAMCTL_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::InvalidInput(format!("BEAMCTL_THREADS = {v:?} is not a positive integer")))?;
    // A second initialisation in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Spectrum { beam, out } => spectrum(&beam, out.as_deref()),
        Command::Clusters { beam, epsilon, out } => clusters(&beam, epsilon, out.as_deref()),
        Command::Synthesize(args) => synthesize(&args),
        Command::Verify(args) => verify(&args),
        Command::CostSweep(args) => sweep(&args),
        Command::Angles { a, b, max, out } => angles(a, b, max, out.as_deref()),
    }
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn check_output(path: &Path) -> Result<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(p) = parent {
        if !p.is_dir() {
            return Err(Error::InvalidInput(format!(
                "output directory {} does not exist",
                p.display()
            )));
        }
    }
    Ok(())
}

fn check_input(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::InvalidInput(format!("input file {} not found", path.display())));
    }
    Ok(())
}

fn emit_json(value: &impl Serialize, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

fn csv_writer(out: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}

/// Initial data from `--ic`, or `φ₁` when absent.
pub fn read_initial_state(args: &IcArgs, n_modes: usize) -> Result<BeamState> {
    let Some(path) = &args.ic else {
        return Ok(BeamState::eigenmode(1, n_modes));
    };
    check_input(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_lowercase).collect();
    let detected = match header.first().map(String::as_str) {
        Some("n") => IcFormat::Coeffs,
        Some("x") => IcFormat::Samples,
        _ => {
            return Err(Error::InvalidInput(format!(
                "{}: header must start with n or x",
                path.display()
            )))
        }
    };
    if header.len() != 3 || header[1] != "u0" || header[2] != "u1" {
        return Err(Error::InvalidInput(format!(
            "{}: expected columns {},u0,u1",
            path.display(),
            header[0]
        )));
    }
    if let Some(f) = args.ic_format {
        if f != detected {
            return Err(Error::InvalidInput(format!(
                "{}: header does not match --ic-format",
                path.display()
            )));
        }
    }
    let mut rows: Vec<[f64; 3]> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mut row = [0.0; 3];
        for (i, v) in row.iter_mut().enumerate() {
            *v = rec[i]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("{}: bad number {:?}", path.display(), &rec[i])))?;
        }
        rows.push(row);
    }
    match detected {
        IcFormat::Coeffs => {
            let mut u0 = vec![0.0; n_modes];
            let mut u1 = vec![0.0; n_modes];
            for [n, a, b] in rows {
                if n < 1.0 || n.fract() != 0.0 {
                    return Err(Error::InvalidInput(format!("mode index {n} is not a positive integer")));
                }
                let n = n as usize;
                if n <= n_modes {
                    u0[n - 1] = a;
                    u1[n - 1] = b;
                }
            }
            BeamState::new(u0, u1)
        }
        IcFormat::Samples => {
            let m = rows.len().saturating_sub(1);
            if m == 0 {
                return Err(Error::InvalidInput("need at least two samples".into()));
            }
            let h = std::f64::consts::PI / m as f64;
            if rows
                .iter()
                .enumerate()
                .any(|(i, r)| (r[0] - i as f64 * h).abs() > 1e-9)
            {
                return Err(Error::InvalidInput(
                    "samples must lie on the uniform grid x_i = iπ/M".into(),
                ));
            }
            let u0: Vec<f64> = rows.iter().map(|r| r[1]).collect();
            let u1: Vec<f64> = rows.iter().map(|r| r[2]).collect();
            BeamState::new(sine_coeffs(&u0, n_modes)?, sine_coeffs(&u1, n_modes)?)
        }
    }
}

fn spectrum(beam: &BeamArgs, out: Option<&Path>) -> Result<Outcome> {
    if let Some(p) = out {
        check_output(p)?;
    }
    let params = beam.params()?;
    let fs = frequency_set(params);
    let report = classify_regime(&params);
    let frequencies: Vec<_> = fs
        .entries
        .iter()
        .map(|e| json!({ "k": e.k, "re": e.lambda.re, "im": e.lambda.im }))
        .collect();
    let value = json!({
        "params": params,
        "regime": report.regime,
        "blaschke_divergent": report.blaschke_divergent,
        "kappa": report.kappa,
        "notes": report.notes,
        "frequencies": frequencies,
        "roots": fs.roots,
        "double_modes": fs.double_modes,
        "min_gap": fs.min_gap(),
        "default_epsilon": default_epsilon(&fs),
    });
    emit_json(&value, out)?;
    Ok(Outcome::Ok)
}

fn clusters(beam: &BeamArgs, epsilon: Option<f64>, out: Option<&Path>) -> Result<Outcome> {
    if let Some(p) = out {
        check_output(p)?;
    }
    let fs = frequency_set(beam.params()?);
    let eps = epsilon.unwrap_or_else(|| default_epsilon(&fs));
    let cm = cluster_map(&fs, eps)?;
    let profiles = synthesize_profiles(&fs, &cm)?;
    emit_json(&json!({ "clusters": cm, "profiles": profiles }), out)?;
    Ok(Outcome::Ok)
}

fn synthesis_options(strategy: StrategyArg, epsilon: Option<f64>, eps_weak: f64, interval: Option<(f64, f64)>) -> SynthesisOptions {
    SynthesisOptions {
        strategy: strategy.into(),
        epsilon,
        eps_weak,
        interval,
        analytic: AnalyticConfig::default(),
    }
}

fn write_control(sig: &ControlSignal, out: &Path) -> Result<()> {
    let mut w = csv_writer(Some(out))?;
    match &sig.interior {
        Some(field) => {
            w.write_record(["t", "x", "f"])?;
            for (t, row) in sig.times.iter().zip(&field.values) {
                for (x, f) in field.x.iter().zip(row) {
                    w.write_record([num(*t), num(*x), num(*f)])?;
                }
            }
        }
        None => {
            w.write_record(["t", "f1", "f2"])?;
            for ((t, a), b) in sig.times.iter().zip(&sig.f1).zip(&sig.f2) {
                w.write_record([num(*t), num(*a), num(*b)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn synthesize(args: &SynthArgs) -> Result<Outcome> {
    check_output(&args.out)?;
    check_output(&args.manifest)?;
    let params = args.beam.params()?;
    if !(args.t_final > 0.0) {
        return Err(Error::InvalidInput(format!("T = {} must be positive", args.t_final)));
    }
    let state = read_initial_state(&args.ic, params.n_modes)?;
    let interval = args.a.zip(args.b);
    let opts = synthesis_options(args.strategy, args.epsilon, args.eps_weak, interval);
    let (sig, regime) = synthesize_null_control(&state, params, args.t_final, &opts)?;
    write_control(&sig, &args.out)?;
    let manifest = Manifest {
        params,
        t_final: args.t_final,
        regime,
        kind: sig.kind,
        strategy: opts.strategy,
        norm: sig.norm,
        diagnostics: sig.diagnostics.clone(),
        profiles: sig.profiles.clone(),
        interval,
        eps_weak: args.eps_weak,
        initial_state: state,
        control_csv: args.out.clone(),
        intervals: sig.times.len() - 1,
        x_points: sig.interior.as_ref().map(|f| f.x.len()),
    };
    emit_json(&manifest, Some(&args.manifest))?;
    emit_json(
        &json!({ "kind": sig.kind, "norm": sig.norm, "control": args.out, "manifest": args.manifest }),
        None,
    )?;
    Ok(Outcome::Ok)
}

/// Reads a control CSV back into a forcing.
pub fn read_forcing(manifest: &Manifest, path: &Path) -> Result<ForcingSpec> {
    check_input(path)?;
    let mut rdr = csv::Reader::from_path(path)?;
    let mut rows: Vec<[f64; 3]> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mut row = [0.0; 3];
        for (i, v) in row.iter_mut().enumerate() {
            *v = rec
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidInput(format!("{}: malformed row", path.display())))?;
        }
        rows.push(row);
    }
    let t_final = manifest.t_final;
    match (manifest.interval, manifest.x_points) {
        (Some((a, b)), Some(nx)) => {
            if rows.len() != nx * (manifest.intervals + 1) {
                return Err(Error::InvalidInput(format!(
                    "{}: expected {} rows",
                    path.display(),
                    nx * (manifest.intervals + 1)
                )));
            }
            let values = rows.chunks(nx).map(|c| c.iter().map(|r| r[2]).collect()).collect();
            Ok(ForcingSpec::Patch { t_final, a, b, values })
        }
        _ => {
            let profiles = manifest
                .profiles
                .clone()
                .ok_or_else(|| Error::InvalidInput("manifest lacks profiles".into()))?;
            Ok(ForcingSpec::Profiled {
                t_final,
                f1: rows.iter().map(|r| r[1]).collect(),
                f2: rows.iter().map(|r| r[2]).collect(),
                h1: profiles.h1,
                h2: profiles.h2,
            })
        }
    }
}

fn verify(args: &VerifyArgs) -> Result<Outcome> {
    check_input(&args.manifest)?;
    for p in args.out.iter().chain(&args.trajectory) {
        check_output(p)?;
    }
    let manifest: Manifest = serde_json::from_reader(File::open(&args.manifest)?)?;
    let control = args.control.clone().unwrap_or_else(|| manifest.control_csv.clone());
    let forcing = read_forcing(&manifest, &control)?;
    let fs = frequency_set(manifest.params);
    let sim = match &args.trajectory {
        Some(_) => simulate_with_trajectory(&manifest.initial_state, &forcing, &fs, manifest.t_final, args.samples)?,
        None => simulate(&manifest.initial_state, &forcing, &fs, manifest.t_final)?,
    };
    let weak = manifest.kind == ControlKind::Weak;
    let tol = args.tol.unwrap_or(if weak { manifest.eps_weak } else { 1e-6 });
    let measured = if weak { sim.energy() } else { sim.relative_energy() };
    let pass = measured <= tol;
    if let (Some(p), Some(traj)) = (&args.trajectory, &sim.trajectory) {
        let mut w = csv_writer(Some(p))?;
        w.write_record(["t", "n", "re", "im"])?;
        for (t, n, re, im) in traj {
            w.write_record([num(*t), n.to_string(), num(*re), num(*im)])?;
        }
        w.flush()?;
    }
    let mut report = sim.clone();
    report.trajectory = None;
    let value = json!({
        "pass": pass,
        "measure": if weak { "energy" } else { "relative_energy" },
        "value": measured,
        "tolerance": tol,
        "result": report,
    });
    emit_json(&value, args.out.as_deref())?;
    if pass {
        Ok(Outcome::Ok)
    } else {
        Ok(Outcome::VerificationFailed(format!(
            "endpoint measure {measured:e} exceeds tolerance {tol:e}"
        )))
    }
}

fn sweep(args: &SweepArgs) -> Result<Outcome> {
    if let Some(p) = &args.out {
        check_output(p)?;
    }
    let params = args.beam.params()?;
    let state = read_initial_state(&args.ic, params.n_modes)?;
    let opts = synthesis_options(args.strategy, args.epsilon, 1e-3, None);
    let report = cost_sweep(&state, params, &args.t_list, &opts)?;
    if let Some(p) = &args.out {
        let mut w = csv_writer(Some(p))?;
        w.write_record(["T", "norm"])?;
        for (t, n) in &report.points {
            w.write_record([num(*t), num(*n)])?;
        }
        w.flush()?;
    }
    emit_json(&report, None)?;
    Ok(Outcome::Ok)
}

fn angles(a: f64, b: f64, max: usize, out: Option<&Path>) -> Result<Outcome> {
    if let Some(p) = out {
        check_output(p)?;
    }
    if max < 2 {
        return Err(Error::InvalidInput("--max must be at least 2".into()));
    }
    let mut rows = Vec::new();
    let mut best = (f64::INFINITY, 0, 0);
    let mut max_cos = 0.0f64;
    for n in 1..max {
        for m in n + 1..=max {
            let c = angle_cos(n, m, a, b)?;
            let angle = c.clamp(0.0, 1.0).acos();
            if angle < best.0 {
                best = (angle, n, m);
            }
            max_cos = max_cos.max(c);
            rows.push((n, m, c));
        }
    }
    // The summary goes to stdout only when the CSV has its own file.
    if out.is_some() {
        emit_json(
            &json!({ "a": a, "b": b, "max": max, "min_angle": best.0, "min_pair": [best.1, best.2], "max_abs_cos": max_cos }),
            None,
        )?;
    }
    let mut w = csv_writer(out)?;
    w.write_record(["n", "m", "cos_phi"])?;
    for (n, m, c) in rows {
        w.write_record([n.to_string(), m.to_string(), num(c)])?;
    }
    w.flush()?;
    Ok(Outcome::Ok)
}
