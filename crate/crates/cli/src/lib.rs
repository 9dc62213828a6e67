//! `weakprobe` command line: optimal probes, the self-check suite, family
//! sweeps, stationary-point search and momentum/position conversion.
//!
//! Settings come from an optional JSON file (`--config`) and from flags;
//! flags win. Exit codes: 0 success, 1 rejected input, 2 numerical failure,
//! 3 I/O failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use weakprobe::config::{parse_complex, Command, KernelSpec, RunConfig, StatesSpec, WeakValueSpec};
use weakprobe::families::{fit_scaling, make_family, sweep, FamilySpec};
use weakprobe::io::{
    read_probe_csv, read_spectrum_csv, write_json, write_probe_csv, write_spectrum_csv, write_sweep_csv,
    RowDeltaX, RowFailure, StationaryExport, SweepSummary,
};
use weakprobe::spectrum::{from_position_coefficients, kronecker_check, to_position_coefficients};
use weakprobe::variational::{analytic_optimal_probe, find_stationary, StationaryResult};
use weakprobe::verify::{random_probe, run_suite};
use weakprobe::{
    Complex64, Error, GaugeFixedFunctional, MomentumGrid, OptimizerConfig, PostselectionKernel,
    ProbeWaveFunction,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Default spectral cutoff `|n| <= 256`.
pub const DEFAULT_CUTOFF: i64 = 256;
/// Lattice range of the reported Kronecker residual.
pub const KRONECKER_RANGE: i64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CommandArg {
    OptimalProbe,
    Verify,
    Sweep,
    Optimize,
    Transform,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::OptimalProbe => Command::OptimalProbe,
            CommandArg::Verify => Command::Verify,
            CommandArg::Sweep => Command::Sweep,
            CommandArg::Optimize => Command::Optimize,
            CommandArg::Transform => Command::Transform,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Init {
    /// `exp(-i x0 k)/B`
    Analytic,
    /// `1/sqrt(pi)`
    Constant,
    /// seeded random smooth probe
    Random,
}

#[derive(Debug, Parser)]
#[command(name = "weakprobe", version, about = "Optimal probe wave functions for weak-value amplification")]
struct Cli {
    /// What to run; may instead come from "command" in the config file.
    #[arg(value_enum)]
    command: Option<CommandArg>,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Weak value as an `a+bi` literal, e.g. `1+1i`.
    #[arg(long, allow_hyphen_values = true)]
    weak_value: Option<String>,
    /// Preselected qubit as two comma-separated complex amplitudes.
    #[arg(long, allow_hyphen_values = true)]
    pre: Option<String>,
    /// Postselected qubit as two comma-separated complex amplitudes.
    #[arg(long, allow_hyphen_values = true)]
    post: Option<String>,
    /// Bloch vector `x,y,z` of the observable (default `0,0,1`).
    #[arg(long, allow_hyphen_values = true)]
    bloch: Option<String>,
    /// Keep the `<f|i>` prefactor in the kernel.
    #[arg(long)]
    include_overlap: bool,
    /// Target position of the final probe.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
    /// Lattice target `x0 = 2m`.
    #[arg(long, allow_hyphen_values = true)]
    m: Option<i64>,
    /// Combined multiplier as an `a+bi` literal (default 0).
    #[arg(long, allow_hyphen_values = true)]
    mu_tilde: Option<String>,
    /// Momentum grid size (default 2048).
    #[arg(long)]
    grid_points: Option<usize>,
    /// `eigenstate_pair[:weight]`, `truncated_gaussian[:sigma]` or `kronecker`.
    #[arg(long)]
    family: Option<String>,
    /// Comma-separated, strictly increasing.
    #[arg(long, allow_hyphen_values = true)]
    alphas: Option<String>,
    /// Comma-separated spectral cutoffs; the first is used (default 256).
    #[arg(long)]
    cutoffs: Option<String>,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Input file: a probe CSV for `transform` and `optimize`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// RNG seed (default 42).
    #[arg(long)]
    seed: Option<u64>,
    /// Starting probe for `optimize` when no `--input` is given.
    #[arg(long, value_enum)]
    init: Option<Init>,
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => EXIT_INVALID,
            Failure::Numerical(_) => EXIT_NUMERICAL,
            Failure::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => Failure::Io(e.to_string()),
            e if e.is_numerical() => Failure::Numerical(e.to_string()),
            e => Failure::Invalid(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Invalid(msg.into())
}

type Outcome = std::result::Result<(), Failure>;

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match configure_threads().and_then(|_| dispatch(&cli)) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn configure_threads() -> Outcome {
    let Ok(v) = std::env::var("WEAKPROBE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| invalid(format!("WEAKPROBE_THREADS must be a positive integer, got {v:?}")))?;
    // a pool already exists when run() is called twice in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> std::result::Result<Vec<T>, Failure> {
    split_list(s)
        .map(|t| t.parse().map_err(|_| invalid(format!("bad {what} entry {t:?}"))))
        .collect()
}

fn parse_qubit(s: &str, what: &str) -> std::result::Result<Vec<f64>, Failure> {
    let parts: Vec<Complex64> = split_list(s).map(parse_complex).collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [a, b] => Ok(vec![a.re, a.im, b.re, b.im]),
        _ => Err(invalid(format!("--{what} needs two comma-separated amplitudes"))),
    }
}

fn parse_family(s: &str) -> std::result::Result<FamilySpec, Failure> {
    let (name, param) = match s.split_once(':') {
        Some((n, p)) => (n.trim(), Some(p.trim())),
        None => (s.trim(), None),
    };
    let value = |default: f64| -> std::result::Result<f64, Failure> {
        param.map_or(Ok(default), |p| {
            p.parse().map_err(|_| invalid(format!("bad family parameter {p:?}")))
        })
    };
    match name.replace('-', "_").as_str() {
        "eigenstate_pair" => Ok(FamilySpec::EigenstatePair { weight: value(0.5)? }),
        "truncated_gaussian" => Ok(FamilySpec::TruncatedGaussian { sigma: value(0.3)? }),
        "kronecker" if param.is_none() => Ok(FamilySpec::Kronecker),
        _ => Err(invalid(format!("unknown family {s:?}"))),
    }
}

/// Config file first, then flags on top.
fn merged_config(cli: &Cli) -> std::result::Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(c) = cli.command {
        cfg.command = Some(c.into());
    }
    if let Some(w) = &cli.weak_value {
        if cli.pre.is_some() || cli.post.is_some() {
            return Err(invalid("give either --weak-value or --pre/--post, not both"));
        }
        let z = parse_complex(w)?;
        cfg.kernel = Some(KernelSpec::WeakValue(WeakValueSpec { weak_value: [z.re, z.im] }));
    } else if cli.pre.is_some() || cli.post.is_some() {
        let (Some(pre), Some(post)) = (&cli.pre, &cli.post) else {
            return Err(invalid("--pre and --post must be given together"));
        };
        let bloch = match &cli.bloch {
            Some(b) => {
                let v: Vec<f64> = parse_list(b, "bloch")?;
                <[f64; 3]>::try_from(v).map_err(|_| invalid("--bloch needs three components"))?
            }
            None => [0.0, 0.0, 1.0],
        };
        cfg.kernel = Some(KernelSpec::States(StatesSpec {
            pre: parse_qubit(pre, "pre")?,
            post: parse_qubit(post, "post")?,
            observable_bloch: bloch,
            include_overlap: cli.include_overlap,
        }));
    } else if cli.bloch.is_some() {
        return Err(invalid("--bloch requires --pre and --post"));
    }
    if cli.x0.is_some() && cli.m.is_some() {
        return Err(invalid("give either --x0 or --m, not both"));
    }
    if let Some(x0) = cli.x0 {
        cfg.x0 = Some(x0);
        cfg.m = None;
    }
    if let Some(m) = cli.m {
        cfg.m = Some(m);
        cfg.x0 = None;
    }
    if let Some(mu) = &cli.mu_tilde {
        let z = parse_complex(mu)?;
        cfg.mu_tilde = Some([z.re, z.im]);
    }
    if let Some(n) = cli.grid_points {
        cfg.grid_points = Some(n);
    }
    if let Some(f) = &cli.family {
        cfg.family = Some(parse_family(f)?);
    }
    if let Some(a) = &cli.alphas {
        cfg.alphas = Some(parse_list(a, "alpha")?);
    }
    if let Some(c) = &cli.cutoffs {
        cfg.cutoffs = Some(parse_list(c, "cutoff")?);
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    if let Some(i) = &cli.input {
        cfg.input = Some(i.clone());
    }
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Outcome {
    let cfg = merged_config(cli)?;
    match cfg.command {
        None => Err(invalid("no command given (positional argument or \"command\" in --config)")),
        Some(Command::OptimalProbe) => cmd_optimal_probe(&cfg),
        Some(Command::Verify) => cmd_verify(&cfg),
        Some(Command::Sweep) => cmd_sweep(&cfg),
        Some(Command::Optimize) => cmd_optimize(&cfg, cli.init),
        Some(Command::Transform) => cmd_transform(&cfg),
    }
}

fn kernel_of(cfg: &RunConfig) -> std::result::Result<PostselectionKernel, Failure> {
    cfg.kernel
        .as_ref()
        .ok_or_else(|| invalid("a kernel is required (--weak-value or --pre/--post)"))?
        .kernel()
        .map_err(Failure::from)
}

fn grid_of(cfg: &RunConfig) -> std::result::Result<MomentumGrid, Failure> {
    Ok(MomentumGrid::symmetric(cfg.grid_points())?)
}

fn cutoff_of(cfg: &RunConfig) -> i64 {
    cfg.cutoffs
        .as_ref()
        .and_then(|c| c.first().copied())
        .unwrap_or(DEFAULT_CUTOFF)
}

fn target_x0(cfg: &RunConfig) -> f64 {
    cfg.m.map_or(cfg.x0.unwrap_or(0.0), |m| 2.0 * m as f64)
}

/// Opens `path` for writing, or stdout.
fn sink(path: Option<&Path>) -> std::result::Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => Ok(Box::new(BufWriter::new(File::create(p).map_err(|e| io_failure(p, e))?))),
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

/// Summary lines go to stdout when the data went to a file, else to stderr.
fn report(to_stdout: bool, line: &str) {
    if to_stdout {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn cmd_optimal_probe(cfg: &RunConfig) -> Outcome {
    let kernel = kernel_of(cfg)?;
    let grid = grid_of(cfg)?;
    let x0 = target_x0(cfg);
    let probe = analytic_optimal_probe(&kernel, x0, &grid)?;
    let fin = kernel.final_probe(&probe)?;
    let mut w = sink(cfg.out.as_deref())?;
    write_probe_csv(&probe, &mut w)?;
    w.flush().map_err(Error::from)?;
    let to_stdout = cfg.out.is_some();
    report(to_stdout, &format!("x0 = {x0:?}"));
    report(to_stdout, &format!("final_mean = {:?}", fin.expectation_x()?));
    report(to_stdout, &format!("shift = {:?}", kernel.shift(&probe)?));
    if x0 == (x0 / 2.0).round() * 2.0 && (x0 / 2.0).abs() <= KRONECKER_RANGE as f64 {
        let m = (x0 / 2.0).round() as i64;
        let r = kronecker_check(&fin, m, KRONECKER_RANGE)?;
        report(to_stdout, &format!("kronecker_residual = {r:?}"));
    }
    Ok(())
}

fn cmd_verify(cfg: &RunConfig) -> Outcome {
    let outcomes = run_suite(cfg.seed());
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let mut w = sink(cfg.out.as_deref())?;
    for o in &outcomes {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        writeln!(w, "{tag} {}: {}", o.name, o.detail).map_err(Error::from)?;
    }
    writeln!(w, "{} of {} properties passed", outcomes.len() - failed, outcomes.len()).map_err(Error::from)?;
    w.flush().map_err(Error::from)?;
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} properties failed")));
    }
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig) -> Outcome {
    let kernel = kernel_of(cfg)?;
    let grid = grid_of(cfg)?;
    let spec = cfg.family.ok_or_else(|| invalid("--family is required for sweep"))?;
    let alphas = cfg.alphas.as_deref().ok_or_else(|| invalid("--alphas is required for sweep"))?;
    let cutoff = cutoff_of(cfg);
    let family = make_family(spec, &grid)?;
    let table = sweep(&family, alphas, &kernel, cutoff)?;
    for (a, e) in &table.failures {
        eprintln!("warning: alpha = {a:?}: {e}");
    }
    if table.rows.is_empty() {
        return Err(Failure::Numerical("every sweep point failed".into()));
    }
    let (fit, fit_error) = match fit_scaling(&table.rows) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let a = kernel.weak_value();
    let summary = SweepSummary {
        family: family.id().to_string(),
        params: family.params().clone(),
        weak_value: [a.re, a.im],
        cutoff,
        fit,
        fit_error,
        delta_x: table.rows.iter().map(|r| RowDeltaX { alpha: r.alpha, delta_x: r.delta_x }).collect(),
        failures: table
            .failures
            .iter()
            .map(|(alpha, e)| RowFailure { alpha: *alpha, error: e.to_string() })
            .collect(),
    };
    let mut w = sink(cfg.out.as_deref())?;
    write_sweep_csv(&table.rows, &mut w)?;
    w.flush().map_err(Error::from)?;
    match &cfg.out {
        Some(out) => {
            let side = sidecar_path(out, "fit.json");
            let mut f = sink(Some(&side))?;
            write_json(&summary, &mut f)?;
            f.flush().map_err(Error::from)?;
        }
        None => write_json(&summary, std::io::stderr().lock())?,
    }
    Ok(())
}

/// `dir/name.csv` -> `dir/name.<suffix>`.
fn sidecar_path(out: &Path, suffix: &str) -> PathBuf {
    out.with_extension(suffix)
}

fn initial_probe(
    cfg: &RunConfig,
    init: Option<Init>,
    kernel: &PostselectionKernel,
) -> std::result::Result<ProbeWaveFunction, Failure> {
    if let Some(path) = &cfg.input {
        if init.is_some() {
            return Err(invalid("give either --input or --init, not both"));
        }
        let f = File::open(path).map_err(|e| io_failure(path, e))?;
        return Ok(read_probe_csv(std::io::BufReader::new(f))?);
    }
    let grid = grid_of(cfg)?;
    Ok(match init.unwrap_or(Init::Analytic) {
        Init::Analytic => analytic_optimal_probe(kernel, target_x0(cfg), &grid)?,
        Init::Constant => weakprobe::grid::position_eigenstate(&grid, 0.0),
        Init::Random => random_probe(&grid, cfg.seed(), 0)?,
    })
}

fn write_stationary(cfg: &RunConfig, result: &StationaryResult) -> Outcome {
    let (json_sink, csv_path) = match &cfg.out {
        Some(out) => {
            let csv = sidecar_path(out, "probe.csv");
            let mut w = sink(Some(&csv))?;
            write_probe_csv(&result.probe, &mut w)?;
            w.flush().map_err(Error::from)?;
            (sink(Some(out))?, csv.display().to_string())
        }
        None => (sink(None)?, String::new()),
    };
    let mut w = json_sink;
    write_json(&StationaryExport::new(result, csv_path), &mut w)?;
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn cmd_optimize(cfg: &RunConfig, init: Option<Init>) -> Outcome {
    let kernel = kernel_of(cfg)?;
    let functional = GaugeFixedFunctional::new(kernel, cfg.mu_tilde())?;
    let start = initial_probe(cfg, init, &kernel)?;
    let opts = OptimizerConfig {
        rng_seed: cfg.seed(),
        ..OptimizerConfig::default()
    };
    match find_stationary(&functional, &start, &opts) {
        Ok(r) => write_stationary(cfg, &r),
        Err(Error::NotConverged(best)) => {
            write_stationary(cfg, &best)?;
            Err(Error::NotConverged(best).into())
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_transform(cfg: &RunConfig) -> Outcome {
    let path = cfg.input.as_deref().ok_or_else(|| invalid("--input is required for transform"))?;
    let bytes = std::fs::read(path).map_err(|e| io_failure(path, e))?;
    let header = bytes.split(|b| *b == b'\n').next().unwrap_or_default();
    let header: String = String::from_utf8_lossy(header).chars().filter(|c| !c.is_whitespace()).collect();
    let mut w = sink(cfg.out.as_deref())?;
    if header.starts_with("k,") {
        let probe = read_probe_csv(bytes.as_slice())?;
        let c = cutoff_of(cfg);
        write_spectrum_csv(&to_position_coefficients(&probe, -c, c)?, &mut w)?;
    } else if header.starts_with("n,") {
        let amps = read_spectrum_csv(bytes.as_slice())?;
        write_probe_csv(&from_position_coefficients(&amps, &grid_of(cfg)?)?, &mut w)?;
    } else {
        return Err(invalid(format!(
            "{}: expected a probe (k,re,im) or spectrum (n,x,re,im,prob) CSV",
            path.display()
        )));
    }
    w.flush().map_err(Error::from)?;
    Ok(())
}
