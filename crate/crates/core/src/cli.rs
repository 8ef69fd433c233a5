//! Command-line front end.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{figure_data, generate, monte_carlo, Estimator, FigureConfig, FigureId, SignalKind, SignalSpec, Table};
use crate::error::{Error, Result};
use crate::io;
use crate::kernels::Kernel;
use crate::pipeline::{run_pipeline, PipelineConfig};
use crate::selection::{fitted_select, rice_select, HalfwidthGrid, SelectionDiagnostics};
use crate::series::TimeSeries;
use crate::smoother::{smooth_fixed, SmoothEstimate};

/// Environment variable naming the directory for relative output paths.
pub const OUTPUT_DIR_ENV: &str = "KERNSMOOTH_OUTPUT_DIR";

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  internal or serialization failure
  2  invalid command line
  3  invalid configuration
  4  unreadable or malformed input data
  5  estimation failed (window too small, degenerate fit, domain error)
  6  halfwidth selection failed (grid or fit)

Relative --output paths are resolved against $KERNSMOOTH_OUTPUT_DIR when set.
Errors are reported on stderr as a single line:
  error kind=<kind> code=<code> message=\"<text>\"";

#[derive(Debug, Parser)]
#[command(name = "kernsmooth", version, about = "Data-adaptive kernel smoothing of time series", after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Smooth a series and write t,y,ghat,stderr,halfwidth
    Smooth(SmoothArgs),
    /// Choose a constant halfwidth and write the selection curves
    Select(SelectArgs),
    /// Emit figure datasets, Monte Carlo reports or synthetic series
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Fixed,
    Rice,
    Fitted,
    Plugin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelName {
    Parabolic,
    Rectangular,
}

impl KernelName {
    fn kernel(self) -> Kernel {
        match self {
            KernelName::Parabolic => Kernel::parabolic(),
            KernelName::Rectangular => Kernel::rectangular(),
        }
    }
}

/// Where the data come from: a CSV file or a generated signal.
#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// CSV file with columns t,y (header optional)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Generate data instead of reading: chirp, linear, constant, pure-noise
    #[arg(long, conflicts_with = "input")]
    pub signal: Option<String>,
    /// Number of generated samples
    #[arg(long, default_value_t = 150)]
    pub n: usize,
    /// Noise standard deviation of generated data
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    /// Random seed (a fresh seed is drawn and reported when absent)
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file (standard output when absent)
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct SmoothArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    #[arg(long, value_enum, default_value_t = Method::Plugin)]
    pub method: Method,
    #[arg(long, value_enum, default_value_t = KernelName::Parabolic)]
    pub kernel: KernelName,
    /// Constant halfwidth (time units) for --method fixed
    #[arg(long)]
    pub halfwidth: Option<f64>,
    /// Known noise standard deviation
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Regularization constant of the plug-in halfwidth
    #[arg(long)]
    pub k2: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    /// rice or fitted
    #[arg(long, value_enum, default_value_t = Method::Fitted)]
    pub method: Method,
    #[arg(long, value_enum, default_value_t = KernelName::Parabolic)]
    pub kernel: KernelName,
    /// Known noise standard deviation
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Figure dataset to emit: fig1 .. fig11
    #[arg(long)]
    pub figure: Option<String>,
    /// Monte Carlo replications (1 = single realization)
    #[arg(long, default_value_t = 1)]
    pub replications: usize,
    /// Estimator for Monte Carlo runs without --figure
    #[arg(long, value_enum, default_value_t = Method::Plugin)]
    pub method: Method,
    #[arg(long, value_enum, default_value_t = KernelName::Parabolic)]
    pub kernel: KernelName,
    #[arg(long)]
    pub halfwidth: Option<f64>,
    #[arg(long)]
    pub k2: Option<f64>,
}

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Config(_) => 3,
        Error::Io(_) | Error::Csv(_) | Error::Parse { .. } | Error::TooShort { .. } | Error::DuplicateTime { .. } | Error::InvalidSeries(_) => 4,
        Error::InsufficientWindow { .. } | Error::DegenerateWindow { .. } | Error::Domain(_) | Error::Unbounded => 5,
        Error::Grid(_) | Error::FitUnderdetermined { .. } => 6,
        _ => 1,
    }
}

/// One-line, machine-parseable error report.
pub fn error_line(err: &Error) -> String {
    let message = err.to_string().replace(['\n', '\r'], " ").replace('"', "'");
    format!("error kind={} code={} message=\"{}\"", err.kind(), exit_code(err), message)
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed={s}");
        s
    })
}

fn signal_spec(src: &SourceArgs, default_kind: Option<SignalKind>) -> Result<Option<SignalSpec>> {
    let kind = match (&src.signal, default_kind) {
        (Some(k), _) => k.parse()?,
        (None, Some(k)) => k,
        (None, None) => return Ok(None),
    };
    let spec = SignalSpec {
        kind,
        n: src.n,
        sigma: src.noise,
        seed: resolve_seed(src.seed),
        interval: (0.0, 1.0),
    };
    spec.validate()?;
    Ok(Some(spec))
}

fn load(src: &SourceArgs) -> Result<TimeSeries> {
    if let Some(path) = &src.input {
        return io::read_series_file(path);
    }
    match signal_spec(src, None)? {
        Some(spec) => Ok(generate(&spec)?.0),
        None => Err(Error::Config("one of --input or --signal is required".into())),
    }
}

fn open_output(out: &OutputArgs) -> Result<Box<dyn Write>> {
    match &out.output {
        None => Ok(Box::new(BufWriter::new(std::io::stdout().lock()))),
        Some(path) => {
            let path = match std::env::var_os(OUTPUT_DIR_ENV) {
                Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
                _ => path.clone(),
            };
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            Ok(Box::new(BufWriter::new(File::create(path)?)))
        }
    }
}

fn check_positive(name: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(Error::Config(format!("--{name} must be positive, got {x}"))),
        _ => Ok(()),
    }
}

fn smooth(args: &SmoothArgs) -> Result<()> {
    check_positive("halfwidth", args.halfwidth)?;
    check_positive("sigma", args.sigma)?;
    let mut series = load(&args.source)?;
    if let Some(s) = args.sigma {
        series = series.with_sigma(s)?;
    }
    let kernel = args.kernel.kernel();
    let estimate: SmoothEstimate = match args.method {
        Method::Fixed => {
            let h = args
                .halfwidth
                .ok_or_else(|| Error::Config("--method fixed requires --halfwidth".into()))?;
            smooth_fixed(&series, &kernel, h)?
        }
        Method::Rice | Method::Fitted => {
            let grid = HalfwidthGrid::for_series(&series)?;
            let (h, _) = if args.method == Method::Rice {
                rice_select(&series, &kernel, &grid)?
            } else {
                fitted_select(&series, &kernel, &grid, None)?
            };
            log::info!("selected halfwidth {h}");
            smooth_fixed(&series, &kernel, h)?
        }
        Method::Plugin => {
            let config = PipelineConfig {
                k2: args.k2.unwrap_or(1.0),
                kernel_q0: kernel,
                ..PipelineConfig::default()
            };
            run_pipeline(&series, &config)?.estimate
        }
    };
    let w = open_output(&args.out)?;
    match args.out.format {
        Format::Csv => io::write_estimate_csv(w, &series, &estimate),
        Format::Json => io::write_estimate_json(w, &series, &estimate),
    }
}

fn diagnostics_table(d: &SelectionDiagnostics) -> Table {
    let mut t = Table {
        figure: "select".into(),
        columns: vec![
            ("h".into(), d.grid.clone()),
            ("asr".into(), d.asr.clone()),
            ("rice".into(), d.rice.clone()),
            ("penalty".into(), d.penalty.clone()),
        ],
        meta: Default::default(),
    };
    if let Some(v) = &d.vhat {
        t.columns.push(("vhat".into(), v.clone()));
    }
    if let Some(v) = &d.fitted_ease {
        t.columns.push(("fitted_ease".into(), v.clone()));
    }
    t
}

fn select(args: &SelectArgs) -> Result<()> {
    check_positive("sigma", args.sigma)?;
    let series = load(&args.source)?;
    let kernel = args.kernel.kernel();
    let grid = HalfwidthGrid::for_series(&series)?;
    let (h, diag) = match args.method {
        Method::Rice => rice_select(&series, &kernel, &grid)?,
        Method::Fitted => fitted_select(&series, &kernel, &grid, args.sigma.map(|s| s * s))?,
        other => {
            return Err(Error::Config(format!(
                "select supports --method rice or fitted, got {other:?}"
            )))
        }
    };
    log::info!("chosen halfwidth {h}");
    let w = open_output(&args.out)?;
    match args.out.format {
        Format::Json => io::write_json(w, &diag),
        Format::Csv => {
            eprintln!("chosen_h={}", io::format_float(h));
            io::write_table_csv(w, &diagnostics_table(&diag))
        }
    }
}

#[derive(Serialize)]
struct SeriesJson<'a> {
    t: &'a [f64],
    y: &'a [f64],
}

fn bench(args: &BenchArgs) -> Result<()> {
    check_positive("halfwidth", args.halfwidth)?;
    if args.replications == 0 {
        return Err(Error::Config("--replications must be at least 1".into()));
    }
    let pipeline = PipelineConfig {
        k2: args.k2.unwrap_or(1.0),
        ..PipelineConfig::default()
    };
    pipeline.validate()?;
    let spec = signal_spec(&args.source, Some(SignalKind::Chirp))?.expect("default kind given");
    let w = open_output(&args.out)?;

    if let Some(fig) = &args.figure {
        let id: FigureId = fig.parse()?;
        let config = FigureConfig {
            replications: args.replications,
            pipeline,
        };
        let table = figure_data(id, &spec, &config)?;
        return match args.out.format {
            Format::Csv => io::write_table_csv(w, &table),
            Format::Json => io::write_json(w, &table),
        };
    }
    if args.source.signal.is_none() {
        return Err(Error::Config("bench requires --figure or --signal".into()));
    }
    if args.replications == 1 {
        let (series, _) = generate(&spec)?;
        return match args.out.format {
            Format::Csv => io::write_series(w, &series),
            Format::Json => io::write_json(w, &SeriesJson { t: series.times(), y: series.values() }),
        };
    }
    let kernel = args.kernel.kernel();
    let estimator = match args.method {
        Method::Fixed => Estimator::Fixed {
            kernel,
            h: args
                .halfwidth
                .ok_or_else(|| Error::Config("--method fixed requires --halfwidth".into()))?,
        },
        Method::Rice => Estimator::Rice { kernel, grid: None },
        Method::Fitted => Estimator::Fitted { kernel, grid: None, sigma2: None },
        Method::Plugin => Estimator::Pipeline(PipelineConfig { kernel_q0: kernel, ..pipeline }),
    };
    let report = monte_carlo(&spec, &estimator, args.replications)?;
    match args.out.format {
        Format::Json => io::write_json(w, &report),
        Format::Csv => {
            let mut table = Table {
                figure: "monte-carlo".into(),
                columns: vec![
                    ("t".into(), report.times.clone()),
                    ("mse".into(), report.per_point_mse.clone()),
                    ("mse_stderr".into(), report.per_point_mse_stderr.clone()),
                ],
                meta: Default::default(),
            };
            if let Some(p) = &report.mean_profile {
                table.columns.push(("mean_halfwidth".into(), p.clone()));
            }
            io::write_table_csv(w, &table)
        }
    }
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Smooth(a) => smooth(a),
        Command::Select(a) => select(a),
        Command::Bench(a) => bench(a),
    }
}
