//! The `gb` command line.
//!
//! Every subcommand prints its primary artifact to stdout (CSV for time
//! series, JSON otherwise). With `--out DIR` all artifacts are also written
//! there as `<subcommand>.json` and `<subcommand>*.csv`. Errors go to stderr
//! as one JSON object; the exit code tells the class apart.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gb_core::catalog::{self, CatalogEntry};
use gb_core::conjugate::GreenOptions;
use gb_core::hyperbolicity::{CocycleOptions, SampledCocycle, TheoremAOptions, TheoremCOptions};
use gb_core::index_form::ScanConfig;
use gb_core::model::PhasePoint;
use serde::Serialize;

use crate::checks::{factorization_sweep, monotone_sweep, FactorizationDoc, FactorizationSweep, MonotoneDoc};
use crate::error::{CliError, CliResult};
use crate::pipeline::{self, FrameKind, HyperbolicityOptions, MapsFile, Pipeline, Status};
use crate::report::{to_json, GreensDoc, PositivityDoc, SystemDoc, Table};
use crate::system::{resolve, SetFile, SystemFile};

#[derive(Debug, Parser)]
#[command(name = "gb", version, about = "Green bundles, index forms and hyperbolicity checks for convex Hamiltonian systems")]
pub struct Cli {
    /// Integration tolerance.
    #[arg(long, global = true, default_value_t = gb_core::flow::DEFAULT_TOL, allow_negative_numbers = true)]
    pub tol: f64,
    /// Worker threads for parallel scans.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    /// Directory for JSON and CSV reports.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed of the random property sweeps.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Whitespace-separated columns with a `#` header instead of CSV.
    #[arg(long, global = true)]
    pub plot_data: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Catalog of builtin systems.
    Systems {
        #[command(subcommand)]
        action: SystemsAction,
    },
    /// Orbit time series: t, x…, p…, H.
    Orbit {
        #[command(flatten)]
        at: StartArgs,
        /// Signed duration.
        #[arg(long = "T", default_value_t = 10.0, allow_negative_numbers = true)]
        length: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
    },
    /// Jacobi frame time series.
    Jacobi {
        #[command(flatten)]
        at: StartArgs,
        #[arg(long = "T", default_value_t = 10.0, allow_negative_numbers = true)]
        length: f64,
        #[arg(long, value_enum, default_value_t = InitArg::Vertical)]
        init: InitArg,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
    },
    /// Riccati slopes of the vertical frame against the uniform bound.
    Riccati {
        #[command(flatten)]
        at: StartArgs,
        #[arg(long = "T", default_value_t = 10.0)]
        length: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
    },
    /// Conjugate points of the vertical along the orbit.
    Conjugate {
        #[command(flatten)]
        at: StartArgs,
        #[arg(long = "T", default_value_t = 10.0)]
        length: f64,
    },
    /// Green bundles by horizon doubling.
    Greens {
        #[command(flatten)]
        at: StartArgs,
        /// Initial horizon.
        #[arg(long = "T", default_value_t = 20.0)]
        horizon: f64,
        /// Largest horizon tried.
        #[arg(long, default_value_t = 160.0)]
        cap: f64,
        /// Cauchy tolerance between successive horizons.
        #[arg(long, default_value_t = 1e-8)]
        gap_tol: f64,
        /// Also check monotonicity of finite-horizon slopes on this many
        /// random horizon pairs drawn from [1, T].
        #[arg(long)]
        monotone_pairs: Option<usize>,
    },
    /// Uniform positivity scan of the index form.
    Index {
        #[command(flatten)]
        set: SetArgs,
        /// Window lengths.
        #[arg(long = "T", value_delimiter = ',', default_values_t = [5.0, 10.0, 20.0, 40.0])]
        lengths: Vec<f64>,
        /// Finite elements per window.
        #[arg(long, default_value_t = 512)]
        mesh: usize,
        #[arg(long, value_enum, default_value_t = Toggle::Off)]
        midpoint_constraint: Toggle,
        /// Also compare direct and factorized index forms on this many random
        /// field pairs over the first window.
        #[arg(long)]
        random_fields: Option<usize>,
    },
    /// Hyperbolicity of an invariant set.
    Hyperbolicity {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, value_enum, default_value_t = PipelineArg::TheoremA)]
        pipeline: PipelineArg,
        /// Initial Green horizon, or the cocycle horizon for `--pipeline cocycle`.
        #[arg(long)]
        horizon: Option<f64>,
        /// Growth threshold of the cocycle pipeline.
        #[arg(long, default_value_t = 1e3)]
        threshold: f64,
        /// Window lengths of the positivity scan.
        #[arg(long = "T", value_delimiter = ',', default_values_t = [5.0, 10.0, 20.0, 40.0])]
        lengths: Vec<f64>,
        #[arg(long, default_value_t = 512)]
        mesh: usize,
    },
    /// Quasi-hyperbolicity of a linear cocycle.
    Cocycle {
        /// Constant map over one base point, rows separated by `;`.
        #[arg(long, conflicts_with = "maps_file", allow_hyphen_values = true)]
        matrix: Option<String>,
        /// JSON file with `maps`, optional `next`, `prev` and `step`.
        #[arg(long)]
        maps_file: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[arg(long, default_value_t = 50.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1e3)]
        threshold: f64,
        #[arg(long, default_value_t = 360)]
        mesh: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum SystemsAction {
    List,
    /// Print the full definition of a builtin system.
    Export {
        name: String,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Debug, Clone, Args)]
pub struct StartArgs {
    /// Catalog name (e.g. `mathieu(0.2, 2)`) or system file.
    #[arg(long, default_value = "pendulum")]
    pub system: String,
    /// Start position; the system's reference point when omitted.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub p: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub clock: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SetArgs {
    #[arg(long, default_value = "pendulum")]
    pub system: String,
    /// Set file (equilibrium, periodic orbit or explicit samples); the
    /// system's default set when omitted.
    #[arg(long)]
    pub set: Option<PathBuf>,
    /// Time spacing of the samples.
    #[arg(long, default_value_t = 0.05)]
    pub spacing: f64,
    #[arg(long, default_value_t = 4)]
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Vertical,
    Horizontal,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PipelineArg {
    #[value(name = "theoremA")]
    TheoremA,
    #[value(name = "theoremC")]
    TheoremC,
    Cocycle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Toml,
}

/// Validated global settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub tol: f64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub plot_data: bool,
}

impl RunConfig {
    fn from_cli(cli: &Cli) -> CliResult<Self> {
        positive("tol", cli.tol)?;
        if cli.workers == 0 {
            return Err(CliError::config("workers", "worker count must be at least 1"));
        }
        if let Some(dir) = &cli.out {
            check_writable(dir)?;
        }
        Ok(RunConfig {
            tol: cli.tol,
            workers: cli.workers,
            out: cli.out.clone(),
            seed: cli.seed,
            plot_data: cli.plot_data,
        })
    }
}

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(name, format!("{name} must be positive, got {v}")))
    }
}

fn check_writable(dir: &Path) -> CliResult<()> {
    let fail = |e: std::io::Error| CliError::config("out", format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(fail)?;
    let probe = dir.join(".gb-write-check");
    std::fs::write(&probe, b"").map_err(fail)?;
    std::fs::remove_file(&probe).map_err(fail)
}

#[derive(Debug, Serialize)]
struct GreensRun {
    greens: GreensDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    monotone: Option<MonotoneDoc>,
}

#[derive(Debug, Serialize)]
struct IndexRun {
    positivity: PositivityDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    factorization: Option<FactorizationDoc>,
}

/// What a subcommand produced.
struct Output {
    name: &'static str,
    json: Option<String>,
    tables: Vec<(&'static str, Table)>,
    /// Print the first table instead of the JSON.
    table_first: bool,
    status: Status,
}

impl Output {
    fn json<T: Serialize>(name: &'static str, doc: &T) -> Self {
        Output { name, json: Some(to_json(doc)), tables: Vec::new(), table_first: false, status: Status::Positive }
    }

    fn with_table(mut self, suffix: &'static str, table: Table) -> Self {
        self.tables.push((suffix, table));
        self
    }

    fn series(mut self) -> Self {
        self.table_first = true;
        self
    }

    fn status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }
}

fn start_point(args: &StartArgs, entry: &CatalogEntry) -> CliResult<PhasePoint> {
    let r = &entry.reference;
    let x: Vec<f64> = args.x.clone().unwrap_or_else(|| r.x.iter().copied().collect());
    let p: Vec<f64> = args.p.clone().unwrap_or_else(|| r.p.iter().copied().collect());
    if x.len() != entry.dim() || p.len() != entry.dim() {
        return Err(CliError::config("start", format!("start point needs {} coordinates", entry.dim())));
    }
    Ok(PhasePoint::new(&x, &p, args.clock.unwrap_or(r.clock)))
}

fn set_samples(args: &SetArgs, entry: &CatalogEntry, tol: f64) -> CliResult<(Vec<PhasePoint>, f64)> {
    positive("spacing", args.spacing)?;
    let source = args.set.as_deref().map(SetFile::read).transpose()?.map(SetFile::into_source);
    pipeline::samples(entry, source, args.spacing, args.samples, tol)
}

fn execute(command: &Command, cfg: &RunConfig) -> CliResult<Output> {
    let tol = cfg.tol;
    match command {
        Command::Systems { action: SystemsAction::List } => {
            let mut docs: Vec<SystemDoc> = Vec::new();
            for name in catalog::NAMES {
                docs.push((&catalog::get(name)?).into());
            }
            Ok(Output::json("systems", &docs))
        }
        Command::Systems { action: SystemsAction::Export { name, format } } => {
            let file = SystemFile::export(&catalog::get(name)?);
            let text = match format {
                Format::Json => file.to_json() + "\n",
                Format::Toml => file.to_toml()?,
            };
            Ok(Output { name: "system", json: Some(text), tables: Vec::new(), table_first: false, status: Status::Positive })
        }
        Command::Orbit { at, length, dt } => {
            positive("dt", *dt)?;
            let entry = resolve(&at.system)?;
            let (doc, table) = pipeline::orbit(&entry, &start_point(at, &entry)?, *length, *dt, tol)?;
            Ok(Output::json("orbit", &doc).with_table("", table).series())
        }
        Command::Jacobi { at, length, init, dt } => {
            positive("dt", *dt)?;
            let entry = resolve(&at.system)?;
            let kind = match init {
                InitArg::Vertical => FrameKind::Vertical,
                InitArg::Horizontal => FrameKind::Horizontal,
                InitArg::Full => FrameKind::Full,
            };
            let (doc, table) = pipeline::jacobi(&entry, &start_point(at, &entry)?, *length, kind, *dt, tol)?;
            Ok(Output::json("jacobi", &doc).with_table("", table).series())
        }
        Command::Riccati { at, length, dt } => {
            positive("dt", *dt)?;
            let entry = resolve(&at.system)?;
            let (doc, table) = pipeline::riccati(&entry, &start_point(at, &entry)?, *length, *dt, tol)?;
            let status = match &doc.check {
                Some(c) if !c.pass => Status::Negative,
                _ => Status::Positive,
            };
            Ok(Output::json("riccati", &doc).with_table("", table).series().status(status))
        }
        Command::Conjugate { at, length } => {
            let entry = resolve(&at.system)?;
            let doc = pipeline::conjugate(&entry, &start_point(at, &entry)?, *length, tol)?;
            let mut table = Table::new(["time", "multiplicity"]);
            for c in &doc.conjugate_times {
                table.push([c.time, c.multiplicity as f64]);
            }
            Ok(Output::json("conjugate", &doc).with_table("", table))
        }
        Command::Greens { at, horizon, cap, gap_tol, monotone_pairs } => {
            positive("T", *horizon)?;
            positive("gap-tol", *gap_tol)?;
            let entry = resolve(&at.system)?;
            let point = start_point(at, &entry)?;
            let opts = GreenOptions { horizon: *horizon, tol: *gap_tol, cap: *cap, integ_tol: tol };
            let (doc, table) = pipeline::greens(&entry, &point, &opts)?;
            let monotone = match monotone_pairs {
                Some(n) => Some(monotone_sweep(&entry, &point, *n, (1.0, horizon.max(1.0)), tol, cfg.seed, cfg.workers)?),
                None => None,
            };
            let out = GreensRun { greens: doc, monotone };
            Ok(Output::json("greens", &out).with_table("_gap", table))
        }
        Command::Index { set, lengths, mesh, midpoint_constraint, random_fields } => {
            for &t in lengths {
                positive("T", t)?;
            }
            let entry = resolve(&set.system)?;
            let (samples, _) = set_samples(set, &entry, tol)?;
            let scan = ScanConfig {
                t_list: lengths.clone(),
                n_elem: *mesh,
                midpoint_constrained: *midpoint_constraint == Toggle::On,
                integ_tol: tol,
                ..Default::default()
            };
            let (doc, table) = pipeline::index(&entry, &samples, &scan, cfg.workers)?;
            let factorization = match random_fields {
                Some(n) => {
                    let c = samples[0].clock;
                    let opts = FactorizationSweep { fields: *n, window: (c, c + lengths[0]), n_elem: *mesh, tol };
                    Some(factorization_sweep(&entry, &samples[0], &opts, cfg.seed, cfg.workers)?)
                }
                None => None,
            };
            let out = IndexRun { positivity: doc, factorization };
            Ok(Output::json("index", &out).with_table("", table))
        }
        Command::Hyperbolicity { set, pipeline: which, horizon, threshold, lengths, mesh } => {
            positive("threshold", *threshold)?;
            let entry = resolve(&set.system)?;
            let (samples, step) = set_samples(set, &entry, tol)?;
            let green = GreenOptions {
                horizon: horizon.unwrap_or(GreenOptions::default().horizon),
                integ_tol: tol,
                ..Default::default()
            };
            let opts = HyperbolicityOptions {
                theorem_a: TheoremAOptions {
                    scan: ScanConfig { t_list: lengths.clone(), n_elem: *mesh, integ_tol: tol, ..Default::default() },
                    theorem_c: TheoremCOptions { green, integ_tol: tol, ..Default::default() },
                    ..Default::default()
                },
                cocycle: CocycleOptions {
                    horizon: horizon.unwrap_or(CocycleOptions::default().horizon),
                    threshold: *threshold,
                    ..Default::default()
                },
                tol,
            };
            let which = match which {
                PipelineArg::TheoremA => Pipeline::TheoremA,
                PipelineArg::TheoremC => Pipeline::TheoremC,
                PipelineArg::Cocycle => Pipeline::Cocycle,
            };
            let (doc, fits, status) = pipeline::hyperbolicity(&entry, &samples, step, which, &opts)?;
            Ok(Output::json("hyperbolicity", &doc).with_table("_fits", fits).status(status))
        }
        Command::Cocycle { matrix, maps_file, step, horizon, threshold, mesh } => {
            positive("step", *step)?;
            positive("horizon", *horizon)?;
            positive("threshold", *threshold)?;
            let cocycle = match (matrix, maps_file) {
                (Some(m), _) => SampledCocycle::constant(pipeline::parse_matrix(m)?, *step)?,
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| CliError::config("maps_file", format!("{}: {e}", path.display())))?;
                    let file: MapsFile =
                        serde_json::from_str(&text).map_err(|e| CliError::config("maps_file", e.to_string()))?;
                    file.cocycle()?
                }
                (None, None) => return Err(CliError::config("cocycle", "give --matrix or --maps-file")),
            };
            let opts = CocycleOptions { horizon: *horizon, threshold: *threshold, mesh: *mesh };
            let (doc, status) = pipeline::cocycle_doc(&cocycle, &opts)?;
            let mut fits = Table::new(["bundle", "C", "lambda", "residual"]);
            for (label, fit) in [("stable", &doc.stable_fit), ("unstable", &doc.unstable_fit)] {
                if let Some(f) = fit {
                    fits.push_labelled(label, [f.c, f.lambda, f.residual]);
                }
            }
            Ok(Output::json("cocycle", &doc).with_table("_fits", fits).status(status))
        }
    }
}

fn emit(out: &Output, cfg: &RunConfig) -> CliResult<()> {
    if let Some(dir) = &cfg.out {
        let ext = if cfg.plot_data { "dat" } else { "csv" };
        if let Some(json) = &out.json {
            std::fs::write(dir.join(format!("{}.json", out.name)), json)?;
        }
        for (suffix, table) in &out.tables {
            std::fs::write(dir.join(format!("{}{suffix}.{ext}", out.name)), table.render(cfg.plot_data))?;
        }
    }
    let primary = match (&out.tables.first(), &out.json) {
        (Some((_, t)), _) if out.table_first => t.render(cfg.plot_data),
        (_, Some(json)) => json.clone(),
        _ => String::new(),
    };
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(primary.as_bytes())?;
    stdout.flush()?;
    Ok(())
}

fn init_logging() {
    let env = env_logger::Env::new().filter("GB_LOG");
    // A second initialization (repeated `run` calls in one process) is harmless.
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

fn report_error(e: &CliError) -> i32 {
    eprintln!("{}", e.to_json());
    e.exit_code()
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            return report_error(&CliError::config("arguments", e.render().to_string().trim_end()));
        }
    };
    let result = RunConfig::from_cli(&cli).and_then(|cfg| {
        log::debug!("{cfg:?}");
        let out = execute(&cli.command, &cfg)?;
        emit(&out, &cfg)?;
        Ok(out.status)
    });
    match result {
        Ok(Status::Positive) => 0,
        Ok(status) => {
            let (kind, class) = match status {
                Status::Negative => ("negative_verdict", crate::error::ErrorClass::HypothesisNotSatisfied),
                _ => ("indeterminate_verdict", crate::error::ErrorClass::Numerical),
            };
            let message = "see the report on stdout for the per-stage diagnostics";
            report_error(&CliError { class, kind: kind.into(), message: message.into() })
        }
        Err(e) => report_error(&e),
    }
}
