//! The `qtrack` command line.
//!
//! Exit codes: 0 success, 1 domain error (not found, conflict, parse, server
//! unreachable), 2 usage error. Data goes to stdout, diagnostics to stderr.

pub mod bundle;
pub mod client;
pub mod render;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qtrack_core::{diff_calibration, generate_synthetic_calibration, Run};
use qtrack_server::{ApiError, ServerConfig, AUTH_TOKEN_ENV, DEFAULT_ADDR, STORE_DIR_ENV};
use qtrack_storage::{Store, StoreError};

use crate::client::Client;

pub const TRACKING_URI_ENV: &str = "QTRACK_TRACKING_URI";
pub const DEFAULT_TRACKING_URI: &str = "http://127.0.0.1:5600";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("{}: {}", serde_json::to_value(.0.error_code).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(), .0.message)]
    Api(ApiError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) | CliError::Api(_) => 1,
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Missing(_) => CliError::Usage(format!("{e} (pass --create to initialize it)")),
            other => CliError::Domain(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "qtrack", version, about = "Provenance tracking for quantum experiments")]
pub struct Cli {
    /// Tracking server base URL.
    #[arg(long, global = true, env = TRACKING_URI_ENV, default_value = DEFAULT_TRACKING_URI)]
    pub uri: String,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the tracking server until interrupted.
    Serve(ServeArgs),
    /// List or create experiments.
    #[command(subcommand)]
    Experiments(ExperimentsCmd),
    /// Search and inspect runs.
    #[command(subcommand)]
    Runs(RunsCmd),
    /// Calibration tools.
    #[command(subcommand)]
    Calib(CalibCmd),
    /// Generate deterministic fixtures.
    #[command(subcommand)]
    Fixtures(FixturesCmd),
    /// Write an experiment's runs and artifacts to a bundle directory.
    Export(ExportArgs),
    /// Load an export bundle into a store directory.
    #[command(hide = true)]
    Import(ImportArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = DEFAULT_ADDR)]
    pub addr: String,
    #[arg(long, env = STORE_DIR_ENV)]
    pub store: PathBuf,
    /// Initialize the store if the directory does not exist.
    #[arg(long)]
    pub create: bool,
    /// Static dashboard assets to serve under /ui/.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentsCmd {
    List,
    Create { name: String },
}

#[derive(Debug, Subcommand)]
pub enum RunsCmd {
    Search {
        /// Experiment name; repeat for several.
        #[arg(short = 'e', long = "experiment", required = true)]
        experiments: Vec<String>,
        #[arg(short = 'f', long)]
        filter: Option<String>,
        /// Ordering term such as "metrics.fidelity DESC"; repeatable.
        #[arg(long)]
        order_by: Vec<String>,
    },
    Show {
        run_id: String,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum CalibCmd {
    /// Per-qubit and per-gate deltas between the calibrations of two runs (b − a).
    Diff {
        run_a: String,
        run_b: String,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum FixturesCmd {
    /// Synthetic calibration set as canonical JSON.
    Calibration {
        #[arg(long)]
        seed: u64,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        qubits: u32,
    },
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(short = 'e', long = "experiment")]
    pub experiment: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    #[arg(long)]
    pub from: PathBuf,
    #[arg(long, env = STORE_DIR_ENV)]
    pub store: PathBuf,
    #[arg(long)]
    pub create: bool,
}

/// Parse `args` and run; returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return e.exit_code();
        }
    };
    match execute(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn token() -> Option<String> {
    std::env::var(AUTH_TOKEN_ENV).ok().filter(|t| !t.is_empty())
}

fn emit(out: &mut dyn Write, s: &str) -> Result<(), CliError> {
    out.write_all(s.as_bytes())
        .map_err(|e| CliError::Domain(format!("stdout: {e}")))
}

fn json_line(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string(v).expect("serializable");
    s.push('\n');
    s
}

fn tabular(format: Format, headers: &[String], rows: &[Vec<String>]) -> String {
    match format {
        Format::Csv => render::csv(headers, rows),
        _ => render::table(headers, rows),
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let client = || Client::new(&cli.uri, token());
    match cli.command {
        Command::Serve(args) => serve(args, err),
        Command::Experiments(ExperimentsCmd::List) => {
            let exps = client().experiments()?;
            if cli.format == Format::Json {
                return emit(out, &json_line(&exps));
            }
            let (h, rows) = render::experiment_rows(&exps);
            emit(out, &tabular(cli.format, &h, &rows))
        }
        Command::Experiments(ExperimentsCmd::Create { name }) => {
            let exp = client().create_experiment(&name)?;
            if cli.format == Format::Json {
                return emit(out, &json_line(&exp));
            }
            let (h, rows) = render::experiment_rows(std::slice::from_ref(&exp));
            emit(out, &tabular(cli.format, &h, &rows))
        }
        Command::Runs(RunsCmd::Search {
            experiments,
            filter,
            order_by,
        }) => {
            if let Some(f) = &filter {
                if let Err(e) = qtrack_query::parse_filter(f) {
                    let _ = writeln!(err, "  {f}");
                    let col = f.get(..e.offset).map_or(e.offset, |p| p.chars().count());
                    let _ = writeln!(err, "  {}^", " ".repeat(col));
                    return Err(CliError::Domain(e.to_string()));
                }
            }
            if let Err(e) = qtrack_query::OrderBySpec::parse(&order_by) {
                return Err(CliError::Domain(format!("order-by: {e}")));
            }
            let c = client();
            let ids = experiments
                .iter()
                .map(|n| c.experiment_by_name(n).map(|e| e.experiment_id))
                .collect::<Result<Vec<_>, _>>()?;
            let order = (!order_by.is_empty()).then_some(order_by);
            let runs = c.search_all(ids, filter, order)?;
            if cli.format == Format::Json {
                return emit(out, &json_line(&runs));
            }
            let (h, rows) = render::run_rows(&runs);
            emit(out, &tabular(cli.format, &h, &rows))
        }
        Command::Runs(RunsCmd::Show { run_id, json }) => {
            let run = client().run(&run_id)?;
            if json || cli.format == Format::Json {
                return emit(out, &json_line(&run));
            }
            if cli.format == Format::Csv {
                let (h, rows) = render::run_rows(std::slice::from_ref(&run));
                return emit(out, &render::csv(&h, &rows));
            }
            emit(out, &render::run_detail(&run))
        }
        Command::Calib(CalibCmd::Diff { run_a, run_b, json }) => {
            let c = client();
            let (a, b) = (c.run(&run_a)?, c.run(&run_b)?);
            let (ca, cb) = (calibration_of(&a)?, calibration_of(&b)?);
            let diff = diff_calibration(ca, cb);
            if json || cli.format == Format::Json {
                if ca.calibration_set_id == cb.calibration_set_id {
                    let _ = writeln!(err, "note: identical calibration set {}", ca.calibration_set_id);
                }
                return emit(out, &json_line(&diff));
            }
            emit(out, &render::calibration_diff(&diff))
        }
        Command::Fixtures(FixturesCmd::Calibration { seed, qubits }) => {
            let set = generate_synthetic_calibration(seed, qubits).map_err(|e| CliError::Usage(e.to_string()))?;
            emit(out, &json_line(&set))
        }
        Command::Export(args) => {
            let c = client();
            let exp = c.experiment_by_name(&args.experiment)?;
            bundle::prepare_out_dir(&args.out, args.force)?;
            let m = bundle::export(&c, &exp, &args.out)?;
            let _ = writeln!(
                err,
                "exported {} runs and {} blobs to {}",
                m.run_ids.len(),
                m.blobs.len(),
                args.out.display()
            );
            Ok(())
        }
        Command::Import(args) => {
            let store = Store::open(&args.store, args.create)?;
            let m = bundle::import(&args.from, &store)?;
            let _ = writeln!(
                err,
                "imported {} runs and {} blobs into {}",
                m.run_ids.len(),
                m.blobs.len(),
                args.store.display()
            );
            Ok(())
        }
    }
}

fn calibration_of(run: &Run) -> Result<&qtrack_core::CalibrationSet, CliError> {
    run.provenance.calibration.as_ref().ok_or_else(|| {
        CliError::Domain(format!(
            "run {} has no calibration record; attach one via the provenance endpoint",
            run.run_id
        ))
    })
}

fn serve(args: ServeArgs, err: &mut dyn Write) -> Result<(), CliError> {
    let store = Store::open(&args.store, args.create)?;
    if let Some(ui) = &args.ui_dir {
        if !ui.is_dir() {
            return Err(CliError::Usage(format!("--ui-dir {} is not a directory", ui.display())));
        }
    }
    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
    let config = ServerConfig {
        auth_token: token(),
        ui_dir: args.ui_dir,
    };
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Domain(format!("runtime: {e}")))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(&args.addr)
            .await
            .map_err(|e| CliError::Domain(format!("cannot listen on {}: {e}", args.addr)))?;
        let addr = listener.local_addr().map_err(|e| CliError::Domain(e.to_string()))?;
        let _ = writeln!(err, "qtrack listening on http://{addr}");
        let _ = err.flush();
        qtrack_server::serve(listener, Arc::new(store), config, qtrack_server::shutdown_signal())
            .await
            .map_err(|e| CliError::Domain(format!("server: {e}")))
    })
}
