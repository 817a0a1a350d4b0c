//! The `classdist` command-line tool.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use classdist_core::{DistributionSpec, Family, Statistic};
use serde::Serialize;

use crate::aggregate::{self, SamplingSummary};
use crate::config::{ConfigError, ServerConfig, SessionDraft, ENV_STORE};
use crate::conformance::{self, ConformanceError};
use crate::error::Error;
use crate::session::Classroom;
use crate::simulate::{self, SimulationPlan};
use crate::store::{Store, StoreError, StoreOptions};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NOT_FOUND: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "classdist", version, about = "Personal datasets and class sampling distributions")]
pub struct Cli {
    /// Store file; overrides the config file's `store_path`.
    #[arg(long, global = true, env = ENV_STORE)]
    pub store: Option<PathBuf>,
    /// Server config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Exponential,
    Normal,
    LogNormal,
    Uniform,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Exponential => Family::Exponential,
            FamilyArg::Normal => Family::Normal,
            FamilyArg::LogNormal => Family::LogNormal,
            FamilyArg::Uniform => Family::Uniform,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve,
    /// Create a session and print its id and instructor token.
    Create {
        #[arg(long)]
        session_key: Option<String>,
        #[arg(long, value_enum, requires = "params")]
        family: Option<FamilyArg>,
        /// Comma-separated parameters, e.g. `50` or `10,2.5`.
        #[arg(long, value_delimiter = ',', requires = "family", allow_negative_numbers = true)]
        params: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long, allow_negative_numbers = true)]
        tolerance: Option<f64>,
        /// File with one student id per line.
        #[arg(long)]
        roster: Option<PathBuf>,
        #[arg(long)]
        units: Option<String>,
    },
    /// List session ids in creation order.
    Sessions,
    /// Submit answers for a synthetic class through the normal path.
    Simulate {
        #[arg(long)]
        session: String,
        #[arg(long)]
        students: usize,
        #[arg(long)]
        seed: u64,
        /// Relative perturbation applied to every submitted value.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        noise: f64,
    },
    /// Show the class's estimates at one sample size.
    Summary {
        #[arg(long)]
        session: String,
        #[arg(long)]
        estimator: Statistic,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Write accepted submissions as CSV.
    Export {
        #[arg(long)]
        session: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write or check a conformance vector file.
    Vectors {
        #[arg(long, conflicts_with = "check")]
        out: Option<PathBuf>,
        #[arg(long)]
        check: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Domain(#[from] Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Conformance(#[from] ConformanceError),
    #[error(transparent)]
    Serve(#[from] crate::api::ServeError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        CliError::Domain(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(e) => match e {
                Error::SessionNotFound(_) | Error::NotOnRoster(_) | Error::NoSubmissions(_) => {
                    EXIT_NOT_FOUND
                }
                Error::Storage(_) => EXIT_IO,
                _ => EXIT_VALIDATION,
            },
            CliError::Config(ConfigError::Read { .. }) => EXIT_IO,
            CliError::Config(_) | CliError::Usage(_) => EXIT_VALIDATION,
            CliError::Conformance(ConformanceError::Io(_)) => EXIT_IO,
            CliError::Conformance(_) => EXIT_VALIDATION,
            CliError::Serve(_) | CliError::Io { .. } => EXIT_IO,
        }
    }
}

fn server_config(cli: &Cli) -> Result<Option<ServerConfig>, CliError> {
    cli.config.as_deref().map(ServerConfig::load).transpose().map_err(Into::into)
}

fn store_path(cli: &Cli) -> Result<PathBuf, CliError> {
    if let Some(p) = &cli.store {
        return Ok(p.clone());
    }
    match server_config(cli)? {
        Some(cfg) => Ok(cfg.store_path),
        None => Err(CliError::Usage(format!(
            "no store configured: pass --store, set {ENV_STORE}, or pass --config"
        ))),
    }
}

fn read_roster(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

fn write_json(out: &mut dyn Write, value: &impl Serialize) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}

const BAR_WIDTH: usize = 40;

/// Fixed-width text rendering of a summary.
pub fn render_summary_table(s: &SamplingSummary) -> String {
    let mut out = String::new();
    let se = s
        .empirical_se
        .map_or_else(|| "n/a".to_owned(), |v| format!("{v:.6}"));
    out.push_str(&format!("estimator     {}\n", s.estimator));
    out.push_str(&format!("n             {}\n", s.n));
    out.push_str(&format!("submissions   {}\n", s.submission_count));
    out.push_str(&format!("empirical SE  {se}\n"));
    let h = &s.histogram;
    let peak = h.counts.iter().copied().max().unwrap_or(0).max(1);
    for (i, &count) in h.counts.iter().enumerate() {
        let len = (count as usize * BAR_WIDTH).div_ceil(peak as usize);
        out.push_str(&format!(
            "[{:>12.4}, {:>12.4}) {:<width$} {:>6} {:.6}\n",
            h.bin_edges[i],
            h.bin_edges[i + 1],
            "#".repeat(len),
            count,
            h.densities[i],
            width = BAR_WIDTH
        ));
    }
    out
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    };
    match &cli.command {
        Command::Serve => {
            let cfg = match (server_config(&cli)?, &cli.store) {
                (Some(cfg), Some(p)) => ServerConfig {
                    store_path: p.clone(),
                    ..cfg
                },
                (Some(cfg), None) => cfg,
                (None, Some(p)) => ServerConfig::new(p).with_overrides(|k| std::env::var(k).ok())?,
                (None, None) => {
                    return Err(CliError::Usage(format!(
                        "serve needs --config <path>, --store <path> or {ENV_STORE}"
                    )))
                }
            };
            let rt = tokio::runtime::Runtime::new().map_err(|source| CliError::Io {
                path: PathBuf::from("<runtime>"),
                source,
            })?;
            rt.block_on(crate::api::serve(cfg))?;
        }
        Command::Create {
            session_key,
            family,
            params,
            sizes,
            tolerance,
            roster,
            units,
        } => {
            let spec = match (family, params) {
                (Some(f), Some(p)) => Some(
                    DistributionSpec::new((*f).into(), p).map_err(|e| Error::invalid("spec", e.to_string()))?,
                ),
                _ => None,
            };
            let draft = SessionDraft {
                session_key: session_key.clone(),
                spec,
                sample_sizes: sizes.clone(),
                tolerance: *tolerance,
                roster: roster.as_deref().map(read_roster).transpose()?,
                units: units.clone(),
            };
            let classroom = Classroom::new(Store::open(store_path(&cli)?)?);
            let (session_id, instructor_token) = classroom.open_session(draft)?;
            write_json(
                out,
                &crate::api::CreatedSession {
                    session_id,
                    instructor_token,
                },
            )
            .map_err(io)?;
        }
        Command::Sessions => {
            let store = Store::open_read_only(store_path(&cli)?)?;
            for id in store.list_sessions() {
                writeln!(out, "{id}").map_err(io)?;
            }
        }
        Command::Simulate {
            session,
            students,
            seed,
            noise,
        } => {
            let options = StoreOptions {
                sync: false,
                ..StoreOptions::default()
            };
            let classroom = Classroom::new(Store::open_with(store_path(&cli)?, options)?);
            let plan = SimulationPlan {
                students: *students,
                seed: *seed,
                noise: *noise,
            };
            let report = simulate::run(&classroom, session, &plan)?;
            // Appends were not fsynced; the atomic rewrite makes them durable.
            classroom.store().compact()?;
            write_json(out, &report).map_err(io)?;
        }
        Command::Summary {
            session,
            estimator,
            n,
            format,
            bins,
        } => {
            let classroom = Classroom::new(Store::open_read_only(store_path(&cli)?)?);
            let summary = aggregate::class_summary(&classroom, session, *estimator, *n, *bins)?;
            match format {
                Format::Json => write_json(out, &summary).map_err(io)?,
                Format::Table => {
                    out.write_all(render_summary_table(&summary).as_bytes())
                        .map_err(io)?;
                    if *estimator == Statistic::Mean && summary.submission_count >= 2 {
                        let c = aggregate::error_comparison(&classroom, session, *n)?;
                        let ratio = c.ratio.map_or_else(|| "n/a".into(), |r| format!("{r:.4}"));
                        writeln!(
                            out,
                            "mean reported error {:.6} / sd of reported means {:.6} = {ratio}",
                            c.mean_of_reported_errors, c.sd_of_reported_means
                        )
                        .map_err(io)?;
                    }
                }
            }
        }
        Command::Export { session, out: path } => {
            let classroom = Classroom::new(Store::open_read_only(store_path(&cli)?)?);
            let csv = aggregate::export_csv(&classroom, session)?;
            std::fs::write(path, csv).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
        }
        Command::Vectors { out: path, check } => match (path, check) {
            (_, Some(check)) => {
                let vectors = conformance::read_file(check)?;
                conformance::verify_all(&vectors)?;
                writeln!(out, "{} vectors reproduce bit-exactly", vectors.len()).map_err(io)?;
            }
            (Some(path), None) => conformance::write_file(path, &conformance::standard_set())?,
            (None, None) => return Err(CliError::Usage("pass --out or --check".into())),
        },
    }
    Ok(())
}
