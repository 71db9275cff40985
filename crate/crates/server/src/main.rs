use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use chrono_tz::Tz;
use clap::{Parser, Subcommand, ValueEnum};
use slowvoice_core::analytics::ReportedFigure;
use slowvoice_server::config::ServiceConfig;
use slowvoice_server::ops::{self, AnalyticsArgs, ExportKind};
use slowvoice_server::service;

#[derive(Parser)]
#[command(name = "slowvoice", version, about = "Anonymous, pre-moderated staff board")]
struct Cli {
    /// Service configuration file.
    #[arg(long, short, global = true, default_value = "slowvoice.toml", env = "SLOWVOICE_CONFIG")]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve,
    /// Edit the access whitelist.
    Whitelist {
        #[command(subcommand)]
        action: ListAction,
    },
    /// Edit the moderator roster.
    Moderator {
        #[command(subcommand)]
        action: ModeratorAction,
    },
    /// Change the release schedule.
    Schedule {
        #[command(subcommand)]
        action: ScheduleAction,
    },
    /// Write line-delimited records from the saved state.
    Export {
        #[arg(value_enum)]
        what: Exportable,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Descriptive statistics over exported data.
    Analytics {
        #[command(subcommand)]
        action: AnalyticsAction,
    },
}

#[derive(Subcommand)]
enum ListAction {
    /// Add an address or an `@domain` pattern.
    Add { entry: String },
    Remove { entry: String },
    List,
}

#[derive(Subcommand)]
enum ModeratorAction {
    /// Add a moderator and print their secret.
    Add {
        id: String,
        /// Use this secret instead of generating one.
        #[arg(long)]
        secret: Option<String>,
    },
    Remove {
        id: String,
    },
    List,
}

#[derive(Subcommand)]
enum ScheduleAction {
    /// Set the daily release times, e.g. `--times 09:00,17:00`.
    Set {
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<String>,
        /// IANA timezone name.
        #[arg(long)]
        timezone: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Exportable {
    Corpus,
    Events,
    Votes,
    Audit,
}

#[derive(Subcommand)]
enum AnalyticsAction {
    Run {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        events: PathBuf,
        /// Report records; the table goes to the same path plus `.txt`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        votes: Option<PathBuf>,
        /// Message ids annotated as potentially uncivil, one per line.
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// Size of the eligible population, for the participation ratio.
        #[arg(long)]
        eligible: Option<usize>,
        #[arg(long, default_value = "Europe/London")]
        timezone: Tz,
        /// Non-working dates (YYYY-MM-DD), comma separated.
        #[arg(long, value_delimiter = ',')]
        non_working: Vec<NaiveDate>,
        /// Published figures to check, e.g. `posts_spanning_3plus_days=40.5`.
        #[arg(long)]
        reported: Vec<ReportedFigure>,
    },
}

fn config(path: &Path) -> Result<ServiceConfig, String> {
    ServiceConfig::load(path).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Serve => {
            let config = config(&cli.config)?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            runtime.block_on(service::serve(config))
        }
        Command::Whitelist { action } => {
            let path = config(&cli.config)?.whitelist_path();
            match action {
                ListAction::Add { entry } => {
                    let added = ops::whitelist_add(&path, &entry)?;
                    println!("{}", if added { "added" } else { "already present" });
                }
                ListAction::Remove { entry } => {
                    let removed = ops::whitelist_remove(&path, &entry)?;
                    println!("{}", if removed { "removed" } else { "not present" });
                }
                ListAction::List => ops::whitelist_list(&path)?.iter().for_each(|e| println!("{e}")),
            }
            Ok(())
        }
        Command::Moderator { action } => {
            let path = config(&cli.config)?.moderators_path();
            match action {
                ModeratorAction::Add { id, secret } => {
                    let secret = ops::moderator_add(&path, &id, secret)?;
                    println!("{id}:{secret}");
                }
                ModeratorAction::Remove { id } => {
                    let removed = ops::moderator_remove(&path, &id)?;
                    println!("{}", if removed { "removed" } else { "not on roster" });
                }
                ModeratorAction::List => ops::moderator_list(&path)?.iter().for_each(|m| println!("{m}")),
            }
            Ok(())
        }
        Command::Schedule {
            action: ScheduleAction::Set { times, timezone },
        } => {
            let schedule = ops::schedule_set(&cli.config, &times, timezone.as_deref())?;
            println!(
                "release times {} ({}); restart the service to apply",
                schedule.time_strings().join(", "),
                schedule.timezone().name()
            );
            Ok(())
        }
        Command::Export { what, out } => {
            let board = ops::open_snapshot(&config(&cli.config)?.state_path())?;
            let kind = match what {
                Exportable::Corpus => ExportKind::Corpus,
                Exportable::Events => ExportKind::Events,
                Exportable::Votes => ExportKind::Votes,
                Exportable::Audit => ExportKind::Audit,
            };
            let text = ops::export(&board, kind);
            match out {
                Some(p) => std::fs::write(&p, text).map_err(|e| format!("{}: {e}", p.display())),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Analytics {
            action:
                AnalyticsAction::Run {
                    corpus,
                    events,
                    out,
                    votes,
                    annotations,
                    eligible,
                    timezone,
                    non_working,
                    reported,
                },
        } => {
            let report = ops::analytics_run(&AnalyticsArgs {
                corpus,
                events,
                out,
                votes,
                annotations,
                eligible,
                timezone,
                non_working,
                reported,
            })?;
            print!("{}", report.render_table());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
