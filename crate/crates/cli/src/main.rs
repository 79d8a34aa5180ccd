//! Command-line front end: scans a fixture repository for dependency ranges
//! that admit binary-incompatible library versions.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use abirange_core::abi::{load_history, load_snapshot};
use abirange_core::diff::{collect_incompatible_changes, diff_backward, diff_forward};
use abirange_core::oracle::simulate_link;
use abirange_core::scan::{check_pair, emit_report, load_manifest, scan, ReportFormat, ScanOutput};
use abirange_core::usage::{load_usage_facts, read_elf_imports_file};
use abirange_core::{IncompatibleChange, VersionRange};

#[derive(Parser)]
#[command(name = "abirange", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => ReportFormat::Text,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DiffDirection {
    Backward,
    Forward,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Scan every (application, library) pair in a repository manifest.
    /// Exits 1 when bugs are found and 2 when any pair fails to load.
    Scan {
        repo: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Worker threads; 0 picks a default.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// List the incompatible changes between adjacent releases of a history.
    Changes {
        history: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Diff two snapshots of the same library.
    Diff {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        direction: DiffDirection,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Check one usage-facts file against one history. Exits 1 on bugs.
    Detect {
        history: PathBuf,
        usage: PathBuf,
        /// Dependency constraint, e.g. ">= 2.37.6" or ">= 1.0, << 2.0".
        #[arg(long, default_value = "")]
        depends: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Print the dynamic symbols a binary imports.
    ElfImports {
        binary: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Run the link simulator against every release.
    #[command(hide = true)]
    Oracle {
        history: PathBuf,
        usage: PathBuf,
        #[arg(long, default_value = "")]
        depends: String,
    },
}

fn parse_range(text: &str) -> Result<VersionRange> {
    if text.trim().is_empty() {
        return Ok(VersionRange::any());
    }
    VersionRange::parse(text).with_context(|| format!("invalid --depends {text:?}"))
}

fn json<T: serde::Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    text.into_bytes()
}

fn changes_out(changes: &BTreeSet<IncompatibleChange>, format: Format) -> Vec<u8> {
    match format {
        Format::Json => json(&changes.iter().collect::<Vec<_>>()),
        Format::Text => changes
            .iter()
            .map(|c| format!("{c}\n"))
            .collect::<String>()
            .into_bytes(),
    }
}

fn run(cli: Cli) -> Result<(Vec<u8>, u8)> {
    match cli.command {
        Command::Scan { repo, format, jobs } => {
            let manifest = load_manifest(&repo)?;
            let output = scan(&manifest, jobs);
            Ok((
                emit_report(&output, format.into()),
                output.exit_code() as u8,
            ))
        }
        Command::Changes { history, format } => {
            let h = load_history(&history)?;
            Ok((changes_out(&collect_incompatible_changes(&h), format), 0))
        }
        Command::Diff {
            a,
            b,
            direction,
            format,
        } => {
            let a = load_snapshot(&a)?;
            let b = load_snapshot(&b)?;
            let mut changes = BTreeSet::new();
            if matches!(direction, DiffDirection::Backward | DiffDirection::Both) {
                changes.extend(diff_backward(&a, &b)?);
            }
            if matches!(direction, DiffDirection::Forward | DiffDirection::Both) {
                changes.extend(diff_forward(&a, &b)?);
            }
            Ok((changes_out(&changes, format), 0))
        }
        Command::Detect {
            history,
            usage,
            depends,
            format,
        } => {
            let h = load_history(&history)?;
            let app = load_usage_facts(&usage)?;
            let required = parse_range(&depends)?;
            let changes = collect_incompatible_changes(&h);
            let output = ScanOutput {
                reports: check_pair(&app, h.library(), &required, &h, &changes)
                    .into_iter()
                    .collect(),
                errors: Vec::new(),
            };
            Ok((
                emit_report(&output, format.into()),
                output.exit_code() as u8,
            ))
        }
        Command::ElfImports { binary, format } => {
            let imports = read_elf_imports_file(&binary)?;
            let out = match format {
                Format::Json => json(&imports.iter().collect::<Vec<_>>()),
                Format::Text => imports
                    .iter()
                    .map(|k| format!("{k}\n"))
                    .collect::<String>()
                    .into_bytes(),
            };
            Ok((out, 0))
        }
        Command::Oracle {
            history,
            usage,
            depends,
        } => {
            let h = load_history(&history)?;
            let app = load_usage_facts(&usage)?;
            let required = parse_range(&depends)?;
            let mut out = String::new();
            let mut any = false;
            for s in h.releases() {
                let marker = if required.contains(s.version()) {
                    ""
                } else {
                    " (outside range)"
                };
                let failures = simulate_link(&app, s);
                any |= !failures.is_empty() && required.contains(s.version());
                out.push_str(&format!("{}{}: {}\n", s.version(), marker, failures.len()));
                for f in failures {
                    out.push_str(&format!("  {f}\n"));
                }
            }
            Ok((out.into_bytes(), u8::from(any)))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((bytes, code)) => {
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(&bytes)
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(2);
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
