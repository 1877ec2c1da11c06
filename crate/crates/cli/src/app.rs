//! Argument parsing and dispatch.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::commands::{self, Outcome, CONDITION_GROUPS};
use crate::error::{CliError, CliResult, EXIT_CHECK_FAILED, EXIT_INPUT, EXIT_OK};
use crate::workspace::{load_workspace, Workspace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Human,
}

#[derive(Debug, Parser)]
#[command(
    name = "toposlos",
    version,
    about = "Evaluate formulas in finite presheaf models and check transfer through filtered products"
)]
pub struct Cli {
    /// Workspace document (JSON).
    #[arg(short = 'w', long, global = true)]
    pub workspace: Option<PathBuf>,
    /// Report format on stdout.
    #[arg(long, value_enum, default_value = "json", global = true)]
    pub format: Format,
    /// Bound on enumerated search spaces; overrides TOPOSLOS_MAX_ENUM.
    #[arg(long, env = "TOPOSLOS_MAX_ENUM", global = true)]
    pub max_enum: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate a workspace, then summarize it.
    Check {
        /// Workspace path; `-w` is used when omitted.
        path: Option<PathBuf>,
    },
    /// Interpret a formula (by name or in concrete syntax) in a model.
    Eval {
        #[arg(short, long)]
        model: String,
        #[arg(short, long)]
        formula: String,
    },
    /// Filtered product of models with its class tables.
    Product {
        #[arg(short = 'M', long, value_delimiter = ',', required = true)]
        models: Vec<String>,
        #[arg(long)]
        filter: String,
    },
    /// Hypothesis checks for an instance.
    Conditions {
        #[arg(long)]
        instance: String,
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(CONDITION_GROUPS))]
        only: Option<String>,
    },
    /// Verify the transfer biconditional for an instance.
    Los {
        #[arg(long)]
        instance: String,
        /// Run even when hypotheses fail.
        #[arg(long)]
        force: bool,
    },
    /// Brute-force reference computations for cross-checking.
    Oracle {
        #[command(subcommand)]
        op: OracleOp,
    },
}

#[derive(Debug, Subcommand)]
pub enum OracleOp {
    /// Pointwise (Tarski) evaluation; set-like bases only.
    Eval {
        #[arg(short, long)]
        model: String,
        #[arg(short, long)]
        formula: String,
    },
    /// Filtered-product class counts by union-find over the equivalence.
    Classes {
        #[arg(short = 'M', long, value_delimiter = ',', required = true)]
        models: Vec<String>,
        #[arg(long)]
        filter: String,
    },
    /// Heyting laws on the subobjects of a carrier, implication by joins.
    Heyting {
        #[arg(short, long)]
        model: String,
        #[arg(short, long)]
        sort: String,
    },
    /// Box and diamond against the successor relation, on every subset.
    Modal {
        #[arg(short, long)]
        coalgebra: String,
    },
}

fn workspace(cli: &Cli, path: Option<&PathBuf>) -> CliResult<Workspace> {
    let path =
        path.or(cli.workspace.as_ref()).ok_or_else(|| CliError::invalid("arguments", "no workspace given (use -w)"))?;
    load_workspace(path)
}

fn dispatch(cli: &Cli) -> CliResult<Outcome> {
    if let Command::Check { path } = &cli.command {
        return Ok(commands::check(&workspace(cli, path.as_ref())?));
    }
    let ws = workspace(cli, None)?;
    match &cli.command {
        Command::Check { .. } => unreachable!(),
        Command::Eval { model, formula } => commands::eval(&ws, model, formula),
        Command::Product { models, filter } => commands::product(&ws, models, filter),
        Command::Conditions { instance, only } => commands::conditions(&ws, instance, only.as_deref()),
        Command::Los { instance, force } => commands::los(&ws, instance, *force),
        Command::Oracle { op } => match op {
            OracleOp::Eval { model, formula } => commands::oracle_eval(&ws, model, formula),
            OracleOp::Classes { models, filter } => commands::oracle_classes(&ws, models, filter),
            OracleOp::Heyting { model, sort } => commands::oracle_heyting(&ws, model, sort),
            OracleOp::Modal { coalgebra } => commands::oracle_modal(&ws, coalgebra),
        },
    }
}

/// Runs the command, writing the report to `out` and a summary to `err`.
/// Returns the exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if let Some(n) = cli.max_enum {
        toposlos_core::bound::set_max_enum(n);
    }
    let (report, code, summary) = match dispatch(cli) {
        Ok(o) => {
            let code = if o.ok { EXIT_OK } else { EXIT_CHECK_FAILED };
            (o.report, code, if o.ok { "ok".to_string() } else { "check failed".to_string() })
        }
        Err(e) => (json!({ "error": e.report() }), e.exit_code(), format!("error [{}] {}", e.code(), e)),
    };
    let written = match cli.format {
        Format::Json => {
            serde_json::to_string_pretty(&report).map_err(std::io::Error::other).and_then(|s| writeln!(out, "{s}"))
        }
        Format::Human => write_human(out, &report, 0),
    };
    if written.is_err() {
        return EXIT_INPUT;
    }
    let _ = writeln!(err, "{summary}");
    code
}

fn write_human(out: &mut dyn Write, v: &Value, indent: usize) -> std::io::Result<()> {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                match x {
                    Value::Object(_) | Value::Array(_) if !is_flat(x) => {
                        writeln!(out, "{pad}{k}:")?;
                        write_human(out, x, indent + 1)?;
                    }
                    _ => writeln!(out, "{pad}{k}: {}", inline(x))?,
                }
            }
        }
        Value::Array(xs) => {
            for x in xs {
                if is_flat(x) {
                    writeln!(out, "{pad}- {}", inline(x))?;
                } else {
                    writeln!(out, "{pad}-")?;
                    write_human(out, x, indent + 1)?;
                }
            }
        }
        other => writeln!(out, "{pad}{}", inline(other))?,
    }
    Ok(())
}

fn is_flat(v: &Value) -> bool {
    match v {
        Value::Array(xs) => xs.iter().all(|x| !matches!(x, Value::Object(_) | Value::Array(_))),
        Value::Object(m) => m.is_empty(),
        _ => true,
    }
}

fn inline(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(xs) => format!("[{}]", xs.iter().map(inline).collect::<Vec<_>>().join(", ")),
        Value::Object(_) => "{}".into(),
        other => other.to_string(),
    }
}
