//! `msql`: transpile measure-SQL to standard SQL, run queries over
//! CSV-backed tables, or start an interactive session.

mod render;
mod repl;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use msql::engine::{base_tables, execute, EngineError};
use msql::syntax::print_query;
use msql::{Catalog, Database, Relation};

use render::Format;

#[derive(Parser)]
#[command(name = "msql", version, about = "SQL with measures", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand measure references and print standard SQL
    Transpile {
        /// Query file
        query: PathBuf,
        /// DDL script declaring tables, views, and measures
        #[arg(long)]
        schema: PathBuf,
    },
    /// Execute a query over CSV-backed tables
    Run {
        /// Query file
        query: PathBuf,
        /// DDL script declaring tables, views, and measures
        #[arg(long)]
        schema: PathBuf,
        /// Directory holding one <table>.csv per referenced base table
        #[arg(long)]
        data: PathBuf,
        /// Output format
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Fixed decimal places for doubles
        #[arg(long, value_name = "N")]
        round: Option<usize>,
    },
    /// Interactive session; statements end with `;`, `\quit` exits
    Repl {
        /// DDL script declaring tables, views, and measures
        #[arg(long)]
        schema: PathBuf,
        /// Directory holding one <table>.csv per referenced base table
        #[arg(long)]
        data: PathBuf,
    },
}

/// Failures grouped by exit code: 1 for language errors, 2 for unreadable
/// files, 3 for runtime execution errors.
#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Pipeline(#[from] msql::Error),
    #[error("cannot read {path}: {detail}")]
    Io { path: String, detail: String },
}

impl From<EngineError> for CliError {
    fn from(err: EngineError) -> Self {
        CliError::Pipeline(err.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Pipeline(err) => err.exit_code() as u8,
            CliError::Io { .. } => 2,
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Transpile { query, schema } => {
            let catalog = load_catalog(&schema)?;
            let expanded = msql::transpile(&read_file(&query)?, &catalog)?;
            println!("{}", print_query(&expanded));
            Ok(())
        }
        Command::Run {
            query,
            schema,
            data,
            format,
            round,
        } => {
            let catalog = load_catalog(&schema)?;
            let rel = execute_query(&read_file(&query)?, &catalog, &data)?;
            print!("{}", render::render(&rel, format, round));
            Ok(())
        }
        Command::Repl { schema, data } => repl::run(&schema, &data),
    }
}

fn load_catalog(schema: &Path) -> Result<Catalog, CliError> {
    let mut catalog = Catalog::new();
    catalog
        .register_script(&read_file(schema)?)
        .map_err(msql::Error::from)?;
    Ok(catalog)
}

/// Expands the query, loads a CSV for each base table it references, and
/// executes it.
fn execute_query(sql: &str, catalog: &Catalog, data: &Path) -> Result<Relation, CliError> {
    let expanded = msql::transpile(sql, catalog)?;
    let tables = base_tables(&expanded, catalog);
    let db = Database::load_dir(data, catalog, &tables)?;
    Ok(execute(&expanded, &db, catalog)?)
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|err| CliError::Io {
        path: path.display().to_string(),
        detail: err.to_string(),
    })
}
