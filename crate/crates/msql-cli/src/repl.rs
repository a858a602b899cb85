//! Interactive loop: statements end with `;`, `\transpile` prints the
//! expansion of the statement that follows it, `\quit` leaves the session.

use std::io::{BufRead, IsTerminal, Write};
use std::path::Path;

use msql::syntax::print_query;
use msql::Catalog;

use crate::render::render_table;
use crate::{execute_query, read_file, CliError};

pub fn run(schema: &Path, data: &Path) -> Result<(), CliError> {
    let mut catalog = Catalog::new();
    catalog
        .register_script(&read_file(schema)?)
        .map_err(msql::Error::from)?;

    let stdin = std::io::stdin();
    let interactive = stdin.is_terminal();
    let mut lines = stdin.lock().lines();
    let mut buffer = String::new();
    loop {
        if interactive {
            let prompt = if buffer.trim().is_empty() {
                "msql> "
            } else {
                "   -> "
            };
            print!("{prompt}");
            let _ = std::io::stdout().flush();
        }
        let Some(line) = lines.next() else {
            return Ok(());
        };
        let line = line.map_err(|err| CliError::Io {
            path: "<stdin>".into(),
            detail: err.to_string(),
        })?;
        if buffer.trim().is_empty() && matches!(line.trim(), "\\quit" | "\\quit;") {
            return Ok(());
        }
        buffer.push_str(&line);
        buffer.push('\n');
        while let Some(end) = statement_end(&buffer) {
            let statement: String = buffer.drain(..end).collect();
            let statement = statement.trim().trim_end_matches(';').trim();
            if !statement.is_empty() {
                dispatch(statement, &catalog, data, interactive);
            }
        }
    }
}

/// Byte offset just past the first `;` outside single quotes, if any.
fn statement_end(buffer: &str) -> Option<usize> {
    let mut quoted = false;
    for (i, c) in buffer.char_indices() {
        match c {
            '\'' => quoted = !quoted,
            ';' if !quoted => return Some(i + 1),
            _ => {}
        }
    }
    None
}

fn dispatch(statement: &str, catalog: &Catalog, data: &Path, interactive: bool) {
    let outcome = if let Some(rest) = statement.strip_prefix("\\transpile") {
        msql::transpile(rest, catalog)
            .map(|expanded| println!("{}", print_query(&expanded)))
            .map_err(CliError::from)
    } else {
        execute_query(statement, catalog, data).map(|rel| {
            print!("{}", render_table(&rel, None));
            if interactive {
                println!();
            }
        })
    };
    if let Err(err) = outcome {
        eprintln!("error: {err}");
    }
}
