//! End-to-end checks of the `msql` binary: rendered output, exit codes,
//! and the interactive loop under piped stdin.

mod common;

use std::io::Write;
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_msql");

const PROFIT_MARGIN_EXPANSION: &str = "SELECT prodName, \
     (SELECT ((SUM(i.revenue) - SUM(i.cost)) / SUM(i.revenue)) \
     FROM Orders AS i \
     WHERE (i.prodName IS NOT DISTINCT FROM o.prodName)) AS profitMargin, \
     COUNT(*)\nFROM Orders AS o\nGROUP BY prodName\n";

fn fx(rel: &str) -> String {
    common::fixture(rel).display().to_string()
}

fn transpile(query: &str) -> Output {
    Command::new(BIN)
        .args(["transpile", query, "--schema", &fx("schema.sql")])
        .output()
        .expect("spawn msql")
}

fn run(query: &str, extra: &[&str]) -> Output {
    Command::new(BIN)
        .args(["run", query, "--schema", &fx("schema.sql"), "--data", &fx("data")])
        .args(extra)
        .output()
        .expect("spawn msql")
}

fn repl(input: &str) -> Output {
    let mut child = Command::new(BIN)
        .args(["repl", "--schema", &fx("schema.sql"), "--data", &fx("data")])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn msql");
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().expect("wait for msql")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf-8 stderr")
}

fn scratch_path(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("msql-cli-{}-{name}", std::process::id()))
}

#[test]
fn transpile_prints_the_expansion() {
    let out = transpile(&fx("queries/profit_margin_by_product.sql"));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out), PROFIT_MARGIN_EXPANSION);
}

#[test]
fn run_renders_a_rounded_table() {
    let out = run(&fx("queries/profit_margin_by_product.sql"), &["--round", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        stdout(&out),
        "prodName profitMargin count\n\
         ======== ============ =====\n\
         Acme     0.60         1\n\
         Happy    0.47         3\n\
         Whizz    0.67         1\n"
    );
}

#[test]
fn run_renders_csv() {
    let out = run(&fx("queries/profit_margin_by_product.sql"), &["--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        stdout(&out),
        "prodName,profitMargin,count\nAcme,0.6,1\nHappy,0.4706,3\nWhizz,0.6667,1\n"
    );
}

#[test]
fn syntax_errors_exit_1_and_name_the_position() {
    let out = run(&fx("invalid/bad_syntax.sql"), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("syntax error at 2:1"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn analysis_errors_exit_1() {
    let out = run(&fx("invalid/unknown_column.sql"), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("unknown column: nonexistent"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn unreadable_query_files_exit_2() {
    let out = run(&fx("queries/no_such_query.sql"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cannot read"), "stderr: {}", stderr(&out));
}

#[test]
fn missing_table_csv_exits_2() {
    let empty = scratch_path("empty-data");
    std::fs::create_dir_all(&empty).unwrap();
    let out = Command::new(BIN)
        .args(["run", &fx("queries/profit_margin_by_product.sql")])
        .args(["--schema", &fx("schema.sql")])
        .args(["--data", &empty.display().to_string()])
        .output()
        .expect("spawn msql");
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Orders.csv"), "stderr: {}", stderr(&out));
}

#[test]
fn runtime_errors_exit_3() {
    let out = run(&fx("invalid/divide_by_zero.sql"), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(
        stderr(&out).contains("division by zero"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn transpiled_output_runs_identically() {
    let transpiled = transpile(&fx("queries/visible_revenue_rollup.sql"));
    assert_eq!(transpiled.status.code(), Some(0), "{}", stderr(&transpiled));

    let expanded = scratch_path("expanded.sql");
    std::fs::write(&expanded, &transpiled.stdout).unwrap();

    let direct = run(&fx("queries/visible_revenue_rollup.sql"), &[]);
    let replayed = run(&expanded.display().to_string(), &[]);
    assert_eq!(direct.status.code(), Some(0), "{}", stderr(&direct));
    assert_eq!(replayed.status.code(), Some(0), "{}", stderr(&replayed));
    assert_eq!(stdout(&direct), stdout(&replayed));
}

#[test]
fn repl_executes_statements_until_eof() {
    let out = repl("SELECT 1 AS one;\n");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out), "one\n===\n1\n");
}

#[test]
fn repl_transpile_prints_and_quit_stops_reading() {
    let out = repl(
        "\\transpile SELECT prodName, AGGREGATE(profitMargin) AS m \
         FROM EnhancedOrders GROUP BY prodName;\n\
         \\quit\n\
         SELECT 1 AS unreached;\n",
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let printed = stdout(&out);
    assert_eq!(
        printed,
        "SELECT prodName, \
         (SELECT ((SUM(i.revenue) - SUM(i.cost)) / SUM(i.revenue)) \
         FROM Orders AS i \
         WHERE (i.prodName IS NOT DISTINCT FROM o.prodName)) AS m\n\
         FROM Orders AS o\nGROUP BY prodName\n"
    );
    assert!(!printed.contains("unreached"));
}

#[test]
fn repl_reports_errors_and_continues() {
    let out = repl("SELECT nope FROM Orders;\nSELECT custName FROM Customers WHERE custAge > 30;\n");
    assert_eq!(out.status.code(), Some(0));
    assert!(
        stderr(&out).contains("unknown column: nope"),
        "stderr: {}",
        stderr(&out)
    );
    assert_eq!(stdout(&out), "custName\n========\nBob\n");
}

#[test]
fn repl_buffers_lines_and_splits_statements() {
    let out = repl("SELECT custName\nFROM Customers WHERE custAge = 17; SELECT 2 AS two;\n");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out), "custName\n========\nCelia\ntwo\n===\n2\n");
}
