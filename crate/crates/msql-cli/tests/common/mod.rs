#![allow(dead_code)]

pub mod gen;
pub mod oracle;

use std::collections::BTreeSet;
use std::path::PathBuf;

use msql::syntax::Ident;
use msql::{Catalog, Database, Relation, Value};

/// Every query under `tests/fixtures/queries/`.
pub const QUERY_FIXTURES: [&str; 10] = [
    "profit_margin_by_product",
    "revenue_proportions",
    "margin_current_vs_prior_year",
    "visible_revenue_rollup",
    "customer_age_by_product",
    "year_over_year_ratio",
    "above_average_subquery",
    "above_average_self_join",
    "above_average_window",
    "above_average_measure",
];

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

pub fn fixture_catalog() -> Catalog {
    let ddl = std::fs::read_to_string(fixture("schema.sql")).expect("read schema");
    catalog_from(&ddl)
}

pub fn fixture_database(catalog: &Catalog) -> Database {
    let tables = [Ident::new("Customers"), Ident::new("Orders")];
    Database::load_dir(&fixture("data"), catalog, &tables).expect("load fixture data")
}

pub fn fixture_query(name: &str) -> String {
    std::fs::read_to_string(fixture(&format!("queries/{name}.sql"))).expect("read query")
}

pub fn run_fixture(name: &str) -> Relation {
    let catalog = fixture_catalog();
    let db = fixture_database(&catalog);
    run_on(&fixture_query(name), &catalog, &db)
}

pub fn catalog_from(ddl: &str) -> Catalog {
    let mut catalog = Catalog::new();
    catalog.register_script(ddl).expect("register schema");
    catalog
}

pub fn run_on(sql: &str, catalog: &Catalog, db: &Database) -> Relation {
    msql::run(sql, catalog, db).unwrap_or_else(|e| panic!("run `{sql}`: {e}"))
}

pub fn f64_of(value: &Value) -> f64 {
    match value {
        Value::Integer(n) => *n as f64,
        Value::Double(x) => *x,
        other => panic!("expected a number, got {other:?}"),
    }
}

/// Relative comparison at 1e-9, absolute near zero.
pub fn close(a: f64, b: f64) -> bool {
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= 1e-9 * scale.max(1.0)
}

pub fn values_match(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Double(x), Value::Double(y)) => close(*x, *y),
        _ => a == b,
    }
}

/// Exact on every type except doubles, which compare at 1e-9 relative.
pub fn assert_same_relation(a: &Relation, b: &Relation) {
    assert_eq!(a.columns, b.columns, "column names differ");
    assert_eq!(a.rows.len(), b.rows.len(), "row counts differ:\n{a:?}\n{b:?}");
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        assert!(
            ra.len() == rb.len() && ra.iter().zip(rb).all(|(x, y)| values_match(x, y)),
            "rows differ: {ra:?} vs {rb:?}"
        );
    }
}

/// Rows as debug strings, for order-insensitive comparison.
pub fn row_set(rel: &Relation) -> BTreeSet<String> {
    rows_to_set(&rel.rows)
}

pub fn rows_to_set(rows: &[Vec<Value>]) -> BTreeSet<String> {
    rows.iter().map(|r| format!("{r:?}")).collect()
}

pub fn db_with(orders: Relation, customers: Relation) -> Database {
    let mut db = Database::new();
    db.insert("Orders", orders);
    db.insert("Customers", customers);
    db
}

/// `AGGREGATE(m)` evaluates exactly like `m AT (VISIBLE)`.
pub fn check_aggregate_is_visible(
    catalog: &Catalog,
    db: &Database,
    formula: &str,
    keys: &str,
    filter: &str,
    rollup: bool,
) {
    let source = format!("(SELECT *, {formula} AS MEASURE m FROM Orders) AS o");
    let group = if rollup {
        format!("ROLLUP({keys})")
    } else {
        keys.to_string()
    };
    let sugar = format!("SELECT {keys}, AGGREGATE(m) AS v FROM {source} {filter} GROUP BY {group}");
    let explicit =
        format!("SELECT {keys}, m AT (VISIBLE) AS v FROM {source} {filter} GROUP BY {group}");
    assert_same_relation(&run_on(&sugar, catalog, db), &run_on(&explicit, catalog, db));
}

/// A two-modifier list folds like two nested single-modifier applications,
/// outermost first: `m AT (m1 m2)` = `(m AT (m2)) AT (m1)`.
pub fn check_modifier_fold(
    catalog: &Catalog,
    db: &Database,
    formula: &str,
    m1: &str,
    m2: &str,
    keys: &str,
    filter: &str,
) {
    let source = format!("(SELECT *, {formula} AS MEASURE m FROM Orders) AS o");
    let combined =
        format!("SELECT {keys}, m AT ({m1} {m2}) AS v FROM {source} {filter} GROUP BY {keys}");
    let nested =
        format!("SELECT {keys}, (m AT ({m2})) AT ({m1}) AS v FROM {source} {filter} GROUP BY {keys}");
    assert_same_relation(&run_on(&combined, catalog, db), &run_on(&nested, catalog, db));
}

/// Measure-free SQL through the full pipeline equals direct execution.
pub fn check_plain_passthrough(catalog: &Catalog, db: &Database, sql: &str) {
    let direct = msql::engine::execute(&msql::syntax::parse_query(sql).unwrap(), db, catalog)
        .unwrap_or_else(|e| panic!("direct `{sql}`: {e}"));
    assert_same_relation(&run_on(sql, catalog, db), &direct);
}

/// Expansion leaves no extension syntax and is a fixpoint.
pub fn check_expansion_fixpoint(catalog: &Catalog, sql: &str) {
    let expanded = msql::transpile(sql, catalog).unwrap_or_else(|e| panic!("expand `{sql}`: {e}"));
    assert!(
        !msql::rewrite::uses_extensions(&expanded),
        "extension syntax survived in {}",
        msql::syntax::print_query(&expanded)
    );
    let again = msql::transpile(&msql::syntax::print_query(&expanded), catalog).unwrap();
    assert_eq!(again, expanded, "expanding `{sql}` twice is not a fixpoint");
}

/// Duplicating order rows fans out the join but must not move `avgAge` or
/// `avgAge AT (VISIBLE)`; only the row-weighted average may shift.
pub fn check_grain_preservation(
    catalog: &Catalog,
    orders: &Relation,
    customers: &Relation,
    copies: &[usize],
) {
    let sql = "WITH EnhancedCustomers AS (
        SELECT *, AVG(custAge) AS MEASURE avgAge FROM Customers)
      SELECT o.prodName,
        COUNT(*) AS orderCount,
        AVG(c.custAge) AS weightedAvgAge,
        c.avgAge AS avgAge,
        c.avgAge AT (VISIBLE) AS visibleAvgAge
      FROM Orders AS o JOIN EnhancedCustomers AS c USING (custName)
      WHERE c.custAge >= 18
      GROUP BY o.prodName";
    let base = run_on(sql, catalog, &db_with(orders.clone(), customers.clone()));
    let copies = if copies.is_empty() { &[2][..] } else { copies };
    let mut fanned = Vec::new();
    for (row, n) in orders.rows.iter().zip(copies.iter().cycle()) {
        for _ in 0..(*n).max(1) {
            fanned.push(row.clone());
        }
    }
    let dup = Relation {
        columns: orders.columns.clone(),
        rows: fanned,
    };
    let more = run_on(sql, catalog, &db_with(dup, customers.clone()));

    assert_eq!(base.rows.len(), more.rows.len(), "group sets differ");
    for (a, b) in base.rows.iter().zip(&more.rows) {
        // prodName, avgAge, visibleAvgAge are grain-independent.
        for idx in [0, 3, 4] {
            assert!(
                values_match(&a[idx], &b[idx]),
                "column {idx} moved under duplication: {a:?} vs {b:?}"
            );
        }
    }
}
