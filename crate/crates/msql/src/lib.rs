//! SQL with measures: context-sensitive aggregations as first-class columns.
//!
//! A measure is a named aggregation formula attached to a table or view.
//! Referencing one in a query evaluates the formula over the rows selected
//! by the reference's evaluation context, which the `AT` operator can
//! inspect and reshape. This crate parses the extended dialect, expands
//! measure references into standard correlated subqueries, and runs the
//! result on an in-memory engine.
//!
//! ```
//! use msql::{Catalog, transpile};
//! use msql::syntax::print_query;
//!
//! let mut catalog = Catalog::new();
//! catalog.register_script(
//!     "CREATE TABLE Orders (prodName VARCHAR, revenue INTEGER);
//!      CREATE VIEW Sales AS
//!      SELECT *, SUM(revenue) AS MEASURE totalRevenue FROM Orders;",
//! )?;
//! let expanded = transpile("SELECT prodName, totalRevenue FROM Sales GROUP BY prodName", &catalog)?;
//! assert_eq!(
//!     print_query(&expanded),
//!     "SELECT prodName, (SELECT SUM(i.revenue) FROM Orders AS i \
//!      WHERE (i.prodName IS NOT DISTINCT FROM o.prodName)) AS totalRevenue\n\
//!      FROM Orders AS o\n\
//!      GROUP BY prodName"
//! );
//! # Ok::<(), msql::Error>(())
//! ```

pub mod analyzer;
pub mod catalog;
pub mod context;
pub mod engine;
pub mod rewrite;
pub mod syntax;

pub use catalog::Catalog;
pub use engine::{Database, Relation, Value};

/// Any failure across the pipeline, grouped by how callers report it: the
/// CLI maps language errors to exit 1, input errors to exit 2, and
/// execution errors to exit 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Syntax(#[from] syntax::SyntaxError),
    #[error(transparent)]
    Catalog(#[from] catalog::CatalogError),
    #[error(transparent)]
    Analysis(#[from] analyzer::AnalysisError),
    #[error(transparent)]
    Engine(#[from] engine::EngineError),
}

impl Error {
    /// Process exit code for this error: 1 for parse and analysis errors,
    /// 2 for unreadable input files, 3 for runtime execution errors.
    pub fn exit_code(&self) -> i32 {
        use engine::EngineError;
        match self {
            Error::Syntax(_) | Error::Catalog(_) | Error::Analysis(_) => 1,
            Error::Engine(
                EngineError::Io { .. }
                | EngineError::CsvShape { .. }
                | EngineError::CsvParse { .. },
            ) => 2,
            Error::Engine(_) => 3,
        }
    }
}

/// Parses, analyzes, and expands one query against the catalog. The result
/// is plain SQL; queries that never used the extension come back unchanged.
pub fn transpile(sql: &str, catalog: &Catalog) -> Result<syntax::Query, Error> {
    let query = syntax::parse_query(sql)?;
    let resolved = analyzer::analyze(&query, catalog)?;
    Ok(rewrite::expand(&resolved, catalog)?.query)
}

/// Expands one query and executes it over loaded data.
pub fn run(sql: &str, catalog: &Catalog, db: &Database) -> Result<Relation, Error> {
    let expanded = transpile(sql, catalog)?;
    Ok(engine::execute(&expanded, db, catalog)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (Catalog, Database) {
        let mut catalog = Catalog::new();
        catalog
            .register_script(
                "CREATE TABLE Orders (prodName VARCHAR, revenue INTEGER);
                 CREATE VIEW Sales AS
                 SELECT *, SUM(revenue) AS MEASURE totalRevenue FROM Orders;",
            )
            .unwrap();
        let mut db = Database::new();
        db.insert(
            "Orders",
            Relation {
                columns: vec![syntax::Ident::new("prodName"), syntax::Ident::new("revenue")],
                rows: vec![
                    vec!["Happy".into(), 6.into()],
                    vec!["Acme".into(), 5.into()],
                    vec!["Happy".into(), 7.into()],
                ],
            },
        );
        (catalog, db)
    }

    #[test]
    fn run_expands_and_executes() {
        let (catalog, db) = fixture();
        let rel = run(
            "SELECT prodName, totalRevenue FROM Sales GROUP BY prodName",
            &catalog,
            &db,
        )
        .unwrap();
        assert_eq!(
            rel.rows,
            vec![
                vec!["Acme".into(), 5.into()],
                vec!["Happy".into(), 13.into()],
            ]
        );
    }

    #[test]
    fn errors_carry_their_exit_codes() {
        let (catalog, db) = fixture();
        let parse = run("SELECT FROM", &catalog, &db).unwrap_err();
        assert_eq!(parse.exit_code(), 1);
        let analysis = run("SELECT nosuch FROM Orders", &catalog, &db).unwrap_err();
        assert_eq!(analysis.exit_code(), 1);
        let runtime = run("SELECT revenue / 0 FROM Orders", &catalog, &db).unwrap_err();
        assert_eq!(runtime.exit_code(), 3);
    }
}
