//! In-memory execution of the plain SQL subset.
//!
//! The engine runs expanded queries only; measure syntax reaching it is an
//! internal error. It is a deliberately naive reference interpreter for
//! desk-scale data, backing the CLI and the test oracles.

mod exec;
mod load;
mod value;

pub use exec::execute;
pub use load::{load_table, read_csv};
pub use value::Value;

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::catalog::{Catalog, TableSource};
use crate::syntax::{Expr, Ident, Query, Select, SelectItem, TableExpr};

/// Ordered columns over ordered rows; every row has one value per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub columns: Vec<Ident>,
    pub rows: Vec<Vec<Value>>,
}

/// Loaded base-table relations by name.
#[derive(Debug, Default)]
pub struct Database {
    relations: HashMap<Ident, Relation>,
}

impl Database {
    pub fn new() -> Self {
        Database::default()
    }

    pub fn insert(&mut self, name: impl Into<Ident>, relation: Relation) {
        self.relations.insert(name.into(), relation);
    }

    pub fn relation(&self, name: &Ident) -> Option<&Relation> {
        self.relations.get(name)
    }

    /// Loads `<table>.csv` from `dir` for each named base table.
    pub fn load_dir<'a>(
        dir: &Path,
        catalog: &Catalog,
        tables: impl IntoIterator<Item = &'a Ident>,
    ) -> Result<Database, EngineError> {
        let mut db = Database::new();
        for name in tables {
            let schema = catalog
                .try_resolve(name)
                .ok_or_else(|| EngineError::TypeError(format!("unknown table {name}")))?;
            let path = dir.join(format!("{}.csv", schema.name));
            db.insert(schema.name.clone(), load_table(&path, schema)?);
        }
        Ok(db)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("scalar subquery returned more than one row")]
    ScalarSubqueryCardinality,
    #[error("division by zero")]
    DivisionByZero,
    #[error("type error: {0}")]
    TypeError(String),
    #[error("no data loaded for table {0}")]
    MissingRelation(Ident),
    #[error("{path}: {detail}")]
    Io { path: String, detail: String },
    #[error("{path}: {detail}")]
    CsvShape { path: String, detail: String },
    #[error("{path}: data row {row}, column {column}: {detail}")]
    CsvParse {
        path: String,
        row: usize,
        column: String,
        detail: String,
    },
}

/// Base tables a query reads, looking through plain views and CTEs.
pub fn base_tables(query: &Query, catalog: &Catalog) -> BTreeSet<Ident> {
    let mut out = BTreeSet::new();
    query_tables(query, catalog, &mut Vec::new(), &mut out);
    out
}

fn query_tables(query: &Query, catalog: &Catalog, ctes: &mut Vec<Ident>, out: &mut BTreeSet<Ident>) {
    let depth = ctes.len();
    for cte in &query.ctes {
        select_tables(&cte.query, catalog, ctes, out);
        ctes.push(cte.name.clone());
    }
    select_tables(&query.select, catalog, ctes, out);
    ctes.truncate(depth);
}

fn select_tables(
    select: &Select,
    catalog: &Catalog,
    ctes: &mut Vec<Ident>,
    out: &mut BTreeSet<Ident>,
) {
    for item in &select.items {
        if let SelectItem::Expr { expr, .. } = item {
            expr_tables(expr, catalog, ctes, out);
        }
    }
    if let Some(from) = &select.from {
        from_tables(from, catalog, ctes, out);
    }
    if let Some(pred) = &select.where_clause {
        expr_tables(pred, catalog, ctes, out);
    }
    if let Some(group) = &select.group_by {
        for key in &group.keys {
            expr_tables(key, catalog, ctes, out);
        }
    }
}

fn from_tables(te: &TableExpr, catalog: &Catalog, ctes: &mut Vec<Ident>, out: &mut BTreeSet<Ident>) {
    match te {
        TableExpr::Table { name, .. } => {
            if ctes.contains(name) {
                return;
            }
            match catalog.try_resolve(name).map(|s| &s.source) {
                Some(TableSource::BaseTable) => {
                    out.insert(name.clone());
                }
                Some(TableSource::View(body)) => {
                    // Views see no enclosing CTEs; registration order rules
                    // out cycles.
                    query_tables(body, catalog, &mut Vec::new(), out);
                }
                None => {}
            }
        }
        TableExpr::Subquery { query, .. } => select_tables(query, catalog, ctes, out),
        TableExpr::Join {
            left,
            right,
            condition,
            ..
        } => {
            from_tables(left, catalog, ctes, out);
            from_tables(right, catalog, ctes, out);
            if let crate::syntax::JoinCondition::On(pred) = condition {
                expr_tables(pred, catalog, ctes, out);
            }
        }
    }
}

fn expr_tables(expr: &Expr, catalog: &Catalog, ctes: &mut Vec<Ident>, out: &mut BTreeSet<Ident>) {
    // walk reaches every nested subquery; revisits only re-insert.
    let mut selects = Vec::new();
    expr.walk(&mut |e| {
        if let Expr::Subquery(s) | Expr::Exists(s) = e {
            selects.push((**s).clone());
        }
    });
    for s in selects {
        if let Some(from) = &s.from {
            from_tables(from, catalog, ctes, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::syntax::parse_query;

    use super::*;

    #[test]
    fn base_tables_see_through_views_and_ctes() {
        let mut catalog = Catalog::new();
        catalog
            .register_script(
                "CREATE TABLE Customers (custName VARCHAR, custAge INTEGER);
                 CREATE TABLE Orders (prodName VARCHAR, revenue INTEGER);
                 CREATE VIEW Adults AS
                 SELECT custName FROM Customers WHERE custAge >= 18;",
            )
            .unwrap();
        let q = parse_query(
            "WITH t AS (SELECT custName FROM Adults)
             SELECT (SELECT SUM(o.revenue) FROM Orders AS o) FROM t",
        )
        .unwrap();
        let names: Vec<String> = base_tables(&q, &catalog)
            .into_iter()
            .map(|i| i.to_string())
            .collect();
        assert_eq!(names, vec!["Customers".to_string(), "Orders".to_string()]);
    }
}
