//! Schema registry: base tables and views, including measure columns.
//!
//! The catalog is populated from DDL during a load phase and read-only
//! afterwards. Views are kept in analyzed form, not expanded text; a view
//! that defines measures additionally records its measure basis, the
//! flattened description the rewriter uses to build subqueries over the
//! view's underlying source.

use std::fmt;

use crate::analyzer::{self, AnalysisError};
use crate::rewrite;
use crate::syntax::{self, Expr, Ident, Query, Select, Statement, SyntaxError, TypeName};

/// Value type of a column; the `t` in a measure's `t MEASURE` type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarType {
    Varchar,
    Integer,
    Double,
    Date,
    Boolean,
}

impl ScalarType {
    pub fn name(&self) -> &'static str {
        match self {
            ScalarType::Varchar => "VARCHAR",
            ScalarType::Integer => "INTEGER",
            ScalarType::Double => "DOUBLE",
            ScalarType::Date => "DATE",
            ScalarType::Boolean => "BOOLEAN",
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, ScalarType::Integer | ScalarType::Double)
    }
}

impl From<TypeName> for ScalarType {
    fn from(ty: TypeName) -> Self {
        match ty {
            TypeName::Varchar => ScalarType::Varchar,
            TypeName::Integer => ScalarType::Integer,
            TypeName::Double => ScalarType::Double,
            TypeName::Date => ScalarType::Date,
            TypeName::Boolean => ScalarType::Boolean,
        }
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct ColumnDef {
    pub name: Ident,
    pub ty: ScalarType,
    pub is_measure: bool,
    /// Defining expression: present for every measure, and for view columns
    /// computed from the source (e.g. `YEAR(orderDate) AS orderYear`).
    pub formula: Option<Expr>,
}

#[derive(Debug, Clone)]
pub enum TableSource {
    BaseTable,
    View(Box<Query>),
}

/// What a generated measure subquery selects FROM.
#[derive(Debug, Clone)]
pub enum BasisSource {
    Table(Ident),
    Derived(Box<Select>),
}

/// Flattened description of a measure-bearing relation: every visible
/// column and measure formula rewritten over the rows of `source`.
#[derive(Debug, Clone)]
pub struct MeasureBasis {
    pub source: BasisSource,
    /// Visible non-measure columns, in declaration order, each with its
    /// defining expression over an (unqualified) source row.
    pub columns: Vec<(Ident, Expr)>,
    /// Measures with formulas over source rows; sibling measure names may
    /// appear and are spliced in at rewrite time.
    pub measures: Vec<(Ident, Expr)>,
    /// WHERE clause of the defining query, baked into every measure; it
    /// survives every context modifier, including bare ALL.
    pub baked_where: Option<Expr>,
}

impl MeasureBasis {
    pub fn measure_formula(&self, name: &Ident) -> Option<&Expr> {
        self.measures
            .iter()
            .find(|(m, _)| m == name)
            .map(|(_, f)| f)
    }

    pub fn column_expr(&self, name: &Ident) -> Option<&Expr> {
        self.columns
            .iter()
            .find(|(c, _)| c == name)
            .map(|(_, e)| e)
    }
}

#[derive(Debug, Clone)]
pub struct TableSchema {
    pub name: Ident,
    pub columns: Vec<ColumnDef>,
    pub source: TableSource,
    /// Present iff the relation defines at least one measure.
    pub basis: Option<MeasureBasis>,
}

impl TableSchema {
    pub fn column(&self, name: &Ident) -> Option<&ColumnDef> {
        self.columns.iter().find(|c| &c.name == name)
    }

    pub fn non_measure_columns(&self) -> impl Iterator<Item = &ColumnDef> {
        self.columns.iter().filter(|c| !c.is_measure)
    }

    pub fn has_measures(&self) -> bool {
        self.columns.iter().any(|c| c.is_measure)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CatalogError {
    #[error("duplicate name: {0} is already registered")]
    DuplicateName(Ident),
    #[error("unknown table: {0}")]
    UnknownTable(Ident),
    #[error("{column} is not a measure of {table}")]
    NotAMeasure { table: Ident, column: Ident },
    #[error("measure cycle involving {0}")]
    MeasureCycle(Ident),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("expected CREATE TABLE or CREATE VIEW, found a query")]
    NotDdl,
}

/// Registry of table and view schemas, mutable only while loading DDL.
#[derive(Debug, Default, Clone)]
pub struct Catalog {
    tables: Vec<TableSchema>,
}

impl Catalog {
    pub fn new() -> Self {
        Catalog::default()
    }

    /// Parses and registers a semicolon-separated DDL script.
    pub fn register_script(&mut self, sql: &str) -> Result<(), CatalogError> {
        for stmt in syntax::parse_script(sql)? {
            self.register_ddl(&stmt)?;
        }
        Ok(())
    }

    /// Registers one CREATE TABLE or CREATE VIEW statement.
    pub fn register_ddl(&mut self, stmt: &Statement) -> Result<(), CatalogError> {
        match stmt {
            Statement::CreateTable(table) => {
                self.check_free(&table.name)?;
                let columns = table
                    .columns
                    .iter()
                    .map(|c| ColumnDef {
                        name: c.name.clone(),
                        ty: c.ty.into(),
                        is_measure: false,
                        formula: None,
                    })
                    .collect();
                self.tables.push(TableSchema {
                    name: table.name.clone(),
                    columns,
                    source: TableSource::BaseTable,
                    basis: None,
                });
                Ok(())
            }
            Statement::CreateView(view) => {
                self.check_free(&view.name)?;
                let analyzed =
                    analyzer::analyze_view(&view.query, self).map_err(|e| match e {
                        AnalysisError::MeasureCycle(name) => CatalogError::MeasureCycle(name),
                        AnalysisError::UnknownTable(name) => CatalogError::UnknownTable(name),
                        other => CatalogError::Analysis(other),
                    })?;
                // Plain view bodies are stored fully expanded: any measure
                // they read is already a correlated subquery, so execution
                // never sees extension syntax.
                let stored = if analyzed.basis.is_some() {
                    view.query.clone()
                } else {
                    let resolved = analyzer::analyze(&view.query, self)?;
                    rewrite::expand(&resolved, self)?.query
                };
                self.tables.push(TableSchema {
                    name: view.name.clone(),
                    columns: analyzed.columns,
                    source: TableSource::View(Box::new(stored)),
                    basis: analyzed.basis,
                });
                Ok(())
            }
            Statement::Query(_) => Err(CatalogError::NotDdl),
        }
    }

    pub fn resolve(&self, name: &Ident) -> Result<&TableSchema, CatalogError> {
        self.tables
            .iter()
            .find(|t| &t.name == name)
            .ok_or_else(|| CatalogError::UnknownTable(name.clone()))
    }

    pub fn try_resolve(&self, name: &Ident) -> Option<&TableSchema> {
        self.tables.iter().find(|t| &t.name == name)
    }

    /// The dimension columns of a measure: every non-measure column of its
    /// table, in declaration order.
    pub fn dimensionality(
        &self,
        table: &Ident,
        measure: &Ident,
    ) -> Result<Vec<Ident>, CatalogError> {
        let schema = self.resolve(table)?;
        match schema.column(measure) {
            Some(col) if col.is_measure => Ok(schema
                .non_measure_columns()
                .map(|c| c.name.clone())
                .collect()),
            _ => Err(CatalogError::NotAMeasure {
                table: table.clone(),
                column: measure.clone(),
            }),
        }
    }

    pub fn tables(&self) -> impl Iterator<Item = &TableSchema> {
        self.tables.iter()
    }

    fn check_free(&self, name: &Ident) -> Result<(), CatalogError> {
        if self.try_resolve(name).is_some() {
            Err(CatalogError::DuplicateName(name.clone()))
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ORDERS_DDL: &str = "CREATE TABLE Orders (prodName VARCHAR, custName VARCHAR, \
                              orderDate DATE, revenue INTEGER, cost INTEGER)";

    fn catalog_with_orders() -> Catalog {
        let mut catalog = Catalog::new();
        catalog.register_script(ORDERS_DDL).unwrap();
        catalog
    }

    #[test]
    fn base_table_registration_and_resolution() {
        let catalog = catalog_with_orders();
        let schema = catalog.resolve(&Ident::new("orders")).unwrap();
        assert_eq!(schema.columns.len(), 5);
        assert!(schema.non_measure_columns().count() == 5);
        assert!(matches!(schema.source, TableSource::BaseTable));
    }

    #[test]
    fn unknown_table_is_reported() {
        let catalog = catalog_with_orders();
        assert!(matches!(
            catalog.resolve(&Ident::new("Nonexistent")),
            Err(CatalogError::UnknownTable(_))
        ));
    }

    #[test]
    fn duplicate_registration_is_rejected() {
        let mut catalog = catalog_with_orders();
        let err = catalog.register_script(ORDERS_DDL).unwrap_err();
        assert!(matches!(err, CatalogError::DuplicateName(_)));
    }

    #[test]
    fn view_with_measure_records_dimensionality() {
        let mut catalog = catalog_with_orders();
        catalog
            .register_script(
                "CREATE VIEW EnhancedOrders AS \
                 SELECT orderDate, prodName, \
                   (SUM(revenue) - SUM(cost)) / SUM(revenue) AS MEASURE profitMargin \
                 FROM Orders",
            )
            .unwrap();
        let schema = catalog.resolve(&Ident::new("EnhancedOrders")).unwrap();
        let margin = schema.column(&Ident::new("profitMargin")).unwrap();
        assert!(margin.is_measure);
        assert_eq!(margin.ty, ScalarType::Double);

        let dims = catalog
            .dimensionality(&Ident::new("EnhancedOrders"), &Ident::new("profitMargin"))
            .unwrap();
        assert_eq!(dims, vec![Ident::new("orderDate"), Ident::new("prodName")]);
    }

    #[test]
    fn wildcard_view_keeps_all_source_columns_as_dimensions() {
        let mut catalog = catalog_with_orders();
        catalog
            .register_script(
                "CREATE VIEW OrdersWithRevenue AS \
                 SELECT *, SUM(revenue) AS MEASURE sumRevenue FROM Orders",
            )
            .unwrap();
        let dims = catalog
            .dimensionality(&Ident::new("OrdersWithRevenue"), &Ident::new("sumRevenue"))
            .unwrap();
        let names: Vec<&str> = dims.iter().map(|d| d.as_str()).collect();
        assert_eq!(
            names,
            vec!["prodName", "custName", "orderDate", "revenue", "cost"]
        );
    }

    #[test]
    fn non_measure_column_is_not_a_measure() {
        let mut catalog = catalog_with_orders();
        catalog
            .register_script(
                "CREATE VIEW EnhancedOrders AS \
                 SELECT orderDate, prodName, \
                   (SUM(revenue) - SUM(cost)) / SUM(revenue) AS MEASURE profitMargin \
                 FROM Orders",
            )
            .unwrap();
        assert!(matches!(
            catalog.dimensionality(&Ident::new("EnhancedOrders"), &Ident::new("orderDate")),
            Err(CatalogError::NotAMeasure { .. })
        ));
    }

    #[test]
    fn sibling_measure_references_are_allowed() {
        let mut catalog = catalog_with_orders();
        catalog
            .register_script(
                "CREATE VIEW M AS SELECT *, \
                   SUM(revenue) AS MEASURE sumRevenue, \
                   SUM(cost) AS MEASURE sumCost, \
                   sumRevenue - sumCost AS MEASURE profit \
                 FROM Orders",
            )
            .unwrap();
        let schema = catalog.resolve(&Ident::new("M")).unwrap();
        assert_eq!(schema.columns.iter().filter(|c| c.is_measure).count(), 3);
    }

    #[test]
    fn measure_cycles_are_rejected() {
        let mut catalog = catalog_with_orders();
        let err = catalog
            .register_script(
                "CREATE VIEW M AS SELECT *, \
                   b + 1 AS MEASURE a, \
                   a + 1 AS MEASURE b \
                 FROM Orders",
            )
            .unwrap_err();
        assert!(matches!(err, CatalogError::MeasureCycle(_)), "got {err:?}");
    }

    #[test]
    fn view_over_view_composes() {
        let mut catalog = catalog_with_orders();
        catalog
            .register_script(
                "CREATE VIEW WithYear AS \
                 SELECT *, SUM(revenue) AS MEASURE sumRevenue, YEAR(orderDate) AS orderYear \
                 FROM Orders; \
                 CREATE VIEW Recent AS \
                 SELECT prodName, orderYear, SUM(cost) AS MEASURE sumCost \
                 FROM WithYear",
            )
            .unwrap();
        let schema = catalog.resolve(&Ident::new("Recent")).unwrap();
        let basis = schema.basis.as_ref().unwrap();
        assert!(matches!(&basis.source, BasisSource::Table(t) if t.matches("orders")));
        let year_expr = basis.column_expr(&Ident::new("orderYear")).unwrap();
        assert!(matches!(year_expr, Expr::Function { name, .. } if name.matches("YEAR")));
    }
}
