//! Name resolution, type checking and measure-use validation.
//!
//! Analysis walks the query against the catalog, resolving every column to
//! its source, assigning a type to every expression, classifying each
//! measure reference by call site, and validating context modifiers
//! against the measure's dimensionality. Relations that define measures
//! (views, WITH entries, FROM subqueries) are flattened to a measure
//! basis: every visible column and measure formula expressed over the rows
//! of an underlying source, which is what the rewriter builds subqueries
//! from.

use std::collections::HashSet;

use crate::catalog::{BasisSource, Catalog, ColumnDef, MeasureBasis, ScalarType, TableSource};
use crate::syntax::{
    AggFunc, BinaryOp, ContextModifier, Expr, Ident, JoinCondition, Literal, Query, Select,
    SelectItem, TableExpr, UnaryOp,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("unknown table: {0}")]
    UnknownTable(Ident),
    #[error("unknown column: {}", fmt_column(.qualifier, .column))]
    UnknownColumn {
        qualifier: Option<Ident>,
        column: Ident,
    },
    #[error("ambiguous column: {0}")]
    AmbiguousColumn(Ident),
    #[error("unknown function: {0}")]
    UnknownFunction(Ident),
    #[error("type mismatch in {context}: expected {expected}, found {found}")]
    TypeMismatch {
        context: String,
        expected: String,
        found: String,
    },
    #[error("measure misuse: {0}")]
    MeasureMisuse(String),
    #[error("invalid CURRENT: {0}")]
    InvalidCurrent(String),
    #[error("{dimension} is not a dimension of measure {measure}")]
    NonDimensionModifier { dimension: String, measure: Ident },
    #[error("measure {measure} is not aggregatable: column {column} appears outside an aggregate")]
    NonAggregatableMeasure { measure: Ident, column: Ident },
    #[error("measure cycle involving {0}")]
    MeasureCycle(Ident),
    #[error("select item needs a name: {0}")]
    UnnamedColumn(String),
    #[error("unsupported measure definition: {0}")]
    UnsupportedMeasureSource(String),
    #[error("column {0} must appear in GROUP BY or inside an aggregate")]
    NotGrouped(Ident),
    #[error("aggregate not allowed here: {0}")]
    MisplacedAggregate(String),
    #[error("scalar subquery must return one column, found {0}")]
    ScalarSubqueryShape(usize),
}

fn fmt_column(qualifier: &Option<Ident>, column: &Ident) -> String {
    match qualifier {
        Some(q) => format!("{q}.{column}"),
        None => column.to_string(),
    }
}

/// Where a measure reference occurs, per the call-site classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureSite {
    BareGrouped,
    BareUngrouped,
    InWhere,
    AtBase,
}

/// A query that passed analysis; expansion may assume well-formedness.
#[derive(Debug, Clone)]
pub struct ResolvedQuery {
    pub query: Query,
    /// Every measure reference found, in walk order.
    pub sites: Vec<MeasureSite>,
}

/// Validates a query against the catalog.
pub fn analyze(query: &Query, catalog: &Catalog) -> Result<ResolvedQuery, AnalysisError> {
    let mut analyzer = Analyzer {
        catalog,
        sites: Vec::new(),
    };
    analyzer.validate_query(query, None)?;
    Ok(ResolvedQuery {
        query: query.clone(),
        sites: analyzer.sites,
    })
}

/// Result of analyzing a CREATE VIEW body for the catalog.
pub(crate) struct ViewAnalysis {
    pub columns: Vec<ColumnDef>,
    pub basis: Option<MeasureBasis>,
}

/// Analyzes a view body: plain views validate like queries; views defining
/// measures are flattened to a measure basis.
pub(crate) fn analyze_view(
    query: &Query,
    catalog: &Catalog,
) -> Result<ViewAnalysis, AnalysisError> {
    let mut analyzer = Analyzer {
        catalog,
        sites: Vec::new(),
    };
    if defines_measures(&query.select) {
        if !query.ctes.is_empty() {
            return Err(AnalysisError::UnsupportedMeasureSource(
                "a view defining measures cannot have a WITH clause".into(),
            ));
        }
        let flat = analyzer.flatten_measured_select(&query.select, &[])?;
        let columns = flat.column_defs();
        Ok(ViewAnalysis {
            columns,
            basis: Some(flat.basis),
        })
    } else {
        let columns = analyzer.validate_query(query, None)?;
        Ok(ViewAnalysis {
            columns: columns
                .into_iter()
                .map(|c| ColumnDef {
                    name: c.name,
                    ty: c.ty.scalar(),
                    is_measure: false,
                    formula: None,
                })
                .collect(),
            basis: None,
        })
    }
}

pub(crate) fn defines_measures(select: &Select) -> bool {
    select
        .items
        .iter()
        .any(|i| matches!(i, SelectItem::Expr { is_measure, .. } if *is_measure))
}

/// Expression type, with Unknown for untyped nulls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Ty {
    Known(ScalarType),
    Unknown,
}

impl Ty {
    pub(crate) fn scalar(self) -> ScalarType {
        match self {
            Ty::Known(t) => t,
            Ty::Unknown => ScalarType::Varchar,
        }
    }

    fn is_numeric(self) -> bool {
        match self {
            Ty::Unknown => true,
            Ty::Known(t) => t.is_numeric(),
        }
    }

    fn is_boolean(self) -> bool {
        matches!(self, Ty::Unknown | Ty::Known(ScalarType::Boolean))
    }

    fn comparable_with(self, other: Ty) -> bool {
        match (self, other) {
            (Ty::Unknown, _) | (_, Ty::Unknown) => true,
            (Ty::Known(a), Ty::Known(b)) => {
                a == b || (a.is_numeric() && b.is_numeric())
            }
        }
    }

    fn describe(self) -> String {
        match self {
            Ty::Known(t) => t.name().to_string(),
            Ty::Unknown => "NULL".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ColumnInfo {
    pub name: Ident,
    pub ty: Ty,
    pub is_measure: bool,
}

/// How a FROM relation is realized when the query is rewritten.
#[derive(Debug, Clone)]
pub(crate) enum RelKind {
    /// Base table, referenced by name.
    Base(Ident),
    /// Plain view, referenced by name; the engine runs its stored body.
    PlainView(Ident),
    /// Plain FROM subquery, kept inline.
    PlainDerived(Box<Select>),
    /// Plain WITH entry, referenced by name; the WITH clause is kept.
    PlainCte(Ident),
    /// Relation defining measures, flattened to its basis.
    Measured(MeasureBasis),
}

#[derive(Debug, Clone)]
pub(crate) struct SourceBinding {
    /// Qualifier this source answers to: explicit alias, else table name;
    /// None for anonymous FROM subqueries.
    pub alias: Option<Ident>,
    pub columns: Vec<ColumnInfo>,
    pub kind: RelKind,
}

impl SourceBinding {
    pub(crate) fn column_index(&self, name: &Ident) -> Option<usize> {
        self.columns.iter().position(|c| &c.name == name)
    }

    pub(crate) fn dimensions(&self) -> impl Iterator<Item = &ColumnInfo> {
        self.columns.iter().filter(|c| !c.is_measure)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct CteBinding {
    pub name: Ident,
    pub columns: Vec<ColumnInfo>,
    pub kind: RelKind,
}

#[derive(Debug, Clone)]
pub(crate) struct GroupInfo {
    /// Group keys in normalized form (canonical column qualifiers).
    pub normalized_keys: Vec<Expr>,
}

/// Resolution scope for one SELECT, chained to enclosing selects.
pub(crate) struct Scope<'a> {
    pub parent: Option<&'a Scope<'a>>,
    pub sources: Vec<SourceBinding>,
    pub using_columns: Vec<Ident>,
    pub ctes: Vec<CteBinding>,
    pub group: Option<GroupInfo>,
    /// Distance from the outermost scope, for canonical column naming.
    pub level: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ResolvedColumn {
    /// Scope hops outward from the referencing expression.
    pub depth: usize,
    pub source: usize,
    pub column: usize,
}

impl<'a> Scope<'a> {
    pub(crate) fn binding(&self, depth: usize, source: usize) -> &SourceBinding {
        if depth == 0 {
            &self.sources[source]
        } else {
            self.parent
                .expect("resolved depth exceeds scope chain")
                .binding(depth - 1, source)
        }
    }

    pub(crate) fn info(&self, r: ResolvedColumn) -> &ColumnInfo {
        &self.binding(r.depth, r.source).columns[r.column]
    }

    pub(crate) fn level_at(&self, depth: usize) -> usize {
        self.level - depth
    }

    pub(crate) fn resolve(
        &self,
        qualifier: Option<&Ident>,
        name: &Ident,
    ) -> Result<ResolvedColumn, AnalysisError> {
        match qualifier {
            Some(q) => {
                for (si, source) in self.sources.iter().enumerate() {
                    if source.alias.as_ref() == Some(q) {
                        return match source.column_index(name) {
                            Some(ci) => Ok(ResolvedColumn {
                                depth: 0,
                                source: si,
                                column: ci,
                            }),
                            None => Err(AnalysisError::UnknownColumn {
                                qualifier: Some(q.clone()),
                                column: name.clone(),
                            }),
                        };
                    }
                }
                match self.parent {
                    Some(p) => p.resolve(qualifier, name).map(|r| ResolvedColumn {
                        depth: r.depth + 1,
                        ..r
                    }),
                    None => Err(AnalysisError::UnknownColumn {
                        qualifier: Some(q.clone()),
                        column: name.clone(),
                    }),
                }
            }
            None => {
                let mut matches = Vec::new();
                for (si, source) in self.sources.iter().enumerate() {
                    if let Some(ci) = source.column_index(name) {
                        matches.push(ResolvedColumn {
                            depth: 0,
                            source: si,
                            column: ci,
                        });
                    }
                }
                match matches.len() {
                    1 => Ok(matches[0]),
                    0 => match self.parent {
                        Some(p) => p.resolve(None, name).map(|r| ResolvedColumn {
                            depth: r.depth + 1,
                            ..r
                        }),
                        None => Err(AnalysisError::UnknownColumn {
                            qualifier: None,
                            column: name.clone(),
                        }),
                    },
                    _ if self.using_columns.contains(name) => Ok(matches[0]),
                    _ => Err(AnalysisError::AmbiguousColumn(name.clone())),
                }
            }
        }
    }

    /// Rewrites column references to canonical `$level.source.column`
    /// qualifiers so structurally different spellings of the same
    /// expression compare equal.
    pub(crate) fn normalize(&self, expr: &Expr) -> Result<Expr, AnalysisError> {
        Ok(match expr {
            Expr::Column { qualifier, name } => {
                let r = self.resolve(qualifier.as_ref(), name)?;
                let level = self.level_at(r.depth);
                Expr::Column {
                    qualifier: Some(Ident::new(format!("${level}.{}", r.source))),
                    name: self.info(r).name.clone(),
                }
            }
            Expr::Binary { op, left, right } => Expr::Binary {
                op: *op,
                left: Box::new(self.normalize(left)?),
                right: Box::new(self.normalize(right)?),
            },
            Expr::Unary { op, expr } => Expr::Unary {
                op: *op,
                expr: Box::new(self.normalize(expr)?),
            },
            Expr::IsNull { expr, negated } => Expr::IsNull {
                expr: Box::new(self.normalize(expr)?),
                negated: *negated,
            },
            Expr::Function { name, args } => Expr::Function {
                name: name.clone(),
                args: args
                    .iter()
                    .map(|a| self.normalize(a))
                    .collect::<Result<_, _>>()?,
            },
            other => other.clone(),
        })
    }
}

pub(crate) struct Analyzer<'a> {
    catalog: &'a Catalog,
    sites: Vec<MeasureSite>,
}

impl<'a> Analyzer<'a> {
    pub(crate) fn new(catalog: &'a Catalog) -> Self {
        Analyzer {
            catalog,
            sites: Vec::new(),
        }
    }
}

/// Flattened form of a measure-defining select.
pub(crate) struct FlatSelect {
    pub basis: MeasureBasis,
    /// (name, type, is_measure) in declaration order.
    pub columns: Vec<ColumnInfo>,
}

impl FlatSelect {
    pub(crate) fn column_defs(&self) -> Vec<ColumnDef> {
        self.columns
            .iter()
            .map(|c| {
                let formula = if c.is_measure {
                    self.basis.measure_formula(&c.name).cloned()
                } else {
                    self.basis
                        .column_expr(&c.name)
                        .filter(|e| !matches!(e, Expr::Column { .. }))
                        .cloned()
                };
                ColumnDef {
                    name: c.name.clone(),
                    ty: c.ty.scalar(),
                    is_measure: c.is_measure,
                    formula,
                }
            })
            .collect()
    }
}

impl<'a> Analyzer<'a> {
    fn validate_query(
        &mut self,
        query: &Query,
        parent: Option<&Scope<'_>>,
    ) -> Result<Vec<ColumnInfo>, AnalysisError> {
        let mut ctes: Vec<CteBinding> = Vec::new();
        for cte in &query.ctes {
            let binding = self.analyze_cte_body(&cte.name, &cte.query, &ctes)?;
            ctes.push(binding);
        }
        self.validate_select(&query.select, &ctes, parent)
    }

    pub(crate) fn analyze_cte_body(
        &mut self,
        name: &Ident,
        select: &Select,
        ctes: &[CteBinding],
    ) -> Result<CteBinding, AnalysisError> {
        if defines_measures(select) {
            let flat = self.flatten_measured_select(select, ctes)?;
            Ok(CteBinding {
                name: name.clone(),
                columns: flat.columns,
                kind: RelKind::Measured(flat.basis),
            })
        } else {
            let columns = self.validate_select(select, ctes, None)?;
            Ok(CteBinding {
                name: name.clone(),
                columns,
                kind: RelKind::PlainCte(name.clone()),
            })
        }
    }

    /// Validates one SELECT and returns its output columns.
    fn validate_select(
        &mut self,
        select: &Select,
        ctes: &[CteBinding],
        parent: Option<&Scope<'_>>,
    ) -> Result<Vec<ColumnInfo>, AnalysisError> {
        let mut scope = self.build_scope(select.from.as_ref(), ctes, parent)?;

        if let Some(from) = &select.from {
            self.validate_join_conditions(from, &scope)?;
        }

        if let Some(pred) = &select.where_clause {
            let cx = TypeCtx {
                scope: &scope,
                site: SiteKind::Where,
                grouped: select.group_by.is_some(),
                in_aggregate: false,
                covered: false,
                measure: None,
                select_items: &[],
            };
            let ty = self.type_expr(pred, &cx)?;
            require_boolean(ty, "WHERE clause")?;
        }

        let grouped = select.group_by.is_some();
        if let Some(group_by) = &select.group_by {
            let mut normalized_keys = Vec::new();
            for key in &group_by.keys {
                let cx = TypeCtx {
                    scope: &scope,
                    site: SiteKind::GroupKey,
                    grouped: true,
                    in_aggregate: false,
                    covered: true,
                    measure: None,
                    select_items: &[],
                };
                self.type_expr(key, &cx)?;
                normalized_keys.push(scope.normalize(key)?);
            }
            scope.group = Some(GroupInfo { normalized_keys });
        }

        let mut columns = Vec::new();
        for (idx, item) in select.items.iter().enumerate() {
            match item {
                SelectItem::Wildcard => {
                    if grouped {
                        return Err(AnalysisError::NotGrouped(Ident::new("*")));
                    }
                    for source in &scope.sources {
                        wildcard_columns(source, &scope.using_columns, &mut columns);
                    }
                }
                SelectItem::QualifiedWildcard(q) => {
                    if grouped {
                        return Err(AnalysisError::NotGrouped(Ident::new(format!("{q}.*"))));
                    }
                    let source = scope
                        .sources
                        .iter()
                        .find(|s| s.alias.as_ref() == Some(q))
                        .ok_or_else(|| AnalysisError::UnknownTable(q.clone()))?;
                    wildcard_columns(source, &[], &mut columns);
                }
                SelectItem::Expr {
                    expr, is_measure, ..
                } => {
                    if *is_measure {
                        return Err(AnalysisError::MeasureMisuse(
                            "measures can only be defined in a view, WITH entry, or FROM subquery"
                                .into(),
                        ));
                    }
                    let cx = TypeCtx {
                        scope: &scope,
                        site: SiteKind::SelectItem,
                        grouped,
                        in_aggregate: false,
                        covered: false,
                        measure: None,
                        select_items: &select.items,
                    };
                    let ty = self.type_expr(expr, &cx)?;
                    let name = item
                        .implied_name()
                        .unwrap_or_else(|| Ident::new(format!("${idx}")));
                    columns.push(ColumnInfo {
                        name,
                        ty,
                        is_measure: false,
                    });
                }
            }
        }
        Ok(columns)
    }

    fn build_scope<'s>(
        &mut self,
        from: Option<&TableExpr>,
        ctes: &[CteBinding],
        parent: Option<&'s Scope<'s>>,
    ) -> Result<Scope<'s>, AnalysisError> {
        let mut scope = Scope {
            parent,
            sources: Vec::new(),
            using_columns: Vec::new(),
            ctes: ctes.to_vec(),
            group: None,
            level: parent.map_or(0, |p| p.level + 1),
        };
        if let Some(from) = from {
            self.collect_sources(from, ctes, &mut scope)?;
        }
        Ok(scope)
    }

    fn collect_sources(
        &mut self,
        table: &TableExpr,
        ctes: &[CteBinding],
        scope: &mut Scope<'_>,
    ) -> Result<(), AnalysisError> {
        match table {
            TableExpr::Table { name, alias } => {
                let binding = self.named_binding(name, alias.clone(), ctes)?;
                scope.sources.push(binding);
                Ok(())
            }
            TableExpr::Subquery { query, alias } => {
                let binding = self.derived_binding(query, alias.clone(), ctes)?;
                scope.sources.push(binding);
                Ok(())
            }
            TableExpr::Join {
                left,
                right,
                condition,
                ..
            } => {
                self.collect_sources(left, ctes, scope)?;
                self.collect_sources(right, ctes, scope)?;
                if let JoinCondition::Using(cols) = condition {
                    for col in cols {
                        scope.using_columns.push(col.clone());
                    }
                }
                Ok(())
            }
        }
    }

    pub(crate) fn named_binding(
        &mut self,
        name: &Ident,
        alias: Option<Ident>,
        ctes: &[CteBinding],
    ) -> Result<SourceBinding, AnalysisError> {
        if let Some(cte) = ctes.iter().find(|c| &c.name == name) {
            return Ok(SourceBinding {
                alias: Some(alias.unwrap_or_else(|| name.clone())),
                columns: cte.columns.clone(),
                kind: cte.kind.clone(),
            });
        }
        let schema = self
            .catalog
            .try_resolve(name)
            .ok_or_else(|| AnalysisError::UnknownTable(name.clone()))?;
        let columns: Vec<ColumnInfo> = schema
            .columns
            .iter()
            .map(|c| ColumnInfo {
                name: c.name.clone(),
                ty: Ty::Known(c.ty),
                is_measure: c.is_measure,
            })
            .collect();
        let kind = match (&schema.source, &schema.basis) {
            (_, Some(basis)) => RelKind::Measured(basis.clone()),
            (TableSource::BaseTable, None) => RelKind::Base(name.clone()),
            (TableSource::View(_), None) => RelKind::PlainView(name.clone()),
        };
        Ok(SourceBinding {
            alias: Some(alias.unwrap_or_else(|| name.clone())),
            columns,
            kind,
        })
    }

    pub(crate) fn derived_binding(
        &mut self,
        select: &Select,
        alias: Option<Ident>,
        ctes: &[CteBinding],
    ) -> Result<SourceBinding, AnalysisError> {
        if defines_measures(select) {
            let flat = self.flatten_measured_select(select, ctes)?;
            Ok(SourceBinding {
                alias,
                columns: flat.columns,
                kind: RelKind::Measured(flat.basis),
            })
        } else {
            let columns = self.validate_select(select, ctes, None)?;
            Ok(SourceBinding {
                alias,
                columns,
                kind: RelKind::PlainDerived(Box::new(select.clone())),
            })
        }
    }

    fn validate_join_conditions(
        &mut self,
        table: &TableExpr,
        scope: &Scope<'_>,
    ) -> Result<(), AnalysisError> {
        if let TableExpr::Join {
            left,
            right,
            condition,
            ..
        } = table
        {
            self.validate_join_conditions(left, scope)?;
            self.validate_join_conditions(right, scope)?;
            match condition {
                JoinCondition::On(pred) => {
                    let cx = TypeCtx {
                        scope,
                        site: SiteKind::JoinOn,
                        grouped: false,
                        in_aggregate: false,
                        covered: true,
                        measure: None,
                        select_items: &[],
                    };
                    let ty = self.type_expr(pred, &cx)?;
                    require_boolean(ty, "JOIN condition")?;
                }
                JoinCondition::Using(cols) => {
                    for col in cols {
                        let matches = scope
                            .sources
                            .iter()
                            .filter(|s| s.column_index(col).is_some())
                            .count();
                        if matches < 2 {
                            return Err(AnalysisError::UnknownColumn {
                                qualifier: None,
                                column: col.clone(),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Flattens a SELECT that defines measures into its measure basis.
    fn flatten_measured_select(
        &mut self,
        select: &Select,
        ctes: &[CteBinding],
    ) -> Result<FlatSelect, AnalysisError> {
        if select.group_by.is_some() {
            return Err(AnalysisError::UnsupportedMeasureSource(
                "a SELECT defining measures cannot have GROUP BY".into(),
            ));
        }
        let from = select.from.as_ref().ok_or_else(|| {
            AnalysisError::UnsupportedMeasureSource(
                "a SELECT defining measures needs a FROM clause".into(),
            )
        })?;
        let (source_alias, flat_source) = match from {
            TableExpr::Table { name, alias } => {
                (alias.clone().unwrap_or_else(|| name.clone()), self.flat_source_named(name, ctes)?)
            }
            TableExpr::Subquery { query, alias } => {
                let source = self.flat_source_derived(query, ctes)?;
                (alias.clone().unwrap_or_else(|| Ident::new("$src")), source)
            }
            TableExpr::Join { .. } => {
                return Err(AnalysisError::UnsupportedMeasureSource(
                    "a SELECT defining measures must read from a single relation".into(),
                ));
            }
        };

        // Substitution environment: visible input column -> expression over
        // the basis source row.
        let input = &flat_source;

        let subst = |expr: &Expr, allow_sibling: &dyn Fn(&Ident) -> bool| -> Result<Expr, AnalysisError> {
            substitute_source_refs(expr, &source_alias, input, allow_sibling)
        };

        let baked_here = match &select.where_clause {
            Some(pred) => {
                let rewritten = subst(pred, &|_| false)?;
                type_over_columns(&rewritten, &input.source_columns, "view WHERE clause")
                    .and_then(|ty| require_boolean(ty, "view WHERE clause"))?;
                Some(rewritten)
            }
            None => None,
        };
        let baked_where = Expr::and_opt(input.baked_where.clone(), baked_here);

        let mut columns: Vec<ColumnInfo> = Vec::new();
        let mut column_exprs: Vec<(Ident, Expr)> = Vec::new();
        let mut measure_items: Vec<(Ident, Expr)> = Vec::new();

        let measure_names: Vec<Ident> = select
            .items
            .iter()
            .filter_map(|i| match i {
                SelectItem::Expr {
                    is_measure: true,
                    alias,
                    ..
                } => alias.clone(),
                _ => None,
            })
            .collect();

        for item in &select.items {
            match item {
                SelectItem::Wildcard | SelectItem::QualifiedWildcard(_) => {
                    if let SelectItem::QualifiedWildcard(q) = item {
                        if *q != source_alias {
                            return Err(AnalysisError::UnknownTable(q.clone()));
                        }
                    }
                    for (name, expr, ty) in &input.columns {
                        columns.push(ColumnInfo {
                            name: name.clone(),
                            ty: *ty,
                            is_measure: false,
                        });
                        column_exprs.push((name.clone(), expr.clone()));
                    }
                }
                SelectItem::Expr {
                    expr,
                    alias,
                    is_measure: false,
                } => {
                    let rewritten = subst(expr, &|_| false)?;
                    let mut has_aggregate = false;
                    rewritten.walk(&mut |e| {
                        if matches!(e, Expr::Aggregate { .. }) {
                            has_aggregate = true;
                        }
                    });
                    if has_aggregate {
                        return Err(AnalysisError::UnsupportedMeasureSource(
                            "a non-measure column beside a measure cannot aggregate; \
                             mark it AS MEASURE"
                                .into(),
                        ));
                    }
                    let ty =
                        type_over_columns(&rewritten, &input.source_columns, "view column")?;
                    let name = match (alias, expr) {
                        (Some(a), _) => a.clone(),
                        (None, Expr::Column { name, .. }) => name.clone(),
                        (None, other) => {
                            return Err(AnalysisError::UnnamedColumn(
                                crate::syntax::print_expr(other),
                            ));
                        }
                    };
                    columns.push(ColumnInfo {
                        name: name.clone(),
                        ty,
                        is_measure: false,
                    });
                    column_exprs.push((name, rewritten));
                }
                SelectItem::Expr {
                    expr,
                    alias,
                    is_measure: true,
                } => {
                    let name = alias.clone().expect("parser requires AS MEASURE name");
                    let is_sibling = |n: &Ident| measure_names.contains(n);
                    let rewritten = subst(expr, &is_sibling)?;
                    check_measure_formula(&rewritten, &name, &measure_names)?;
                    columns.push(ColumnInfo {
                        name: name.clone(),
                        ty: Ty::Unknown,
                        is_measure: true,
                    });
                    measure_items.push((name, rewritten));
                }
            }
        }

        // Type measures in sibling-dependency order; a cycle means the
        // formulas can never be grounded.
        let order = topo_order(&measure_items)?;
        let mut measure_types: Vec<(Ident, Ty)> = Vec::new();
        for idx in order {
            let (name, formula) = &measure_items[idx];
            let mut env = input.source_columns.clone();
            env.extend(measure_types.iter().map(|(n, t)| ColumnInfo {
                name: n.clone(),
                ty: *t,
                is_measure: true,
            }));
            let ty = type_over_columns(formula, &env, "measure formula")?;
            measure_types.push((name.clone(), ty));
        }
        for col in columns.iter_mut().filter(|c| c.is_measure) {
            let ty = measure_types
                .iter()
                .find(|(n, _)| n == &col.name)
                .map(|(_, t)| *t)
                .expect("every measure was typed");
            col.ty = ty;
        }

        Ok(FlatSelect {
            basis: MeasureBasis {
                source: input.source.clone(),
                columns: column_exprs,
                measures: measure_items,
                baked_where,
            },
            columns,
        })
    }

    fn flat_source_named(
        &mut self,
        name: &Ident,
        ctes: &[CteBinding],
    ) -> Result<FlatSource, AnalysisError> {
        if let Some(cte) = ctes.iter().find(|c| &c.name == name) {
            return match &cte.kind {
                RelKind::Measured(basis) => {
                    Ok(FlatSource::from_basis(basis, &cte.columns, self.catalog))
                }
                _ => Err(AnalysisError::UnsupportedMeasureSource(format!(
                    "measures over WITH entry {name} are not supported; define them inside it"
                ))),
            };
        }
        let schema = self
            .catalog
            .try_resolve(name)
            .ok_or_else(|| AnalysisError::UnknownTable(name.clone()))?;
        if let Some(basis) = &schema.basis {
            let columns: Vec<ColumnInfo> = schema
                .columns
                .iter()
                .map(|c| ColumnInfo {
                    name: c.name.clone(),
                    ty: Ty::Known(c.ty),
                    is_measure: c.is_measure,
                })
                .collect();
            return Ok(FlatSource::from_basis(basis, &columns, self.catalog));
        }
        match &schema.source {
            TableSource::BaseTable => {
                let columns: Vec<(Ident, Expr, Ty)> = schema
                    .columns
                    .iter()
                    .map(|c| {
                        (
                            c.name.clone(),
                            Expr::column(c.name.clone()),
                            Ty::Known(c.ty),
                        )
                    })
                    .collect();
                Ok(FlatSource {
                    source: BasisSource::Table(name.clone()),
                    source_columns: schema
                        .columns
                        .iter()
                        .map(|c| ColumnInfo {
                            name: c.name.clone(),
                            ty: Ty::Known(c.ty),
                            is_measure: false,
                        })
                        .collect(),
                    columns,
                    input_measures: Vec::new(),
                    baked_where: None,
                })
            }
            TableSource::View(query) => {
                if !query.ctes.is_empty() {
                    return Err(AnalysisError::UnsupportedMeasureSource(
                        "measures over a view with a WITH clause are not supported".into(),
                    ));
                }
                let columns: Vec<(Ident, Expr, Ty)> = schema
                    .columns
                    .iter()
                    .map(|c| {
                        (
                            c.name.clone(),
                            Expr::column(c.name.clone()),
                            Ty::Known(c.ty),
                        )
                    })
                    .collect();
                Ok(FlatSource {
                    source: BasisSource::Derived(Box::new(query.select.clone())),
                    source_columns: schema
                        .columns
                        .iter()
                        .map(|c| ColumnInfo {
                            name: c.name.clone(),
                            ty: Ty::Known(c.ty),
                            is_measure: false,
                        })
                        .collect(),
                    columns,
                    input_measures: Vec::new(),
                    baked_where: None,
                })
            }
        }
    }

    fn flat_source_derived(
        &mut self,
        select: &Select,
        ctes: &[CteBinding],
    ) -> Result<FlatSource, AnalysisError> {
        if defines_measures(select) {
            let flat = self.flatten_measured_select(select, ctes)?;
            Ok(FlatSource::from_basis(&flat.basis, &flat.columns, self.catalog))
        } else {
            if !ctes.is_empty() && select_uses_ctes(select, ctes) {
                return Err(AnalysisError::UnsupportedMeasureSource(
                    "measures over a subquery that reads WITH entries are not supported".into(),
                ));
            }
            let columns = self.validate_select(select, &[], None)?;
            let source_columns: Vec<ColumnInfo> = columns
                .iter()
                .map(|c| ColumnInfo {
                    name: c.name.clone(),
                    ty: c.ty,
                    is_measure: false,
                })
                .collect();
            let column_exprs = columns
                .iter()
                .map(|c| (c.name.clone(), Expr::column(c.name.clone()), c.ty))
                .collect();
            Ok(FlatSource {
                source: BasisSource::Derived(Box::new(select.clone())),
                source_columns,
                columns: column_exprs,
                input_measures: Vec::new(),
                baked_where: None,
            })
        }
    }

    /// Types an expression and validates measure usage at this site.
    fn type_expr(&mut self, expr: &Expr, cx: &TypeCtx<'_>) -> Result<Ty, AnalysisError> {
        // A select item (or part of one) that matches a group key is
        // evaluated against the group's representative values, so its
        // columns need no further grouping checks.
        let mut cx = cx.clone();
        if cx.grouped && !cx.covered && !cx.in_aggregate && cx.site == SiteKind::SelectItem {
            if let Some(group) = self.enclosing_group(cx.scope) {
                let normalized = cx.scope.normalize(expr);
                if let Ok(n) = normalized {
                    if group.normalized_keys.contains(&n) {
                        cx.covered = true;
                    }
                }
            }
        }
        let cx = &cx;

        match expr {
            Expr::Literal(lit) => Ok(literal_ty(lit)),
            Expr::Column { qualifier, name } => {
                // Inside an AT (WHERE ...) predicate, unqualified names bind
                // to the measure's dimensions (the subquery row) first.
                if qualifier.is_none() && cx.site == SiteKind::AtWherePred {
                    let m = cx.measure.expect("AT WHERE site carries measure");
                    if let Some(info) = m.dimension(name) {
                        return Ok(info.ty);
                    }
                }
                let r = cx.scope.resolve(qualifier.as_ref(), name)?;
                let info = cx.scope.info(r).clone();
                if info.is_measure {
                    self.check_bare_measure_site(cx, name)?;
                } else if cx.grouped
                    && !cx.covered
                    && !cx.in_aggregate
                    && cx.site == SiteKind::SelectItem
                    && r.depth == 0
                {
                    return Err(AnalysisError::NotGrouped(name.clone()));
                }
                Ok(info.ty)
            }
            Expr::Binary { op, left, right } => {
                let lt = self.type_expr(left, cx)?;
                let rt = self.type_expr(right, cx)?;
                type_binary(*op, lt, rt)
            }
            Expr::Unary { op, expr } => {
                let ty = self.type_expr(expr, cx)?;
                match op {
                    UnaryOp::Not => {
                        require_boolean(ty, "NOT operand")?;
                        Ok(Ty::Known(ScalarType::Boolean))
                    }
                    UnaryOp::Neg => {
                        require_numeric(ty, "unary minus")?;
                        Ok(ty)
                    }
                }
            }
            Expr::IsNull { expr, .. } => {
                self.type_expr(expr, cx)?;
                Ok(Ty::Known(ScalarType::Boolean))
            }
            Expr::Function { name, args } => self.type_function(name, args, cx),
            Expr::Aggregate { func, arg } => {
                if matches!(cx.site, SiteKind::Where | SiteKind::AtWherePred) {
                    return Err(AnalysisError::MisplacedAggregate(
                        "aggregate function in a WHERE clause".into(),
                    ));
                }
                if cx.site == SiteKind::GroupKey {
                    return Err(AnalysisError::MisplacedAggregate(
                        "aggregate function in GROUP BY".into(),
                    ));
                }
                if cx.in_aggregate {
                    return Err(AnalysisError::MisplacedAggregate(
                        "nested aggregate function".into(),
                    ));
                }
                let inner = TypeCtx {
                    in_aggregate: true,
                    ..cx.clone()
                };
                let arg_ty = match arg {
                    Some(a) => Some(self.type_expr(a, &inner)?),
                    None => None,
                };
                aggregate_ty(*func, arg_ty)
            }
            Expr::WindowAggregate {
                func,
                arg,
                partition_by,
            } => {
                if cx.site != SiteKind::SelectItem || cx.in_aggregate {
                    return Err(AnalysisError::MisplacedAggregate(
                        "window aggregate outside a select item".into(),
                    ));
                }
                if cx.grouped {
                    return Err(AnalysisError::MisplacedAggregate(
                        "window aggregate in a grouped query".into(),
                    ));
                }
                let inner = TypeCtx {
                    in_aggregate: true,
                    ..cx.clone()
                };
                let arg_ty = match arg {
                    Some(a) => Some(self.type_expr(a, &inner)?),
                    None => None,
                };
                for key in partition_by {
                    self.type_expr(key, &inner)?;
                }
                aggregate_ty(*func, arg_ty)
            }
            Expr::AggregateMeasure { arg } => {
                if matches!(cx.site, SiteKind::Where | SiteKind::AtWherePred) {
                    return Err(AnalysisError::MeasureMisuse(
                        "AGGREGATE is not allowed in a WHERE clause; use AT (WHERE ...)".into(),
                    ));
                }
                if cx.in_aggregate {
                    return Err(AnalysisError::MeasureMisuse(
                        "AGGREGATE inside an aggregate function".into(),
                    ));
                }
                let m = self.resolve_measure_ref(arg, cx.scope).map_err(|e| match e {
                    AnalysisError::MeasureMisuse(_) => AnalysisError::MeasureMisuse(format!(
                        "AGGREGATE requires a measure argument, found {}",
                        crate::syntax::print_expr(arg)
                    )),
                    other => other,
                })?;
                self.sites.push(MeasureSite::AtBase);
                Ok(m.ty)
            }
            Expr::At { base, modifiers } => self.type_at(base, modifiers, cx),
            Expr::Current { .. } => Err(AnalysisError::InvalidCurrent(
                "CURRENT is only allowed inside a SET value expression".into(),
            )),
            Expr::Subquery(select) => {
                self.reject_subquery_in_modifier(cx)?;
                let ctes = cx.scope.ctes.clone();
                let columns = self.validate_select(select, &ctes, Some(cx.scope))?;
                if columns.len() != 1 {
                    return Err(AnalysisError::ScalarSubqueryShape(columns.len()));
                }
                Ok(columns[0].ty)
            }
            Expr::Exists(select) => {
                self.reject_subquery_in_modifier(cx)?;
                let ctes = cx.scope.ctes.clone();
                self.validate_select(select, &ctes, Some(cx.scope))?;
                Ok(Ty::Known(ScalarType::Boolean))
            }
        }
    }

    fn type_at(
        &mut self,
        base: &Expr,
        modifiers: &[ContextModifier],
        cx: &TypeCtx<'_>,
    ) -> Result<Ty, AnalysisError> {
        if cx.in_aggregate {
            return Err(AnalysisError::MeasureMisuse(
                "measure expression inside an aggregate function".into(),
            ));
        }
        if cx.site == SiteKind::GroupKey {
            return Err(AnalysisError::MeasureMisuse(
                "cannot group by a measure".into(),
            ));
        }
        let measure = match base {
            Expr::At {
                base: inner_base,
                modifiers: inner_mods,
            } => {
                self.type_at(inner_base, inner_mods, cx)?;
                self.resolve_measure_ref(innermost_base(base), cx.scope)?
            }
            _ => {
                let m = self.resolve_measure_ref(base, cx.scope)?;
                self.sites.push(
                    if matches!(cx.site, SiteKind::Where | SiteKind::AtWherePred) {
                        MeasureSite::InWhere
                    } else {
                        MeasureSite::AtBase
                    },
                );
                m
            }
        };

        if matches!(cx.site, SiteKind::Where | SiteKind::AtWherePred)
            && !context_independent(base, modifiers)
        {
            return Err(AnalysisError::MeasureMisuse(format!(
                "measure {} in a WHERE clause needs an explicit context: \
                 the innermost AT must start with WHERE or bare ALL",
                measure.name
            )));
        }

        for modifier in modifiers {
            match modifier {
                ContextModifier::AllBare => {}
                ContextModifier::Visible => {
                    if matches!(cx.site, SiteKind::Where | SiteKind::AtWherePred) {
                        return Err(AnalysisError::MeasureMisuse(
                            "VISIBLE cannot be used inside a WHERE clause".into(),
                        ));
                    }
                }
                ContextModifier::All(dims) => {
                    for dim in dims {
                        self.resolve_dimension(dim, &measure, cx, &mut HashSet::new())?;
                    }
                }
                ContextModifier::Set { dim, value } => {
                    self.resolve_dimension(dim, &measure, cx, &mut HashSet::new())?;
                    let value_cx = TypeCtx {
                        scope: cx.scope,
                        site: SiteKind::SetValue,
                        grouped: cx.grouped,
                        in_aggregate: false,
                        covered: true,
                        measure: Some(&measure),
                        select_items: cx.select_items,
                    };
                    self.type_set_value(value, &value_cx)?;
                }
                ContextModifier::Where(pred) => {
                    let pred_cx = TypeCtx {
                        scope: cx.scope,
                        site: SiteKind::AtWherePred,
                        grouped: cx.grouped,
                        in_aggregate: false,
                        covered: true,
                        measure: Some(&measure),
                        select_items: cx.select_items,
                    };
                    let ty = self.type_expr(pred, &pred_cx)?;
                    require_boolean(ty, "AT (WHERE ...) predicate")?;
                }
            }
        }
        Ok(measure.ty)
    }

    /// Types a SET value, where CURRENT is legal.
    fn type_set_value(&mut self, expr: &Expr, cx: &TypeCtx<'_>) -> Result<Ty, AnalysisError> {
        match expr {
            Expr::Current { dim } => {
                let m = cx.measure.expect("SET value site carries measure");
                let normalized =
                    self.resolve_dimension(dim, m, cx, &mut HashSet::new())?;
                type_over_columns(&normalized, &m.dimensions, "CURRENT dimension")
            }
            Expr::Binary { op, left, right } => {
                let lt = self.type_set_value(left, cx)?;
                let rt = self.type_set_value(right, cx)?;
                type_binary(*op, lt, rt)
            }
            Expr::Unary { op: UnaryOp::Neg, expr } => {
                let ty = self.type_set_value(expr, cx)?;
                require_numeric(ty, "unary minus")?;
                Ok(ty)
            }
            Expr::Function { name, args } => {
                let mut tys = Vec::new();
                for a in args {
                    tys.push(self.type_set_value(a, cx)?);
                }
                scalar_function_ty(name, &tys)
            }
            other => self.type_expr(other, cx),
        }
    }

    fn reject_subquery_in_modifier(&self, cx: &TypeCtx<'_>) -> Result<(), AnalysisError> {
        match cx.site {
            SiteKind::AtWherePred => Err(AnalysisError::MeasureMisuse(
                "subqueries are not allowed in a context predicate".into(),
            )),
            SiteKind::SetValue => Err(AnalysisError::MeasureMisuse(
                "subqueries are not allowed in a SET value".into(),
            )),
            _ => Ok(()),
        }
    }

    fn check_bare_measure_site(
        &mut self,
        cx: &TypeCtx<'_>,
        name: &Ident,
    ) -> Result<(), AnalysisError> {
        match cx.site {
            SiteKind::SelectItem => {
                if cx.in_aggregate {
                    return Err(AnalysisError::MeasureMisuse(format!(
                        "aggregate function applied to measure {name}"
                    )));
                }
                self.sites.push(if cx.grouped {
                    MeasureSite::BareGrouped
                } else {
                    MeasureSite::BareUngrouped
                });
                Ok(())
            }
            SiteKind::Where => Err(AnalysisError::MeasureMisuse(format!(
                "measure {name} in a WHERE clause needs an explicit context, \
                 e.g. {name} AT (WHERE ...)"
            ))),
            SiteKind::AtWherePred => Err(AnalysisError::MeasureMisuse(format!(
                "measure {name} cannot appear inside a context predicate"
            ))),
            SiteKind::GroupKey => Err(AnalysisError::MeasureMisuse(format!(
                "cannot group by measure {name}"
            ))),
            SiteKind::JoinOn => Err(AnalysisError::MeasureMisuse(format!(
                "measure {name} cannot appear in a join condition"
            ))),
            SiteKind::SetValue => Err(AnalysisError::MeasureMisuse(format!(
                "measure {name} cannot appear in a SET value"
            ))),
        }
    }

    /// Resolves the operand of AGGREGATE or the base of AT to a measure.
    fn resolve_measure_ref(
        &mut self,
        expr: &Expr,
        scope: &Scope<'_>,
    ) -> Result<MeasureInfo, AnalysisError> {
        let Expr::Column { qualifier, name } = expr else {
            return Err(AnalysisError::MeasureMisuse(format!(
                "expected a measure reference, found {}",
                crate::syntax::print_expr(expr)
            )));
        };
        let r = scope.resolve(qualifier.as_ref(), name)?;
        let binding = scope.binding(r.depth, r.source);
        let info = &binding.columns[r.column];
        if !info.is_measure {
            return Err(AnalysisError::MeasureMisuse(format!(
                "{name} is not a measure"
            )));
        }
        let RelKind::Measured(_) = &binding.kind else {
            return Err(AnalysisError::MeasureMisuse(format!(
                "{name} is not backed by a measure definition"
            )));
        };
        Ok(MeasureInfo {
            name: name.clone(),
            ty: info.ty,
            alias: binding.alias.clone(),
            dimensions: binding
                .columns
                .iter()
                .filter(|c| !c.is_measure)
                .cloned()
                .collect(),
        })
    }

    /// Resolves an ALL/SET/CURRENT dimension reference to a normalized
    /// expression over the measure's dimension columns.
    fn resolve_dimension(
        &mut self,
        dim: &Expr,
        measure: &MeasureInfo,
        cx: &TypeCtx<'_>,
        visiting: &mut HashSet<Ident>,
    ) -> Result<Expr, AnalysisError> {
        let fail = || AnalysisError::NonDimensionModifier {
            dimension: crate::syntax::print_expr(dim),
            measure: measure.name.clone(),
        };
        match dim {
            Expr::Column { qualifier, name } => {
                if let Some(q) = qualifier {
                    if measure.alias.as_ref() != Some(q) {
                        return Err(fail());
                    }
                }
                if measure.dimension(name).is_some() {
                    return Ok(Expr::column(name.clone()));
                }
                // A select alias of the enclosing query can name an ad hoc
                // dimension, e.g. YEAR(orderDate) AS orderYear.
                if qualifier.is_none() && !visiting.contains(name) {
                    if let Some(aliased) = cx.select_alias(name) {
                        visiting.insert(name.clone());
                        let result = self.resolve_dimension(&aliased, measure, cx, visiting);
                        visiting.remove(name);
                        return result.map_err(|_| fail());
                    }
                }
                Err(fail())
            }
            Expr::Function { name, args } => {
                let mut normalized_args = Vec::new();
                for arg in args {
                    normalized_args.push(self.resolve_dimension_component(
                        arg, measure, cx, visiting,
                    )?);
                }
                scalar_function_ty(
                    name,
                    &normalized_args
                        .iter()
                        .map(|a| {
                            type_over_columns(a, &measure.dimensions, "dimension expression")
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                )?;
                Ok(Expr::Function {
                    name: name.clone(),
                    args: normalized_args,
                })
            }
            _ => Err(fail()),
        }
    }

    /// Normalizes a subexpression of an ad hoc dimension; every column in
    /// it must be a dimension of the measure.
    fn resolve_dimension_component(
        &mut self,
        expr: &Expr,
        measure: &MeasureInfo,
        cx: &TypeCtx<'_>,
        visiting: &mut HashSet<Ident>,
    ) -> Result<Expr, AnalysisError> {
        match expr {
            Expr::Column { .. } | Expr::Function { .. } => {
                self.resolve_dimension(expr, measure, cx, visiting)
            }
            Expr::Literal(lit) => Ok(Expr::Literal(lit.clone())),
            Expr::Binary { op, left, right } => Ok(Expr::Binary {
                op: *op,
                left: Box::new(self.resolve_dimension_component(left, measure, cx, visiting)?),
                right: Box::new(self.resolve_dimension_component(right, measure, cx, visiting)?),
            }),
            Expr::Unary { op, expr } => Ok(Expr::Unary {
                op: *op,
                expr: Box::new(self.resolve_dimension_component(expr, measure, cx, visiting)?),
            }),
            _ => Err(AnalysisError::NonDimensionModifier {
                dimension: crate::syntax::print_expr(expr),
                measure: measure.name.clone(),
            }),
        }
    }

    fn type_function(
        &mut self,
        name: &Ident,
        args: &[Expr],
        cx: &TypeCtx<'_>,
    ) -> Result<Ty, AnalysisError> {
        if name.matches("GROUPING") {
            if args.len() != 1 {
                return Err(AnalysisError::TypeMismatch {
                    context: "GROUPING".into(),
                    expected: "one argument".into(),
                    found: format!("{}", args.len()),
                });
            }
            self.type_expr(&args[0], &TypeCtx { covered: true, ..cx.clone() })?;
            let normalized = cx.scope.normalize(&args[0])?;
            let mut scope = Some(cx.scope);
            let mut found = false;
            while let Some(s) = scope {
                if let Some(g) = &s.group {
                    if g.normalized_keys.contains(&normalized) {
                        found = true;
                        break;
                    }
                }
                scope = s.parent;
            }
            if !found {
                return Err(AnalysisError::TypeMismatch {
                    context: "GROUPING".into(),
                    expected: "a grouping key of an enclosing query".into(),
                    found: crate::syntax::print_expr(&args[0]),
                });
            }
            return Ok(Ty::Known(ScalarType::Integer));
        }
        let mut tys = Vec::new();
        for arg in args {
            tys.push(self.type_expr(arg, cx)?);
        }
        scalar_function_ty(name, &tys)
    }

    fn enclosing_group<'s>(&self, scope: &'s Scope<'s>) -> Option<&'s GroupInfo> {
        scope.group.as_ref()
    }
}

/// A resolved measure reference with everything modifiers need.
#[derive(Debug, Clone)]
pub(crate) struct MeasureInfo {
    pub name: Ident,
    pub ty: Ty,
    /// Qualifier of the measure's source binding, if it has one.
    pub alias: Option<Ident>,
    /// Visible non-measure columns of the measure's relation.
    pub dimensions: Vec<ColumnInfo>,
}

impl MeasureInfo {
    pub(crate) fn dimension(&self, name: &Ident) -> Option<&ColumnInfo> {
        self.dimensions.iter().find(|c| &c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SiteKind {
    SelectItem,
    Where,
    GroupKey,
    JoinOn,
    AtWherePred,
    SetValue,
}

#[derive(Clone)]
pub(crate) struct TypeCtx<'a> {
    pub scope: &'a Scope<'a>,
    pub site: SiteKind,
    pub grouped: bool,
    pub in_aggregate: bool,
    /// True when an enclosing expression already matched a group key.
    pub covered: bool,
    pub measure: Option<&'a MeasureInfo>,
    pub select_items: &'a [SelectItem],
}

impl<'a> TypeCtx<'a> {
    /// Looks up a select alias in the enclosing query, for ad hoc
    /// dimension resolution.
    fn select_alias(&self, name: &Ident) -> Option<Expr> {
        self.select_items.iter().find_map(|item| match item {
            SelectItem::Expr {
                expr,
                alias: Some(alias),
                is_measure: false,
            } if alias == name => Some(expr.clone()),
            _ => None,
        })
    }
}

/// The innermost base of a (possibly nested) AT chain.
pub(crate) fn innermost_base(expr: &Expr) -> &Expr {
    match expr {
        Expr::At { base, .. } => innermost_base(base),
        other => other,
    }
}

/// True when the expression's context does not depend on the implicit
/// context of the call site: the innermost modifier list starts by
/// discarding it.
pub(crate) fn context_independent(base: &Expr, modifiers: &[ContextModifier]) -> bool {
    match base {
        Expr::At {
            base: inner_base,
            modifiers: inner_mods,
        } => context_independent(inner_base, inner_mods),
        _ => matches!(
            modifiers.first(),
            Some(ContextModifier::AllBare | ContextModifier::Where(_))
        ),
    }
}

/// Source description for flattening: where generated subqueries read
/// from, and what each visible input column means over that source.
pub(crate) struct FlatSource {
    pub source: BasisSource,
    /// Columns of the source row itself (what formulas range over).
    pub source_columns: Vec<ColumnInfo>,
    /// Visible input columns mapped to expressions over the source row.
    pub columns: Vec<(Ident, Expr, Ty)>,
    /// Measures the input relation defines; formulas may not read them.
    pub input_measures: Vec<Ident>,
    pub baked_where: Option<Expr>,
}

impl FlatSource {
    fn from_basis(basis: &MeasureBasis, visible: &[ColumnInfo], catalog: &Catalog) -> FlatSource {
        let columns = basis
            .columns
            .iter()
            .map(|(name, expr)| {
                let ty = visible
                    .iter()
                    .find(|c| &c.name == name)
                    .map(|c| c.ty)
                    .unwrap_or(Ty::Unknown);
                (name.clone(), expr.clone(), ty)
            })
            .collect();
        FlatSource {
            source: basis.source.clone(),
            source_columns: source_columns_of(basis, catalog),
            columns,
            input_measures: basis.measures.iter().map(|(n, _)| n.clone()).collect(),
            baked_where: basis.baked_where.clone(),
        }
    }
}

/// The source-row columns a basis ranges over: the base table's schema
/// when known, otherwise the columns its expressions mention.
fn source_columns_of(basis: &MeasureBasis, catalog: &Catalog) -> Vec<ColumnInfo> {
    if let BasisSource::Table(name) = &basis.source {
        if let Some(schema) = catalog.try_resolve(name) {
            return schema
                .columns
                .iter()
                .map(|c| ColumnInfo {
                    name: c.name.clone(),
                    ty: Ty::Known(c.ty),
                    is_measure: false,
                })
                .collect();
        }
    }
    let mut seen: Vec<ColumnInfo> = Vec::new();
    let mut add = |expr: &Expr| {
        expr.walk(&mut |e| {
            if let Expr::Column { name, .. } = e {
                if !seen.iter().any(|c| &c.name == name) {
                    seen.push(ColumnInfo {
                        name: name.clone(),
                        ty: Ty::Unknown,
                        is_measure: false,
                    });
                }
            }
        });
    };
    for (_, expr) in &basis.columns {
        add(expr);
    }
    for (_, expr) in &basis.measures {
        add(expr);
    }
    if let Some(w) = &basis.baked_where {
        add(w);
    }
    seen
}

/// Rewrites references to the defining select's input through the column
/// map; sibling measure names pass through unchanged.
fn substitute_source_refs(
    expr: &Expr,
    source_alias: &Ident,
    input: &FlatSource,
    allow_sibling: &dyn Fn(&Ident) -> bool,
) -> Result<Expr, AnalysisError> {
    Ok(match expr {
        Expr::Column { qualifier, name } => {
            if let Some(q) = qualifier {
                if q != source_alias {
                    return Err(AnalysisError::UnknownColumn {
                        qualifier: Some(q.clone()),
                        column: name.clone(),
                    });
                }
            }
            if let Some((_, mapped, _)) = input.columns.iter().find(|(n, _, _)| n == name) {
                mapped.clone()
            } else if qualifier.is_none() && allow_sibling(name) {
                Expr::column(name.clone())
            } else if input.input_measures.contains(name) {
                return Err(AnalysisError::MeasureMisuse(format!(
                    "measure {name} of the underlying relation cannot be referenced here"
                )));
            } else {
                return Err(AnalysisError::UnknownColumn {
                    qualifier: qualifier.clone(),
                    column: name.clone(),
                });
            }
        }
        Expr::Binary { op, left, right } => Expr::Binary {
            op: *op,
            left: Box::new(substitute_source_refs(left, source_alias, input, allow_sibling)?),
            right: Box::new(substitute_source_refs(
                right,
                source_alias,
                input,
                allow_sibling,
            )?),
        },
        Expr::Unary { op, expr } => Expr::Unary {
            op: *op,
            expr: Box::new(substitute_source_refs(expr, source_alias, input, allow_sibling)?),
        },
        Expr::IsNull { expr, negated } => Expr::IsNull {
            expr: Box::new(substitute_source_refs(expr, source_alias, input, allow_sibling)?),
            negated: *negated,
        },
        Expr::Function { name, args } => Expr::Function {
            name: name.clone(),
            args: args
                .iter()
                .map(|a| substitute_source_refs(a, source_alias, input, allow_sibling))
                .collect::<Result<_, _>>()?,
        },
        Expr::Aggregate { func, arg } => Expr::Aggregate {
            func: *func,
            arg: match arg {
                Some(a) => Some(Box::new(substitute_source_refs(
                    a,
                    source_alias,
                    input,
                    allow_sibling,
                )?)),
                None => None,
            },
        },
        Expr::Literal(lit) => Expr::Literal(lit.clone()),
        other => {
            return Err(AnalysisError::UnsupportedMeasureSource(format!(
                "{} is not allowed in a measure definition",
                crate::syntax::print_expr(other)
            )));
        }
    })
}

/// Rejects measure formulas that read input columns outside aggregates.
fn check_measure_formula(
    formula: &Expr,
    measure: &Ident,
    siblings: &[Ident],
) -> Result<(), AnalysisError> {
    fn walk(
        expr: &Expr,
        measure: &Ident,
        siblings: &[Ident],
        in_aggregate: bool,
    ) -> Result<(), AnalysisError> {
        match expr {
            Expr::Column { name, .. } => {
                let is_sibling = siblings.contains(name);
                if is_sibling && in_aggregate {
                    return Err(AnalysisError::MeasureMisuse(format!(
                        "aggregate function applied to measure {name}"
                    )));
                }
                if !is_sibling && !in_aggregate {
                    return Err(AnalysisError::NonAggregatableMeasure {
                        measure: measure.clone(),
                        column: name.clone(),
                    });
                }
                Ok(())
            }
            Expr::Aggregate { arg, .. } => {
                if in_aggregate {
                    return Err(AnalysisError::MisplacedAggregate(
                        "nested aggregate function".into(),
                    ));
                }
                if let Some(a) = arg {
                    walk(a, measure, siblings, true)?;
                }
                Ok(())
            }
            Expr::Binary { left, right, .. } => {
                walk(left, measure, siblings, in_aggregate)?;
                walk(right, measure, siblings, in_aggregate)
            }
            Expr::Unary { expr, .. } | Expr::IsNull { expr, .. } => {
                walk(expr, measure, siblings, in_aggregate)
            }
            Expr::Function { args, .. } => {
                for a in args {
                    walk(a, measure, siblings, in_aggregate)?;
                }
                Ok(())
            }
            Expr::Literal(_) => Ok(()),
            other => Err(AnalysisError::UnsupportedMeasureSource(format!(
                "{} is not allowed in a measure formula",
                crate::syntax::print_expr(other)
            ))),
        }
    }
    walk(formula, measure, siblings, false)
}

/// Orders measures so each formula only references earlier ones.
fn topo_order(measures: &[(Ident, Expr)]) -> Result<Vec<usize>, AnalysisError> {
    let names: Vec<&Ident> = measures.iter().map(|(n, _)| n).collect();
    let deps: Vec<Vec<usize>> = measures
        .iter()
        .map(|(_, formula)| {
            let mut ds = Vec::new();
            formula.walk(&mut |e| {
                if let Expr::Column { qualifier: None, name } = e {
                    if let Some(i) = names.iter().position(|n| *n == name) {
                        if !ds.contains(&i) {
                            ds.push(i);
                        }
                    }
                }
            });
            ds
        })
        .collect();

    let mut order = Vec::new();
    let mut state = vec![0u8; measures.len()];
    fn visit(
        i: usize,
        deps: &[Vec<usize>],
        state: &mut [u8],
        order: &mut Vec<usize>,
        names: &[&Ident],
    ) -> Result<(), AnalysisError> {
        match state[i] {
            2 => Ok(()),
            1 => Err(AnalysisError::MeasureCycle(names[i].clone())),
            _ => {
                state[i] = 1;
                for &d in &deps[i] {
                    visit(d, deps, state, order, names)?;
                }
                state[i] = 2;
                order.push(i);
                Ok(())
            }
        }
    }
    for i in 0..measures.len() {
        visit(i, &deps, &mut state, &mut order, &names)?;
    }
    Ok(order)
}

/// Types an expression over a fixed row of named columns (no scopes).
pub(crate) fn type_over_columns(
    expr: &Expr,
    columns: &[ColumnInfo],
    context: &str,
) -> Result<Ty, AnalysisError> {
    match expr {
        Expr::Column { name, .. } => columns
            .iter()
            .find(|c| &c.name == name)
            .map(|c| c.ty)
            .ok_or_else(|| AnalysisError::UnknownColumn {
                qualifier: None,
                column: name.clone(),
            }),
        Expr::Literal(lit) => Ok(literal_ty(lit)),
        Expr::Binary { op, left, right } => {
            let lt = type_over_columns(left, columns, context)?;
            let rt = type_over_columns(right, columns, context)?;
            type_binary(*op, lt, rt)
        }
        Expr::Unary { op, expr } => {
            let ty = type_over_columns(expr, columns, context)?;
            match op {
                UnaryOp::Not => {
                    require_boolean(ty, context)?;
                    Ok(Ty::Known(ScalarType::Boolean))
                }
                UnaryOp::Neg => {
                    require_numeric(ty, context)?;
                    Ok(ty)
                }
            }
        }
        Expr::IsNull { expr, .. } => {
            type_over_columns(expr, columns, context)?;
            Ok(Ty::Known(ScalarType::Boolean))
        }
        Expr::Function { name, args } => {
            let tys = args
                .iter()
                .map(|a| type_over_columns(a, columns, context))
                .collect::<Result<Vec<_>, _>>()?;
            scalar_function_ty(name, &tys)
        }
        Expr::Aggregate { func, arg } => {
            let arg_ty = match arg {
                Some(a) => Some(type_over_columns(a, columns, context)?),
                None => None,
            };
            aggregate_ty(*func, arg_ty)
        }
        other => Err(AnalysisError::TypeMismatch {
            context: context.into(),
            expected: "a scalar expression".into(),
            found: crate::syntax::print_expr(other),
        }),
    }
}

fn literal_ty(lit: &Literal) -> Ty {
    match lit {
        Literal::Null => Ty::Unknown,
        Literal::Integer(_) => Ty::Known(ScalarType::Integer),
        Literal::Double(_) => Ty::Known(ScalarType::Double),
        Literal::String(_) => Ty::Known(ScalarType::Varchar),
        Literal::Boolean(_) => Ty::Known(ScalarType::Boolean),
        Literal::Date(_) => Ty::Known(ScalarType::Date),
    }
}

fn type_binary(op: BinaryOp, lt: Ty, rt: Ty) -> Result<Ty, AnalysisError> {
    use BinaryOp::*;
    match op {
        Add | Sub | Mul => {
            require_numeric(lt, op.as_str())?;
            require_numeric(rt, op.as_str())?;
            Ok(match (lt, rt) {
                (Ty::Known(ScalarType::Integer), Ty::Known(ScalarType::Integer)) => {
                    Ty::Known(ScalarType::Integer)
                }
                (Ty::Unknown, _) | (_, Ty::Unknown) => Ty::Unknown,
                _ => Ty::Known(ScalarType::Double),
            })
        }
        Div => {
            require_numeric(lt, "/")?;
            require_numeric(rt, "/")?;
            Ok(Ty::Known(ScalarType::Double))
        }
        Eq | NotEq | Lt | LtEq | Gt | GtEq | IsDistinctFrom | IsNotDistinctFrom => {
            if !lt.comparable_with(rt) {
                return Err(AnalysisError::TypeMismatch {
                    context: format!("comparison {}", op.as_str()),
                    expected: lt.describe(),
                    found: rt.describe(),
                });
            }
            Ok(Ty::Known(ScalarType::Boolean))
        }
        And | Or => {
            require_boolean(lt, op.as_str())?;
            require_boolean(rt, op.as_str())?;
            Ok(Ty::Known(ScalarType::Boolean))
        }
    }
}

fn aggregate_ty(func: AggFunc, arg: Option<Ty>) -> Result<Ty, AnalysisError> {
    match func {
        AggFunc::Count => Ok(Ty::Known(ScalarType::Integer)),
        AggFunc::Sum => {
            let ty = arg.expect("SUM requires an argument");
            require_numeric(ty, "SUM")?;
            Ok(ty)
        }
        AggFunc::Avg => {
            let ty = arg.expect("AVG requires an argument");
            require_numeric(ty, "AVG")?;
            Ok(Ty::Known(ScalarType::Double))
        }
    }
}

fn scalar_function_ty(name: &Ident, args: &[Ty]) -> Result<Ty, AnalysisError> {
    if name.matches("YEAR") {
        if args.len() == 1
            && matches!(args[0], Ty::Unknown | Ty::Known(ScalarType::Date))
        {
            return Ok(Ty::Known(ScalarType::Integer));
        }
        return Err(AnalysisError::TypeMismatch {
            context: "YEAR".into(),
            expected: "DATE".into(),
            found: args.first().map(|t| t.describe()).unwrap_or_default(),
        });
    }
    if name.matches("FLOOR") || name.matches("CEIL") || name.matches("ABS") {
        if args.len() == 1 {
            require_numeric(args[0], name.as_str())?;
            return Ok(args[0]);
        }
        return Err(AnalysisError::TypeMismatch {
            context: name.as_str().to_string(),
            expected: "one numeric argument".into(),
            found: format!("{}", args.len()),
        });
    }
    Err(AnalysisError::UnknownFunction(name.clone()))
}

fn require_boolean(ty: Ty, context: &str) -> Result<(), AnalysisError> {
    if ty.is_boolean() {
        Ok(())
    } else {
        Err(AnalysisError::TypeMismatch {
            context: context.into(),
            expected: "BOOLEAN".into(),
            found: ty.describe(),
        })
    }
}

fn require_numeric(ty: Ty, context: &str) -> Result<(), AnalysisError> {
    if ty.is_numeric() {
        Ok(())
    } else {
        Err(AnalysisError::TypeMismatch {
            context: context.into(),
            expected: "a numeric type".into(),
            found: ty.describe(),
        })
    }
}

fn wildcard_columns(
    source: &SourceBinding,
    skip_duplicate_using: &[Ident],
    out: &mut Vec<ColumnInfo>,
) {
    for col in source.dimensions() {
        let duplicate = skip_duplicate_using.contains(&col.name)
            && out.iter().any(|c| c.name == col.name);
        if !duplicate {
            out.push(col.clone());
        }
    }
}

fn select_uses_ctes(select: &Select, ctes: &[CteBinding]) -> bool {
    fn table_uses(table: &TableExpr, ctes: &[CteBinding]) -> bool {
        match table {
            TableExpr::Table { name, .. } => ctes.iter().any(|c| &c.name == name),
            TableExpr::Subquery { query, .. } => select_uses_ctes(query, ctes),
            TableExpr::Join { left, right, .. } => {
                table_uses(left, ctes) || table_uses(right, ctes)
            }
        }
    }
    select
        .from
        .as_ref()
        .map(|f| table_uses(f, ctes))
        .unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_query;

    fn fixture_catalog() -> Catalog {
        let mut catalog = Catalog::new();
        catalog
            .register_script(
                "CREATE TABLE Customers (custName VARCHAR, custAge INTEGER);
                 CREATE TABLE Orders (prodName VARCHAR, custName VARCHAR,
                                      orderDate DATE, revenue INTEGER, cost INTEGER);
                 CREATE VIEW EnhancedOrders AS
                 SELECT orderDate, prodName,
                        (SUM(revenue) - SUM(cost)) / SUM(revenue) AS MEASURE profitMargin
                 FROM Orders;
                 CREATE VIEW OrdersWithRevenue AS
                 SELECT *, SUM(revenue) AS MEASURE sumRevenue FROM Orders;",
            )
            .expect("fixture DDL registers");
        catalog
    }

    fn analyze_sql(sql: &str) -> Result<ResolvedQuery, AnalysisError> {
        let catalog = fixture_catalog();
        analyze(&parse_query(sql).expect("parses"), &catalog)
    }

    #[test]
    fn grouped_aggregate_of_measure_is_classified() {
        let resolved = analyze_sql(
            "SELECT prodName, AGGREGATE(profitMargin), COUNT(*)
             FROM EnhancedOrders GROUP BY prodName",
        )
        .expect("analyzes");
        assert_eq!(resolved.sites, vec![MeasureSite::AtBase]);
    }

    #[test]
    fn bare_measure_in_grouped_select_is_classified() {
        let resolved = analyze_sql(
            "SELECT prodName, sumRevenue FROM OrdersWithRevenue GROUP BY prodName",
        )
        .expect("analyzes");
        assert_eq!(resolved.sites, vec![MeasureSite::BareGrouped]);
    }

    #[test]
    fn bare_measure_in_ungrouped_select_is_classified() {
        let resolved =
            analyze_sql("SELECT prodName, sumRevenue FROM OrdersWithRevenue").expect("analyzes");
        assert_eq!(resolved.sites, vec![MeasureSite::BareUngrouped]);
    }

    #[test]
    fn derived_table_measure_with_all_modifier_analyzes() {
        analyze_sql(
            "SELECT prodName, sumRevenue,
                    sumRevenue / sumRevenue AT (ALL prodName) AS proportionOfTotalRevenue
             FROM (SELECT *, SUM(revenue) AS MEASURE sumRevenue FROM Orders) AS o
             GROUP BY prodName",
        )
        .expect("analyzes");
    }

    #[test]
    fn anonymous_derived_table_with_set_current_analyzes() {
        analyze_sql(
            "SELECT prodName, orderYear, profitMargin,
                    profitMargin AT (SET orderYear = CURRENT orderYear - 1) AS lastYear
             FROM (SELECT *,
                          (SUM(revenue) - SUM(cost)) / SUM(revenue) AS MEASURE profitMargin,
                          YEAR(orderDate) AS orderYear
                   FROM Orders)
             WHERE orderYear = 2024
             GROUP BY prodName, orderYear",
        )
        .expect("analyzes");
    }

    #[test]
    fn rollup_with_visible_analyzes() {
        analyze_sql(
            "SELECT o.prodName, COUNT(*) AS c, AGGREGATE(o.sumRevenue) AS rAgg,
                    o.sumRevenue AT (VISIBLE) AS rViz, o.sumRevenue AS r
             FROM (SELECT *, SUM(revenue) AS MEASURE sumRevenue FROM Orders) AS o
             WHERE o.custName <> 'Bob'
             GROUP BY ROLLUP(o.prodName)",
        )
        .expect("analyzes");
    }

    #[test]
    fn measure_cte_joined_with_using_analyzes() {
        analyze_sql(
            "WITH EnhancedCustomers AS
               (SELECT *, AVG(custAge) AS MEASURE avgAge FROM Customers)
             SELECT o.prodName, COUNT(*) AS orderCount, AVG(c.custAge) AS weightedAvgAge,
                    c.avgAge AS avgAge, c.avgAge AT (VISIBLE) AS visibleAvgAge
             FROM Orders AS o JOIN EnhancedCustomers AS c USING (custName)
             WHERE c.custAge >= 18
             GROUP BY o.prodName",
        )
        .expect("analyzes");
    }

    #[test]
    fn select_alias_names_an_ad_hoc_dimension() {
        analyze_sql(
            "SELECT prodName, YEAR(orderDate) AS orderYear,
                    sumRevenue / sumRevenue AT (SET orderYear = CURRENT orderYear - 1) AS ratio
             FROM OrdersWithRevenue
             GROUP BY prodName, YEAR(orderDate)",
        )
        .expect("analyzes");
    }

    #[test]
    fn measure_in_where_requires_explicit_context() {
        let err = analyze_sql(
            "SELECT prodName FROM OrdersWithRevenue WHERE sumRevenue > 10",
        )
        .unwrap_err();
        assert!(matches!(err, AnalysisError::MeasureMisuse(_)), "{err}");
    }

    #[test]
    fn measure_at_where_inside_where_analyzes() {
        let resolved = analyze_sql(
            "SELECT prodName, orderDate, revenue
             FROM (SELECT prodName, orderDate, revenue,
                          AVG(revenue) AS MEASURE avgRevenue
                   FROM Orders) AS o
             WHERE o.revenue > o.avgRevenue AT (WHERE prodName = o.prodName)",
        )
        .expect("analyzes");
        assert_eq!(resolved.sites, vec![MeasureSite::InWhere]);
    }

    #[test]
    fn visible_is_rejected_inside_where() {
        let err = analyze_sql(
            "SELECT prodName FROM OrdersWithRevenue WHERE sumRevenue AT (VISIBLE) > 10",
        )
        .unwrap_err();
        assert!(matches!(err, AnalysisError::MeasureMisuse(_)), "{err}");
    }

    #[test]
    fn at_in_where_must_discard_the_implicit_context() {
        let err = analyze_sql(
            "SELECT prodName FROM OrdersWithRevenue
             WHERE sumRevenue AT (ALL prodName) > 10",
        )
        .unwrap_err();
        assert!(matches!(err, AnalysisError::MeasureMisuse(_)), "{err}");
        analyze_sql(
            "SELECT prodName FROM OrdersWithRevenue WHERE sumRevenue AT (ALL) > 10",
        )
        .expect("bare ALL discards the context");
    }

    #[test]
    fn aggregate_of_non_measure_is_rejected() {
        let err =
            analyze_sql("SELECT prodName, AGGREGATE(revenue) FROM OrdersWithRevenue GROUP BY prodName")
                .unwrap_err();
        assert!(matches!(err, AnalysisError::MeasureMisuse(_)), "{err}");
    }

    #[test]
    fn aggregate_function_over_measure_is_rejected() {
        let err = analyze_sql(
            "SELECT prodName, SUM(sumRevenue) FROM OrdersWithRevenue GROUP BY prodName",
        )
        .unwrap_err();
        assert!(matches!(err, AnalysisError::MeasureMisuse(_)), "{err}");
    }

    #[test]
    fn grouping_by_a_measure_is_rejected() {
        let err = analyze_sql("SELECT COUNT(*) FROM OrdersWithRevenue GROUP BY sumRevenue")
            .unwrap_err();
        assert!(matches!(err, AnalysisError::MeasureMisuse(_)), "{err}");
    }

    #[test]
    fn current_outside_set_value_is_rejected() {
        let err = analyze_sql(
            "SELECT prodName, CURRENT orderDate FROM OrdersWithRevenue GROUP BY prodName",
        )
        .unwrap_err();
        assert!(matches!(err, AnalysisError::InvalidCurrent(_)), "{err}");
    }

    #[test]
    fn non_dimension_modifier_is_rejected() {
        let err = analyze_sql(
            "SELECT prodName, profitMargin AT (ALL custAge) AS x
             FROM EnhancedOrders GROUP BY prodName",
        )
        .unwrap_err();
        assert!(
            matches!(err, AnalysisError::NonDimensionModifier { .. }),
            "{err}"
        );
    }

    #[test]
    fn non_aggregatable_formula_is_rejected() {
        let mut catalog = fixture_catalog();
        let err = catalog
            .register_script(
                "CREATE VIEW Bad AS SELECT prodName, revenue + 1 AS MEASURE m FROM Orders",
            )
            .unwrap_err();
        assert!(
            matches!(
                err,
                crate::catalog::CatalogError::Analysis(
                    AnalysisError::NonAggregatableMeasure { .. }
                )
            ),
            "{err}"
        );
    }

    #[test]
    fn input_measures_are_invisible_to_new_formulas() {
        let mut catalog = fixture_catalog();
        let err = catalog
            .register_script(
                "CREATE VIEW Bad AS
                 SELECT prodName, sumRevenue / 2 AS MEASURE half FROM OrdersWithRevenue",
            )
            .unwrap_err();
        assert!(
            matches!(
                err,
                crate::catalog::CatalogError::Analysis(AnalysisError::MeasureMisuse(_))
            ),
            "{err}"
        );
    }

    #[test]
    fn top_level_measure_definition_is_rejected() {
        let err = analyze_sql("SELECT SUM(revenue) AS MEASURE m FROM Orders").unwrap_err();
        assert!(matches!(err, AnalysisError::MeasureMisuse(_)), "{err}");
    }

    #[test]
    fn unknown_column_is_reported() {
        let err = analyze_sql("SELECT wat FROM Orders").unwrap_err();
        assert!(matches!(err, AnalysisError::UnknownColumn { .. }), "{err}");
    }

    #[test]
    fn comparison_of_incompatible_types_is_rejected() {
        let err = analyze_sql("SELECT prodName FROM Orders WHERE prodName = 3").unwrap_err();
        assert!(matches!(err, AnalysisError::TypeMismatch { .. }), "{err}");
    }

    #[test]
    fn bare_column_outside_group_keys_is_rejected() {
        let err = analyze_sql(
            "SELECT custName, SUM(revenue) FROM Orders GROUP BY prodName",
        )
        .unwrap_err();
        assert!(matches!(err, AnalysisError::NotGrouped(_)), "{err}");
    }

    #[test]
    fn expression_matching_a_group_key_is_allowed() {
        analyze_sql(
            "SELECT YEAR(orderDate), SUM(revenue) FROM Orders GROUP BY YEAR(orderDate)",
        )
        .expect("analyzes");
    }

    #[test]
    fn ambiguous_unqualified_column_is_rejected() {
        let err = analyze_sql(
            "SELECT custName, custAge FROM Orders AS o JOIN Customers AS c ON o.custName = c.custName",
        )
        .unwrap_err();
        assert!(matches!(err, AnalysisError::AmbiguousColumn(_)), "{err}");
    }

    #[test]
    fn using_column_is_not_ambiguous() {
        analyze_sql(
            "SELECT custName, custAge FROM Orders JOIN Customers USING (custName)",
        )
        .expect("analyzes");
    }

    #[test]
    fn nested_at_folds_like_a_sequence() {
        analyze_sql(
            "SELECT prodName,
                    sumRevenue AT (ALL prodName SET prodName = 'Happy') AS a,
                    (sumRevenue AT (SET prodName = 'Happy')) AT (ALL prodName) AS b
             FROM OrdersWithRevenue GROUP BY prodName",
        )
        .expect("analyzes");
    }
}
