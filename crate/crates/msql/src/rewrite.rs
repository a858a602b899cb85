//! Static expansion of measure references into plain correlated SQL.
//!
//! Expansion walks an analyzed query and replaces every measure reference
//! with a scalar subquery over the measure's basis: the implicit evaluation
//! context (group keys, or the current row's dimensions) is built first,
//! context modifiers fold over it left to right, and the resulting context
//! renders as the subquery's WHERE clause. Relations that define measures
//! are flattened to their underlying source in the FROM clause, so the
//! output is self-contained standard SQL: no AT, AGGREGATE(m), CURRENT or
//! AS MEASURE remains, and a query without measure references comes back
//! unchanged.

use crate::analyzer::{AnalysisError, Analyzer, CteBinding, RelKind, ResolvedQuery, SourceBinding};
use crate::catalog::{BasisSource, Catalog, MeasureBasis};
use crate::context::{
    implicit_context, qualify_free, ContextTerm, DimBinding, TermOrigin,
    Modifier,
};
use crate::syntax::{
    BinaryOp, ContextModifier, Cte, Expr, GroupBy, Ident, JoinCondition, JoinKind, Literal,
    Query, Select, SelectItem, TableExpr,
};

/// A fully expanded query: plain SQL, runnable without measure support.
#[derive(Debug, Clone, PartialEq)]
pub struct RewriteOutput {
    pub query: Query,
}

/// Expands an analyzed query into plain SQL.
pub fn expand(resolved: &ResolvedQuery, catalog: &Catalog) -> Result<RewriteOutput, AnalysisError> {
    let query = expand_aggregate_sugar(&resolved.query);
    let mut rewriter = Rewriter {
        analyzer: Analyzer::new(catalog),
        reserved: Vec::new(),
    };
    let query = rewriter.rewrite_query(&query)?;
    Ok(RewriteOutput { query })
}

/// Rewrites every `AGGREGATE(m)` to its general form `m AT (VISIBLE)`.
pub fn expand_aggregate_sugar(query: &Query) -> Query {
    Query {
        ctes: query
            .ctes
            .iter()
            .map(|c| Cte {
                name: c.name.clone(),
                query: sugar_select(&c.query),
            })
            .collect(),
        select: sugar_select(&query.select),
    }
}

/// Picks an alias not in `used`: the hint itself if free, else the hint
/// with the first free counter appended (`i`, `i0`, `i1`, ...).
pub fn fresh_alias(hint: &str, used: &[Ident]) -> Ident {
    let candidate = Ident::new(hint);
    if !used.contains(&candidate) {
        return candidate;
    }
    let mut n = 0usize;
    loop {
        let candidate = Ident::new(format!("{hint}{n}"));
        if !used.contains(&candidate) {
            return candidate;
        }
        n += 1;
    }
}

/// True if the query still uses any dialect extension: measure-defining
/// select items, AT, AGGREGATE(m) or CURRENT.
pub fn uses_extensions(query: &Query) -> bool {
    fn in_expr(e: &Expr) -> bool {
        match e {
            Expr::At { .. } | Expr::AggregateMeasure { .. } | Expr::Current { .. } => true,
            Expr::Column { .. } | Expr::Literal(_) => false,
            Expr::Binary { left, right, .. } => in_expr(left) || in_expr(right),
            Expr::Unary { expr, .. } | Expr::IsNull { expr, .. } => in_expr(expr),
            Expr::Function { args, .. } => args.iter().any(in_expr),
            Expr::Aggregate { arg, .. } => arg.as_deref().is_some_and(in_expr),
            Expr::WindowAggregate {
                arg, partition_by, ..
            } => arg.as_deref().is_some_and(in_expr) || partition_by.iter().any(in_expr),
            Expr::Subquery(s) | Expr::Exists(s) => in_select(s),
        }
    }
    fn in_table(t: &TableExpr) -> bool {
        match t {
            TableExpr::Table { .. } => false,
            TableExpr::Subquery { query, .. } => in_select(query),
            TableExpr::Join {
                left,
                right,
                condition,
                ..
            } => {
                in_table(left)
                    || in_table(right)
                    || matches!(condition, JoinCondition::On(p) if in_expr(p))
            }
        }
    }
    fn in_select(s: &Select) -> bool {
        s.items.iter().any(|i| match i {
            SelectItem::Expr {
                expr, is_measure, ..
            } => *is_measure || in_expr(expr),
            _ => false,
        }) || s.from.as_ref().is_some_and(in_table)
            || s.where_clause.as_ref().is_some_and(in_expr)
            || s.group_by
                .as_ref()
                .is_some_and(|g| g.keys.iter().any(in_expr))
    }
    query.ctes.iter().any(|c| in_select(&c.query)) || in_select(&query.select)
}

fn sugar_select(select: &Select) -> Select {
    Select {
        items: select
            .items
            .iter()
            .map(|i| match i {
                SelectItem::Expr {
                    expr,
                    alias,
                    is_measure,
                } => SelectItem::Expr {
                    expr: sugar_expr(expr),
                    alias: alias.clone(),
                    is_measure: *is_measure,
                },
                other => other.clone(),
            })
            .collect(),
        from: select.from.as_ref().map(sugar_table),
        where_clause: select.where_clause.as_ref().map(sugar_expr),
        group_by: select.group_by.as_ref().map(|g| GroupBy {
            rollup: g.rollup,
            keys: g.keys.iter().map(sugar_expr).collect(),
        }),
    }
}

fn sugar_table(table: &TableExpr) -> TableExpr {
    match table {
        TableExpr::Table { .. } => table.clone(),
        TableExpr::Subquery { query, alias } => TableExpr::Subquery {
            query: Box::new(sugar_select(query)),
            alias: alias.clone(),
        },
        TableExpr::Join {
            left,
            right,
            kind,
            condition,
        } => TableExpr::Join {
            left: Box::new(sugar_table(left)),
            right: Box::new(sugar_table(right)),
            kind: *kind,
            condition: match condition {
                JoinCondition::On(p) => JoinCondition::On(sugar_expr(p)),
                using => using.clone(),
            },
        },
    }
}

fn sugar_expr(expr: &Expr) -> Expr {
    match expr {
        Expr::AggregateMeasure { arg } => Expr::At {
            base: Box::new(sugar_expr(arg)),
            modifiers: vec![ContextModifier::Visible],
        },
        Expr::At { base, modifiers } => Expr::At {
            base: Box::new(sugar_expr(base)),
            modifiers: modifiers
                .iter()
                .map(|m| match m {
                    ContextModifier::Set { dim, value } => ContextModifier::Set {
                        dim: dim.clone(),
                        value: sugar_expr(value),
                    },
                    ContextModifier::Where(p) => ContextModifier::Where(sugar_expr(p)),
                    other => other.clone(),
                })
                .collect(),
        },
        Expr::Column { .. } | Expr::Literal(_) => expr.clone(),
        Expr::Binary { op, left, right } => {
            Expr::binary(*op, sugar_expr(left), sugar_expr(right))
        }
        Expr::Unary { op, expr } => Expr::Unary {
            op: *op,
            expr: Box::new(sugar_expr(expr)),
        },
        Expr::IsNull { expr, negated } => Expr::IsNull {
            expr: Box::new(sugar_expr(expr)),
            negated: *negated,
        },
        Expr::Function { name, args } => Expr::Function {
            name: name.clone(),
            args: args.iter().map(sugar_expr).collect(),
        },
        Expr::Aggregate { func, arg } => Expr::Aggregate {
            func: *func,
            arg: arg.as_ref().map(|a| Box::new(sugar_expr(a))),
        },
        Expr::WindowAggregate {
            func,
            arg,
            partition_by,
        } => Expr::WindowAggregate {
            func: *func,
            arg: arg.as_ref().map(|a| Box::new(sugar_expr(a))),
            partition_by: partition_by.iter().map(sugar_expr).collect(),
        },
        Expr::Current { dim } => Expr::Current {
            dim: Box::new(sugar_expr(dim)),
        },
        Expr::Subquery(s) => Expr::Subquery(Box::new(sugar_select(s))),
        Expr::Exists(s) => Expr::Exists(Box::new(sugar_select(s))),
    }
}

/// Identifies one FROM source on the frame stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RefKey {
    frame: usize,
    source: usize,
}

/// How column references render at the current rewrite site.
#[derive(Debug, Clone)]
enum Style {
    /// Measured-source columns become basis expressions under the
    /// flattened alias; everything else is left as written.
    Standard,
    /// References to `key` render as unqualified basis expressions; the
    /// surrounding text is qualified wholesale with the generated
    /// subquery alias once the context becomes a row predicate.
    MeasureRow { key: RefKey },
    /// Inside a generated EXISTS body: `key` renders unqualified and each
    /// listed partner source renders under its fresh body alias.
    ExistsBody {
        key: RefKey,
        partners: Vec<(RefKey, Ident)>,
    },
}

impl Style {
    fn measure_key(&self) -> Option<RefKey> {
        match self {
            Style::Standard => None,
            Style::MeasureRow { key } | Style::ExistsBody { key, .. } => Some(*key),
        }
    }

    fn partner_alias(&self, key: RefKey) -> Option<&Ident> {
        match self {
            Style::ExistsBody { partners, .. } => {
                partners.iter().find(|(k, _)| *k == key).map(|(_, a)| a)
            }
            _ => None,
        }
    }
}

/// Where the expression being rewritten sits; only item sites carry an
/// implicit evaluation context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ExprSite {
    Item,
    Where,
    Other,
}

struct FrameSource {
    binding: SourceBinding,
    /// Alias the source carries in the rewritten FROM clause.
    out_alias: Option<Ident>,
}

struct FrameGroup {
    keys: Vec<Expr>,
    rewritten: Vec<Expr>,
    rollup: bool,
}

/// Rewrite-time picture of one SELECT; the innermost is last on the stack.
struct Frame {
    sources: Vec<FrameSource>,
    from: Option<TableExpr>,
    where_clause: Option<Expr>,
    group: Option<FrameGroup>,
    items: Vec<SelectItem>,
    using_columns: Vec<Ident>,
    ctes: Vec<CteBinding>,
}

struct Rewriter<'a> {
    analyzer: Analyzer<'a>,
    /// Generated subquery aliases currently in flight, so nested
    /// expansions pick distinct names.
    reserved: Vec<Ident>,
}

/// Resolves a column reference against the frame stack, innermost first.
/// Several unqualified hits in one frame can only be a USING column; the
/// leftmost source wins, as during analysis.
fn resolve_ref(
    frames: &[Frame],
    qualifier: Option<&Ident>,
    name: &Ident,
) -> Option<(RefKey, usize)> {
    for (fi, frame) in frames.iter().enumerate().rev() {
        match qualifier {
            Some(q) => {
                for (si, s) in frame.sources.iter().enumerate() {
                    if s.binding.alias.as_ref() == Some(q) {
                        let ci = s.binding.column_index(name)?;
                        return Some((RefKey { frame: fi, source: si }, ci));
                    }
                }
            }
            None => {
                let mut hits = frame.sources.iter().enumerate().filter_map(|(si, s)| {
                    s.binding
                        .column_index(name)
                        .map(|ci| (RefKey { frame: fi, source: si }, ci))
                });
                if let Some(first) = hits.next() {
                    return Some(first);
                }
            }
        }
    }
    None
}

/// Splits a predicate into its top-level AND conjuncts, in order.
fn conjuncts(expr: &Expr) -> Vec<Expr> {
    match expr {
        Expr::Binary {
            op: BinaryOp::And,
            left,
            right,
        } => {
            let mut out = conjuncts(left);
            out.extend(conjuncts(right));
            out
        }
        other => vec![other.clone()],
    }
}

/// A measure formula with sibling measure names replaced by their own
/// formulas, recursively; analysis guarantees the references are acyclic.
fn splice_siblings(basis: &MeasureBasis, name: &Ident) -> Expr {
    fn go(expr: &Expr, basis: &MeasureBasis) -> Expr {
        match expr {
            Expr::Column {
                qualifier: None,
                name,
            } => match basis.measure_formula(name) {
                Some(f) => go(f, basis),
                None => expr.clone(),
            },
            Expr::Column { .. } | Expr::Literal(_) => expr.clone(),
            Expr::Binary { op, left, right } => {
                Expr::binary(*op, go(left, basis), go(right, basis))
            }
            Expr::Unary { op, expr } => Expr::Unary {
                op: *op,
                expr: Box::new(go(expr, basis)),
            },
            Expr::IsNull { expr, negated } => Expr::IsNull {
                expr: Box::new(go(expr, basis)),
                negated: *negated,
            },
            Expr::Function { name, args } => Expr::Function {
                name: name.clone(),
                args: args.iter().map(|a| go(a, basis)).collect(),
            },
            Expr::Aggregate { func, arg } => Expr::Aggregate {
                func: *func,
                arg: arg.as_ref().map(|a| Box::new(go(a, basis))),
            },
            other => other.clone(),
        }
    }
    let formula = basis
        .measure_formula(name)
        .expect("referenced measure exists in its basis");
    go(formula, basis)
}

impl<'a> Rewriter<'a> {
    fn rewrite_query(&mut self, query: &Query) -> Result<Query, AnalysisError> {
        let mut env: Vec<CteBinding> = Vec::new();
        let mut ctes = Vec::new();
        for cte in &query.ctes {
            let binding = self
                .analyzer
                .analyze_cte_body(&cte.name, &cte.query, &env)?;
            // Measured WITH entries vanish: every use is flattened to the
            // basis, so the output never names them.
            if !matches!(binding.kind, RelKind::Measured(_)) {
                let body = self.rewrite_select(&cte.query, &env, &mut Vec::new())?;
                ctes.push(Cte {
                    name: cte.name.clone(),
                    query: body,
                });
            }
            env.push(binding);
        }
        let select = self.rewrite_select(&query.select, &env, &mut Vec::new())?;
        Ok(Query { ctes, select })
    }

    fn rewrite_select(
        &mut self,
        select: &Select,
        ctes: &[CteBinding],
        frames: &mut Vec<Frame>,
    ) -> Result<Select, AnalysisError> {
        let mut sources = Vec::new();
        let mut using_columns = Vec::new();
        let mut baked = Vec::new();
        let from = match &select.from {
            Some(f) => Some(self.rewrite_from(
                f,
                ctes,
                frames,
                &mut sources,
                &mut using_columns,
                &mut baked,
            )?),
            None => None,
        };
        frames.push(Frame {
            sources,
            from: select.from.clone(),
            where_clause: select.where_clause.clone(),
            group: None,
            items: select.items.clone(),
            using_columns,
            ctes: ctes.to_vec(),
        });
        let result = self.rewrite_select_body(select, from, baked, frames);
        frames.pop();
        result
    }

    fn rewrite_select_body(
        &mut self,
        select: &Select,
        from: Option<TableExpr>,
        baked: Vec<Expr>,
        frames: &mut Vec<Frame>,
    ) -> Result<Select, AnalysisError> {
        let from = match from {
            Some(f) => Some(self.rewrite_join_conditions(f, frames)?),
            None => None,
        };
        let mut where_clause = match &select.where_clause {
            Some(w) => Some(self.rewrite_expr(w, frames, ExprSite::Where, &Style::Standard)?),
            None => None,
        };
        // Filters baked into flattened sources keep constraining the outer
        // rows exactly as the defining queries did.
        for pred in baked {
            where_clause = Expr::and_opt(where_clause, Some(pred));
        }
        let group_by = match &select.group_by {
            Some(g) => {
                let mut keys = Vec::new();
                for k in &g.keys {
                    keys.push(self.rewrite_expr(k, frames, ExprSite::Other, &Style::Standard)?);
                }
                Some(GroupBy {
                    rollup: g.rollup,
                    keys,
                })
            }
            None => None,
        };
        if let (Some(orig), Some(new)) = (&select.group_by, &group_by) {
            let last = frames.len() - 1;
            frames[last].group = Some(FrameGroup {
                keys: orig.keys.clone(),
                rewritten: new.keys.clone(),
                rollup: orig.rollup,
            });
        }
        let items = self.rewrite_items(select, frames)?;
        Ok(Select {
            items,
            from,
            where_clause,
            group_by,
        })
    }

    fn rewrite_from(
        &mut self,
        table: &TableExpr,
        ctes: &[CteBinding],
        frames: &[Frame],
        sources: &mut Vec<FrameSource>,
        using_columns: &mut Vec<Ident>,
        baked: &mut Vec<Expr>,
    ) -> Result<TableExpr, AnalysisError> {
        match table {
            TableExpr::Table { name, alias } => {
                let binding = self.analyzer.named_binding(name, alias.clone(), ctes)?;
                if let RelKind::Measured(basis) = &binding.kind {
                    let basis = basis.clone();
                    self.flattened_source(basis, alias.clone(), binding, frames, sources, baked)
                } else {
                    let out_alias = binding.alias.clone();
                    sources.push(FrameSource { binding, out_alias });
                    Ok(table.clone())
                }
            }
            TableExpr::Subquery { query, alias } => {
                let binding = self.analyzer.derived_binding(query, alias.clone(), ctes)?;
                if let RelKind::Measured(basis) = &binding.kind {
                    let basis = basis.clone();
                    self.flattened_source(basis, alias.clone(), binding, frames, sources, baked)
                } else {
                    let body = self.rewrite_select(query, ctes, &mut Vec::new())?;
                    let out_alias = binding.alias.clone();
                    sources.push(FrameSource { binding, out_alias });
                    Ok(TableExpr::Subquery {
                        query: Box::new(body),
                        alias: alias.clone(),
                    })
                }
            }
            TableExpr::Join {
                left,
                right,
                kind,
                condition,
            } => {
                let left =
                    self.rewrite_from(left, ctes, frames, sources, using_columns, baked)?;
                let right =
                    self.rewrite_from(right, ctes, frames, sources, using_columns, baked)?;
                if let JoinCondition::Using(cols) = condition {
                    using_columns.extend(cols.iter().cloned());
                }
                Ok(TableExpr::Join {
                    left: Box::new(left),
                    right: Box::new(right),
                    kind: *kind,
                    condition: condition.clone(),
                })
            }
        }
    }

    /// Replaces a measure-defining source with its basis relation; sources
    /// written without an alias get a fresh one (`o` by preference).
    fn flattened_source(
        &mut self,
        basis: MeasureBasis,
        alias: Option<Ident>,
        binding: SourceBinding,
        frames: &[Frame],
        sources: &mut Vec<FrameSource>,
        baked: &mut Vec<Expr>,
    ) -> Result<TableExpr, AnalysisError> {
        let out = match alias {
            Some(a) => a,
            None => fresh_alias("o", &self.used_aliases(frames, sources)),
        };
        let rel = self.basis_relation(&basis, &out)?;
        if let Some(b) = &basis.baked_where {
            baked.push(qualify_free(b, &out));
        }
        sources.push(FrameSource {
            binding,
            out_alias: Some(out),
        });
        Ok(rel)
    }

    fn basis_relation(
        &mut self,
        basis: &MeasureBasis,
        alias: &Ident,
    ) -> Result<TableExpr, AnalysisError> {
        Ok(match &basis.source {
            BasisSource::Table(name) => TableExpr::Table {
                name: name.clone(),
                alias: Some(alias.clone()),
            },
            BasisSource::Derived(select) => TableExpr::Subquery {
                query: Box::new(self.rewrite_select(select, &[], &mut Vec::new())?),
                alias: Some(alias.clone()),
            },
        })
    }

    fn rewrite_join_conditions(
        &mut self,
        table: TableExpr,
        frames: &mut Vec<Frame>,
    ) -> Result<TableExpr, AnalysisError> {
        Ok(match table {
            TableExpr::Join {
                left,
                right,
                kind,
                condition,
            } => {
                let left = self.rewrite_join_conditions(*left, frames)?;
                let right = self.rewrite_join_conditions(*right, frames)?;
                let condition = match condition {
                    JoinCondition::On(pred) => JoinCondition::On(self.rewrite_expr(
                        &pred,
                        frames,
                        ExprSite::Other,
                        &Style::Standard,
                    )?),
                    using => using,
                };
                TableExpr::Join {
                    left: Box::new(left),
                    right: Box::new(right),
                    kind,
                    condition,
                }
            }
            other => other,
        })
    }

    fn rewrite_items(
        &mut self,
        select: &Select,
        frames: &mut Vec<Frame>,
    ) -> Result<Vec<SelectItem>, AnalysisError> {
        let last = frames.len() - 1;
        let any_measured = frames[last]
            .sources
            .iter()
            .any(|s| matches!(s.binding.kind, RelKind::Measured(_)));
        let mut items = Vec::new();
        for item in &select.items {
            match item {
                SelectItem::Wildcard if any_measured => {
                    items.extend(expand_wildcard(&frames[last], None));
                }
                SelectItem::QualifiedWildcard(q) => {
                    let over_measured = frames[last].sources.iter().any(|s| {
                        s.binding.alias.as_ref() == Some(q)
                            && matches!(s.binding.kind, RelKind::Measured(_))
                    });
                    if over_measured {
                        items.extend(expand_wildcard(&frames[last], Some(q)));
                    } else {
                        items.push(item.clone());
                    }
                }
                SelectItem::Wildcard => items.push(item.clone()),
                SelectItem::Expr { expr, alias, .. } => {
                    let out = self.rewrite_expr(expr, frames, ExprSite::Item, &Style::Standard)?;
                    // Expanded expressions keep the column name they implied
                    // before rewriting.
                    let alias = alias
                        .clone()
                        .or_else(|| if out != *expr { item.implied_name() } else { None });
                    items.push(SelectItem::Expr {
                        expr: out,
                        alias,
                        is_measure: false,
                    });
                }
            }
        }
        Ok(items)
    }

    fn rewrite_expr(
        &mut self,
        expr: &Expr,
        frames: &mut Vec<Frame>,
        site: ExprSite,
        style: &Style,
    ) -> Result<Expr, AnalysisError> {
        Ok(match expr {
            Expr::Column { qualifier, name } => {
                self.rewrite_column(qualifier.as_ref(), name, frames, site, style)?
            }
            Expr::At { .. } => self.expand_at(expr, frames, site, style)?,
            Expr::AggregateMeasure { .. } => {
                unreachable!("AGGREGATE sugar is expanded before rewriting")
            }
            Expr::Current { .. } => {
                unreachable!("CURRENT survives analysis only inside SET values")
            }
            Expr::Literal(_) => expr.clone(),
            Expr::Binary { op, left, right } => Expr::binary(
                *op,
                self.rewrite_expr(left, frames, site, style)?,
                self.rewrite_expr(right, frames, site, style)?,
            ),
            Expr::Unary { op, expr } => Expr::Unary {
                op: *op,
                expr: Box::new(self.rewrite_expr(expr, frames, site, style)?),
            },
            Expr::IsNull { expr, negated } => Expr::IsNull {
                expr: Box::new(self.rewrite_expr(expr, frames, site, style)?),
                negated: *negated,
            },
            Expr::Function { name, args } => {
                let mut rewritten = Vec::new();
                for a in args {
                    rewritten.push(self.rewrite_expr(a, frames, site, style)?);
                }
                Expr::Function {
                    name: name.clone(),
                    args: rewritten,
                }
            }
            Expr::Aggregate { func, arg } => Expr::Aggregate {
                func: *func,
                arg: match arg {
                    Some(a) => Some(Box::new(self.rewrite_expr(a, frames, site, style)?)),
                    None => None,
                },
            },
            Expr::WindowAggregate {
                func,
                arg,
                partition_by,
            } => {
                let arg = match arg {
                    Some(a) => Some(Box::new(self.rewrite_expr(a, frames, site, style)?)),
                    None => None,
                };
                let mut keys = Vec::new();
                for k in partition_by {
                    keys.push(self.rewrite_expr(k, frames, site, style)?);
                }
                Expr::WindowAggregate {
                    func: *func,
                    arg,
                    partition_by: keys,
                }
            }
            Expr::Subquery(s) => {
                let ctes = frames.last().map(|f| f.ctes.clone()).unwrap_or_default();
                Expr::Subquery(Box::new(self.rewrite_select(s, &ctes, frames)?))
            }
            Expr::Exists(s) => {
                let ctes = frames.last().map(|f| f.ctes.clone()).unwrap_or_default();
                Expr::Exists(Box::new(self.rewrite_select(s, &ctes, frames)?))
            }
        })
    }

    fn rewrite_column(
        &mut self,
        qualifier: Option<&Ident>,
        name: &Ident,
        frames: &mut Vec<Frame>,
        site: ExprSite,
        style: &Style,
    ) -> Result<Expr, AnalysisError> {
        let (key, ci) = resolve_ref(frames, qualifier, name)
            .expect("column reference resolved during analysis");
        enum Plan {
            Plain,
            Measure,
            Dim { base: Expr, out_alias: Ident, multi: bool },
        }
        let plan = {
            let fs = &frames[key.frame].sources[key.source];
            match &fs.binding.kind {
                RelKind::Measured(basis) => {
                    if fs.binding.columns[ci].is_measure {
                        Plan::Measure
                    } else {
                        Plan::Dim {
                            base: basis
                                .column_expr(name)
                                .expect("dimension column has a defining expression")
                                .clone(),
                            out_alias: fs
                                .out_alias
                                .clone()
                                .expect("measured sources are always aliased"),
                            multi: frames[key.frame].sources.len() > 1,
                        }
                    }
                }
                _ => Plan::Plain,
            }
        };
        match plan {
            // A bare measure reference expands like `m AT ()` with no
            // modifiers: the implicit context alone.
            Plan::Measure => {
                let q = qualifier.cloned();
                self.expand_measure(q.as_ref(), name, &[], frames, site, style)
            }
            Plan::Dim {
                base,
                out_alias,
                multi,
            } => Ok(match style.measure_key() {
                Some(k) if k == key => base,
                _ => {
                    if let Some(pa) = style.partner_alias(key) {
                        qualify_free(&base, pa)
                    } else if qualifier.is_some() || multi {
                        qualify_free(&base, &out_alias)
                    } else {
                        base
                    }
                }
            }),
            Plan::Plain => {
                if let Some(pa) = style.partner_alias(key) {
                    Ok(Expr::Column {
                        qualifier: Some(pa.clone()),
                        name: name.clone(),
                    })
                } else {
                    Ok(Expr::Column {
                        qualifier: qualifier.cloned(),
                        name: name.clone(),
                    })
                }
            }
        }
    }

    /// Expands an AT chain. The outermost modifiers apply first:
    /// `(m AT (inner)) AT (outer)` folds `outer`, then `inner`, which
    /// is exactly `m AT (outer inner)`.
    fn expand_at(
        &mut self,
        expr: &Expr,
        frames: &mut Vec<Frame>,
        site: ExprSite,
        style: &Style,
    ) -> Result<Expr, AnalysisError> {
        let mut lists: Vec<&[ContextModifier]> = Vec::new();
        let mut cur = expr;
        while let Expr::At { base, modifiers } = cur {
            lists.push(modifiers);
            cur = base;
        }
        let Expr::Column { qualifier, name } = cur else {
            unreachable!("AT applies to a measure reference after analysis");
        };
        let modifiers: Vec<ContextModifier> =
            lists.into_iter().flatten().cloned().collect();
        let qualifier = qualifier.clone();
        let name = name.clone();
        self.expand_measure(qualifier.as_ref(), &name, &modifiers, frames, site, style)
    }

    fn expand_measure(
        &mut self,
        qualifier: Option<&Ident>,
        name: &Ident,
        modifiers: &[ContextModifier],
        frames: &mut Vec<Frame>,
        site: ExprSite,
        style: &Style,
    ) -> Result<Expr, AnalysisError> {
        let (key, _) = resolve_ref(frames, qualifier, name)
            .expect("measure reference resolved during analysis");
        let (basis, out_alias) = {
            let fs = &frames[key.frame].sources[key.source];
            let RelKind::Measured(basis) = &fs.binding.kind else {
                unreachable!("measure references resolve to measured sources");
            };
            (
                basis.clone(),
                fs.out_alias
                    .clone()
                    .expect("measured sources are always aliased"),
            )
        };
        let subq_alias = fresh_alias("i", &self.used_aliases(frames, &[]));
        self.reserved.push(subq_alias.clone());
        let result = self.measure_subquery(
            &basis,
            &out_alias,
            &subq_alias,
            key,
            name,
            modifiers,
            frames,
            site,
            style,
        );
        self.reserved.pop();
        result
    }

    #[allow(clippy::too_many_arguments)]
    fn measure_subquery(
        &mut self,
        basis: &MeasureBasis,
        out_alias: &Ident,
        subq_alias: &Ident,
        key: RefKey,
        name: &Ident,
        modifiers: &[ContextModifier],
        frames: &mut Vec<Frame>,
        site: ExprSite,
        style: &Style,
    ) -> Result<Expr, AnalysisError> {
        // Implicit context: the group keys that are dimension expressions
        // of the measure's relation, or every dimension of the current row
        // when the query is ungrouped. WHERE sites carry none; analysis
        // already required their modifiers to discard it.
        let mut bindings = Vec::new();
        if site == ExprSite::Item {
            match &frames[key.frame].group {
                Some(group) => {
                    let pairs: Vec<(Expr, Expr)> = group
                        .keys
                        .iter()
                        .cloned()
                        .zip(group.rewritten.iter().cloned())
                        .collect();
                    let rollup = group.rollup;
                    for (k, k_rw) in pairs {
                        if let Some(dim) = key_over_measure(&k, key, frames) {
                            let value = render_outer(&dim, key, out_alias, style);
                            bindings.push(DimBinding {
                                dim,
                                value,
                                rollup_guard: rollup.then(|| k_rw.clone()),
                            });
                        }
                    }
                }
                None => {
                    for (_, dim_expr) in &basis.columns {
                        bindings.push(DimBinding {
                            dim: dim_expr.clone(),
                            value: render_outer(dim_expr, key, out_alias, style),
                            rollup_guard: None,
                        });
                    }
                }
            }
        }
        let mut ctx = implicit_context(&bindings);
        for modifier in modifiers {
            let resolved = self.resolve_modifier(modifier, key, basis, frames, site, style)?;
            ctx = ctx.apply_modifier(&resolved);
        }
        let row_pred = Expr::and_opt(
            basis.baked_where.as_ref().map(|b| qualify_free(b, subq_alias)),
            ctx.to_row_predicate(subq_alias),
        );
        let formula = qualify_free(&splice_siblings(basis, name), subq_alias);
        let from = self.basis_relation(basis, subq_alias)?;
        Ok(Expr::Subquery(Box::new(Select {
            items: vec![SelectItem::Expr {
                expr: formula,
                alias: None,
                is_measure: false,
            }],
            from: Some(from),
            where_clause: row_pred,
            group_by: None,
        })))
    }

    fn resolve_modifier(
        &mut self,
        modifier: &ContextModifier,
        key: RefKey,
        basis: &MeasureBasis,
        frames: &mut Vec<Frame>,
        site: ExprSite,
        style: &Style,
    ) -> Result<Modifier, AnalysisError> {
        Ok(match modifier {
            ContextModifier::AllBare => Modifier::AllBare,
            ContextModifier::All(dims) => Modifier::All(
                dims.iter()
                    .map(|d| self.dim_over_basis(d, key, basis, frames))
                    .collect(),
            ),
            ContextModifier::Set { dim, value } => Modifier::Set {
                dim: self.dim_over_basis(dim, key, basis, frames),
                value: self.rewrite_set_value(value, key, basis, frames, site, style)?,
            },
            ContextModifier::Where(pred) => Modifier::Where(
                self.rewrite_context_pred(pred, basis, frames, site, style)?,
            ),
            ContextModifier::Visible => {
                Modifier::Visible(self.visible_terms(key, frames, style)?)
            }
        })
    }

    /// Normalizes a modifier dimension to an expression over the measure's
    /// basis rows: visible columns map through the basis and select aliases
    /// expand to their definitions.
    fn dim_over_basis(
        &self,
        dim: &Expr,
        key: RefKey,
        basis: &MeasureBasis,
        frames: &[Frame],
    ) -> Expr {
        match dim {
            Expr::Column { name, .. } => {
                if let Some(e) = basis.column_expr(name) {
                    return e.clone();
                }
                let aliased = frames[key.frame]
                    .items
                    .iter()
                    .find_map(|item| match item {
                        SelectItem::Expr {
                            expr,
                            alias: Some(a),
                            is_measure: false,
                        } if a == name => Some(expr.clone()),
                        _ => None,
                    })
                    .expect("analysis resolved this dimension name");
                self.dim_over_basis(&aliased, key, basis, frames)
            }
            Expr::Function { name, args } => Expr::Function {
                name: name.clone(),
                args: args
                    .iter()
                    .map(|a| self.dim_over_basis(a, key, basis, frames))
                    .collect(),
            },
            Expr::Literal(_) => dim.clone(),
            Expr::Binary { op, left, right } => Expr::binary(
                *op,
                self.dim_over_basis(left, key, basis, frames),
                self.dim_over_basis(right, key, basis, frames),
            ),
            Expr::Unary { op, expr } => Expr::Unary {
                op: *op,
                expr: Box::new(self.dim_over_basis(expr, key, basis, frames)),
            },
            _ => unreachable!("invalid dimension expression survived analysis"),
        }
    }

    /// Rewrites a SET value: CURRENT keeps its node (the context resolves
    /// it when the modifier applies); everything else references the
    /// enclosing query.
    fn rewrite_set_value(
        &mut self,
        value: &Expr,
        key: RefKey,
        basis: &MeasureBasis,
        frames: &mut Vec<Frame>,
        site: ExprSite,
        style: &Style,
    ) -> Result<Expr, AnalysisError> {
        Ok(match value {
            Expr::Current { dim } => Expr::Current {
                dim: Box::new(self.dim_over_basis(dim, key, basis, frames)),
            },
            Expr::Binary { op, left, right } => Expr::binary(
                *op,
                self.rewrite_set_value(left, key, basis, frames, site, style)?,
                self.rewrite_set_value(right, key, basis, frames, site, style)?,
            ),
            Expr::Unary { op, expr } => Expr::Unary {
                op: *op,
                expr: Box::new(self.rewrite_set_value(expr, key, basis, frames, site, style)?),
            },
            Expr::Function { name, args } => {
                let mut rewritten = Vec::new();
                for a in args {
                    rewritten.push(self.rewrite_set_value(a, key, basis, frames, site, style)?);
                }
                Expr::Function {
                    name: name.clone(),
                    args: rewritten,
                }
            }
            other => self.rewrite_expr(other, frames, site, style)?,
        })
    }

    /// Rewrites an `AT (WHERE pred)` predicate: unqualified names that are
    /// dimensions of the measure bind to the measure's rows; everything
    /// else, including the measure relation's own qualifier, references
    /// the enclosing query.
    fn rewrite_context_pred(
        &mut self,
        pred: &Expr,
        basis: &MeasureBasis,
        frames: &mut Vec<Frame>,
        site: ExprSite,
        style: &Style,
    ) -> Result<Expr, AnalysisError> {
        Ok(match pred {
            Expr::Column {
                qualifier: None,
                name,
            } if basis.column_expr(name).is_some() => {
                basis.column_expr(name).expect("checked just above").clone()
            }
            Expr::Column { .. } => self.rewrite_expr(pred, frames, site, style)?,
            Expr::At { .. } => self.rewrite_expr(pred, frames, ExprSite::Where, style)?,
            Expr::Literal(_) => pred.clone(),
            Expr::Binary { op, left, right } => Expr::binary(
                *op,
                self.rewrite_context_pred(left, basis, frames, site, style)?,
                self.rewrite_context_pred(right, basis, frames, site, style)?,
            ),
            Expr::Unary { op, expr } => Expr::Unary {
                op: *op,
                expr: Box::new(
                    self.rewrite_context_pred(expr, basis, frames, site, style)?,
                ),
            },
            Expr::IsNull { expr, negated } => Expr::IsNull {
                expr: Box::new(
                    self.rewrite_context_pred(expr, basis, frames, site, style)?,
                ),
                negated: *negated,
            },
            Expr::Function { name, args } => {
                let mut rewritten = Vec::new();
                for a in args {
                    rewritten
                        .push(self.rewrite_context_pred(a, basis, frames, site, style)?);
                }
                Expr::Function {
                    name: name.clone(),
                    args: rewritten,
                }
            }
            _ => unreachable!("analysis rejects this form inside AT (WHERE ...)"),
        })
    }

    /// Builds the terms VISIBLE adds: the enclosing WHERE conjuncts over
    /// the measure's relation directly, and the join structure tying its
    /// rows to the other sources' visible rows.
    fn visible_terms(
        &mut self,
        key: RefKey,
        frames: &mut Vec<Frame>,
        _style: &Style,
    ) -> Result<Vec<ContextTerm>, AnalysisError> {
        let row_style = Style::MeasureRow { key };
        let mut direct = Vec::new();
        let mut joint = Vec::new();
        if let Some(w) = frames[key.frame].where_clause.clone() {
            for conj in conjuncts(&w) {
                if touches_partner(&conj, key, frames) {
                    joint.push(conj);
                } else {
                    direct.push(conj);
                }
            }
        }
        let mut terms = Vec::new();
        for pred in &direct {
            terms.push(ContextTerm::Pred {
                pred: self.rewrite_expr(pred, frames, ExprSite::Where, &row_style)?,
                origin: TermOrigin::VisibleWhere,
            });
        }
        let partners: Vec<usize> = (0..frames[key.frame].sources.len())
            .filter(|si| *si != key.source)
            .collect();
        if partners.is_empty() {
            return Ok(terms);
        }
        let from_tree = frames[key.frame]
            .from
            .clone()
            .expect("a joined measure source implies a FROM clause");
        if frames[key.frame].group.is_some() {
            // Grouped: requantify the partners inside EXISTS, correlated on
            // the group keys they provide.
            let mut used = self.used_aliases(frames, &[]);
            let mut fresh = Vec::new();
            for si in &partners {
                let hint = frames[key.frame].sources[*si]
                    .binding
                    .alias
                    .as_ref()
                    .map(|a| a.as_str().to_string())
                    .unwrap_or_else(|| "t".to_string());
                let alias = fresh_alias(&hint, &used);
                used.push(alias.clone());
                fresh.push((
                    RefKey {
                        frame: key.frame,
                        source: *si,
                    },
                    alias,
                ));
            }
            let body_style = Style::ExistsBody {
                key,
                partners: fresh.clone(),
            };
            let mut conds = Vec::new();
            self.join_predicates(&from_tree, 0, key, frames, &body_style, &mut conds)?;
            for conj in &joint {
                conds.push(self.rewrite_expr(conj, frames, ExprSite::Where, &body_style)?);
            }
            if let Some(group) = &frames[key.frame].group {
                let pairs: Vec<(Expr, Expr)> = group
                    .keys
                    .iter()
                    .cloned()
                    .zip(group.rewritten.iter().cloned())
                    .collect();
                let rollup = group.rollup;
                for (k, k_rw) in pairs {
                    if key_over_measure(&k, key, frames).is_some() {
                        continue;
                    }
                    let inner = self.rewrite_expr(&k, frames, ExprSite::Where, &body_style)?;
                    let mut corr =
                        Expr::binary(BinaryOp::IsNotDistinctFrom, inner, k_rw.clone());
                    if rollup {
                        let grouping = Expr::Function {
                            name: Ident::new("GROUPING"),
                            args: vec![k_rw.clone()],
                        };
                        corr = Expr::binary(
                            BinaryOp::Or,
                            Expr::binary(
                                BinaryOp::Eq,
                                grouping,
                                Expr::Literal(Literal::Integer(1)),
                            ),
                            corr,
                        );
                    }
                    conds.push(corr);
                }
            }
            let mut body_from: Option<TableExpr> = None;
            for (idx, si) in partners.iter().enumerate() {
                let (rel, baked) = self.partner_relation(frames, key.frame, *si, &fresh[idx].1)?;
                if let Some(b) = baked {
                    conds.push(b);
                }
                body_from = Some(match body_from {
                    None => rel,
                    Some(acc) => TableExpr::Join {
                        left: Box::new(acc),
                        right: Box::new(rel),
                        kind: JoinKind::Inner,
                        condition: JoinCondition::On(Expr::Literal(Literal::Boolean(true))),
                    },
                });
            }
            let body = Select {
                items: vec![SelectItem::Expr {
                    expr: Expr::Literal(Literal::Integer(1)),
                    alias: None,
                    is_measure: false,
                }],
                from: body_from,
                where_clause: conds
                    .into_iter()
                    .reduce(|a, b| Expr::binary(BinaryOp::And, a, b)),
                group_by: None,
            };
            terms.push(ContextTerm::Pred {
                pred: Expr::Exists(Box::new(body)),
                origin: TermOrigin::VisibleJoin,
            });
        } else {
            // Ungrouped: the current outer row is in scope, so the join
            // conditions correlate to the partner aliases directly.
            let mut conds = Vec::new();
            self.join_predicates(&from_tree, 0, key, frames, &row_style, &mut conds)?;
            for conj in &joint {
                conds.push(self.rewrite_expr(conj, frames, ExprSite::Where, &row_style)?);
            }
            for pred in conds {
                terms.push(ContextTerm::Pred {
                    pred,
                    origin: TermOrigin::VisibleJoin,
                });
            }
        }
        Ok(terms)
    }

    /// Collects the join conditions of a FROM tree as rewritten predicates;
    /// returns the number of leaves in `table`.
    fn join_predicates(
        &mut self,
        table: &TableExpr,
        first: usize,
        key: RefKey,
        frames: &mut Vec<Frame>,
        style: &Style,
        out: &mut Vec<Expr>,
    ) -> Result<usize, AnalysisError> {
        match table {
            TableExpr::Join {
                left,
                right,
                condition,
                ..
            } => {
                let ln = self.join_predicates(left, first, key, frames, style, out)?;
                let rn = self.join_predicates(right, first + ln, key, frames, style, out)?;
                match condition {
                    JoinCondition::On(pred) => {
                        out.push(self.rewrite_expr(pred, frames, ExprSite::Where, style)?);
                    }
                    JoinCondition::Using(cols) => {
                        for col in cols {
                            let l = using_side(first..first + ln, col, key, frames, style);
                            let r = using_side(
                                first + ln..first + ln + rn,
                                col,
                                key,
                                frames,
                                style,
                            );
                            out.push(Expr::binary(BinaryOp::Eq, l, r));
                        }
                    }
                }
                Ok(ln + rn)
            }
            _ => Ok(1),
        }
    }

    /// Rebuilds one partner source for an EXISTS body under a fresh alias,
    /// returning the relation and any filter baked into it.
    fn partner_relation(
        &mut self,
        frames: &mut [Frame],
        frame: usize,
        source: usize,
        alias: &Ident,
    ) -> Result<(TableExpr, Option<Expr>), AnalysisError> {
        let kind = frames[frame].sources[source].binding.kind.clone();
        match kind {
            RelKind::Base(name) | RelKind::PlainView(name) | RelKind::PlainCte(name) => Ok((
                TableExpr::Table {
                    name,
                    alias: Some(alias.clone()),
                },
                None,
            )),
            RelKind::PlainDerived(select) => {
                let ctes = frames[frame].ctes.clone();
                let body = self.rewrite_select(&select, &ctes, &mut Vec::new())?;
                Ok((
                    TableExpr::Subquery {
                        query: Box::new(body),
                        alias: Some(alias.clone()),
                    },
                    None,
                ))
            }
            RelKind::Measured(basis) => {
                let rel = self.basis_relation(&basis, alias)?;
                let baked = basis.baked_where.as_ref().map(|b| qualify_free(b, alias));
                Ok((rel, baked))
            }
        }
    }

    fn used_aliases(&self, frames: &[Frame], pending: &[FrameSource]) -> Vec<Ident> {
        let mut used: Vec<Ident> = Vec::new();
        for s in frames
            .iter()
            .flat_map(|f| f.sources.iter())
            .chain(pending.iter())
        {
            if let Some(a) = &s.binding.alias {
                used.push(a.clone());
            }
            if let Some(a) = &s.out_alias {
                used.push(a.clone());
            }
        }
        used.extend(self.reserved.iter().cloned());
        used
    }
}

/// How the outer side of an implicit dimension binding is written: under
/// the flattened source alias normally, unqualified when the text will be
/// qualified wholesale with an enclosing subquery alias.
fn render_outer(dim: &Expr, key: RefKey, out_alias: &Ident, style: &Style) -> Expr {
    match style.measure_key() {
        Some(k) if k == key => dim.clone(),
        _ => qualify_free(dim, out_alias),
    }
}

/// Rewrites a group key over the measure's basis rows, if every column in
/// it belongs to the measure's relation.
fn key_over_measure(k: &Expr, key: RefKey, frames: &[Frame]) -> Option<Expr> {
    match k {
        Expr::Column { qualifier, name } => {
            let (rk, _) = resolve_ref(frames, qualifier.as_ref(), name)?;
            if rk != key {
                return None;
            }
            let RelKind::Measured(basis) = &frames[key.frame].sources[key.source].binding.kind
            else {
                return None;
            };
            basis.column_expr(name).cloned()
        }
        Expr::Literal(_) => Some(k.clone()),
        Expr::Binary { op, left, right } => Some(Expr::binary(
            *op,
            key_over_measure(left, key, frames)?,
            key_over_measure(right, key, frames)?,
        )),
        Expr::Unary { op, expr } => Some(Expr::Unary {
            op: *op,
            expr: Box::new(key_over_measure(expr, key, frames)?),
        }),
        Expr::IsNull { expr, negated } => Some(Expr::IsNull {
            expr: Box::new(key_over_measure(expr, key, frames)?),
            negated: *negated,
        }),
        Expr::Function { name, args } => Some(Expr::Function {
            name: name.clone(),
            args: args
                .iter()
                .map(|a| key_over_measure(a, key, frames))
                .collect::<Option<Vec<_>>>()?,
        }),
        _ => None,
    }
}

/// True if the conjunct references a source other than the measure's in
/// the same frame. Nested subqueries are not entered: their local names
/// resolve to their own scopes, not this frame.
fn touches_partner(expr: &Expr, key: RefKey, frames: &[Frame]) -> bool {
    match expr {
        Expr::Column { qualifier, name } => {
            match resolve_ref(frames, qualifier.as_ref(), name) {
                Some((rk, _)) => rk.frame == key.frame && rk != key,
                None => false,
            }
        }
        Expr::Literal(_) | Expr::Subquery(_) | Expr::Exists(_) => false,
        Expr::Binary { left, right, .. } => {
            touches_partner(left, key, frames) || touches_partner(right, key, frames)
        }
        Expr::Unary { expr, .. } | Expr::IsNull { expr, .. } => {
            touches_partner(expr, key, frames)
        }
        Expr::Function { args, .. } => args.iter().any(|a| touches_partner(a, key, frames)),
        Expr::Aggregate { arg, .. } => arg
            .as_deref()
            .is_some_and(|a| touches_partner(a, key, frames)),
        Expr::WindowAggregate {
            arg, partition_by, ..
        } => {
            arg.as_deref()
                .is_some_and(|a| touches_partner(a, key, frames))
                || partition_by.iter().any(|k| touches_partner(k, key, frames))
        }
        Expr::AggregateMeasure { arg } => touches_partner(arg, key, frames),
        Expr::At { base, modifiers } => {
            touches_partner(base, key, frames)
                || modifiers.iter().any(|m| match m {
                    ContextModifier::Set { value, .. } => touches_partner(value, key, frames),
                    ContextModifier::Where(p) => touches_partner(p, key, frames),
                    _ => false,
                })
        }
        Expr::Current { dim } => touches_partner(dim, key, frames),
    }
}

/// Renders one side of a USING equality: the column as seen from the
/// sources in `range`, under the given style.
fn using_side(
    range: std::ops::Range<usize>,
    col: &Ident,
    key: RefKey,
    frames: &[Frame],
    style: &Style,
) -> Expr {
    let frame = &frames[key.frame];
    let si = range
        .clone()
        .find(|si| frame.sources[*si].binding.column_index(col).is_some())
        .expect("USING column resolved during analysis");
    let rk = RefKey {
        frame: key.frame,
        source: si,
    };
    let fs = &frame.sources[si];
    if let RelKind::Measured(basis) = &fs.binding.kind {
        let base = basis
            .column_expr(col)
            .expect("USING joins on dimension columns")
            .clone();
        if style.measure_key() == Some(rk) {
            base
        } else if let Some(pa) = style.partner_alias(rk) {
            qualify_free(&base, pa)
        } else {
            qualify_free(
                &base,
                fs.out_alias
                    .as_ref()
                    .expect("measured sources are always aliased"),
            )
        }
    } else if let Some(pa) = style.partner_alias(rk) {
        Expr::Column {
            qualifier: Some(pa.clone()),
            name: col.clone(),
        }
    } else {
        Expr::Column {
            qualifier: fs.binding.alias.clone(),
            name: col.clone(),
        }
    }
}

/// Expands `*` (or `alias.*` over a measure-defining source) to the
/// visible dimension columns; measures never ride along implicitly.
fn expand_wildcard(frame: &Frame, only: Option<&Ident>) -> Vec<SelectItem> {
    let multi = frame.sources.len() > 1;
    let mut seen_using: Vec<Ident> = Vec::new();
    let mut items = Vec::new();
    for fs in &frame.sources {
        if let Some(q) = only {
            if fs.binding.alias.as_ref() != Some(q) {
                continue;
            }
        }
        for col in fs.binding.dimensions() {
            if only.is_none() && frame.using_columns.contains(&col.name) {
                if seen_using.contains(&col.name) {
                    continue;
                }
                seen_using.push(col.name.clone());
            }
            let expr = if let RelKind::Measured(basis) = &fs.binding.kind {
                let base = basis
                    .column_expr(&col.name)
                    .expect("dimension column has a defining expression")
                    .clone();
                if multi {
                    qualify_free(
                        &base,
                        fs.out_alias
                            .as_ref()
                            .expect("measured sources are always aliased"),
                    )
                } else {
                    base
                }
            } else {
                Expr::Column {
                    qualifier: if multi { fs.binding.alias.clone() } else { None },
                    name: col.name.clone(),
                }
            };
            let tentative = SelectItem::Expr {
                expr,
                alias: None,
                is_measure: false,
            };
            let alias = if tentative.implied_name().as_ref() == Some(&col.name) {
                None
            } else {
                Some(col.name.clone())
            };
            let SelectItem::Expr { expr, .. } = tentative else {
                unreachable!()
            };
            items.push(SelectItem::Expr {
                expr,
                alias,
                is_measure: false,
            });
        }
    }
    items
}
