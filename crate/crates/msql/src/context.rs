//! Evaluation contexts: the constraints a measure is evaluated under.
//!
//! A context is an ordered conjunction of terms. Each term either pins a
//! dimension to a value (null-safely) or holds an arbitrary predicate
//! over the measure's rows. Call sites produce an implicit context (group
//! keys, or the current row's dimensions); AT modifiers transform it one
//! by one, left to right. A context renders to a row predicate over a
//! fresh alias of the measure's source, which is what generated
//! subqueries filter by.
//!
//! Conventions for the expressions stored in terms:
//! - dimension expressions are unqualified and range over the measure's
//!   relation; rendering qualifies them with the subquery alias,
//! - value expressions and the non-row side of predicates are fully
//!   qualified references to the enclosing query,
//! - unqualified references inside predicates mean the measure row.

use crate::syntax::{BinaryOp, Expr, Ident, JoinCondition, Literal, Select, SelectItem, TableExpr};

/// Why a term is part of the context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermOrigin {
    /// Implicit: a group key of the calling query, or a dimension of the
    /// calling row when the query is ungrouped.
    GroupKey,
    /// Added by `SET dim = value`.
    SetModifier,
    /// The whole context was replaced by `AT (WHERE pred)`.
    WhereModifier,
    /// Added by VISIBLE from the enclosing WHERE clause.
    VisibleWhere,
    /// Added by VISIBLE from enclosing join conditions.
    VisibleJoin,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ContextTerm {
    /// `dim IS NOT DISTINCT FROM value`, optionally guarded so the
    /// constraint vanishes in rollup strata where the key is rolled up.
    DimEquals {
        dim: Expr,
        value: Expr,
        origin: TermOrigin,
        /// Outer group key to test with GROUPING(): when it reports 1 the
        /// dimension is unconstrained.
        rollup_guard: Option<Expr>,
    },
    /// An arbitrary predicate over the measure's rows.
    Pred { pred: Expr, origin: TermOrigin },
}

/// One dimension pinned by the implicit context.
#[derive(Debug, Clone, PartialEq)]
pub struct DimBinding {
    /// Normalized dimension expression over the measure's relation.
    pub dim: Expr,
    /// What the enclosing query pins it to (a correlated reference).
    pub value: Expr,
    /// The outer group key to guard with GROUPING(), for rollup queries.
    pub rollup_guard: Option<Expr>,
}

/// A context modifier after analysis: dimensions normalized, VISIBLE
/// already translated to terms by the caller.
#[derive(Debug, Clone, PartialEq)]
pub enum Modifier {
    /// `ALL`: drop every constraint.
    AllBare,
    /// `ALL dim, ...`: drop the constraints on these dimensions.
    All(Vec<Expr>),
    /// `SET dim = value`; the value may contain CURRENT references.
    Set { dim: Expr, value: Expr },
    /// `WHERE pred`: replace the whole context with one predicate.
    Where(Expr),
    /// `VISIBLE`: add the enclosing query's own filters.
    Visible(Vec<ContextTerm>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvaluationContext {
    pub terms: Vec<ContextTerm>,
}

/// The context a call site implies: one term per pinned dimension.
pub fn implicit_context(bindings: &[DimBinding]) -> EvaluationContext {
    EvaluationContext {
        terms: bindings
            .iter()
            .map(|b| ContextTerm::DimEquals {
                dim: b.dim.clone(),
                value: b.value.clone(),
                origin: TermOrigin::GroupKey,
                rollup_guard: b.rollup_guard.clone(),
            })
            .collect(),
    }
}

impl EvaluationContext {
    pub fn empty() -> Self {
        EvaluationContext::default()
    }

    /// Applies one modifier, returning the transformed context.
    pub fn apply_modifier(&self, modifier: &Modifier) -> EvaluationContext {
        match modifier {
            Modifier::AllBare => EvaluationContext::empty(),
            Modifier::All(dims) => EvaluationContext {
                terms: self
                    .terms
                    .iter()
                    .filter(|t| match t {
                        ContextTerm::DimEquals { dim, .. } => !dims.contains(dim),
                        ContextTerm::Pred { .. } => true,
                    })
                    .cloned()
                    .collect(),
            },
            Modifier::Set { dim, value } => {
                let value = resolve_current(value, self);
                let mut terms: Vec<ContextTerm> = self
                    .terms
                    .iter()
                    .filter(|t| !matches!(t, ContextTerm::DimEquals { dim: d, .. } if d == dim))
                    .cloned()
                    .collect();
                terms.push(ContextTerm::DimEquals {
                    dim: dim.clone(),
                    value,
                    origin: TermOrigin::SetModifier,
                    rollup_guard: None,
                });
                EvaluationContext { terms }
            }
            Modifier::Where(pred) => EvaluationContext {
                terms: vec![ContextTerm::Pred {
                    pred: pred.clone(),
                    origin: TermOrigin::WhereModifier,
                }],
            },
            Modifier::Visible(terms) => {
                let mut all = self.terms.clone();
                all.extend(terms.iter().cloned());
                EvaluationContext { terms: all }
            }
        }
    }

    /// Applies modifiers left to right: `m AT (m1 m2)` is `(m AT (m2)) AT
    /// (m1)`.
    pub fn apply_sequence(&self, modifiers: &[Modifier]) -> EvaluationContext {
        modifiers
            .iter()
            .fold(self.clone(), |ctx, m| ctx.apply_modifier(m))
    }

    /// What a dimension is currently pinned to; NULL when unconstrained.
    pub fn current_value(&self, dim: &Expr) -> Expr {
        self.terms
            .iter()
            .find_map(|t| match t {
                ContextTerm::DimEquals { dim: d, value, .. } if d == dim => Some(value.clone()),
                _ => None,
            })
            .unwrap_or(Expr::Literal(Literal::Null))
    }

    /// Renders the context as a predicate over `alias`, the fresh name of
    /// the measure's source in a generated subquery. None means
    /// unconstrained.
    pub fn to_row_predicate(&self, alias: &Ident) -> Option<Expr> {
        let mut result: Option<Expr> = None;
        for term in &self.terms {
            let pred = match term {
                ContextTerm::DimEquals {
                    dim,
                    value,
                    rollup_guard,
                    ..
                } => {
                    let equality = Expr::binary(
                        BinaryOp::IsNotDistinctFrom,
                        qualify_free(dim, alias),
                        value.clone(),
                    );
                    match rollup_guard {
                        Some(key) => Expr::binary(
                            BinaryOp::Or,
                            Expr::binary(
                                BinaryOp::Eq,
                                Expr::Function {
                                    name: Ident::new("GROUPING"),
                                    args: vec![key.clone()],
                                },
                                Expr::Literal(Literal::Integer(1)),
                            ),
                            equality,
                        ),
                        None => equality,
                    }
                }
                ContextTerm::Pred { pred, .. } => qualify_free(pred, alias),
            };
            result = Expr::and_opt(result, Some(pred));
        }
        result
    }
}

/// Replaces CURRENT references with what the context pins the dimension
/// to.
fn resolve_current(value: &Expr, ctx: &EvaluationContext) -> Expr {
    match value {
        Expr::Current { dim } => ctx.current_value(dim),
        Expr::Binary { op, left, right } => Expr::Binary {
            op: *op,
            left: Box::new(resolve_current(left, ctx)),
            right: Box::new(resolve_current(right, ctx)),
        },
        Expr::Unary { op, expr } => Expr::Unary {
            op: *op,
            expr: Box::new(resolve_current(expr, ctx)),
        },
        Expr::IsNull { expr, negated } => Expr::IsNull {
            expr: Box::new(resolve_current(expr, ctx)),
            negated: *negated,
        },
        Expr::Function { name, args } => Expr::Function {
            name: name.clone(),
            args: args.iter().map(|a| resolve_current(a, ctx)).collect(),
        },
        other => other.clone(),
    }
}

/// Qualifies every unqualified column reference with `alias`, recursing
/// into subqueries. Callers guarantee that unqualified references mean
/// the measure row and that anything else is already qualified.
pub(crate) fn qualify_free(expr: &Expr, alias: &Ident) -> Expr {
    match expr {
        Expr::Column {
            qualifier: None,
            name,
        } => Expr::qualified(alias.clone(), name.clone()),
        Expr::Column { .. } | Expr::Literal(_) => expr.clone(),
        Expr::Binary { op, left, right } => Expr::Binary {
            op: *op,
            left: Box::new(qualify_free(left, alias)),
            right: Box::new(qualify_free(right, alias)),
        },
        Expr::Unary { op, expr } => Expr::Unary {
            op: *op,
            expr: Box::new(qualify_free(expr, alias)),
        },
        Expr::IsNull { expr, negated } => Expr::IsNull {
            expr: Box::new(qualify_free(expr, alias)),
            negated: *negated,
        },
        Expr::Function { name, args } => Expr::Function {
            name: name.clone(),
            args: args.iter().map(|a| qualify_free(a, alias)).collect(),
        },
        Expr::Aggregate { func, arg } => Expr::Aggregate {
            func: *func,
            arg: arg.as_ref().map(|a| Box::new(qualify_free(a, alias))),
        },
        Expr::WindowAggregate {
            func,
            arg,
            partition_by,
        } => Expr::WindowAggregate {
            func: *func,
            arg: arg.as_ref().map(|a| Box::new(qualify_free(a, alias))),
            partition_by: partition_by.iter().map(|k| qualify_free(k, alias)).collect(),
        },
        Expr::AggregateMeasure { arg } => Expr::AggregateMeasure {
            arg: Box::new(qualify_free(arg, alias)),
        },
        Expr::At { base, modifiers } => Expr::At {
            base: Box::new(qualify_free(base, alias)),
            modifiers: modifiers.clone(),
        },
        Expr::Current { .. } => expr.clone(),
        Expr::Subquery(select) => Expr::Subquery(Box::new(qualify_select(select, alias))),
        Expr::Exists(select) => Expr::Exists(Box::new(qualify_select(select, alias))),
    }
}

fn qualify_select(select: &Select, alias: &Ident) -> Select {
    Select {
        items: select
            .items
            .iter()
            .map(|item| match item {
                SelectItem::Expr {
                    expr,
                    alias: item_alias,
                    is_measure,
                } => SelectItem::Expr {
                    expr: qualify_free(expr, alias),
                    alias: item_alias.clone(),
                    is_measure: *is_measure,
                },
                other => other.clone(),
            })
            .collect(),
        from: select.from.as_ref().map(|f| qualify_table(f, alias)),
        where_clause: select
            .where_clause
            .as_ref()
            .map(|w| qualify_free(w, alias)),
        group_by: select.group_by.clone(),
    }
}

fn qualify_table(table: &TableExpr, alias: &Ident) -> TableExpr {
    match table {
        TableExpr::Table { .. } => table.clone(),
        TableExpr::Subquery { query, alias: a } => TableExpr::Subquery {
            query: Box::new(qualify_select(query, alias)),
            alias: a.clone(),
        },
        TableExpr::Join {
            left,
            right,
            kind,
            condition,
        } => TableExpr::Join {
            left: Box::new(qualify_table(left, alias)),
            right: Box::new(qualify_table(right, alias)),
            kind: *kind,
            condition: match condition {
                JoinCondition::On(pred) => JoinCondition::On(qualify_free(pred, alias)),
                JoinCondition::Using(cols) => JoinCondition::Using(cols.clone()),
            },
        },
    }
}
