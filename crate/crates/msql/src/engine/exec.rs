//! Tree-walking interpreter for expanded (measure-free) queries.
//!
//! Row-at-a-time with correlated subqueries re-evaluated per outer row and
//! quadratic joins: the simplest executor that is obviously faithful to SQL
//! semantics, intended for desk-scale data. Output order is deterministic:
//! ungrouped selects keep input order, grouped selects sort groups by key
//! with nulls last, and ROLLUP emits detail rows first and the grand total
//! last.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use crate::catalog::{Catalog, TableSource};
use crate::syntax::{
    AggFunc, BinaryOp, Expr, Ident, JoinCondition, JoinKind, Literal, Query, Select, SelectItem,
    TableExpr, UnaryOp,
};

use super::value::{self, KeyAtom, Value};
use super::{Database, EngineError, Relation};

/// Runs `query` over loaded relations, resolving plain views through the
/// catalog. The query must already be expanded: measure syntax is an error.
pub fn execute(query: &Query, db: &Database, catalog: &Catalog) -> Result<Relation, EngineError> {
    Exec { db, catalog }.query(query, None, None)
}

struct Exec<'a> {
    db: &'a Database,
    catalog: &'a Catalog,
}

/// Named relations introduced by WITH, visible to everything below.
struct CteScope<'a> {
    parent: Option<&'a CteScope<'a>>,
    entries: Vec<(Ident, Relation)>,
}

impl CteScope<'_> {
    fn lookup(&self, name: &Ident) -> Option<&Relation> {
        self.entries
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, r)| r)
            .or_else(|| self.parent.and_then(|p| p.lookup(name)))
    }
}

/// One FROM source: binding name (if any) plus its slot range in the row.
struct Source {
    name: Option<Ident>,
    columns: Vec<Ident>,
    offset: usize,
}

impl Source {
    fn position(&self, name: &Ident) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// Row layout of one select: every FROM source side by side.
struct Frame {
    sources: Vec<Source>,
    /// Columns merged by USING; the leftmost copy is authoritative.
    using: Vec<Ident>,
}

impl Frame {
    fn width(&self) -> usize {
        self.sources
            .last()
            .map(|s| s.offset + s.columns.len())
            .unwrap_or(0)
    }

    /// Flat slot of a column reference; `Ok(None)` when the name does not
    /// bind here and enclosing scopes should be tried.
    fn slot(&self, qualifier: Option<&Ident>, name: &Ident) -> Result<Option<usize>, EngineError> {
        if let Some(q) = qualifier {
            for s in &self.sources {
                if s.name.as_ref() == Some(q) {
                    return match s.position(name) {
                        Some(i) => Ok(Some(s.offset + i)),
                        None => Err(EngineError::TypeError(format!("no column {name} in {q}"))),
                    };
                }
            }
            return Ok(None);
        }
        let mut hits = self
            .sources
            .iter()
            .filter_map(|s| s.position(name).map(|i| s.offset + i));
        match (hits.next(), hits.next()) {
            (None, _) => Ok(None),
            (Some(first), None) => Ok(Some(first)),
            (Some(first), Some(_)) if self.using.contains(name) => Ok(Some(first)),
            _ => Err(EngineError::TypeError(format!("ambiguous column {name}"))),
        }
    }
}

/// Evaluation scope for one row or one group, chained outward through
/// correlated subqueries.
struct Env<'a> {
    parent: Option<&'a Env<'a>>,
    kind: EnvKind<'a>,
}

enum EnvKind<'a> {
    Row {
        frame: &'a Frame,
        row: &'a [Value],
        /// All rows of the same select, present while its items are
        /// computed; window aggregates partition over them.
        peers: Option<&'a [Vec<Value>]>,
    },
    Group {
        frame: &'a Frame,
        keys: &'a [KeyBinding],
        rows: &'a [Vec<Value>],
    },
}

/// One grouping key of the active group: its normalized expression, the
/// group's value, and whether the current ROLLUP stratum rolls it up.
struct KeyBinding {
    normalized: Expr,
    value: Value,
    rolled: bool,
}

impl KeyBinding {
    fn value(&self) -> Value {
        if self.rolled {
            Value::Null
        } else {
            self.value.clone()
        }
    }
}

fn slot_expr(slot: usize) -> Expr {
    Expr::column(Ident::new(format!("#{slot}")))
}

/// Rewrites every column the frame binds into its flat slot so grouping
/// keys compare structurally however they were qualified. `None` when the
/// expression reaches outside the frame or contains an aggregate or
/// subquery.
fn normalize(expr: &Expr, frame: &Frame) -> Option<Expr> {
    match expr {
        Expr::Column { qualifier, name } => {
            let slot = frame.slot(qualifier.as_ref(), name).ok()??;
            Some(slot_expr(slot))
        }
        Expr::Literal(_) => Some(expr.clone()),
        Expr::Binary { op, left, right } => Some(Expr::binary(
            *op,
            normalize(left, frame)?,
            normalize(right, frame)?,
        )),
        Expr::Unary { op, expr } => Some(Expr::Unary {
            op: *op,
            expr: Box::new(normalize(expr, frame)?),
        }),
        Expr::IsNull { expr, negated } => Some(Expr::IsNull {
            expr: Box::new(normalize(expr, frame)?),
            negated: *negated,
        }),
        Expr::Function { name, args } => Some(Expr::Function {
            name: name.clone(),
            args: args
                .iter()
                .map(|a| normalize(a, frame))
                .collect::<Option<_>>()?,
        }),
        _ => None,
    }
}

/// Do all column references on the expression's scalar spine bind in this
/// frame? Subquery bodies resolve their own names and are skipped.
fn anchored(expr: &Expr, frame: &Frame) -> bool {
    match expr {
        Expr::Column { qualifier, name } => {
            matches!(frame.slot(qualifier.as_ref(), name), Ok(Some(_)))
        }
        Expr::Literal(_) | Expr::Subquery(_) | Expr::Exists(_) => true,
        Expr::Binary { left, right, .. } => anchored(left, frame) && anchored(right, frame),
        Expr::Unary { expr, .. } | Expr::IsNull { expr, .. } => anchored(expr, frame),
        Expr::Function { args, .. } => args.iter().all(|a| anchored(a, frame)),
        Expr::Aggregate { arg, .. } => arg.as_deref().is_none_or(|a| anchored(a, frame)),
        Expr::WindowAggregate {
            arg, partition_by, ..
        } => {
            arg.as_deref().is_none_or(|a| anchored(a, frame))
                && partition_by.iter().all(|k| anchored(k, frame))
        }
        Expr::AggregateMeasure { .. } | Expr::At { .. } | Expr::Current { .. } => false,
    }
}

/// Value of `expr` if some enclosing group binds it as a key. Resolution is
/// lexical: the search stops at the innermost scope the expression is
/// anchored in, so an inner row column never leaks to an outer key.
fn group_key_value(expr: &Expr, env: &Env) -> Option<Value> {
    let mut level = Some(env);
    while let Some(e) = level {
        match &e.kind {
            EnvKind::Row { frame, .. } => {
                if anchored(expr, frame) {
                    return None;
                }
            }
            EnvKind::Group { frame, keys, .. } => {
                if let Some(norm) = normalize(expr, frame) {
                    return keys.iter().find(|k| k.normalized == norm).map(KeyBinding::value);
                }
                if anchored(expr, frame) {
                    return None;
                }
            }
        }
        level = e.parent;
    }
    None
}

fn literal(l: &Literal) -> Value {
    match l {
        Literal::Null => Value::Null,
        Literal::Integer(i) => Value::Integer(*i),
        Literal::Double(f) => Value::Double(*f),
        Literal::String(s) => Value::Varchar(s.clone()),
        Literal::Boolean(b) => Value::Boolean(*b),
        Literal::Date(d) => Value::Date(*d),
    }
}

/// Expression evaluator for one select, carrying its CTE visibility.
struct Evaluator<'a> {
    exec: &'a Exec<'a>,
    ctes: Option<&'a CteScope<'a>>,
}

impl Evaluator<'_> {
    fn eval(&self, expr: &Expr, env: &Env) -> Result<Value, EngineError> {
        match expr {
            Expr::Literal(l) => Ok(literal(l)),
            Expr::Column { qualifier, name } => self.column(qualifier.as_ref(), name, env),
            Expr::Aggregate { func, arg } => self.aggregate(*func, arg.as_deref(), env),
            Expr::WindowAggregate {
                func,
                arg,
                partition_by,
            } => self.window(*func, arg.as_deref(), partition_by, env),
            Expr::Function { name, args } if name.matches("GROUPING") => {
                self.grouping(&args[0], env)
            }
            _ => {
                // A grouped query may name a key through any equal expression.
                if let Some(v) = group_key_value(expr, env) {
                    return Ok(v);
                }
                match expr {
                    Expr::Binary { op, left, right } => self.binary(*op, left, right, env),
                    Expr::Unary { op, expr } => match op {
                        UnaryOp::Not => value::not(&self.eval(expr, env)?),
                        UnaryOp::Neg => value::negate(&self.eval(expr, env)?),
                    },
                    Expr::IsNull { expr, negated } => {
                        let isnull = self.eval(expr, env)?.is_null();
                        Ok(Value::Boolean(isnull != *negated))
                    }
                    Expr::Function { name, args } => {
                        let mut vals = Vec::with_capacity(args.len());
                        for a in args {
                            vals.push(self.eval(a, env)?);
                        }
                        value::scalar_function(name, &vals)
                    }
                    Expr::Subquery(select) => self.scalar_subquery(select, env),
                    Expr::Exists(select) => {
                        let rel = self.exec.select(select, Some(env), self.ctes)?;
                        Ok(Value::Boolean(!rel.rows.is_empty()))
                    }
                    Expr::At { .. } | Expr::AggregateMeasure { .. } | Expr::Current { .. } => {
                        Err(EngineError::TypeError(
                            "internal: measure syntax reached the engine unexpanded".into(),
                        ))
                    }
                    Expr::Column { .. }
                    | Expr::Literal(_)
                    | Expr::Aggregate { .. }
                    | Expr::WindowAggregate { .. } => unreachable!(),
                }
            }
        }
    }

    fn column(
        &self,
        qualifier: Option<&Ident>,
        name: &Ident,
        env: &Env,
    ) -> Result<Value, EngineError> {
        let mut level = Some(env);
        while let Some(e) = level {
            match &e.kind {
                EnvKind::Row { frame, row, .. } => {
                    if let Some(slot) = frame.slot(qualifier, name)? {
                        return Ok(row[slot].clone());
                    }
                }
                EnvKind::Group { frame, keys, .. } => {
                    if let Some(slot) = frame.slot(qualifier, name)? {
                        let norm = slot_expr(slot);
                        return keys
                            .iter()
                            .find(|k| k.normalized == norm)
                            .map(KeyBinding::value)
                            .ok_or_else(|| {
                                EngineError::TypeError(format!(
                                    "column {name} is neither grouped nor aggregated"
                                ))
                            });
                    }
                }
            }
            level = e.parent;
        }
        Err(EngineError::TypeError(format!("unknown column {name}")))
    }

    fn aggregate(
        &self,
        func: AggFunc,
        arg: Option<&Expr>,
        env: &Env,
    ) -> Result<Value, EngineError> {
        let EnvKind::Group { frame, rows, .. } = &env.kind else {
            return Err(EngineError::TypeError(
                "aggregate outside a grouped select".into(),
            ));
        };
        let Some(arg) = arg else {
            return Ok(Value::Integer(rows.len() as i64));
        };
        let mut inputs = Vec::with_capacity(rows.len());
        for row in rows.iter() {
            let renv = Env {
                parent: env.parent,
                kind: EnvKind::Row {
                    frame,
                    row,
                    peers: None,
                },
            };
            inputs.push(self.eval(arg, &renv)?);
        }
        value::aggregate(func, inputs)
    }

    fn window(
        &self,
        func: AggFunc,
        arg: Option<&Expr>,
        partition_by: &[Expr],
        env: &Env,
    ) -> Result<Value, EngineError> {
        let EnvKind::Row {
            frame,
            peers: Some(peers),
            ..
        } = &env.kind
        else {
            return Err(EngineError::TypeError(
                "window aggregate outside the select list of an ungrouped select".into(),
            ));
        };
        let mut coords = Vec::with_capacity(partition_by.len());
        for e in partition_by {
            coords.push(self.eval(e, env)?);
        }
        let mut inputs = Vec::new();
        let mut count = 0i64;
        for peer in peers.iter() {
            let penv = Env {
                parent: env.parent,
                kind: EnvKind::Row {
                    frame,
                    row: peer,
                    peers: None,
                },
            };
            let mut same = true;
            for (e, c) in partition_by.iter().zip(&coords) {
                if !value::not_distinct(&self.eval(e, &penv)?, c) {
                    same = false;
                    break;
                }
            }
            if !same {
                continue;
            }
            match arg {
                Some(a) => inputs.push(self.eval(a, &penv)?),
                None => count += 1,
            }
        }
        match arg {
            Some(_) => value::aggregate(func, inputs),
            None => Ok(Value::Integer(count)),
        }
    }

    fn grouping(&self, arg: &Expr, env: &Env) -> Result<Value, EngineError> {
        let mut level = Some(env);
        while let Some(e) = level {
            if let EnvKind::Group { frame, keys, .. } = &e.kind {
                if let Some(norm) = normalize(arg, frame) {
                    if let Some(k) = keys.iter().find(|k| k.normalized == norm) {
                        return Ok(Value::Integer(i64::from(k.rolled)));
                    }
                }
            }
            level = e.parent;
        }
        Err(EngineError::TypeError(format!(
            "GROUPING argument {} is not a grouping key",
            crate::syntax::print_expr(arg)
        )))
    }

    fn binary(
        &self,
        op: BinaryOp,
        left: &Expr,
        right: &Expr,
        env: &Env,
    ) -> Result<Value, EngineError> {
        match op {
            BinaryOp::And => {
                let l = self.eval(left, env)?.truth()?;
                if l == Some(false) {
                    return Ok(Value::Boolean(false));
                }
                Ok(match (l, self.eval(right, env)?.truth()?) {
                    (Some(true), Some(true)) => Value::Boolean(true),
                    (_, Some(false)) => Value::Boolean(false),
                    _ => Value::Null,
                })
            }
            BinaryOp::Or => {
                let l = self.eval(left, env)?.truth()?;
                if l == Some(true) {
                    return Ok(Value::Boolean(true));
                }
                Ok(match (l, self.eval(right, env)?.truth()?) {
                    (Some(false), Some(false)) => Value::Boolean(false),
                    (_, Some(true)) => Value::Boolean(true),
                    _ => Value::Null,
                })
            }
            BinaryOp::IsNotDistinctFrom | BinaryOp::IsDistinctFrom => {
                let same = value::not_distinct(&self.eval(left, env)?, &self.eval(right, env)?);
                Ok(Value::Boolean(same == (op == BinaryOp::IsNotDistinctFrom)))
            }
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul => {
                value::arith(op, &self.eval(left, env)?, &self.eval(right, env)?)
            }
            BinaryOp::Div => value::divide(&self.eval(left, env)?, &self.eval(right, env)?),
            _ => {
                let l = self.eval(left, env)?;
                let r = self.eval(right, env)?;
                Ok(match value::compare(&l, &r)? {
                    None => Value::Null,
                    Some(ord) => Value::Boolean(match op {
                        BinaryOp::Eq => ord.is_eq(),
                        BinaryOp::NotEq => ord.is_ne(),
                        BinaryOp::Lt => ord.is_lt(),
                        BinaryOp::LtEq => ord.is_le(),
                        BinaryOp::Gt => ord.is_gt(),
                        BinaryOp::GtEq => ord.is_ge(),
                        _ => unreachable!("handled above"),
                    }),
                })
            }
        }
    }

    fn scalar_subquery(&self, select: &Select, env: &Env) -> Result<Value, EngineError> {
        let rel = self.exec.select(select, Some(env), self.ctes)?;
        if rel.columns.len() != 1 {
            return Err(EngineError::TypeError(
                "scalar subquery must select exactly one column".into(),
            ));
        }
        match rel.rows.len() {
            0 => Ok(Value::Null),
            1 => Ok(rel.rows[0][0].clone()),
            _ => Err(EngineError::ScalarSubqueryCardinality),
        }
    }
}

impl Exec<'_> {
    fn query(
        &self,
        q: &Query,
        env: Option<&Env>,
        ctes: Option<&CteScope>,
    ) -> Result<Relation, EngineError> {
        if q.ctes.is_empty() {
            return self.select(&q.select, env, ctes);
        }
        let mut scope = CteScope {
            parent: ctes,
            entries: Vec::new(),
        };
        for cte in &q.ctes {
            let rel = self.select(&cte.query, None, Some(&scope))?;
            scope.entries.push((cte.name.clone(), rel));
        }
        self.select(&q.select, env, Some(&scope))
    }

    fn select(
        &self,
        s: &Select,
        outer: Option<&Env>,
        ctes: Option<&CteScope>,
    ) -> Result<Relation, EngineError> {
        let (frame, mut rows) = match &s.from {
            Some(te) => self.table_rows(te, outer, ctes)?,
            None => (
                Frame {
                    sources: Vec::new(),
                    using: Vec::new(),
                },
                vec![Vec::new()],
            ),
        };
        let evaluator = Evaluator { exec: self, ctes };
        if let Some(pred) = &s.where_clause {
            let mut kept = Vec::with_capacity(rows.len());
            for row in rows {
                let env = Env {
                    parent: outer,
                    kind: EnvKind::Row {
                        frame: &frame,
                        row: &row,
                        peers: None,
                    },
                };
                if evaluator.eval(pred, &env)?.truth()? == Some(true) {
                    kept.push(row);
                }
            }
            rows = kept;
        }
        let columns = output_columns(&s.items, &frame)?;
        let (keys, rollup) = match &s.group_by {
            Some(g) => (&g.keys[..], g.rollup),
            None if s.items.iter().any(has_aggregate_item) => (&[][..], false),
            None => {
                let mut out = Vec::with_capacity(rows.len());
                for row in &rows {
                    let env = Env {
                        parent: outer,
                        kind: EnvKind::Row {
                            frame: &frame,
                            row,
                            peers: Some(&rows),
                        },
                    };
                    out.push(item_row(&evaluator, &s.items, &frame, &env)?);
                }
                return Ok(Relation { columns, rows: out });
            }
        };
        self.grouped(&s.items, &frame, &rows, keys, rollup, outer, ctes, columns)
    }

    #[allow(clippy::too_many_arguments)]
    fn grouped(
        &self,
        items: &[SelectItem],
        frame: &Frame,
        rows: &[Vec<Value>],
        keys: &[Expr],
        rollup: bool,
        outer: Option<&Env>,
        ctes: Option<&CteScope>,
        columns: Vec<Ident>,
    ) -> Result<Relation, EngineError> {
        let evaluator = Evaluator { exec: self, ctes };
        let normalized = keys
            .iter()
            .map(|k| {
                normalize(k, frame).ok_or_else(|| {
                    EngineError::TypeError(format!(
                        "grouping key {} must reference only this select's columns",
                        crate::syntax::print_expr(k)
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let strata: Vec<usize> = if rollup {
            (0..=keys.len()).rev().collect()
        } else {
            vec![keys.len()]
        };
        let mut out = Vec::new();
        for len in strata {
            // Hash-partition on the first `len` keys, then order groups by
            // value; the grand-total stratum is one group even over no rows.
            let mut index: HashMap<Vec<KeyAtom>, usize> = HashMap::new();
            let mut groups: Vec<(Vec<Value>, Vec<Vec<Value>>)> = Vec::new();
            if len == 0 {
                groups.push((Vec::new(), rows.to_vec()));
            } else {
                for row in rows {
                    let env = Env {
                        parent: outer,
                        kind: EnvKind::Row {
                            frame,
                            row,
                            peers: None,
                        },
                    };
                    let mut vals = Vec::with_capacity(len);
                    for k in &keys[..len] {
                        vals.push(evaluator.eval(k, &env)?);
                    }
                    match index.entry(vals.iter().map(value::key_atom).collect()) {
                        Entry::Occupied(e) => groups[*e.get()].1.push(row.clone()),
                        Entry::Vacant(e) => {
                            e.insert(groups.len());
                            groups.push((vals, vec![row.clone()]));
                        }
                    }
                }
                groups.sort_by(|a, b| {
                    a.0.iter()
                        .zip(&b.0)
                        .map(|(x, y)| value::cmp_total(x, y))
                        .find(|o| !o.is_eq())
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
            }
            for (vals, group_rows) in &groups {
                let bindings: Vec<KeyBinding> = normalized
                    .iter()
                    .enumerate()
                    .map(|(i, n)| KeyBinding {
                        normalized: n.clone(),
                        value: vals.get(i).cloned().unwrap_or(Value::Null),
                        rolled: i >= len,
                    })
                    .collect();
                let env = Env {
                    parent: outer,
                    kind: EnvKind::Group {
                        frame,
                        keys: &bindings,
                        rows: group_rows,
                    },
                };
                out.push(item_row(&evaluator, items, frame, &env)?);
            }
        }
        Ok(Relation { columns, rows: out })
    }

    fn table_rows(
        &self,
        te: &TableExpr,
        outer: Option<&Env>,
        ctes: Option<&CteScope>,
    ) -> Result<(Frame, Vec<Vec<Value>>), EngineError> {
        match te {
            TableExpr::Table { name, alias } => {
                let rel = self.named_relation(name, ctes)?;
                let frame = Frame {
                    sources: vec![Source {
                        name: Some(alias.clone().unwrap_or_else(|| name.clone())),
                        columns: rel.columns,
                        offset: 0,
                    }],
                    using: Vec::new(),
                };
                Ok((frame, rel.rows))
            }
            TableExpr::Subquery { query, alias } => {
                let rel = self.select(query, None, ctes)?;
                let frame = Frame {
                    sources: vec![Source {
                        name: alias.clone(),
                        columns: rel.columns,
                        offset: 0,
                    }],
                    using: Vec::new(),
                };
                Ok((frame, rel.rows))
            }
            TableExpr::Join {
                left,
                right,
                kind,
                condition,
            } => {
                let (lf, lrows) = self.table_rows(left, outer, ctes)?;
                let (rf, rrows) = self.table_rows(right, outer, ctes)?;
                self.join(lf, lrows, rf, rrows, *kind, condition, outer, ctes)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn join(
        &self,
        lf: Frame,
        lrows: Vec<Vec<Value>>,
        rf: Frame,
        rrows: Vec<Vec<Value>>,
        kind: JoinKind,
        condition: &JoinCondition,
        outer: Option<&Env>,
        ctes: Option<&CteScope>,
    ) -> Result<(Frame, Vec<Vec<Value>>), EngineError> {
        // USING columns are located per side before the frames merge.
        let pairs = match condition {
            JoinCondition::Using(cols) => cols
                .iter()
                .map(|c| Ok((using_slot(&lf, c)?, using_slot(&rf, c)?)))
                .collect::<Result<Vec<_>, EngineError>>()?,
            JoinCondition::On(_) => Vec::new(),
        };
        let lwidth = lf.width();
        let rwidth = rf.width();
        let mut sources = lf.sources;
        for mut s in rf.sources {
            s.offset += lwidth;
            sources.push(s);
        }
        let mut using = lf.using;
        using.extend(rf.using);
        if let JoinCondition::Using(cols) = condition {
            using.extend(cols.iter().cloned());
        }
        let frame = Frame { sources, using };
        let evaluator = Evaluator { exec: self, ctes };
        let mut out = Vec::new();
        for lrow in &lrows {
            let mut matched = false;
            for rrow in &rrows {
                let keep = match condition {
                    JoinCondition::Using(_) => {
                        let mut all = true;
                        for (li, ri) in &pairs {
                            if value::compare(&lrow[*li], &rrow[*ri])?
                                != Some(std::cmp::Ordering::Equal)
                            {
                                all = false;
                                break;
                            }
                        }
                        all
                    }
                    JoinCondition::On(pred) => {
                        let mut row = lrow.clone();
                        row.extend(rrow.iter().cloned());
                        let env = Env {
                            parent: outer,
                            kind: EnvKind::Row {
                                frame: &frame,
                                row: &row,
                                peers: None,
                            },
                        };
                        evaluator.eval(pred, &env)?.truth()? == Some(true)
                    }
                };
                if keep {
                    matched = true;
                    let mut row = lrow.clone();
                    row.extend(rrow.iter().cloned());
                    out.push(row);
                }
            }
            if !matched && kind == JoinKind::Left {
                let mut row = lrow.clone();
                row.extend(std::iter::repeat_n(Value::Null, rwidth));
                out.push(row);
            }
        }
        Ok((frame, out))
    }

    fn named_relation(
        &self,
        name: &Ident,
        ctes: Option<&CteScope>,
    ) -> Result<Relation, EngineError> {
        if let Some(rel) = ctes.and_then(|c| c.lookup(name)) {
            return Ok(rel.clone());
        }
        let schema = self
            .catalog
            .try_resolve(name)
            .ok_or_else(|| EngineError::TypeError(format!("unknown table {name}")))?;
        match &schema.source {
            TableSource::BaseTable => self
                .db
                .relation(name)
                .cloned()
                .ok_or_else(|| EngineError::MissingRelation(name.clone())),
            TableSource::View(body) => {
                if schema.basis.is_some() {
                    return Err(EngineError::TypeError(format!(
                        "internal: measured view {name} reached the engine unexpanded"
                    )));
                }
                self.query(body, None, None)
            }
        }
    }
}

fn using_slot(frame: &Frame, name: &Ident) -> Result<usize, EngineError> {
    frame
        .slot(None, name)?
        .ok_or_else(|| EngineError::TypeError(format!("USING column {name} not found")))
}

/// An aggregate in the select list makes an ungrouped select one big group.
/// Subqueries and window aggregates keep theirs to themselves.
fn has_aggregate_item(item: &SelectItem) -> bool {
    fn scan(expr: &Expr) -> bool {
        match expr {
            Expr::Aggregate { .. } => true,
            Expr::Binary { left, right, .. } => scan(left) || scan(right),
            Expr::Unary { expr, .. } | Expr::IsNull { expr, .. } => scan(expr),
            Expr::Function { args, .. } => args.iter().any(scan),
            _ => false,
        }
    }
    matches!(item, SelectItem::Expr { expr, .. } if scan(expr))
}

/// Wildcard slots in source order; USING merges to the leftmost copy.
fn wildcard_slots(frame: &Frame, only: Option<&Ident>) -> Vec<(usize, Ident)> {
    let mut out: Vec<(usize, Ident)> = Vec::new();
    for s in &frame.sources {
        if let Some(q) = only {
            if s.name.as_ref() != Some(q) {
                continue;
            }
        }
        for (i, c) in s.columns.iter().enumerate() {
            if only.is_none() && frame.using.contains(c) && out.iter().any(|(_, n)| n == c) {
                continue;
            }
            out.push((s.offset + i, c.clone()));
        }
    }
    out
}

fn output_columns(items: &[SelectItem], frame: &Frame) -> Result<Vec<Ident>, EngineError> {
    let mut out = Vec::new();
    for item in items {
        match item {
            SelectItem::Wildcard => {
                out.extend(wildcard_slots(frame, None).into_iter().map(|(_, n)| n));
            }
            SelectItem::QualifiedWildcard(q) => {
                let slots = wildcard_slots(frame, Some(q));
                if slots.is_empty() {
                    return Err(EngineError::TypeError(format!("unknown source {q}")));
                }
                out.extend(slots.into_iter().map(|(_, n)| n));
            }
            SelectItem::Expr { .. } => out.push(
                item.implied_name()
                    .unwrap_or_else(|| Ident::new(format!("col{}", out.len() + 1))),
            ),
        }
    }
    Ok(out)
}

fn slot_value(slot: usize, env: &Env) -> Result<Value, EngineError> {
    match &env.kind {
        EnvKind::Row { row, .. } => Ok(row[slot].clone()),
        EnvKind::Group { keys, .. } => {
            let norm = slot_expr(slot);
            keys.iter()
                .find(|k| k.normalized == norm)
                .map(KeyBinding::value)
                .ok_or_else(|| {
                    EngineError::TypeError(
                        "SELECT * in a grouped select requires every column to be grouped".into(),
                    )
                })
        }
    }
}

fn item_row(
    evaluator: &Evaluator,
    items: &[SelectItem],
    frame: &Frame,
    env: &Env,
) -> Result<Vec<Value>, EngineError> {
    let mut row = Vec::new();
    for item in items {
        match item {
            SelectItem::Wildcard => {
                for (slot, _) in wildcard_slots(frame, None) {
                    row.push(slot_value(slot, env)?);
                }
            }
            SelectItem::QualifiedWildcard(q) => {
                for (slot, _) in wildcard_slots(frame, Some(q)) {
                    row.push(slot_value(slot, env)?);
                }
            }
            SelectItem::Expr { expr, .. } => row.push(evaluator.eval(expr, env)?),
        }
    }
    Ok(row)
}
