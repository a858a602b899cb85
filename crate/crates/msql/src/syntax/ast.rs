//! Abstract syntax tree for the measure-extended SQL dialect.
//!
//! Plain SQL parses into the same nodes it would in any small SQL frontend;
//! the extension adds [`Expr::AggregateMeasure`] for `AGGREGATE(m)`,
//! [`Expr::At`] for `m AT (modifiers)`, [`Expr::Current`] for
//! `CURRENT dimension`, and the `is_measure` flag on select items for
//! `expr AS MEASURE name`.

use std::fmt;
use std::hash::{Hash, Hasher};

use chrono::NaiveDate;

/// SQL identifier: case-preserved text, case-insensitive equality and hashing.
#[derive(Debug, Clone)]
pub struct Ident(String);

impl Ident {
    pub fn new(text: impl Into<String>) -> Self {
        Ident(text.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Case-insensitive comparison against a plain string.
    pub fn matches(&self, other: &str) -> bool {
        self.0.eq_ignore_ascii_case(other)
    }
}

impl PartialEq for Ident {
    fn eq(&self, other: &Self) -> bool {
        self.0.eq_ignore_ascii_case(&other.0)
    }
}

impl Eq for Ident {}

impl PartialOrd for Ident {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ident {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .bytes()
            .map(|b| b.to_ascii_lowercase())
            .cmp(other.0.bytes().map(|b| b.to_ascii_lowercase()))
    }
}

impl Hash for Ident {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for b in self.0.bytes() {
            state.write_u8(b.to_ascii_lowercase());
        }
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Ident {
    fn from(s: &str) -> Self {
        Ident::new(s)
    }
}

impl From<String> for Ident {
    fn from(s: String) -> Self {
        Ident::new(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Query(Query),
    CreateTable(CreateTable),
    CreateView(CreateView),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CreateTable {
    pub name: Ident,
    pub columns: Vec<ColumnSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSpec {
    pub name: Ident,
    pub ty: TypeName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeName {
    Varchar,
    Integer,
    Double,
    Date,
    Boolean,
}

impl TypeName {
    pub fn as_str(&self) -> &'static str {
        match self {
            TypeName::Varchar => "VARCHAR",
            TypeName::Integer => "INTEGER",
            TypeName::Double => "DOUBLE",
            TypeName::Date => "DATE",
            TypeName::Boolean => "BOOLEAN",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CreateView {
    pub name: Ident,
    pub query: Query,
}

/// Optional `WITH` list plus the select body.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub ctes: Vec<Cte>,
    pub select: Select,
}

impl Query {
    pub fn plain(select: Select) -> Self {
        Query {
            ctes: Vec::new(),
            select,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cte {
    pub name: Ident,
    pub query: Select,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Select {
    pub items: Vec<SelectItem>,
    pub from: Option<TableExpr>,
    pub where_clause: Option<Expr>,
    pub group_by: Option<GroupBy>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectItem {
    /// `*`
    Wildcard,
    /// `alias.*`
    QualifiedWildcard(Ident),
    Expr {
        expr: Expr,
        alias: Option<Ident>,
        /// `expr AS MEASURE alias`
        is_measure: bool,
    },
}

impl SelectItem {
    /// The output column name this item implies: its alias, the column or
    /// measure it references, or the lowercase aggregate name.
    pub fn implied_name(&self) -> Option<Ident> {
        fn expr_name(expr: &Expr) -> Option<Ident> {
            match expr {
                Expr::Column { name, .. } => Some(name.clone()),
                Expr::AggregateMeasure { arg } => expr_name(arg),
                Expr::At { base, .. } => expr_name(base),
                Expr::Aggregate { func, .. } => {
                    Some(Ident::new(func.as_str().to_ascii_lowercase()))
                }
                Expr::Function { name, .. } => {
                    Some(Ident::new(name.as_str().to_ascii_lowercase()))
                }
                _ => None,
            }
        }
        match self {
            SelectItem::Expr { alias: Some(a), .. } => Some(a.clone()),
            SelectItem::Expr { expr, .. } => expr_name(expr),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TableExpr {
    Table {
        name: Ident,
        alias: Option<Ident>,
    },
    Subquery {
        query: Box<Select>,
        alias: Option<Ident>,
    },
    Join {
        left: Box<TableExpr>,
        right: Box<TableExpr>,
        kind: JoinKind,
        condition: JoinCondition,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinKind {
    Inner,
    Left,
}

#[derive(Debug, Clone, PartialEq)]
pub enum JoinCondition {
    On(Expr),
    Using(Vec<Ident>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupBy {
    /// `GROUP BY ROLLUP(k1, ..., kn)` when true, plain key list otherwise.
    pub rollup: bool,
    pub keys: Vec<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    And,
    Or,
    /// Null-safe equality: never unknown.
    IsNotDistinctFrom,
    IsDistinctFrom,
}

impl BinaryOp {
    pub fn as_str(&self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Eq => "=",
            BinaryOp::NotEq => "<>",
            BinaryOp::Lt => "<",
            BinaryOp::LtEq => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::GtEq => ">=",
            BinaryOp::And => "AND",
            BinaryOp::Or => "OR",
            BinaryOp::IsNotDistinctFrom => "IS NOT DISTINCT FROM",
            BinaryOp::IsDistinctFrom => "IS DISTINCT FROM",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggFunc {
    Sum,
    Count,
    Avg,
}

impl AggFunc {
    pub fn as_str(&self) -> &'static str {
        match self {
            AggFunc::Sum => "SUM",
            AggFunc::Count => "COUNT",
            AggFunc::Avg => "AVG",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Null,
    Integer(i64),
    Double(f64),
    String(String),
    Boolean(bool),
    Date(NaiveDate),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Column {
        qualifier: Option<Ident>,
        name: Ident,
    },
    Literal(Literal),
    Binary {
        op: BinaryOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Unary {
        op: UnaryOp,
        expr: Box<Expr>,
    },
    IsNull {
        expr: Box<Expr>,
        negated: bool,
    },
    /// Scalar function call (`YEAR`, `FLOOR`, `GROUPING`, ...).
    Function {
        name: Ident,
        args: Vec<Expr>,
    },
    /// `SUM(x)`, `COUNT(x)`, `AVG(x)`; `arg` of `None` is `COUNT(*)`.
    Aggregate {
        func: AggFunc,
        arg: Option<Box<Expr>>,
    },
    /// `SUM(x) OVER (PARTITION BY ...)`.
    WindowAggregate {
        func: AggFunc,
        arg: Option<Box<Expr>>,
        partition_by: Vec<Expr>,
    },
    /// `AGGREGATE(measure)`.
    AggregateMeasure {
        arg: Box<Expr>,
    },
    /// `base AT (modifiers)`; the modifier list is never empty.
    At {
        base: Box<Expr>,
        modifiers: Vec<ContextModifier>,
    },
    /// `CURRENT dimension`, legal only inside a SET value expression.
    Current {
        dim: Box<Expr>,
    },
    /// Scalar subquery.
    Subquery(Box<Select>),
    Exists(Box<Select>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ContextModifier {
    /// `ALL` with no arguments: clears the whole context.
    AllBare,
    /// `ALL d1 d2 ...`: drops constraints on the listed dimensions.
    All(Vec<Expr>),
    /// `SET dim = value`.
    Set {
        dim: Expr,
        value: Expr,
    },
    Visible,
    /// `WHERE predicate`.
    Where(Expr),
}

impl Expr {
    pub fn column(name: impl Into<Ident>) -> Expr {
        Expr::Column {
            qualifier: None,
            name: name.into(),
        }
    }

    pub fn qualified(qualifier: impl Into<Ident>, name: impl Into<Ident>) -> Expr {
        Expr::Column {
            qualifier: Some(qualifier.into()),
            name: name.into(),
        }
    }

    pub fn binary(op: BinaryOp, left: Expr, right: Expr) -> Expr {
        Expr::Binary {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn null() -> Expr {
        Expr::Literal(Literal::Null)
    }

    /// Conjunction; `None` operands drop out, two `None`s give `None`.
    pub fn and_opt(left: Option<Expr>, right: Option<Expr>) -> Option<Expr> {
        match (left, right) {
            (Some(l), Some(r)) => Some(Expr::binary(BinaryOp::And, l, r)),
            (Some(e), None) | (None, Some(e)) => Some(e),
            (None, None) => None,
        }
    }

    /// Walks the expression tree, visiting subqueries too.
    pub fn walk(&self, visit: &mut dyn FnMut(&Expr)) {
        visit(self);
        match self {
            Expr::Column { .. } | Expr::Literal(_) => {}
            Expr::Binary { left, right, .. } => {
                left.walk(visit);
                right.walk(visit);
            }
            Expr::Unary { expr, .. } => expr.walk(visit),
            Expr::IsNull { expr, .. } => expr.walk(visit),
            Expr::Function { args, .. } => {
                for a in args {
                    a.walk(visit);
                }
            }
            Expr::Aggregate { arg, .. } => {
                if let Some(a) = arg {
                    a.walk(visit);
                }
            }
            Expr::WindowAggregate {
                arg, partition_by, ..
            } => {
                if let Some(a) = arg {
                    a.walk(visit);
                }
                for k in partition_by {
                    k.walk(visit);
                }
            }
            Expr::AggregateMeasure { arg } => arg.walk(visit),
            Expr::At { base, modifiers } => {
                base.walk(visit);
                for m in modifiers {
                    match m {
                        ContextModifier::AllBare | ContextModifier::Visible => {}
                        ContextModifier::All(dims) => {
                            for d in dims {
                                d.walk(visit);
                            }
                        }
                        ContextModifier::Set { dim, value } => {
                            dim.walk(visit);
                            value.walk(visit);
                        }
                        ContextModifier::Where(p) => p.walk(visit),
                    }
                }
            }
            Expr::Current { dim } => dim.walk(visit),
            Expr::Subquery(q) | Expr::Exists(q) => q.walk_exprs(visit),
        }
    }
}

impl Select {
    /// Visits every expression in the select, including nested subqueries.
    pub fn walk_exprs(&self, visit: &mut dyn FnMut(&Expr)) {
        for item in &self.items {
            if let SelectItem::Expr { expr, .. } = item {
                expr.walk(visit);
            }
        }
        if let Some(from) = &self.from {
            from.walk_exprs(visit);
        }
        if let Some(w) = &self.where_clause {
            w.walk(visit);
        }
        if let Some(g) = &self.group_by {
            for k in &g.keys {
                k.walk(visit);
            }
        }
    }
}

impl TableExpr {
    pub fn walk_exprs(&self, visit: &mut dyn FnMut(&Expr)) {
        match self {
            TableExpr::Table { .. } => {}
            TableExpr::Subquery { query, .. } => query.walk_exprs(visit),
            TableExpr::Join {
                left,
                right,
                condition,
                ..
            } => {
                left.walk_exprs(visit);
                right.walk_exprs(visit);
                if let JoinCondition::On(e) = condition {
                    e.walk(visit);
                }
            }
        }
    }
}

impl Query {
    pub fn walk_exprs(&self, visit: &mut dyn FnMut(&Expr)) {
        for cte in &self.ctes {
            cte.query.walk_exprs(visit);
        }
        self.select.walk_exprs(visit);
    }
}
