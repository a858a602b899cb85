//! Proptest strategies: small randomized datasets for the semantic
//! properties, SQL fragments to assemble measure queries from, and random
//! ASTs for parser round-trips.

use msql::syntax::{
    AggFunc, BinaryOp, ContextModifier, Cte, Expr, GroupBy, Ident, JoinCondition, JoinKind,
    Literal, NaiveDate, Query, Select, SelectItem, TableExpr, UnaryOp,
};
use msql::{Relation, Value};
use proptest::prelude::*;

pub const DDL: &str = "CREATE TABLE Customers (custName VARCHAR, custAge INTEGER);
CREATE TABLE Orders (prodName VARCHAR, custName VARCHAR, orderDate DATE, \
revenue INTEGER, cost INTEGER);";

const PRODUCTS: [&str; 3] = ["Acme", "Happy", "Whizz"];
const PEOPLE: [&str; 4] = ["Alice", "Bob", "Celia", "Dave"];

fn opt_str(v: Option<&'static str>) -> Value {
    v.map_or(Value::Null, |s| Value::Varchar(s.to_string()))
}

fn opt_int(v: Option<i64>) -> Value {
    v.map_or(Value::Null, Value::Integer)
}

fn order_row() -> impl Strategy<Value = Vec<Value>> {
    (
        proptest::option::weighted(0.85, proptest::sample::select(&PRODUCTS[..])),
        proptest::option::weighted(0.85, proptest::sample::select(&PEOPLE[..])),
        (2022i32..2026, 1u32..13, 1u32..29),
        proptest::option::weighted(0.85, 0i64..25),
        proptest::option::weighted(0.85, 0i64..12),
    )
        .prop_map(|(prod, cust, (y, m, d), revenue, cost)| {
            vec![
                opt_str(prod),
                opt_str(cust),
                Value::date(y, m, d),
                opt_int(revenue),
                opt_int(cost),
            ]
        })
}

/// Up to 50 order rows over 3 products and 4 customers, with nulls.
pub fn orders() -> impl Strategy<Value = Relation> {
    proptest::collection::vec(order_row(), 0..50).prop_map(|rows| Relation {
        columns: ["prodName", "custName", "orderDate", "revenue", "cost"]
            .map(Ident::new)
            .to_vec(),
        rows,
    })
}

/// A subset of the four known customers, each with an optional age.
pub fn customers() -> impl Strategy<Value = Relation> {
    proptest::collection::vec(
        (any::<bool>(), proptest::option::weighted(0.9, 10i64..70)),
        PEOPLE.len(),
    )
    .prop_map(|specs| Relation {
        columns: ["custName", "custAge"].map(Ident::new).to_vec(),
        rows: PEOPLE
            .iter()
            .zip(specs)
            .filter(|(_, (present, _))| *present)
            .map(|(name, (_, age))| vec![Value::Varchar(name.to_string()), opt_int(age)])
            .collect(),
    })
}

/// Group-key lists for generated grouped queries.
pub fn group_keys() -> impl Strategy<Value = &'static str> {
    proptest::sample::select(
        &[
            "prodName",
            "custName",
            "YEAR(orderDate)",
            "prodName, custName",
            "prodName, YEAR(orderDate)",
        ][..],
    )
}

/// A WHERE clause (possibly empty) over the Orders columns.
pub fn where_clause() -> impl Strategy<Value = String> {
    prop_oneof![
        Just(String::new()),
        (1i64..25).prop_map(|k| format!("WHERE revenue > {k}")),
        Just("WHERE custName <> 'Bob'".to_string()),
        (2022i32..2026).prop_map(|y| format!("WHERE YEAR(orderDate) = {y}")),
    ]
}

/// Aggregatable measure formulas over Orders.
pub fn measure_formula() -> impl Strategy<Value = &'static str> {
    proptest::sample::select(
        &[
            "SUM(revenue)",
            "COUNT(*)",
            "AVG(revenue)",
            "SUM(revenue) - SUM(cost)",
        ][..],
    )
}

/// Measure-free SQL over the Orders/Customers schema, exercising grouping,
/// joins, subqueries, windows, and rollups.
pub fn plain_query() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("SELECT prodName, SUM(revenue) AS total FROM Orders GROUP BY prodName".to_string()),
        (0i64..25).prop_map(|k| format!("SELECT * FROM Orders WHERE revenue > {k}")),
        Just(
            "SELECT o.prodName, c.custAge FROM Orders AS o \
             LEFT JOIN Customers AS c USING (custName)"
                .to_string()
        ),
        Just("SELECT custName, COUNT(*) AS n FROM Orders GROUP BY ROLLUP(custName)".to_string()),
        Just(
            "SELECT (SELECT AVG(c.custAge) FROM Customers AS c \
             WHERE c.custName = o.custName) AS age FROM Orders AS o"
                .to_string()
        ),
        Just(
            "SELECT prodName, AVG(revenue) OVER (PARTITION BY prodName) AS pavg FROM Orders"
                .to_string()
        ),
        (2022i32..2026).prop_map(|y| format!(
            "SELECT YEAR(orderDate) AS yr, SUM(cost) AS c FROM Orders \
             WHERE YEAR(orderDate) <= {y} GROUP BY YEAR(orderDate)"
        )),
    ]
}

/// One context modifier as SQL text.
pub fn modifier() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("ALL".to_string()),
        Just("ALL prodName".to_string()),
        Just("ALL custName, prodName".to_string()),
        Just("ALL YEAR(orderDate)".to_string()),
        proptest::sample::select(&PRODUCTS[..]).prop_map(|p| format!("SET prodName = '{p}'")),
        (2022i32..2026).prop_map(|y| format!("SET YEAR(orderDate) = {y}")),
        Just("SET YEAR(orderDate) = CURRENT YEAR(orderDate) - 1".to_string()),
        Just("VISIBLE".to_string()),
        (1i64..20).prop_map(|k| format!("WHERE revenue > {k}")),
        Just("WHERE custName <> 'Celia'".to_string()),
    ]
}

const NAMES: &[&str] = &[
    "a", "b", "c", "x", "y", "z", "t", "u", "v", "items", "total", "k1", "k2",
];
const FUNCS: &[&str] = &["YEAR", "FLOOR", "CEIL", "ABS", "GROUPING"];

pub fn ident() -> impl Strategy<Value = Ident> {
    proptest::sample::select(NAMES).prop_map(Ident::new)
}

fn func_name() -> impl Strategy<Value = Ident> {
    proptest::sample::select(FUNCS).prop_map(Ident::new)
}

fn literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        Just(Literal::Null),
        (0i64..1000).prop_map(Literal::Integer),
        (0u32..200_000u32).prop_map(|n| Literal::Double(f64::from(n) / 100.0)),
        "[a-z ']{0,8}".prop_map(Literal::String),
        any::<bool>().prop_map(Literal::Boolean),
        (1990i32..2031, 1u32..13, 1u32..29)
            .prop_map(|(y, m, d)| Literal::Date(NaiveDate::from_ymd_opt(y, m, d).unwrap())),
    ]
}

fn column() -> impl Strategy<Value = Expr> {
    prop_oneof![
        ident().prop_map(Expr::column),
        (ident(), ident()).prop_map(|(q, n)| Expr::qualified(q, n)),
    ]
}

/// A dimension reference as the grammar allows after ALL and SET: a column
/// or a function over a column.
fn dimension() -> impl Strategy<Value = Expr> {
    prop_oneof![
        2 => column(),
        1 => (func_name(), ident()).prop_map(|(f, c)| Expr::Function {
            name: f,
            args: vec![Expr::column(c)],
        }),
    ]
}

fn binary_op() -> impl Strategy<Value = BinaryOp> {
    proptest::sample::select(
        &[
            BinaryOp::Add,
            BinaryOp::Sub,
            BinaryOp::Mul,
            BinaryOp::Div,
            BinaryOp::Eq,
            BinaryOp::NotEq,
            BinaryOp::Lt,
            BinaryOp::LtEq,
            BinaryOp::Gt,
            BinaryOp::GtEq,
            BinaryOp::And,
            BinaryOp::Or,
            BinaryOp::IsNotDistinctFrom,
            BinaryOp::IsDistinctFrom,
        ][..],
    )
}

fn agg_parts(inner: BoxedStrategy<Expr>) -> impl Strategy<Value = (AggFunc, Option<Box<Expr>>)> {
    prop_oneof![
        Just((AggFunc::Count, None)),
        (
            proptest::sample::select(&[AggFunc::Sum, AggFunc::Count, AggFunc::Avg][..]),
            inner
        )
            .prop_map(|(f, a)| (f, Some(Box::new(a)))),
    ]
}

fn arb_modifier(depth: u32) -> BoxedStrategy<ContextModifier> {
    prop_oneof![
        Just(ContextModifier::AllBare),
        proptest::collection::vec(dimension(), 1..3).prop_map(ContextModifier::All),
        (dimension(), arb_expr(depth)).prop_map(|(dim, value)| ContextModifier::Set { dim, value }),
        (dimension(), dimension()).prop_map(|(dim, cur)| ContextModifier::Set {
            dim,
            value: Expr::Current { dim: Box::new(cur) },
        }),
        Just(ContextModifier::Visible),
        arb_expr(depth).prop_map(ContextModifier::Where),
    ]
    .boxed()
}

pub fn arb_expr(depth: u32) -> BoxedStrategy<Expr> {
    let leaf = prop_oneof![literal().prop_map(Expr::Literal), column()];
    if depth == 0 {
        return leaf.boxed();
    }
    let inner = arb_expr(depth - 1);
    prop_oneof![
        3 => leaf,
        3 => (binary_op(), inner.clone(), inner.clone())
            .prop_map(|(op, l, r)| Expr::binary(op, l, r)),
        1 => (
            proptest::sample::select(&[UnaryOp::Not, UnaryOp::Neg][..]),
            inner.clone()
        )
            .prop_map(|(op, e)| Expr::Unary { op, expr: Box::new(e) }),
        1 => (inner.clone(), any::<bool>())
            .prop_map(|(e, negated)| Expr::IsNull { expr: Box::new(e), negated }),
        1 => (func_name(), inner.clone())
            .prop_map(|(name, a)| Expr::Function { name, args: vec![a] }),
        1 => agg_parts(inner.clone()).prop_map(|(func, arg)| Expr::Aggregate { func, arg }),
        1 => (agg_parts(inner.clone()), proptest::collection::vec(inner.clone(), 1..3)).prop_map(
            |((func, arg), partition_by)| Expr::WindowAggregate { func, arg, partition_by }
        ),
        1 => inner.clone().prop_map(|e| Expr::AggregateMeasure { arg: Box::new(e) }),
        1 => (inner.clone(), proptest::collection::vec(arb_modifier(depth - 1), 1..3))
            .prop_map(|(b, modifiers)| Expr::At { base: Box::new(b), modifiers }),
        1 => arb_select(depth - 1).prop_map(|s| Expr::Subquery(Box::new(s))),
        1 => arb_select(depth - 1).prop_map(|s| Expr::Exists(Box::new(s))),
    ]
    .boxed()
}

fn table_primary(depth: u32) -> BoxedStrategy<TableExpr> {
    let base = (ident(), proptest::option::of(ident()))
        .prop_map(|(name, alias)| TableExpr::Table { name, alias });
    if depth == 0 {
        return base.boxed();
    }
    prop_oneof![
        2 => base,
        1 => (arb_select(depth - 1), proptest::option::of(ident())).prop_map(|(q, alias)| {
            TableExpr::Subquery { query: Box::new(q), alias }
        }),
    ]
    .boxed()
}

fn join_condition(depth: u32) -> impl Strategy<Value = JoinCondition> {
    prop_oneof![
        arb_expr(depth).prop_map(JoinCondition::On),
        proptest::collection::vec(ident(), 1..3).prop_map(JoinCondition::Using),
    ]
}

/// Left-deep join trees, the only shape the grammar produces.
fn arb_table(depth: u32) -> BoxedStrategy<TableExpr> {
    (
        table_primary(depth),
        proptest::collection::vec(
            (
                proptest::sample::select(&[JoinKind::Inner, JoinKind::Left][..]),
                table_primary(depth),
                join_condition(depth),
            ),
            0..3,
        ),
    )
        .prop_map(|(first, joins)| {
            joins
                .into_iter()
                .fold(first, |left, (kind, right, condition)| TableExpr::Join {
                    left: Box::new(left),
                    right: Box::new(right),
                    kind,
                    condition,
                })
        })
        .boxed()
}

pub fn arb_select(depth: u32) -> BoxedStrategy<Select> {
    let item = prop_oneof![
        1 => Just(SelectItem::Wildcard),
        1 => ident().prop_map(SelectItem::QualifiedWildcard),
        4 => (arb_expr(depth), proptest::option::of(ident()), any::<bool>()).prop_map(
            |(expr, alias, measure)| SelectItem::Expr {
                expr,
                is_measure: measure && alias.is_some(),
                alias,
            }
        ),
    ];
    (
        proptest::collection::vec(item, 1..4),
        proptest::option::of(arb_table(depth)),
        proptest::option::of(arb_expr(depth)),
        proptest::option::of(
            (any::<bool>(), proptest::collection::vec(arb_expr(depth), 1..3))
                .prop_map(|(rollup, keys)| GroupBy { rollup, keys }),
        ),
    )
        .prop_map(|(items, from, where_clause, group_by)| Select {
            items,
            from,
            where_clause,
            group_by,
        })
        .boxed()
}

/// Random queries with up to two CTEs.
pub fn arb_query() -> impl Strategy<Value = Query> {
    (
        proptest::collection::vec(
            (ident(), arb_select(1)).prop_map(|(name, query)| Cte { name, query }),
            0..3,
        ),
        arb_select(2),
    )
        .prop_map(|(ctes, select)| Query { ctes, select })
}
