//! Deterministic SQL rendering for parsed and rewritten statements.
//!
//! Binary operations are always parenthesized, so the printed text has one
//! unambiguous reading and `parse(print(ast))` returns the same tree. The
//! top-level statement breaks before FROM, WHERE and GROUP BY for
//! readability; nested queries render on one line.

use std::fmt::Write;

use super::ast::*;

/// Renders a statement with clause breaks at the top level.
pub fn print_statement(stmt: &Statement) -> String {
    match stmt {
        Statement::Query(q) => print_query(q),
        Statement::CreateTable(t) => {
            let cols: Vec<String> = t
                .columns
                .iter()
                .map(|c| format!("{} {}", c.name, c.ty.as_str()))
                .collect();
            format!("CREATE TABLE {} ({})", t.name, cols.join(", "))
        }
        Statement::CreateView(v) => {
            format!("CREATE VIEW {} AS\n{}", v.name, print_query(&v.query))
        }
    }
}

/// Renders a query with clause breaks at the top level.
pub fn print_query(query: &Query) -> String {
    let mut out = String::new();
    if !query.ctes.is_empty() {
        let ctes: Vec<String> = query
            .ctes
            .iter()
            .map(|c| format!("{} AS ({})", c.name, inline_select(&c.query)))
            .collect();
        let _ = writeln!(out, "WITH {}", ctes.join(",\n     "));
    }
    out.push_str(&select_text(&query.select, "\n"));
    out
}

/// Renders an expression on one line.
pub fn print_expr(expr: &Expr) -> String {
    let mut out = String::new();
    expr_text(expr, &mut out);
    out
}

fn inline_select(select: &Select) -> String {
    select_text(select, " ")
}

fn select_text(select: &Select, sep: &str) -> String {
    let mut out = String::from("SELECT ");
    let items: Vec<String> = select.items.iter().map(item_text).collect();
    out.push_str(&items.join(", "));
    if let Some(from) = &select.from {
        let _ = write!(out, "{sep}FROM {}", table_text(from));
    }
    if let Some(w) = &select.where_clause {
        let _ = write!(out, "{sep}WHERE {}", print_expr(w));
    }
    if let Some(g) = &select.group_by {
        let keys: Vec<String> = g.keys.iter().map(print_expr).collect();
        if g.rollup {
            let _ = write!(out, "{sep}GROUP BY ROLLUP({})", keys.join(", "));
        } else {
            let _ = write!(out, "{sep}GROUP BY {}", keys.join(", "));
        }
    }
    out
}

fn item_text(item: &SelectItem) -> String {
    match item {
        SelectItem::Wildcard => "*".into(),
        SelectItem::QualifiedWildcard(q) => format!("{q}.*"),
        SelectItem::Expr {
            expr,
            alias,
            is_measure,
        } => {
            let mut out = print_expr(expr);
            if let Some(alias) = alias {
                if *is_measure {
                    let _ = write!(out, " AS MEASURE {alias}");
                } else {
                    let _ = write!(out, " AS {alias}");
                }
            }
            out
        }
    }
}

fn table_text(table: &TableExpr) -> String {
    match table {
        TableExpr::Table { name, alias } => match alias {
            Some(a) => format!("{name} AS {a}"),
            None => name.to_string(),
        },
        TableExpr::Subquery { query, alias } => {
            let body = inline_select(query);
            match alias {
                Some(a) => format!("({body}) AS {a}"),
                None => format!("({body})"),
            }
        }
        TableExpr::Join {
            left,
            right,
            kind,
            condition,
        } => {
            let kw = match kind {
                JoinKind::Inner => "INNER JOIN",
                JoinKind::Left => "LEFT JOIN",
            };
            let cond = match condition {
                JoinCondition::On(e) => format!("ON {}", print_expr(e)),
                JoinCondition::Using(cols) => {
                    let names: Vec<String> = cols.iter().map(|c| c.to_string()).collect();
                    format!("USING ({})", names.join(", "))
                }
            };
            format!(
                "{} {kw} {} {cond}",
                table_text(left),
                table_text(right)
            )
        }
    }
}

fn expr_text(expr: &Expr, out: &mut String) {
    match expr {
        Expr::Column { qualifier, name } => {
            if let Some(q) = qualifier {
                let _ = write!(out, "{q}.");
            }
            let _ = write!(out, "{name}");
        }
        Expr::Literal(lit) => literal_text(lit, out),
        Expr::Binary { op, left, right } => {
            out.push('(');
            expr_text(left, out);
            let _ = write!(out, " {} ", op.as_str());
            expr_text(right, out);
            out.push(')');
        }
        Expr::Unary { op, expr } => {
            out.push('(');
            match op {
                UnaryOp::Not => out.push_str("NOT "),
                UnaryOp::Neg => out.push('-'),
            }
            expr_text(expr, out);
            out.push(')');
        }
        Expr::IsNull { expr, negated } => {
            out.push('(');
            expr_text(expr, out);
            if *negated {
                out.push_str(" IS NOT NULL");
            } else {
                out.push_str(" IS NULL");
            }
            out.push(')');
        }
        Expr::Function { name, args } => {
            let rendered: Vec<String> = args.iter().map(print_expr).collect();
            let _ = write!(out, "{name}({})", rendered.join(", "));
        }
        Expr::Aggregate { func, arg } => {
            agg_text(*func, arg.as_deref(), out);
        }
        Expr::WindowAggregate {
            func,
            arg,
            partition_by,
        } => {
            agg_text(*func, arg.as_deref(), out);
            let keys: Vec<String> = partition_by.iter().map(print_expr).collect();
            let _ = write!(out, " OVER (PARTITION BY {})", keys.join(", "));
        }
        Expr::AggregateMeasure { arg } => {
            let _ = write!(out, "AGGREGATE({})", print_expr(arg));
        }
        Expr::At { base, modifiers } => {
            expr_text(base, out);
            out.push_str(" AT (");
            let rendered: Vec<String> = modifiers.iter().map(modifier_text).collect();
            out.push_str(&rendered.join(" "));
            out.push(')');
        }
        Expr::Current { dim } => {
            let _ = write!(out, "CURRENT {}", print_expr(dim));
        }
        Expr::Subquery(select) => {
            let _ = write!(out, "({})", inline_select(select));
        }
        Expr::Exists(select) => {
            let _ = write!(out, "EXISTS ({})", inline_select(select));
        }
    }
}

fn agg_text(func: AggFunc, arg: Option<&Expr>, out: &mut String) {
    match arg {
        Some(a) => {
            let _ = write!(out, "{}({})", func.as_str(), print_expr(a));
        }
        None => {
            let _ = write!(out, "{}(*)", func.as_str());
        }
    }
}

fn modifier_text(modifier: &ContextModifier) -> String {
    match modifier {
        ContextModifier::AllBare => "ALL".into(),
        ContextModifier::All(dims) => {
            let rendered: Vec<String> = dims.iter().map(print_expr).collect();
            format!("ALL {}", rendered.join(", "))
        }
        ContextModifier::Set { dim, value } => {
            format!("SET {} = {}", print_expr(dim), print_expr(value))
        }
        ContextModifier::Visible => "VISIBLE".into(),
        ContextModifier::Where(pred) => format!("WHERE {}", print_expr(pred)),
    }
}

fn literal_text(lit: &Literal, out: &mut String) {
    match lit {
        Literal::Null => out.push_str("NULL"),
        Literal::Integer(n) => {
            let _ = write!(out, "{n}");
        }
        Literal::Double(x) => {
            let _ = write!(out, "{x:?}");
        }
        Literal::String(s) => {
            let _ = write!(out, "'{}'", s.replace('\'', "''"));
        }
        Literal::Boolean(b) => out.push_str(if *b { "TRUE" } else { "FALSE" }),
        Literal::Date(d) => {
            let _ = write!(out, "DATE '{}'", d.format("%Y-%m-%d"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::{parse_query, parse_statement};
    use super::*;

    fn roundtrip(sql: &str) {
        let first = parse_statement(sql).expect("parse input");
        let printed = print_statement(&first);
        let second =
            parse_statement(&printed).unwrap_or_else(|e| panic!("reparse `{printed}`: {e}"));
        assert_eq!(first, second, "printed form: {printed}");
    }

    #[test]
    fn roundtrips_representative_statements() {
        for sql in [
            "SELECT 1",
            "SELECT *, o.*, x AS y FROM Orders AS o",
            "CREATE TABLE Orders (prodName VARCHAR, custName VARCHAR, \
             orderDate DATE, revenue INTEGER, cost INTEGER)",
            "CREATE VIEW EnhancedOrders AS \
             SELECT *, (revenue - cost) / revenue AS MEASURE profitMargin FROM Orders",
            "SELECT prodName, AGGREGATE(profitMargin), COUNT(*) FROM EnhancedOrders \
             WHERE custName = 'Alice' GROUP BY prodName",
            "SELECT m AT (ALL prodName SET year = CURRENT year - 1 VISIBLE WHERE x = 1) FROM t",
            "SELECT m AT (ALL) AT (ALL YEAR(orderDate), prodName) FROM t",
            "SELECT sumRevenue / sumRevenue AT (ALL prodName) AS ratio FROM v",
            "SELECT a IS NOT DISTINCT FROM b, c IS NULL, NOT (d IS NOT NULL) FROM t",
            "SELECT -x, 2.5 * (a + b), 'it''s' FROM t",
            "SELECT DATE '2023-11-28', TRUE, FALSE, NULL FROM t",
            "SELECT (SELECT SUM(i.revenue) FROM Orders AS i WHERE i.k = o.k) FROM Orders AS o",
            "SELECT EXISTS (SELECT 1 FROM s WHERE s.k = t.k) FROM t",
            "SELECT AVG(revenue) OVER (PARTITION BY prodName, custName) FROM Orders",
            "SELECT x FROM a INNER JOIN b ON a.k = b.k LEFT JOIN c USING (k)",
            "SELECT g, SUM(v) FROM t GROUP BY ROLLUP(g, h)",
            "WITH t AS (SELECT 1 AS x), u AS (SELECT x FROM t) SELECT x FROM u",
            "SELECT GROUPING(prodName), YEAR(orderDate) FROM Orders GROUP BY prodName",
        ] {
            roundtrip(sql);
        }
    }

    #[test]
    fn binary_operations_are_parenthesized() {
        let q = parse_query("SELECT a + b * c FROM t").unwrap();
        let text = print_query(&q);
        assert!(text.contains("(a + (b * c))"), "got: {text}");
    }

    #[test]
    fn doubles_print_exactly() {
        let q = parse_query("SELECT 0.1, 2.0, 1e300 FROM t").unwrap();
        let reparsed = parse_query(&print_query(&q)).unwrap();
        assert_eq!(q, reparsed);
    }
}
