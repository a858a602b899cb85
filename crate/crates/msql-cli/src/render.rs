//! Text rendering for query results: an aligned table matching the style
//! used throughout the guide, or CSV for machine consumption.

use std::fmt::Write;

use msql::syntax::Ident;
use msql::{Relation, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
}

pub fn render(rel: &Relation, format: Format, round: Option<usize>) -> String {
    match format {
        Format::Table => render_table(rel, round),
        Format::Csv => render_csv(rel, round),
    }
}

/// Left-aligned columns separated by single spaces, with a `=` rule under
/// the header. Nulls render as empty cells.
pub fn render_table(rel: &Relation, round: Option<usize>) -> String {
    let header: Vec<String> = rel.columns.iter().map(Ident::to_string).collect();
    let body: Vec<Vec<String>> = rel
        .rows
        .iter()
        .map(|row| row.iter().map(|v| format_value(v, round)).collect())
        .collect();
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in &body {
        for (width, cell) in widths.iter_mut().zip(row) {
            *width = (*width).max(cell.len());
        }
    }
    let rule: Vec<String> = widths.iter().map(|w| "=".repeat(*w)).collect();

    let mut out = String::new();
    push_row(&mut out, &header, &widths);
    push_row(&mut out, &rule, &widths);
    for row in &body {
        push_row(&mut out, row, &widths);
    }
    out
}

fn push_row(out: &mut String, cells: &[String], widths: &[usize]) {
    let last = cells.len().saturating_sub(1);
    for (i, (cell, width)) in cells.iter().zip(widths).enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if i == last {
            out.push_str(cell);
        } else {
            let _ = write!(out, "{cell:<width$}");
        }
    }
    out.push('\n');
}

pub fn render_csv(rel: &Relation, round: Option<usize>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = rel.columns.iter().map(Ident::to_string).collect();
    writer.write_record(&header).expect("in-memory write");
    for row in &rel.rows {
        let cells: Vec<String> = row.iter().map(|v| format_value(v, round)).collect();
        writer.write_record(&cells).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory write")).expect("utf8 output")
}

fn format_value(value: &Value, round: Option<usize>) -> String {
    match value {
        Value::Null => String::new(),
        Value::Varchar(s) => s.clone(),
        Value::Integer(n) => n.to_string(),
        Value::Double(x) => format_double(*x, round),
        Value::Date(d) => d.format("%Y-%m-%d").to_string(),
        Value::Boolean(b) => b.to_string(),
    }
}

/// With `round`, fixed decimal places; otherwise up to four decimals with
/// trailing zeros trimmed.
fn format_double(x: f64, round: Option<usize>) -> String {
    match round {
        Some(places) => format!("{x:.places$}"),
        None => {
            let mut s = format!("{x:.4}");
            while s.ends_with('0') {
                s.pop();
            }
            if s.ends_with('.') {
                s.pop();
            }
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Relation {
        Relation {
            columns: vec![
                Ident::new("prodName"),
                Ident::new("profitMargin"),
                Ident::new("count"),
            ],
            rows: vec![
                vec!["Acme".into(), 0.6.into(), 1.into()],
                vec!["Happy".into(), (8.0 / 17.0).into(), 3.into()],
                vec![Value::Null, 2.0.into(), 1.into()],
            ],
        }
    }

    #[test]
    fn table_aligns_and_underlines() {
        let text = render_table(&sample(), Some(2));
        assert_eq!(
            text,
            "prodName profitMargin count\n\
             ======== ============ =====\n\
             Acme     0.60         1\n\
             Happy    0.47         3\n\
             \x20        2.00         1\n"
        );
    }

    #[test]
    fn csv_leaves_nulls_empty() {
        let text = render_csv(&sample(), Some(2));
        assert_eq!(
            text,
            "prodName,profitMargin,count\nAcme,0.60,1\nHappy,0.47,3\n,2.00,1\n"
        );
    }

    #[test]
    fn default_double_formatting_trims() {
        assert_eq!(format_double(3.0 / 7.0, None), "0.4286");
        assert_eq!(format_double(0.2, None), "0.2");
        assert_eq!(format_double(17.0, None), "17");
        assert_eq!(format_double(0.6, Some(2)), "0.60");
    }
}
