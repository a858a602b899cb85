//! CSV loading against registered table schemas.
//!
//! Files are RFC-4180-style UTF-8 with a header row naming the schema's
//! non-measure columns in order (case-insensitive). An empty field is null;
//! dates accept `YYYY-MM-DD` and `YYYY/MM/DD`.

use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;

use crate::catalog::{ColumnDef, ScalarType, TableSchema};

use super::{EngineError, Relation, Value};

pub fn load_table(path: &Path, schema: &TableSchema) -> Result<Relation, EngineError> {
    let label = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| EngineError::Io {
        path: label.clone(),
        detail: e.to_string(),
    })?;
    read_csv(file, &label, schema)
}

pub fn read_csv(
    input: impl Read,
    label: &str,
    schema: &TableSchema,
) -> Result<Relation, EngineError> {
    let columns: Vec<&ColumnDef> = schema.non_measure_columns().collect();
    let shape = |detail: String| EngineError::CsvShape {
        path: label.to_string(),
        detail,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let headers = reader.headers().map_err(|e| shape(e.to_string()))?.clone();
    if headers.len() != columns.len() {
        return Err(shape(format!(
            "expected {} columns for {}, found {}",
            columns.len(),
            schema.name,
            headers.len()
        )));
    }
    for (header, col) in headers.iter().zip(&columns) {
        if !col.name.matches(header) {
            return Err(shape(format!(
                "header {header:?} does not match column {}",
                col.name
            )));
        }
    }
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| shape(e.to_string()))?;
        let mut row = Vec::with_capacity(columns.len());
        for (field, col) in record.iter().zip(&columns) {
            row.push(
                parse_field(field, col.ty).map_err(|detail| EngineError::CsvParse {
                    path: label.to_string(),
                    row: idx + 1,
                    column: col.name.to_string(),
                    detail,
                })?,
            );
        }
        rows.push(row);
    }
    Ok(Relation {
        columns: columns.iter().map(|c| c.name.clone()).collect(),
        rows,
    })
}

fn parse_field(text: &str, ty: ScalarType) -> Result<Value, String> {
    if text.is_empty() {
        return Ok(Value::Null);
    }
    match ty {
        ScalarType::Varchar => Ok(Value::Varchar(text.to_string())),
        ScalarType::Integer => text
            .parse::<i64>()
            .map(Value::Integer)
            .map_err(|_| format!("not an INTEGER: {text:?}")),
        ScalarType::Double => text
            .parse::<f64>()
            .map(Value::Double)
            .map_err(|_| format!("not a DOUBLE: {text:?}")),
        ScalarType::Date => NaiveDate::parse_from_str(text, "%Y-%m-%d")
            .or_else(|_| NaiveDate::parse_from_str(text, "%Y/%m/%d"))
            .map(Value::Date)
            .map_err(|_| format!("not a DATE: {text:?}")),
        ScalarType::Boolean => {
            if text.eq_ignore_ascii_case("true") {
                Ok(Value::Boolean(true))
            } else if text.eq_ignore_ascii_case("false") {
                Ok(Value::Boolean(false))
            } else {
                Err(format!("not a BOOLEAN: {text:?}"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::catalog::Catalog;
    use crate::syntax::Ident;

    use super::*;

    fn orders_schema() -> Catalog {
        let mut catalog = Catalog::new();
        catalog
            .register_script(
                "CREATE TABLE Orders (prodName VARCHAR, custName VARCHAR,
                                      orderDate DATE, revenue INTEGER, cost INTEGER);",
            )
            .unwrap();
        catalog
    }

    fn read(csv: &str) -> Result<Relation, EngineError> {
        let catalog = orders_schema();
        let schema = catalog.resolve(&Ident::new("Orders")).unwrap();
        read_csv(csv.as_bytes(), "Orders.csv", schema)
    }

    #[test]
    fn parses_typed_rows_and_nulls() {
        let rel = read(
            "prodName,custName,orderDate,revenue,cost\n\
             Happy,Alice,2023-11-28,6,4\n\
             Whizz,,2023/11/25,3,\n",
        )
        .unwrap();
        assert_eq!(rel.rows.len(), 2);
        assert_eq!(rel.rows[0][3], Value::Integer(6));
        assert_eq!(rel.rows[1][1], Value::Null);
        assert_eq!(rel.rows[1][2], Value::date(2023, 11, 25));
        assert_eq!(rel.rows[1][4], Value::Null);
    }

    #[test]
    fn header_must_match_the_schema() {
        let err = read("prodName,custName,orderDate,revenue\nHappy,Alice,2023-11-28,6\n");
        assert!(matches!(err, Err(EngineError::CsvShape { .. })), "{err:?}");
        let err = read("prodName,client,orderDate,revenue,cost\n");
        assert!(matches!(err, Err(EngineError::CsvShape { .. })), "{err:?}");
    }

    #[test]
    fn bad_fields_name_row_and_column() {
        let err = read(
            "prodName,custName,orderDate,revenue,cost\n\
             Happy,Alice,2023-11-28,abc,4\n",
        );
        match err {
            Err(EngineError::CsvParse { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "revenue");
            }
            other => panic!("expected CsvParse, got {other:?}"),
        }
    }

    #[test]
    fn headers_are_case_insensitive() {
        let rel = read("PRODNAME,CUSTNAME,ORDERDATE,REVENUE,COST\n").unwrap();
        assert_eq!(rel.columns[0], Ident::new("prodName"));
        assert!(rel.rows.is_empty());
    }
}
