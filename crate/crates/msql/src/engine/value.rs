//! Runtime values and the scalar operations over them.
//!
//! Comparisons and boolean connectives follow SQL three-valued logic; only
//! `IS [NOT] DISTINCT FROM` and `IS [NOT] NULL` are total. Division always
//! computes in double precision so that ratios of integer sums come out
//! fractional.

use std::cmp::Ordering;

use chrono::{Datelike, NaiveDate};

use crate::syntax::{AggFunc, BinaryOp, Ident};

use super::EngineError;

/// A single SQL value. `Null` is typeless and compares unknown.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Varchar(String),
    Integer(i64),
    Double(f64),
    Date(NaiveDate),
    Boolean(bool),
}

impl Value {
    pub fn date(year: i32, month: u32, day: u32) -> Value {
        Value::Date(NaiveDate::from_ymd_opt(year, month, day).expect("valid date"))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// Boolean interpretation for WHERE and join conditions; null is unknown.
    pub fn truth(&self) -> Result<Option<bool>, EngineError> {
        match self {
            Value::Null => Ok(None),
            Value::Boolean(b) => Ok(Some(*b)),
            other => Err(EngineError::TypeError(format!(
                "expected BOOLEAN, found {}",
                other.kind()
            ))),
        }
    }

    fn as_double(&self) -> Result<Option<f64>, EngineError> {
        match self {
            Value::Null => Ok(None),
            Value::Integer(i) => Ok(Some(*i as f64)),
            Value::Double(f) => Ok(Some(*f)),
            other => Err(EngineError::TypeError(format!(
                "expected a number, found {}",
                other.kind()
            ))),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Value::Null => "NULL",
            Value::Varchar(_) => "VARCHAR",
            Value::Integer(_) => "INTEGER",
            Value::Double(_) => "DOUBLE",
            Value::Date(_) => "DATE",
            Value::Boolean(_) => "BOOLEAN",
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Value {
        Value::Integer(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Value {
        Value::Double(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Value {
        Value::Varchar(v.to_string())
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Value {
        Value::Boolean(v)
    }
}

fn cmp_f64(x: f64, y: f64) -> Ordering {
    x.partial_cmp(&y).unwrap_or_else(|| x.total_cmp(&y))
}

/// SQL comparison: `None` when either side is null, error on a type clash.
pub(super) fn compare(a: &Value, b: &Value) -> Result<Option<Ordering>, EngineError> {
    use Value::*;
    match (a, b) {
        (Null, _) | (_, Null) => Ok(None),
        (Integer(x), Integer(y)) => Ok(Some(x.cmp(y))),
        (Integer(x), Double(y)) => Ok(Some(cmp_f64(*x as f64, *y))),
        (Double(x), Integer(y)) => Ok(Some(cmp_f64(*x, *y as f64))),
        (Double(x), Double(y)) => Ok(Some(cmp_f64(*x, *y))),
        (Varchar(x), Varchar(y)) => Ok(Some(x.cmp(y))),
        (Date(x), Date(y)) => Ok(Some(x.cmp(y))),
        (Boolean(x), Boolean(y)) => Ok(Some(x.cmp(y))),
        (x, y) => Err(EngineError::TypeError(format!(
            "cannot compare {} with {}",
            x.kind(),
            y.kind()
        ))),
    }
}

/// Null-safe equality: total, mismatched kinds are simply distinct.
pub(super) fn not_distinct(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Null, Value::Null) => true,
        (Value::Null, _) | (_, Value::Null) => false,
        _ => matches!(compare(a, b), Ok(Some(Ordering::Equal))),
    }
}

/// Total order for deterministic output: nulls sort last.
pub(super) fn cmp_total(a: &Value, b: &Value) -> Ordering {
    match (a, b) {
        (Value::Null, Value::Null) => Ordering::Equal,
        (Value::Null, _) => Ordering::Greater,
        (_, Value::Null) => Ordering::Less,
        _ => compare(a, b)
            .ok()
            .flatten()
            .unwrap_or_else(|| rank(a).cmp(&rank(b))),
    }
}

fn rank(v: &Value) -> u8 {
    match v {
        Value::Null => 5,
        Value::Boolean(_) => 0,
        Value::Integer(_) | Value::Double(_) => 1,
        Value::Varchar(_) => 2,
        Value::Date(_) => 3,
    }
}

/// Hash/Eq form for grouping and partitioning: nulls group together,
/// doubles by bit pattern with negative zero normalized.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(super) enum KeyAtom {
    Null,
    Varchar(String),
    Integer(i64),
    Double(u64),
    Date(NaiveDate),
    Boolean(bool),
}

pub(super) fn key_atom(v: &Value) -> KeyAtom {
    match v {
        Value::Null => KeyAtom::Null,
        Value::Varchar(s) => KeyAtom::Varchar(s.clone()),
        Value::Integer(i) => KeyAtom::Integer(*i),
        Value::Double(f) => KeyAtom::Double(if *f == 0.0 { 0.0f64 } else { *f }.to_bits()),
        Value::Date(d) => KeyAtom::Date(*d),
        Value::Boolean(b) => KeyAtom::Boolean(*b),
    }
}

/// `+`, `-`, `*`: integer when both sides are integers, double otherwise.
pub(super) fn arith(op: BinaryOp, a: &Value, b: &Value) -> Result<Value, EngineError> {
    if a.is_null() || b.is_null() {
        return Ok(Value::Null);
    }
    if let (Value::Integer(x), Value::Integer(y)) = (a, b) {
        let r = match op {
            BinaryOp::Add => x.checked_add(*y),
            BinaryOp::Sub => x.checked_sub(*y),
            BinaryOp::Mul => x.checked_mul(*y),
            _ => unreachable!("arith called with {op:?}"),
        };
        return r
            .map(Value::Integer)
            .ok_or_else(|| EngineError::TypeError("integer overflow".into()));
    }
    let x = a.as_double()?.expect("checked non-null");
    let y = b.as_double()?.expect("checked non-null");
    Ok(Value::Double(match op {
        BinaryOp::Add => x + y,
        BinaryOp::Sub => x - y,
        BinaryOp::Mul => x * y,
        _ => unreachable!("arith called with {op:?}"),
    }))
}

/// `/` computes in double precision; a zero denominator is an error only
/// when the numerator is non-null.
pub(super) fn divide(a: &Value, b: &Value) -> Result<Value, EngineError> {
    let (Some(n), Some(d)) = (a.as_double()?, b.as_double()?) else {
        return Ok(Value::Null);
    };
    if d == 0.0 {
        return Err(EngineError::DivisionByZero);
    }
    Ok(Value::Double(n / d))
}

pub(super) fn negate(a: &Value) -> Result<Value, EngineError> {
    match a {
        Value::Null => Ok(Value::Null),
        Value::Integer(i) => i
            .checked_neg()
            .map(Value::Integer)
            .ok_or_else(|| EngineError::TypeError("integer overflow".into())),
        Value::Double(f) => Ok(Value::Double(-f)),
        other => Err(EngineError::TypeError(format!(
            "cannot negate {}",
            other.kind()
        ))),
    }
}

pub(super) fn not(a: &Value) -> Result<Value, EngineError> {
    Ok(match a.truth()? {
        None => Value::Null,
        Some(b) => Value::Boolean(!b),
    })
}

/// SUM and AVG skip nulls and yield null over none; COUNT counts non-nulls.
/// `COUNT(*)` is handled by the caller, which counts rows directly.
pub(super) fn aggregate(func: AggFunc, inputs: Vec<Value>) -> Result<Value, EngineError> {
    match func {
        AggFunc::Count => Ok(Value::Integer(
            inputs.iter().filter(|v| !v.is_null()).count() as i64,
        )),
        AggFunc::Sum => {
            let mut acc: Option<Value> = None;
            for v in inputs {
                if v.is_null() {
                    continue;
                }
                acc = Some(match acc {
                    None => v,
                    Some(a) => arith(BinaryOp::Add, &a, &v)?,
                });
            }
            Ok(acc.unwrap_or(Value::Null))
        }
        AggFunc::Avg => {
            let mut sum = 0.0;
            let mut count = 0usize;
            for v in &inputs {
                if let Some(x) = v.as_double()? {
                    sum += x;
                    count += 1;
                }
            }
            if count == 0 {
                Ok(Value::Null)
            } else {
                Ok(Value::Double(sum / count as f64))
            }
        }
    }
}

/// `YEAR`, `FLOOR`, `CEIL`, `ABS`; `GROUPING` never reaches here.
pub(super) fn scalar_function(name: &Ident, args: &[Value]) -> Result<Value, EngineError> {
    if name.matches("YEAR") {
        return match args {
            [Value::Null] => Ok(Value::Null),
            [Value::Date(d)] => Ok(Value::Integer(i64::from(d.year()))),
            _ => Err(EngineError::TypeError("YEAR expects one DATE".into())),
        };
    }
    if name.matches("FLOOR") || name.matches("CEIL") || name.matches("ABS") {
        return match args {
            [Value::Null] => Ok(Value::Null),
            [Value::Integer(i)] => {
                if name.matches("ABS") {
                    i.checked_abs()
                        .map(Value::Integer)
                        .ok_or_else(|| EngineError::TypeError("integer overflow".into()))
                } else {
                    Ok(Value::Integer(*i))
                }
            }
            [Value::Double(f)] => Ok(Value::Double(if name.matches("FLOOR") {
                f.floor()
            } else if name.matches("CEIL") {
                f.ceil()
            } else {
                f.abs()
            })),
            _ => Err(EngineError::TypeError(format!(
                "{name} expects one number"
            ))),
        };
    }
    Err(EngineError::TypeError(format!("unknown function {name}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparisons_are_unknown_on_null() {
        assert_eq!(compare(&Value::Null, &Value::Integer(1)).unwrap(), None);
        assert_eq!(
            compare(&Value::Integer(1), &Value::Double(1.5)).unwrap(),
            Some(Ordering::Less)
        );
        assert!(compare(&Value::Integer(1), &Value::from("x")).is_err());
    }

    #[test]
    fn not_distinct_is_total() {
        assert!(not_distinct(&Value::Null, &Value::Null));
        assert!(!not_distinct(&Value::Null, &Value::Integer(0)));
        assert!(not_distinct(&Value::Integer(2), &Value::Double(2.0)));
        assert!(!not_distinct(&Value::from("a"), &Value::Integer(1)));
    }

    #[test]
    fn total_order_puts_nulls_last() {
        let mut vals = vec![Value::Null, Value::Integer(2), Value::Integer(1)];
        vals.sort_by(cmp_total);
        assert_eq!(vals, vec![Value::Integer(1), Value::Integer(2), Value::Null]);
    }

    #[test]
    fn division_is_double_and_null_tolerant() {
        assert_eq!(
            divide(&Value::Integer(1), &Value::Integer(2)).unwrap(),
            Value::Double(0.5)
        );
        assert_eq!(divide(&Value::Null, &Value::Integer(0)).unwrap(), Value::Null);
        assert_eq!(divide(&Value::Integer(1), &Value::Null).unwrap(), Value::Null);
        assert!(matches!(
            divide(&Value::Integer(1), &Value::Integer(0)),
            Err(EngineError::DivisionByZero)
        ));
    }

    #[test]
    fn aggregates_skip_nulls() {
        let vals = vec![Value::Integer(6), Value::Null, Value::Integer(7), Value::Integer(4)];
        assert_eq!(aggregate(AggFunc::Sum, vals.clone()).unwrap(), Value::Integer(17));
        assert_eq!(aggregate(AggFunc::Count, vals.clone()).unwrap(), Value::Integer(3));
        assert_eq!(
            aggregate(AggFunc::Avg, vals).unwrap(),
            Value::Double(17.0 / 3.0)
        );
        assert_eq!(aggregate(AggFunc::Sum, vec![Value::Null]).unwrap(), Value::Null);
        assert_eq!(aggregate(AggFunc::Sum, Vec::new()).unwrap(), Value::Null);
        assert_eq!(aggregate(AggFunc::Avg, Vec::new()).unwrap(), Value::Null);
    }

    #[test]
    fn year_reads_the_calendar_year() {
        assert_eq!(
            scalar_function(&Ident::new("YEAR"), &[Value::date(2023, 11, 28)]).unwrap(),
            Value::Integer(2023)
        );
        assert_eq!(
            scalar_function(&Ident::new("year"), &[Value::Null]).unwrap(),
            Value::Null
        );
    }
}
