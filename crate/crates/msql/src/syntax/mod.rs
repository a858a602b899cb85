//! Lexer, parser, AST and printer for the measure-extended SQL dialect.

pub mod ast;
mod error;
mod lexer;
mod parser;
mod printer;
mod token;

pub use ast::{
    AggFunc, BinaryOp, ColumnSpec, ContextModifier, CreateTable, CreateView, Cte, Expr, GroupBy,
    Ident, JoinCondition, JoinKind, Literal, Query, Select, SelectItem, Statement, TableExpr,
    TypeName, UnaryOp,
};
pub use chrono::NaiveDate;
pub use error::SyntaxError;
pub use parser::{parse_query, parse_script, parse_statement};
pub use printer::{print_expr, print_query, print_statement};
