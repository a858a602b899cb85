//! Recursive-descent parser for the measure-extended dialect.
//!
//! Extension words (`MEASURE`, `AT`, `AGGREGATE`, `ALL`, `SET`, `VISIBLE`,
//! `CURRENT`, `ROLLUP`, `EVAL`) are recognized positionally so that plain SQL
//! using them as identifiers still parses. Inside an `AT (...)` modifier list
//! the words `ALL`, `SET` and `VISIBLE` always start a new modifier and
//! therefore cannot appear as dimension names there.
//!
//! Operator precedence, loosest to tightest: `OR`, `AND`, `NOT`,
//! comparisons (including `IS [NOT] NULL` and `IS [NOT] DISTINCT FROM`),
//! `+ -`, `* /`, unary `-`, postfix `AT (...)`. `a / b AT (ALL)` therefore
//! parses as `a / (b AT (ALL))`.

use chrono::NaiveDate;

use super::ast::*;
use super::error::SyntaxError;
use super::lexer::Lexer;
use super::token::{Keyword, Token, TokenKind};

/// Parses a single statement; trailing semicolon optional.
pub fn parse_statement(input: &str) -> Result<Statement, SyntaxError> {
    let mut p = Parser::new(input)?;
    let stmt = p.statement()?;
    p.eat(&TokenKind::Semicolon);
    p.expect_eof()?;
    Ok(stmt)
}

/// Parses a semicolon-separated script, e.g. a schema file.
pub fn parse_script(input: &str) -> Result<Vec<Statement>, SyntaxError> {
    let mut p = Parser::new(input)?;
    let mut stmts = Vec::new();
    loop {
        while p.eat(&TokenKind::Semicolon) {}
        if p.at_eof() {
            break;
        }
        stmts.push(p.statement()?);
        if !p.at_eof() {
            p.expect(&TokenKind::Semicolon)?;
        }
    }
    Ok(stmts)
}

/// Parses a query (no DDL), the form accepted by `run` and `transpile`.
pub fn parse_query(input: &str) -> Result<Query, SyntaxError> {
    match parse_statement(input)? {
        Statement::Query(q) => Ok(q),
        Statement::CreateTable(t) => Err(SyntaxError {
            pos: super::token::Pos { line: 1, column: 1 },
            expected: vec!["query".into()],
            found: format!("CREATE TABLE {}", t.name),
        }),
        Statement::CreateView(v) => Err(SyntaxError {
            pos: super::token::Pos { line: 1, column: 1 },
            expected: vec!["query".into()],
            found: format!("CREATE VIEW {}", v.name),
        }),
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(input: &str) -> Result<Self, SyntaxError> {
        let tokens = Lexer::new(input).tokenize()?;
        Ok(Parser { tokens, pos: 0 })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &Token {
        let idx = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[idx]
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek().kind, TokenKind::Eof)
    }

    fn check(&self, kind: &TokenKind) -> bool {
        &self.peek().kind == kind
    }

    fn check_kw(&self, kw: Keyword) -> bool {
        matches!(&self.peek().kind, TokenKind::Keyword(k) if *k == kw)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.check(kind) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: Keyword) -> bool {
        if self.check_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: &TokenKind) -> Result<Token, SyntaxError> {
        if self.check(kind) {
            Ok(self.advance())
        } else {
            Err(self.error(&[&kind.describe()]))
        }
    }

    fn expect_kw(&mut self, kw: Keyword) -> Result<(), SyntaxError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(&[kw.as_str()]))
        }
    }

    fn expect_eof(&mut self) -> Result<(), SyntaxError> {
        if self.at_eof() {
            Ok(())
        } else {
            Err(self.error(&["end of input"]))
        }
    }

    /// True when the current token is an identifier spelled `word`.
    fn check_word(&self, word: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if s.eq_ignore_ascii_case(word))
    }

    fn word_at(&self, offset: usize, word: &str) -> bool {
        matches!(&self.peek_at(offset).kind, TokenKind::Ident(s) if s.eq_ignore_ascii_case(word))
    }

    fn eat_word(&mut self, word: &str) -> bool {
        if self.check_word(word) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_ident(&mut self) -> Result<Ident, SyntaxError> {
        match &self.peek().kind {
            TokenKind::Ident(s) => {
                let id = Ident::new(s.clone());
                self.advance();
                Ok(id)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        SyntaxError {
            pos: self.peek().pos,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().kind.describe(),
        }
    }

    fn statement(&mut self) -> Result<Statement, SyntaxError> {
        if self.check_kw(Keyword::Create) {
            self.create_statement()
        } else {
            Ok(Statement::Query(self.query()?))
        }
    }

    fn create_statement(&mut self) -> Result<Statement, SyntaxError> {
        self.expect_kw(Keyword::Create)?;
        if self.eat_kw(Keyword::Table) {
            let name = self.expect_ident()?;
            self.expect(&TokenKind::LParen)?;
            let mut columns = Vec::new();
            loop {
                let col = self.expect_ident()?;
                let ty = self.type_name()?;
                columns.push(ColumnSpec { name: col, ty });
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
            self.expect(&TokenKind::RParen)?;
            Ok(Statement::CreateTable(CreateTable { name, columns }))
        } else if self.eat_kw(Keyword::View) {
            let name = self.expect_ident()?;
            self.expect_kw(Keyword::As)?;
            let query = self.query()?;
            Ok(Statement::CreateView(CreateView { name, query }))
        } else {
            Err(self.error(&["TABLE", "VIEW"]))
        }
    }

    fn type_name(&mut self) -> Result<TypeName, SyntaxError> {
        let ty = match &self.peek().kind {
            TokenKind::Ident(s) if s.eq_ignore_ascii_case("VARCHAR") => TypeName::Varchar,
            TokenKind::Ident(s) if s.eq_ignore_ascii_case("INTEGER") => TypeName::Integer,
            TokenKind::Ident(s) if s.eq_ignore_ascii_case("INT") => TypeName::Integer,
            TokenKind::Ident(s) if s.eq_ignore_ascii_case("DOUBLE") => TypeName::Double,
            TokenKind::Ident(s) if s.eq_ignore_ascii_case("BOOLEAN") => TypeName::Boolean,
            TokenKind::Keyword(Keyword::Date) => TypeName::Date,
            _ => {
                return Err(self.error(&["type name"]));
            }
        };
        self.advance();
        // VARCHAR(n): length accepted and ignored.
        if ty == TypeName::Varchar && self.eat(&TokenKind::LParen) {
            match self.peek().kind {
                TokenKind::Integer(_) => {
                    self.advance();
                }
                _ => return Err(self.error(&["length"])),
            }
            self.expect(&TokenKind::RParen)?;
        }
        Ok(ty)
    }

    fn query(&mut self) -> Result<Query, SyntaxError> {
        let mut ctes = Vec::new();
        if self.eat_kw(Keyword::With) {
            loop {
                let name = self.expect_ident()?;
                self.expect_kw(Keyword::As)?;
                self.expect(&TokenKind::LParen)?;
                let query = self.select()?;
                self.expect(&TokenKind::RParen)?;
                ctes.push(Cte { name, query });
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        let select = self.select()?;
        Ok(Query { ctes, select })
    }

    fn select(&mut self) -> Result<Select, SyntaxError> {
        self.expect_kw(Keyword::Select)?;
        let mut items = vec![self.select_item()?];
        while self.eat(&TokenKind::Comma) {
            items.push(self.select_item()?);
        }
        let from = if self.eat_kw(Keyword::From) {
            Some(self.table_expr()?)
        } else {
            None
        };
        let where_clause = if self.eat_kw(Keyword::Where) {
            Some(self.expr()?)
        } else {
            None
        };
        let group_by = if self.eat_kw(Keyword::Group) {
            self.expect_kw(Keyword::By)?;
            Some(self.group_by()?)
        } else {
            None
        };
        Ok(Select {
            items,
            from,
            where_clause,
            group_by,
        })
    }

    fn select_item(&mut self) -> Result<SelectItem, SyntaxError> {
        if self.eat(&TokenKind::Star) {
            return Ok(SelectItem::Wildcard);
        }
        if let TokenKind::Ident(_) = &self.peek().kind {
            if self.peek_at(1).kind == TokenKind::Dot && self.peek_at(2).kind == TokenKind::Star {
                let qualifier = self.expect_ident()?;
                self.advance();
                self.advance();
                return Ok(SelectItem::QualifiedWildcard(qualifier));
            }
        }
        let expr = self.expr()?;
        let mut is_measure = false;
        let alias = if self.eat_kw(Keyword::As) {
            if self.check_word("MEASURE") && matches!(self.peek_at(1).kind, TokenKind::Ident(_)) {
                self.advance();
                is_measure = true;
            }
            Some(self.expect_ident()?)
        } else if matches!(&self.peek().kind, TokenKind::Ident(_)) {
            Some(self.expect_ident()?)
        } else {
            None
        };
        Ok(SelectItem::Expr {
            expr,
            alias,
            is_measure,
        })
    }

    fn table_expr(&mut self) -> Result<TableExpr, SyntaxError> {
        let mut left = self.table_primary()?;
        loop {
            let kind = if self.eat_kw(Keyword::Join) {
                JoinKind::Inner
            } else if self.check_kw(Keyword::Inner) {
                self.advance();
                self.expect_kw(Keyword::Join)?;
                JoinKind::Inner
            } else if self.check_kw(Keyword::Left) {
                self.advance();
                self.eat_word("OUTER");
                self.expect_kw(Keyword::Join)?;
                JoinKind::Left
            } else {
                break;
            };
            let right = self.table_primary()?;
            let condition = if self.eat_kw(Keyword::On) {
                JoinCondition::On(self.expr()?)
            } else if self.eat_kw(Keyword::Using) {
                self.expect(&TokenKind::LParen)?;
                let mut cols = vec![self.expect_ident()?];
                while self.eat(&TokenKind::Comma) {
                    cols.push(self.expect_ident()?);
                }
                self.expect(&TokenKind::RParen)?;
                JoinCondition::Using(cols)
            } else {
                return Err(self.error(&["ON", "USING"]));
            };
            left = TableExpr::Join {
                left: Box::new(left),
                right: Box::new(right),
                kind,
                condition,
            };
        }
        Ok(left)
    }

    fn table_primary(&mut self) -> Result<TableExpr, SyntaxError> {
        if self.eat(&TokenKind::LParen) {
            let query = self.select()?;
            self.expect(&TokenKind::RParen)?;
            let alias = self.table_alias()?;
            return Ok(TableExpr::Subquery {
                query: Box::new(query),
                alias,
            });
        }
        let name = self.expect_ident()?;
        let alias = self.table_alias()?;
        Ok(TableExpr::Table { name, alias })
    }

    fn table_alias(&mut self) -> Result<Option<Ident>, SyntaxError> {
        if self.eat_kw(Keyword::As) {
            return Ok(Some(self.expect_ident()?));
        }
        if let TokenKind::Ident(_) = &self.peek().kind {
            return Ok(Some(self.expect_ident()?));
        }
        Ok(None)
    }

    fn group_by(&mut self) -> Result<GroupBy, SyntaxError> {
        if self.check_word("ROLLUP") && self.peek_at(1).kind == TokenKind::LParen {
            self.advance();
            self.advance();
            let mut keys = vec![self.expr()?];
            while self.eat(&TokenKind::Comma) {
                keys.push(self.expr()?);
            }
            self.expect(&TokenKind::RParen)?;
            return Ok(GroupBy { rollup: true, keys });
        }
        let mut keys = vec![self.expr()?];
        while self.eat(&TokenKind::Comma) {
            keys.push(self.expr()?);
        }
        Ok(GroupBy {
            rollup: false,
            keys,
        })
    }

    pub(crate) fn expr(&mut self) -> Result<Expr, SyntaxError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut left = self.and_expr()?;
        while self.eat_kw(Keyword::Or) {
            let right = self.and_expr()?;
            left = Expr::binary(BinaryOp::Or, left, right);
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut left = self.not_expr()?;
        while self.eat_kw(Keyword::And) {
            let right = self.not_expr()?;
            left = Expr::binary(BinaryOp::And, left, right);
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat_kw(Keyword::Not) {
            let expr = self.not_expr()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Not,
                expr: Box::new(expr),
            });
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, SyntaxError> {
        let left = self.additive()?;
        let op = match &self.peek().kind {
            TokenKind::Eq => BinaryOp::Eq,
            TokenKind::NotEq => BinaryOp::NotEq,
            TokenKind::Lt => BinaryOp::Lt,
            TokenKind::LtEq => BinaryOp::LtEq,
            TokenKind::Gt => BinaryOp::Gt,
            TokenKind::GtEq => BinaryOp::GtEq,
            TokenKind::Keyword(Keyword::Is) => {
                self.advance();
                let negated = self.eat_kw(Keyword::Not);
                if self.eat_kw(Keyword::Null) {
                    return Ok(Expr::IsNull {
                        expr: Box::new(left),
                        negated,
                    });
                }
                self.expect_kw(Keyword::Distinct)?;
                self.expect_kw(Keyword::From)?;
                let right = self.additive()?;
                let op = if negated {
                    BinaryOp::IsNotDistinctFrom
                } else {
                    BinaryOp::IsDistinctFrom
                };
                return Ok(Expr::binary(op, left, right));
            }
            _ => return Ok(left),
        };
        self.advance();
        let right = self.additive()?;
        Ok(Expr::binary(op, left, right))
    }

    fn additive(&mut self) -> Result<Expr, SyntaxError> {
        let mut left = self.multiplicative()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Plus => BinaryOp::Add,
                TokenKind::Minus => BinaryOp::Sub,
                _ => break,
            };
            self.advance();
            let right = self.multiplicative()?;
            left = Expr::binary(op, left, right);
        }
        Ok(left)
    }

    fn multiplicative(&mut self) -> Result<Expr, SyntaxError> {
        let mut left = self.unary()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Star => BinaryOp::Mul,
                TokenKind::Slash => BinaryOp::Div,
                _ => break,
            };
            self.advance();
            let right = self.unary()?;
            left = Expr::binary(op, left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat(&TokenKind::Minus) {
            let expr = self.unary()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Neg,
                expr: Box::new(expr),
            });
        }
        self.postfix()
    }

    /// `AT` is recognized only when followed by `(`, so a column aliased
    /// `at` still parses in plain SQL.
    fn postfix(&mut self) -> Result<Expr, SyntaxError> {
        let mut expr = self.primary()?;
        while self.check_word("AT") && self.peek_at(1).kind == TokenKind::LParen {
            self.advance();
            self.advance();
            let modifiers = self.modifier_list()?;
            expr = Expr::At {
                base: Box::new(expr),
                modifiers,
            };
        }
        Ok(expr)
    }

    fn modifier_list(&mut self) -> Result<Vec<ContextModifier>, SyntaxError> {
        let mut modifiers = Vec::new();
        while !self.check(&TokenKind::RParen) {
            modifiers.push(self.modifier()?);
        }
        if modifiers.is_empty() {
            return Err(self.error(&["context modifier"]));
        }
        self.expect(&TokenKind::RParen)?;
        Ok(modifiers)
    }

    fn modifier(&mut self) -> Result<ContextModifier, SyntaxError> {
        if self.eat_word("ALL") {
            let mut dims = Vec::new();
            while self.starts_dimension() {
                dims.push(self.dimension_expr()?);
                self.eat(&TokenKind::Comma);
            }
            if dims.is_empty() {
                return Ok(ContextModifier::AllBare);
            }
            return Ok(ContextModifier::All(dims));
        }
        if self.eat_word("SET") {
            let dim = self.dimension_expr()?;
            self.expect(&TokenKind::Eq)?;
            let value = self.expr()?;
            return Ok(ContextModifier::Set { dim, value });
        }
        if self.eat_word("VISIBLE") {
            return Ok(ContextModifier::Visible);
        }
        if self.eat_kw(Keyword::Where) {
            let pred = self.expr()?;
            return Ok(ContextModifier::Where(pred));
        }
        Err(self.error(&["ALL", "SET", "VISIBLE", "WHERE"]))
    }

    fn starts_dimension(&self) -> bool {
        match &self.peek().kind {
            TokenKind::Ident(s) => {
                !s.eq_ignore_ascii_case("ALL")
                    && !s.eq_ignore_ascii_case("SET")
                    && !s.eq_ignore_ascii_case("VISIBLE")
            }
            _ => false,
        }
    }

    /// A dimension reference: a column, optionally qualified, or a function
    /// over dimensions (an ad hoc dimension such as `YEAR(orderDate)`).
    fn dimension_expr(&mut self) -> Result<Expr, SyntaxError> {
        let name = self.expect_ident()?;
        if self.eat(&TokenKind::LParen) {
            let mut args = Vec::new();
            if !self.check(&TokenKind::RParen) {
                args.push(self.expr()?);
                while self.eat(&TokenKind::Comma) {
                    args.push(self.expr()?);
                }
            }
            self.expect(&TokenKind::RParen)?;
            return Ok(Expr::Function { name, args });
        }
        if self.eat(&TokenKind::Dot) {
            let column = self.expect_ident()?;
            return Ok(Expr::Column {
                qualifier: Some(name),
                name: column,
            });
        }
        Ok(Expr::Column {
            qualifier: None,
            name,
        })
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        match self.peek().kind.clone() {
            TokenKind::Integer(n) => {
                self.advance();
                Ok(Expr::Literal(Literal::Integer(n)))
            }
            TokenKind::Double(x) => {
                self.advance();
                Ok(Expr::Literal(Literal::Double(x)))
            }
            TokenKind::String(s) => {
                self.advance();
                Ok(Expr::Literal(Literal::String(s)))
            }
            TokenKind::Keyword(Keyword::Null) => {
                self.advance();
                Ok(Expr::Literal(Literal::Null))
            }
            TokenKind::Keyword(Keyword::True) => {
                self.advance();
                Ok(Expr::Literal(Literal::Boolean(true)))
            }
            TokenKind::Keyword(Keyword::False) => {
                self.advance();
                Ok(Expr::Literal(Literal::Boolean(false)))
            }
            TokenKind::Keyword(Keyword::Date) => {
                self.advance();
                self.date_literal()
            }
            TokenKind::Keyword(Keyword::Exists) => {
                self.advance();
                self.expect(&TokenKind::LParen)?;
                let select = self.select()?;
                self.expect(&TokenKind::RParen)?;
                Ok(Expr::Exists(Box::new(select)))
            }
            TokenKind::LParen => {
                self.advance();
                if self.check_kw(Keyword::Select) {
                    let select = self.select()?;
                    self.expect(&TokenKind::RParen)?;
                    return Ok(Expr::Subquery(Box::new(select)));
                }
                let expr = self.expr()?;
                self.expect(&TokenKind::RParen)?;
                Ok(expr)
            }
            TokenKind::Ident(word) => self.ident_expr(&word),
            _ => Err(self.error(&["expression"])),
        }
    }

    fn date_literal(&mut self) -> Result<Expr, SyntaxError> {
        let pos = self.peek().pos;
        match self.peek().kind.clone() {
            TokenKind::String(s) => {
                let normalized = s.replace('/', "-");
                match NaiveDate::parse_from_str(&normalized, "%Y-%m-%d") {
                    Ok(d) => {
                        self.advance();
                        Ok(Expr::Literal(Literal::Date(d)))
                    }
                    Err(_) => Err(SyntaxError {
                        pos,
                        expected: vec!["date in YYYY-MM-DD form".into()],
                        found: format!("'{s}'"),
                    }),
                }
            }
            _ => Err(self.error(&["date string"])),
        }
    }

    fn ident_expr(&mut self, word: &str) -> Result<Expr, SyntaxError> {
        // CURRENT dim reads the dimension's value from the context being
        // built; it binds to the dimension reference alone.
        if word.eq_ignore_ascii_case("CURRENT")
            && matches!(self.peek_at(1).kind, TokenKind::Ident(_))
            && !self.word_at(1, "AT")
        {
            self.advance();
            let dim = self.dimension_expr()?;
            return Ok(Expr::Current { dim: Box::new(dim) });
        }

        if self.peek_at(1).kind == TokenKind::LParen {
            return self.call_expr();
        }

        let name = self.expect_ident()?;
        if self.eat(&TokenKind::Dot) {
            let column = self.expect_ident()?;
            return Ok(Expr::Column {
                qualifier: Some(name),
                name: column,
            });
        }
        Ok(Expr::Column {
            qualifier: None,
            name,
        })
    }

    fn call_expr(&mut self) -> Result<Expr, SyntaxError> {
        let name = self.expect_ident()?;
        self.expect(&TokenKind::LParen)?;

        if name.matches("AGGREGATE") {
            let arg = self.expr()?;
            self.expect(&TokenKind::RParen)?;
            return Ok(Expr::AggregateMeasure { arg: Box::new(arg) });
        }

        // EVAL(e) marks an expansion result; it adds nothing beyond e.
        if name.matches("EVAL") {
            let inner = self.expr()?;
            self.expect(&TokenKind::RParen)?;
            return Ok(inner);
        }

        let agg = if name.matches("SUM") {
            Some(AggFunc::Sum)
        } else if name.matches("COUNT") {
            Some(AggFunc::Count)
        } else if name.matches("AVG") {
            Some(AggFunc::Avg)
        } else {
            None
        };

        if let Some(func) = agg {
            let arg = if func == AggFunc::Count && self.eat(&TokenKind::Star) {
                None
            } else {
                Some(Box::new(self.expr()?))
            };
            self.expect(&TokenKind::RParen)?;
            if self.eat_kw(Keyword::Over) {
                self.expect(&TokenKind::LParen)?;
                self.expect_kw(Keyword::Partition)?;
                self.expect_kw(Keyword::By)?;
                let mut partition_by = vec![self.expr()?];
                while self.eat(&TokenKind::Comma) {
                    partition_by.push(self.expr()?);
                }
                self.expect(&TokenKind::RParen)?;
                return Ok(Expr::WindowAggregate {
                    func,
                    arg,
                    partition_by,
                });
            }
            return Ok(Expr::Aggregate { func, arg });
        }

        let mut args = Vec::new();
        if !self.check(&TokenKind::RParen) {
            args.push(self.expr()?);
            while self.eat(&TokenKind::Comma) {
                args.push(self.expr()?);
            }
        }
        self.expect(&TokenKind::RParen)?;
        Ok(Expr::Function { name, args })
    }
}
