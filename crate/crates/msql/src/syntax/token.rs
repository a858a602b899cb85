use std::fmt;

/// Reserved words. Everything else (including `MEASURE`, `AT`, `AGGREGATE`,
/// `CURRENT`, `ALL`, `SET`, `VISIBLE`, `EVAL`, `ROLLUP` and the type names)
/// lexes as a plain identifier and is recognized positionally by the parser,
/// so plain SQL that uses those words as column names keeps working.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Select,
    From,
    Where,
    Group,
    By,
    As,
    Join,
    Left,
    Inner,
    On,
    Using,
    With,
    Create,
    Table,
    View,
    And,
    Or,
    Not,
    Is,
    Distinct,
    Null,
    True,
    False,
    Date,
    Exists,
    Over,
    Partition,
}

impl Keyword {
    pub fn from_ident(text: &str) -> Option<Keyword> {
        use Keyword::*;
        Some(match text.to_ascii_uppercase().as_str() {
            "SELECT" => Select,
            "FROM" => From,
            "WHERE" => Where,
            "GROUP" => Group,
            "BY" => By,
            "AS" => As,
            "JOIN" => Join,
            "LEFT" => Left,
            "INNER" => Inner,
            "ON" => On,
            "USING" => Using,
            "WITH" => With,
            "CREATE" => Create,
            "TABLE" => Table,
            "VIEW" => View,
            "AND" => And,
            "OR" => Or,
            "NOT" => Not,
            "IS" => Is,
            "DISTINCT" => Distinct,
            "NULL" => Null,
            "TRUE" => True,
            "FALSE" => False,
            "DATE" => Date,
            "EXISTS" => Exists,
            "OVER" => Over,
            "PARTITION" => Partition,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        use Keyword::*;
        match self {
            Select => "SELECT",
            From => "FROM",
            Where => "WHERE",
            Group => "GROUP",
            By => "BY",
            As => "AS",
            Join => "JOIN",
            Left => "LEFT",
            Inner => "INNER",
            On => "ON",
            Using => "USING",
            With => "WITH",
            Create => "CREATE",
            Table => "TABLE",
            View => "VIEW",
            And => "AND",
            Or => "OR",
            Not => "NOT",
            Is => "IS",
            Distinct => "DISTINCT",
            Null => "NULL",
            True => "TRUE",
            False => "FALSE",
            Date => "DATE",
            Exists => "EXISTS",
            Over => "OVER",
            Partition => "PARTITION",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    /// Unquoted identifier, case preserved.
    Ident(String),
    Integer(i64),
    Double(f64),
    /// Contents of a single-quoted string, escapes resolved.
    String(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Semicolon,
    Star,
    Plus,
    Minus,
    Slash,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Keyword(kw) => kw.as_str().to_string(),
            TokenKind::Ident(name) => format!("identifier `{name}`"),
            TokenKind::Integer(v) => format!("integer `{v}`"),
            TokenKind::Double(v) => format!("number `{v}`"),
            TokenKind::String(s) => format!("string '{s}'"),
            TokenKind::LParen => "`(`".to_string(),
            TokenKind::RParen => "`)`".to_string(),
            TokenKind::Comma => "`,`".to_string(),
            TokenKind::Dot => "`.`".to_string(),
            TokenKind::Semicolon => "`;`".to_string(),
            TokenKind::Star => "`*`".to_string(),
            TokenKind::Plus => "`+`".to_string(),
            TokenKind::Minus => "`-`".to_string(),
            TokenKind::Slash => "`/`".to_string(),
            TokenKind::Eq => "`=`".to_string(),
            TokenKind::NotEq => "`<>`".to_string(),
            TokenKind::Lt => "`<`".to_string(),
            TokenKind::LtEq => "`<=`".to_string(),
            TokenKind::Gt => "`>`".to_string(),
            TokenKind::GtEq => "`>=`".to_string(),
            TokenKind::Eof => "end of input".to_string(),
        }
    }
}

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}
