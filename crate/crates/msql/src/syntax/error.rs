use std::fmt;

use super::token::Pos;

/// Parse error with source position and the token set the parser would
/// have accepted at that point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub pos: Pos,
    pub expected: Vec<String>,
    pub found: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, expected: Vec<String>, found: String) -> Self {
        SyntaxError {
            pos,
            expected,
            found,
        }
    }
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at {}: ", self.pos)?;
        match self.expected.len() {
            0 => write!(f, "unexpected {}", self.found),
            1 => write!(f, "expected {}, found {}", self.expected[0], self.found),
            _ => write!(
                f,
                "expected one of {}; found {}",
                self.expected.join(", "),
                self.found
            ),
        }
    }
}

impl std::error::Error for SyntaxError {}
