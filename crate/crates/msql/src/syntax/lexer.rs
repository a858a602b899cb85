use super::error::SyntaxError;
use super::token::{Keyword, Pos, Token, TokenKind};

pub struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    at: usize,
    line: u32,
    column: u32,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            at: 0,
            line: 1,
            column: 1,
        }
    }

    /// Lexes the whole input; the last token is always `Eof`.
    pub fn tokenize(mut self) -> Result<Vec<Token>, SyntaxError> {
        let mut tokens = Vec::new();
        loop {
            let token = self.next_token()?;
            let done = token.kind == TokenKind::Eof;
            tokens.push(token);
            if done {
                return Ok(tokens);
            }
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.at).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.bytes.get(self.at + 1).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.at += 1;
        if b == b'\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(b)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.bump();
                }
                // `--` comment to end of line
                Some(b'-') if self.peek2() == Some(b'-') => {
                    while let Some(b) = self.peek() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn next_token(&mut self) -> Result<Token, SyntaxError> {
        self.skip_trivia();
        let pos = self.pos();
        let Some(b) = self.peek() else {
            return Ok(Token {
                kind: TokenKind::Eof,
                pos,
            });
        };
        let kind = match b {
            b'(' => self.single(TokenKind::LParen),
            b')' => self.single(TokenKind::RParen),
            b',' => self.single(TokenKind::Comma),
            b'.' => self.single(TokenKind::Dot),
            b';' => self.single(TokenKind::Semicolon),
            b'*' => self.single(TokenKind::Star),
            b'+' => self.single(TokenKind::Plus),
            b'-' => self.single(TokenKind::Minus),
            b'/' => self.single(TokenKind::Slash),
            b'=' => self.single(TokenKind::Eq),
            b'<' => {
                self.bump();
                match self.peek() {
                    Some(b'>') => {
                        self.bump();
                        TokenKind::NotEq
                    }
                    Some(b'=') => {
                        self.bump();
                        TokenKind::LtEq
                    }
                    _ => TokenKind::Lt,
                }
            }
            b'>' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    TokenKind::GtEq
                } else {
                    TokenKind::Gt
                }
            }
            b'!' if self.peek2() == Some(b'=') => {
                self.bump();
                self.bump();
                TokenKind::NotEq
            }
            b'\'' => self.string_literal(pos)?,
            b'0'..=b'9' => self.number(pos)?,
            b if b.is_ascii_alphabetic() || b == b'_' => self.word(),
            other => {
                return Err(SyntaxError::new(
                    pos,
                    vec!["a token".to_string()],
                    format!("`{}`", other as char),
                ))
            }
        };
        Ok(Token { kind, pos })
    }

    fn single(&mut self, kind: TokenKind) -> TokenKind {
        self.bump();
        kind
    }

    fn word(&mut self) -> TokenKind {
        let start = self.at;
        while let Some(b) = self.peek() {
            if b.is_ascii_alphanumeric() || b == b'_' {
                self.bump();
            } else {
                break;
            }
        }
        let text = &self.src[start..self.at];
        match Keyword::from_ident(text) {
            Some(kw) => TokenKind::Keyword(kw),
            None => TokenKind::Ident(text.to_string()),
        }
    }

    fn number(&mut self, pos: Pos) -> Result<TokenKind, SyntaxError> {
        let start = self.at;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.bump();
        }
        let mut is_double = false;
        if self.peek() == Some(b'.') && matches!(self.peek2(), Some(b'0'..=b'9')) {
            is_double = true;
            self.bump();
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mut look = self.at + 1;
            if matches!(self.bytes.get(look), Some(b'+') | Some(b'-')) {
                look += 1;
            }
            if matches!(self.bytes.get(look), Some(b'0'..=b'9')) {
                is_double = true;
                self.bump();
                if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                    self.bump();
                }
                while matches!(self.peek(), Some(b'0'..=b'9')) {
                    self.bump();
                }
            }
        }
        let text = &self.src[start..self.at];
        if is_double {
            text.parse::<f64>()
                .map(TokenKind::Double)
                .map_err(|_| SyntaxError::new(pos, vec!["a number".into()], format!("`{text}`")))
        } else {
            text.parse::<i64>()
                .map(TokenKind::Integer)
                .map_err(|_| SyntaxError::new(pos, vec!["an integer".into()], format!("`{text}`")))
        }
    }

    fn string_literal(&mut self, pos: Pos) -> Result<TokenKind, SyntaxError> {
        self.bump(); // opening quote
        let mut value = String::new();
        loop {
            match self.bump() {
                Some(b'\'') => {
                    // '' is an escaped quote
                    if self.peek() == Some(b'\'') {
                        self.bump();
                        value.push('\'');
                    } else {
                        return Ok(TokenKind::String(value));
                    }
                }
                Some(b) => value.push(b as char),
                None => {
                    return Err(SyntaxError::new(
                        pos,
                        vec!["closing `'`".into()],
                        "end of input".into(),
                    ))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        Lexer::new(src)
            .tokenize()
            .unwrap()
            .into_iter()
            .map(|t| t.kind)
            .collect()
    }

    #[test]
    fn keywords_and_idents() {
        let got = kinds("SELECT prodName FROM Orders");
        assert_eq!(
            got,
            vec![
                TokenKind::Keyword(Keyword::Select),
                TokenKind::Ident("prodName".into()),
                TokenKind::Keyword(Keyword::From),
                TokenKind::Ident("Orders".into()),
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn extension_words_are_identifiers() {
        // AT / MEASURE / AGGREGATE must stay usable as plain identifiers.
        let got = kinds("at measure aggregate current");
        assert!(got
            .iter()
            .take(4)
            .all(|k| matches!(k, TokenKind::Ident(_))));
    }

    #[test]
    fn numbers() {
        assert_eq!(
            kinds("1 2.5 3e2"),
            vec![
                TokenKind::Integer(1),
                TokenKind::Double(2.5),
                TokenKind::Double(300.0),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn string_escapes() {
        assert_eq!(
            kinds("'Bob''s'"),
            vec![TokenKind::String("Bob's".into()), TokenKind::Eof]
        );
    }

    #[test]
    fn comments_skipped() {
        assert_eq!(
            kinds("1 -- the rest\n2"),
            vec![TokenKind::Integer(1), TokenKind::Integer(2), TokenKind::Eof]
        );
    }

    #[test]
    fn operators() {
        assert_eq!(
            kinds("<> <= >= < > = != + - * /"),
            vec![
                TokenKind::NotEq,
                TokenKind::LtEq,
                TokenKind::GtEq,
                TokenKind::Lt,
                TokenKind::Gt,
                TokenKind::Eq,
                TokenKind::NotEq,
                TokenKind::Plus,
                TokenKind::Minus,
                TokenKind::Star,
                TokenKind::Slash,
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn positions_track_lines() {
        let tokens = Lexer::new("SELECT\n  x").tokenize().unwrap();
        assert_eq!(tokens[1].pos.line, 2);
        assert_eq!(tokens[1].pos.column, 3);
    }
}
