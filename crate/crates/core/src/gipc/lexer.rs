use std::fmt;

use super::{CompileError, Phase};
use crate::lang::ast::Pos;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Identifier,
    Int,
    Float,
    Str,
    Keyword,
    Operator,
    Punctuation,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub line: u32,
    pub column: u32,
}

impl Token {
    pub fn pos(&self) -> Pos {
        Pos::new(self.line, self.column)
    }

    pub fn is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.kind == kind && self.lexeme == lexeme
    }

    pub fn is_sym(&self, lexeme: &str) -> bool {
        matches!(self.kind, TokenKind::Operator | TokenKind::Punctuation) && self.lexeme == lexeme
    }

    pub fn is_kw(&self, kw: &str) -> bool {
        self.is(TokenKind::Keyword, kw)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TokenKind::Eof => f.write_str("end of input"),
            _ => write!(f, "`{}`", self.lexeme),
        }
    }
}

pub const KEYWORDS: &[&str] = &[
    "where", "end", "dimension", "procedure", "if", "then", "else", "fby", "first", "next", "prev", "wvr", "asa",
    "upon", "Box", "select", "true", "false", "eod", "in",
];

const OPERATORS: &[&str] = &[
    "==", "!=", "<=", ">=", "&&", "||", "..", "+", "-", "*", "/", "%", "<", ">", "!", "@", "#", ".", "=", "|",
];

const PUNCTUATION: &[char] = &['(', ')', '[', ']', '{', '}', ',', ';', ':'];

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    column: u32,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        self.src[self.pos..].chars().nth(1)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, line: u32, column: u32, message: impl Into<String>) -> CompileError {
        CompileError { phase: Phase::Lex, message: message.into(), line, column }
    }

    fn skip_trivia(&mut self) -> Result<(), CompileError> {
        loop {
            match (self.peek(), self.peek2()) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/')) => {
                    while self.peek().is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                (Some('/'), Some('*')) => {
                    let (line, column) = (self.line, self.column);
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek(), self.peek2()) {
                            (Some('*'), Some('/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => return Err(self.error(line, column, "unterminated block comment")),
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn next_token(&mut self) -> Result<Token, CompileError> {
        self.skip_trivia()?;
        let (line, column, start) = (self.line, self.column, self.pos);
        let make = |kind, lexeme: &str| Token { kind, lexeme: lexeme.to_string(), line, column };
        let Some(c) = self.peek() else {
            return Ok(Token { kind: TokenKind::Eof, lexeme: String::new(), line, column });
        };

        if c.is_ascii_alphabetic() {
            // `'` and `$` only occur in compiler-generated names
            while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '\'' | '$')) {
                self.bump();
            }
            let word = &self.src[start..self.pos];
            let kind = if KEYWORDS.contains(&word) { TokenKind::Keyword } else { TokenKind::Identifier };
            return Ok(make(kind, word));
        }

        if c.is_ascii_digit() {
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
            let mut kind = TokenKind::Int;
            // `1..3` is a range, not a float
            if self.peek() == Some('.') && self.peek2().is_some_and(|c| c.is_ascii_digit()) {
                kind = TokenKind::Float;
                self.bump();
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            }
            if matches!(self.peek(), Some('e' | 'E')) {
                let save = (self.pos, self.line, self.column);
                self.bump();
                if matches!(self.peek(), Some('+' | '-')) {
                    self.bump();
                }
                if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    kind = TokenKind::Float;
                    while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                        self.bump();
                    }
                } else {
                    (self.pos, self.line, self.column) = save;
                }
            }
            let lexeme = &self.src[start..self.pos];
            if kind == TokenKind::Int && lexeme.parse::<i64>().is_err() {
                return Err(self.error(line, column, format!("integer literal `{lexeme}` out of range")));
            }
            return Ok(make(kind, lexeme));
        }

        if c == '"' {
            self.bump();
            let mut value = String::new();
            loop {
                match self.bump() {
                    None | Some('\n') => return Err(self.error(line, column, "unterminated string literal")),
                    Some('"') => break,
                    Some('\\') => match self.bump() {
                        Some('n') => value.push('\n'),
                        Some('t') => value.push('\t'),
                        Some('r') => value.push('\r'),
                        Some(c @ ('"' | '\\')) => value.push(c),
                        _ => return Err(self.error(line, column, "invalid escape in string literal")),
                    },
                    Some(c) => value.push(c),
                }
            }
            // the lexeme of a string token is its decoded contents
            return Ok(Token { kind: TokenKind::Str, lexeme: value, line, column });
        }

        if PUNCTUATION.contains(&c) {
            self.bump();
            return Ok(make(TokenKind::Punctuation, &self.src[start..self.pos]));
        }

        for op in OPERATORS {
            if self.src[self.pos..].starts_with(op) {
                for _ in 0..op.chars().count() {
                    self.bump();
                }
                return Ok(make(TokenKind::Operator, op));
            }
        }

        Err(self.error(line, column, format!("illegal character `{c}`")))
    }
}

/// Splits source text into tokens, ending with an EOF token.
pub fn tokenize(source: &str) -> Result<Vec<Token>, CompileError> {
    let mut lexer = Lexer { src: source, pos: 0, line: 1, column: 1 };
    let mut tokens = Vec::new();
    loop {
        let tok = lexer.next_token()?;
        let eof = tok.kind == TokenKind::Eof;
        tokens.push(tok);
        if eof {
            return Ok(tokens);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src).unwrap().into_iter().map(|t| (t.kind, t.lexeme)).collect()
    }

    #[test]
    fn single_int() {
        assert_eq!(kinds("42"), vec![(TokenKind::Int, "42".into()), (TokenKind::Eof, String::new())]);
    }

    #[test]
    fn newton_statement() {
        let toks = tokenize("F = (G * m1 * m2) / r * r;").unwrap();
        assert_eq!(toks.len(), 15);
        assert_eq!(toks.last().unwrap().kind, TokenKind::Eof);
        let lexemes: Vec<&str> = toks.iter().map(|t| t.lexeme.as_str()).collect();
        assert_eq!(lexemes[..14], ["F", "=", "(", "G", "*", "m1", "*", "m2", ")", "/", "r", "*", "r", ";"]);
    }

    #[test]
    fn unterminated_string_reports_start() {
        let err = tokenize("\"unterminated").unwrap_err();
        assert_eq!((err.phase, err.line, err.column), (Phase::Lex, 1, 1));
    }

    #[test]
    fn comments_and_positions() {
        let toks = tokenize("// c\n/* a\n b */ x fby.t 1.5 0..2 \"s\\\"\"").unwrap();
        assert_eq!((toks[0].lexeme.as_str(), toks[0].line, toks[0].column), ("x", 3, 7));
        assert_eq!(toks[1].kind, TokenKind::Keyword);
        assert_eq!(toks[2].lexeme, ".");
        assert_eq!(toks[4].kind, TokenKind::Float);
        let tail: Vec<&str> = toks[5..].iter().map(|t| t.lexeme.as_str()).collect();
        assert_eq!(tail, ["0", "..", "2", "s\"", ""]);
    }

    #[test]
    fn lex_errors() {
        assert!(tokenize("/* open").is_err());
        assert!(tokenize("a $ b").is_err());
        assert!(tokenize("99999999999999999999").is_err());
    }
}
