//! Tokenizer shared by the `.pi` parser, the sequential IR parser and the
//! formula parser.

use std::fmt;

use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(u64),
    Bang,
    Quest,
    Star,
    LParen,
    RParen,
    LBrack,
    RBrack,
    /// `[]`, the choice operator of the sequential IR.
    Choice,
    Semi,
    Comma,
    Dot,
    Bar,
    Colon,
    Caret,
    Plus,
    Minus,
    Lt,
    Le,
    EqEq,
    Ne,
    Gt,
    Ge,
    /// `=` (definitions in the IR; also accepted as equality in expressions).
    Eq,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Int(i) => return write!(f, "`{i}`"),
            Tok::Bang => "!",
            Tok::Quest => "?",
            Tok::Star => "*",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrack => "[",
            Tok::RBrack => "]",
            Tok::Choice => "[]",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Bar => "|",
            Tok::Colon => ":",
            Tok::Caret => "^",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::EqEq => "==",
            Tok::Ne => "!=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Eq => "=",
            Tok::Eof => return write!(f, "end of input"),
        };
        write!(f, "`{s}`")
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let mut push = |tok: Tok, len: usize, i: &mut usize, col: &mut usize| {
            out.push(Token { tok, line: tl, col: tc });
            *i += len;
            *col += len;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += i - start;
                out.push(Token { tok: Tok::Ident(word), line: tl, col: tc });
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += i - start;
                let value = word.parse::<u64>().map_err(|_| ParseError {
                    line: tl,
                    col: tc,
                    expected: vec!["integer literal within 64-bit range".into()],
                    found: word.clone(),
                })?;
                out.push(Token { tok: Tok::Int(value), line: tl, col: tc });
            }
            _ => {
                let next = chars.get(i + 1).copied();
                match (c, next) {
                    ('<', Some('=')) => push(Tok::Le, 2, &mut i, &mut col),
                    ('>', Some('=')) => push(Tok::Ge, 2, &mut i, &mut col),
                    ('!', Some('=')) => push(Tok::Ne, 2, &mut i, &mut col),
                    ('=', Some('=')) => push(Tok::EqEq, 2, &mut i, &mut col),
                    ('[', Some(']')) => push(Tok::Choice, 2, &mut i, &mut col),
                    ('!', _) => push(Tok::Bang, 1, &mut i, &mut col),
                    ('?', _) => push(Tok::Quest, 1, &mut i, &mut col),
                    ('*', _) => push(Tok::Star, 1, &mut i, &mut col),
                    ('(', _) => push(Tok::LParen, 1, &mut i, &mut col),
                    (')', _) => push(Tok::RParen, 1, &mut i, &mut col),
                    ('[', _) => push(Tok::LBrack, 1, &mut i, &mut col),
                    (']', _) => push(Tok::RBrack, 1, &mut i, &mut col),
                    (';', _) => push(Tok::Semi, 1, &mut i, &mut col),
                    (',', _) => push(Tok::Comma, 1, &mut i, &mut col),
                    ('.', _) => push(Tok::Dot, 1, &mut i, &mut col),
                    ('|', _) => push(Tok::Bar, 1, &mut i, &mut col),
                    (':', _) => push(Tok::Colon, 1, &mut i, &mut col),
                    ('^', _) => push(Tok::Caret, 1, &mut i, &mut col),
                    ('+', _) => push(Tok::Plus, 1, &mut i, &mut col),
                    ('-', _) => push(Tok::Minus, 1, &mut i, &mut col),
                    ('<', _) => push(Tok::Lt, 1, &mut i, &mut col),
                    ('>', _) => push(Tok::Gt, 1, &mut i, &mut col),
                    ('=', _) => push(Tok::Eq, 1, &mut i, &mut col),
                    _ => {
                        return Err(ParseError {
                            line: tl,
                            col: tc,
                            expected: vec!["a token".into()],
                            found: c.to_string(),
                        })
                    }
                }
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

/// Cursor over a token vector with error helpers.
pub struct Cursor {
    toks: Vec<Token>,
    pos: usize,
}

impl Cursor {
    pub fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Cursor { toks: tokenize(src)?, pos: 0 })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    pub fn pos(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    pub fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn error(&self, expected: &[&str]) -> ParseError {
        let (line, col) = self.pos();
        ParseError {
            line,
            col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        }
    }

    pub fn expect(&mut self, t: &Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.error(&[what]))
        }
    }

    pub fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{kw}`")]))
        }
    }

    pub fn expect_eof(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(&["end of input"]))
        }
    }
}
