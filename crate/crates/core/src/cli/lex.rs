//! Tokenizer shared by the model and query parsers.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(s) => write!(f, "number `{s}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

/// A positioned error in a model file, query or set list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn at(pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic { line: pos.line, column: pos.column, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

const SYMBOLS: [&str; 10] = ["->", ":", "|", "{", "}", "(", ")", "=", ",", ";"];

/// Splits `text` into tokens. `#` starts a comment running to the end of
/// the line.
pub fn tokenize(text: &str) -> Result<Vec<(Tok, Pos)>, Diagnostic> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut c = 0;
        while c < chars.len() {
            let pos = Pos { line: ln + 1, column: c + 1 };
            let ch = chars[c];
            if ch == '#' {
                break;
            }
            if ch.is_whitespace() {
                c += 1;
                continue;
            }
            if ch.is_alphabetic() || ch == '_' {
                let start = c;
                while c < chars.len() && (chars[c].is_alphanumeric() || chars[c] == '_' || chars[c] == '\'') {
                    c += 1;
                }
                out.push((Tok::Ident(chars[start..c].iter().collect()), pos));
                continue;
            }
            if ch.is_ascii_digit() || (ch == '.' && chars.get(c + 1).is_some_and(|d| d.is_ascii_digit())) {
                let start = c;
                while c < chars.len() && (chars[c].is_ascii_digit() || chars[c] == '.') {
                    c += 1;
                }
                if c < chars.len() && (chars[c] == 'e' || chars[c] == 'E') {
                    let mut k = c + 1;
                    if k < chars.len() && (chars[k] == '-' || chars[k] == '+') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        c = k;
                        while c < chars.len() && chars[c].is_ascii_digit() {
                            c += 1;
                        }
                    }
                }
                out.push((Tok::Number(chars[start..c].iter().collect()), pos));
                continue;
            }
            let rest: String = chars[c..].iter().take(2).collect();
            match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                Some(s) => {
                    out.push((Tok::Sym(s), pos));
                    c += s.chars().count();
                }
                None => return Err(Diagnostic::at(pos, format!("unexpected character `{ch}`"))),
            }
        }
    }
    let eof = if text.is_empty() || text.ends_with('\n') {
        Pos { line: text.lines().count() + 1, column: 1 }
    } else {
        Pos { line: text.lines().count(), column: text.lines().last().map_or(0, |l| l.chars().count()) + 1 }
    };
    out.push((Tok::Eof, eof));
    Ok(out)
}

/// Cursor over a token stream with expectation helpers.
pub struct Cursor {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Cursor {
    pub fn new(toks: Vec<(Tok, Pos)>) -> Self {
        Cursor { toks, at: 0 }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    pub fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    pub fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    pub fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub fn is_keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    pub fn unexpected(&self, expected: &str) -> Diagnostic {
        Diagnostic::at(self.pos(), format!("expected {expected}, found {}", self.peek()))
    }

    pub fn sym(&mut self, s: &str) -> Result<Pos, Diagnostic> {
        if self.is_sym(s) {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    pub fn keyword(&mut self, k: &str) -> Result<Pos, Diagnostic> {
        if self.is_keyword(k) {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(&format!("`{k}`")))
        }
    }

    pub fn ident(&mut self, what: &str) -> Result<(String, Pos), Diagnostic> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let p = self.bump().1;
                Ok((s, p))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    pub fn integer(&mut self, what: &str) -> Result<(usize, Pos), Diagnostic> {
        match self.peek().clone() {
            Tok::Number(s) => {
                let p = self.pos();
                let v = s.parse::<usize>().map_err(|_| Diagnostic::at(p, format!("expected {what}, found `{s}`")))?;
                self.bump();
                Ok((v, p))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    pub fn real(&mut self) -> Result<(f64, Pos), Diagnostic> {
        match self.peek().clone() {
            Tok::Number(s) => {
                let p = self.pos();
                let v = s.parse::<f64>().map_err(|_| Diagnostic::at(p, format!("malformed number `{s}`")))?;
                self.bump();
                Ok((v, p))
            }
            _ => Err(self.unexpected("a probability")),
        }
    }

    pub fn is_number(&self) -> bool {
        matches!(self.peek(), Tok::Number(_))
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }
}
