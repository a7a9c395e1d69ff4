//! Minimal s-expression reader with source positions.
//!
//! Identifiers are lower-cased and `;` starts a comment that runs to the end
//! of the line.

use std::fmt;

use super::PddlError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug)]
pub enum Sexpr {
    Atom(String, Pos),
    List(Vec<Sexpr>, Pos),
}

impl Sexpr {
    pub fn pos(&self) -> Pos {
        match self {
            Sexpr::Atom(_, p) | Sexpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom(s, _) => Some(s),
            Sexpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            Sexpr::Atom(..) => None,
        }
    }

    /// The leading keyword of a list such as `(and ...)` or `(:action ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|l| l.first()).and_then(Sexpr::as_atom)
    }
}

pub(crate) fn syntax(pos: Pos, message: impl Into<String>) -> PddlError {
    PddlError::Syntax {
        line: pos.line,
        col: pos.col,
        message: message.into(),
    }
}

/// Reads exactly one top-level list from `text`.
pub fn read_document(text: &str) -> Result<Sexpr, PddlError> {
    let mut reader = Reader::new(text);
    reader.skip_trivia();
    let start = reader.pos();
    let doc = match reader.peek() {
        None => return Err(syntax(start, "empty document")),
        Some('(') => reader.read()?,
        Some(_) => return Err(syntax(start, "expected '(' at start of document")),
    };
    reader.skip_trivia();
    if reader.peek().is_some() {
        let pos = reader.pos();
        if reader.peek() == Some(')') {
            return Err(syntax(pos, "unbalanced ')'"));
        }
        return Err(syntax(pos, "unexpected content after the top-level form"));
    }
    Ok(doc)
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Sexpr, PddlError> {
        self.skip_trivia();
        let pos = self.pos();
        match self.peek() {
            None => Err(syntax(pos, "unexpected end of input")),
            Some(')') => Err(syntax(pos, "unbalanced ')'")),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        None => {
                            return Err(syntax(
                                pos,
                                format!("unclosed '(' opened at {pos}"),
                            ))
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(Sexpr::List(items, pos));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(_) => {
                let mut text = String::new();
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    text.extend(c.to_lowercase());
                    self.bump();
                }
                Ok(Sexpr::Atom(text, pos))
            }
        }
    }
}
