use crate::error::{Error, Result};

use super::ast::Pos;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    Directive(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Dot,
    DotDot,
    If,
    Colon,
    Bar,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Backslash,
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub start: Pos,
    pub end: Pos,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut lx = Lexer {
        chars: src.char_indices().collect(),
        i: 0,
        line: 1,
        col: 1,
        len: src.len(),
    };
    let mut out = Vec::new();
    loop {
        lx.skip_trivia();
        let start = lx.pos();
        let Some(c) = lx.peek() else {
            out.push(Token {
                tok: Tok::Eof,
                start,
                end: start,
            });
            return Ok(out);
        };
        let tok = if c.is_ascii_lowercase() {
            Tok::Ident(lx.word())
        } else if c.is_ascii_uppercase() || c == '_' {
            Tok::Var(lx.word())
        } else if c.is_ascii_digit() {
            let w = lx.digits();
            Tok::Int(w.parse().map_err(|_| Error::Parse {
                line: start.line,
                column: start.column,
                message: format!("integer literal {w} out of range"),
            })?)
        } else if c == '#' {
            lx.bump();
            Tok::Directive(lx.word())
        } else {
            lx.bump();
            let next = lx.peek();
            match (c, next) {
                ('.', Some('.')) => {
                    lx.bump();
                    Tok::DotDot
                }
                (':', Some('-')) => {
                    lx.bump();
                    Tok::If
                }
                ('!', Some('=')) => {
                    lx.bump();
                    Tok::Ne
                }
                ('<', Some('=')) => {
                    lx.bump();
                    Tok::Le
                }
                ('>', Some('=')) => {
                    lx.bump();
                    Tok::Ge
                }
                ('=', Some('=')) => {
                    lx.bump();
                    Tok::Eq
                }
                ('<', Some('>')) => {
                    lx.bump();
                    Tok::Ne
                }
                ('(', _) => Tok::LParen,
                (')', _) => Tok::RParen,
                ('{', _) => Tok::LBrace,
                ('}', _) => Tok::RBrace,
                ('[', _) => Tok::LBracket,
                (']', _) => Tok::RBracket,
                (',', _) => Tok::Comma,
                (';', _) => Tok::Semi,
                ('.', _) => Tok::Dot,
                (':', _) => Tok::Colon,
                ('|', _) => Tok::Bar,
                ('=', _) => Tok::Eq,
                ('<', _) => Tok::Lt,
                ('>', _) => Tok::Gt,
                ('+', _) => Tok::Plus,
                ('-', _) => Tok::Minus,
                ('*', _) => Tok::Star,
                ('/', _) => Tok::Slash,
                ('\\', _) => Tok::Backslash,
                _ => {
                    return Err(Error::Parse {
                        line: start.line,
                        column: start.column,
                        message: format!("unexpected character {c:?}"),
                    })
                }
            }
        };
        out.push(Token {
            tok,
            start,
            end: lx.pos(),
        });
    }
}

struct Lexer {
    chars: Vec<(usize, char)>,
    i: usize,
    line: usize,
    col: usize,
    len: usize,
}

impl Lexer {
    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.col,
            offset: self.chars.get(self.i).map_or(self.len, |(o, _)| *o),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).map(|(_, c)| *c)
    }

    fn bump(&mut self) {
        if let Some((_, c)) = self.chars.get(self.i) {
            if *c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
            self.i += 1;
        }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '%' {
                while self.peek().is_some_and(|c| c != '\n') {
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn digits(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            s.push(c);
            self.bump();
        }
        s
    }
}
