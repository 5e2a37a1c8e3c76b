//! Recursive-descent parser for the ASCII formula grammar.
//!
//! Precedence, loosest to tightest: `<->` (right-assoc), `->` (right-assoc),
//! `|`, `&`, `~`. Atoms: identifiers, `true`, `false`, `oneof(e1,...,en)`,
//! parenthesised expressions. Runs of `&` / `|` at one level build a single
//! n-ary node; parentheses preserve nesting.

use super::{Formula, VarId};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("syntax error at {line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    True,
    False,
    OneOf,
    Tilde,
    Amp,
    Pipe,
    Arrow,
    DArrow,
    LParen,
    RParen,
    Comma,
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.src.get(self.pos).copied()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    fn next_token(&mut self) -> Result<Spanned, ParseError> {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.bump();
        }
        let (line, col) = (self.line, self.col);
        let mk = |tok| Spanned { tok, line, col };
        let c = match self.peek() {
            None => return Ok(mk(Tok::Eof)),
            Some(c) => c,
        };
        match c {
            b'~' => {
                self.bump();
                Ok(mk(Tok::Tilde))
            }
            b'&' => {
                self.bump();
                Ok(mk(Tok::Amp))
            }
            b'|' => {
                self.bump();
                Ok(mk(Tok::Pipe))
            }
            b'(' => {
                self.bump();
                Ok(mk(Tok::LParen))
            }
            b')' => {
                self.bump();
                Ok(mk(Tok::RParen))
            }
            b',' => {
                self.bump();
                Ok(mk(Tok::Comma))
            }
            b'-' => {
                self.bump();
                if self.peek() == Some(b'>') {
                    self.bump();
                    Ok(mk(Tok::Arrow))
                } else {
                    Err(self.err("expected '>' after '-'"))
                }
            }
            b'<' => {
                self.bump();
                if self.peek() == Some(b'-') {
                    self.bump();
                    if self.peek() == Some(b'>') {
                        self.bump();
                        return Ok(mk(Tok::DArrow));
                    }
                }
                Err(self.err("expected '<->'"))
            }
            c if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_' || c == b'.')
                {
                    self.bump();
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                Ok(mk(match word {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "oneof" => Tok::OneOf,
                    _ => Tok::Ident(word.to_string()),
                }))
            }
            other => Err(self.err(format!("unexpected character '{}'", other as char))),
        }
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> &Spanned {
        let s = &self.toks[self.pos];
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        s
    }

    fn err_here(&self, message: impl Into<String>) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError {
            line: s.line,
            col: s.col,
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == &tok {
            self.bump();
            Ok(())
        } else {
            Err(self.err_here(format!("expected {what}")))
        }
    }

    // iff := imp ('<->' iff)?
    fn iff(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.imp()?;
        if self.peek() == &Tok::DArrow {
            self.bump();
            let rhs = self.iff()?;
            Ok(Formula::iff(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    // imp := or ('->' imp)?
    fn imp(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if self.peek() == &Tok::Arrow {
            self.bump();
            let rhs = self.imp()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    // or := and ('|' and)*
    fn or(&mut self) -> Result<Formula, ParseError> {
        let first = self.and()?;
        if self.peek() != &Tok::Pipe {
            return Ok(first);
        }
        let mut children = vec![first];
        while self.peek() == &Tok::Pipe {
            self.bump();
            children.push(self.and()?);
        }
        Ok(Formula::Or(children))
    }

    // and := unary ('&' unary)*
    fn and(&mut self) -> Result<Formula, ParseError> {
        let first = self.unary()?;
        if self.peek() != &Tok::Amp {
            return Ok(first);
        }
        let mut children = vec![first];
        while self.peek() == &Tok::Amp {
            self.bump();
            children.push(self.unary()?);
        }
        Ok(Formula::And(children))
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.peek() == &Tok::Tilde {
            self.bump();
            Ok(Formula::not(self.unary()?))
        } else {
            self.atom()
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::True => {
                self.bump();
                Ok(Formula::Const(true))
            }
            Tok::False => {
                self.bump();
                Ok(Formula::Const(false))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Formula::Var(VarId::parse(&name)))
            }
            Tok::OneOf => {
                self.bump();
                self.expect(Tok::LParen, "'(' after oneof")?;
                let mut children = Vec::new();
                if self.peek() != &Tok::RParen {
                    children.push(self.iff()?);
                    while self.peek() == &Tok::Comma {
                        self.bump();
                        children.push(self.iff()?);
                    }
                }
                self.expect(Tok::RParen, "')'")?;
                Ok(Formula::OneOf(children))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.iff()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            _ => Err(self.err_here("expected a formula")),
        }
    }
}

/// Parse a formula in the ASCII grammar.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut lexer = Lexer::new(text);
    let mut toks = Vec::new();
    loop {
        let s = lexer.next_token()?;
        let eof = s.tok == Tok::Eof;
        toks.push(s);
        if eof {
            break;
        }
    }
    let mut parser = Parser { toks, pos: 0 };
    let f = parser.iff()?;
    if parser.peek() != &Tok::Eof {
        return Err(parser.err_here("trailing input"));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::render_formula;

    fn v(name: &str) -> Formula {
        Formula::var(VarId::named(name))
    }

    #[test]
    fn parse_examples() {
        assert_eq!(
            parse_formula("~(p <-> q)").unwrap(),
            Formula::not(Formula::iff(v("p"), v("q")))
        );
        assert_eq!(parse_formula("p").unwrap(), v("p"));
        assert_eq!(
            parse_formula("oneof(a,b,c)").unwrap(),
            Formula::OneOf(vec![v("a"), v("b"), v("c")])
        );
        assert_eq!(parse_formula("oneof()").unwrap(), Formula::OneOf(vec![]));
    }

    #[test]
    fn nary_flattening_and_parens() {
        assert_eq!(
            parse_formula("a & b & c").unwrap(),
            Formula::And(vec![v("a"), v("b"), v("c")])
        );
        assert_eq!(
            parse_formula("(a & b) & c").unwrap(),
            Formula::And(vec![Formula::And(vec![v("a"), v("b")]), v("c")])
        );
        // Right associativity.
        assert_eq!(
            parse_formula("a -> b -> c").unwrap(),
            Formula::implies(v("a"), Formula::implies(v("b"), v("c")))
        );
        // '&' binds tighter than '|'.
        assert_eq!(
            parse_formula("a & b | c").unwrap(),
            Formula::Or(vec![Formula::And(vec![v("a"), v("b")]), v("c")])
        );
    }

    #[test]
    fn errors_carry_position() {
        let err = parse_formula("p &\n& q").unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.col, 1);
        assert!(parse_formula("p @ q").is_err());
        assert!(parse_formula("p <- q").is_err());
        assert!(parse_formula("p q").is_err());
    }

    #[test]
    fn render_reparses_identically() {
        for text in [
            "~(p <-> q)",
            "a & b & c",
            "(a & b) & c",
            "oneof(a,b & c,~d)",
            "a -> b -> c",
            "p3.npTape2 | ~p1.Head0",
            "true & ~false",
        ] {
            let f = parse_formula(text).unwrap();
            let rendered = render_formula(&f);
            assert_eq!(parse_formula(&rendered).unwrap(), f, "render: {rendered}");
        }
    }
}
