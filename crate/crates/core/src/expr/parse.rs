use std::sync::Arc;

use super::ast::{Expression, Func, Node, Vocabulary};
use super::ExprError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text
                .parse()
                .map_err(|_| ExprError::Syntax { pos: start, message: format!("malformed number '{text}'") })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else {
            let t = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => {
                    return Err(ExprError::Syntax { pos: start, message: format!("unexpected character '{c}'") })
                }
            };
            out.push((t, start));
            i += 1;
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    vocab: &'a Vocabulary,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ExprError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(ExprError::Syntax { pos: self.pos(), message: format!("expected {what}") })
        }
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<Arc<Node>, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = Arc::new(Node::Add(lhs, self.term()?));
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = Arc::new(Node::Sub(lhs, self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // term := unary (('*'|'/') unary)*
    fn term(&mut self) -> Result<Arc<Node>, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = Arc::new(Node::Mul(lhs, self.unary()?));
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = Arc::new(Node::Div(lhs, self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // unary := '-' unary | power
    fn unary(&mut self) -> Result<Arc<Node>, ExprError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Arc::new(Node::Neg(self.unary()?)));
        }
        self.power()
    }

    // power := atom ('^' unary)?   (right associative through unary -> power)
    fn power(&mut self) -> Result<Arc<Node>, ExprError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Arc::new(Node::Pow(base, exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Arc<Node>, ExprError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Arc::new(Node::Num(v))),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.bump();
                    if name == "atan2" {
                        let y = self.expr()?;
                        self.expect(Tok::Comma, "',' in atan2(y, x)")?;
                        let x = self.expr()?;
                        self.expect(Tok::RParen, "')'")?;
                        return Ok(Arc::new(Node::Atan2(y, x)));
                    }
                    let f = Func::from_name(&name)
                        .ok_or_else(|| ExprError::Syntax { pos, message: format!("unknown function '{name}'") })?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "')'")?;
                    return Ok(Arc::new(Node::Call(f, arg)));
                }
                if let Some(i) = self.vocab.coords.iter().position(|c| *c == name) {
                    Ok(Arc::new(Node::Coord(i)))
                } else if let Some(i) = self.vocab.params.iter().position(|c| *c == name) {
                    Ok(Arc::new(Node::Param(i)))
                } else {
                    Err(ExprError::UnknownIdentifier { name, pos })
                }
            }
            Tok::End => Err(ExprError::Syntax { pos, message: "unexpected end of input".into() }),
            t => Err(ExprError::Syntax { pos, message: format!("unexpected token {t:?}") }),
        }
    }
}

/// Parse `src` against the given coordinate and parameter names.
///
/// Precedence, loosest first: `+ -`, `* /`, unary `-`, `^` (right
/// associative, so `-r^2` is `-(r^2)` and `2^-x` is allowed).
pub fn parse_expression(src: &str, coords: &[&str], params: &[&str]) -> Result<Expression, ExprError> {
    parse_with(src, Arc::new(Vocabulary::new(coords, params)))
}

pub fn parse_with(src: &str, vocab: Arc<Vocabulary>) -> Result<Expression, ExprError> {
    if src.trim().is_empty() {
        return Err(ExprError::Syntax { pos: 0, message: "empty expression".into() });
    }
    if let Some(dup) = vocab.coords.iter().find(|c| vocab.params.contains(c)) {
        return Err(ExprError::Syntax { pos: 0, message: format!("'{dup}' declared as both coordinate and parameter") });
    }
    let mut p = Parser { toks: tokenize(src)?, at: 0, vocab: &vocab };
    let root = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(ExprError::Syntax { pos: p.pos(), message: "trailing input".into() });
    }
    Ok(Expression::from_node(root, vocab))
}
