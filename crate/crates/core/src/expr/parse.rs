//! Recursive-descent parser for coordinate expressions.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | 'pi' | name | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | exp | sqrt | ln
//! ```
//!
//! Exponents must be constant (they may not mention coordinates).

use std::fmt;

use thiserror::Error;

use super::{Exponent, Func, Node, ScalarExpr, VarSpace};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at byte {position}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    InvalidNumber(String),
    UnboundIdentifier(String),
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    NonConstantExponent,
    TrailingInput,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            Self::UnexpectedToken(t) => write!(f, "unexpected token {t:?}"),
            Self::UnexpectedEnd => write!(f, "unexpected end of input"),
            Self::InvalidNumber(s) => write!(f, "invalid number {s:?}"),
            Self::UnboundIdentifier(s) => write!(f, "unbound identifier {s:?}"),
            Self::Arity {
                name,
                expected,
                found,
            } => write!(f, "{name} takes {expected} argument(s), got {found}"),
            Self::NonConstantExponent => write!(f, "exponent must not depend on coordinates"),
            Self::TrailingInput => write!(f, "trailing input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        while let Some(tok) = lx.next_token()? {
            out.push(tok);
        }
        Ok(out)
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next_token(&mut self) -> Result<Option<(Tok, usize)>, ParseError> {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        if c.is_ascii_digit() || c == '.' {
            let bytes = self.src.as_bytes();
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &self.src[start..end];
            self.pos = end;
            let value: f64 = text.parse().map_err(|_| ParseError {
                kind: ParseErrorKind::InvalidNumber(text.to_string()),
                position: start,
            })?;
            return Ok(Some((Tok::Num(value), start)));
        }
        if c.is_alphabetic() || c == '_' {
            let mut end = start;
            for ch in self.src[start..].chars() {
                if ch.is_alphanumeric() || ch == '_' {
                    end += ch.len_utf8();
                } else {
                    break;
                }
            }
            self.pos = end;
            return Ok(Some((Tok::Ident(self.src[start..end].to_string()), start)));
        }
        if "+-*/^(),".contains(c) {
            self.pos += 1;
            return Ok(Some((Tok::Op(c), start)));
        }
        Err(ParseError {
            kind: ParseErrorKind::UnexpectedChar(c),
            position: start,
        })
    }
}

#[derive(Debug, Clone)]
enum Ast {
    Num(f64),
    Var(usize),
    Neg(Box<Ast>),
    Func(Func, Box<Ast>),
    Bin(char, Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, Box<Ast>),
}

impl Ast {
    fn mentions_var(&self) -> bool {
        match self {
            Ast::Num(_) => false,
            Ast::Var(_) => true,
            Ast::Neg(a) | Ast::Func(_, a) => a.mentions_var(),
            Ast::Bin(_, a, b) | Ast::Pow(a, b) => a.mentions_var() || b.mentions_var(),
        }
    }
}

struct Parser<'s> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    end: usize,
    vars: &'s VarSpace,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn err<T>(&self, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError {
            kind,
            position: self.pos(),
        })
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: char) -> Result<(), ParseError> {
        if self.eat_op(op) {
            Ok(())
        } else {
            match self.peek() {
                None => self.err(ParseErrorKind::UnexpectedEnd),
                Some(t) => self.err(ParseErrorKind::UnexpectedToken(format!("{t:?}"))),
            }
        }
    }

    fn expr(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_op('+') {
                lhs = Ast::Bin('+', Box::new(lhs), Box::new(self.term()?));
            } else if self.eat_op('-') {
                lhs = Ast::Bin('-', Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_op('*') {
                lhs = Ast::Bin('*', Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat_op('/') {
                lhs = Ast::Bin('/', Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Ast, ParseError> {
        if self.eat_op('-') {
            return Ok(Ast::Neg(Box::new(self.unary()?)));
        }
        if self.eat_op('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Ast, ParseError> {
        let base = self.primary()?;
        if self.eat_op('^') {
            let at = self.pos();
            let exponent = self.unary()?;
            if exponent.mentions_var() {
                return Err(ParseError {
                    kind: ParseErrorKind::NonConstantExponent,
                    position: at,
                });
            }
            return Ok(Ast::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Ast, ParseError> {
        let pos = self.pos();
        let Some(tok) = self.peek().cloned() else {
            return self.err(ParseErrorKind::UnexpectedEnd);
        };
        self.at += 1;
        match tok {
            Tok::Num(v) => Ok(Ast::Num(v)),
            Tok::Op('(') => {
                let inner = self.expr()?;
                self.expect_op(')')?;
                Ok(inner)
            }
            Tok::Op(c) => Err(ParseError {
                kind: ParseErrorKind::UnexpectedToken(c.to_string()),
                position: pos,
            }),
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    if !self.eat_op('(') {
                        return Err(ParseError {
                            kind: ParseErrorKind::Arity {
                                name,
                                expected: 1,
                                found: 0,
                            },
                            position: pos,
                        });
                    }
                    let mut args = Vec::new();
                    if !self.eat_op(')') {
                        loop {
                            args.push(self.expr()?);
                            if self.eat_op(',') {
                                continue;
                            }
                            self.expect_op(')')?;
                            break;
                        }
                    }
                    if args.len() != 1 {
                        return Err(ParseError {
                            kind: ParseErrorKind::Arity {
                                name,
                                expected: 1,
                                found: args.len(),
                            },
                            position: pos,
                        });
                    }
                    return Ok(Ast::Func(func, Box::new(args.pop().unwrap())));
                }
                if name == "pi" {
                    return Ok(Ast::Num(std::f64::consts::PI));
                }
                match self.vars.lookup(&name) {
                    Some(i) => Ok(Ast::Var(i)),
                    None => Err(ParseError {
                        kind: ParseErrorKind::UnboundIdentifier(name),
                        position: pos,
                    }),
                }
            }
        }
    }
}

fn const_value(ast: &Ast) -> f64 {
    match ast {
        Ast::Num(v) => *v,
        Ast::Var(_) => unreachable!("checked constant"),
        Ast::Neg(a) => -const_value(a),
        Ast::Func(f, a) => f.apply(const_value(a)),
        Ast::Bin(op, a, b) => {
            let (x, y) = (const_value(a), const_value(b));
            match op {
                '+' => x + y,
                '-' => x - y,
                '*' => x * y,
                _ => x / y,
            }
        }
        Ast::Pow(a, b) => const_value(a).powf(const_value(b)),
    }
}

fn lower(ast: &Ast, nodes: &mut Vec<Node>) -> usize {
    let node = match ast {
        Ast::Num(v) => Node::Const(*v),
        Ast::Var(i) => Node::Var(*i),
        Ast::Neg(a) => Node::Neg(lower(a, nodes)),
        Ast::Func(f, a) => Node::Func(*f, lower(a, nodes)),
        Ast::Bin(op, a, b) => {
            let (l, r) = (lower(a, nodes), lower(b, nodes));
            match op {
                '+' => Node::Add(l, r),
                '-' => Node::Sub(l, r),
                '*' => Node::Mul(l, r),
                _ => Node::Div(l, r),
            }
        }
        Ast::Pow(a, b) => {
            let base = lower(a, nodes);
            Node::Pow(base, Exponent::classify(const_value(b)))
        }
    };
    nodes.push(node);
    nodes.len() - 1
}

pub(super) fn parse(source: &str, vars: &VarSpace) -> Result<ScalarExpr, ParseError> {
    let toks = Lexer::tokens(source)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: source.len(),
        vars,
    };
    let ast = p.expr()?;
    if p.at != p.toks.len() {
        return p.err(ParseErrorKind::TrailingInput);
    }
    let mut nodes = Vec::new();
    lower(&ast, &mut nodes);
    Ok(ScalarExpr::from_nodes(nodes, vars.clone()))
}
