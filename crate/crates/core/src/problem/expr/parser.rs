//! Recursive-descent parser for right-hand-side expressions.
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := atom ('^' unary)?            right-associative
//! atom    := number | 't' | 'y' '[' int ']' | name '(' args ')' | name | '(' sum ')'
//! ```

use std::collections::BTreeMap;

use super::ast::{BinOp, Expr, Func};
use super::ExprError;
use crate::specfun::gamma_rounded;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str, line: usize) -> Result<Vec<Token>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text.parse::<f64>().map_err(|_| ExprError::Syntax {
                line,
                col,
                message: format!("malformed number '{text}'"),
            })?;
            out.push(Token { tok: Tok::Num(value), line, col });
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line,
                col,
            });
        } else if "+-*/^()[],".contains(c) {
            out.push(Token { tok: Tok::Op(c), line, col });
            i += 1;
        } else {
            return Err(ExprError::Syntax {
                line,
                col,
                message: format!("unexpected character '{c}'"),
            });
        }
    }
    out.push(Token {
        tok: Tok::End,
        line,
        col: chars.len() + 1,
    });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    dim: usize,
    constants: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, tok: &Token, message: impl Into<String>) -> ExprError {
        ExprError::Syntax {
            line: tok.line,
            col: tok.col,
            message: message.into(),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        let t = self.next();
        if t.tok == Tok::Op(c) {
            Ok(())
        } else {
            Err(self.error(&t, format!("expected '{c}'")))
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.product()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek().tok {
            Tok::Op('-') => {
                self.next();
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Tok::Op('+') => {
                self.next();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek().tok == Tok::Op('^') {
            self.next();
            let exponent = self.unary()?;
            Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let tok = self.next();
        match &tok.tok {
            Tok::Num(v) => Ok(Expr::Num(*v)),
            Tok::Op('(') => {
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) if name == "t" => Ok(Expr::Time),
            Tok::Ident(name) if name == "y" => {
                self.expect('[')?;
                let idx_tok = self.next();
                let index = match idx_tok.tok {
                    Tok::Num(v) if v.fract() == 0.0 && v >= 1.0 => v as usize,
                    _ => return Err(self.error(&idx_tok, "state index must be a positive integer")),
                };
                self.expect(']')?;
                if index > self.dim {
                    return Err(ExprError::IndexOutOfRange {
                        line: idx_tok.line,
                        col: idx_tok.col,
                        index,
                        dim: self.dim,
                    });
                }
                Ok(Expr::State(index - 1))
            }
            Tok::Ident(name) => {
                if self.peek().tok == Tok::Op('(') {
                    let func = Func::from_name(name)
                        .ok_or_else(|| self.error(&tok, format!("unknown function '{name}'")))?;
                    self.next();
                    let mut args = vec![self.sum()?];
                    while self.peek().tok == Tok::Op(',') {
                        self.next();
                        args.push(self.sum()?);
                    }
                    self.expect(')')?;
                    if args.len() != func.arity() {
                        return Err(self.error(
                            &tok,
                            format!("{} expects {} argument(s), got {}", func.name(), func.arity(), args.len()),
                        ));
                    }
                    if func == Func::Gamma && !args[0].is_constant() {
                        return Err(self.error(&tok, "gamma accepts constant arguments only"));
                    }
                    Ok(Expr::Call(func, args))
                } else if let Some(&value) = self.constants.get(name.as_str()) {
                    Ok(Expr::Const {
                        name: name.clone(),
                        value,
                    })
                } else if name == "pi" {
                    Ok(Expr::Const {
                        name: name.clone(),
                        value: std::f64::consts::PI,
                    })
                } else {
                    Err(ExprError::Undeclared {
                        line: tok.line,
                        col: tok.col,
                        name: name.clone(),
                    })
                }
            }
            Tok::End => Err(self.error(&tok, "unexpected end of expression")),
            Tok::Op(c) => Err(self.error(&tok, format!("unexpected '{c}'"))),
        }
    }
}

/// Parses a single expression found on source line `line`.
pub fn parse_expr(
    src: &str,
    dim: usize,
    constants: &BTreeMap<String, f64>,
    line: usize,
) -> Result<Expr, ExprError> {
    let mut p = Parser {
        toks: lex(src, line)?,
        pos: 0,
        dim,
        constants,
    };
    let e = p.sum()?;
    let t = p.next();
    if t.tok != Tok::End {
        return Err(p.error(&t, "trailing input"));
    }
    Ok(e)
}

/// One expression per non-empty line; `#` starts a comment.
pub fn parse_rhs(
    source: &str,
    dim: usize,
    constants: &BTreeMap<String, f64>,
) -> Result<Vec<Expr>, ExprError> {
    let mut out = Vec::new();
    for (i, raw) in source.lines().enumerate() {
        let text = raw.split('#').next().unwrap_or("");
        if text.trim().is_empty() {
            continue;
        }
        out.push(parse_expr(text, dim, constants, i + 1)?);
    }
    if out.len() != dim {
        return Err(ExprError::ComponentCount {
            expected: dim,
            found: out.len(),
        });
    }
    Ok(out)
}

pub(crate) fn gamma_constant(x: f64) -> f64 {
    gamma_rounded(x)
}
