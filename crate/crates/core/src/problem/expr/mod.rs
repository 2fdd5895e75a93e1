//! Small expression language for user-supplied right-hand sides.
//!
//! Variables are `t` and `y[1]..y[m]`; literals are doubles; `^` is
//! right-associative power. Functions: sin, cos, tan, exp, ln (alias log),
//! sqrt, abs, sign, pow(a, b), and gamma applied to constant arguments.
//! Jacobians come from forward-mode differentiation with the subgradient
//! conventions d|x|/dx = sign(x) and sign(0) = 0.

mod ast;
mod eval;
mod parser;

use std::collections::BTreeMap;

use thiserror::Error;

pub use ast::{BinOp, Expr, Func};
pub use eval::{eval, eval_with_gradient};
pub use parser::{parse_expr, parse_rhs};

use super::VectorField;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("line {line}, column {col}: undeclared identifier '{name}'")]
    Undeclared { line: usize, col: usize, name: String },
    #[error("line {line}, column {col}: state index y[{index}] exceeds dimension {dim}")]
    IndexOutOfRange {
        line: usize,
        col: usize,
        index: usize,
        dim: usize,
    },
    #[error("expected {expected} component expression(s), found {found}")]
    ComponentCount { expected: usize, found: usize },
    #[error("domain error: {0}")]
    Domain(String),
}

/// Vector field backed by one parsed expression per component.
#[derive(Debug, Clone)]
pub struct ExprField {
    components: Vec<Expr>,
}

impl ExprField {
    pub fn new(components: Vec<Expr>) -> Self {
        Self { components }
    }

    pub fn parse(source: &str, dim: usize, constants: &BTreeMap<String, f64>) -> Result<Self, ExprError> {
        Ok(Self::new(parse_rhs(source, dim, constants)?))
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }
}

impl VectorField for ExprField {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<(), ExprError> {
        for (o, e) in out.iter_mut().zip(&self.components) {
            *o = eval(e, t, y)?;
        }
        Ok(())
    }

    fn jacobian(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<(), ExprError> {
        let m = self.components.len();
        for (i, e) in self.components.iter().enumerate() {
            let (_, g) = eval_with_gradient(e, t, y)?;
            out[i * m..(i + 1) * m].copy_from_slice(&g);
        }
        Ok(())
    }
}

/// Builds a Jacobian evaluator for a list of component expressions.
pub fn ast_jacobian(components: Vec<Expr>) -> ExprField {
    ExprField::new(components)
}
