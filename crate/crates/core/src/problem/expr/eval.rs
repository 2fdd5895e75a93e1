//! Pointwise evaluation and forward-mode differentiation of parsed expressions.

use super::ast::{BinOp, Expr, Func};
use super::parser::gamma_constant;
use super::ExprError;

fn domain(msg: impl Into<String>) -> ExprError {
    ExprError::Domain(msg.into())
}

fn pow_value(a: f64, b: f64) -> Result<f64, ExprError> {
    if a < 0.0 && b.fract() != 0.0 {
        return Err(domain(format!("negative base {a} with non-integer exponent {b}")));
    }
    if a == 0.0 && b < 0.0 {
        return Err(domain("zero raised to a negative power"));
    }
    Ok(a.powf(b))
}

fn call_value(func: Func, args: &[f64]) -> Result<f64, ExprError> {
    let x = args[0];
    Ok(match func {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tan => x.tan(),
        Func::Exp => x.exp(),
        Func::Ln => {
            if x <= 0.0 {
                return Err(domain(format!("ln of non-positive value {x}")));
            }
            x.ln()
        }
        Func::Sqrt => {
            if x < 0.0 {
                return Err(domain(format!("sqrt of negative value {x}")));
            }
            x.sqrt()
        }
        Func::Abs => x.abs(),
        Func::Sign => {
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
        Func::Pow => pow_value(x, args[1])?,
        Func::Gamma => gamma_constant(x),
    })
}

/// Value of `e` at (t, y).
pub fn eval(e: &Expr, t: f64, y: &[f64]) -> Result<f64, ExprError> {
    let v = match e {
        Expr::Num(v) => *v,
        Expr::Time => t,
        Expr::State(i) => y[*i],
        Expr::Const { value, .. } => *value,
        Expr::Neg(a) => -eval(a, t, y)?,
        Expr::Bin(op, a, b) => {
            let (a, b) = (eval(a, t, y)?, eval(b, t, y)?);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(domain("division by zero"));
                    }
                    a / b
                }
                BinOp::Pow => pow_value(a, b)?,
            }
        }
        Expr::Call(func, args) => {
            let vals = args.iter().map(|a| eval(a, t, y)).collect::<Result<Vec<_>, _>>()?;
            call_value(*func, &vals)?
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(domain(format!("non-finite value while evaluating {e}")))
    }
}

/// Value and gradient with respect to y.
#[derive(Debug, Clone)]
struct Dual {
    v: f64,
    d: Vec<f64>,
}

impl Dual {
    fn constant(v: f64, m: usize) -> Self {
        Self { v, d: vec![0.0; m] }
    }

    fn scale(mut self, s: f64, v: f64) -> Self {
        for x in &mut self.d {
            *x *= s;
        }
        self.v = v;
        self
    }

    fn is_flat(&self) -> bool {
        self.d.iter().all(|&x| x == 0.0)
    }
}

fn pow_dual(a: Dual, b: Dual) -> Result<Dual, ExprError> {
    let v = pow_value(a.v, b.v)?;
    let m = a.d.len();
    let mut d = vec![0.0; m];
    if !a.is_flat() {
        // b a^(b-1) a'
        let s = b.v * pow_value(a.v, b.v - 1.0)?;
        for (o, x) in d.iter_mut().zip(&a.d) {
            *o += s * x;
        }
    }
    if !b.is_flat() {
        if a.v <= 0.0 {
            return Err(domain("variable exponent requires a positive base"));
        }
        let s = v * a.v.ln();
        for (o, x) in d.iter_mut().zip(&b.d) {
            *o += s * x;
        }
    }
    Ok(Dual { v, d })
}

fn eval_dual(e: &Expr, t: f64, y: &[f64]) -> Result<Dual, ExprError> {
    let m = y.len();
    Ok(match e {
        Expr::Num(v) => Dual::constant(*v, m),
        Expr::Const { value, .. } => Dual::constant(*value, m),
        Expr::Time => Dual::constant(t, m),
        Expr::State(i) => {
            let mut d = Dual::constant(y[*i], m);
            d.d[*i] = 1.0;
            d
        }
        Expr::Neg(a) => {
            let a = eval_dual(a, t, y)?;
            let v = -a.v;
            a.scale(-1.0, v)
        }
        Expr::Bin(op, a, b) => {
            let a = eval_dual(a, t, y)?;
            let b = eval_dual(b, t, y)?;
            match op {
                BinOp::Add | BinOp::Sub => {
                    let sign = if *op == BinOp::Add { 1.0 } else { -1.0 };
                    let d = a.d.iter().zip(&b.d).map(|(x, z)| x + sign * z).collect();
                    Dual { v: a.v + sign * b.v, d }
                }
                BinOp::Mul => {
                    let d = a.d.iter().zip(&b.d).map(|(x, z)| x * b.v + a.v * z).collect();
                    Dual { v: a.v * b.v, d }
                }
                BinOp::Div => {
                    if b.v == 0.0 {
                        return Err(domain("division by zero"));
                    }
                    let v = a.v / b.v;
                    let d = a.d.iter().zip(&b.d).map(|(x, z)| (x - v * z) / b.v).collect();
                    Dual { v, d }
                }
                BinOp::Pow => pow_dual(a, b)?,
            }
        }
        Expr::Call(func, args) => {
            let mut duals = args.iter().map(|a| eval_dual(a, t, y)).collect::<Result<Vec<_>, _>>()?;
            if *func == Func::Pow {
                let b = duals.pop().unwrap();
                let a = duals.pop().unwrap();
                return pow_dual(a, b);
            }
            let a = duals.pop().unwrap();
            let x = a.v;
            let v = call_value(*func, &[x])?;
            let slope = match func {
                Func::Sin => x.cos(),
                Func::Cos => -x.sin(),
                Func::Tan => 1.0 + v * v,
                Func::Exp => v,
                Func::Ln => 1.0 / x,
                Func::Sqrt => {
                    if a.is_flat() {
                        0.0
                    } else if x == 0.0 {
                        return Err(domain("sqrt is not differentiable at 0"));
                    } else {
                        0.5 / v
                    }
                }
                Func::Abs => {
                    if x > 0.0 {
                        1.0
                    } else if x < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }
                Func::Sign | Func::Gamma => 0.0,
                Func::Pow => unreachable!(),
            };
            a.scale(slope, v)
        }
    })
}

/// Value of `e` and its gradient ∂e/∂y at (t, y).
pub fn eval_with_gradient(e: &Expr, t: f64, y: &[f64]) -> Result<(f64, Vec<f64>), ExprError> {
    let d = eval_dual(e, t, y)?;
    if !d.v.is_finite() || d.d.iter().any(|x| !x.is_finite()) {
        return Err(domain(format!("non-finite derivative while evaluating {e}")));
    }
    Ok((d.v, d.d))
}
