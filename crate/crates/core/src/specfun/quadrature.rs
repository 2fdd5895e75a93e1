//! Gauss–Jacobi rule for the normalized weight α(1−x)^(α−1) on [0, 1].

use rug::Float;

use super::jacobi::{check_alpha, Recurrence};
use super::precise::{flt, BASE_PREC};
use crate::error::{Error, Result};

const MAX_NEWTON: usize = 200;

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    alpha: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Nodes before rounding, kept for table construction.
    pub(crate) precise_nodes: Vec<Float>,
}

impl QuadratureRule {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Applies the rule to `f`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&c, &b)| b * f(c))
            .sum()
    }
}

/// Zeros of P_k with their Christoffel weights.
///
/// Roots are found one at a time by Newton's method on the recurrence,
/// started from Chebyshev points and deflated against the roots already
/// found, then polished without deflation.
pub fn gauss_jacobi_rule(alpha: f64, k: usize) -> Result<QuadratureRule> {
    check_alpha(alpha)?;
    if k == 0 {
        return Err(Error::InvalidInput("quadrature needs at least one node".into()));
    }
    let prec = BASE_PREC;
    let rec = Recurrence::new(alpha, k, prec);
    let eps = Float::with_val(prec, Float::i_exp(1, -(prec as i32) + 24));
    let mut roots: Vec<Float> = Vec::with_capacity(k);

    for i in 0..k {
        let theta = std::f64::consts::PI * (2 * (k - i) - 1) as f64 / (2 * k) as f64;
        let mut x = flt(prec, 0.5 * (1.0 + theta.cos()));
        let mut converged = false;
        for _ in 0..MAX_NEWTON {
            let (p, dp) = rec.eval_top_with_derivative(&x);
            let mut deflate = Float::new(prec);
            for r in &roots {
                deflate += Float::with_val(prec, 1.0 / Float::with_val(prec, &x - r));
            }
            let denom = dp - Float::with_val(prec, &p * &deflate);
            if denom.is_zero() {
                break;
            }
            let step = p / denom;
            x -= &step;
            if step.abs() <= eps {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::RootFinding { node: i, count: k });
        }
        // polish against the undeflated polynomial
        for _ in 0..4 {
            let (p, dp) = rec.eval_top_with_derivative(&x);
            x -= p / dp;
        }
        let (residual, _) = rec.eval_top_with_derivative(&x);
        if residual.abs().to_f64() > 1e-30 {
            return Err(Error::RootFinding { node: i, count: k });
        }
        roots.push(x);
    }

    roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    let strictly_inside = roots.first().is_some_and(|r| r.is_sign_positive() && !r.is_zero())
        && roots.last().is_some_and(|r| *r < 1u32)
        && roots.windows(2).all(|w| w[0] < w[1]);
    if !strictly_inside {
        return Err(Error::RootFinding { node: 0, count: k });
    }

    let mut weights = Vec::with_capacity(k);
    for x in &roots {
        let vals = rec.eval_all(x);
        let mut sum = Float::new(prec);
        for v in &vals[..k] {
            sum += Float::with_val(prec, v.square_ref());
        }
        weights.push(Float::with_val(prec, 1.0 / &sum).to_f64());
    }

    Ok(QuadratureRule {
        alpha,
        nodes: roots.iter().map(Float::to_f64).collect(),
        weights,
        precise_nodes: roots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_node_rules() {
        let r = gauss_jacobi_rule(0.5, 1).unwrap();
        assert!((r.nodes()[0] - 2.0 / 3.0).abs() < 1e-16);
        assert!((r.weights()[0] - 1.0).abs() < 1e-16);
        let r = gauss_jacobi_rule(1.0, 1).unwrap();
        assert_eq!(r.nodes()[0], 0.5);
        assert_eq!(r.weights()[0], 1.0);
    }

    #[test]
    fn twenty_two_nodes_normalized_and_sorted() {
        let r = gauss_jacobi_rule(0.3, 22).unwrap();
        let total: f64 = r.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!(r.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(r.nodes()[0] > 0.0 && r.nodes()[21] < 1.0);
        assert!(r.weights().iter().all(|&b| b > 0.0));
    }

    #[test]
    fn residuals_before_rounding() {
        let k = 16;
        let r = gauss_jacobi_rule(0.7, k).unwrap();
        let rec = Recurrence::new(0.7, k, BASE_PREC);
        for x in &r.precise_nodes {
            let (p, _) = rec.eval_top_with_derivative(x);
            assert!(p.abs().to_f64() < 1e-30);
        }
    }

    #[test]
    fn gauss_legendre_two_nodes() {
        let r = gauss_jacobi_rule(1.0, 2).unwrap();
        let d = 0.5 / 3f64.sqrt();
        assert!((r.nodes()[0] - (0.5 - d)).abs() < 1e-16);
        assert!((r.nodes()[1] - (0.5 + d)).abs() < 1e-16);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(gauss_jacobi_rule(0.5, 0).is_err());
        assert!(gauss_jacobi_rule(-0.5, 3).is_err());
    }
}
