//! Orthonormal Jacobi family on [0, 1] for the weight ω(x) = α(1−x)^(α−1).
//!
//! The family is P_j(x) = sqrt((2j+α)/α) · P̄_j^(α−1,0)(2x−1), which is the
//! unique orthonormal sequence with positive leading coefficients for ω. It
//! satisfies
//!
//! ```text
//! x P_j(x) = β_{j+1} P_{j+1}(x) + a_j P_j(x) + β_j P_{j−1}(x)
//! ```
//!
//! with a_0 = 1/(1+α) and, for j ≥ 1,
//!
//! ```text
//! a_j = (1 − (α−1)² / ((2j+α−1)(2j+α+1))) / 2
//! β_j = j (j+α−1) / ((2j+α−1) sqrt((2j+α)(2j+α−2)))
//! ```

use rug::Float;

use super::fracint::FracData;
use super::precise::{flt, BASE_PREC};
use crate::error::{Error, Result};

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "fractional order must lie in (0, 1], got {alpha}"
        )))
    }
}

/// Recurrence coefficients in extended precision, valid up to degree `diag.len()`.
#[derive(Debug, Clone)]
pub(crate) struct Recurrence {
    pub prec: u32,
    pub diag: Vec<Float>,
    /// `off[j]` couples P_j and P_{j-1}; `off[0]` is zero.
    pub off: Vec<Float>,
}

impl Recurrence {
    /// Coefficients a_0..a_{n-1} and β_0..β_n.
    pub fn new(alpha: f64, n: usize, prec: u32) -> Self {
        let a = flt(prec, alpha);
        let mut diag = Vec::with_capacity(n);
        let mut off = Vec::with_capacity(n + 1);
        off.push(Float::new(prec));
        for j in 0..n {
            if j == 0 {
                diag.push(Float::with_val(prec, 1.0 / Float::with_val(prec, &a + 1u32)));
            } else {
                let am1 = Float::with_val(prec, &a - 1u32);
                let lo = Float::with_val(prec, 2 * j as u32 + &am1);
                let hi = Float::with_val(prec, &lo + 2u32);
                let num = Float::with_val(prec, am1.square_ref());
                let frac = Float::with_val(prec, &num / Float::with_val(prec, &lo * &hi));
                diag.push(Float::with_val(prec, (1u32 - frac) / 2u32));
            }
        }
        for j in 1..=n {
            let jf = flt(prec, j as f64);
            let jam1 = Float::with_val(prec, &jf + &a) - 1u32;
            let two_j = Float::with_val(prec, 2 * j as u32);
            let lo = Float::with_val(prec, &two_j + &a) - 1u32;
            let p = Float::with_val(prec, &two_j + &a);
            let q = Float::with_val(prec, &p - 2u32);
            let root = Float::with_val(prec, &p * &q).sqrt();
            let num = Float::with_val(prec, &jf * &jam1);
            off.push(num / (lo * root));
        }
        Self { prec, diag, off }
    }

    pub fn degree(&self) -> usize {
        self.diag.len()
    }

    /// Values P_0(x), ..., P_n(x).
    pub fn eval_all(&self, x: &Float) -> Vec<Float> {
        let n = self.degree();
        let prec = self.prec;
        let mut out = Vec::with_capacity(n + 1);
        out.push(flt(prec, 1.0));
        for j in 0..n {
            let mut next = Float::with_val(prec, x - &self.diag[j]) * &out[j];
            if j > 0 {
                next -= Float::with_val(prec, &self.off[j] * &out[j - 1]);
            }
            next /= &self.off[j + 1];
            out.push(next);
        }
        out
    }

    /// (P_n(x), P_n'(x)).
    pub fn eval_top_with_derivative(&self, x: &Float) -> (Float, Float) {
        let n = self.degree();
        let prec = self.prec;
        let mut p_prev = Float::new(prec);
        let mut p = flt(prec, 1.0);
        let mut d_prev = Float::new(prec);
        let mut d = Float::new(prec);
        for j in 0..n {
            let shift = Float::with_val(prec, x - &self.diag[j]);
            let mut p_next = Float::with_val(prec, &shift * &p);
            p_next -= Float::with_val(prec, &self.off[j] * &p_prev);
            p_next /= &self.off[j + 1];
            let mut d_next = Float::with_val(prec, &shift * &d) + &p;
            d_next -= Float::with_val(prec, &self.off[j] * &d_prev);
            d_next /= &self.off[j + 1];
            p_prev = std::mem::replace(&mut p, p_next);
            d_prev = std::mem::replace(&mut d, d_next);
        }
        (p, d)
    }

    /// Monomial coefficients of P_0..P_n; entry `[j][q]` multiplies x^q.
    pub fn monomials(&self) -> Vec<Vec<Float>> {
        let n = self.degree();
        let prec = self.prec;
        let mut polys: Vec<Vec<Float>> = Vec::with_capacity(n + 1);
        polys.push(vec![flt(prec, 1.0)]);
        for j in 0..n {
            let mut next = vec![Float::new(prec); j + 2];
            for (q, c) in polys[j].iter().enumerate() {
                next[q + 1] += c;
                next[q] -= Float::with_val(prec, c * &self.diag[j]);
            }
            if j > 0 {
                for (q, c) in polys[j - 1].iter().enumerate() {
                    next[q] -= Float::with_val(prec, c * &self.off[j]);
                }
            }
            for c in next.iter_mut() {
                *c /= &self.off[j + 1];
            }
            polys.push(next);
        }
        polys
    }
}

/// The first `count` members of the orthonormal family for a given order.
#[derive(Debug, Clone)]
pub struct JacobiBasis {
    alpha: f64,
    count: usize,
    diag: Vec<f64>,
    off: Vec<f64>,
    /// Monomial coefficients in extended precision, `[j][q]`.
    pub(crate) monomials: Vec<Vec<Float>>,
    pub(crate) frac: FracData,
}

impl JacobiBasis {
    pub fn new(alpha: f64, count: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if count == 0 {
            return Err(Error::InvalidInput("basis needs at least one member".into()));
        }
        let rec = Recurrence::new(alpha, count - 1, BASE_PREC);
        let diag = rec.diag.iter().map(Float::to_f64).collect();
        let off = rec.off.iter().map(Float::to_f64).collect();
        let monomials = rec.monomials();
        let frac = FracData::new(alpha, &monomials);
        Ok(Self {
            alpha,
            count,
            diag,
            off,
            monomials,
            frac,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of members `s`.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Γ(α+1) rounded from extended precision.
    pub fn gamma_alpha1(&self) -> f64 {
        self.frac.gamma_alpha1
    }

    /// P_j(x) by the three-term recurrence in working precision.
    pub fn eval(&self, j: usize, x: f64) -> Result<f64> {
        if j >= self.count {
            return Err(Error::IndexOutOfRange {
                index: j,
                limit: self.count,
            });
        }
        check_unit(x)?;
        Ok(self.recur(x, j)[j])
    }

    /// (P_0(x), ..., P_{s-1}(x)).
    pub fn eval_all(&self, x: f64) -> Result<Vec<f64>> {
        check_unit(x)?;
        Ok(self.recur(x, self.count - 1))
    }

    fn recur(&self, x: f64, top: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(top + 1);
        out.push(1.0);
        for j in 0..top {
            let prev = if j > 0 { self.off[j] * out[j - 1] } else { 0.0 };
            out.push(((x - self.diag[j]) * out[j] - prev) / self.off[j + 1]);
        }
        out
    }
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("point {x} is outside [0, 1]")))
    }
}

/// Convenience wrapper matching the free-function form.
pub fn jacobi_eval(basis: &JacobiBasis, j: usize, x: f64) -> Result<f64> {
    basis.eval(j, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_member_is_one() {
        let b = JacobiBasis::new(0.5, 4).unwrap();
        assert_eq!(b.eval(0, 0.3).unwrap(), 1.0);
    }

    #[test]
    fn legendre_limit() {
        let b = JacobiBasis::new(1.0, 3).unwrap();
        assert!((b.eval(1, 1.0).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        // sqrt(5) (6x^2 - 6x + 1)
        let x = 0.3;
        let p2 = 5f64.sqrt() * (6.0 * x * x - 6.0 * x + 1.0);
        assert!((b.eval(2, x).unwrap() - p2).abs() < 1e-14);
    }

    #[test]
    fn index_and_domain_errors() {
        let b = JacobiBasis::new(0.3, 3).unwrap();
        assert!(matches!(b.eval(3, 0.5), Err(Error::IndexOutOfRange { .. })));
        assert!(b.eval(1, 1.5).is_err());
        assert!(JacobiBasis::new(0.0, 3).is_err());
        assert!(JacobiBasis::new(1.2, 3).is_err());
    }

    #[test]
    fn monomials_agree_with_recurrence() {
        let rec = Recurrence::new(0.3, 12, BASE_PREC);
        let mono = rec.monomials();
        let x = flt(BASE_PREC, 0.37);
        let vals = rec.eval_all(&x);
        for (j, coeffs) in mono.iter().enumerate() {
            let mut h = Float::new(BASE_PREC);
            for c in coeffs.iter().rev() {
                h = h * &x + c;
            }
            let diff = Float::with_val(BASE_PREC, &h - &vals[j]).abs().to_f64();
            assert!(diff < 1e-50, "degree {j}: {diff:e}");
        }
    }

    #[test]
    fn no_overflow_to_degree_64() {
        let b = JacobiBasis::new(0.2, 65).unwrap();
        for &x in &[0.0, 0.25, 0.999, 1.0] {
            assert!(b.eval_all(x).unwrap().iter().all(|v| v.is_finite()));
        }
    }
}
