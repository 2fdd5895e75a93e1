//! Riemann–Liouville integrals of the basis, I^α P_j(c), and the memory
//! kernels J_j^α(x) = (1/Γ(α)) ∫_0^1 (x−τ)^(α−1) P_j(τ) dτ for x > 1.
//!
//! Everything is expanded in monomials and evaluated in extended precision:
//!
//! * I^α τ^q (c) = Γ(q+1)/Γ(q+1+α) · c^(q+α)
//! * M_q(x) = ∫_0^1 (x−τ)^(α−1) τ^q dτ = x^(q+α) B(1/x; q+1, α) follows the
//!   incomplete-beta recurrence M_q = (q x M_{q−1} − (x−1)^α)/(q+α) with
//!   M_0 = (x^α − (x−1)^α)/α. The recurrence amplifies rounding by about x
//!   per step, so the precision grows with log2(x).
//! * above [`TAYLOR_THRESHOLD`] the kernel (x−τ)^(α−1) is expanded in τ/x and
//!   combined with the plain moments ∫_0^1 τ^i P_j(τ) dτ.

use rayon::prelude::*;
use rug::ops::Pow;
use rug::Float;

use super::jacobi::JacobiBasis;
use super::precise::{flt, lift, BASE_PREC};
use crate::error::{Error, Result};

/// Arguments above this value use the large-argument expansion.
pub const TAYLOR_THRESHOLD: f64 = 1e4;

const TAYLOR_TERMS: usize = 28;

/// Per-basis constants for the fractional integrals.
#[derive(Debug, Clone)]
pub(crate) struct FracData {
    /// Γ(q+1)/Γ(q+1+α), q = 0..s-1.
    ratios: Vec<Float>,
    inv_gamma_alpha: Float,
    /// Γ(α+1) rounded to working precision.
    pub gamma_alpha1: f64,
    /// Binomial-series coefficients of (1−u)^(α−1).
    taylor: Vec<Float>,
    /// `[j][i]` = ∫_0^1 τ^i P_j(τ) dτ.
    moments: Vec<Vec<Float>>,
}

impl FracData {
    pub fn new(alpha: f64, monomials: &[Vec<Float>]) -> Self {
        let prec = BASE_PREC;
        let s = monomials.len();
        let a = flt(prec, alpha);
        let gamma_a1 = Float::with_val(prec, &a + 1u32).gamma();
        let mut ratios = Vec::with_capacity(s);
        ratios.push(Float::with_val(prec, 1.0 / &gamma_a1));
        for q in 1..s {
            let prev = &ratios[q - 1];
            let factor = Float::with_val(prec, q as u32) / Float::with_val(prec, &a + q as u32);
            ratios.push(Float::with_val(prec, prev * &factor));
        }
        let inv_gamma_alpha = Float::with_val(prec, 1.0 / Float::with_val(prec, a.gamma_ref()));

        let mut taylor = Vec::with_capacity(TAYLOR_TERMS);
        taylor.push(flt(prec, 1.0));
        for i in 1..TAYLOR_TERMS {
            let f = (Float::with_val(prec, i as u32) - &a) / i as u32;
            let next = Float::with_val(prec, &taylor[i - 1] * &f);
            taylor.push(next);
        }

        let moments = monomials
            .iter()
            .map(|coeffs| {
                (0..TAYLOR_TERMS)
                    .map(|i| {
                        let mut acc = Float::new(prec);
                        for (q, c) in coeffs.iter().enumerate() {
                            acc += Float::with_val(prec, c / (i + q + 1) as u32);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();

        Self {
            ratios,
            inv_gamma_alpha,
            gamma_alpha1: gamma_a1.to_f64(),
            taylor,
            moments,
        }
    }
}

impl JacobiBasis {
    /// (I^α P_0(c), ..., I^α P_{s−1}(c)) for c ∈ [0, 1].
    pub fn frac_int(&self, c: f64) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::InvalidInput(format!("abscissa {c} is outside [0, 1]")));
        }
        Ok(round_all(self.frac_int_precise(&flt(BASE_PREC, c))))
    }

    pub(crate) fn frac_int_precise(&self, c: &Float) -> Vec<Float> {
        let prec = BASE_PREC;
        let s = self.len();
        if c.is_zero() {
            return vec![Float::new(prec); s];
        }
        let frac = &self.frac;
        let alpha = flt(prec, self.alpha());
        let c_alpha = Float::with_val(prec, Pow::pow(c, &alpha));
        // terms[q] = Γ(q+1)/Γ(q+1+α) c^(q+α)
        let mut terms = Vec::with_capacity(s);
        let mut power = c_alpha;
        for q in 0..s {
            terms.push(Float::with_val(prec, &frac.ratios[q] * &power));
            power *= c;
        }
        self.monomials
            .iter()
            .map(|coeffs| {
                let mut acc = Float::new(prec);
                for (a, t) in coeffs.iter().zip(&terms) {
                    acc += Float::with_val(prec, a * t);
                }
                acc
            })
            .collect()
    }

    /// (J_0^α(x), ..., J_{s−1}^α(x)) for x > 1.
    pub fn memory_kernel(&self, x: f64) -> Result<Vec<f64>> {
        if !(x > 1.0) || !x.is_finite() {
            return Err(Error::KernelArgument(x));
        }
        Ok(self.memory_kernel_precise(&flt(BASE_PREC, x)))
    }

    /// Kernel values for an argument already held in extended precision.
    pub(crate) fn memory_kernel_precise(&self, x: &Float) -> Vec<f64> {
        if x.to_f64() > TAYLOR_THRESHOLD {
            self.kernel_taylor(x)
        } else {
            self.kernel_recurrence(x)
        }
    }

    pub(crate) fn kernel_recurrence(&self, x: &Float) -> Vec<f64> {
        let s = self.len();
        let bits_per_step = x.to_f64().log2().max(0.0).ceil() as u32 + 1;
        let prec = BASE_PREC + (s as u32 + 1) * bits_per_step + 16;
        let alpha = flt(prec, self.alpha());
        let x = lift(prec, x);
        let xm1 = Float::with_val(prec, &x - 1u32);
        let xm1_alpha = Float::with_val(prec, Pow::pow(&xm1, &alpha));
        let x_alpha = Float::with_val(prec, Pow::pow(&x, &alpha));
        let mut moments = Vec::with_capacity(s);
        moments.push(Float::with_val(prec, &x_alpha - &xm1_alpha) / &alpha);
        for q in 1..s {
            let mut m = Float::with_val(prec, &x * &moments[q - 1]) * q as u32;
            m -= &xm1_alpha;
            m /= Float::with_val(prec, &alpha + q as u32);
            moments.push(m);
        }
        self.monomials
            .iter()
            .map(|coeffs| {
                let mut acc = Float::new(prec);
                for (a, m) in coeffs.iter().zip(&moments) {
                    acc += Float::with_val(prec, a * m);
                }
                (acc * &self.frac.inv_gamma_alpha).to_f64()
            })
            .collect()
    }

    pub(crate) fn kernel_taylor(&self, x: &Float) -> Vec<f64> {
        let prec = BASE_PREC;
        let frac = &self.frac;
        let alpha = flt(prec, self.alpha());
        let inv_x = Float::with_val(prec, 1.0 / x);
        let am1 = Float::with_val(prec, &alpha - 1u32);
        let lead = Float::with_val(prec, Pow::pow(x, &am1)) * &frac.inv_gamma_alpha;
        let mut scaled = Vec::with_capacity(TAYLOR_TERMS);
        let mut power = flt(prec, 1.0);
        for t in &frac.taylor {
            scaled.push(Float::with_val(prec, t * &power));
            power *= &inv_x;
        }
        frac.moments
            .iter()
            .map(|mu| {
                let mut acc = Float::new(prec);
                for (m, w) in mu.iter().zip(&scaled) {
                    acc += Float::with_val(prec, m * w);
                }
                (acc * &lead).to_f64()
            })
            .collect()
    }
}

fn round_all(v: Vec<Float>) -> Vec<f64> {
    v.iter().map(Float::to_f64).collect()
}

pub fn frac_int_basis(basis: &JacobiBasis, c: f64) -> Result<Vec<f64>> {
    basis.frac_int(c)
}

pub fn memory_kernel(basis: &JacobiBasis, x: f64) -> Result<Vec<f64>> {
    basis.memory_kernel(x)
}

/// Kernel values J_j^α over a rectangular set of arguments indexed by a
/// distance `d = 1..=rows` and an abscissa slot `0..cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCache {
    rows: usize,
    cols: usize,
    width: usize,
    values: Vec<f64>,
}

impl KernelCache {
    /// Evaluates `arg(d, col)` for every cell in parallel.
    pub fn build<F>(basis: &JacobiBasis, rows: usize, cols: usize, arg: F) -> Self
    where
        F: Fn(usize, usize) -> Float + Sync,
    {
        let width = basis.len();
        let values: Vec<f64> = (0..rows * cols)
            .into_par_iter()
            .flat_map_iter(|cell| {
                let d = cell / cols + 1;
                let col = cell % cols;
                basis.memory_kernel_precise(&arg(d, col))
            })
            .collect();
        Self {
            rows,
            cols,
            width,
            values,
        }
    }

    pub(crate) fn from_parts(rows: usize, cols: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols * width {
            return Err(Error::Cache(format!(
                "kernel table has {} entries, expected {}",
                values.len(),
                rows * cols * width
            )));
        }
        Ok(Self {
            rows,
            cols,
            width,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// (J_0, ..., J_{s−1}) for distance `d ≥ 1` and slot `col`.
    #[inline]
    pub fn get(&self, d: usize, col: usize) -> &[f64] {
        debug_assert!(d >= 1 && d <= self.rows && col < self.cols);
        let start = ((d - 1) * self.cols + col) * self.width;
        &self.values[start..start + self.width]
    }
}
