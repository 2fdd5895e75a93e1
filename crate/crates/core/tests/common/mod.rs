//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use rug::ops::Pow;
use rug::Float;

pub const PREC: u32 = 200;

fn f(v: f64) -> Float {
    Float::with_val(PREC, v)
}

/// Generalized binomial C(a, n) = a(a−1)…(a−n+1)/n!.
fn binomial(a: &Float, n: usize) -> Float {
    let mut out = f(1.0);
    for i in 0..n {
        out *= Float::with_val(PREC, a - i as u32);
        out /= (i + 1) as u32;
    }
    out
}

/// P_j(x) = sqrt((2j+α)/α) · P̄_j^(α−1,0)(2x−1) from the explicit sum
/// P̄_j^(a,b)(u) = Σ_m C(j+a, j−m) C(j+b, m) ((u−1)/2)^m ((u+1)/2)^(j−m).
pub fn jacobi_explicit(alpha: f64, j: usize, x: f64) -> f64 {
    let a = f(alpha - 1.0);
    let u = Float::with_val(PREC, f(x) * 2u32) - 1u32;
    let lo = Float::with_val(PREC, &u - 1u32) / 2u32;
    let hi = Float::with_val(PREC, &u + 1u32) / 2u32;
    let ja = Float::with_val(PREC, &a + j as u32);
    let jb = f(j as f64);
    let mut sum = f(0.0);
    for m in 0..=j {
        let term = binomial(&ja, j - m) * binomial(&jb, m);
        let powers = Float::with_val(PREC, Pow::pow(&lo, m as u32)) * Float::with_val(PREC, Pow::pow(&hi, (j - m) as u32));
        sum += term * powers;
    }
    let norm = (f(2.0 * j as f64 + alpha) / f(alpha)).sqrt();
    (sum * norm).to_f64()
}

pub fn gamma_big(x: f64) -> Float {
    f(x).gamma()
}

/// ∫_a^b (x − τ)^(α−1) P_j(τ) dτ / Γ(α) with x − τ = w^q. Choosing
/// qα − 1 ≥ 4 leaves only a mild w^(qα−1) endpoint factor, which
/// Clenshaw–Curtis handles to full precision.
fn riemann_liouville(alpha: f64, j: usize, x: f64, a: f64, b: f64) -> f64 {
    let q = (5.0 / alpha).ceil();
    let lo = (x - b).max(0.0).powf(1.0 / q);
    let hi = (x - a).powf(1.0 / q);
    let integral = quadrature::clenshaw_curtis::integrate(
        |w| q * w.powf(q * alpha - 1.0) * jacobi_explicit(alpha, j, (x - w.powf(q)).clamp(0.0, 1.0)),
        lo,
        hi,
        1e-15,
    )
    .integral;
    integral / gamma_big(alpha).to_f64()
}

/// I^α P_j(c).
pub fn frac_int_oracle(alpha: f64, j: usize, c: f64) -> f64 {
    riemann_liouville(alpha, j, c, 0.0, c)
}

/// J_j(x), the history integral over the unit interval for x > 1.
pub fn kernel_oracle(alpha: f64, j: usize, x: f64) -> f64 {
    riemann_liouville(alpha, j, x, 0.0, 1.0)
}

/// E_{1/2}(z) = exp(z²) erfc(−z).
pub fn ml_half(z: f64) -> f64 {
    (z * z).exp() * libm::erfc(-z)
}

/// Root of h1 (r^N − 1)/(r − 1) = T by bisection in 200-bit arithmetic.
pub fn ratio_bisection(horizon: f64, n: usize, h1: f64) -> f64 {
    let target = f(horizon);
    let h = f(h1);
    let total = |r: &Float| -> Float {
        let rn = Float::with_val(PREC, Pow::pow(r, n as u32));
        Float::with_val(PREC, &h * Float::with_val(PREC, rn - 1u32)) / Float::with_val(PREC, r - 1u32)
    };
    let mut lo = f(1.0 + 1e-12);
    let mut hi = f(2.0);
    while total(&hi) < target {
        hi *= 2u32;
    }
    for _ in 0..PREC {
        let mid = Float::with_val(PREC, &lo + &hi) / 2u32;
        if total(&mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo.to_f64()
}
