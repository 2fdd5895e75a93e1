//! One-parameter Mittag-Leffler function E_α(z) = Σ_j z^j / Γ(αj+1).

use nalgebra::DMatrix;
use rug::Float;

use super::gamma::ln_gamma;
use super::jacobi::check_alpha;
use crate::error::{Error, Result};

/// Largest |z| accepted by [`mittag_leffler`].
pub const ML_MAX_ARG: f64 = 50.0;

/// Hard cap on series terms; small orders with large |z| exceed it.
const ML_MAX_TERMS: usize = 20_000;

/// Default cap on the truncation index of [`matrix_ml_truncated`].
pub const DEFAULT_SERIES_CAP: usize = 1000;

fn log_term(alpha: f64, log_abs_z: f64, j: usize) -> f64 {
    j as f64 * log_abs_z - ln_gamma(alpha * j as f64 + 1.0)
}

/// E_α(z) for real z, summed in extended precision.
///
/// The precision follows the size of the largest series term so that the
/// cancellation for negative arguments is absorbed; if the result turns out
/// to be small relative to that term the sum is redone with more bits.
pub fn mittag_leffler(alpha: f64, z: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !z.is_finite() || z.abs() > ML_MAX_ARG {
        return Err(Error::MittagLefflerEnvelope { alpha, z });
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let log_abs_z = z.abs().ln();

    // locate the peak term and the index where terms fall below 2^-400 of it
    let mut peak = 0.0f64;
    let mut last = 0usize;
    let mut j = 1usize;
    loop {
        let lt = log_term(alpha, log_abs_z, j);
        peak = peak.max(lt);
        if lt < peak - 400.0 * std::f64::consts::LN_2 && lt < -400.0 * std::f64::consts::LN_2 {
            last = j;
            break;
        }
        j += 1;
        if j > ML_MAX_TERMS {
            break;
        }
    }
    if last == 0 {
        return Err(Error::MittagLefflerEnvelope { alpha, z });
    }

    let peak_bits = (peak / std::f64::consts::LN_2).max(0.0).ceil() as u32;
    let mut extra = 96u32;
    loop {
        let prec = 64 + peak_bits + extra;
        let sum = ml_series(alpha, z, last, prec);
        let value = sum.to_f64();
        // the rounding floor of the summation is about 2^(peak_bits - prec + log2(last))
        let floor_log2 = peak_bits as f64 - prec as f64 + (last as f64).log2() + 4.0;
        if value != 0.0 && value.abs().log2() - floor_log2 > 60.0 {
            return Ok(value);
        }
        extra *= 2;
        if extra > 1 << 14 {
            return Err(Error::MittagLefflerEnvelope { alpha, z });
        }
    }
}

fn ml_series(alpha: f64, z: f64, last: usize, prec: u32) -> Float {
    let a = Float::with_val(prec, alpha);
    let zf = Float::with_val(prec, z);
    let mut sum = Float::with_val(prec, 1u32);
    let mut power = Float::with_val(prec, 1u32);
    for j in 1..=last {
        power *= &zf;
        let arg = Float::with_val(prec, &a * j as u32) + 1u32;
        sum += Float::with_val(prec, &power / arg.gamma());
    }
    sum
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Truncated matrix series Σ_{j=0}^{J} (L T^α)^j / Γ(αj+1).
///
/// Terms are accumulated while their infinity norm exceeds `eps`; `J` is the
/// index of the last term kept, so the first omitted term already satisfies
/// ‖(L T^α)^(J+1)‖ / Γ(α(J+1)+1) ≤ eps.
pub fn matrix_ml_truncated(
    alpha: f64,
    linear: &DMatrix<f64>,
    horizon: f64,
    eps: f64,
    cap: usize,
) -> Result<(DMatrix<f64>, usize)> {
    check_alpha(alpha)?;
    if !linear.is_square() {
        return Err(Error::InvalidInput("linear part must be square".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("series tolerance must be positive".into()));
    }
    let m = linear.nrows();
    let scaled = linear * horizon.powf(alpha);
    let mut term = DMatrix::<f64>::identity(m, m);
    let mut sum = term.clone();
    for j in 0..cap {
        // term_{j+1} = term_j · (L T^α) · Γ(αj+1)/Γ(α(j+1)+1)
        let ratio = (ln_gamma(alpha * j as f64 + 1.0) - ln_gamma(alpha * (j + 1) as f64 + 1.0)).exp();
        term = &term * &scaled * ratio;
        if inf_norm(&term) <= eps {
            return Ok((sum, j));
        }
        sum += &term;
    }
    Err(Error::SeriesCap { cap })
}
