//! Small helpers around `rug::Float` for the extended-precision precomputation.

use rug::Float;

/// Working precision (bits) of every table entry before rounding to `f64`.
pub const BASE_PREC: u32 = 256;

#[inline]
pub(crate) fn flt(prec: u32, v: f64) -> Float {
    Float::with_val(prec, v)
}

#[inline]
pub(crate) fn lift(prec: u32, v: &Float) -> Float {
    Float::with_val(prec, v)
}
