//! Special functions and quadrature behind the collocation tables.

pub mod fracint;
pub mod gamma;
pub mod jacobi;
pub mod mittag_leffler;
pub(crate) mod precise;
pub mod quadrature;

pub use fracint::{frac_int_basis, memory_kernel, KernelCache, TAYLOR_THRESHOLD};
pub use gamma::{gamma, gamma_rounded, ln_gamma};
pub use jacobi::{jacobi_eval, JacobiBasis};
pub use mittag_leffler::{matrix_ml_truncated, mittag_leffler, DEFAULT_SERIES_CAP, ML_MAX_ARG};
pub use precise::BASE_PREC;
pub use quadrature::{gauss_jacobi_rule, QuadratureRule};
