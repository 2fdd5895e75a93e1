use thiserror::Error;

use crate::problem::expr::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("root finding for Gauss-Jacobi node {node} of {count} failed to converge")]
    RootFinding { node: usize, count: usize },

    #[error("memory kernel requires an argument greater than one, got {0}")]
    KernelArgument(f64),

    #[error("Mittag-Leffler argument {z} with order {alpha} lies outside the supported envelope")]
    MittagLefflerEnvelope { alpha: f64, z: f64 },

    #[error("truncated matrix Mittag-Leffler series did not reach tolerance within {cap} terms")]
    SeriesCap { cap: usize },

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("could not bracket the grading ratio: {0}")]
    MeshBracket(String),

    #[error("fixed-point iteration on step {step} did not converge after {iterations} sweeps (last difference {difference:e})")]
    FixedPoint {
        step: usize,
        iterations: usize,
        difference: f64,
    },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("step {requested} has not been solved yet ({available} available)")]
    StepNotSolved { requested: usize, available: usize },

    #[error("time {t} lies outside [0, {horizon}]")]
    OutsideHorizon { t: f64, horizon: f64 },

    #[error("expression: {0}")]
    Field(#[from] ExprError),

    #[error("non-finite value produced by the vector field on step {step}")]
    NonFinite { step: usize },

    #[error("Newton iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("simplified Newton iteration diverged at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("table cache: {0}")]
    Cache(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
