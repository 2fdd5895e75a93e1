//! Shooting-Newton solution of terminal value problems for Caputo
//! fractional differential equations
//!
//! ```text
//! y^(α)(t) = f(t, y(t)),  t ∈ [0, T],  y(T) = η,  0 < α ≤ 1,
//! ```
//!
//! where the initial value ρ = y(0) is found by Newton's method applied to
//! y(T, ρ) − η, each forward solve using the FHBVM(k, s) collocation method
//! on a uniform or graded mesh.

pub mod error;
pub mod fhbvm;
pub mod meshing;
pub mod problem;
pub mod shooting;
pub mod specfun;

pub use error::{Error, Result};
pub use fhbvm::{CollocationTables, Solver, SolverConfig, Trajectory, VariationalTrajectory};
pub use meshing::{Mesh, MeshKind, MeshSpec};
pub use problem::{builtin, FdeProblem, VectorField};
pub use shooting::{newton_shoot, simplified_shoot, ShootingConfig, ShootingReport};
