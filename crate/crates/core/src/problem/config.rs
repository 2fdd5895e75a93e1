//! TOML problem configuration.
//!
//! ```toml
//! alpha = 0.5
//! T = 2.0
//! dim = 2
//! terminal_value = [0.25, 0.6]
//! rhs = """
//! -3*y[1]
//! -2*y[1] - y[2]
//! """
//!
//! [constants]
//! lam = -1.5
//!
//! [semilinear]
//! L = [-3.0, 0.0, -2.0, -1.0]
//! residual = """
//! 0
//! 0
//! """
//!
//! [mesh]
//! kind = "graded"
//! n = 100
//! h1 = 1e-14
//!
//! [solver]
//! k = 22
//! s = 20
//! tol = 1e-14
//! variant = "newton"
//! eps = 1e-10
//! ```
//!
//! Setting `builtin = <id>` instead of `rhs` starts from a built-in problem;
//! any other fields present then override its data.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Deserialize;

use super::expr::ExprField;
use super::{builtin, FdeProblem};
use crate::error::{Error, Result};
use crate::meshing::MeshSpec;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiLinearSection {
    #[serde(rename = "L")]
    pub linear: Vec<f64>,
    pub residual: String,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub k: Option<usize>,
    pub s: Option<usize>,
    pub tol: Option<f64>,
    pub variant: Option<String>,
    pub eps: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: Option<String>,
    pub builtin: Option<usize>,
    pub nu: Option<usize>,
    pub alpha: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    pub dim: Option<usize>,
    pub terminal_value: Option<Vec<f64>>,
    pub initial_value: Option<Vec<f64>>,
    pub rhs: Option<String>,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    pub semilinear: Option<SemiLinearSection>,
    pub mesh: Option<MeshSpec>,
    #[serde(default)]
    pub solver: SolverSection,
}

impl ProblemConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn into_problem(self) -> Result<FdeProblem> {
        let mut problem = match (self.builtin, &self.rhs) {
            (Some(_), Some(_)) => return Err(Error::Config("give either 'builtin' or 'rhs', not both".into())),
            (None, None) => return Err(Error::Config("one of 'builtin' or 'rhs' is required".into())),
            (Some(6), None) => builtin::example6(self.nu.unwrap_or(builtin::DEFAULT_NU))?,
            (Some(id), None) => builtin::builtin(id)?,
            (None, Some(src)) => {
                let dim = self.dim.ok_or_else(|| Error::Config("'dim' is required with 'rhs'".into()))?;
                let alpha = self.alpha.ok_or_else(|| Error::Config("'alpha' is required with 'rhs'".into()))?;
                let horizon = self.horizon.ok_or_else(|| Error::Config("'T' is required with 'rhs'".into()))?;
                let field = ExprField::parse(src, dim, &self.constants)?;
                FdeProblem::new(self.name.clone().unwrap_or_else(|| "custom".into()), alpha, horizon, Arc::new(field))?
            }
        };
        if self.builtin.is_some() {
            if let Some(dim) = self.dim {
                if dim != problem.dim() {
                    return Err(Error::Config(format!("'dim' = {dim} contradicts built-in dimension {}", problem.dim())));
                }
            }
            if self.alpha.is_some() || self.horizon.is_some() {
                return Err(Error::Config("'alpha' and 'T' cannot override a built-in problem".into()));
            }
            if let Some(name) = &self.name {
                problem.name = name.clone();
            }
        }
        if let Some(eta) = self.terminal_value {
            problem = problem.with_terminal(eta)?;
        }
        if let Some(rho) = self.initial_value {
            problem = problem.with_initial(rho)?;
        }
        if let Some(section) = self.semilinear {
            let m = problem.dim();
            if section.linear.len() != m * m {
                return Err(Error::Config(format!("'L' needs {} entries, found {}", m * m, section.linear.len())));
            }
            let linear = DMatrix::from_row_slice(m, m, &section.linear);
            let residual = ExprField::parse(&section.residual, m, &self.constants)?;
            problem = problem.with_split(linear, Arc::new(residual))?;
        }
        if let Some(mesh) = self.mesh {
            problem = problem.with_mesh(mesh);
        }
        Ok(problem)
    }
}

/// Reads a configuration file and builds the problem and solver settings.
pub fn load_config(path: &Path) -> Result<(FdeProblem, SolverSection)> {
    let text = std::fs::read_to_string(path)?;
    let cfg = ProblemConfig::parse(&text)?;
    let solver = cfg.solver.clone();
    Ok((cfg.into_problem()?, solver))
}
