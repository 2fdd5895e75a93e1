//! Problem model: vector fields, terminal/initial data, optional semi-linear split.

pub mod builtin;
pub mod config;
pub mod expr;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::meshing::MeshSpec;
pub use builtin::builtin;
pub use config::{load_config, ProblemConfig, SolverSection};
pub use expr::ExprError;

/// Right-hand side f(t, y) together with its Jacobian ∂f/∂y.
///
/// Jacobians are written row-major into an m×m buffer.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<(), ExprError>;
    fn jacobian(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<(), ExprError>;
}

/// Vector field given by a pair of closures.
pub struct FnField<F, J> {
    dim: usize,
    f: F,
    jac: J,
}

impl<F, J> FnField<F, J>
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
    J: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(dim: usize, f: F, jac: J) -> Self {
        Self { dim, f, jac }
    }
}

impl<F, J> VectorField for FnField<F, J>
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
    J: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<(), ExprError> {
        (self.f)(t, y, out);
        Ok(())
    }

    fn jacobian(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<(), ExprError> {
        (self.jac)(t, y, out);
        Ok(())
    }
}

/// f(t, y) = L y + g(t, y) with a constant matrix L.
#[derive(Clone)]
pub struct SemiLinear {
    pub linear: DMatrix<f64>,
    pub residual: Arc<dyn VectorField>,
}

pub type ExactFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct FdeProblem {
    pub name: String,
    pub alpha: f64,
    pub horizon: f64,
    pub field: Arc<dyn VectorField>,
    pub terminal: Option<Vec<f64>>,
    pub initial: Option<Vec<f64>>,
    pub split: Option<SemiLinear>,
    pub exact: Option<ExactFn>,
    /// Mesh recommended for the terminal value problem.
    pub mesh: Option<MeshSpec>,
}

impl fmt::Debug for FdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FdeProblem")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .field("horizon", &self.horizon)
            .field("dim", &self.dim())
            .field("terminal", &self.terminal)
            .field("initial", &self.initial)
            .field("semi_linear", &self.split.is_some())
            .field("exact", &self.exact.is_some())
            .field("mesh", &self.mesh)
            .finish()
    }
}

impl FdeProblem {
    pub fn new(name: impl Into<String>, alpha: f64, horizon: f64, field: Arc<dyn VectorField>) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidInput(format!("order {alpha} must lie in (0, 1]")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidInput(format!("horizon {horizon} must be positive")));
        }
        if field.dim() == 0 {
            return Err(Error::InvalidInput("dimension must be at least one".into()));
        }
        Ok(Self {
            name: name.into(),
            alpha,
            horizon,
            field,
            terminal: None,
            initial: None,
            split: None,
            exact: None,
            mesh: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn with_terminal(mut self, eta: Vec<f64>) -> Result<Self> {
        self.check_len(&eta, "terminal value")?;
        self.terminal = Some(eta);
        Ok(self)
    }

    pub fn with_initial(mut self, rho: Vec<f64>) -> Result<Self> {
        self.check_len(&rho, "initial value")?;
        self.initial = Some(rho);
        Ok(self)
    }

    pub fn with_split(mut self, linear: DMatrix<f64>, residual: Arc<dyn VectorField>) -> Result<Self> {
        let m = self.dim();
        if linear.nrows() != m || linear.ncols() != m || residual.dim() != m {
            return Err(Error::InvalidInput(format!("semi-linear split must be {m}-dimensional")));
        }
        self.split = Some(SemiLinear { linear, residual });
        Ok(self)
    }

    pub fn with_exact(mut self, exact: ExactFn) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn with_mesh(mut self, mesh: MeshSpec) -> Self {
        self.mesh = Some(mesh);
        self
    }

    fn check_len(&self, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "{what} has {} entries, dimension is {}",
                v.len(),
                self.dim()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("{what} has non-finite entries")));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.field.eval(t, y, &mut out)?;
        Ok(out)
    }

    pub fn jacobian(&self, t: f64, y: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.dim();
        let mut out = vec![0.0; m * m];
        self.field.jacobian(t, y, &mut out)?;
        Ok(DMatrix::from_row_slice(m, m, &out))
    }

    /// max |f − (L y + g)| at (t, y); zero when there is no split.
    pub fn split_discrepancy(&self, t: f64, y: &[f64]) -> Result<f64> {
        let Some(split) = &self.split else {
            return Ok(0.0);
        };
        let f = self.eval(t, y)?;
        let mut g = vec![0.0; self.dim()];
        split.residual.eval(t, y, &mut g)?;
        let ly = &split.linear * nalgebra::DVector::from_column_slice(y);
        Ok(f.iter()
            .zip(&g)
            .zip(ly.iter())
            .map(|((f, g), l)| (f - (l + g)).abs())
            .fold(0.0, f64::max))
    }

    /// Largest relative gap between the Jacobian and central differences of f.
    pub fn jacobian_fd_gap(&self, t: f64, y: &[f64]) -> Result<f64> {
        let m = self.dim();
        let jac = self.jacobian(t, y)?;
        let mut worst = 0.0f64;
        let mut yp = y.to_vec();
        for j in 0..m {
            let h = 1e-6 * y[j].abs().max(1.0);
            yp[j] = y[j] + h;
            let fp = self.eval(t, &yp)?;
            yp[j] = y[j] - h;
            let fm = self.eval(t, &yp)?;
            yp[j] = y[j];
            for i in 0..m {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                let scale = jac[(i, j)].abs().max(1.0);
                worst = worst.max((fd - jac[(i, j)]).abs() / scale);
            }
        }
        Ok(worst)
    }
}
