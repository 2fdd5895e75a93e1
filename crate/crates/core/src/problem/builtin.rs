//! The six benchmark problems with their reference data.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{FdeProblem, FnField, VectorField};
use crate::error::{Error, Result};
use crate::fhbvm::{forward_terminal, SolverConfig};
use crate::meshing::MeshSpec;
use crate::specfun::{gamma_rounded, mittag_leffler};

/// Default half-dimension ν of problem 6.
pub const DEFAULT_NU: usize = 5;

/// Built-in problem `id` in 1..=6; problem 6 uses ν = [`DEFAULT_NU`].
pub fn builtin(id: usize) -> Result<FdeProblem> {
    match id {
        1 => Ok(example1()),
        2 => Ok(example2()),
        3 => Ok(example3()),
        4 => Ok(example4()),
        5 => Ok(example5()),
        6 => example6(DEFAULT_NU),
        _ => Err(Error::InvalidInput(format!("unknown built-in problem {id}; expected 1..6"))),
    }
}

/// Mesh on which the reference terminal value of problem `id` was computed,
/// when it is not known in closed form.
pub fn reference_mesh(id: usize) -> Option<MeshSpec> {
    match id {
        3 => Some(MeshSpec::Uniform { n: 1000 }),
        5 => Some(MeshSpec::Graded { n: 1000, h1: 1e-14 }),
        6 => Some(MeshSpec::Graded { n: 300, h1: 1e-14 }),
        _ => None,
    }
}

fn field<F, J>(dim: usize, f: F, jac: J) -> Arc<dyn VectorField>
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    J: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
{
    Arc::new(FnField::new(dim, f, jac))
}

fn ml(alpha: f64, z: f64) -> f64 {
    mittag_leffler(alpha, z).unwrap_or(f64::NAN)
}

pub fn example1() -> FdeProblem {
    let c1 = 40320.0 / gamma_rounded(8.7);
    let c2 = 3.0 * gamma_rounded(5.15) / gamma_rounded(4.85);
    let c3 = 2.25 * gamma_rounded(1.3);
    let f = field(
        1,
        move |t, y, out| {
            let inner = 1.5 * t.powf(0.15) - t.powi(4);
            out[0] = -y[0].abs().powf(1.5) + c1 * t.powf(7.7) - c2 * t.powf(3.85) + inner.powi(3) + c3;
        },
        |_, y, out| {
            let sign = if y[0] > 0.0 {
                1.0
            } else if y[0] < 0.0 {
                -1.0
            } else {
                0.0
            };
            out[0] = -1.5 * y[0].abs().sqrt() * sign;
        },
    );
    FdeProblem::new("example 1", 0.3, 1.0, f)
        .and_then(|p| p.with_terminal(vec![0.25]))
        .and_then(|p| p.with_initial(vec![0.0]))
        .expect("valid built-in data")
        .with_exact(Arc::new(|t: f64| vec![t.powi(8) - 3.0 * t.powf(4.15) + 2.25 * t.powf(0.3)]))
        .with_mesh(MeshSpec::Uniform { n: 10 })
}

pub fn example2() -> FdeProblem {
    let f = field(1, |_, y, out| out[0] = -1.5 * y[0], |_, _, out| out[0] = -1.5);
    FdeProblem::new("example 2", 0.3, 7.0, f)
        .and_then(|p| p.with_terminal(vec![0.6476128469955936]))
        .and_then(|p| p.with_initial(vec![2.8]))
        .expect("valid built-in data")
        .with_exact(Arc::new(|t: f64| vec![2.8 * ml(0.3, -1.5 * t.powf(0.3))]))
        .with_mesh(MeshSpec::Graded { n: 500, h1: 1e-14 })
}

pub fn example3() -> FdeProblem {
    let f = field(
        1,
        |t, y, out| out[0] = (t * y[0]).sin() / (t + 1.0),
        |t, y, out| out[0] = t * (t * y[0]).cos() / (t + 1.0),
    );
    FdeProblem::new("example 3", 0.7, 20.0, f)
        .and_then(|p| p.with_terminal(vec![0.8360565285776644]))
        .and_then(|p| p.with_initial(vec![1.0]))
        .expect("valid built-in data")
        .with_mesh(MeshSpec::Uniform { n: 400 })
}

pub fn example4() -> FdeProblem {
    let a = DMatrix::from_row_slice(2, 2, &[-3.0, 0.0, -2.0, -1.0]);
    let f = field(
        2,
        |_, y, out| {
            out[0] = -3.0 * y[0];
            out[1] = -2.0 * y[0] - y[1];
        },
        |_, _, out| out.copy_from_slice(&[-3.0, 0.0, -2.0, -1.0]),
    );
    let zero = field(2, |_, _, out| out.fill(0.0), |_, _, out| out.fill(0.0));
    FdeProblem::new("example 4", 0.5, 2.0, f)
        .and_then(|p| p.with_terminal(vec![0.2591172572977875, 0.5953212597441289]))
        .and_then(|p| p.with_initial(vec![2.0, 3.0]))
        .and_then(|p| p.with_split(a, zero))
        .expect("valid built-in data")
        .with_exact(Arc::new(|t: f64| {
            let s = t.sqrt();
            let e3 = ml(0.5, -3.0 * s);
            vec![2.0 * e3, 2.0 * e3 + ml(0.5, -s)]
        }))
        .with_mesh(MeshSpec::Graded { n: 100, h1: 1e-14 })
}

pub fn example5() -> FdeProblem {
    let f = field(
        2,
        |_, y, out| {
            let q = y[0] * y[0] * y[1];
            out[0] = 1.0 - 4.0 * y[0] + q;
            out[1] = 3.0 * y[0] - q;
        },
        |_, y, out| {
            let p = 2.0 * y[0] * y[1];
            let sq = y[0] * y[0];
            out.copy_from_slice(&[-4.0 + p, sq, 3.0 - p, -sq]);
        },
    );
    FdeProblem::new("example 5", 0.7, 5.0, f)
        .and_then(|p| p.with_terminal(vec![0.8904632063462272, 3.326603532694057]))
        .and_then(|p| p.with_initial(vec![1.2, 2.8]))
        .expect("valid built-in data")
        .with_mesh(MeshSpec::Graded { n: 200, h1: 1e-14 })
}

/// Problem 6 without its terminal value: the skew linear oscillator in
/// dimension 2ν with the residual (1/20) cos(y_i / i).
pub fn example6_untargeted(nu: usize) -> Result<FdeProblem> {
    if nu == 0 {
        return Err(Error::InvalidInput("problem 6 requires nu >= 1".into()));
    }
    let m = 2 * nu;
    let mut linear = DMatrix::zeros(m, m);
    for i in 0..nu {
        linear[(i, i + nu)] = 1.0;
        linear[(i + nu, i)] = -1.0;
    }
    let residual_eval = |y: &[f64], out: &mut [f64]| {
        for (i, (o, v)) in out.iter_mut().zip(y).enumerate() {
            *o = (v / (i + 1) as f64).cos() / 20.0;
        }
    };
    let residual_diag = |y: &[f64], i: usize| -(y[i] / (i + 1) as f64).sin() / (20.0 * (i + 1) as f64);

    let g = field(
        m,
        move |_, y, out| residual_eval(y, out),
        move |_, y, out| {
            out.fill(0.0);
            for i in 0..m {
                out[i * m + i] = residual_diag(y, i);
            }
        },
    );
    let f = field(
        m,
        move |_, y, out| {
            residual_eval(y, out);
            for i in 0..nu {
                out[i] += y[i + nu];
                out[i + nu] -= y[i];
            }
        },
        move |_, y, out| {
            out.fill(0.0);
            for i in 0..m {
                out[i * m + i] = residual_diag(y, i);
            }
            for i in 0..nu {
                out[i * m + i + nu] += 1.0;
                out[(i + nu) * m + i] -= 1.0;
            }
        },
    );
    let rho: Vec<f64> = (1..=m)
        .map(|i| ((i - 1) as f64 * std::f64::consts::PI / nu as f64).cos() / i as f64)
        .collect();
    Ok(FdeProblem::new(format!("example 6 (nu = {nu})"), 0.7, 5.0, f)?
        .with_initial(rho)?
        .with_split(linear, g)?
        .with_mesh(MeshSpec::Graded { n: 35, h1: 1e-8 }))
}

/// Problem 6 with the terminal value obtained by a forward solve from the
/// prescribed initial value on the reference mesh.
pub fn example6(nu: usize) -> Result<FdeProblem> {
    let p = example6_untargeted(nu)?;
    let rho = p.initial.clone().expect("initial value is set");
    let mesh = reference_mesh(6).expect("reference mesh").build(p.horizon)?;
    let eta = forward_terminal(&p, &rho, &mesh, &SolverConfig::default())?;
    p.with_terminal(eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_one_exact_terminal() {
        let p = example1();
        let y = (p.exact.as_ref().unwrap())(1.0);
        assert!((y[0] - 0.25).abs() < 1e-15);
        assert_eq!(p.jacobian(0.5, &[0.0]).unwrap()[(0, 0)], 0.0);
    }

    #[test]
    fn mittag_leffler_terminals() {
        let p = example2();
        let y = (p.exact.as_ref().unwrap())(7.0);
        assert!((y[0] - p.terminal.as_ref().unwrap()[0]).abs() < 1e-13);
        let p = example4();
        let y = (p.exact.as_ref().unwrap())(2.0);
        let eta = p.terminal.as_ref().unwrap();
        assert!((y[0] - eta[0]).abs() < 1e-15);
        assert!((y[1] - eta[1]).abs() < 1e-15);
        let y0 = (p.exact.as_ref().unwrap())(0.0);
        assert_eq!(y0, vec![2.0, 3.0]);
    }

    #[test]
    fn example_six_split_and_initial() {
        let p = example6_untargeted(5).unwrap();
        assert_eq!(p.dim(), 10);
        let rho = p.initial.as_ref().unwrap();
        assert!((rho[0] - 1.0).abs() < 1e-16);
        assert!((rho[5] - (std::f64::consts::PI).cos() / 6.0).abs() < 1e-16);
        let y: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).sin() * 2.0).collect();
        assert!(p.split_discrepancy(1.0, &y).unwrap() < 1e-16);
        assert!(p.jacobian_fd_gap(1.0, &y).unwrap() < 1e-8);
        assert!(example6_untargeted(0).is_err());
    }

    #[test]
    fn unknown_id() {
        assert!(builtin(0).is_err());
        assert!(builtin(7).is_err());
    }
}
