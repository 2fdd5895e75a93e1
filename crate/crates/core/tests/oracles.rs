mod common;

use std::sync::Arc;

use common::*;
use fractvp::fhbvm::{CollocationTables, Solver, SolverConfig};
use fractvp::problem::builtin::{example1, example2, example5};
use fractvp::problem::FnField;
use fractvp::specfun::{gauss_jacobi_rule, matrix_ml_truncated, mittag_leffler, JacobiBasis};
use fractvp::{FdeProblem, Mesh};
use nalgebra::{DMatrix, DVector};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn jacobi_matches_explicit_sum() {
    let basis = JacobiBasis::new(0.3, 6).unwrap();
    let v = basis.eval(5, 0.7).unwrap();
    assert!((v - jacobi_explicit(0.3, 5, 0.7)).abs() < 1e-14);

    for &alpha in &[0.3, 0.5, 0.85, 1.0] {
        let basis = JacobiBasis::new(alpha, 22).unwrap();
        for &x in &[0.0, 0.13, 0.5, 0.77, 0.999, 1.0] {
            let all = basis.eval_all(x).unwrap();
            for (j, v) in all.iter().enumerate() {
                let want = jacobi_explicit(alpha, j, x);
                assert!((v - want).abs() <= 1e-13 * want.abs().max(1.0), "alpha {alpha} j {j} x {x}: {v} vs {want}");
            }
        }
    }
}

#[test]
fn legendre_case() {
    let basis = JacobiBasis::new(1.0, 3).unwrap();
    assert!((basis.eval(1, 1.0).unwrap() - 3f64.sqrt()).abs() < 1e-15);
    assert_eq!(JacobiBasis::new(0.5, 1).unwrap().eval(0, 0.3).unwrap(), 1.0);
}

#[test]
fn one_node_rules() {
    let r = gauss_jacobi_rule(0.5, 1).unwrap();
    assert!((r.nodes()[0] - 2.0 / 3.0).abs() < 1e-16);
    assert!((r.weights()[0] - 1.0).abs() < 1e-16);
    let r = gauss_jacobi_rule(1.0, 1).unwrap();
    assert_eq!(r.nodes()[0], 0.5);
    assert!((r.weights()[0] - 1.0).abs() < 1e-16);
}

#[test]
fn gauss_jacobi_exactness_on_monomials() {
    for &alpha in &[0.3, 0.7, 1.0] {
        for &k in &[3usize, 10, 22] {
            let rule = gauss_jacobi_rule(alpha, k).unwrap();
            for q in 0..2 * k {
                // α ∫ (1−x)^(α−1) x^q dx = Γ(q+1)Γ(α+1)/Γ(q+1+α)
                let exact = (gamma_big(q as f64 + 1.0) * gamma_big(alpha + 1.0) / gamma_big(q as f64 + 1.0 + alpha)).to_f64();
                let got = rule.integrate(|x| x.powi(q as i32));
                assert!((got - exact).abs() < 1e-13, "alpha {alpha} k {k} q {q}: {got} vs {exact}");
            }
        }
    }
}

#[test]
fn fractional_integrals_against_quadrature() {
    let basis = JacobiBasis::new(0.5, 4).unwrap();
    let v = basis.frac_int(0.5).unwrap();
    assert!((v[1] - frac_int_oracle(0.5, 1, 0.5)).abs() < 1e-14);

    for &alpha in &[0.3, 0.7] {
        let basis = JacobiBasis::new(alpha, 8).unwrap();
        for &c in &[0.05, 0.4, 0.9, 1.0] {
            let v = basis.frac_int(c).unwrap();
            for (j, got) in v.iter().enumerate() {
                let want = frac_int_oracle(alpha, j, c);
                assert!((got - want).abs() < 1e-13, "alpha {alpha} j {j} c {c}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn frac_int_of_constant_and_endpoint() {
    for &alpha in &[0.2, 0.5, 1.0] {
        let basis = JacobiBasis::new(alpha, 6).unwrap();
        let g = gamma_big(alpha + 1.0).to_f64();
        for &c in &[0.1, 0.6, 1.0] {
            let v = basis.frac_int(c).unwrap();
            assert!(rel(v[0], c.powf(alpha) / g) < 1e-14);
        }
        let end = basis.frac_int(1.0).unwrap();
        assert!(end[1..].iter().all(|v| v.abs() < 1e-14));
    }
}

#[test]
fn legendre_integrals_are_antiderivatives() {
    let basis = JacobiBasis::new(1.0, 6).unwrap();
    let s3 = 3f64.sqrt();
    let s5 = 5f64.sqrt();
    for &c in &[0.2, 0.5, 0.8] {
        let v = basis.frac_int(c).unwrap();
        assert!((v[0] - c).abs() < 1e-15);
        assert!((v[1] - s3 * (c * c - c)).abs() < 1e-15);
        // P_2 = sqrt(5)(6x² − 6x + 1)
        assert!((v[2] - s5 * (2.0 * c.powi(3) - 3.0 * c * c + c)).abs() < 1e-14);
    }
}

#[test]
fn kernels_against_quadrature() {
    let basis = JacobiBasis::new(0.3, 8).unwrap();
    let v = basis.memory_kernel(1.5).unwrap();
    assert!((v[1] - kernel_oracle(0.3, 1, 1.5)).abs() < 1e-14);

    for &alpha in &[0.3, 0.6] {
        let basis = JacobiBasis::new(alpha, 8).unwrap();
        for &x in &[1.001, 1.5, 3.0, 40.0, 900.0] {
            let v = basis.memory_kernel(x).unwrap();
            for (j, got) in v.iter().enumerate() {
                let want = kernel_oracle(alpha, j, x);
                assert!((got - want).abs() < 1e-13, "alpha {alpha} j {j} x {x}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn kernel_closed_form_and_limits() {
    let basis = JacobiBasis::new(0.5, 5).unwrap();
    let want = (2f64.sqrt() - 1.0) / gamma_big(1.5).to_f64();
    assert!(rel(basis.memory_kernel(2.0).unwrap()[0], want) < 1e-15);

    // x → 1 approaches I^α P_j(1)
    for &alpha in &[0.9, 1.0] {
        let basis = JacobiBasis::new(alpha, 10).unwrap();
        let near = basis.memory_kernel(1.0 + 1e-8).unwrap();
        let end = basis.frac_int(1.0).unwrap();
        for (a, b) in near.iter().zip(&end) {
            assert!((a - b).abs() < 1e-6, "{a} {b}");
        }
    }

    let basis = JacobiBasis::new(0.3, 20).unwrap();
    let far = basis.memory_kernel(1e12).unwrap();
    for j in 1..20 {
        assert!(far[j].abs() <= far[0].abs());
        assert!(far[j].abs() <= far[j - 1].abs());
    }
    assert!(basis.memory_kernel(1.0).is_err());
}

#[test]
fn mittag_leffler_half_order() {
    for &z in &[-5.0, -2.3, -0.4, 0.0, 0.7, 2.0] {
        let got = mittag_leffler(0.5, z).unwrap();
        assert!(rel(got, ml_half(z)) < 1e-13, "z {z}: {got} vs {}", ml_half(z));
    }
    assert!(rel(mittag_leffler(1.0, 1.0).unwrap(), std::f64::consts::E) < 1e-15);
    assert_eq!(mittag_leffler(0.3, 0.0).unwrap(), 1.0);
    let z = -1.5 * 7f64.powf(0.3);
    assert!(rel(mittag_leffler(0.3, z).unwrap(), 0.6476128469955936 / 2.8) < 1e-13);
}

#[test]
fn truncated_matrix_series() {
    let (m, j) = matrix_ml_truncated(0.4, &DMatrix::zeros(3, 3), 2.0, 1e-10, 1000).unwrap();
    assert_eq!(m, DMatrix::identity(3, 3));
    assert!(j <= 1);

    let lam = DMatrix::from_element(1, 1, -0.8);
    let (m, j) = matrix_ml_truncated(0.5, &lam, 1.7, 1e-12, 1000).unwrap();
    let z = -0.8 * 1.7f64.sqrt();
    assert!((m[(0, 0)] - ml_half(z)).abs() <= 1e-12 * (j + 1) as f64);

    let nu = 5;
    let mut l = DMatrix::zeros(2 * nu, 2 * nu);
    for i in 0..nu {
        l[(i, i + nu)] = 1.0;
        l[(i + nu, i)] = -1.0;
    }
    let (_, j) = matrix_ml_truncated(0.7, &l, 5.0, 1e-10, 1000).unwrap();
    assert_eq!(j, 40);
}

#[test]
fn graded_ratio_against_bisection() {
    for &(t, n, h1) in &[(7.0, 500, 1e-14), (5.0, 35, 1e-8), (20.0, 1000, 1e-14), (1.0, 3, 0.2)] {
        let mesh = Mesh::graded(t, n, h1).unwrap();
        let want = ratio_bisection(t, n, h1);
        assert!(rel(mesh.ratio(), want) < 1e-15, "{t} {n} {h1}: {} vs {want}", mesh.ratio());
        assert_eq!(mesh.knots()[n], t);
        let sum: f64 = mesh.steps().iter().sum();
        assert!(rel(sum, t) < 1e-14);
    }
    let m = Mesh::graded(7.0, 500, 1e-14).unwrap();
    assert!((m.ratio() - 1.064914852480467).abs() < 1e-12);
}

#[test]
fn telescoping_kernel_arguments() {
    let mesh = Mesh::graded(5.0, 60, 1e-8).unwrap();
    let one = rug::Float::with_val(256, 1u32);
    let zero = rug::Float::new(256);
    for d in 2..60 {
        let a = mesh.kernel_argument(d - 1, &one).to_f64();
        let b = mesh.kernel_argument(d, &zero).to_f64();
        assert!(rel(a, b) < 1e-12);
    }
}

fn scalar_linear(alpha: f64, horizon: f64, lambda: f64) -> FdeProblem {
    let f = FnField::new(1, move |_, y: &[f64], out: &mut [f64]| out[0] = lambda * y[0], move |_, _, out: &mut [f64]| out[0] = lambda);
    FdeProblem::new("scalar", alpha, horizon, Arc::new(f)).unwrap()
}

#[test]
fn local_solve_matches_linear_system() {
    let (alpha, lambda) = (0.45, -2.5);
    let p = scalar_linear(alpha, 1.0, lambda);
    let mesh = Mesh::graded(1.0, 6, 1e-3).unwrap();
    let tables = CollocationTables::build(alpha, 12, 9, &mesh).unwrap();
    let solver = Solver::new(&p, &mesh, &tables, SolverConfig { k: 12, s: 9, ..Default::default() }).unwrap();
    let (k, s) = (12, 9);
    let n = 4;
    let ha = mesh.step(n).powf(alpha);
    let phi: Vec<f64> = (0..k).map(|i| 1.0 + 0.1 * i as f64).collect();
    let (gamma, stages, _) = solver.solve_local(n, &phi).unwrap();

    // (I − λ h^α PtO ℐ) γ = λ PtO φ
    let pto = tables.weighted_transpose();
    let ia = tables.frac_values();
    let a = DMatrix::identity(s, s) - pto * ia * (lambda * ha);
    let rhs = pto * DVector::from_vec(phi.clone()) * lambda;
    let direct = a.lu().solve(&rhs).unwrap();
    for j in 0..s {
        assert!((gamma[j] - direct[j]).abs() < 1e-14, "j {j}: {} vs {}", gamma[j], direct[j]);
    }
    for i in 0..k {
        let want = phi[i] + ha * (0..s).map(|j| ia[(i, j)] * direct[j]).sum::<f64>();
        assert!((stages[i] - want).abs() < 1e-14);
    }
}

#[test]
fn memory_term_against_quadrature_kernels() {
    let (alpha, lambda) = (0.4, -1.2);
    let (k, s) = (8, 5);
    let p = scalar_linear(alpha, 1.5, lambda);
    let mesh = Mesh::uniform(1.5, 6).unwrap();
    let tables = CollocationTables::build(alpha, k, s, &mesh).unwrap();
    let solver = Solver::new(&p, &mesh, &tables, SolverConfig { k, s, ..Default::default() }).unwrap();
    let traj = solver.solve_ivp(&[1.0]).unwrap();
    let h = mesh.step(1);
    for &(n, c) in &[(5usize, 0.3f64), (6, 0.0), (3, 0.85)] {
        let got = solver.memory_term(&traj, n, c).unwrap()[0];
        let mut want = rug::Float::with_val(PREC, 1.0);
        for nu in 1..n {
            let x = (n - nu) as f64 + c;
            let g = traj.coefficients(nu);
            for (j, gj) in g.iter().enumerate().take(s) {
                let term = h.powf(alpha) * kernel_oracle(alpha, j, x) * gj;
                want += term;
            }
        }
        assert!((got - want.to_f64()).abs() < 1e-13, "n {n} c {c}: {got} vs {want}");
    }
}

#[test]
fn dense_output_example_one() {
    let p = example1();
    let mesh = p.mesh.unwrap().build(p.horizon).unwrap();
    let tables = CollocationTables::build(p.alpha, 22, 20, &mesh).unwrap();
    let solver = Solver::new(&p, &mesh, &tables, SolverConfig::default()).unwrap();
    let traj = solver.solve_ivp(&[0.0]).unwrap();
    let exact = p.exact.as_ref().unwrap();
    for &t in &[0.55, 0.123, 0.97] {
        let y = solver.dense_eval(&traj, t).unwrap()[0];
        assert!((y - exact(t)[0]).abs() < 1e-12, "t {t}: {y} vs {}", exact(t)[0]);
    }
    assert!((traj.terminal()[0] - 0.25).abs() < 5e-14);
}

#[test]
fn forward_examples_two_and_five() {
    let p = example2();
    let mesh = p.mesh.unwrap().build(p.horizon).unwrap();
    let tables = CollocationTables::build(p.alpha, 22, 20, &mesh).unwrap();
    let solver = Solver::new(&p, &mesh, &tables, SolverConfig::default()).unwrap();
    let y = solver.solve_ivp(&[2.8]).unwrap();
    assert!((y.terminal()[0] - 0.6476128469955936).abs() < 1e-13);

    let p = example5();
    let mesh = p.mesh.unwrap().build(p.horizon).unwrap();
    let tables = CollocationTables::build(p.alpha, 22, 20, &mesh).unwrap();
    let solver = Solver::new(&p, &mesh, &tables, SolverConfig::default()).unwrap();
    let y = solver.solve_ivp(&[1.2, 2.8]).unwrap();
    let eta = p.terminal.as_ref().unwrap();
    for (a, b) in y.terminal().iter().zip(eta) {
        assert!((a - b).abs() < 1e-13, "{a} vs {b}");
    }
}

#[test]
fn gradient_of_parsed_expression() {
    use fractvp::problem::expr::{eval_with_gradient, parse_expr};
    let e = parse_expr("sin(t*y[1])/(t+1)", 1, &Default::default(), 1).unwrap();
    let (v, g) = eval_with_gradient(&e, 2.0, &[0.5]).unwrap();
    assert!((v - 1f64.sin() / 3.0).abs() < 1e-15);
    assert!((g[0] - 2.0 * 1f64.cos() / 3.0).abs() < 1e-14);
}

#[test]
fn simplified_matches_newton_on_scalar_semilinear() {
    use fractvp::shooting::Variant;
    use fractvp::{newton_shoot, simplified_shoot, ShootingConfig};

    let (alpha, lambda) = (0.6, -1.5);
    let full = FnField::new(
        1,
        move |_, y: &[f64], out: &mut [f64]| out[0] = lambda * y[0] + 0.1 * y[0].sin(),
        move |_, y: &[f64], out: &mut [f64]| out[0] = lambda + 0.1 * y[0].cos(),
    );
    let residual = FnField::new(1, |_, y: &[f64], out: &mut [f64]| out[0] = 0.1 * y[0].sin(), |_, y: &[f64], out: &mut [f64]| out[0] = 0.1 * y[0].cos());
    let base = FdeProblem::new("semi", alpha, 2.0, Arc::new(full))
        .unwrap()
        .with_split(DMatrix::from_element(1, 1, lambda), Arc::new(residual))
        .unwrap();
    let mesh = Mesh::graded(2.0, 40, 1e-6).unwrap();
    let tables = CollocationTables::build(alpha, 22, 20, &mesh).unwrap();
    let solver = Solver::new(&base, &mesh, &tables, SolverConfig::default()).unwrap();
    let eta = solver.solve_ivp(&[1.0]).unwrap().terminal().to_vec();
    let p = base.with_terminal(eta).unwrap();

    let cfg = ShootingConfig::default();
    let newton = newton_shoot(&p, &mesh, &tables, &cfg).unwrap();
    let simple = simplified_shoot(&p, &mesh, &tables, &ShootingConfig { variant: Variant::Simplified, ..cfg.clone() }).unwrap();
    assert!(newton.converged && simple.converged);
    assert!((newton.final_rho()[0] - 1.0).abs() < 1e-12);
    assert!((newton.final_rho()[0] - simple.final_rho()[0]).abs() <= 10.0 * cfg.tol);
    assert_eq!(simple.variational_solves, 0);
}
