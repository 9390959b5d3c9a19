// oracle code intentionally spells out the index arithmetic
#![allow(clippy::needless_range_loop)]

//! Independent oracles for the regularized solver: a dense brute-force
//! differentiation of the functional on tiny instances, and the analytic
//! call-price surface on a production-sized grid.

use optcast_core::bs::{bs_call, BsParams};
use optcast_core::qrm::{solve, QrmConfig, QrmGrid, QrmProblem, QrmSystem};

/// Direct evaluation of the minimized functional from its definition,
/// written independently of the assembly code: plain loops over the grid.
fn functional_oracle(p: &QrmProblem, x: &[f64]) -> f64 {
    let n_s = p.grid.n_s;
    let n_t = p.grid.n_t;
    let h_s = p.grid.h_s();
    let h_t = p.grid.h_t();

    // full field as a 2-D array u[i][j]
    let mut u = vec![vec![0.0; n_t]; n_s + 2];
    for i in 0..n_s + 2 {
        u[i][0] = p.initial[i];
    }
    for j in 0..n_t {
        u[0][j] = p.boundary_lo[j];
        u[n_s + 1][j] = p.boundary_hi[j];
    }
    for j in 1..n_t {
        for i in 1..=n_s {
            u[i][j] = x[(j - 1) * n_s + (i - 1)];
        }
    }
    // prior: initial condition extended constant in time
    let prior = |i: usize| p.initial[i];

    let mut j_total = 0.0;
    // residual of du/dtau - (sigma^2/2) s^2 d2u/ds2, centered in both
    for j in 1..n_t - 1 {
        for i in 1..=n_s {
            let s = p.grid.s_lo + i as f64 * h_s;
            let dudt = (u[i][j + 1] - u[i][j - 1]) / (2.0 * h_t);
            let d2uds2 = (u[i + 1][j] - 2.0 * u[i][j] + u[i - 1][j]) / (h_s * h_s);
            let r = dudt - p.sigma * p.sigma / 2.0 * s * s * d2uds2;
            j_total += h_s * h_t * r * r;
        }
    }
    // H1 penalty of (u - prior): values plus first difference quotients
    for j in 0..n_t {
        for i in 0..n_s + 2 {
            let d = u[i][j] - prior(i);
            j_total += p.beta * h_s * h_t * d * d;
        }
    }
    for j in 0..n_t {
        for i in 0..=n_s {
            let d1 = u[i + 1][j] - prior(i + 1);
            let d0 = u[i][j] - prior(i);
            let diff = (d1 - d0) / h_s;
            j_total += p.beta * h_s * h_t * diff * diff;
        }
    }
    for j in 0..n_t - 1 {
        for i in 0..n_s + 2 {
            let d1 = u[i][j + 1] - prior(i);
            let d0 = u[i][j] - prior(i);
            let diff = (d1 - d0) / h_t;
            j_total += p.beta * h_s * h_t * diff * diff;
        }
    }
    j_total
}

/// Recovers the dense normal-equations system from the quadratic functional
/// by exact polarization: J(x) = x'Ax - 2b'x + c.
fn dense_system_oracle(p: &QrmProblem, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let e = |k: usize, sign: f64| {
        let mut v = vec![0.0; n];
        v[k] = sign;
        v
    };
    let c = functional_oracle(p, &vec![0.0; n]);
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    let mut j_plus = vec![0.0; n];
    for i in 0..n {
        let jp = functional_oracle(p, &e(i, 1.0));
        let jm = functional_oracle(p, &e(i, -1.0));
        a[i][i] = (jp + jm - 2.0 * c) / 2.0;
        b[i] = (jm - jp) / 4.0;
        j_plus[i] = jp;
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            v[j] = 1.0;
            let jij = functional_oracle(p, &v);
            let aij = (jij - j_plus[i] - j_plus[j] + c) / 2.0;
            a[i][j] = aij;
            a[j][i] = aij;
        }
    }
    (a, b)
}

/// Plain Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let d = a[col][col];
        for row in col + 1..n {
            let f = a[row][col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

fn toy_problem(beta: f64) -> QrmProblem {
    let grid = QrmGrid { s_lo: 10.0, s_hi: 11.0, n_s: 3, n_t: 3 };
    QrmProblem {
        grid,
        // mildly varying, corner-compatible data
        initial: vec![2.0, 2.3, 2.5, 2.6, 3.0],
        boundary_lo: vec![2.0, 2.1, 2.25],
        boundary_hi: vec![3.0, 3.05, 3.2],
        sigma: 0.25,
        beta,
    }
}

#[test]
fn assembled_system_matches_dense_oracle() {
    for &beta in &[1e-3, 0.05, 1.0] {
        let p = toy_problem(beta);
        let sys = QrmSystem::new(&p);
        let n = sys.n_unknowns();
        assert_eq!(n, 6);
        let (a_oracle, b_oracle) = dense_system_oracle(&p, n);

        // compare matrix columns through the implicit matvec
        let mut col = vec![0.0; n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            sys.matvec(&e, &mut col);
            for i in 0..n {
                assert!(
                    (col[i] - a_oracle[i][j]).abs() < 1e-10,
                    "A[{i}][{j}] = {} vs oracle {} (beta {beta})",
                    col[i],
                    a_oracle[i][j]
                );
            }
        }
        for i in 0..n {
            assert!(
                (sys.rhs()[i] - b_oracle[i]).abs() < 1e-10,
                "b[{i}] = {} vs oracle {} (beta {beta})",
                sys.rhs()[i],
                b_oracle[i]
            );
        }
    }
}

#[test]
fn solve_matches_dense_direct_solve() {
    let p = toy_problem(0.05);
    let sys = QrmSystem::new(&p);
    let n = sys.n_unknowns();
    let (a_oracle, b_oracle) = dense_system_oracle(&p, n);
    let x_oracle = dense_solve(a_oracle, b_oracle);

    let config = QrmConfig { cg_tol: 1e-14, ..QrmConfig::default() };
    let sol = solve(&p, &config).unwrap();
    // read the interior unknowns back out of the embedded field
    let cols = p.grid.n_s + 2;
    for j in 1..p.grid.n_t {
        for i in 1..=p.grid.n_s {
            let got = sol.u[j * cols + i];
            let want = x_oracle[(j - 1) * p.grid.n_s + (i - 1)];
            assert!((got - want).abs() < 1e-10, "u({i},{j}) = {got} vs dense {want}");
        }
    }
}

#[test]
fn large_beta_returns_minimum_norm_field_for_zero_data() {
    let grid = QrmGrid { s_lo: 10.0, s_hi: 11.0, n_s: 3, n_t: 4 };
    let p = QrmProblem {
        grid,
        initial: vec![0.0; 5],
        boundary_lo: vec![0.0; 4],
        boundary_hi: vec![0.0; 4],
        sigma: 0.3,
        beta: 1e6,
    };
    let sol = solve(&p, &QrmConfig::default()).unwrap();
    for &v in &sol.u {
        assert!(v.abs() < 1e-6);
    }
    // and the dense oracle agrees
    let sys = QrmSystem::new(&p);
    let (a, b) = dense_system_oracle(&p, sys.n_unknowns());
    let x = dense_solve(a, b);
    for &v in &x {
        assert!(v.abs() < 1e-6);
    }
}

/// Analytic-surface oracle: data sampled from the closed-form call price
/// satisfies the PDE, so the minimizer must track the analytic surface.
fn analytic_problem(n_s: usize, n_t: usize, beta: f64) -> (QrmProblem, Vec<f64>) {
    let sigma = 0.2;
    let strike = 100.0;
    let tau_base = 30.0 / 252.0;
    let grid = QrmGrid { s_lo: 98.0, s_hi: 102.0, n_s, n_t };
    let price = |s: f64, t: f64| {
        bs_call(&BsParams { s, strike, sigma, tau: tau_base + t, rate: 0.0 })
    };
    let h_s = grid.h_s();
    let h_t = grid.h_t();
    let initial: Vec<f64> = (0..n_s + 2).map(|i| price(98.0 + i as f64 * h_s, 0.0)).collect();
    let boundary_lo: Vec<f64> = (0..n_t).map(|j| price(98.0, j as f64 * h_t)).collect();
    let boundary_hi: Vec<f64> = (0..n_t).map(|j| price(102.0, j as f64 * h_t)).collect();
    let mut exact = vec![0.0; (n_s + 2) * n_t];
    for j in 0..n_t {
        for i in 0..n_s + 2 {
            exact[j * (n_s + 2) + i] = price(98.0 + i as f64 * h_s, j as f64 * h_t);
        }
    }
    (QrmProblem { grid, initial, boundary_lo, boundary_hi, sigma, beta }, exact)
}

fn relative_l2_error(u: &[f64], exact: &[f64]) -> f64 {
    let num: f64 = u.iter().zip(exact).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = exact.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

#[test]
fn analytic_surface_within_one_percent_at_best_beta() {
    let config = QrmConfig::default();
    let mut best = f64::INFINITY;
    for k in -6..=-1i32 {
        let beta = 10f64.powi(k);
        let (p, exact) = analytic_problem(40, 40, beta);
        let start = std::time::Instant::now();
        let sol = solve(&p, &config).unwrap();
        let elapsed = start.elapsed();
        assert!(elapsed.as_secs_f64() <= 1.0, "solve took {elapsed:?} at beta {beta}");
        let err = relative_l2_error(&sol.u, &exact);
        best = best.min(err);
    }
    assert!(best <= 0.01, "best relative L2 error {best}");
}

#[test]
fn refinement_reduces_error_at_fixed_beta() {
    let config = QrmConfig::default();
    let beta = 1e-6;
    let (p10, exact10) = analytic_problem(10, 10, beta);
    let (p40, exact40) = analytic_problem(40, 40, beta);
    let e10 = relative_l2_error(&solve(&p10, &config).unwrap().u, &exact10);
    let e40 = relative_l2_error(&solve(&p40, &config).unwrap().u, &exact40);
    assert!(e40 < e10, "no improvement on refinement: {e40} vs {e10}");
}
