//! Forward-in-time solve of the Black-Scholes equation on a per-option
//! rectangle, regularized as a quadratic minimization. The minimizer,
//! evaluated at the mid stock price one and two trading days ahead, is the
//! price estimate fed to the classifier and the trading rule.

mod cg;
mod system;

pub use cg::{pcg, CgOutcome};
pub use system::QrmSystem;

use crate::market::OptionQuoteRow;
use thiserror::Error;

/// One trading day in year units.
pub const TAU_BAR: f64 = 1.0 / 252.0;

#[derive(Debug, Error)]
pub enum QrmError {
    #[error("degenerate stock interval: bid {bid} >= ask {ask}")]
    DegenerateInterval { bid: f64, ask: f64 },
    #[error("missing quote history: {0}")]
    MissingHistory(&'static str),
    #[error("nonpositive volatility")]
    NonpositiveVol,
    #[error("solver did not converge in {iterations} iterations (relative residual {achieved:e})")]
    NoConvergence { iterations: usize, achieved: f64 },
    #[error("missing ground-truth option means")]
    MissingGroundTruth,
    #[error("ground-truth option mean is zero")]
    ZeroDenominator,
}

/// Space-time rectangle [s_lo, s_hi] x [0, 2 tau_bar].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QrmGrid {
    pub s_lo: f64,
    pub s_hi: f64,
    /// Interior spatial points, >= 3.
    pub n_s: usize,
    /// Time levels, >= 3.
    pub n_t: usize,
}

impl QrmGrid {
    pub fn h_s(&self) -> f64 {
        (self.s_hi - self.s_lo) / (self.n_s + 1) as f64
    }

    pub fn h_t(&self) -> f64 {
        2.0 * TAU_BAR / (self.n_t - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QrmProblem {
    pub grid: QrmGrid,
    /// u(s, 0) on all n_s + 2 grid nodes.
    pub initial: Vec<f64>,
    /// u(s_lo, tau) over all n_t time levels.
    pub boundary_lo: Vec<f64>,
    /// u(s_hi, tau) over all n_t time levels.
    pub boundary_hi: Vec<f64>,
    pub sigma: f64,
    pub beta: f64,
}

#[derive(Debug, Clone)]
pub struct QrmSolution {
    /// Minimizer over the full grid, `u[j * (n_s + 2) + i]`.
    pub u: Vec<f64>,
    pub grid: QrmGrid,
    /// Minimizer value at (s_mid, tau_bar).
    pub est_1: f64,
    /// Minimizer value at (s_mid, 2 tau_bar).
    pub est_2: f64,
    /// Discrete L2 norm of the PDE operator applied to the minimizer.
    pub residual_norm: f64,
    pub minimizer_error_1: Option<f64>,
    pub minimizer_error_2: Option<f64>,
    pub cg_iterations: usize,
}

/// Solver configuration; `None` fields defer to the per-row hints.
#[derive(Debug, Clone, PartialEq)]
pub struct QrmConfig {
    pub beta: Option<f64>,
    pub n_s: Option<usize>,
    pub n_t: Option<usize>,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for QrmConfig {
    fn default() -> Self {
        QrmConfig { beta: None, n_s: None, n_t: None, cg_tol: 1e-10, cg_max_iter: 50_000 }
    }
}

/// Quadratic through samples at t = -2 tau_bar, -tau_bar, 0, evaluated at
/// x = t / tau_bar (so x in [0, 2] extrapolates forward).
fn quadratic_extrapolate(y_m2: f64, y_m1: f64, y_0: f64, x: f64) -> f64 {
    y_0 + (y_0 - y_m1) * x + (y_m2 - 2.0 * y_m1 + y_0) * x * (x + 1.0) / 2.0
}

/// Builds the per-option rectangle problem: boundaries extrapolate the three
/// past bid (low side) and ask (high side) samples quadratically in time;
/// the initial condition interpolates linearly in s between today's bid and
/// ask.
pub fn build_problem(row: &OptionQuoteRow, config: &QrmConfig) -> Result<QrmProblem, QrmError> {
    let bid_hist = (row.option_bid_m2, row.option_bid_m1, row.option_bid_0);
    let ask_hist = (row.option_ask_m2, row.option_ask_m1, row.option_ask_0);
    let (Some(b_m2), Some(b_m1), Some(b_0)) = bid_hist else {
        return Err(QrmError::MissingHistory("option bid days -2..0"));
    };
    let (Some(a_m2), Some(a_m1), Some(a_0)) = ask_hist else {
        return Err(QrmError::MissingHistory("option ask days -2..0"));
    };
    let (Some(s_bid), Some(s_ask)) = (row.stock_bid_0, row.stock_ask_0) else {
        return Err(QrmError::MissingHistory("stock quotes day 0"));
    };
    if s_bid >= s_ask {
        return Err(QrmError::DegenerateInterval { bid: s_bid, ask: s_ask });
    }
    let sigma = row.ivol_0.ok_or(QrmError::MissingHistory("ivol day 0"))?;
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(QrmError::NonpositiveVol);
    }

    let n_s = config.n_s.unwrap_or(row.grid_count as usize).max(3);
    let n_t = config.n_t.unwrap_or(row.grid_count as usize).max(3);
    let beta = match config.beta {
        Some(b) => b,
        None if row.beta > 0.0 => row.beta,
        None => 0.01,
    };

    let grid = QrmGrid { s_lo: s_bid, s_hi: s_ask, n_s, n_t };
    let h_t = grid.h_t();
    let initial: Vec<f64> = (0..n_s + 2)
        .map(|i| b_0 + (a_0 - b_0) * i as f64 / (n_s + 1) as f64)
        .collect();
    let boundary_lo: Vec<f64> = (0..n_t)
        .map(|j| quadratic_extrapolate(b_m2, b_m1, b_0, j as f64 * h_t / TAU_BAR))
        .collect();
    let boundary_hi: Vec<f64> = (0..n_t)
        .map(|j| quadratic_extrapolate(a_m2, a_m1, a_0, j as f64 * h_t / TAU_BAR))
        .collect();

    Ok(QrmProblem { grid, initial, boundary_lo, boundary_hi, sigma, beta })
}

/// Bilinear interpolation of the full grid field at stock price s and time
/// tau (both in physical units).
fn interpolate(u: &[f64], grid: &QrmGrid, s: f64, tau: f64) -> f64 {
    let cols = grid.n_s + 2;
    let gs = ((s - grid.s_lo) / grid.h_s()).clamp(0.0, (grid.n_s + 1) as f64);
    let gt = (tau / grid.h_t()).clamp(0.0, (grid.n_t - 1) as f64);
    let i0 = (gs.floor() as usize).min(grid.n_s);
    let j0 = (gt.floor() as usize).min(grid.n_t - 2);
    let fs = gs - i0 as f64;
    let ft = gt - j0 as f64;
    let v = |i: usize, j: usize| u[j * cols + i];
    (1.0 - ft) * ((1.0 - fs) * v(i0, j0) + fs * v(i0 + 1, j0))
        + ft * ((1.0 - fs) * v(i0, j0 + 1) + fs * v(i0 + 1, j0 + 1))
}

/// Solves the normal equations by preconditioned conjugate gradient and
/// extracts the mid-price estimates at one and two trading days ahead.
pub fn solve(p: &QrmProblem, config: &QrmConfig) -> Result<QrmSolution, QrmError> {
    let sys = QrmSystem::new(p);
    let outcome = pcg(
        |x, y| sys.matvec(x, y),
        sys.rhs(),
        sys.diag(),
        config.cg_tol,
        config.cg_max_iter,
    );
    if !outcome.converged {
        return Err(QrmError::NoConvergence {
            iterations: outcome.iterations,
            achieved: outcome.rel_residual,
        });
    }
    let u = sys.embed(&outcome.x);
    let s_mid = (p.grid.s_lo + p.grid.s_hi) / 2.0;
    let est_1 = interpolate(&u, &p.grid, s_mid, TAU_BAR);
    let est_2 = interpolate(&u, &p.grid, s_mid, 2.0 * TAU_BAR);
    let residual_norm = sys.residual_norm(&u);
    Ok(QrmSolution {
        u,
        grid: p.grid,
        est_1,
        est_2,
        residual_norm,
        minimizer_error_1: None,
        minimizer_error_2: None,
        cg_iterations: outcome.iterations,
    })
}

/// Relative errors of the estimates against the realized next-day and
/// two-day option means.
pub fn minimizer_error(sol: &QrmSolution, row: &OptionQuoteRow) -> Result<(f64, f64), QrmError> {
    let (Some(m1), Some(m2)) = (row.option_mean_p1, row.option_mean_p2) else {
        return Err(QrmError::MissingGroundTruth);
    };
    if m1 == 0.0 || m2 == 0.0 {
        return Err(QrmError::ZeroDenominator);
    }
    Ok(((sol.est_1 - m1).abs() / m1, (sol.est_2 - m2).abs() / m2))
}
