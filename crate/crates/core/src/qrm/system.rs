//! Assembly of the regularized least-squares system.
//!
//! The minimized functional over grid functions u matching the initial and
//! boundary data is
//!
//!   J_b(u) = ||L u||^2  +  beta * ||u - P||^2_{H1}
//!
//! where L is the centered finite-difference form of
//! du/dtau - (sigma^2/2) s^2 d2u/ds2 at interior nodes, P is the initial
//! condition extended constant in time, and the H1 norm sums squared values
//! and squared first difference quotients in s and tau, all with mesh
//! weights. Eliminating the constrained grid lines yields normal equations
//! A x = b with A symmetric positive definite for beta > 0.

use super::QrmProblem;

/// One scalar term of the stacked least-squares form: a sparse linear
/// combination of grid values plus a constant offset.
struct Term {
    nodes: [(usize, usize, f64); 5],
    len: usize,
    offset: f64,
}

/// Implicit normal-equations operator over the interior unknowns.
pub struct QrmSystem {
    n_s: usize,
    n_t: usize,
    h_s: f64,
    h_t: f64,
    sigma: f64,
    beta: f64,
    s_lo: f64,
    /// Data lines: initial (len n_s + 2) and both boundaries (len n_t).
    initial: Vec<f64>,
    boundary_lo: Vec<f64>,
    boundary_hi: Vec<f64>,
    diag: Vec<f64>,
    rhs: Vec<f64>,
}

impl QrmSystem {
    pub fn new(p: &QrmProblem) -> QrmSystem {
        let mut sys = QrmSystem {
            n_s: p.grid.n_s,
            n_t: p.grid.n_t,
            h_s: p.grid.h_s(),
            h_t: p.grid.h_t(),
            sigma: p.sigma,
            beta: p.beta,
            s_lo: p.grid.s_lo,
            initial: p.initial.clone(),
            boundary_lo: p.boundary_lo.clone(),
            boundary_hi: p.boundary_hi.clone(),
            diag: Vec::new(),
            rhs: Vec::new(),
        };
        let n = sys.n_unknowns();
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        sys.for_each_term(|term| {
            // value of the term with all unknowns at zero
            let mut t0 = term.offset;
            for &(i, j, c) in &term.nodes[..term.len] {
                if let Some(v) = sys.data_value(i, j) {
                    t0 += c * v;
                }
            }
            for &(i, j, c) in &term.nodes[..term.len] {
                if let Some(k) = sys.unknown_index(i, j) {
                    diag[k] += c * c;
                    rhs[k] -= c * t0;
                }
            }
        });
        sys.diag = diag;
        sys.rhs = rhs;
        sys
    }

    pub fn n_unknowns(&self) -> usize {
        self.n_s * (self.n_t - 1)
    }

    /// Unknowns are interior space nodes at every time level past the first.
    fn unknown_index(&self, i: usize, j: usize) -> Option<usize> {
        if j >= 1 && (1..=self.n_s).contains(&i) {
            Some((j - 1) * self.n_s + (i - 1))
        } else {
            None
        }
    }

    /// Value on a constrained grid line, `None` for unknown nodes.
    fn data_value(&self, i: usize, j: usize) -> Option<f64> {
        if j == 0 {
            Some(self.initial[i])
        } else if i == 0 {
            Some(self.boundary_lo[j])
        } else if i == self.n_s + 1 {
            Some(self.boundary_hi[j])
        } else {
            None
        }
    }

    /// Prior field: the initial condition extended constant in time.
    fn prior(&self, i: usize, _j: usize) -> f64 {
        self.initial[i]
    }

    fn s_at(&self, i: usize) -> f64 {
        self.s_lo + i as f64 * self.h_s
    }

    fn for_each_term<F: FnMut(&Term)>(&self, mut f: F) {
        let (n_s, n_t) = (self.n_s, self.n_t);
        let (h_s, h_t) = (self.h_s, self.h_t);
        let w = (h_s * h_t).sqrt();
        let wb = (self.beta * h_s * h_t).sqrt();

        // PDE residual at interior nodes where the centered stencil fits
        for j in 1..n_t - 1 {
            for i in 1..=n_s {
                let s = self.s_at(i);
                let diffusion = self.sigma * self.sigma / 2.0 * s * s / (h_s * h_s);
                let dt = 1.0 / (2.0 * h_t);
                f(&Term {
                    nodes: [
                        (i, j + 1, w * dt),
                        (i, j - 1, -w * dt),
                        (i + 1, j, -w * diffusion),
                        (i, j, 2.0 * w * diffusion),
                        (i - 1, j, -w * diffusion),
                    ],
                    len: 5,
                    offset: 0.0,
                });
            }
        }

        // H1 value part of ||u - P||
        for j in 0..n_t {
            for i in 0..=n_s + 1 {
                f(&Term {
                    nodes: [(i, j, wb), (0, 0, 0.0), (0, 0, 0.0), (0, 0, 0.0), (0, 0, 0.0)],
                    len: 1,
                    offset: -wb * self.prior(i, j),
                });
            }
        }

        // first differences in s
        for j in 0..n_t {
            for i in 0..=n_s {
                let c = wb / h_s;
                f(&Term {
                    nodes: [
                        (i + 1, j, c),
                        (i, j, -c),
                        (0, 0, 0.0),
                        (0, 0, 0.0),
                        (0, 0, 0.0),
                    ],
                    len: 2,
                    offset: -c * (self.prior(i + 1, j) - self.prior(i, j)),
                });
            }
        }

        // first differences in tau
        for j in 0..n_t - 1 {
            for i in 0..=n_s + 1 {
                let c = wb / h_t;
                f(&Term {
                    nodes: [
                        (i, j + 1, c),
                        (i, j, -c),
                        (0, 0, 0.0),
                        (0, 0, 0.0),
                        (0, 0, 0.0),
                    ],
                    len: 2,
                    offset: -c * (self.prior(i, j + 1) - self.prior(i, j)),
                });
            }
        }
    }

    /// y = A x, the normal-equations action on interior unknowns.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        self.for_each_term(|term| {
            let mut t = 0.0;
            for &(i, j, c) in &term.nodes[..term.len] {
                if let Some(k) = self.unknown_index(i, j) {
                    t += c * x[k];
                }
            }
            if t != 0.0 {
                for &(i, j, c) in &term.nodes[..term.len] {
                    if let Some(k) = self.unknown_index(i, j) {
                        y[k] += c * t;
                    }
                }
            }
        });
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Full grid field from an interior unknown vector; layout is
    /// `u[j * (n_s + 2) + i]`.
    pub fn embed(&self, x: &[f64]) -> Vec<f64> {
        let cols = self.n_s + 2;
        let mut u = vec![0.0; cols * self.n_t];
        for j in 0..self.n_t {
            for i in 0..cols {
                u[j * cols + i] = match self.data_value(i, j) {
                    Some(v) => v,
                    None => x[self.unknown_index(i, j).unwrap()],
                };
            }
        }
        u
    }

    /// (||L u||^2, beta-weighted penalty) at a full grid field.
    pub fn functional_parts(&self, u_full: &[f64]) -> (f64, f64) {
        let cols = self.n_s + 2;
        let mut residual_sq = 0.0;
        let mut penalty_sq = 0.0;
        let mut term_index = 0usize;
        let residual_terms = self.n_s * (self.n_t - 2);
        self.for_each_term(|term| {
            let mut t = term.offset;
            for &(i, j, c) in &term.nodes[..term.len] {
                t += c * u_full[j * cols + i];
            }
            if term_index < residual_terms {
                residual_sq += t * t;
            } else {
                penalty_sq += t * t;
            }
            term_index += 1;
        });
        (residual_sq, penalty_sq)
    }

    /// Discrete L2 norm of the PDE operator applied to a full grid field.
    pub fn residual_norm(&self, u_full: &[f64]) -> f64 {
        self.functional_parts(u_full).0.sqrt()
    }
}
