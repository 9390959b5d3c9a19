//! Jacobi-preconditioned conjugate gradient for symmetric positive-definite
//! systems given as an implicit matvec.

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Achieved residual norm relative to the right-hand side norm.
    pub rel_residual: f64,
    pub converged: bool,
}

pub fn pcg<F>(matvec: F, b: &[f64], diag: &[f64], tol: f64, max_iter: usize) -> CgOutcome
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return CgOutcome { x: vec![0.0; n], iterations: 0, rel_residual: 0.0, converged: true };
    }
    let precond = |r: &[f64], z: &mut [f64]| {
        for i in 0..n {
            z[i] = if diag[i] > 0.0 { r[i] / diag[i] } else { r[i] };
        }
    };

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut r_norm = b_norm;

    for iter in 0..max_iter {
        if r_norm / b_norm <= tol {
            return CgOutcome { x, iterations: iter, rel_residual: r_norm / b_norm, converged: true };
        }
        matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            // loss of positive definiteness in floating point; stop here
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precond(&r, &mut z);
        let rz_next: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    let converged = r_norm / b_norm <= tol;
    CgOutcome { x, iterations: max_iter, rel_residual: r_norm / b_norm, converged }
}
