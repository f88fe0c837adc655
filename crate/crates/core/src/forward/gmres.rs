//! Restarted GMRES for the matrix-free volume-integral operators.
//!
//! The Lippmann-Schwinger operators are non-symmetric, so a Krylov
//! method with Arnoldi orthogonalization and Givens rotations for the
//! running least-squares problem is used. Only operator applications are
//! required; the operator is supplied as a closure.

use num_complex::Complex64;

/// Convergence report of a successful solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Iteration failure carrying the final relative residual.
#[derive(Debug, Clone, Copy)]
pub struct NotConverged {
    pub iterations: usize,
    pub residual: f64,
}

/// Krylov dimension per restart cycle.
const RESTART: usize = 50;

/// Solves `A x = b` for the matrix-free operator `apply`, down to
/// `tolerance` in relative residual, with at most `max_iterations`
/// operator applications.
pub fn gmres<F>(
    apply: F,
    rhs: &[Complex64],
    tolerance: f64,
    max_iterations: usize,
) -> Result<(Vec<Complex64>, SolveStats), NotConverged>
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let n = rhs.len();
    let mut x = vec![Complex64::default(); n];

    let rhs_norm = norm(rhs);
    if rhs_norm == 0.0 {
        return Ok((x, SolveStats { iterations: 0, residual: 0.0 }));
    }
    let abs_tol = tolerance * rhs_norm;
    let mut total_iters = 0;

    loop {
        // r = b - A x
        let mut r = apply(&x);
        for (ri, bi) in r.iter_mut().zip(rhs) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        if beta <= abs_tol {
            return Ok((x, SolveStats { iterations: total_iters, residual: beta / rhs_norm }));
        }
        if total_iters >= max_iterations {
            return Err(NotConverged { iterations: total_iters, residual: beta / rhs_norm });
        }

        let restart = RESTART.min(n);
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(restart + 1);
        basis.push(scale(&r, 1.0 / beta));

        // Upper Hessenberg matrix, column-major per Arnoldi step.
        let mut h_cols: Vec<Vec<Complex64>> = Vec::with_capacity(restart);
        let mut cs: Vec<f64> = Vec::with_capacity(restart);
        let mut sn: Vec<Complex64> = Vec::with_capacity(restart);
        let mut g = vec![Complex64::default(); restart + 1];
        g[0] = Complex64::new(beta, 0.0);

        let mut j = 0;
        while j < restart && total_iters < max_iterations {
            let mut w = apply(&basis[j]);
            let mut h_col = vec![Complex64::default(); j + 2];
            // Modified Gram-Schmidt
            for (i, v) in basis.iter().enumerate().take(j + 1) {
                let hij = dot(v, &w);
                h_col[i] = hij;
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= hij * vi;
                }
            }
            let wnorm = norm(&w);
            h_col[j + 1] = Complex64::new(wnorm, 0.0);
            if wnorm > 1e-300 {
                basis.push(scale(&w, 1.0 / wnorm));
            } else {
                // Exact breakdown: the Krylov space is invariant.
                basis.push(vec![Complex64::default(); n]);
            }

            // Apply the accumulated Givens rotations to the new column.
            for i in 0..j {
                let t = cs[i] * h_col[i] + sn[i] * h_col[i + 1];
                h_col[i + 1] = -sn[i].conj() * h_col[i] + cs[i] * h_col[i + 1];
                h_col[i] = t;
            }
            let (c, s) = givens(h_col[j], h_col[j + 1]);
            cs.push(c);
            sn.push(s);
            h_col[j] = c * h_col[j] + s * h_col[j + 1];
            h_col[j + 1] = Complex64::default();
            let t = c * g[j] + s * g[j + 1];
            g[j + 1] = -s.conj() * g[j] + c * g[j + 1];
            g[j] = t;

            h_cols.push(h_col);
            total_iters += 1;
            j += 1;

            if g[j].norm() <= abs_tol {
                break;
            }
        }

        // Back-substitution on the triangularized system.
        let mut y = vec![Complex64::default(); j];
        for i in (0..j).rev() {
            let mut sum = g[i];
            for (l, y_l) in y.iter().enumerate().take(j).skip(i + 1) {
                sum -= h_cols[l][i] * y_l;
            }
            if h_cols[i][i].norm() > 1e-300 {
                y[i] = sum / h_cols[i][i];
            }
        }
        for (i, yi) in y.iter().enumerate() {
            for (xl, vl) in x.iter_mut().zip(&basis[i]) {
                *xl += yi * vl;
            }
        }

        let mut r = apply(&x);
        for (ri, bi) in r.iter_mut().zip(rhs) {
            *ri = bi - *ri;
        }
        let res = norm(&r);
        if res <= abs_tol {
            return Ok((x, SolveStats { iterations: total_iters, residual: res / rhs_norm }));
        }
        if total_iters >= max_iterations {
            return Err(NotConverged { iterations: total_iters, residual: res / rhs_norm });
        }
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(ai, bi)| ai.conj() * bi).sum()
}

fn scale(v: &[Complex64], s: f64) -> Vec<Complex64> {
    v.iter().map(|c| c * s).collect()
}

fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    if b.norm() == 0.0 {
        return (1.0, Complex64::default());
    }
    if a.norm() == 0.0 {
        return (0.0, b.conj() / b.norm());
    }
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let c = a.norm() / r;
    let s = (a / a.norm()) * b.conj() / r;
    (c, s)
}
