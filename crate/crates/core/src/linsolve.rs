//! Matrix-free Jacobi-preconditioned conjugate gradients.

use alloc::vec;
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::ScalarField;

/// A symmetric positive-definite operator applied without assembling a matrix.
pub trait LinearOperator {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `y = A x`.
    fn apply(&mut self, x: &[f64], y: &mut [f64]);

    /// Diagonal of `A`, used as the preconditioner.
    fn diagonal(&self, out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// `||b - A x|| / ||b||`, recomputed from the final iterate.
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` starting from the contents of `x`.
///
/// Stops once `||b - A x|| <= tol ||b||`; errors if `max_iter` is reached first.
pub fn solve_into<A: LinearOperator>(
    op: &mut A,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<SolveStats> {
    let n = op.len();
    debug_assert_eq!(b.len(), n);
    debug_assert_eq!(x.len(), n);
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, relative_residual: 0.0 });
    }
    let mut inv_diag = vec![0.0; n];
    op.diagonal(&mut inv_diag);
    for d in inv_diag.iter_mut() {
        *d = if *d > 0.0 { 1.0 / *d } else { 1.0 };
    }
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let target = tol * bnorm;
    let mut rnorm = dot(&r, &r).sqrt();
    if rnorm <= target {
        return Ok(SolveStats { iterations: 0, relative_residual: rnorm / bnorm });
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::LinearSolver { iterations: it, residual: rnorm / bnorm });
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        rnorm = dot(&r, &r).sqrt();
        if rnorm <= target {
            // guard against drift of the recursive residual
            op.apply(x, &mut ap);
            let true_res = ap.iter().zip(b).map(|(a, bi)| (bi - a) * (bi - a)).sum::<f64>().sqrt();
            if true_res <= target {
                return Ok(SolveStats { iterations: it, relative_residual: true_res / bnorm });
            }
            for k in 0..n {
                r[k] = b[k] - ap[k];
            }
            rnorm = true_res;
        }
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::LinearSolver { iterations: max_iter, residual: rnorm / bnorm })
}

/// Solves `A x = rhs` from a zero initial guess.
pub fn solve_linear<A: LinearOperator>(
    op: &mut A,
    rhs: &ScalarField,
    tol: f64,
    max_iter: usize,
) -> Result<ScalarField> {
    let mut x = ScalarField::zeros(*rhs.spec());
    solve_into(op, rhs.values(), x.values_mut(), tol, max_iter)?;
    Ok(x)
}
