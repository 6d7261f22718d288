//! Damped Newton iteration with a central finite-difference Jacobian.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct NewtonOptions<T> {
    /// Converged when `max |F| ≤ tol`.
    pub tol: T,
    pub max_iter: usize,
    /// Relative finite-difference step in scaled unknowns.
    pub fd_step: T,
    /// Maximum number of step halvings in the backtracking line search.
    pub max_backtracks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct NewtonOutcome<T> {
    pub x: Vec<T>,
    pub residual: T,
    pub iterations: usize,
}

fn max_abs<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

fn norm2<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|x| *x * *x).sum::<T>().sqrt()
}

/// Central-difference Jacobian of `f` at `x`. Column `j` uses the step
/// `h·scale[j]`, so unknowns of very different magnitude are perturbed
/// comparably.
pub(crate) fn fd_jacobian<T: Scalar>(
    f: &mut impl FnMut(&[T]) -> Result<Vec<T>>,
    x: &[T],
    scale: &[T],
    h: T,
) -> Result<DenseMatrix<T>> {
    let n = x.len();
    let mut jac = DenseMatrix::zeros(n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let step = h * scale[j];
        xp[j] = x[j] + step;
        let fp = f(&xp)?;
        xp[j] = x[j] - step;
        let fm = f(&xp)?;
        xp[j] = x[j];
        if fp.len() != n || fm.len() != n {
            return Err(Error::SolveFailure(format!("residual has {} entries for {n} unknowns", fp.len())));
        }
        let inv = T::one() / (T::lit(2.0) * step);
        for i in 0..n {
            jac.set(i, j, (fp[i] - fm[i]) * inv);
        }
    }
    Ok(jac)
}

/// Solves the square system `F(x) = 0` from `x0`. Each full Newton step is
/// halved until the Euclidean norm of `F` decreases; a step that cannot be
/// made to decrease it ends the iteration with `NoConvergence`.
pub(crate) fn solve<T: Scalar>(
    mut f: impl FnMut(&[T]) -> Result<Vec<T>>,
    x0: &[T],
    scale: &[T],
    opts: &NewtonOptions<T>,
) -> Result<NewtonOutcome<T>> {
    let mut x = x0.to_vec();
    let mut fx = f(&x)?;
    let mut iterations = 0;
    loop {
        let res = max_abs(&fx);
        if !res.is_finite() {
            return Err(Error::NoConvergence { iterations, residual: f64::INFINITY });
        }
        if res <= opts.tol {
            return Ok(NewtonOutcome { x, residual: res, iterations });
        }
        if iterations >= opts.max_iter {
            return Err(Error::NoConvergence { iterations, residual: res.to_f64_lossy() });
        }
        let jac = fd_jacobian(&mut f, &x, scale, opts.fd_step)?;
        let neg: Vec<T> = fx.iter().map(|v| -*v).collect();
        let dx = jac.solve(&neg)?;
        let base = norm2(&fx);
        let mut lambda = T::one();
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial: Vec<T> = x.iter().zip(&dx).map(|(a, d)| *a + *d * lambda).collect();
            if let Ok(ft) = f(&trial) {
                let n = norm2(&ft);
                if n.is_finite() && n < base {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            lambda *= T::lit(0.5);
        }
        match accepted {
            Some((xt, ft)) => {
                x = xt;
                fx = ft;
            }
            None => return Err(Error::NoConvergence { iterations, residual: res.to_f64_lossy() }),
        }
        iterations += 1;
    }
}
