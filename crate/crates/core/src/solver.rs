//! Steady-state solvers for `G·T = P`.
//!
//! [`solve_steady`] is Jacobi-preconditioned conjugate gradients starting from ambient;
//! [`solve_dense`] is a dense Cholesky factorisation used as an independent check.

use crate::error::{Error, Result};
use crate::mesh::SparseSystem;
use crate::scalar::{dot, norm2, Scalar};

/// Largest system [`solve_dense`] accepts.
pub const DENSE_LIMIT: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureField<S> {
    /// Kelvin per unknown, aligned with the system (cells first, sink node last).
    pub values: Vec<S>,
    pub iterations: usize,
    /// Final `‖G·T − P‖₂`.
    pub residual: S,
}

impl<S: Scalar> TemperatureField<S> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions<S> {
    /// Stop when `‖G·T − P‖₂ ≤ rel_tol·‖P‖₂`.
    pub rel_tol: S,
    /// Defaults to `50·√N`.
    pub max_iter: Option<usize>,
}

impl<S: Scalar> Default for SolveOptions<S> {
    fn default() -> Self {
        SolveOptions { rel_tol: S::of(1e-8), max_iter: None }
    }
}

impl<S: Scalar> SolveOptions<S> {
    pub fn with_tolerance(rel_tol: S) -> Self {
        SolveOptions { rel_tol, max_iter: None }
    }

    pub fn max_iter_for(&self, n: usize) -> usize {
        self.max_iter.unwrap_or_else(|| (50.0 * (n as f64).sqrt()).ceil() as usize)
    }
}

pub fn residual_norm<S: Scalar>(system: &SparseSystem<S>, values: &[S]) -> Result<S> {
    if values.len() != system.dim() {
        return Err(Error::DimensionMismatch { expected: system.dim(), found: values.len() });
    }
    let rhs = system.rhs();
    let gt = system.matrix.mul_vec(values);
    let r: Vec<S> = gt.iter().zip(&rhs).map(|(a, b)| *a - *b).collect();
    Ok(norm2(&r))
}

pub fn solve_steady<S: Scalar>(system: &SparseSystem<S>, opts: SolveOptions<S>) -> Result<TemperatureField<S>> {
    let n = system.dim();
    if !(opts.rel_tol > S::zero() && opts.rel_tol < S::one()) {
        return Err(Error::invalid("rel_tol must lie in (0, 1)"));
    }
    let max_iter = opts.max_iter_for(n);
    let b = system.rhs();
    let bnorm = norm2(&b);
    let target = opts.rel_tol * if bnorm > S::zero() { bnorm } else { S::one() };
    let inv_diag: Vec<S> = system
        .matrix
        .diagonal()
        .into_iter()
        .map(|d| if d > S::zero() { S::one() / d } else { S::one() })
        .collect();

    let mut x = vec![system.ambient; n];
    let mut r = vec![S::zero(); n];
    let mut z = vec![S::zero(); n];
    let mut p = vec![S::zero(); n];
    let mut q = vec![S::zero(); n];
    let mut iterations = 0;

    // Outer loop restarts from the true residual if the recurrence drifts below target.
    loop {
        system.matrix.mul_vec_into(&x, &mut q);
        for i in 0..n {
            r[i] = b[i] - q[i];
        }
        let mut rnorm = norm2(&r);
        if !rnorm.is_finite() {
            return Err(Error::NonFinite(iterations));
        }
        if rnorm <= target {
            return Ok(TemperatureField { values: x, iterations, residual: rnorm });
        }
        if iterations >= max_iter {
            return Err(Error::NotConverged { iterations, residual: rnorm.as_f64() });
        }
        for i in 0..n {
            z[i] = inv_diag[i] * r[i];
        }
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            iterations += 1;
            system.matrix.mul_vec_into(&p, &mut q);
            let pq = dot(&p, &q);
            if !pq.is_finite() {
                return Err(Error::NonFinite(iterations));
            }
            if pq <= S::zero() {
                return Err(Error::NotPositiveDefinite(iterations));
            }
            let alpha = rz / pq;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            rnorm = norm2(&r);
            if !rnorm.is_finite() {
                return Err(Error::NonFinite(iterations));
            }
            if rnorm <= target {
                break;
            }
            for i in 0..n {
                z[i] = inv_diag[i] * r[i];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
}

/// Direct solve by Cholesky factorisation of the dense matrix.
pub fn solve_dense<S: Scalar>(system: &SparseSystem<S>) -> Result<TemperatureField<S>> {
    let n = system.dim();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge { n, limit: DENSE_LIMIT });
    }
    let mut a = system.matrix.to_dense();
    cholesky_in_place(&mut a, n)?;
    let mut x = system.rhs();
    // L·y = b
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= a[i * n + k] * x[k];
        }
        x[i] = s / a[i * n + i];
    }
    // Lᵀ·x = y
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= a[k * n + i] * x[k];
        }
        x[i] = s / a[i * n + i];
    }
    let residual = residual_norm(system, &x)?;
    Ok(TemperatureField { values: x, iterations: 0, residual })
}

/// Overwrites the lower triangle of row-major `a` with its Cholesky factor.
pub(crate) fn cholesky_in_place<S: Scalar>(a: &mut [S], n: usize) -> Result<()> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > S::zero()) {
            return Err(Error::NotPositiveDefinite(j));
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    Ok(())
}
