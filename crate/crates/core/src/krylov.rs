//! Preconditioned conjugate gradients.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcgOptions {
    pub rtol: f64,
    pub maxit: usize,
}

impl Default for PcgOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            maxit: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// Euclidean residual norms, starting with the initial residual.
    pub residuals: Vec<f64>,
    pub relative_residual: f64,
    pub elapsed: Duration,
}

/// Solves `A x = b` by CG preconditioned with `m`, from initial guess `x0`
/// (zero if `None`).
///
/// Stops when `||r_k|| <= rtol ||r_0||` in the Euclidean norm or after
/// `maxit` iterations. A non-positive `<z, r>` means the preconditioner is not
/// positive definite and aborts the solve.
pub fn pcg(
    a: impl Fn(&[f64]) -> Vector,
    m: impl Fn(&[f64]) -> Vector,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: PcgOptions,
) -> Result<(Vector, SolveReport)> {
    let start = Instant::now();
    let n = b.len();
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = b.to_vec();
    if x0.is_some() {
        axpy(-1.0, &a(&x), &mut r);
    }
    let r0 = norm2(&r);
    let mut residuals = vec![r0];
    let report = |iterations: usize, residuals: Vec<f64>, rel: f64, converged: bool| SolveReport {
        iterations,
        converged,
        residuals,
        relative_residual: rel,
        elapsed: start.elapsed(),
    };
    if r0 == 0.0 {
        return Ok((x, report(0, residuals, 0.0, true)));
    }

    let mut z = m(&r);
    let mut rz = dot(&r, &z);
    if rz <= 0.0 {
        return Err(Error::IndefinitePreconditioner {
            iteration: 0,
            value: rz,
        });
    }
    let mut p = z.clone();
    for k in 1..=opts.maxit {
        let ap = a(&p);
        let alpha = rz / dot(&p, &ap);
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rn = norm2(&r);
        residuals.push(rn);
        if rn <= opts.rtol * r0 {
            return Ok((x, report(k, residuals, rn / r0, true)));
        }
        if k == opts.maxit {
            break;
        }
        z = m(&r);
        let rz_next = dot(&r, &z);
        if rz_next <= 0.0 {
            return Err(Error::IndefinitePreconditioner {
                iteration: k,
                value: rz_next,
            });
        }
        let beta = rz_next / rz;
        rz = rz_next;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    let rel = residuals.last().unwrap() / r0;
    Ok((x, report(opts.maxit, residuals, rel, rel <= opts.rtol)))
}
