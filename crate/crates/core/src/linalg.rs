//! Conjugate gradients for the SPD Robin systems.

use crate::assembly::LoadVector;
use crate::error::{invalid, Error, Result};
use crate::sparse::SymmetricSparseMatrix;

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    /// `None` means ten times the system dimension.
    pub max_iter: Option<usize>,
    pub precondition: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: DEFAULT_TOL, max_iter: None, precondition: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// True relative residual `‖b − Ax‖ / ‖b‖` of the returned iterate.
    pub final_relative_residual: f64,
    pub converged: bool,
    /// Relative (recursive) residual after each iteration, starting with the
    /// initial one.
    pub residual_history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` from a zero initial guess, optionally with the Jacobi
/// preconditioner. Stopping is decided on the true residual; a singular or
/// indefinite `A` shows up as a non-converged report or a breakdown error.
pub fn cg_solve(
    a: &SymmetricSparseMatrix,
    b: &LoadVector,
    tol: f64,
    max_iter: usize,
    precondition: bool,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    let b = &b.values;
    if b.len() != n {
        return Err(invalid(format!("right-hand side has length {}, matrix has dimension {n}", b.len())));
    }
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericBreakdown { iteration: 0, what: "non-finite right-hand side" });
    }
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        let report = SolveReport {
            iterations: 0,
            final_relative_residual: 0.0,
            converged: true,
            residual_history: vec![0.0],
        };
        return Ok((x, report));
    }

    let inv_diag: Vec<f64> = if precondition {
        let diag = a.diagonal();
        if diag.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::NumericBreakdown { iteration: 0, what: "nonpositive diagonal entry" });
        }
        diag.iter().map(|d| 1.0 / d).collect()
    } else {
        vec![1.0; n]
    };

    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut history = vec![1.0];
    let mut iterations = 0;
    let mut true_rel = 1.0;

    while iterations < max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() {
            return Err(Error::NumericBreakdown { iteration: iterations, what: "non-finite curvature" });
        }
        if pap <= 0.0 {
            // Direction of zero or negative curvature: A is not positive definite.
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        let rel = norm(&r) / bnorm;
        if !rel.is_finite() {
            return Err(Error::NumericBreakdown { iteration: iterations, what: "non-finite residual" });
        }
        history.push(rel);
        if rel <= tol {
            // Confirm on the true residual and restart from it if rounding
            // has let the recursion drift.
            a.mul_vec_into(&x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            true_rel = norm(&r) / bnorm;
            if true_rel <= tol {
                let report = SolveReport {
                    iterations,
                    final_relative_residual: true_rel,
                    converged: true,
                    residual_history: history,
                };
                return Ok((x, report));
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    if iterations > 0 {
        a.mul_vec_into(&x, &mut ap);
        let res: Vec<f64> = b.iter().zip(&ap).map(|(b, ax)| b - ax).collect();
        true_rel = norm(&res) / bnorm;
    }
    if !true_rel.is_finite() {
        return Err(Error::NumericBreakdown { iteration: iterations, what: "non-finite residual" });
    }
    let report = SolveReport {
        iterations,
        final_relative_residual: true_rel,
        converged: true_rel <= tol,
        residual_history: history,
    };
    Ok((x, report))
}

/// `cg_solve` with [`SolverOptions`]; non-convergence becomes an error.
pub fn solve_spd(a: &SymmetricSparseMatrix, b: &LoadVector, opts: &SolverOptions) -> Result<(Vec<f64>, SolveReport)> {
    let max_iter = opts.max_iter.unwrap_or(10 * a.dim().max(1));
    let (x, report) = cg_solve(a, b, opts.tol, max_iter, opts.precondition)?;
    if !report.converged {
        return Err(Error::NonConvergence {
            iterations: report.iterations,
            residual: report.final_relative_residual,
        });
    }
    Ok((x, report))
}

/// `vᵀ A v`.
pub fn quadratic_form(a: &SymmetricSparseMatrix, v: &[f64]) -> Result<f64> {
    a.quadratic_form(v)
}
