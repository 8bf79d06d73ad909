use serde::Serialize;

use super::mesh::SpatialField;
use super::operator::SparseOperator;
use crate::error::{Error, Result};
use crate::exec::ExecPolicy;

/// Relative residual target of every step solve.
pub const SOLVER_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Trivial,
    Tridiagonal,
    ConjugateGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveStats {
    pub method: SolveMethod,
    pub iterations: usize,
    /// ‖(cM+A)U − rhs‖₂ / ‖rhs‖₂, recomputed from the returned solution.
    pub relative_residual: f64,
}

/// Solves (c·M + A) U = rhs.
pub fn solve_step_system(
    stiffness: &SparseOperator,
    mass: &SparseOperator,
    c: f64,
    rhs: &SpatialField,
    policy: ExecPolicy,
) -> Result<(SpatialField, SolveStats)> {
    let system = step_matrix(stiffness, mass, c)?;
    solve_prepared(&system, rhs, None, policy)
}

pub(crate) fn step_matrix(stiffness: &SparseOperator, mass: &SparseOperator, c: f64) -> Result<SparseOperator> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("mass coefficient must be positive, got {c}")));
    }
    stiffness.shifted(c, mass)
}

/// Solves with an already shifted SPD operator, optionally warm-started.
pub(crate) fn solve_prepared(
    system: &SparseOperator,
    rhs: &SpatialField,
    guess: Option<&[f64]>,
    policy: ExecPolicy,
) -> Result<(SpatialField, SolveStats)> {
    let n = system.size();
    if rhs.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    let b = &rhs.values;
    let b_norm = policy.dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok((
            SpatialField { values: vec![0.0; n] },
            SolveStats {
                method: SolveMethod::Trivial,
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    if !b_norm.is_finite() {
        return Err(Error::NonFinite("right-hand side".into()));
    }
    let (x, method, iterations) = match system.tridiagonal_bands() {
        Some((sub, diag, sup)) => (thomas(&sub, &diag, &sup, b), SolveMethod::Tridiagonal, 0),
        None => {
            let (x, it) = pcg(system, b, guess, policy)?;
            (x, SolveMethod::ConjugateGradient, it)
        }
    };
    let relative_residual = residual_norm(system, &x, b, policy) / b_norm;
    if !(relative_residual <= SOLVER_TOLERANCE) {
        return Err(Error::NonConvergence {
            iterations,
            residual: relative_residual,
        });
    }
    Ok((
        SpatialField { values: x },
        SolveStats {
            method,
            iterations,
            relative_residual,
        },
    ))
}

pub(crate) fn residual_norm(system: &SparseOperator, x: &[f64], b: &[f64], policy: ExecPolicy) -> f64 {
    let ax = system.apply(x, policy);
    policy.sum(b.len(), |i| (ax[i] - b[i]).powi(2)).sqrt()
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = if n > 1 { sup[0] / diag[0] } else { 0.0 };
    d[0] = b[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i - 1] * c[i - 1];
        if i + 1 < n {
            c[i] = sup[i] / denom;
        }
        d[i] = (b[i] - sub[i - 1] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// Jacobi-preconditioned conjugate gradient, capped at 20·n iterations.
fn pcg(a: &SparseOperator, b: &[f64], guess: Option<&[f64]>, policy: ExecPolicy) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut x = guess.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = a.apply(&x, policy);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let b_norm = policy.dot(b, b).sqrt();
    // A slightly tighter internal target absorbs the drift between the
    // recursive and the true residual.
    let target = 0.25 * SOLVER_TOLERANCE * b_norm;
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = policy.dot(&r, &z);
    let cap = 20 * n;
    for it in 0..cap {
        if policy.dot(&r, &r).sqrt() <= target {
            return Ok((x, it));
        }
        a.apply_into(&p, &mut ap, policy);
        let pap = policy.dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: policy.dot(&r, &r).sqrt() / b_norm,
            });
        }
        let step = rz / pap;
        policy.for_each_chunk_mut(&mut x, |off, xs| {
            for (j, xi) in xs.iter_mut().enumerate() {
                *xi += step * p[off + j];
            }
        });
        policy.for_each_chunk_mut(&mut r, |off, rs| {
            for (j, ri) in rs.iter_mut().enumerate() {
                *ri -= step * ap[off + j];
            }
        });
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = policy.dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        policy.for_each_chunk_mut(&mut p, |off, ps| {
            for (j, pi) in ps.iter_mut().enumerate() {
                *pi = z[off + j] + beta * *pi;
            }
        });
    }
    let res = policy.dot(&r, &r).sqrt() / b_norm;
    if res <= SOLVER_TOLERANCE {
        Ok((x, cap))
    } else {
        Err(Error::NonConvergence {
            iterations: cap,
            residual: res,
        })
    }
}
