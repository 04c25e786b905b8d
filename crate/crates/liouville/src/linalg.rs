//! Hermitian eigensolver, matrix exponential, and a small linear solver.
//!
//! Everything here is dependency-free and deterministic. The eigensolver is
//! cyclic Jacobi on the complex Hermitian matrix; the exponential is
//! scaling-and-squaring with a Taylor core, so no general non-Hermitian
//! eigendecomposition is needed anywhere. Dimensions stay small (at most a
//! few hundred for vectorized superoperators), so O(N^3) dense routines are
//! the right tool.

use crate::error::{Error, Result};
use crate::operators::HilbertOp;
use crate::C64;
use ndarray::{Array1, Array2};

const MAX_JACOBI_SWEEPS: usize = 200;

/// Eigendecomposition of a Hermitian operator.
///
/// Returns eigenvalues in ascending order and a unitary matrix whose `j`-th
/// column is the eigenvector of the `j`-th eigenvalue. Fails on input that
/// is not Hermitian within the standard tolerance.
pub fn hermitian_eig(h: &HilbertOp) -> Result<(Vec<f64>, Array2<C64>)> {
    h.require_hermitian()?;
    let (vals, vecs) = jacobi_eig(&h.mat)?;
    Ok((vals, vecs))
}

/// Jacobi iteration on an already-Hermitian matrix (symmetrized defensively;
/// no Hermiticity error reported). Shared by callers that build Gram or
/// `S S^dag` matrices which are Hermitian by construction.
pub(crate) fn jacobi_eig(mat: &Array2<C64>) -> Result<(Vec<f64>, Array2<C64>)> {
    let n = mat.nrows();
    // Symmetrize so roundoff in the caller cannot bias the iteration.
    let mut a = mat.clone();
    for p in 0..n {
        a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
        for q in (p + 1)..n {
            let avg = 0.5 * (a[(p, q)] + a[(q, p)].conj());
            a[(p, q)] = avg;
            a[(q, p)] = avg.conj();
        }
    }
    let mut v = Array2::<C64>::eye(n);
    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if scale > 0.0 && n > 1 {
        let target = 1e-14 * scale;
        let skip = 1e-18 * scale;
        let mut sweeps = 0;
        loop {
            let off = off_diagonal_norm(&a);
            if off <= target {
                break;
            }
            if sweeps >= MAX_JACOBI_SWEEPS {
                return Err(Error::NoConvergence { sweeps, off });
            }
            sweeps += 1;
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let mag = apq.norm();
                    if mag <= skip {
                        continue;
                    }
                    // Absorb the phase so a real rotation closes the pivot:
                    // with a_pq = |a_pq| e^{i phi}, the 2x2 unitary is
                    // diag(1, e^{-i phi}) times a classic Jacobi rotation.
                    let eiphi = apq / mag;
                    let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                    let t = if tau == 0.0 {
                        1.0
                    } else {
                        tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let g_lo = eiphi.conj() * c;
                    let g_hi = eiphi.conj() * s;
                    for i in 0..n {
                        let xp = a[(i, p)];
                        let xq = a[(i, q)];
                        a[(i, p)] = xp * c - xq * g_hi;
                        a[(i, q)] = xp * s + xq * g_lo;
                    }
                    let h_lo = eiphi * c;
                    let h_hi = eiphi * s;
                    for j in 0..n {
                        let xp = a[(p, j)];
                        let xq = a[(q, j)];
                        a[(p, j)] = xp * c - xq * h_hi;
                        a[(q, j)] = xp * s + xq * h_lo;
                    }
                    for i in 0..n {
                        let xp = v[(i, p)];
                        let xq = v[(i, q)];
                        v[(i, p)] = xp * c - xq * g_hi;
                        v[(i, q)] = xp * s + xq * g_lo;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut sorted = Array2::<C64>::zeros((n, n));
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            sorted[(r, new_col)] = v[(r, old_col)];
        }
    }
    Ok((vals, sorted))
}

fn off_diagonal_norm(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                acc += a[(p, q)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Matrix exponential `exp(a t)` by scaling-and-squaring with a Taylor core.
///
/// The matrix is scaled so its 1-norm drops to 0.5 or below, the series is
/// summed to machine precision, and the result is squared back. Requires
/// finite entries (callers construct these from validated operators).
pub fn expm(a: &Array2<C64>, t: f64) -> Array2<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let m = a.mapv(|z| z * t);
    let norm = one_norm(&m);
    let squarings = if norm > 0.5 {
        ((norm / 0.5).log2().ceil() as u32).min(64)
    } else {
        0
    };
    let m = m.mapv(|z| z / 2f64.powi(squarings as i32));

    let mut result = Array2::<C64>::eye(n);
    let mut term = Array2::<C64>::eye(n);
    for j in 1..64 {
        term = term.dot(&m).mapv(|z| z / j as f64);
        let tn = term.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        result = result + &term;
        if tn <= 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// `expm` on a wrapped operator, keeping the wrapper type.
pub fn expm_op(a: &HilbertOp, t: f64) -> HilbertOp {
    HilbertOp {
        mat: expm(&a.mat, t),
        label: None,
    }
}

fn one_norm(a: &Array2<C64>) -> f64 {
    let mut best = 0.0f64;
    for col in a.columns() {
        best = best.max(col.iter().map(|z| z.norm()).sum());
    }
    best
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// Used for small systems (Gram matrices, closure coefficients); fails on
/// singular input.
pub fn solve_linear(a: &Array2<C64>, b: &Array1<C64>) -> Result<Array1<C64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "solve_linear: {}x{} matrix with rhs of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let mut m = a.clone();
    let mut x = b.clone();
    let scale = one_norm(&m).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if m[(row, col)].norm() > m[(pivot, col)].norm() {
                pivot = row;
            }
        }
        if m[(pivot, col)].norm() <= 1e-14 * scale {
            return Err(Error::PreconditionViolated(
                "solve_linear: singular matrix".into(),
            ));
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(pivot, j)];
                m[(pivot, j)] = tmp;
            }
            let tmp = x[col];
            x[col] = x[pivot];
            x[pivot] = tmp;
        }
        let d = m[(col, col)];
        for row in (col + 1)..n {
            let f = m[(row, col)] / d;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in col..n {
                let sub = f * m[(col, j)];
                m[(row, j)] -= sub;
            }
            let sub = f * x[col];
            x[row] -= sub;
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for j in (col + 1)..n {
            acc -= m[(col, j)] * x[j];
        }
        x[col] = acc / m[(col, col)];
    }
    Ok(x)
}
