//! Liouville subspaces and their conventional/unconventional classification.
//!
//! A subspace `V` of operator space is conventional when it is the full
//! corner `P L P` cut out by some Hilbert-space projector `P`. Evolution
//! restricted to such a `V` is ordinary quantum mechanics on the smaller
//! Hilbert space; anything else is a genuinely Liouville-space structure.
//! The classifier below reconstructs the only candidate `P` (the projector
//! onto the joint column span of the basis) and tests `V = P L P` at
//! tolerance.

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eig, solve_linear};
use crate::operators::{trace_inner_product, HilbertOp};
use crate::C64;
use ndarray::{Array1, Array2};

/// A subspace of operator space, described by a spanning set.
#[derive(Clone, Debug)]
pub struct LiouvilleSubspace {
    pub hdim: usize,
    pub basis: Vec<HilbertOp>,
}

impl LiouvilleSubspace {
    /// Wraps a basis, requiring at least one element, matching dimensions,
    /// and linear independence (checked through the Gram matrix spectrum).
    pub fn new(basis: Vec<HilbertOp>) -> Result<Self> {
        let hdim = match basis.first() {
            Some(op) => op.dim(),
            None => return Err(Error::DegenerateBasis("empty basis".into())),
        };
        if basis.iter().any(|op| op.dim() != hdim) {
            return Err(Error::DimensionMismatch(
                "basis elements have mixed dimensions".into(),
            ));
        }
        let me = Self { hdim, basis };
        let (cond, min_eig) = me.gram_condition()?;
        if !(min_eig > 0.0) || cond > 1e12 {
            return Err(Error::DegenerateBasis(format!(
                "basis not independent at working precision (gram condition {cond:.3e})"
            )));
        }
        Ok(me)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Gram matrix `G_ab = <A_a, A_b>` of the basis.
    pub fn gram(&self) -> Result<Array2<C64>> {
        let k = self.basis.len();
        let mut g = Array2::zeros((k, k));
        for a in 0..k {
            for b in 0..k {
                g[(a, b)] = trace_inner_product(&self.basis[a], &self.basis[b])?;
            }
        }
        Ok(g)
    }

    /// Condition number and smallest eigenvalue of the Gram matrix.
    pub fn gram_condition(&self) -> Result<(f64, f64)> {
        let g = self.gram()?;
        let (vals, _) = jacobi_eig(&g)?;
        let min = vals.first().copied().unwrap_or(0.0);
        let max = vals.last().copied().unwrap_or(0.0);
        if min <= 0.0 {
            return Ok((f64::INFINITY, min));
        }
        Ok((max / min, min))
    }

    /// Least-squares coefficients expressing `op` in the basis, together
    /// with the residual norm of the projection.
    pub fn project(&self, op: &HilbertOp) -> Result<(Array1<C64>, f64)> {
        let g = self.gram()?;
        let k = self.basis.len();
        let mut rhs = Array1::zeros(k);
        for a in 0..k {
            rhs[a] = trace_inner_product(&self.basis[a], op)?;
        }
        let coeffs = solve_linear(&g, &rhs)?;
        let mut recon = HilbertOp::zeros(self.hdim);
        for (c, b) in coeffs.iter().zip(&self.basis) {
            recon = recon.plus(&b.scaled(*c))?;
        }
        let residual = op.minus(&recon)?.fro_norm();
        Ok((coeffs, residual))
    }

    /// Whether the adjoint of every basis element stays in the span.
    pub fn is_dagger_closed(&self, tol: f64) -> Result<bool> {
        for b in &self.basis {
            let (_, residual) = self.project(&b.dagger())?;
            if residual > tol * b.fro_norm().max(1.0) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Outcome of [`classify_subspace`].
#[derive(Clone, Debug)]
pub enum SubspaceClass {
    /// `V = P L P` for the returned Hilbert-space projector; the subspace
    /// dimension is exactly `rank^2`.
    Conventional {
        projector: HilbertOp,
        rank: usize,
    },
    /// Dagger-closed but not a corner of operator space. `corner_defect` is
    /// the worst relative distance of a basis element from `P L P`;
    /// `dim_gap` is `rank(P)^2 - dim(V)` (zero when only the corner test
    /// failed). `marginal_rank` flags rank decisions that fell within an
    /// order of magnitude of the tolerance, where the verdict should not be
    /// trusted blindly.
    Unconventional {
        corner_defect: f64,
        dim_gap: i64,
        marginal_rank: bool,
    },
    /// Some adjoint of a basis element leaves the span; the classification
    /// theory does not apply.
    NotDaggerClosed,
}

/// Classifies a dagger-closed subspace as conventional (a corner `P L P`)
/// or unconventional.
///
/// `W` is taken as the joint column span of the basis elements, obtained
/// from the spectrum of `sum_a A_a A_a^dag`; `P` projects onto `W`. The
/// subspace is conventional exactly when every basis element survives the
/// compression `A -> P A P` and the dimension saturates `rank(P)^2`.
pub fn classify_subspace(v: &LiouvilleSubspace, tol: f64) -> Result<SubspaceClass> {
    if !v.is_dagger_closed(tol)? {
        return Ok(SubspaceClass::NotDaggerClosed);
    }
    let n = v.hdim;

    // Accumulate sum_a A_a A_a^dag, a positive operator whose support is
    // the joint column span (dagger-closure makes row and column spans
    // coincide).
    let mut s = Array2::<C64>::zeros((n, n));
    for b in &v.basis {
        let bd = b.dagger();
        s = s + b.mat.dot(&bd.mat);
    }
    let (vals, vecs) = jacobi_eig(&s)?;
    let top = vals.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let rank_tol = tol.max(1e-14) * top;
    let rank = vals.iter().filter(|&&w| w > rank_tol).count();
    // A rank decision within a decade of the cut is not trustworthy.
    let marginal_rank = vals
        .iter()
        .any(|&w| w > rank_tol * 0.1 && w <= rank_tol * 10.0);

    let mut p = Array2::<C64>::zeros((n, n));
    for (j, &w) in vals.iter().enumerate() {
        if w <= rank_tol {
            continue;
        }
        for r in 0..n {
            for c in 0..n {
                p[(r, c)] += vecs[(r, j)] * vecs[(c, j)].conj();
            }
        }
    }
    let projector = HilbertOp {
        mat: p,
        label: None,
    };

    let mut corner_defect = 0.0f64;
    for b in &v.basis {
        let pap = projector.mat.dot(&b.mat).dot(&projector.mat);
        let defect: f64 = (&pap - &b.mat)
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
            / b.fro_norm().max(f64::MIN_POSITIVE);
        corner_defect = corner_defect.max(defect);
    }
    let dim_gap = (rank * rank) as i64 - v.dim() as i64;

    if corner_defect <= tol && dim_gap == 0 {
        // A conventional subspace always has square dimension; the gap test
        // above enforces this, so simply assert the arithmetic.
        debug_assert_eq!(v.dim(), rank * rank);
        Ok(SubspaceClass::Conventional { projector, rank })
    } else {
        Ok(SubspaceClass::Unconventional {
            corner_defect,
            dim_gap,
            marginal_rank,
        })
    }
}
