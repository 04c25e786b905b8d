//! Superoperators: linear maps on the space of operators.
//!
//! A superoperator on an `N`-dimensional Hilbert space is stored as an
//! `N^2 x N^2` complex matrix acting on column-vectorized operators. With
//! column stacking, left multiplication by `A` has matrix `1 (x) A` and
//! right multiplication has `A^T (x) 1`, and the adjoint with respect to
//! the trace inner product is the plain conjugate transpose.

use crate::error::{Error, Result};
use crate::linalg::expm;
use crate::operators::{kron, HilbertOp};
use crate::C64;
use ndarray::{Array1, Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stacks the columns of an operator matrix: entry `(j,k)` lands at flat
/// index `k*N + j`.
pub fn vec_op(rho: &Array2<C64>) -> Array1<C64> {
    let n = rho.nrows();
    let mut v = Array1::zeros(n * n);
    for k in 0..n {
        for j in 0..n {
            v[k * n + j] = rho[(j, k)];
        }
    }
    v
}

/// Inverse of [`vec_op`].
pub fn unvec(v: ArrayView1<C64>, n: usize) -> Array2<C64> {
    assert_eq!(v.len(), n * n, "flat length must be n^2");
    let mut rho = Array2::zeros((n, n));
    for k in 0..n {
        for j in 0..n {
            rho[(j, k)] = v[k * n + j];
        }
    }
    rho
}

/// A linear map on vectorized `hdim x hdim` operators.
#[derive(Clone, Debug)]
pub struct SuperOp {
    pub hdim: usize,
    pub mat: Array2<C64>,
    pub label: Option<String>,
}

impl SuperOp {
    pub fn new(hdim: usize, mat: Array2<C64>) -> Result<Self> {
        let n2 = hdim * hdim;
        if mat.nrows() != n2 || mat.ncols() != n2 {
            return Err(Error::DimensionMismatch(format!(
                "superoperator on hdim {hdim} needs a {n2}x{n2} matrix, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite superoperator entry".into()));
        }
        Ok(Self {
            hdim,
            mat,
            label: None,
        })
    }

    pub fn labeled(hdim: usize, mat: Array2<C64>, label: impl Into<String>) -> Result<Self> {
        let mut s = Self::new(hdim, mat)?;
        s.label = Some(label.into());
        Ok(s)
    }

    pub fn zeros(hdim: usize) -> Self {
        Self {
            hdim,
            mat: Array2::zeros((hdim * hdim, hdim * hdim)),
            label: None,
        }
    }

    pub fn identity(hdim: usize) -> Self {
        Self {
            hdim,
            mat: Array2::eye(hdim * hdim),
            label: None,
        }
    }

    pub fn apply(&self, rho: &HilbertOp) -> Result<HilbertOp> {
        if rho.dim() != self.hdim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator hdim {} applied to a {}-dim operator",
                self.hdim,
                rho.dim()
            )));
        }
        let v = self.mat.dot(&vec_op(&rho.mat));
        HilbertOp::new(unvec(v.view(), self.hdim))
    }

    /// The same map carrying a new label.
    pub fn labeled_as(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Adjoint with respect to the trace inner product.
    pub fn dagger(&self) -> Self {
        let mut mat = self.mat.t().to_owned();
        mat.mapv_inplace(|z| z.conj());
        Self {
            hdim: self.hdim,
            mat,
            label: None,
        }
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            hdim: self.hdim,
            mat: self.mat.mapv(|z| z * c),
            label: None,
        }
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        check_same_hdim(self, other)?;
        Self::new(self.hdim, &self.mat + &other.mat)
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        check_same_hdim(self, other)?;
        Self::new(self.hdim, &self.mat - &other.mat)
    }

    /// Composition `self after other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        check_same_hdim(self, other)?;
        Self::new(self.hdim, self.mat.dot(&other.mat))
    }

    pub fn fro_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    /// `exp(self * t)` as a superoperator.
    pub fn exp(&self, t: f64) -> Self {
        Self {
            hdim: self.hdim,
            mat: expm(&self.mat, t),
            label: None,
        }
    }
}

fn check_same_hdim(a: &SuperOp, b: &SuperOp) -> Result<()> {
    if a.hdim != b.hdim {
        return Err(Error::DimensionMismatch(format!(
            "superoperator hdims {} and {} differ",
            a.hdim, b.hdim
        )));
    }
    Ok(())
}

/// The map `rho -> a rho`.
pub fn promote_left(a: &HilbertOp) -> SuperOp {
    let id = HilbertOp::identity(a.dim());
    let mat = kron(&id, a).mat;
    SuperOp {
        hdim: a.dim(),
        mat,
        label: a.label.as_ref().map(|l| format!("({l})_l")),
    }
}

/// The map `rho -> rho a`.
pub fn promote_right(a: &HilbertOp) -> SuperOp {
    let id = HilbertOp::identity(a.dim());
    let at = HilbertOp {
        mat: a.mat.t().to_owned(),
        label: None,
    };
    let mat = kron(&at, &id).mat;
    SuperOp {
        hdim: a.dim(),
        mat,
        label: a.label.as_ref().map(|l| format!("({l})_r")),
    }
}

/// The closed-system Liouvillian `L = i(H_r - H_l)`, so that
/// `apply(L, rho) = i(rho h - h rho) = i[rho, h]`.
pub fn liouvillian_from_h(h: &HilbertOp) -> Result<SuperOp> {
    h.require_hermitian()?;
    let i = C64::new(0.0, 1.0);
    let l = promote_right(h)
        .minus(&promote_left(h))?
        .scaled(i);
    Ok(SuperOp {
        label: Some("L".into()),
        ..l
    })
}

/// Deterministic probe operators used by the functional checks below.
fn probe_ops(hdim: usize, count: usize) -> Vec<HilbertOp> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ab1e);
    (0..count)
        .map(|_| {
            let mut mat = Array2::zeros((hdim, hdim));
            for z in mat.iter_mut() {
                *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let op = HilbertOp { mat, label: None };
            let norm = op.fro_norm();
            op.scaled(C64::new(1.0 / norm, 0.0))
        })
        .collect()
}

/// Residual of the anti-Hermiticity property `<A,S(B)> = -<S(A),B>`.
///
/// Returns the larger of the matrix-representation residual (largest entry
/// of `S + S^dag`) and the worst violation over a fixed seeded probe set of
/// unit-norm operator pairs. Zero for exactly anti-Hermitian maps.
pub fn is_anti_hermitian(s: &SuperOp) -> f64 {
    let n2 = s.hdim * s.hdim;
    let mut residual = 0.0f64;
    for r in 0..n2 {
        for c in 0..n2 {
            residual = residual.max((s.mat[(r, c)] + s.mat[(c, r)].conj()).norm());
        }
    }
    let probes = probe_ops(s.hdim, 8);
    for a in &probes {
        let sa = s.apply(a).expect("probe dims match");
        for b in &probes {
            let sb = s.apply(b).expect("probe dims match");
            let lhs = crate::operators::trace_inner_product(a, &sb).expect("dims");
            let rhs = crate::operators::trace_inner_product(&sa, b).expect("dims");
            residual = residual.max((lhs + rhs).norm());
        }
    }
    residual
}

/// True when the map sends every Hermitian operator to a Hermitian result.
///
/// Checked on the canonical Hermitian basis (diagonal units plus the
/// symmetric and antisymmetric combinations of off-diagonal units).
pub fn is_real_superop(s: &SuperOp, tol: f64) -> bool {
    let n = s.hdim;
    let mut worst = 0.0f64;
    let mut check = |mat: Array2<C64>| {
        let op = HilbertOp { mat, label: None };
        let out = s.apply(&op).expect("dims match");
        worst = worst.max(out.hermiticity_deviation());
    };
    for j in 0..n {
        let mut m = Array2::zeros((n, n));
        m[(j, j)] = C64::new(1.0, 0.0);
        check(m);
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let mut sym = Array2::zeros((n, n));
            sym[(j, k)] = C64::new(1.0, 0.0);
            sym[(k, j)] = C64::new(1.0, 0.0);
            check(sym);
            let mut asym = Array2::zeros((n, n));
            asym[(j, k)] = C64::new(0.0, 1.0);
            asym[(k, j)] = C64::new(0.0, -1.0);
            check(asym);
        }
    }
    worst <= tol
}

/// Recovers `A` when the map is left multiplication by some operator.
///
/// A left multiplication satisfies `S = (S(1))_l`; the candidate `S(1)` is
/// extracted and compared against the map itself.
pub fn is_left_multiplication(s: &SuperOp, tol: f64) -> Option<HilbertOp> {
    let candidate = s
        .apply(&HilbertOp::identity(s.hdim))
        .expect("identity dims match");
    let diff = s.minus(&promote_left(&candidate)).expect("same hdim");
    if diff.fro_norm() <= tol * s.fro_norm().max(1.0) {
        Some(candidate)
    } else {
        None
    }
}

/// Right-multiplication analogue of [`is_left_multiplication`].
pub fn is_right_multiplication(s: &SuperOp, tol: f64) -> Option<HilbertOp> {
    let candidate = s
        .apply(&HilbertOp::identity(s.hdim))
        .expect("identity dims match");
    let diff = s.minus(&promote_right(&candidate)).expect("same hdim");
    if diff.fro_norm() <= tol * s.fro_norm().max(1.0) {
        Some(candidate)
    } else {
        None
    }
}

fn rank_one(eigvecs: &Array2<C64>, ket: usize, bra: usize) -> HilbertOp {
    let n = eigvecs.nrows();
    let mut mat = Array2::zeros((n, n));
    for r in 0..n {
        for c in 0..n {
            mat[(r, c)] = eigvecs[(r, ket)] * eigvecs[(c, bra)].conj();
        }
    }
    HilbertOp { mat, label: None }
}

fn check_eig_index(eigvecs: &Array2<C64>, idx: usize) -> Result<()> {
    if idx >= eigvecs.ncols() {
        return Err(Error::IndexOutOfRange {
            index: idx,
            dim: eigvecs.ncols(),
        });
    }
    Ok(())
}

/// The projector `P_jk(rho) = |psi_j><psi_j| rho |psi_k><psi_k|` built from
/// orthonormal eigenvector columns. Commutes with the Liouvillian of the
/// Hamiltonian the eigenvectors came from.
pub fn eigen_projector_superop(j: usize, k: usize, eigvecs: &Array2<C64>) -> Result<SuperOp> {
    check_eig_index(eigvecs, j)?;
    check_eig_index(eigvecs, k)?;
    let pj = rank_one(eigvecs, j, j);
    let pk = rank_one(eigvecs, k, k);
    promote_left(&pj).compose(&promote_right(&pk))
}

/// The transfer `T_jk(rho) = |psi_k><psi_j| rho |psi_j><psi_k|`, moving
/// weight from level `j` to level `k`. Always commutes with the
/// Liouvillian; commutes with `H_l` only on degenerate pairs.
pub fn transfer_superop(j: usize, k: usize, eigvecs: &Array2<C64>) -> Result<SuperOp> {
    check_eig_index(eigvecs, j)?;
    check_eig_index(eigvecs, k)?;
    let left = rank_one(eigvecs, k, j);
    let right = rank_one(eigvecs, j, k);
    promote_left(&left).compose(&promote_right(&right))
}

/// Frobenius norm of `[s1, s2]`, normalized by `|s1| |s2|`; zero inputs
/// give zero.
pub fn commute_residual(s1: &SuperOp, s2: &SuperOp) -> Result<f64> {
    check_same_hdim(s1, s2)?;
    let n1 = s1.fro_norm();
    let n2 = s2.fro_norm();
    if n1 == 0.0 || n2 == 0.0 {
        return Ok(0.0);
    }
    let comm = s1.mat.dot(&s2.mat) - s2.mat.dot(&s1.mat);
    Ok(comm.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / (n1 * n2))
}

/// Which tensor factor a partial trace removes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TracedFactor {
    First,
    Second,
}

/// Rectangular matrix of the partial trace, mapping vectorized operators on
/// the `n1*n2`-dim composite space to vectorized operators on the factor
/// that is kept.
pub fn partial_trace_superop(dims: (usize, usize), traced: TracedFactor) -> Array2<C64> {
    let (n1, n2) = dims;
    let big = n1 * n2;
    let keep = match traced {
        TracedFactor::First => n2,
        TracedFactor::Second => n1,
    };
    let mut m = Array2::zeros((keep * keep, big * big));
    let one = C64::new(1.0, 0.0);
    match traced {
        TracedFactor::Second => {
            for a in 0..n1 {
                for b in 0..n1 {
                    for s in 0..n2 {
                        let row_big = a * n2 + s;
                        let col_big = b * n2 + s;
                        m[(b * n1 + a, col_big * big + row_big)] = one;
                    }
                }
            }
        }
        TracedFactor::First => {
            for q in 0..n2 {
                for s in 0..n2 {
                    for a in 0..n1 {
                        let row_big = a * n2 + q;
                        let col_big = a * n2 + s;
                        m[(s * n2 + q, col_big * big + row_big)] = one;
                    }
                }
            }
        }
    }
    m
}

/// Partial trace applied directly to an operator on a bipartite space.
pub fn partial_trace(rho: &HilbertOp, dims: (usize, usize), traced: TracedFactor) -> Result<HilbertOp> {
    let (n1, n2) = dims;
    if rho.dim() != n1 * n2 {
        return Err(Error::DimensionMismatch(format!(
            "operator dim {} does not factor as {}x{}",
            rho.dim(),
            n1,
            n2
        )));
    }
    let m = partial_trace_superop(dims, traced);
    let keep = match traced {
        TracedFactor::First => n2,
        TracedFactor::Second => n1,
    };
    let v = m.dot(&vec_op(&rho.mat));
    HilbertOp::new(unvec(v.view(), keep))
}
