//! Structural symmetry detection for Liouvillians.
//!
//! The spectrum of a closed-system Liouvillian consists of all energy
//! differences, so distinct levels with equal gaps produce degeneracies the
//! Hamiltonian itself does not have. This module finds those coincidences,
//! block-decomposes a Liouvillian written in a Hermitian operator basis,
//! computes commutants, and checks the annihilation condition a projector
//! must satisfy against a dissipator for its block to stay decoupled.

use crate::error::{Error, Result};
use crate::linalg::jacobi_eig;
use crate::operators::{kron, HilbertOp};
use crate::superop::{commute_residual, unvec, SuperOp};
use crate::C64;
use ndarray::Array2;
use serde::Serialize;

/// One group of ordered index pairs sharing an eigenvalue difference.
#[derive(Clone, Debug, Serialize)]
pub struct DegeneracyClass {
    /// Mean difference of the class.
    pub difference: f64,
    /// Largest minus smallest difference inside the class.
    pub spread: f64,
    /// Ordered pairs `(j, k)`, zero-based, with `difference = w_k - w_j`.
    pub pairs: Vec<(usize, usize)>,
}

/// All eigenvalue differences grouped by coincidence at a tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct DifferenceDegeneracyReport {
    /// The input eigenvalues, sorted ascending.
    pub eigenvalues: Vec<f64>,
    pub classes: Vec<DegeneracyClass>,
    pub tol: f64,
}

impl DifferenceDegeneracyReport {
    /// Index of the class containing the ordered pair, if any.
    pub fn class_of(&self, pair: (usize, usize)) -> Option<usize> {
        self.classes.iter().position(|c| c.pairs.contains(&pair))
    }

    /// Classes with more than one pair whose difference is nonzero beyond
    /// the tolerance: the signature of a Liouville-only symmetry.
    pub fn nontrivial_classes(&self) -> Vec<&DegeneracyClass> {
        self.classes
            .iter()
            .filter(|c| c.pairs.len() > 1 && c.difference.abs() > self.tol)
            .collect()
    }
}

/// Groups all ordered eigenvalue differences `w_k - w_j` (`j != k`) into
/// classes by sorted-gap clustering: after sorting the differences, a new
/// class starts wherever consecutive values differ by more than `tol`.
///
/// Clustering on the sorted list (rather than pairwise comparison) keeps
/// the grouping deterministic and transitive. Indices refer to the sorted
/// eigenvalue list in the report.
pub fn difference_degeneracies(eigenvalues: &[f64], tol: f64) -> DifferenceDegeneracyReport {
    let mut eig: Vec<f64> = eigenvalues.to_vec();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = eig.len();
    let mut diffs: Vec<(f64, (usize, usize))> = Vec::with_capacity(n * n.saturating_sub(1));
    for j in 0..n {
        for k in 0..n {
            if j != k {
                diffs.push((eig[k] - eig[j], (j, k)));
            }
        }
    }
    diffs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let mut classes: Vec<DegeneracyClass> = Vec::new();
    let mut start = 0;
    for i in 0..diffs.len() {
        let boundary = i + 1 == diffs.len() || diffs[i + 1].0 - diffs[i].0 > tol;
        if boundary {
            let members = &diffs[start..=i];
            let lo = members.first().unwrap().0;
            let hi = members.last().unwrap().0;
            let mean = members.iter().map(|d| d.0).sum::<f64>() / members.len() as f64;
            classes.push(DegeneracyClass {
                difference: mean,
                spread: hi - lo,
                pairs: members.iter().map(|d| d.1).collect(),
            });
            start = i + 1;
        }
    }
    DifferenceDegeneracyReport {
        eigenvalues: eig,
        classes,
        tol,
    }
}

/// A matrix split into decoupled index blocks.
#[derive(Clone, Debug, Serialize)]
pub struct BlockDecomposition {
    pub basis_labels: Vec<String>,
    /// Partition of the index set; each block sorted, blocks ordered by
    /// their smallest index.
    pub blocks: Vec<Vec<usize>>,
    /// Concatenation of the blocks: position `p` in the permuted matrix
    /// holds original index `permutation[p]`.
    pub permutation: Vec<usize>,
    /// Largest entry magnitude coupling two different blocks.
    pub residual: f64,
    /// Threshold actually used for connectivity.
    pub tol: f64,
}

impl BlockDecomposition {
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    /// Labels of the block containing the given index.
    pub fn labels_of_block(&self, which: usize) -> Vec<&str> {
        self.blocks[which]
            .iter()
            .map(|&i| self.basis_labels[i].as_str())
            .collect()
    }

    /// Human-readable table mapping blocks to their labels.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{} block(s), off-block residual {:.3e} (threshold {:.3e})\n",
            self.blocks.len(),
            self.residual,
            self.tol
        ));
        for (i, block) in self.blocks.iter().enumerate() {
            let labels: Vec<&str> = block.iter().map(|&j| self.basis_labels[j].as_str()).collect();
            out.push_str(&format!(
                "block {} (size {}): {}\n",
                i,
                block.len(),
                labels.join(" ")
            ));
        }
        out
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn block_decompose_from_mags(
    mags: &Array2<f64>,
    labels: &[String],
    tol: Option<f64>,
) -> BlockDecomposition {
    let n = mags.nrows();
    assert_eq!(n, mags.ncols(), "block decomposition needs a square matrix");
    assert_eq!(n, labels.len(), "one label per row required");
    let max_entry = mags.iter().fold(0.0f64, |m, &x| m.max(x));
    let tol = tol.unwrap_or(1e-12 * max_entry);

    // Symmetrized connectivity: a block must be invariant in both
    // directions, so either coupling direction links two indices.
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if mags[(i, j)] > tol || mags[(j, i)] > tol {
                uf.union(i, j);
            }
        }
    }

    let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = uf.find(i);
        by_root[r].push(i);
    }
    let mut blocks: Vec<Vec<usize>> = by_root.into_iter().filter(|b| !b.is_empty()).collect();
    blocks.sort_by_key(|b| b[0]);
    let permutation: Vec<usize> = blocks.iter().flatten().copied().collect();

    let mut block_of = vec![0usize; n];
    for (bi, block) in blocks.iter().enumerate() {
        for &i in block {
            block_of[i] = bi;
        }
    }
    let mut residual = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if block_of[i] != block_of[j] {
                residual = residual.max(mags[(i, j)]);
            }
        }
    }

    BlockDecomposition {
        basis_labels: labels.to_vec(),
        blocks,
        permutation,
        residual,
        tol,
    }
}

/// Splits a complex matrix into decoupled blocks: indices `i, j` join the
/// same block when either `|m_ij|` or `|m_ji|` exceeds the threshold
/// (default `1e-12` times the largest entry magnitude).
pub fn block_decompose(m: &Array2<C64>, labels: &[String], tol: Option<f64>) -> BlockDecomposition {
    let mags = m.mapv(|z| z.norm());
    block_decompose_from_mags(&mags, labels, tol)
}

/// [`block_decompose`] for real matrices.
pub fn block_decompose_real(
    m: &Array2<f64>,
    labels: &[String],
    tol: Option<f64>,
) -> BlockDecomposition {
    let mags = m.mapv(f64::abs);
    block_decompose_from_mags(&mags, labels, tol)
}

/// Largest Hilbert dimension accepted by [`commutant_basis`]; the null
/// space problem has dimension `N^4`.
pub const COMMUTANT_DIM_CAP: usize = 8;

/// Orthonormal basis of the commutant `{S : [l, S] = 0}`.
///
/// The commutator map `S -> l S - S l` is itself a linear operator on
/// vectorized superoperators; its null space is read off from the zero
/// eigenspace of the Hermitian matrix `K^dag K`. Every returned element is
/// verified to commute with `l` within `tol` (relative residual).
pub fn commutant_basis(l: &SuperOp, tol: f64) -> Result<Vec<SuperOp>> {
    if l.hdim > COMMUTANT_DIM_CAP {
        return Err(Error::DimensionTooLarge {
            dim: l.hdim,
            cap: COMMUTANT_DIM_CAP,
        });
    }
    let n2 = l.hdim * l.hdim;
    let lw = HilbertOp::new(l.mat.clone())?;
    let lt = HilbertOp::new(l.mat.t().to_owned())?;
    let id = HilbertOp::identity(n2);
    // vec([l, S]) = (1 (x) l - l^T (x) 1) vec(S).
    let k_mat = kron(&id, &lw).minus(&kron(&lt, &id))?;
    let ktk = k_mat.dagger().matmul(&k_mat)?;
    let (vals, vecs) = jacobi_eig(&ktk.mat)?;
    let top = vals.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let cut = 1e-10 * top;

    let mut out = Vec::new();
    for (j, &w) in vals.iter().enumerate() {
        if w > cut {
            continue;
        }
        let col = vecs.column(j);
        let s = SuperOp::new(l.hdim, unvec(col, n2))?;
        if commute_residual(l, &s)? <= tol {
            out.push(s);
        }
    }
    Ok(out)
}

/// Result of the dissipator-annihilation test for a projector.
#[derive(Clone, Debug, Serialize)]
pub struct DflsReport {
    pub annihilated: bool,
    /// Frobenius norm of `p` composed after `l_d`.
    pub residual_left: f64,
    /// Frobenius norm of `l_d` composed after `p`.
    pub residual_right: f64,
}

/// Checks the two-sided annihilation `p l_d = l_d p = 0` that keeps the
/// block selected by `p` decoupled from dissipation. Requires `p`
/// idempotent; the weaker condition `p l_d = l_d p` proportional to `p`
/// does not suffice and is reported as not annihilated.
pub fn dfls_check(l_d: &SuperOp, p: &SuperOp, tol: f64) -> Result<DflsReport> {
    let idem = p.compose(p)?.minus(p)?.fro_norm();
    if idem > tol * p.fro_norm().max(1.0) {
        return Err(Error::PreconditionViolated(format!(
            "projector not idempotent: |p^2 - p| = {idem:.3e}"
        )));
    }
    let residual_left = p.compose(l_d)?.fro_norm();
    let residual_right = l_d.compose(p)?.fro_norm();
    Ok(DflsReport {
        annihilated: residual_left <= tol && residual_right <= tol,
        residual_left,
        residual_right,
    })
}
