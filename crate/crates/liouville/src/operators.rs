//! Dense operators on finite Hilbert spaces and Pauli tensor bases.

use crate::error::{Error, Result};
use crate::C64;
use ndarray::Array2;

/// Absolute tolerance for Hermiticity checks on O(1)-normalized operators.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// A dense operator on an `N`-dimensional Hilbert space.
#[derive(Clone, Debug)]
pub struct HilbertOp {
    pub mat: Array2<C64>,
    pub label: Option<String>,
}

impl HilbertOp {
    /// Wraps a square matrix, rejecting non-square or non-finite input.
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite operator entry".into()));
        }
        Ok(Self { mat, label: None })
    }

    pub fn labeled(mat: Array2<C64>, label: impl Into<String>) -> Result<Self> {
        let mut op = Self::new(mat)?;
        op.label = Some(label.into());
        Ok(op)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: Array2::zeros((dim, dim)),
            label: None,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: Array2::eye(dim),
            label: None,
        }
    }

    /// Builds an operator from real entries.
    pub fn from_real(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut mat = Array2::zeros((n, n));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has length {} in a {n}-row matrix",
                    row.len()
                )));
            }
            for (j, &x) in row.iter().enumerate() {
                mat[(i, j)] = C64::new(x, 0.0);
            }
        }
        Self::new(mat)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn dagger(&self) -> Self {
        let mut mat = self.mat.t().to_owned();
        mat.mapv_inplace(|z| z.conj());
        Self { mat, label: None }
    }

    /// Largest entrywise deviation from Hermiticity, `max |A_{jk} - conj(A_{kj})|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for j in 0..n {
            for k in j..n {
                dev = dev.max((self.mat[(j, k)] - self.mat[(k, j)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// Errors unless the operator is Hermitian within `HERMITICITY_TOL`
    /// scaled by the entry magnitude.
    pub fn require_hermitian(&self) -> Result<()> {
        let scale = self.max_abs().max(1.0);
        let tol = HERMITICITY_TOL * scale;
        let dev = self.hermiticity_deviation();
        if dev > tol {
            return Err(Error::NotHermitian {
                deviation: dev,
                tol,
            });
        }
        Ok(())
    }

    pub fn trace(&self) -> C64 {
        self.mat.diag().sum()
    }

    pub fn fro_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            mat: self.mat.mapv(|z| z * c),
            label: None,
        }
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        check_same_dim(self, other)?;
        Self::new(&self.mat + &other.mat)
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        check_same_dim(self, other)?;
        Self::new(&self.mat - &other.mat)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_same_dim(self, other)?;
        Self::new(self.mat.dot(&other.mat))
    }
}

fn check_same_dim(a: &HilbertOp, b: &HilbertOp) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operator dims {} and {} differ",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Single-qubit Pauli axis; `I` prints as `0` to match the coefficient
/// labels used by the two-spin model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PauliAxis {
    I,
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 4] = [PauliAxis::I, PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    pub fn as_char(self) -> char {
        match self {
            PauliAxis::I => '0',
            PauliAxis::X => 'x',
            PauliAxis::Y => 'y',
            PauliAxis::Z => 'z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '0' | 'i' | 'I' => Some(PauliAxis::I),
            'x' | 'X' => Some(PauliAxis::X),
            'y' | 'Y' => Some(PauliAxis::Y),
            'z' | 'Z' => Some(PauliAxis::Z),
            _ => None,
        }
    }

    fn flat_index(self) -> usize {
        match self {
            PauliAxis::I => 0,
            PauliAxis::X => 1,
            PauliAxis::Y => 2,
            PauliAxis::Z => 3,
        }
    }

    /// Parity under conjugation by `sigma^z`: `+1` for `1, sigma^z`,
    /// `-1` for `sigma^x, sigma^y`.
    pub fn z_parity(self) -> i32 {
        match self {
            PauliAxis::I | PauliAxis::Z => 1,
            PauliAxis::X | PauliAxis::Y => -1,
        }
    }
}

/// The 2x2 Pauli matrix along `axis` (identity for `I`).
pub fn pauli(axis: PauliAxis) -> HilbertOp {
    let i = C64::new(0.0, 1.0);
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let mat = match axis {
        PauliAxis::I => ndarray::array![[l, o], [o, l]],
        PauliAxis::X => ndarray::array![[o, l], [l, o]],
        PauliAxis::Y => ndarray::array![[o, -i], [i, o]],
        PauliAxis::Z => ndarray::array![[l, o], [o, -l]],
    };
    HilbertOp {
        mat,
        label: Some(format!("sigma^{}", axis.as_char())),
    }
}

/// Tensor product with the left factor as the major index:
/// `(a (x) b)[p*Nb+q, r*Nb+s] = a[p,r] * b[q,s]`.
pub fn kron(a: &HilbertOp, b: &HilbertOp) -> HilbertOp {
    let (na, nb) = (a.dim(), b.dim());
    let mut mat = Array2::zeros((na * nb, na * nb));
    for p in 0..na {
        for r in 0..na {
            let apr = a.mat[(p, r)];
            if apr == C64::new(0.0, 0.0) {
                continue;
            }
            for q in 0..nb {
                for s in 0..nb {
                    mat[(p * nb + q, r * nb + s)] = apr * b.mat[(q, s)];
                }
            }
        }
    }
    HilbertOp { mat, label: None }
}

pub fn commutator(a: &HilbertOp, b: &HilbertOp) -> Result<HilbertOp> {
    check_same_dim(a, b)?;
    HilbertOp::new(a.mat.dot(&b.mat) - b.mat.dot(&a.mat))
}

pub fn anticommutator(a: &HilbertOp, b: &HilbertOp) -> Result<HilbertOp> {
    check_same_dim(a, b)?;
    HilbertOp::new(a.mat.dot(&b.mat) + b.mat.dot(&a.mat))
}

/// Trace inner product `<a,b> = Tr{a^dag b}`, antilinear in `a`.
pub fn trace_inner_product(a: &HilbertOp, b: &HilbertOp) -> Result<C64> {
    check_same_dim(a, b)?;
    let mut acc = C64::new(0.0, 0.0);
    for (x, y) in a.mat.iter().zip(b.mat.iter()) {
        acc += x.conj() * y;
    }
    Ok(acc)
}

/// The `4^n` Pauli strings on `n` qubits, ordered with the first qubit as
/// the major index; orthogonal with `<B_a, B_b> = 2^n delta_ab`.
#[derive(Clone, Debug)]
pub struct PauliBasis {
    pub n_qubits: usize,
    pub elements: Vec<HilbertOp>,
    labels: Vec<String>,
}

impl PauliBasis {
    pub fn new(n_qubits: usize) -> Self {
        assert!(n_qubits >= 1, "need at least one qubit");
        let mut elements: Vec<HilbertOp> = PauliAxis::ALL.iter().map(|&ax| pauli(ax)).collect();
        let mut labels: Vec<String> = PauliAxis::ALL
            .iter()
            .map(|ax| ax.as_char().to_string())
            .collect();
        for _ in 1..n_qubits {
            let mut next_el = Vec::with_capacity(elements.len() * 4);
            let mut next_lab = Vec::with_capacity(labels.len() * 4);
            for (el, lab) in elements.iter().zip(&labels) {
                for &ax in &PauliAxis::ALL {
                    next_el.push(kron(el, &pauli(ax)));
                    next_lab.push(format!("{lab}{}", ax.as_char()));
                }
            }
            elements = next_el;
            labels = next_lab;
        }
        for (el, lab) in elements.iter_mut().zip(&labels) {
            el.label = Some(lab.clone());
        }
        Self {
            n_qubits,
            elements,
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn hilbert_dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Flat index of the string with the given per-qubit axes.
    pub fn index(&self, axes: &[PauliAxis]) -> usize {
        assert_eq!(axes.len(), self.n_qubits);
        axes.iter().fold(0, |acc, ax| acc * 4 + ax.flat_index())
    }

    pub fn element(&self, axes: &[PauliAxis]) -> &HilbertOp {
        &self.elements[self.index(axes)]
    }

    pub fn index_of_label(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Expansion coefficients `c_a = <B_a, op> / 2^n`, so that
    /// `op = sum_a c_a B_a`; real for Hermitian `op`.
    pub fn coefficients(&self, op: &HilbertOp) -> Result<Vec<C64>> {
        let norm = C64::new(self.hilbert_dim() as f64, 0.0);
        self.elements
            .iter()
            .map(|b| Ok(trace_inner_product(b, op)? / norm))
            .collect()
    }

    pub fn reconstruct(&self, coeffs: &[C64]) -> Result<HilbertOp> {
        if coeffs.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a {}-element basis",
                coeffs.len(),
                self.len()
            )));
        }
        let dim = self.hilbert_dim();
        let mut mat = Array2::zeros((dim, dim));
        for (c, b) in coeffs.iter().zip(&self.elements) {
            mat = mat + b.mat.mapv(|z| z * c);
        }
        HilbertOp::new(mat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_hermitian, random_op};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kron_matches_index_loop_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_op(&mut rng, 3);
        let b = random_op(&mut rng, 2);
        let k = kron(&a, &b);
        for p in 0..3 {
            for q in 0..2 {
                for r in 0..3 {
                    for s in 0..2 {
                        let expected = a.mat[(p, r)] * b.mat[(q, s)];
                        let got = k.mat[(p * 2 + q, r * 2 + s)];
                        assert!((expected - got).norm() == 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn kron_identity_cases() {
        let id2 = HilbertOp::identity(2);
        let prod = kron(&id2, &id2);
        assert_eq!(prod.dim(), 4);
        assert!((&prod.mat - &Array2::<C64>::eye(4)).iter().all(|z| z.norm() == 0.0));

        let zz = kron(&pauli(PauliAxis::Z), &pauli(PauliAxis::Z));
        let expected = [1.0, -1.0, -1.0, 1.0];
        for (i, &e) in expected.iter().enumerate() {
            assert_eq!(zz.mat[(i, i)], C64::new(e, 0.0));
        }
    }

    #[test]
    fn pauli_commutator_algebra() {
        let c = commutator(&pauli(PauliAxis::X), &pauli(PauliAxis::Y)).unwrap();
        let expected = pauli(PauliAxis::Z).scaled(C64::new(0.0, 2.0));
        assert!(c.minus(&expected).unwrap().fro_norm() < 1e-15);

        let h = pauli(PauliAxis::Z);
        assert!(commutator(&h, &h).unwrap().fro_norm() == 0.0);
    }

    #[test]
    fn trace_inner_product_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(
            trace_inner_product(&pauli(PauliAxis::X), &pauli(PauliAxis::X)).unwrap(),
            C64::new(2.0, 0.0)
        );
        assert_eq!(
            trace_inner_product(&pauli(PauliAxis::X), &pauli(PauliAxis::Y)).unwrap(),
            C64::new(0.0, 0.0)
        );
        for _ in 0..20 {
            let a = random_op(&mut rng, 4);
            let b = random_op(&mut rng, 4);
            let ab = trace_inner_product(&a, &b).unwrap();
            let ba = trace_inner_product(&b, &a).unwrap();
            assert!((ab - ba.conj()).norm() < 1e-12);
            let aa = trace_inner_product(&a, &a).unwrap();
            assert!(aa.im.abs() < 1e-12 && aa.re > 0.0);
        }
        let z = HilbertOp::zeros(4);
        assert_eq!(trace_inner_product(&z, &z).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn density_matrix_normalization_against_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_op(&mut rng, 4);
        let g = a.matmul(&a.dagger()).unwrap();
        let rho = g.scaled(C64::new(1.0, 0.0) / g.trace());
        let ip = trace_inner_product(&rho, &HilbertOp::identity(4)).unwrap();
        assert!((ip - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn pauli_basis_orthogonality_and_span() {
        let basis = PauliBasis::new(2);
        assert_eq!(basis.len(), 16);
        for (i, a) in basis.elements.iter().enumerate() {
            assert!(a.is_hermitian(0.0));
            for (j, b) in basis.elements.iter().enumerate() {
                let ip = trace_inner_product(a, b).unwrap();
                let expected = if i == j { 4.0 } else { 0.0 };
                assert!((ip - C64::new(expected, 0.0)).norm() < 1e-13);
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_hermitian(&mut rng, 4);
        let coeffs = basis.coefficients(&h).unwrap();
        for c in &coeffs {
            assert!(c.im.abs() < 1e-13);
        }
        let back = basis.reconstruct(&coeffs).unwrap();
        assert!(back.minus(&h).unwrap().fro_norm() < 1e-12);
    }

    #[test]
    fn pauli_basis_labels_and_lookup() {
        let basis = PauliBasis::new(2);
        assert_eq!(basis.labels()[0], "00");
        let idx = basis.index(&[PauliAxis::Y, PauliAxis::I]);
        assert_eq!(basis.labels()[idx], "y0");
        assert_eq!(basis.index_of_label("zx"), Some(4 * 3 + 1));
    }

    #[test]
    fn rejects_malformed_input() {
        let mat = Array2::<C64>::zeros((2, 3));
        assert!(HilbertOp::new(mat).is_err());
        let mut bad = Array2::<C64>::zeros((2, 2));
        bad[(0, 0)] = C64::new(f64::NAN, 0.0);
        assert!(HilbertOp::new(bad).is_err());
        let a = HilbertOp::zeros(2);
        let b = HilbertOp::zeros(3);
        assert!(commutator(&a, &b).is_err());
    }
}
