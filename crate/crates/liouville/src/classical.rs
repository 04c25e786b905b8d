//! Polynomial phase-space dynamics for one classical degree of freedom.
//!
//! Observables are polynomials in the canonical pair `(p, q)`, stored on a
//! graded monomial basis (degree-major, then by increasing power of `p`).
//! Differential operators become matrices on that basis, so symmetry
//! questions reduce to matrix commutators exactly as in the quantum
//! modules. Algebraic identities are checked in exact rational arithmetic;
//! flow integration uses floats. Both share the same indexing through the
//! [`Coefficient`] abstraction.
//!
//! The bracket orientation is `{f, g} = df/dq dg/dp - df/dp dg/dq`, which
//! for `h = (p^2 + q^2)/2` makes the Liouvillian `rho -> {h, rho}` act as
//! `q d/dp - p d/dq`, i.e. `L(p) = q` and `L(q) = -p`. Physical
//! trajectories run against the advection field read off the operator
//! (`dp/dt = -L(p)` as a function), which reproduces Hamilton's equations
//! `dp/dt = -q`, `dq/dt = p` for the oscillator; the flow tests pin this
//! convention.

use crate::error::{Error, Result};
use crate::C64;
use ndarray::Array2;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};
use serde::Serialize;
use std::ops::{Div, Neg, Sub};

/// Scalar types usable as polynomial coefficients: `f64` for numerics and
/// `BigRational` for exact identity checks.
pub trait Coefficient:
    Clone
    + PartialEq
    + Zero
    + One
    + Neg<Output = Self>
    + Sub<Output = Self>
    + Div<Output = Self>
    + FromPrimitive
    + ToPrimitive
{
}

impl<T> Coefficient for T where
    T: Clone
        + PartialEq
        + Zero
        + One
        + Neg<Output = Self>
        + Sub<Output = Self>
        + Div<Output = Self>
        + FromPrimitive
        + ToPrimitive
{
}

/// Number of monomials `p^a q^b` with `a + b <= max_degree`.
pub fn monomial_count(max_degree: usize) -> usize {
    (max_degree + 1) * (max_degree + 2) / 2
}

/// Flat index of `p^a q^b`: degree-major, then by increasing `a`.
pub fn monomial_index(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + a
}

/// Inverse of [`monomial_index`].
pub fn monomial_exponents(index: usize) -> (usize, usize) {
    let mut d = 0;
    while (d + 1) * (d + 2) / 2 <= index {
        d += 1;
    }
    let a = index - d * (d + 1) / 2;
    (a, d - a)
}

fn index_degree(index: usize) -> usize {
    let (a, b) = monomial_exponents(index);
    a + b
}

fn pow_coeff<T: Coefficient>(x: &T, n: usize) -> T {
    let mut out = T::one();
    for _ in 0..n {
        out = out * x.clone();
    }
    out
}

/// A polynomial in `(p, q)` of degree at most `max_degree`, with dense
/// coefficients on the graded monomial basis. Two polynomials compare
/// equal only when they live in the same space and agree coefficientwise.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyFunction<T> {
    max_degree: usize,
    coeffs: Vec<T>,
}

impl<T: Coefficient> PolyFunction<T> {
    /// The zero polynomial in the space of degree `max_degree`.
    pub fn new(max_degree: usize) -> Self {
        Self {
            max_degree,
            coeffs: vec![T::zero(); monomial_count(max_degree)],
        }
    }

    pub fn constant(max_degree: usize, value: T) -> Self {
        let mut f = Self::new(max_degree);
        f.coeffs[0] = value;
        f
    }

    /// The single monomial `coeff * p^a q^b`.
    pub fn monomial(max_degree: usize, a: usize, b: usize, coeff: T) -> Result<Self> {
        if a + b > max_degree {
            return Err(Error::IndexOutOfRange {
                index: a + b,
                dim: max_degree + 1,
            });
        }
        let mut f = Self::new(max_degree);
        f.coeffs[monomial_index(a, b)] = coeff;
        Ok(f)
    }

    /// The coordinate function `p`.
    pub fn p(max_degree: usize) -> Result<Self> {
        Self::monomial(max_degree, 1, 0, T::one())
    }

    /// The coordinate function `q`.
    pub fn q(max_degree: usize) -> Result<Self> {
        Self::monomial(max_degree, 0, 1, T::one())
    }

    /// The oscillator energy `(p^2 + q^2)/2`.
    pub fn harmonic_hamiltonian(max_degree: usize) -> Result<Self> {
        let half = T::one() / (T::one() + T::one());
        let p2 = Self::monomial(max_degree, 2, 0, half.clone())?;
        let q2 = Self::monomial(max_degree, 0, 2, half)?;
        p2.plus(&q2)
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Coefficient of `p^a q^b`; zero beyond the space's degree.
    pub fn coeff(&self, a: usize, b: usize) -> T {
        if a + b > self.max_degree {
            T::zero()
        } else {
            self.coeffs[monomial_index(a, b)].clone()
        }
    }

    pub fn set_coeff(&mut self, a: usize, b: usize, value: T) -> Result<()> {
        if a + b > self.max_degree {
            return Err(Error::IndexOutOfRange {
                index: a + b,
                dim: self.max_degree + 1,
            });
        }
        self.coeffs[monomial_index(a, b)] = value;
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Degree of the highest nonvanishing monomial; `None` for zero.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, _)| index_degree(i))
            .max()
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.max_degree != other.max_degree {
            return Err(Error::DimensionMismatch(format!(
                "polynomial spaces of degree {} and {}",
                self.max_degree, other.max_degree
            )));
        }
        Ok(Self {
            max_degree: self.max_degree,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| f(a.clone(), b.clone()))
                .collect(),
        })
    }

    pub fn neg(&self) -> Self {
        self.map(|c| -c)
    }

    pub fn scaled(&self, factor: &T) -> Self {
        self.map(|c| c * factor.clone())
    }

    fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            max_degree: self.max_degree,
            coeffs: self.coeffs.iter().cloned().map(f).collect(),
        }
    }

    /// The same polynomial in the space of degree `new_max`; fails with a
    /// degree overflow if a nonzero coefficient would be dropped.
    pub fn embedded(&self, new_max: usize) -> Result<Self> {
        if let Some(d) = self.degree() {
            if d > new_max {
                return Err(Error::DegreeOverflow {
                    needed: d,
                    max: new_max,
                });
            }
        }
        Ok(self.truncated(new_max).0)
    }

    /// The polynomial restricted to degree `new_max`, plus a flag telling
    /// whether nonzero coefficients were dropped.
    pub fn truncated(&self, new_max: usize) -> (Self, bool) {
        let mut out = Self::new(new_max);
        let mut dropped = false;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (a, b) = monomial_exponents(i);
            if a + b <= new_max {
                out.coeffs[monomial_index(a, b)] = c.clone();
            } else {
                dropped = true;
            }
        }
        (out, dropped)
    }

    /// Exact product in the enlarged space of degree `deg(self) + deg(other)`.
    fn mul_exact(&self, other: &Self) -> Self {
        let d = self.degree().unwrap_or(0) + other.degree().unwrap_or(0);
        let mut out = Self::new(d);
        for (i, ci) in self.coeffs.iter().enumerate() {
            if ci.is_zero() {
                continue;
            }
            let (a1, b1) = monomial_exponents(i);
            for (j, cj) in other.coeffs.iter().enumerate() {
                if cj.is_zero() {
                    continue;
                }
                let (a2, b2) = monomial_exponents(j);
                let k = monomial_index(a1 + a2, b1 + b2);
                out.coeffs[k] = out.coeffs[k].clone() + ci.clone() * cj.clone();
            }
        }
        out
    }

    /// Product within the common space; degree overflow if the result does
    /// not fit (after exact cancellation).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.max_degree != other.max_degree {
            return Err(Error::DimensionMismatch(format!(
                "polynomial spaces of degree {} and {}",
                self.max_degree, other.max_degree
            )));
        }
        self.mul_exact(other).embedded(self.max_degree)
    }

    pub fn partial_p(&self) -> Self {
        let mut out = Self::new(self.max_degree);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (a, b) = monomial_exponents(i);
            if a > 0 {
                out.coeffs[monomial_index(a - 1, b)] =
                    c.clone() * T::from_usize(a).expect("small integer");
            }
        }
        out
    }

    pub fn partial_q(&self) -> Self {
        let mut out = Self::new(self.max_degree);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (a, b) = monomial_exponents(i);
            if b > 0 {
                out.coeffs[monomial_index(a, b - 1)] =
                    c.clone() * T::from_usize(b).expect("small integer");
            }
        }
        out
    }

    /// Pullback along `(p, q) -> (alpha p, alpha q)`: each monomial picks
    /// up `alpha^(a+b)`.
    pub fn dilated(&self, alpha: &T) -> Self {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            if !c.is_zero() {
                *c = c.clone() * pow_coeff(alpha, index_degree(i));
            }
        }
        out
    }

    pub fn eval(&self, p: &T, q: &T) -> T {
        let mut acc = T::zero();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (a, b) = monomial_exponents(i);
            acc = acc + c.clone() * pow_coeff(p, a) * pow_coeff(q, b);
        }
        acc
    }
}

/// The bracket `{f, g} = df/dq dg/dp - df/dp dg/dq`, computed exactly and
/// returned in the operands' space. Fails with a degree overflow when the
/// result (after cancellation) does not fit.
pub fn poisson_bracket<T: Coefficient>(
    f: &PolyFunction<T>,
    g: &PolyFunction<T>,
) -> Result<PolyFunction<T>> {
    if f.max_degree != g.max_degree {
        return Err(Error::DimensionMismatch(format!(
            "polynomial spaces of degree {} and {}",
            f.max_degree, g.max_degree
        )));
    }
    bracket_exact(f, g).embedded(f.max_degree)
}

/// The bracket in an enlarged space that always fits it.
fn bracket_exact<T: Coefficient>(f: &PolyFunction<T>, g: &PolyFunction<T>) -> PolyFunction<T> {
    let term1 = f.partial_q().mul_exact(&g.partial_p());
    let term2 = f.partial_p().mul_exact(&g.partial_q());
    let d = term1.max_degree.max(term2.max_degree);
    term1
        .truncated(d)
        .0
        .minus(&term2.truncated(d).0)
        .expect("common enlarged space")
}

/// A linear operator on the polynomial space of one degree of freedom.
///
/// `matrix[(row, col)]` is the coefficient of the row monomial in the
/// image of the column monomial. `degree_shift` is `Some(s)` when every
/// nonzero entry connects monomials whose degrees differ by exactly `s`
/// (the zero matrix counts as shift 0); operators mixing shifts carry
/// `None`. `truncation_flag` records that building the operator dropped
/// products beyond the space's degree.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceOp<T> {
    pub matrix: Array2<T>,
    pub degree_shift: Option<i32>,
    pub truncation_flag: bool,
    max_degree: usize,
}

fn detect_shift<T: Coefficient>(matrix: &Array2<T>) -> Option<i32> {
    let mut shift: Option<i32> = None;
    for ((r, c), v) in matrix.indexed_iter() {
        if v.is_zero() {
            continue;
        }
        let s = index_degree(r) as i32 - index_degree(c) as i32;
        match shift {
            None => shift = Some(s),
            Some(t) if t != s => return None,
            _ => {}
        }
    }
    shift.or(Some(0))
}

impl<T: Coefficient> PhaseSpaceOp<T> {
    /// Wraps a matrix, deriving the degree shift from its sparsity.
    pub fn from_matrix(
        max_degree: usize,
        matrix: Array2<T>,
        truncation_flag: bool,
    ) -> Result<Self> {
        let n = monomial_count(max_degree);
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{} but the degree-{} space has {} monomials",
                matrix.nrows(),
                matrix.ncols(),
                max_degree,
                n
            )));
        }
        let degree_shift = detect_shift(&matrix);
        Ok(Self {
            matrix,
            degree_shift,
            truncation_flag,
            max_degree,
        })
    }

    pub fn zeros(max_degree: usize) -> Self {
        let n = monomial_count(max_degree);
        Self {
            matrix: Array2::from_elem((n, n), T::zero()),
            degree_shift: Some(0),
            truncation_flag: false,
            max_degree,
        }
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn apply(&self, f: &PolyFunction<T>) -> Result<PolyFunction<T>> {
        if f.max_degree != self.max_degree {
            return Err(Error::DimensionMismatch(format!(
                "operator on degree {} applied to a degree-{} polynomial",
                self.max_degree, f.max_degree
            )));
        }
        let n = self.matrix.nrows();
        let mut out = PolyFunction::new(self.max_degree);
        for r in 0..n {
            let mut acc = T::zero();
            for c in 0..n {
                if !self.matrix[(r, c)].is_zero() && !f.coeffs[c].is_zero() {
                    acc = acc + self.matrix[(r, c)].clone() * f.coeffs[c].clone();
                }
            }
            out.coeffs[r] = acc;
        }
        Ok(out)
    }

    fn require_same_space(&self, other: &Self) -> Result<()> {
        if self.max_degree != other.max_degree {
            return Err(Error::DimensionMismatch(format!(
                "operators on degrees {} and {}",
                self.max_degree, other.max_degree
            )));
        }
        Ok(())
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.require_same_space(other)?;
        let mut matrix = self.matrix.clone();
        for (idx, v) in other.matrix.indexed_iter() {
            if !v.is_zero() {
                matrix[idx] = matrix[idx].clone() + v.clone();
            }
        }
        Ok(Self {
            degree_shift: detect_shift(&matrix),
            truncation_flag: self.truncation_flag || other.truncation_flag,
            matrix,
            max_degree: self.max_degree,
        })
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        self.plus(&other.scaled(&(-T::one())))
    }

    pub fn scaled(&self, factor: &T) -> Self {
        Self {
            matrix: self.matrix.mapv(|v| v * factor.clone()),
            degree_shift: self.degree_shift,
            truncation_flag: self.truncation_flag,
            max_degree: self.max_degree,
        }
    }

    /// `self` after `other` (matrix product).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.require_same_space(other)?;
        let n = self.matrix.nrows();
        let mut matrix = Array2::from_elem((n, n), T::zero());
        for i in 0..n {
            for k in 0..n {
                let aik = self.matrix[(i, k)].clone();
                if aik.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let bkj = &other.matrix[(k, j)];
                    if !bkj.is_zero() {
                        matrix[(i, j)] = matrix[(i, j)].clone() + aik.clone() * bkj.clone();
                    }
                }
            }
        }
        Ok(Self {
            degree_shift: detect_shift(&matrix),
            truncation_flag: self.truncation_flag || other.truncation_flag,
            matrix,
            max_degree: self.max_degree,
        })
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.compose(other)?.minus(&other.compose(self)?)
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(Zero::is_zero)
    }

    /// Largest entry magnitude, for residual reporting.
    pub fn max_abs(&self) -> f64 {
        self.matrix
            .iter()
            .map(|v| v.to_f64().map_or(f64::INFINITY, f64::abs))
            .fold(0.0, f64::max)
    }
}

fn diagonal_op<T: Coefficient>(
    max_degree: usize,
    entry: impl Fn(usize, usize) -> T,
) -> PhaseSpaceOp<T> {
    let n = monomial_count(max_degree);
    let mut matrix = Array2::from_elem((n, n), T::zero());
    for i in 0..n {
        let (a, b) = monomial_exponents(i);
        matrix[(i, i)] = entry(a, b);
    }
    PhaseSpaceOp {
        degree_shift: Some(0),
        truncation_flag: false,
        matrix,
        max_degree,
    }
}

fn monomial_image_op<T: Coefficient>(
    max_degree: usize,
    image: impl Fn(usize, usize) -> PolyFunction<T>,
) -> PhaseSpaceOp<T> {
    let n = monomial_count(max_degree);
    let mut matrix = Array2::from_elem((n, n), T::zero());
    let mut truncation_flag = false;
    for col in 0..n {
        let (a, b) = monomial_exponents(col);
        let (img, dropped) = image(a, b).truncated(max_degree);
        truncation_flag |= dropped;
        for (row, v) in img.coeffs.into_iter().enumerate() {
            if !v.is_zero() {
                matrix[(row, col)] = v;
            }
        }
    }
    PhaseSpaceOp {
        degree_shift: detect_shift(&matrix),
        truncation_flag,
        matrix,
        max_degree,
    }
}

/// The matrix of `d/dp` (degree shift -1).
pub fn partial_p_op<T: Coefficient>(max_degree: usize) -> PhaseSpaceOp<T> {
    monomial_image_op(max_degree, |a, b| {
        PolyFunction::monomial(max_degree, a, b, T::one())
            .expect("basis monomial")
            .partial_p()
    })
}

/// The matrix of `d/dq` (degree shift -1).
pub fn partial_q_op<T: Coefficient>(max_degree: usize) -> PhaseSpaceOp<T> {
    monomial_image_op(max_degree, |a, b| {
        PolyFunction::monomial(max_degree, a, b, T::one())
            .expect("basis monomial")
            .partial_q()
    })
}

/// Multiplication by a fixed polynomial. Products beyond the space are
/// dropped and flagged; the shift is uniform only for homogeneous
/// multipliers.
pub fn multiplication_op<T: Coefficient>(
    h: &PolyFunction<T>,
    max_degree: usize,
) -> PhaseSpaceOp<T> {
    monomial_image_op(max_degree, |a, b| {
        let m = PolyFunction::monomial(max_degree, a, b, T::one()).expect("basis monomial");
        h.mul_exact(&m)
    })
}

/// The Liouvillian of `h`: the matrix of `rho -> {h, rho}` on the
/// degree-`max_degree` space. For quadratic `h` the degree is preserved;
/// higher-degree Hamiltonians lose the products beyond the space and set
/// the truncation flag.
pub fn classical_liouvillian<T: Coefficient>(
    h: &PolyFunction<T>,
    max_degree: usize,
) -> PhaseSpaceOp<T> {
    let work = max_degree + h.degree().unwrap_or(0);
    let h_work = h.embedded(work).expect("enlarging embedding");
    monomial_image_op(max_degree, |a, b| {
        let m = PolyFunction::monomial(work, a, b, T::one()).expect("basis monomial");
        bracket_exact(&h_work, &m)
    })
}

/// The grading operator `p d/dp + q d/dq`, multiplying each monomial by
/// its total degree.
pub fn scaling_generator<T: Coefficient>(max_degree: usize) -> PhaseSpaceOp<T> {
    diagonal_op(max_degree, |a, b| {
        T::from_usize(a + b).expect("small integer")
    })
}

/// The damped-oscillator generator
/// `q d/dp - p d/dq + gamma p d/dp + mu q d/dq`; degree-preserving for
/// every `(gamma, mu)`.
pub fn damped_liouvillian<T: Coefficient>(gamma: T, mu: T, max_degree: usize) -> PhaseSpaceOp<T> {
    let h = PolyFunction::<T>::harmonic_hamiltonian(2).expect("quadratic fits degree 2");
    let rotation = classical_liouvillian(&h, max_degree);
    let p_weight = diagonal_op(max_degree, |a, _| {
        T::from_usize(a).expect("small integer") * gamma.clone()
    });
    let q_weight = diagonal_op(max_degree, |_, b| {
        T::from_usize(b).expect("small integer") * mu.clone()
    });
    rotation
        .plus(&p_weight)
        .and_then(|s| s.plus(&q_weight))
        .expect("same space")
}

/// The pullback of the dilation `(p, q) -> (alpha p, alpha q)`: diagonal
/// with entry `alpha^(a+b)` per monomial.
pub fn scaling_pullback<T: Coefficient>(alpha: &T, max_degree: usize) -> PhaseSpaceOp<T> {
    diagonal_op(max_degree, |a, b| pow_coeff(alpha, a + b))
}

/// Reads the advection field off a first-order operator
/// `v_p d/dp + v_q d/dq` by applying it to the coordinate functions:
/// `v_p = X(p)`, `v_q = X(q)`. Meaningful only for derivation operators;
/// callers applying it to anything else get the same formal answer.
pub fn advection_field(op: &PhaseSpaceOp<f64>) -> Result<(PolyFunction<f64>, PolyFunction<f64>)> {
    if op.max_degree() < 1 {
        return Err(Error::PreconditionViolated(
            "advection field needs the degree-1 monomials".into(),
        ));
    }
    let v_p = op.apply(&PolyFunction::p(op.max_degree())?)?;
    let v_q = op.apply(&PolyFunction::q(op.max_degree())?)?;
    Ok((v_p, v_q))
}

/// The two complex frequencies of the damped oscillator. Computed from
/// the closed form `+-sqrt(1 - (gamma-mu)^2/4) - (i/2)(gamma+mu)` and
/// cross-checked at runtime against the eigenvalues of the 2x2 linear
/// equations of motion derived from the generator's flow field; a
/// disagreement is reported as a failed self-check.
pub fn damped_eigenfrequencies(gamma: f64, mu: f64) -> Result<[C64; 2]> {
    if !gamma.is_finite() || !mu.is_finite() {
        return Err(Error::PreconditionViolated(format!(
            "damping rates must be finite, got ({gamma}, {mu})"
        )));
    }
    let root = C64::new(1.0 - (gamma - mu).powi(2) / 4.0, 0.0).sqrt();
    let base = C64::new(0.0, -(gamma + mu) / 2.0);
    let closed = [root + base, -root + base];

    // Independent route: physical trajectories obey dx/dt = -v with v the
    // advection field of the generator; frequencies are i times the flow
    // matrix eigenvalues.
    let op = damped_liouvillian(gamma, mu, 1);
    let (v_p, v_q) = advection_field(&op)?;
    let f_pp = -v_p.coeff(1, 0);
    let f_pq = -v_p.coeff(0, 1);
    let f_qp = -v_q.coeff(1, 0);
    let f_qq = -v_q.coeff(0, 1);
    let tr = C64::new(f_pp + f_qq, 0.0);
    let det = C64::new(f_pp * f_qq - f_pq * f_qp, 0.0);
    let disc = (tr * tr - 4.0 * det).sqrt();
    let half = C64::new(0.5, 0.0);
    let lam = [(tr + disc) * half, (tr - disc) * half];
    let i = C64::new(0.0, 1.0);
    let from_flow = [i * lam[0], i * lam[1]];

    let scale = 1.0 + gamma.abs() + mu.abs();
    let matches = |w: C64| from_flow.iter().any(|&v| (v - w).norm() <= 1e-12 * scale);
    if !(matches(closed[0]) && matches(closed[1])) {
        return Err(Error::SelfCheckFailed(format!(
            "closed-form frequencies {:?} disagree with the flow matrix {:?}",
            closed, from_flow
        )));
    }
    Ok(closed)
}

const FLOW_TOL: f64 = 1e-12;

fn rk4_step(
    field: &impl Fn(f64, f64) -> (f64, f64),
    y: (f64, f64),
    h: f64,
) -> (f64, f64) {
    let k1 = field(y.0, y.1);
    let k2 = field(y.0 + 0.5 * h * k1.0, y.1 + 0.5 * h * k1.1);
    let k3 = field(y.0 + 0.5 * h * k2.0, y.1 + 0.5 * h * k2.1);
    let k4 = field(y.0 + h * k3.0, y.1 + h * k3.1);
    (
        y.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        y.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

fn integrate_to(
    field: &impl Fn(f64, f64) -> (f64, f64),
    mut t: f64,
    mut y: (f64, f64),
    target: f64,
    h_init: &mut f64,
) -> Result<(f64, f64)> {
    let h_min = 1e-13 * (1.0 + target.abs());
    while t < target {
        let h = h_init.min(target - t).max(h_min);
        let full = rk4_step(field, y, h);
        let half = rk4_step(field, y, 0.5 * h);
        let doubled = rk4_step(field, half, 0.5 * h);
        let err = (full.0 - doubled.0).abs().max((full.1 - doubled.1).abs());
        let scale = 1.0 + y.0.abs().max(y.1.abs());
        if err <= FLOW_TOL * scale {
            t += h;
            // Fifth-order correction from step doubling.
            y = (
                doubled.0 + (doubled.0 - full.0) / 15.0,
                doubled.1 + (doubled.1 - full.1) / 15.0,
            );
            if err < 0.1 * FLOW_TOL * scale {
                *h_init = (h * 2.0).min(0.25);
            }
        } else {
            if h <= h_min {
                return Err(Error::StepSizeFailure { t });
            }
            *h_init = h * 0.5;
        }
    }
    Ok(y)
}

/// Integrates the physical trajectory of the damped oscillator from
/// `start = (p0, q0)` through the requested times (nonnegative,
/// nondecreasing). The right-hand side is read off the generator itself
/// rather than written down again: `dx/dt = -v` with `v` the advection
/// field of [`damped_liouvillian`].
pub fn flow_trajectory(
    gamma: f64,
    mu: f64,
    start: (f64, f64),
    times: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if !gamma.is_finite() || !mu.is_finite() || !start.0.is_finite() || !start.1.is_finite() {
        return Err(Error::PreconditionViolated(
            "damping rates and start point must be finite".into(),
        ));
    }
    for pair in times.windows(2) {
        if !(pair[1] >= pair[0]) {
            return Err(Error::PreconditionViolated(
                "trajectory times must be nondecreasing".into(),
            ));
        }
    }
    if let Some(&t0) = times.first() {
        if !(t0 >= 0.0) {
            return Err(Error::PreconditionViolated(
                "trajectory times must be nonnegative".into(),
            ));
        }
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::PreconditionViolated(
            "trajectory times must be finite".into(),
        ));
    }

    let op = damped_liouvillian(gamma, mu, 1);
    let (v_p, v_q) = advection_field(&op)?;
    let field = move |p: f64, q: f64| (-v_p.eval(&p, &q), -v_q.eval(&p, &q));

    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    let mut y = start;
    let mut h = 0.05;
    for &target in times {
        y = integrate_to(&field, t, y, target, &mut h)?;
        t = target;
        out.push(y);
    }
    Ok(out)
}

/// What the dilation pullback does to the damped-oscillator family.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingMapReport {
    pub alpha: f64,
    /// Jacobian determinant of `(p, q) -> (alpha p, alpha q)`; differs
    /// from 1 for every alpha != 1, so the map is not canonical.
    pub jacobian_det: f64,
    pub canonical: bool,
    /// Largest `[L_tot, A]` entry over a sample of `(gamma, mu)` pairs
    /// including the undamped point.
    pub commutator_residual: f64,
}

/// Builds the pullback of `(p, q) -> (alpha p, alpha q)` and measures its
/// commutator with the damped-oscillator generator across damping choices.
/// Constant `alpha` commutes exactly because both operators respect the
/// degree grading; the Jacobian determinant `alpha^2` records that the map
/// is nevertheless not canonical for `alpha != 1`.
pub fn scaling_map_symmetry_check(alpha_const: f64, max_degree: usize) -> Result<ScalingMapReport> {
    if !(alpha_const > 0.0) {
        return Err(Error::PreconditionViolated(format!(
            "dilation factor must be positive, got {alpha_const}"
        )));
    }
    let a = scaling_pullback(&alpha_const, max_degree);
    let samples = [
        (0.0, 0.0),
        (0.05, 0.0),
        (0.05, 0.05),
        (0.3, 0.1),
        (0.7, 0.7),
        (1.0, 0.25),
    ];
    let mut residual = 0.0_f64;
    for &(gamma, mu) in &samples {
        let l = damped_liouvillian(gamma, mu, max_degree);
        residual = residual.max(l.commutator(&a)?.max_abs());
    }
    let jacobian_det = alpha_const * alpha_const;
    Ok(ScalingMapReport {
        alpha: alpha_const,
        jacobian_det,
        canonical: (jacobian_det - 1.0).abs() <= 1e-12,
        commutator_residual: residual,
    })
}
