//! Superoperator analysis on Liouville space.
//!
//! Liouville space is the vector space of operators on a finite Hilbert
//! space, equipped with the trace inner product `<A,B> = Tr{A^dag B}`.
//! Superoperators are linear maps on it. This crate builds the standard
//! cast (left/right multiplications, closed-system Liouvillians, Lindblad
//! dissipators), detects the symmetries a Liouvillian has that its
//! Hamiltonian does not (degenerate energy differences, block structure,
//! commutants, decoherence-free blocks), and ships two worked model
//! families: a qubit coupled to a single-electron transistor, and ladder
//! systems (harmonic oscillator, Stark ladder) plus the damped classical
//! oscillator with its exact polynomial phase-space algebra.
//!
//! Conventions fixed once and used everywhere:
//!
//! * Operators are vectorized by stacking columns, so a superoperator that
//!   multiplies from the left by `A` has matrix `1 (x) A`, and one that
//!   multiplies from the right has `A^T (x) 1`.
//! * Tensor products index the left factor as the major axis:
//!   `(A (x) B)[j*dim(B)+k, ...]`.
//! * The superoperator adjoint is the conjugate transpose of the matrix
//!   representation; with column stacking that is exactly the adjoint with
//!   respect to the trace inner product.

pub mod classical;
pub mod error;
pub mod linalg;
pub mod open_system;
pub mod operators;
pub mod oscillator;
pub mod qubit_set;
pub mod serial;
pub mod subspace;
pub mod superop;
pub mod symmetry;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use operators::{HilbertOp, PauliAxis, PauliBasis};
pub use superop::SuperOp;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
