//! Seeded random inputs shared by the unit tests.

use crate::operators::HilbertOp;
use crate::qubit_set::EffParams;
use crate::C64;
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_op(rng: &mut ChaCha8Rng, dim: usize) -> HilbertOp {
    let mut mat = Array2::zeros((dim, dim));
    for z in mat.iter_mut() {
        *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    HilbertOp::new(mat).unwrap()
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> HilbertOp {
    let a = random_op(rng, dim);
    a.plus(&a.dagger()).unwrap().scaled(C64::new(0.5, 0.0))
}

/// A random density matrix: positive, unit trace.
pub fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> HilbertOp {
    let a = random_op(rng, dim);
    let g = a.matmul(&a.dagger()).unwrap();
    g.scaled(C64::new(1.0, 0.0) / g.trace())
}

/// Coupling constants with the qubit drive and island bias switched off,
/// every remaining magnitude in `lo..hi` with a random sign.
pub fn random_reduced(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> EffParams {
    let mut draw = || {
        let mag = rng.gen_range(lo..hi);
        if rng.gen_bool(0.5) {
            mag
        } else {
            -mag
        }
    };
    EffParams {
        alpha: draw(),
        beta: 0.0,
        gamma: draw(),
        delta: draw(),
        epsilon: 0.0,
        zeta: draw(),
        eta: draw(),
    }
}
