//! Dissipative generators and density-matrix evolution.
//!
//! Two kinds of dissipative term appear here. `lindblad_superop` builds the
//! standard completely positive trace-preserving generator from jump
//! operators and rates. `diagonal_damping` instead damps chosen directions
//! of an orthogonal operator basis directly; it preserves Hermiticity and
//! the trace but makes no complete-positivity claim, and exists to probe
//! which coefficient blocks a dissipator can leave untouched. Positivity
//! of evolved states is spot-checked by tests, never enforced.

use crate::error::{Error, Result};
use crate::linalg::jacobi_eig;
use crate::operators::{trace_inner_product, HilbertOp};
use crate::superop::{commute_residual, promote_left, promote_right, vec_op, SuperOp};
use crate::symmetry::{dfls_check, BlockDecomposition};
use crate::C64;
use ndarray::Array2;

/// Jump operators with their rates, defining a Lindblad dissipator
/// `rho -> sum_a rate_a (F_a rho F_a^dag - (F_a^dag F_a rho + rho F_a^dag F_a)/2)`.
#[derive(Clone, Debug)]
pub struct Dissipator {
    pub jump_ops: Vec<HilbertOp>,
    pub rates: Vec<f64>,
}

impl Dissipator {
    pub fn new(jump_ops: Vec<HilbertOp>, rates: Vec<f64>) -> Result<Self> {
        if jump_ops.len() != rates.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} jump operators but {} rates",
                jump_ops.len(),
                rates.len()
            )));
        }
        for &r in &rates {
            if !(r >= 0.0) {
                return Err(Error::NegativeRate(r));
            }
        }
        if let Some(first) = jump_ops.first() {
            let dim = first.dim();
            for f in &jump_ops {
                if f.dim() != dim {
                    return Err(Error::DimensionMismatch(
                        "jump operators of mixed dimension".into(),
                    ));
                }
            }
        }
        Ok(Self { jump_ops, rates })
    }

    pub fn dim(&self) -> Option<usize> {
        self.jump_ops.first().map(|f| f.dim())
    }
}

/// The Lindblad dissipator as a superoperator, assembled from promotions:
/// `F_l F^dag_r - (F^dag F)_l / 2 - (F^dag F)_r / 2` per jump, weighted by
/// its rate. Annihilates the trace functional: `<1, L_d(rho)> = 0`.
pub fn lindblad_superop(d: &Dissipator) -> Result<SuperOp> {
    let dim = d
        .dim()
        .ok_or_else(|| Error::InvalidState("dissipator with no jump operators".into()))?;
    let mut total = SuperOp::zeros(dim);
    for (f, &rate) in d.jump_ops.iter().zip(&d.rates) {
        if rate == 0.0 {
            continue;
        }
        let f_dag = f.dagger();
        let sandwich = promote_left(f).compose(&promote_right(&f_dag))?;
        let ff = f_dag.matmul(f)?;
        let half = C64::new(0.5, 0.0);
        let anti = promote_left(&ff)
            .scaled(half)
            .plus(&promote_right(&ff).scaled(half))?;
        total = total.plus(&sandwich.minus(&anti)?.scaled(C64::new(rate, 0.0)))?;
    }
    Ok(total.labeled_as("L_d"))
}

/// Checks that `rho` is a density matrix: Hermitian, unit trace, and
/// positive semidefinite within `tol`.
pub fn require_density(rho: &HilbertOp, tol: f64) -> Result<()> {
    rho.require_hermitian()?;
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > tol.max(1e-10) {
        return Err(Error::InvalidState(format!(
            "density matrix trace {tr} != 1"
        )));
    }
    let (vals, _) = jacobi_eig(&rho.mat)?;
    if let Some(&min) = vals.first() {
        if min < -tol.max(1e-10) {
            return Err(Error::InvalidState(format!(
                "density matrix has negative eigenvalue {min:.3e}"
            )));
        }
    }
    Ok(())
}

/// Evolves `rho0` under a time-independent generator:
/// `rho(t) = expm(l_total t)(rho0)` at each requested time.
pub fn evolve(l_total: &SuperOp, rho0: &HilbertOp, times: &[f64]) -> Result<Vec<HilbertOp>> {
    if rho0.dim() != l_total.hdim {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{} but the generator acts on {}x{} operators",
            rho0.dim(),
            rho0.dim(),
            l_total.hdim,
            l_total.hdim
        )));
    }
    require_density(rho0, 1e-10)?;
    times
        .iter()
        .map(|&t| l_total.exp(t).apply(rho0))
        .collect()
}

/// One leg of a piecewise-constant schedule: a generator held for a
/// duration.
#[derive(Clone, Debug)]
pub struct ScheduleSegment {
    pub generator: SuperOp,
    pub duration: f64,
}

/// Evolves through a piecewise-constant schedule, returning the state
/// after each segment (the initial state is not repeated). Composition is
/// exact: each segment applies one matrix exponential to the running
/// state.
pub fn evolve_piecewise(segments: &[ScheduleSegment], rho0: &HilbertOp) -> Result<Vec<HilbertOp>> {
    require_density(rho0, 1e-10)?;
    let mut state = rho0.clone();
    let mut out = Vec::with_capacity(segments.len());
    for seg in segments {
        if seg.generator.hdim != state.dim() {
            return Err(Error::DimensionMismatch(
                "schedule segment dimension differs from the state".into(),
            ));
        }
        if !(seg.duration >= 0.0) {
            return Err(Error::PreconditionViolated(format!(
                "segment duration must be nonnegative, got {}",
                seg.duration
            )));
        }
        state = seg.generator.exp(seg.duration).apply(&state)?;
        out.push(state.clone());
    }
    Ok(out)
}

/// A generator that damps each direction of an orthogonal operator family
/// at its own rate: `L_d = -sum_a rate_a |B_a><B_a| / <B_a, B_a>`.
///
/// Acting on `rho` it subtracts `rate_a` times the `B_a` component, so the
/// span of the family is invariant and its orthogonal complement is
/// annihilated. For Hermitian `B_a` the generator preserves Hermiticity,
/// and it preserves the trace whenever every `B_a` is traceless. It is a
/// probe for block-decoupling questions, not a guaranteed completely
/// positive channel.
pub fn diagonal_damping(basis_ops: &[HilbertOp], rates: &[f64]) -> Result<SuperOp> {
    if basis_ops.len() != rates.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} operators but {} rates",
            basis_ops.len(),
            rates.len()
        )));
    }
    let dim = basis_ops
        .first()
        .ok_or_else(|| Error::InvalidState("empty damping family".into()))?
        .dim();
    for &r in rates {
        if !(r >= 0.0) {
            return Err(Error::NegativeRate(r));
        }
    }
    for (i, a) in basis_ops.iter().enumerate() {
        if a.dim() != dim {
            return Err(Error::DimensionMismatch(
                "damping family of mixed dimension".into(),
            ));
        }
        let na = a.fro_norm();
        if na == 0.0 {
            return Err(Error::DegenerateBasis("zero damping direction".into()));
        }
        for b in basis_ops.iter().skip(i + 1) {
            let ip = trace_inner_product(a, b)?;
            if ip.norm() > 1e-12 * na * b.fro_norm() {
                return Err(Error::DegenerateBasis(format!(
                    "damping directions must be orthogonal, overlap {:.3e}",
                    ip.norm()
                )));
            }
        }
    }
    let n2 = dim * dim;
    let mut mat = Array2::<C64>::zeros((n2, n2));
    for (a, &rate) in basis_ops.iter().zip(rates) {
        if rate == 0.0 {
            continue;
        }
        let v = vec_op(&a.mat);
        let w = rate / a.fro_norm().powi(2);
        for r in 0..n2 {
            for c in 0..n2 {
                mat[(r, c)] -= v[r] * v[c].conj() * w;
            }
        }
    }
    SuperOp::new(dim, mat)
}

/// A rank-one coefficient coupling `strength |b_out><b_in|` (normalized),
/// feeding the `b_in` component of the state into the `b_out` direction.
/// Used to perturb a block-respecting dissipator with a controlled
/// cross-block leak.
pub fn rank_one_coupling(b_out: &HilbertOp, b_in: &HilbertOp, strength: f64) -> Result<SuperOp> {
    if b_out.dim() != b_in.dim() {
        return Err(Error::DimensionMismatch(
            "coupling endpoints of different dimension".into(),
        ));
    }
    let no = b_out.fro_norm();
    let ni = b_in.fro_norm();
    if no == 0.0 || ni == 0.0 {
        return Err(Error::DegenerateBasis("zero coupling direction".into()));
    }
    let dim = b_out.dim();
    let n2 = dim * dim;
    let vo = vec_op(&b_out.mat);
    let vi = vec_op(&b_in.mat);
    let mut mat = Array2::<C64>::zeros((n2, n2));
    let w = strength / (no * ni);
    for r in 0..n2 {
        for c in 0..n2 {
            mat[(r, c)] = vo[r] * vi[c].conj() * w;
        }
    }
    SuperOp::new(dim, mat)
}

/// Verdict for one block of a decomposition against a unitary generator
/// and a dissipator.
#[derive(Clone, Debug)]
pub struct BlockDflsReport {
    pub block: usize,
    pub labels: Vec<String>,
    /// `[l_u, P] ~ 0` for the block projector `P`.
    pub preserved_by_unitary: bool,
    pub unitary_residual: f64,
    /// Two-sided annihilation `P l_d = l_d P = 0`.
    pub annihilated_by_dissipator: bool,
    pub dissipator_residual_left: f64,
    pub dissipator_residual_right: f64,
    /// Both conditions together: the block stores states that neither
    /// generator disturbs from outside.
    pub decoherence_free: bool,
}

/// Scans every block of a decomposition: builds the projector onto the
/// span of each block's basis operators and reports whether the unitary
/// generator commutes with it and the dissipator is annihilated by it.
///
/// `basis_ops` must be the operator family underlying `blocks`, pairwise
/// orthogonal, in the same order as the decomposition labels.
pub fn dfls_scan(
    l_u: &SuperOp,
    l_d: &SuperOp,
    blocks: &BlockDecomposition,
    basis_ops: &[HilbertOp],
    tol: f64,
) -> Result<Vec<BlockDflsReport>> {
    let n_labels = blocks.basis_labels.len();
    if basis_ops.len() != n_labels {
        return Err(Error::DimensionMismatch(format!(
            "{} basis operators for {} block labels",
            basis_ops.len(),
            n_labels
        )));
    }
    let dim = l_u.hdim;
    for op in basis_ops {
        if op.dim() != dim {
            return Err(Error::DimensionMismatch(
                "basis operator dimension differs from the generator".into(),
            ));
        }
    }
    let n2 = dim * dim;

    let mut reports = Vec::with_capacity(blocks.blocks.len());
    for (which, members) in blocks.blocks.iter().enumerate() {
        let mut proj = Array2::<C64>::zeros((n2, n2));
        for &idx in members {
            let op = &basis_ops[idx];
            let nrm2 = op.fro_norm().powi(2);
            if nrm2 == 0.0 {
                return Err(Error::DegenerateBasis(format!(
                    "zero basis operator at index {idx}"
                )));
            }
            let v = vec_op(&op.mat);
            for r in 0..n2 {
                for c in 0..n2 {
                    proj[(r, c)] += v[r] * v[c].conj() / nrm2;
                }
            }
        }
        let p = SuperOp::new(dim, proj)?;
        let unitary_residual = commute_residual(l_u, &p)?;
        let dfls = dfls_check(l_d, &p, tol)?;
        let preserved = unitary_residual <= tol;
        reports.push(BlockDflsReport {
            block: which,
            labels: blocks
                .labels_of_block(which)
                .into_iter()
                .map(str::to_string)
                .collect(),
            preserved_by_unitary: preserved,
            unitary_residual,
            annihilated_by_dissipator: dfls.annihilated,
            dissipator_residual_left: dfls.residual_left,
            dissipator_residual_right: dfls.residual_right,
            decoherence_free: preserved && dfls.annihilated,
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{PauliAxis, PauliBasis};
    use crate::qubit_set::{
        block_projector, bloch_liouvillian, liouvillian, EffParams, BLOCH_LABELS,
    };
    use crate::superop::is_real_superop;
    use crate::symmetry::block_decompose_real;
    use crate::testutil::{random_density, random_reduced};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sigma_minus() -> HilbertOp {
        let mut m = Array2::<C64>::zeros((2, 2));
        m[(0, 1)] = C64::new(1.0, 0.0);
        HilbertOp::new(m).unwrap()
    }

    #[test]
    fn amplitude_damping_moves_the_excited_state_down() {
        let d = Dissipator::new(vec![sigma_minus()], vec![1.0]).unwrap();
        let l_d = lindblad_superop(&d).unwrap();
        let mut exc = Array2::<C64>::zeros((2, 2));
        exc[(1, 1)] = C64::new(1.0, 0.0);
        let out = l_d.apply(&HilbertOp::new(exc).unwrap()).unwrap();
        assert!((out.mat[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((out.mat[(1, 1)] + C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(out.mat[(0, 1)].norm() < 1e-15);

        // The ground state is a fixed point.
        let mut gnd = Array2::<C64>::zeros((2, 2));
        gnd[(0, 0)] = C64::new(1.0, 0.0);
        let out = l_d.apply(&HilbertOp::new(gnd).unwrap()).unwrap();
        assert!(out.fro_norm() < 1e-15);
    }

    #[test]
    fn identity_jump_is_inert_and_rates_are_checked() {
        let d = Dissipator::new(vec![HilbertOp::identity(3)], vec![2.5]).unwrap();
        assert!(lindblad_superop(&d).unwrap().fro_norm() < 1e-15);
        assert!(Dissipator::new(vec![sigma_minus()], vec![-0.1]).is_err());
        assert!(Dissipator::new(vec![sigma_minus()], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn lindblad_annihilates_the_trace_and_preserves_hermiticity() {
        let mut rng = ChaCha8Rng::seed_from_u64(90);
        let f1 = crate::testutil::random_op(&mut rng, 4);
        let f2 = crate::testutil::random_op(&mut rng, 4);
        let d = Dissipator::new(vec![f1, f2], vec![0.7, 0.3]).unwrap();
        let l_d = lindblad_superop(&d).unwrap();
        assert!(is_real_superop(&l_d, 1e-12));
        let one = HilbertOp::identity(4);
        for _ in 0..10 {
            let rho = random_density(&mut rng, 4);
            let out = l_d.apply(&rho).unwrap();
            let tr = trace_inner_product(&one, &out).unwrap();
            assert!(tr.norm() < 1e-12);
            assert!(out.hermiticity_deviation() < 1e-12);
        }
    }

    #[test]
    fn dissipative_evolution_keeps_states_physical() {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        let p = EffParams {
            alpha: 0.9,
            beta: 0.2,
            gamma: 1.1,
            delta: 0.5,
            epsilon: 0.3,
            zeta: 0.8,
            eta: 0.6,
        };
        let l_u = liouvillian(&p).unwrap();
        let f = crate::qubit_set::sigma_bs(PauliAxis::X, PauliAxis::I);
        let d = Dissipator::new(vec![f], vec![0.4]).unwrap();
        let l = l_u.plus(&lindblad_superop(&d).unwrap()).unwrap();
        let rho0 = random_density(&mut rng, 4);
        for rho in evolve(&l, &rho0, &[0.5, 3.0, 10.0]).unwrap() {
            assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-10);
            assert!(rho.hermiticity_deviation() < 1e-12);
            let (vals, _) = jacobi_eig(&rho.mat).unwrap();
            assert!(vals[0] > -1e-9, "eigenvalue {}", vals[0]);
        }
    }

    #[test]
    fn unitary_evolution_is_isospectral_and_zero_generator_is_static() {
        let mut rng = ChaCha8Rng::seed_from_u64(92);
        let rho0 = random_density(&mut rng, 4);
        let (ref_vals, _) = jacobi_eig(&rho0.mat).unwrap();

        let p = EffParams {
            alpha: 1.0,
            beta: 0.3,
            gamma: 0.7,
            delta: 0.2,
            epsilon: 0.1,
            zeta: 0.5,
            eta: 0.4,
        };
        let l = liouvillian(&p).unwrap();
        for rho in evolve(&l, &rho0, &[0.7, 2.9]).unwrap() {
            let (vals, _) = jacobi_eig(&rho.mat).unwrap();
            for (a, b) in vals.iter().zip(&ref_vals) {
                assert!((a - b).abs() < 1e-10);
            }
        }

        let zero = SuperOp::zeros(4);
        for rho in evolve(&zero, &rho0, &[1.0, 5.0]).unwrap() {
            assert!(rho.minus(&rho0).unwrap().fro_norm() < 1e-14);
        }

        // Non-states are rejected.
        let not_density = HilbertOp::identity(4);
        assert!(evolve(&l, &not_density, &[1.0]).is_err());
    }

    #[test]
    fn piecewise_schedule_composes_exponentials() {
        let mut rng = ChaCha8Rng::seed_from_u64(93);
        let rho0 = random_density(&mut rng, 4);
        let p = EffParams {
            alpha: 0.8,
            beta: 0.0,
            gamma: 1.2,
            delta: 0.4,
            epsilon: 0.0,
            zeta: 0.6,
            eta: 0.9,
        };
        let l = liouvillian(&p).unwrap();
        // Two legs under the same generator equal one long leg.
        let segments = vec![
            ScheduleSegment {
                generator: l.clone(),
                duration: 0.7,
            },
            ScheduleSegment {
                generator: l.clone(),
                duration: 1.3,
            },
        ];
        let piecewise = evolve_piecewise(&segments, &rho0).unwrap();
        let direct = evolve(&l, &rho0, &[2.0]).unwrap();
        assert!(
            piecewise[1].minus(&direct[0]).unwrap().fro_norm() < 1e-10,
            "composition should match a single exponential"
        );
        assert!(evolve_piecewise(
            &[ScheduleSegment {
                generator: l,
                duration: -1.0
            }],
            &rho0
        )
        .is_err());
    }

    fn parameter_string_damping(p: &EffParams) -> SuperOp {
        // Reuse the five Hamiltonian coupling strengths as damping rates on
        // their own Pauli strings; all five strings live in the 10-block.
        let ops = [
            (crate::qubit_set::sigma_b(PauliAxis::X), p.alpha),
            (crate::qubit_set::sigma_s(PauliAxis::X), p.gamma),
            (crate::qubit_set::sigma_s(PauliAxis::Y), p.delta),
            (
                crate::qubit_set::sigma_bs(PauliAxis::Y, PauliAxis::Z),
                p.zeta,
            ),
            (
                crate::qubit_set::sigma_bs(PauliAxis::Z, PauliAxis::Y),
                p.eta,
            ),
        ];
        let (basis, rates): (Vec<_>, Vec<_>) =
            ops.into_iter().map(|(b, r)| (b, r.abs())).unzip();
        diagonal_damping(&basis, &rates).unwrap()
    }

    #[test]
    fn diagonal_damping_damps_exactly_its_directions() {
        let basis = PauliBasis::new(2);
        let dirs = vec![
            basis.element(&[PauliAxis::X, PauliAxis::I]).clone(),
            basis.element(&[PauliAxis::I, PauliAxis::Y]).clone(),
        ];
        let l_d = diagonal_damping(&dirs, &[0.5, 2.0]).unwrap();
        assert!(is_real_superop(&l_d, 1e-12));

        let out = l_d.apply(&dirs[0]).unwrap();
        assert!(out.plus(&dirs[0].scaled(C64::new(0.5, 0.0))).unwrap().fro_norm() < 1e-13);
        let out = l_d.apply(&dirs[1]).unwrap();
        assert!(out.plus(&dirs[1].scaled(C64::new(2.0, 0.0))).unwrap().fro_norm() < 1e-13);

        // Orthogonal directions are annihilated.
        let other = basis.element(&[PauliAxis::Z, PauliAxis::Z]);
        assert!(l_d.apply(other).unwrap().fro_norm() < 1e-13);

        // Non-orthogonal families are rejected.
        let skew = vec![
            dirs[0].clone(),
            dirs[0].plus(&dirs[1]).unwrap(),
        ];
        assert!(matches!(
            diagonal_damping(&skew, &[1.0, 1.0]),
            Err(Error::DegenerateBasis(_))
        ));
        assert!(diagonal_damping(&dirs, &[1.0, -1.0]).is_err());
    }

    #[test]
    fn ten_block_damping_protects_the_five_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(94);
        let p = random_reduced(&mut rng, 0.2, 3.0);
        let l_u = liouvillian(&p).unwrap();
        let l_d = parameter_string_damping(&p);
        let l = l_u.plus(&l_d).unwrap();

        // The damping commutes with the block projector and is annihilated
        // on the five-block side.
        let p_block = block_projector();
        assert!(commute_residual(&l_d, &p_block).unwrap() < 1e-12);
        let dfls = dfls_check(&l_d, &p_block, 1e-12).unwrap();
        assert!(dfls.annihilated);

        // A state with its traceless content purely in the protected
        // sector evolves identically with and without the damping.
        let basis = PauliBasis::new(2);
        let rho0 = HilbertOp::identity(4)
            .scaled(C64::new(0.25, 0.0))
            .plus(&basis.element(&[PauliAxis::Y, PauliAxis::I]).scaled(C64::new(0.15, 0.0)))
            .unwrap()
            .plus(&basis.element(&[PauliAxis::X, PauliAxis::X]).scaled(C64::new(0.1, 0.0)))
            .unwrap();
        let times = [1.0, 5.0, 10.0];
        let damped = evolve(&l, &rho0, &times).unwrap();
        let free = evolve(&l_u, &rho0, &times).unwrap();
        for (a, b) in damped.iter().zip(&free) {
            assert!(
                a.minus(b).unwrap().fro_norm() < 1e-8,
                "protected sector must not feel the damping"
            );
        }

        // The damping does act inside the ten-block.
        let probe = HilbertOp::identity(4)
            .scaled(C64::new(0.25, 0.0))
            .plus(&crate::qubit_set::sigma_b(PauliAxis::X).scaled(C64::new(0.2, 0.0)))
            .unwrap();
        let damped = evolve(&l, &probe, &[3.0]).unwrap();
        let free = evolve(&l_u, &probe, &[3.0]).unwrap();
        assert!(damped[0].minus(&free[0]).unwrap().fro_norm() > 1e-3);
    }

    #[test]
    fn cross_coupling_perturbation_leaks() {
        let mut rng = ChaCha8Rng::seed_from_u64(95);
        let p = random_reduced(&mut rng, 0.2, 3.0);
        let l_u = liouvillian(&p).unwrap();
        let l_d = parameter_string_damping(&p);
        let leak = rank_one_coupling(
            &crate::qubit_set::sigma_b(PauliAxis::Y),
            &crate::qubit_set::sigma_b(PauliAxis::X),
            1e-2,
        )
        .unwrap();
        let l_d_perturbed = l_d.plus(&leak).unwrap();

        let p_block = block_projector();
        let dfls = dfls_check(&l_d_perturbed, &p_block, 1e-12).unwrap();
        assert!(!dfls.annihilated);

        // Start in the ten-block; the perturbation feeds the five-block.
        let rho0 = HilbertOp::identity(4)
            .scaled(C64::new(0.25, 0.0))
            .plus(&crate::qubit_set::sigma_b(PauliAxis::X).scaled(C64::new(0.2, 0.0)))
            .unwrap();
        let l = l_u.plus(&l_d_perturbed).unwrap();
        let state = &evolve(&l, &rho0, &[5.0]).unwrap()[0];
        let y_comp = trace_inner_product(&crate::qubit_set::sigma_b(PauliAxis::Y), state)
            .unwrap()
            .norm()
            / 4.0;
        let projected = p_block.apply(state).unwrap();
        let traceless_protected = projected
            .minus(&HilbertOp::identity(4).scaled(C64::new(0.25, 0.0)))
            .unwrap()
            .fro_norm();
        assert!(
            y_comp > 1e-6 || traceless_protected > 1e-6,
            "perturbed dissipator should leak into the protected sector"
        );
    }

    #[test]
    fn dfls_scan_separates_protected_and_damped_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(96);
        let p = random_reduced(&mut rng, 0.2, 3.0);
        let bloch = bloch_liouvillian(&p);
        let blocks = block_decompose_real(&bloch.mat, &bloch.labels, None);
        assert_eq!(blocks.block_sizes(), vec![5, 10]);

        let basis = PauliBasis::new(2);
        let basis_ops: Vec<HilbertOp> = BLOCH_LABELS
            .iter()
            .map(|lab| basis.elements[basis.index_of_label(lab).unwrap()].clone())
            .collect();

        let l_u = liouvillian(&p).unwrap();
        let l_d = parameter_string_damping(&p);
        let reports = dfls_scan(&l_u, &l_d, &blocks, &basis_ops, 1e-10).unwrap();
        assert_eq!(reports.len(), 2);

        let five = &reports[0];
        assert_eq!(five.labels.len(), 5);
        assert!(five.preserved_by_unitary);
        assert!(five.annihilated_by_dissipator);
        assert!(five.decoherence_free);

        let ten = &reports[1];
        assert!(ten.preserved_by_unitary);
        assert!(!ten.annihilated_by_dissipator);
        assert!(!ten.decoherence_free);

        // With no dissipation every unitary-preserved block qualifies.
        let zero = SuperOp::zeros(4);
        let reports = dfls_scan(&l_u, &zero, &blocks, &basis_ops, 1e-10).unwrap();
        assert!(reports.iter().all(|r| r.decoherence_free));

        // A dissipator proportional to the block projector itself fails
        // the two-sided annihilation even though it maps the block into
        // itself.
        let p_five: SuperOp = {
            let mut proj = Array2::<C64>::zeros((16, 16));
            for idx in &blocks.blocks[0] {
                let v = vec_op(&basis_ops[*idx].mat);
                for r in 0..16 {
                    for c in 0..16 {
                        proj[(r, c)] += v[r] * v[c].conj() / 4.0;
                    }
                }
            }
            SuperOp::new(4, proj).unwrap()
        };
        let self_coupled = p_five.scaled(C64::new(0.3, 0.0));
        let reports = dfls_scan(&l_u, &self_coupled, &blocks, &basis_ops, 1e-10).unwrap();
        assert!(!reports[0].annihilated_by_dissipator);
        assert!(!reports[0].decoherence_free);
    }

    #[test]
    fn density_validation_rejects_bad_inputs() {
        require_density(
            &HilbertOp::identity(3).scaled(C64::new(1.0 / 3.0, 0.0)),
            1e-10,
        )
        .unwrap();
        assert!(require_density(&HilbertOp::identity(2), 1e-10).is_err());
        let mut skew = Array2::<C64>::zeros((2, 2));
        skew[(0, 0)] = C64::new(1.5, 0.0);
        skew[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(require_density(&HilbertOp::new(skew).unwrap(), 1e-10).is_err());
    }
}
