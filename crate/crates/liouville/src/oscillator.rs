//! Truncated ladder systems: the harmonic oscillator and the Stark ladder.
//!
//! Both have uniformly spaced spectra, so every Liouvillian eigenvalue
//! `i(w_k - w_j)` is massively degenerate and the commutant is huge. The
//! cleanest witnesses are the ladder superoperators `S_+ = (a^dag)_l a_r`
//! and `S_- = a_l (a^dag)_r`, which shift a matrix element one step up or
//! down the diagonal without changing the level difference: they commute
//! with the Liouvillian but not with the Hamiltonian side factors.
//!
//! Truncation to `D` levels breaks the algebra at the edges, so every
//! residual here is measured on an interior index window only. Inside the
//! window the exact relations are
//!
//! ```text
//! [L, S_+] = [L, S_-] = 0          (both systems)
//! [H_l, S_+] = S_+                 (unit level spacing)
//! [S_+, S_-] = -(H_l + H_r)        (harmonic oscillator)
//! [S_+, S_-] = 0                   (Stark ladder, unit-amplitude shift)
//! ```
//!
//! The oscillator's ladder-pair commutator is often expected to close onto
//! `iL = H_l - H_r`; it does not. `S_+ S_- = n_l n_r` and
//! `S_- S_+ = (n+1)_l (n+1)_r` differ by the weight sum, not the weight
//! difference, and the report carries the residual against both candidates
//! so the distinction stays visible.

use crate::error::{Error, Result};
use crate::linalg::jacobi_eig;
use crate::operators::{kron, HilbertOp};
use crate::superop::{liouvillian_from_h, promote_left, promote_right, SuperOp};
use crate::symmetry::{difference_degeneracies, DifferenceDegeneracyReport};
use crate::C64;
use ndarray::Array2;
use std::ops::Range;

/// A truncated single-ladder system.
#[derive(Clone, Debug)]
pub struct LadderSystem {
    pub h: HilbertOp,
    /// Lowering operator.
    pub a: HilbertOp,
    /// Raising operator, kept explicitly so callers need not re-derive it.
    pub a_dag: HilbertOp,
}

fn require_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::PreconditionViolated(format!(
            "a ladder needs at least two levels, got {dim}"
        )));
    }
    Ok(())
}

/// Harmonic oscillator truncated to `dim` Fock states:
/// `h = a^dag a + 1/2`, `a|n> = sqrt(n)|n-1>`.
///
/// In this truncation `[h, a] = -a` and `[h, a^dag] = a^dag` hold exactly
/// even at the edge; only relations involving `a a^dag` (which is `n+1`
/// except for a zero at the top level) acquire boundary defects.
pub fn harmonic_oscillator(dim: usize) -> Result<LadderSystem> {
    require_dim(dim)?;
    let mut a = Array2::<C64>::zeros((dim, dim));
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let mut h = Array2::<C64>::zeros((dim, dim));
    for n in 0..dim {
        h[(n, n)] = C64::new(n as f64 + 0.5, 0.0);
    }
    let a = HilbertOp::labeled(a, "a")?;
    Ok(LadderSystem {
        a_dag: a.dagger(),
        h: HilbertOp::labeled(h, "H_osc")?,
        a,
    })
}

/// Stark ladder on `dim` sites: `h = sum_n n|n><n| - delta (a + a^dag)`
/// with the unit-amplitude shift `a = sum_n |n><n+1|`.
///
/// The shift is cyclic-free, so `a^dag a = 1 - |0><0|` and
/// `a a^dag = 1 - |D-1><D-1|`: defects sit at both ends and interior
/// windows must exclude both.
pub fn stark_ladder(dim: usize, delta: f64) -> Result<LadderSystem> {
    require_dim(dim)?;
    if !delta.is_finite() {
        return Err(Error::InvalidState("non-finite field strength".into()));
    }
    let mut a = Array2::<C64>::zeros((dim, dim));
    for n in 1..dim {
        a[(n - 1, n)] = C64::new(1.0, 0.0);
    }
    let mut h = Array2::<C64>::zeros((dim, dim));
    for n in 0..dim {
        h[(n, n)] = C64::new(n as f64, 0.0);
    }
    for n in 1..dim {
        h[(n - 1, n)] -= C64::new(delta, 0.0);
        h[(n, n - 1)] -= C64::new(delta, 0.0);
    }
    let a = HilbertOp::labeled(a, "shift")?;
    Ok(LadderSystem {
        a_dag: a.dagger(),
        h: HilbertOp::labeled(h, "H_stark")?,
        a,
    })
}

/// The ladder superoperators `(S_+, S_-)` of a lowering operator:
/// `S_+(rho) = a^dag rho a` and its adjoint `S_-(rho) = a rho a^dag`.
pub fn ladder_superops(a: &HilbertOp) -> (SuperOp, SuperOp) {
    let raise = promote_left(&a.dagger()).compose(&promote_right(a)).expect("matching dims");
    let lower = promote_left(a).compose(&promote_right(&a.dagger())).expect("matching dims");
    (raise.labeled_as("S_+"), lower.labeled_as("S_-"))
}

/// Frobenius norm of a superoperator restricted to the matrix elements
/// whose row and column Hilbert indices all lie in `window`.
///
/// A superoperator entry connects an input basis element `|j><k|` to an
/// output `|j'><k'|`; the restriction keeps it only when all four of
/// `j, k, j', k'` are inside the window, which is where truncation
/// artifacts (supported on the edge levels) cannot reach.
pub fn windowed_fro_norm(s: &SuperOp, window: &Range<usize>) -> f64 {
    let d = s.hdim;
    let mut acc = 0.0f64;
    for kr in window.clone() {
        for jr in window.clone() {
            let row = kr * d + jr;
            for kc in window.clone() {
                for jc in window.clone() {
                    acc += s.mat[(row, kc * d + jc)].norm_sqr();
                }
            }
        }
    }
    acc.sqrt()
}

/// Interior-window residuals of the ladder superoperator algebra.
#[derive(Clone, Debug)]
pub struct LadderAlgebraReport {
    pub window: (usize, usize),
    /// `|| [L, S_+] ||` on the window.
    pub comm_liouvillian_raise: f64,
    /// `|| [L, S_-] ||` on the window.
    pub comm_liouvillian_lower: f64,
    /// `|| [S_+, S_-] - iL ||` on the window.
    pub ladder_comm_vs_il: f64,
    /// `|| [S_+, S_-] ||` on the window (the Stark-ladder closure).
    pub ladder_comm_vs_zero: f64,
    /// `|| [S_+, S_-] + H_l + H_r ||` on the window (the oscillator
    /// closure).
    pub ladder_comm_vs_weight_sum: f64,
    /// `|| [H_l, S_+] - S_+ ||` on the window.
    pub raise_weight: f64,
}

/// Evaluates the ladder algebra of `(a, h)` on an interior index window.
///
/// The window must leave at least one level off each end inside the
/// truncation; edges carry the truncation defects and are excluded from
/// every norm.
pub fn ladder_superop_algebra(
    a: &HilbertOp,
    h: &HilbertOp,
    window: Range<usize>,
) -> Result<LadderAlgebraReport> {
    let dim = a.dim();
    if h.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "ladder operator is {dim}x{dim} but the Hamiltonian is {}x{}",
            h.dim(),
            h.dim()
        )));
    }
    if window.start >= window.end || window.end > dim {
        return Err(Error::IndexOutOfRange {
            index: window.end.max(window.start),
            dim,
        });
    }
    let l = liouvillian_from_h(h)?;
    let (raise, lower) = ladder_superops(a);
    let h_l = promote_left(h);
    let h_r = promote_right(h);

    let comm = |x: &SuperOp, y: &SuperOp| -> SuperOp {
        x.compose(y).unwrap().minus(&y.compose(x).unwrap()).unwrap()
    };
    let ladder_comm = comm(&raise, &lower);
    let il = l.scaled(C64::new(0.0, 1.0));
    let weight_sum = h_l.plus(&h_r).expect("matching dims");

    Ok(LadderAlgebraReport {
        window: (window.start, window.end),
        comm_liouvillian_raise: windowed_fro_norm(&comm(&l, &raise), &window),
        comm_liouvillian_lower: windowed_fro_norm(&comm(&l, &lower), &window),
        ladder_comm_vs_il: windowed_fro_norm(&ladder_comm.minus(&il)?, &window),
        ladder_comm_vs_zero: windowed_fro_norm(&ladder_comm, &window),
        ladder_comm_vs_weight_sum: windowed_fro_norm(&ladder_comm.plus(&weight_sum)?, &window),
        raise_weight: windowed_fro_norm(&comm(&h_l, &raise).minus(&raise)?, &window),
    })
}

/// Normalized coherent-state density matrix `|alpha><alpha|` truncated to
/// `dim` Fock states. The truncated amplitudes are renormalized so the
/// trace is exactly one.
pub fn coherent_state(alpha: C64, dim: usize) -> Result<HilbertOp> {
    require_dim(dim)?;
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::InvalidState("non-finite coherent amplitude".into()));
    }
    let mut amps = Vec::with_capacity(dim);
    let mut c = C64::new(1.0, 0.0);
    amps.push(c);
    for n in 1..dim {
        c *= alpha / C64::new((n as f64).sqrt(), 0.0);
        amps.push(c);
    }
    let norm_sq: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    let mut mat = Array2::<C64>::zeros((dim, dim));
    for r in 0..dim {
        for cc in 0..dim {
            mat[(r, cc)] = amps[r] * amps[cc].conj() / norm_sq;
        }
    }
    HilbertOp::new(mat)
}

/// Relative deviation of `S_-(|alpha><alpha|)` from
/// `|alpha|^2 |alpha><alpha|` measured on the Fock window `[0, window_end)`
/// where the truncated state carries essentially all its weight.
pub fn coherent_lowering_residual(alpha: C64, dim: usize, window_end: usize) -> Result<f64> {
    if window_end == 0 || window_end > dim {
        return Err(Error::IndexOutOfRange {
            index: window_end,
            dim,
        });
    }
    let rho = coherent_state(alpha, dim)?;
    let (_, lower) = ladder_superops(&harmonic_oscillator(dim)?.a);
    let lowered = lower.apply(&rho)?;
    let scale = alpha.norm_sqr();
    let mut dev = 0.0f64;
    let mut reference = 0.0f64;
    for r in 0..window_end {
        for c in 0..window_end {
            dev += (lowered.mat[(r, c)] - rho.mat[(r, c)] * scale).norm_sqr();
            reference += (rho.mat[(r, c)] * scale).norm_sqr();
        }
    }
    if reference == 0.0 {
        return Ok(dev.sqrt());
    }
    Ok((dev / reference).sqrt())
}

/// A composite of two non-interacting systems and the level-difference
/// coincidences its product structure forces.
#[derive(Clone, Debug)]
pub struct UncoupledComposite {
    /// `h1 (x) 1 + 1 (x) h2`.
    pub h: HilbertOp,
    pub factor1_levels: Vec<f64>,
    pub factor2_levels: Vec<f64>,
    pub report: DifferenceDegeneracyReport,
    /// Whether `w_{ik} - w_{il} = w_{jk} - w_{jl}` held for every
    /// `(i, j, k, l)` within the report tolerance. True by construction
    /// up to floating-point addition error; recorded rather than assumed.
    pub cross_level_identity: bool,
}

/// Builds the uncoupled composite of two Hermitian factors and verifies
/// that composite level differences depend only on the per-factor
/// differences: `w_{ik} = w_i + w_k` forces
/// `w_{ik} - w_{il} = w_{jk} - w_{jl}` for all `i, j`, which is the
/// mechanism producing Liouvillian degeneracies in any bipartite
/// noninteracting system.
pub fn uncoupled_composite(h1: &HilbertOp, h2: &HilbertOp, tol: f64) -> Result<UncoupledComposite> {
    h1.require_hermitian()?;
    h2.require_hermitian()?;
    let (w1, _) = jacobi_eig(&h1.mat)?;
    let (w2, _) = jacobi_eig(&h2.mat)?;
    let h = kron(h1, &HilbertOp::identity(h2.dim()))
        .plus(&kron(&HilbertOp::identity(h1.dim()), h2))?;

    let mut composite: Vec<f64> = Vec::with_capacity(w1.len() * w2.len());
    for &x in &w1 {
        for &y in &w2 {
            composite.push(x + y);
        }
    }
    let report = difference_degeneracies(&composite, tol);

    let mut identity = true;
    'outer: for k in 0..w2.len() {
        for l in 0..w2.len() {
            let gap = w2[k] - w2[l];
            for i in 0..w1.len() {
                let d = (w1[i] + w2[k]) - (w1[i] + w2[l]);
                if (d - gap).abs() > tol {
                    identity = false;
                    break 'outer;
                }
            }
        }
    }

    Ok(UncoupledComposite {
        h,
        factor1_levels: w1,
        factor2_levels: w2,
        report,
        cross_level_identity: identity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::commutator;
    use crate::superop::{partial_trace_superop, TracedFactor};

    #[test]
    fn oscillator_factory_basics() {
        let sys = harmonic_oscillator(5).unwrap();
        for n in 0..5 {
            assert_eq!(sys.h.mat[(n, n)], C64::new(n as f64 + 0.5, 0.0));
        }
        // [h, a] = -a holds exactly in this truncation, edge included.
        let c = commutator(&sys.h, &sys.a).unwrap();
        assert!(c.plus(&sys.a).unwrap().fro_norm() < 1e-15);
        let c = commutator(&sys.h, &sys.a_dag).unwrap();
        assert!(c.minus(&sys.a_dag).unwrap().fro_norm() < 1e-15);

        // a^dag a = n and a a^dag = n + 1 except a zero at the top; the
        // sqrt(n) amplitudes round-trip through squaring within one ulp.
        let n_op = sys.a_dag.matmul(&sys.a).unwrap();
        for k in 0..5 {
            assert!((n_op.mat[(k, k)] - C64::new(k as f64, 0.0)).norm() < 1e-14);
        }
        let anti = sys.a.matmul(&sys.a_dag).unwrap();
        for k in 0..4 {
            assert!((anti.mat[(k, k)] - C64::new(k as f64 + 1.0, 0.0)).norm() < 1e-14);
        }
        assert_eq!(anti.mat[(4, 4)], C64::new(0.0, 0.0));

        assert!(harmonic_oscillator(1).is_err());
    }

    #[test]
    fn stark_factory_basics() {
        let sys = stark_ladder(6, 0.25).unwrap();
        assert_eq!(sys.h.mat[(2, 2)], C64::new(2.0, 0.0));
        assert_eq!(sys.h.mat[(2, 3)], C64::new(-0.25, 0.0));
        sys.h.require_hermitian().unwrap();

        // Shift defects sit at both ends.
        let ada = sys.a_dag.matmul(&sys.a).unwrap();
        let aad = sys.a.matmul(&sys.a_dag).unwrap();
        for k in 0..6 {
            let expect_low = if k == 0 { 0.0 } else { 1.0 };
            let expect_high = if k == 5 { 0.0 } else { 1.0 };
            assert_eq!(ada.mat[(k, k)], C64::new(expect_low, 0.0));
            assert_eq!(aad.mat[(k, k)], C64::new(expect_high, 0.0));
        }
    }

    #[test]
    fn raising_superop_climbs_the_diagonal() {
        let sys = harmonic_oscillator(6).unwrap();
        let (raise, lower) = ladder_superops(&sys.a);
        for n in 0..5 {
            let mut proj = Array2::<C64>::zeros((6, 6));
            proj[(n, n)] = C64::new(1.0, 0.0);
            let rho = HilbertOp::new(proj).unwrap();
            let up = raise.apply(&rho).unwrap();
            for r in 0..6 {
                for c in 0..6 {
                    let expect = if r == n + 1 && c == n + 1 {
                        C64::new(n as f64 + 1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    assert!((up.mat[(r, c)] - expect).norm() < 1e-14);
                }
            }
        }
        // S_- is the adjoint of S_+.
        assert!(lower.minus(&raise.dagger()).unwrap().fro_norm() < 1e-15);
    }

    #[test]
    fn oscillator_algebra_on_interior_window() {
        let sys = harmonic_oscillator(20).unwrap();
        let report = ladder_superop_algebra(&sys.a, &sys.h, 0..15).unwrap();
        assert!(report.comm_liouvillian_raise < 1e-12);
        assert!(report.comm_liouvillian_lower < 1e-12);
        assert!(report.raise_weight < 1e-12);
        // The ladder pair closes onto the weight sum, not onto iL.
        assert!(report.ladder_comm_vs_weight_sum < 1e-10);
        assert!(report.ladder_comm_vs_il > 1.0);

        // The gap between the two candidates is exactly 2 H_l on the
        // window, so the iL residual is the windowed norm of 2 H_l.
        let h_l = promote_left(&sys.h);
        let expected = windowed_fro_norm(&h_l.scaled(C64::new(2.0, 0.0)), &(0..15));
        assert!((report.ladder_comm_vs_il - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn stark_algebra_on_two_sided_window() {
        let sys = stark_ladder(20, 0.7).unwrap();
        let report = ladder_superop_algebra(&sys.a, &sys.h, 3..17).unwrap();
        assert!(report.comm_liouvillian_raise < 1e-12);
        assert!(report.comm_liouvillian_lower < 1e-12);
        assert!(report.ladder_comm_vs_zero < 1e-12);
        assert!(report.raise_weight < 1e-12);

        // Including the bottom edge exposes the shift defect at site 0.
        let leaky = ladder_superop_algebra(&sys.a, &sys.h, 0..17).unwrap();
        assert!(leaky.ladder_comm_vs_zero > 0.5);
    }

    #[test]
    fn zero_ladder_gives_zero_residuals() {
        let dim = 8;
        let a = HilbertOp::zeros(dim);
        let h = harmonic_oscillator(dim).unwrap().h;
        let report = ladder_superop_algebra(&a, &h, 0..6).unwrap();
        assert_eq!(report.comm_liouvillian_raise, 0.0);
        assert_eq!(report.comm_liouvillian_lower, 0.0);
        assert_eq!(report.ladder_comm_vs_zero, 0.0);
        assert_eq!(report.raise_weight, 0.0);
    }

    #[test]
    fn window_bounds_are_checked() {
        let sys = harmonic_oscillator(10).unwrap();
        assert!(ladder_superop_algebra(&sys.a, &sys.h, 0..11).is_err());
        assert!(ladder_superop_algebra(&sys.a, &sys.h, 5..5).is_err());
        let wrong_h = harmonic_oscillator(11).unwrap().h;
        assert!(ladder_superop_algebra(&sys.a, &wrong_h, 0..8).is_err());
    }

    #[test]
    fn coherent_state_is_lowering_eigenstate() {
        let alpha = C64::new(0.4, 0.3);
        assert!((alpha.norm() - 0.5).abs() < 1e-15);
        let rho = coherent_state(alpha, 30).unwrap();
        assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-14);
        rho.require_hermitian().unwrap();

        let residual = coherent_lowering_residual(alpha, 30, 15).unwrap();
        assert!(residual < 1e-6, "residual {residual}");

        // Tiny truncation makes the relation visibly fail.
        let coarse = coherent_lowering_residual(C64::new(1.5, 0.0), 4, 4).unwrap();
        assert!(coarse > 1e-3);
    }

    #[test]
    fn mean_occupation_of_coherent_state() {
        let alpha = C64::new(0.5, 0.0);
        let dim = 30;
        let rho = coherent_state(alpha, dim).unwrap();
        let sys = harmonic_oscillator(dim).unwrap();
        let n_op = sys.a_dag.matmul(&sys.a).unwrap();
        let mean: C64 = n_op.matmul(&rho).unwrap().trace();
        assert!((mean.re - alpha.norm_sqr()).abs() < 1e-12);
        assert!(mean.im.abs() < 1e-14);
    }

    #[test]
    fn uncoupled_levels_share_difference_classes() {
        let h1 = HilbertOp::from_real(&[&[0.0, 0.0], &[0.0, 1.0]]).unwrap();
        let h2 = HilbertOp::from_real(&[&[0.0, 0.0], &[0.0, std::f64::consts::PI]]).unwrap();
        let comp = uncoupled_composite(&h1, &h2, 1e-9).unwrap();
        assert!(comp.cross_level_identity);
        assert_eq!(comp.report.eigenvalues.len(), 4);

        // The factor-2 gap pi appears as a composite difference once per
        // factor-1 level, so some class holds at least two pairs of
        // difference pi; same for the factor-1 gap 1.
        for gap in [1.0, std::f64::consts::PI] {
            let class = comp
                .report
                .classes
                .iter()
                .find(|c| (c.difference - gap).abs() < 1e-9)
                .expect("gap class exists");
            assert!(class.pairs.len() >= 2, "gap {gap} pairs {:?}", class.pairs);
        }
    }

    #[test]
    fn trivial_second_factor_repeats_the_spectrum() {
        let h1 = HilbertOp::from_real(&[&[0.2, 0.0], &[0.0, 1.7]]).unwrap();
        let h2 = HilbertOp::zeros(3);
        let comp = uncoupled_composite(&h1, &h2, 1e-12).unwrap();
        let mut levels = comp.report.eigenvalues.clone();
        levels.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        assert_eq!(levels, vec![0.2, 1.7]);
    }

    #[test]
    fn forgetting_the_second_factor_intertwines_liouvillians() {
        // Tracing out an uncoupled factor maps the composite Liouvillian
        // onto the factor-1 Liouvillian.
        let sys = harmonic_oscillator(3).unwrap();
        let h2 = HilbertOp::from_real(&[&[0.0, 0.3], &[0.3, 1.0]]).unwrap();
        let comp = uncoupled_composite(&sys.h, &h2, 1e-12).unwrap();
        let l_big = liouvillian_from_h(&comp.h).unwrap();
        let l_small = liouvillian_from_h(&sys.h).unwrap();
        let tr2 = partial_trace_superop((3, 2), TracedFactor::Second);
        let lhs = tr2.dot(&l_big.mat);
        let rhs = l_small.mat.dot(&tr2);
        let dev = (&lhs - &rhs)
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(dev < 1e-12);
    }

    #[test]
    fn ho_liouvillian_spectrum_is_integer_spaced() {
        // All level differences of the oscillator are integers; the
        // degeneracy classes at integer differences are what the ladder
        // superoperators exploit.
        let sys = harmonic_oscillator(6).unwrap();
        let levels: Vec<f64> = (0..6).map(|n| n as f64 + 0.5).collect();
        let report = difference_degeneracies(&levels, 1e-12);
        let class1 = report
            .classes
            .iter()
            .find(|c| (c.difference - 1.0).abs() < 1e-12)
            .unwrap();
        assert_eq!(class1.pairs.len(), 5);

        // The raising superoperator is exactly the sum of transfer maps
        // along that class, weighted by the ladder amplitudes; verify its
        // action is supported on the class pairs alone.
        let (raise, _) = ladder_superops(&sys.a);
        for j in 0..6 {
            for k in 0..6 {
                let mut e = Array2::<C64>::zeros((6, 6));
                e[(j, k)] = C64::new(1.0, 0.0);
                let out = raise.apply(&HilbertOp::new(e).unwrap()).unwrap();
                let expect_zero = j + 1 >= 6 || k + 1 >= 6;
                let norm = out.fro_norm();
                if expect_zero {
                    assert!(norm < 1e-15);
                } else {
                    let mag = ((j + 1) as f64).sqrt() * ((k + 1) as f64).sqrt();
                    assert!((norm - mag).abs() < 1e-12);
                    assert!((out.mat[(j + 1, k + 1)].re - mag).abs() < 1e-12);
                }
            }
        }
    }
}
