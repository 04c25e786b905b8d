//! A flux qubit coupled to a single-electron transistor.
//!
//! The effective two-spin Hamiltonian
//!
//! ```text
//! H = alpha sigma_b^x + beta sigma_b^y
//!   + gamma sigma_s^x + delta sigma_s^y + epsilon sigma_s^z
//!   + zeta sigma_b^y sigma_s^z + eta sigma_b^z sigma_s^y
//! ```
//!
//! acts on the qubit (`b`) and SET island (`s`) pseudospins in the product
//! basis of `sigma_b^z (x) sigma_s^z` eigenstates, ordered
//! `(|++>, |+->, |-+>, |-->)`. At zero effective charge offset the `beta`
//! and `epsilon` terms drop out and the four levels come in opposite-sign
//! pairs, so the Liouvillian picks up degenerate level differences and with
//! them symmetries the Hamiltonian does not have: two-thirds of the
//! three-operator correlators vanish identically and the Bloch-coefficient
//! flow splits into decoupled 5- and 10-dimensional blocks.

use crate::error::{Error, Result};
use crate::linalg::{expm, hermitian_eig};
use crate::operators::{commutator, kron, pauli, trace_inner_product, HilbertOp, PauliAxis, PauliBasis};
use crate::superop::{liouvillian_from_h, SuperOp};
use crate::C64;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Coefficients of the effective two-spin Hamiltonian, in units where the
/// typical level splitting is O(1) and hbar = 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub zeta: f64,
    pub eta: f64,
}

impl EffParams {
    pub const ZERO: EffParams = EffParams {
        alpha: 0.0,
        beta: 0.0,
        gamma: 0.0,
        delta: 0.0,
        epsilon: 0.0,
        zeta: 0.0,
        eta: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.alpha,
            self.beta,
            self.gamma,
            self.delta,
            self.epsilon,
            self.zeta,
            self.eta,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidState("non-finite coefficient".into()));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        [
            self.alpha,
            self.beta,
            self.gamma,
            self.delta,
            self.epsilon,
            self.zeta,
            self.eta,
        ]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Whether the qubit-drive and island-bias terms are absent. This is
    /// the zero-effective-charge-offset point where the analytic spectrum
    /// applies and the correlator cancellations hold.
    pub fn is_reduced(&self) -> bool {
        let tol = 1e-12 * self.max_abs().max(1.0);
        self.beta.abs() <= tol && self.epsilon.abs() <= tol
    }

    fn require_reduced(&self, what: &str) -> Result<()> {
        if self.is_reduced() {
            Ok(())
        } else {
            Err(Error::PreconditionViolated(format!(
                "{what} requires beta = epsilon = 0 (zero effective charge offset); \
                 got beta = {:.3e}, epsilon = {:.3e}. The weaker product condition \
                 beta*epsilon*zeta = 0 admits further analytic branches that are \
                 not implemented; use the numeric eigensolver for such points",
                self.beta, self.epsilon
            )))
        }
    }
}

/// Raw circuit parameters of the qubit--SET device: junction couplings,
/// capacitances, gate voltage, and charge offsets in mutually consistent
/// units (the caller's responsibility).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitParams {
    /// Island tunneling amplitude.
    pub tunneling: f64,
    /// Josephson coupling of junction 1.
    pub e1: f64,
    /// Josephson coupling of junction 2.
    pub e2: f64,
    /// Phase across junction 1 (radians).
    pub phi0: f64,
    /// External phase across junction 2 (radians).
    pub phie: f64,
    pub c1: f64,
    pub c2: f64,
    pub cb: f64,
    pub cg: f64,
    /// Gate voltage.
    pub vg: f64,
    /// Static charge offset.
    pub q0: f64,
    /// Transition dipole charge of the qubit.
    pub q: f64,
    /// Electron charge in the same units as the offsets.
    pub e: f64,
}

impl CircuitParams {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.tunneling,
            self.e1,
            self.e2,
            self.phi0,
            self.phie,
            self.c1,
            self.c2,
            self.cb,
            self.cg,
            self.vg,
            self.q0,
            self.q,
            self.e,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidState("non-finite circuit parameter".into()));
        }
        if !(self.cb > 0.0) {
            return Err(Error::PreconditionViolated(format!(
                "qubit capacitance must be positive, got cb = {}",
                self.cb
            )));
        }
        if !(self.c1 + self.c2 + self.cg > 0.0) {
            return Err(Error::PreconditionViolated(format!(
                "total island capacitance must be positive, got {}",
                self.c1 + self.c2 + self.cg
            )));
        }
        Ok(())
    }

    /// The effective charge offset `Q0 + e + Cg Vg`; the reduced parameter
    /// point (`beta = epsilon = 0`) is exactly its zero.
    pub fn effective_charge_offset(&self) -> f64 {
        self.q0 + self.e + self.cg * self.vg
    }
}

/// Reduces the circuit description to the seven two-spin coefficients.
pub fn circuit_to_coefficients(c: &CircuitParams) -> Result<EffParams> {
    c.validate()?;
    let c_sigma = c.c1 + c.c2 + c.cg;
    let q_tilde = c.effective_charge_offset();
    Ok(EffParams {
        alpha: -c.tunneling,
        beta: c.c1 * c.q * q_tilde / (c.cb * c_sigma),
        gamma: -(c.e1 * c.phi0.cos() + c.e2 * c.phie.cos()) / 2.0,
        delta: -c.e2 * c.phie.sin() / 2.0,
        epsilon: c.e * q_tilde / c_sigma,
        zeta: c.c1 * c.q * c.e / (c.cb * c_sigma),
        eta: -c.e1 * c.phi0.sin() / 2.0,
    })
}

/// Pauli string `sigma_b^a (x) 1` acting on the qubit factor.
pub fn sigma_b(axis: PauliAxis) -> HilbertOp {
    kron(&pauli(axis), &HilbertOp::identity(2))
}

/// Pauli string `1 (x) sigma_s^a` acting on the SET factor.
pub fn sigma_s(axis: PauliAxis) -> HilbertOp {
    kron(&HilbertOp::identity(2), &pauli(axis))
}

/// Product string `sigma_b^a (x) sigma_s^b`.
pub fn sigma_bs(b: PauliAxis, s: PauliAxis) -> HilbertOp {
    kron(&pauli(b), &pauli(s))
}

/// The effective Hamiltonian as a 4x4 Hermitian matrix.
pub fn build_heff(p: &EffParams) -> HilbertOp {
    let terms = [
        (p.alpha, PauliAxis::X, PauliAxis::I),
        (p.beta, PauliAxis::Y, PauliAxis::I),
        (p.gamma, PauliAxis::I, PauliAxis::X),
        (p.delta, PauliAxis::I, PauliAxis::Y),
        (p.epsilon, PauliAxis::I, PauliAxis::Z),
        (p.zeta, PauliAxis::Y, PauliAxis::Z),
        (p.eta, PauliAxis::Z, PauliAxis::Y),
    ];
    let mut mat = Array2::<C64>::zeros((4, 4));
    for (coeff, b, s) in terms {
        if coeff != 0.0 {
            mat = mat + sigma_bs(b, s).mat.mapv(|z| z * coeff);
        }
    }
    HilbertOp {
        mat,
        label: Some("H_eff".into()),
    }
}

/// Closed-form spectrum at the reduced parameter point, sorted ascending:
/// `(-w_+, -w_-, w_-, w_+)` with
/// `w^2 = s +- 2 sqrt((alpha gamma + zeta eta)^2 + delta^2 (alpha^2 + eta^2))`
/// and `s = alpha^2 + gamma^2 + delta^2 + zeta^2 + eta^2`.
pub fn analytic_spectrum(p: &EffParams) -> Result<[f64; 4]> {
    p.validate()?;
    p.require_reduced("the analytic spectrum")?;
    let EffParams {
        alpha,
        gamma,
        delta,
        zeta,
        eta,
        ..
    } = *p;
    let s = alpha * alpha + gamma * gamma + delta * delta + zeta * zeta + eta * eta;
    let rad = ((alpha * gamma + zeta * eta).powi(2) + delta * delta * (alpha * alpha + eta * eta))
        .sqrt();
    let w_plus = (s + 2.0 * rad).max(0.0).sqrt();
    let w_minus = (s - 2.0 * rad).max(0.0).sqrt();
    Ok([-w_plus, -w_minus, w_minus, w_plus])
}

/// One closed-form eigenstate: unnormalized amplitudes in the
/// `(|++>, |+->, |-+>, |-->)` basis plus the closed-form squared norm.
#[derive(Clone, Debug)]
pub struct AnalyticEigenstate {
    pub omega: f64,
    pub vector: [C64; 4],
    pub norm_sq: f64,
}

/// Closed-form eigenvectors at the reduced point, ordered like
/// [`analytic_spectrum`].
///
/// With `u = 2(alpha gamma + zeta eta - i alpha delta)` and
/// `w_n = omega_n^2 - (alpha^2 + gamma^2 + (delta+eta)^2 + zeta^2)` the
/// state of frequency `omega_n` is
///
/// ```text
/// |n> = ( u omega_n,
///         u (gamma + i(eta+delta)) + w_n (alpha + i zeta),
///         u (alpha + i zeta)       + w_n (gamma + i(eta-delta)),
///         w_n omega_n )
/// ```
///
/// with squared norm `<n|n> = 4 omega_n^2 w_n (w_n + 2 delta eta)`.
/// Parameter points where any `omega_n`, `w_n`, or `w_n + 2 delta eta`
/// vanishes make the formula degenerate and are rejected; the numeric
/// eigensolver covers them. Each returned vector is self-checked against
/// the eigenvalue equation.
pub fn analytic_eigenvectors(p: &EffParams) -> Result<[AnalyticEigenstate; 4]> {
    let spectrum = analytic_spectrum(p)?;
    let EffParams {
        alpha,
        gamma,
        delta,
        zeta,
        eta,
        ..
    } = *p;
    let s = alpha * alpha + gamma * gamma + delta * delta + zeta * zeta + eta * eta;
    let tol_w = 1e-10 * s.max(1e-300).sqrt();
    let tol_w2 = 1e-10 * s.max(1e-300);

    let corner = alpha * alpha + gamma * gamma + (delta + eta).powi(2) + zeta * zeta;
    let u = C64::new(2.0 * (alpha * gamma + zeta * eta), -2.0 * alpha * delta);
    let h = build_heff(p);

    let mut states: Vec<AnalyticEigenstate> = Vec::with_capacity(4);
    for &omega in &spectrum {
        if omega.abs() <= tol_w {
            return Err(Error::DegenerateParameters(format!(
                "eigenfrequency {omega:.3e} too close to zero for the closed-form eigenvectors"
            )));
        }
        let w = omega * omega - corner;
        if w.abs() <= tol_w2 || (w + 2.0 * delta * eta).abs() <= tol_w2 {
            return Err(Error::DegenerateParameters(format!(
                "norm factor vanishes at omega = {omega:.6}; the closed-form eigenvector \
                 is 0/0 here, use the numeric eigensolver"
            )));
        }
        let vector = [
            u * omega,
            u * C64::new(gamma, eta + delta) + C64::new(alpha, zeta) * w,
            u * C64::new(alpha, zeta) + C64::new(gamma, eta - delta) * w,
            C64::new(w * omega, 0.0),
        ];
        let norm_sq = 4.0 * omega * omega * w * (w + 2.0 * delta * eta);
        if !(norm_sq > 0.0) {
            return Err(Error::DegenerateParameters(format!(
                "closed-form squared norm {norm_sq:.3e} is not positive at omega = {omega:.6}"
            )));
        }

        // Self-check the eigenvalue equation; a failure here means the
        // parameter point slipped past the degeneracy guards.
        let mut residual_sq = 0.0f64;
        let mut norm_direct = 0.0f64;
        for r in 0..4 {
            let mut hv = C64::new(0.0, 0.0);
            for c in 0..4 {
                hv += h.mat[(r, c)] * vector[c];
            }
            residual_sq += (hv - vector[r] * omega).norm_sqr();
            norm_direct += vector[r].norm_sqr();
        }
        let vnorm = norm_direct.sqrt();
        if residual_sq.sqrt() > 1e-9 * vnorm {
            return Err(Error::SelfCheckFailed(format!(
                "closed-form eigenvector residual {:.3e} exceeds 1e-9 relative at omega = {omega:.6}",
                residual_sq.sqrt() / vnorm
            )));
        }
        states.push(AnalyticEigenstate {
            omega,
            vector,
            norm_sq,
        });
    }
    Ok([
        states[0].clone(),
        states[1].clone(),
        states[2].clone(),
        states[3].clone(),
    ])
}

/// Sign of a Pauli axis under conjugation by `sigma^z (x) sigma^z`:
/// `+1` for `{1, sigma^z}`, `-1` for `{sigma^x, sigma^y}`.
pub fn axis_parity(axis: PauliAxis) -> i32 {
    axis.z_parity()
}

/// A three-operator correlator `f(t) = Tr{sigma_b^j(t) sigma_b^k sigma_s^l}`.
///
/// The first axis acts on the qubit at time `t`; the other two form the
/// fixed probe `sigma_b^k (x) sigma_s^l`. The product of the three parities
/// under `sigma^z`-conjugation decides whether the signal is a pure cosine
/// or pure sine series at the reduced parameter point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CorrelatorSpec {
    pub j: PauliAxis,
    pub k: PauliAxis,
    pub l: PauliAxis,
}

impl CorrelatorSpec {
    /// `j` must be a genuine Pauli axis (an identity there makes the
    /// correlator a constant trace, not a dynamical signal).
    pub fn new(j: PauliAxis, k: PauliAxis, l: PauliAxis) -> Result<Self> {
        if j == PauliAxis::I {
            return Err(Error::InvalidState(
                "the evolved factor of a correlator must be x, y, or z".into(),
            ));
        }
        Ok(Self { j, k, l })
    }

    pub fn parity_product(&self) -> i32 {
        axis_parity(self.j) * axis_parity(self.k) * axis_parity(self.l)
    }

    pub fn label(&self) -> String {
        format!(
            "{}{}{}",
            self.j.as_char(),
            self.k.as_char(),
            self.l.as_char()
        )
    }

    /// Parses labels like `"xy0"` or `"x,y,0"`.
    pub fn parse(text: &str) -> Result<Self> {
        let chars: Vec<char> = text.chars().filter(|c| *c != ',' && !c.is_whitespace()).collect();
        if chars.len() != 3 {
            return Err(Error::InvalidState(format!(
                "correlator spec needs exactly three axes, got {text:?}"
            )));
        }
        let axes: Vec<PauliAxis> = chars
            .iter()
            .map(|&c| {
                PauliAxis::from_char(c).ok_or_else(|| {
                    Error::InvalidState(format!("unknown Pauli axis {c:?} in {text:?}"))
                })
            })
            .collect::<Result<_>>()?;
        Self::new(axes[0], axes[1], axes[2])
    }

    /// All 45 dynamical triples: `j` over the three qubit axes, `(k,l)`
    /// over the 15 non-trivial probe strings (the pure-trace probe `00`
    /// is excluded since `f_{j00}` is identically zero).
    pub fn all_nontrivial() -> Vec<CorrelatorSpec> {
        let mut out = Vec::with_capacity(45);
        for &j in &[PauliAxis::X, PauliAxis::Y, PauliAxis::Z] {
            for &k in &PauliAxis::ALL {
                for &l in &PauliAxis::ALL {
                    if k == PauliAxis::I && l == PauliAxis::I {
                        continue;
                    }
                    out.push(CorrelatorSpec { j, k, l });
                }
            }
        }
        out
    }
}

/// The 25 triples whose correlators vanish identically at the reduced
/// parameter point (for generic coefficients): the parity selection kills
/// each one either through the sine branch at coincident frequencies or
/// through the matrix-element structure of the paired levels.
pub fn reduced_vanishing_triples() -> Vec<CorrelatorSpec> {
    let x = PauliAxis::X;
    let y = PauliAxis::Y;
    let z = PauliAxis::Z;
    let i = PauliAxis::I;
    let mut out = Vec::with_capacity(25);
    // Ten probe strings vanish for each of j = y and j = z...
    for &j in &[y, z] {
        for &(k, l) in &[
            (x, i),
            (y, x),
            (y, y),
            (y, z),
            (z, x),
            (z, y),
            (z, z),
            (i, x),
            (i, y),
            (i, z),
        ] {
            out.push(CorrelatorSpec { j, k, l });
        }
    }
    // ...and five more for j = x.
    for &(k, l) in &[(y, i), (z, i), (x, x), (x, y), (x, z)] {
        out.push(CorrelatorSpec { j: x, k, l });
    }
    out
}

fn probe_op(spec: &CorrelatorSpec) -> HilbertOp {
    sigma_bs(spec.k, spec.l)
}

/// Correlator from the closed-form eigensystem (reduced point only).
///
/// Expanding in unnormalized eigenvectors `|n>` with closed-form norms
/// `N_n` gives
/// `f(t) = sum_nm Re[z_nm] cos(w_mn t) + Im[z_nm] sin(w_mn t)` with
/// `z_nm = <n|sigma_b^j|m><m|sigma_b^k sigma_s^l|n> / (N_n N_m)` and
/// `w_mn = w_m - w_n`; the parity product selects the surviving branch.
pub fn correlator_analytic(
    p: &EffParams,
    spec: &CorrelatorSpec,
    times: &[f64],
) -> Result<Vec<f64>> {
    let states = analytic_eigenvectors(p)?;
    let a_j = sigma_b(spec.j);
    let b_kl = probe_op(spec);

    // Matrix elements between unnormalized states.
    let elem = |op: &HilbertOp, n: &AnalyticEigenstate, m: &AnalyticEigenstate| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..4 {
            let mut row = C64::new(0.0, 0.0);
            for c in 0..4 {
                row += op.mat[(r, c)] * m.vector[c];
            }
            acc += n.vector[r].conj() * row;
        }
        acc
    };

    let mut weights: Vec<(f64, f64, f64)> = Vec::with_capacity(16);
    for n in &states {
        for m in &states {
            let z = elem(&a_j, n, m) * elem(&b_kl, m, n) / (n.norm_sq * m.norm_sq);
            weights.push((z.re, z.im, m.omega - n.omega));
        }
    }

    let cos_branch = spec.parity_product() > 0;
    let values = times
        .iter()
        .map(|&t| {
            weights
                .iter()
                .map(|&(re, im, w)| {
                    if cos_branch {
                        re * (w * t).cos()
                    } else {
                        im * (w * t).sin()
                    }
                })
                .sum()
        })
        .collect();
    Ok(values)
}

/// Correlator by direct Heisenberg evolution, valid for any Hermitian `h`:
/// `f(t) = Tr{ e^{iht} sigma_b^j e^{-iht} sigma_b^k (x) sigma_s^l }`.
pub fn correlator_numeric(h: &HilbertOp, spec: &CorrelatorSpec, times: &[f64]) -> Result<Vec<f64>> {
    Ok(correlators_numeric(h, std::slice::from_ref(spec), times)?
        .pop()
        .expect("one spec in, one series out"))
}

/// Heisenberg-evolution correlators for a batch of triples on a shared
/// time grid. The propagator `e^{iht}` is built once per time point (its
/// inverse is the conjugate transpose) and reused across all triples, so
/// sweeping the full 45-triple family costs barely more than one triple.
pub fn correlators_numeric(
    h: &HilbertOp,
    specs: &[CorrelatorSpec],
    times: &[f64],
) -> Result<Vec<Vec<f64>>> {
    h.require_hermitian()?;
    if h.dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "two-spin correlators need a 4x4 Hamiltonian, got {}x{}",
            h.dim(),
            h.dim()
        )));
    }
    let ih = h.mat.mapv(|z| z * C64::new(0.0, 1.0));
    let axes = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];
    let probes: Vec<Array2<C64>> = specs.iter().map(|s| probe_op(s).mat).collect();
    let mut out = vec![Vec::with_capacity(times.len()); specs.len()];
    for &t in times {
        let u = expm(&ih, t);
        let u_dag = u.t().mapv(|z| z.conj());
        let evolved: Vec<Array2<C64>> = axes
            .iter()
            .map(|&j| u.dot(&sigma_b(j).mat).dot(&u_dag))
            .collect();
        for (i, spec) in specs.iter().enumerate() {
            let a_t = &evolved[axes.iter().position(|&j| j == spec.j).expect("j is x, y, or z")];
            let mut tr = C64::new(0.0, 0.0);
            for r in 0..4 {
                for c in 0..4 {
                    tr += a_t[(r, c)] * probes[i][(c, r)];
                }
            }
            out[i].push(tr.re);
        }
    }
    Ok(out)
}

/// Outcome of sweeping all 45 dynamical correlators over a time grid.
#[derive(Clone, Debug)]
pub struct CancellationReport {
    pub tol: f64,
    /// Every triple with the largest `|f|` seen on the grid, in the
    /// deterministic order of [`CorrelatorSpec::all_nontrivial`].
    pub entries: Vec<(CorrelatorSpec, f64)>,
    pub vanishing: Vec<CorrelatorSpec>,
    pub nonvanishing: Vec<CorrelatorSpec>,
}

/// Default time grid for cancellation sweeps: 50 uniform points on [0, 20]
/// in inverse-energy units.
pub fn default_time_grid() -> Vec<f64> {
    (0..50).map(|i| 20.0 * i as f64 / 49.0).collect()
}

/// Classifies all 45 dynamical triples by the largest `|f(t)|` on the time
/// grid, via the Heisenberg-evolution route (so arbitrary `beta`, `epsilon`
/// are allowed).
pub fn cancellation_report(p: &EffParams, times: &[f64], tol: f64) -> Result<CancellationReport> {
    p.validate()?;
    let h = build_heff(p);
    let specs = CorrelatorSpec::all_nontrivial();
    let series = correlators_numeric(&h, &specs, times)?;
    let mut entries = Vec::with_capacity(45);
    let mut vanishing = Vec::new();
    let mut nonvanishing = Vec::new();
    for (spec, vals) in specs.into_iter().zip(series) {
        let max_abs = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        entries.push((spec, max_abs));
        if max_abs <= tol {
            vanishing.push(spec);
        } else {
            nonvanishing.push(spec);
        }
    }
    Ok(CancellationReport {
        tol,
        entries,
        vanishing,
        nonvanishing,
    })
}

/// Bloch-coefficient labels in the conventional reporting order: the five
/// coefficients that close among themselves at the reduced point come
/// first, then the remaining ten.
pub const BLOCH_LABELS: [&str; 15] = [
    "y0", "z0", "xx", "xy", "xz", "x0", "yx", "yy", "yz", "zx", "zy", "zz", "0x", "0y", "0z",
];

/// The generator of the Bloch-coefficient flow.
#[derive(Clone, Debug)]
pub struct BlochLiouvillian {
    /// Real 15x15 matrix `M` with `d_t c = M c` for the coefficient vector
    /// `c` ordered by [`BLOCH_LABELS`].
    pub mat: Array2<f64>,
    pub labels: Vec<String>,
}

/// Projects the flow `d_t rho = i[rho, H]` onto Pauli coefficients
/// `rho_a = <B_a, rho>/4` and orders the 15 traceless coefficients by
/// [`BLOCH_LABELS`]. The result is real and antisymmetric.
///
/// Internally the matrix is assembled in lexicographic string order and
/// permuted once at the end, so the reported layout is independent of the
/// computation order.
pub fn bloch_liouvillian(p: &EffParams) -> BlochLiouvillian {
    let h = build_heff(p);
    let basis = PauliBasis::new(2);
    // Lexicographic traceless strings: indices 1..16 of the Pauli basis.
    let mut m_lex = Array2::<f64>::zeros((15, 15));
    for a in 1..16 {
        let flow = commutator(&basis.elements[a], &h)
            .expect("fixed 4x4 dims")
            .scaled(C64::new(0.0, 1.0));
        for b in 1..16 {
            let coeff = trace_inner_product(&basis.elements[b], &flow).expect("fixed dims") / 4.0;
            debug_assert!(coeff.im.abs() < 1e-12, "Bloch generator must be real");
            m_lex[(b - 1, a - 1)] = coeff.re;
        }
    }
    let perm: Vec<usize> = BLOCH_LABELS
        .iter()
        .map(|lab| basis.index_of_label(lab).expect("known label") - 1)
        .collect();
    let mut mat = Array2::<f64>::zeros((15, 15));
    for r in 0..15 {
        for c in 0..15 {
            mat[(r, c)] = m_lex[(perm[r], perm[c])];
        }
    }
    BlochLiouvillian {
        mat,
        labels: BLOCH_LABELS.iter().map(|s| s.to_string()).collect(),
    }
}

/// The projector onto the self-closing coefficient block (plus the trace
/// sector), built from the two partial projections
/// `P_b^x(rho) = sigma_b^x (x) Tr_b{sigma_b^x rho} / 2` and
/// `P_s^0(rho) = Tr_s{rho} (x) 1_s / 2` as `(P_b^x - P_s^0)^2`.
///
/// On a Pauli string `sigma_b^a (x) sigma_s^b` the composite acts by the
/// coefficient `delta_{a,x} + delta_{b,0} - 2 delta_{a,x} delta_{b,0}`, so
/// it fixes exactly `{00, y0, z0, xx, xy, xz}` and annihilates the other
/// ten strings (including `x0`). It needs no model parameters; it commutes
/// with the Liouvillian exactly when the qubit drive is absent.
pub fn block_projector() -> SuperOp {
    let basis = PauliBasis::new(2);
    let quarter = C64::new(0.25, 0.0);
    let mut pbx = Array2::<C64>::zeros((16, 16));
    let mut ps0 = Array2::<C64>::zeros((16, 16));
    for &k in &PauliAxis::ALL {
        let b = crate::superop::vec_op(&basis.element(&[PauliAxis::X, k]).mat);
        for r in 0..16 {
            for c in 0..16 {
                pbx[(r, c)] += b[r] * b[c].conj() * quarter;
            }
        }
        let s = crate::superop::vec_op(&basis.element(&[k, PauliAxis::I]).mat);
        for r in 0..16 {
            for c in 0..16 {
                ps0[(r, c)] += s[r] * s[c].conj() * quarter;
            }
        }
    }
    let diff = &pbx - &ps0;
    let mat = diff.dot(&diff);
    SuperOp {
        hdim: 4,
        mat,
        label: Some("P_block".into()),
    }
}

/// The conserved operator of the reduced model that deforms the island
/// charge conjugation:
/// `A = delta eta sigma_b^z + (alpha gamma + zeta eta) sigma_b^x sigma_s^x
///      + alpha delta sigma_b^x sigma_s^y`.
/// Commutes with the Hamiltonian exactly when `beta = epsilon = 0`.
pub fn deformed_charge_conjugation(p: &EffParams) -> HilbertOp {
    let mut mat = Array2::<C64>::zeros((4, 4));
    mat = mat + sigma_bs(PauliAxis::Z, PauliAxis::I)
        .mat
        .mapv(|z| z * (p.delta * p.eta));
    mat = mat
        + sigma_bs(PauliAxis::X, PauliAxis::X)
            .mat
            .mapv(|z| z * (p.alpha * p.gamma + p.zeta * p.eta));
    mat = mat + sigma_bs(PauliAxis::X, PauliAxis::Y)
        .mat
        .mapv(|z| z * (p.alpha * p.delta));
    HilbertOp { mat, label: None }
}

/// Evolves the product state
/// `rho(0) = (1 + r cos(theta) sigma_b^y + r sin(theta) sigma_b^z)/2 (x) rho_s`
/// and returns the qubit Bloch components `(Tr{sigma_b^y rho(t)},
/// Tr{sigma_b^z rho(t)})` on the time grid.
///
/// When the qubit drive is absent the marginal dynamics closes on the
/// 5-coefficient block and the result is independent of the island state
/// `rho_s`; with a drive the island back-acts and the dependence returns.
pub fn qubit_marginal_trajectory(
    p: &EffParams,
    r: f64,
    theta: f64,
    rho_s: &HilbertOp,
    times: &[f64],
) -> Result<Vec<(f64, f64)>> {
    p.validate()?;
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidState(format!(
            "Bloch radius must lie in [0,1], got {r}"
        )));
    }
    if rho_s.dim() != 2 {
        return Err(Error::DimensionMismatch(
            "island state must be 2x2".into(),
        ));
    }
    crate::open_system::require_density(rho_s, 1e-10)?;

    let qubit = HilbertOp::identity(2)
        .plus(&pauli(PauliAxis::Y).scaled(C64::new(r * theta.cos(), 0.0)))?
        .plus(&pauli(PauliAxis::Z).scaled(C64::new(r * theta.sin(), 0.0)))?
        .scaled(C64::new(0.5, 0.0));
    let rho0 = kron(&qubit, rho_s);

    let l = liouvillian_from_h(&build_heff(p))?;
    let sy = sigma_b(PauliAxis::Y);
    let sz = sigma_b(PauliAxis::Z);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let rho_t = l.exp(t).apply(&rho0)?;
        let y = trace_inner_product(&sy, &rho_t)?;
        let z = trace_inner_product(&sz, &rho_t)?;
        out.push((y.re, z.re));
    }
    Ok(out)
}

/// Convenience wrapper building the Liouvillian superoperator of the
/// effective Hamiltonian.
pub fn liouvillian(p: &EffParams) -> Result<SuperOp> {
    liouvillian_from_h(&build_heff(p))
}

/// Promotes the Bloch generator into the vectorized superoperator picture:
/// returns `B M B^{-1}` where `B` maps Bloch coefficients (plus the trace
/// coefficient) to vectorized operators. Used to compare the two
/// representations and to inject Bloch-diagonal dissipators.
pub fn bloch_to_vectorized(bloch: &Array2<f64>) -> SuperOp {
    assert_eq!(bloch.nrows(), 15);
    assert_eq!(bloch.ncols(), 15);
    let basis = PauliBasis::new(2);
    // Columns of b: vec(B_a) for the identity string then the 15 labels.
    let mut b = Array2::<C64>::zeros((16, 16));
    let mut order: Vec<usize> = vec![0];
    for lab in BLOCH_LABELS {
        order.push(basis.index_of_label(lab).expect("known label"));
    }
    for (col, &a) in order.iter().enumerate() {
        let v = crate::superop::vec_op(&basis.elements[a].mat);
        for r in 0..16 {
            b[(r, col)] = v[r];
        }
    }
    // The Pauli strings are orthogonal with <B_a,B_b> = 4 delta_ab, so
    // b^{-1} = b^dag / 4.
    let mut big = Array2::<C64>::zeros((16, 16));
    for r in 0..15 {
        for c in 0..15 {
            big[(r + 1, c + 1)] = C64::new(bloch[(r, c)], 0.0);
        }
    }
    let b_dag = b.t().mapv(|z| z.conj());
    let mat = b.dot(&big).dot(&b_dag).mapv(|z| z / 4.0);
    SuperOp {
        hdim: 4,
        mat,
        label: None,
    }
}

/// Spectrum check helper: the eigenvalues of the full Hamiltonian by the
/// generic Hermitian eigensolver, ascending.
pub fn numeric_spectrum(p: &EffParams) -> Result<Vec<f64>> {
    let (vals, _) = hermitian_eig(&build_heff(p))?;
    Ok(vals)
}
