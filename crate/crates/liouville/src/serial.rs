//! The JSON configuration schema and serialization helpers used by the
//! command-line front end.
//!
//! A config names exactly one model (the externally tagged [`ModelConfig`]
//! enum makes a second kind or an unknown kind a parse error), carries
//! optional analysis options, and may attach a dissipator and an initial
//! state for evolution runs. Unknown keys are rejected everywhere so that
//! typos fail loudly. Complex numbers cross the boundary as `[re, im]`
//! pairs.

use crate::error::{Error, Result};
use crate::open_system::{
    diagonal_damping, lindblad_superop, rank_one_coupling, require_density, Dissipator,
};
use crate::operators::{HilbertOp, PauliBasis};
use crate::oscillator::{harmonic_oscillator, stark_ladder};
use crate::qubit_set::{build_heff, circuit_to_coefficients, CircuitParams, EffParams};
use crate::superop::SuperOp;
use crate::C64;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const SCHEMA_VERSION: u32 = 1;

/// A full run configuration as read from a JSON file or stdin.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Schema version; must equal [`SCHEMA_VERSION`].
    pub schema: u32,
    pub model: ModelConfig,
    #[serde(default)]
    pub analysis: AnalysisOptions,
    /// Optional dissipative part for evolution runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dissipator: Option<DissipatorConfig>,
    /// Initial state for evolution runs, as Pauli-string expectation
    /// values `<B_a>`; the identity coefficient is fixed by normalization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<BTreeMap<String, f64>>,
}

/// The model being analyzed; exactly one kind per config.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelConfig {
    Effparams(EffParams),
    Circuit(CircuitParams),
    Oscillator(OscillatorConfig),
    Stark(StarkConfig),
    CustomHamiltonian(CustomHamiltonianConfig),
    Classical(ClassicalConfig),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorConfig {
    pub dim: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarkConfig {
    pub dim: usize,
    pub delta: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomHamiltonianConfig {
    /// Row-major complex entries, each as `[re, im]`.
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl CustomHamiltonianConfig {
    pub fn to_operator(&self) -> Result<HilbertOp> {
        let n = self.matrix.len();
        if n == 0 {
            return Err(Error::Config("empty custom Hamiltonian".into()));
        }
        let mut mat = Array2::<C64>::zeros((n, n));
        for (r, row) in self.matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Config(format!(
                    "custom Hamiltonian row {r} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (c, &[re, im]) in row.iter().enumerate() {
                if !re.is_finite() || !im.is_finite() {
                    return Err(Error::Config(format!(
                        "non-finite entry at ({r}, {c})"
                    )));
                }
                mat[(r, c)] = C64::new(re, im);
            }
        }
        HilbertOp::labeled(mat, "H")
    }
}

fn default_max_degree() -> usize {
    6
}

fn default_dilation() -> f64 {
    2.0
}

fn default_start() -> [f64; 2] {
    [0.0, 1.0]
}

/// Damped-oscillator phase-space model.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalConfig {
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub mu: f64,
    /// Polynomial space for the algebra checks.
    #[serde(default = "default_max_degree")]
    pub max_degree: usize,
    /// Dilation factor probed by the scaling-map check.
    #[serde(default = "default_dilation")]
    pub alpha: f64,
    /// Start point `[p0, q0]` for flow trajectories.
    #[serde(default = "default_start")]
    pub start: [f64; 2],
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisOptions {
    /// Numerical tolerance override for checks that accept one.
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    /// Number of random parameter draws for sweep commands.
    pub draws: Option<usize>,
    /// Explicit time grid; mutually exclusive with `time_grid`.
    pub times: Option<Vec<f64>>,
    pub time_grid: Option<TimeGridSpec>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl TimeGridSpec {
    pub fn build(&self) -> Result<Vec<f64>> {
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::Config("time grid endpoints must be finite".into()));
        }
        if self.stop < self.start {
            return Err(Error::Config(format!(
                "time grid runs backwards: [{}, {}]",
                self.start, self.stop
            )));
        }
        if self.points == 0 {
            return Err(Error::Config("time grid needs at least one point".into()));
        }
        if self.points == 1 {
            return Ok(vec![self.start]);
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| self.start + step * i as f64)
            .collect())
    }
}

impl Config {
    /// Parses and version-checks a JSON config.
    pub fn parse(text: &str) -> Result<Config> {
        let config: Config =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if config.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema version {}, expected {}",
                config.schema, SCHEMA_VERSION
            )));
        }
        Ok(config)
    }

    /// The time grid for sweeps: explicit list, linspace spec, or the
    /// default 50 points on [0, 20].
    pub fn time_grid(&self) -> Result<Vec<f64>> {
        match (&self.analysis.times, &self.analysis.time_grid) {
            (Some(_), Some(_)) => Err(Error::Config(
                "give either `times` or `time_grid`, not both".into(),
            )),
            (Some(times), None) => {
                if times.iter().any(|t| !t.is_finite()) {
                    return Err(Error::Config("times must be finite".into()));
                }
                Ok(times.clone())
            }
            (None, Some(spec)) => spec.build(),
            (None, None) => Ok(crate::qubit_set::default_time_grid()),
        }
    }
}

impl ModelConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelConfig::Effparams(_) => "effparams",
            ModelConfig::Circuit(_) => "circuit",
            ModelConfig::Oscillator(_) => "oscillator",
            ModelConfig::Stark(_) => "stark",
            ModelConfig::CustomHamiltonian(_) => "custom-hamiltonian",
            ModelConfig::Classical(_) => "classical",
        }
    }

    /// The two-spin coefficients, when this model has them: direct for
    /// `effparams`, derived for `circuit`, absent otherwise.
    pub fn effective_params(&self) -> Result<Option<EffParams>> {
        match self {
            ModelConfig::Effparams(p) => {
                p.validate()?;
                Ok(Some(*p))
            }
            ModelConfig::Circuit(c) => Ok(Some(circuit_to_coefficients(c)?)),
            _ => Ok(None),
        }
    }

    /// The model's Hamiltonian matrix; the classical model has none.
    pub fn hamiltonian(&self) -> Result<HilbertOp> {
        match self {
            ModelConfig::Effparams(p) => {
                p.validate()?;
                Ok(build_heff(p))
            }
            ModelConfig::Circuit(c) => Ok(build_heff(&circuit_to_coefficients(c)?)),
            ModelConfig::Oscillator(o) => Ok(harmonic_oscillator(o.dim)?.h),
            ModelConfig::Stark(s) => Ok(stark_ladder(s.dim, s.delta)?.h),
            ModelConfig::CustomHamiltonian(c) => c.to_operator(),
            ModelConfig::Classical(_) => Err(Error::PreconditionViolated(
                "the classical model has no Hilbert-space Hamiltonian; use the classical command"
                    .into(),
            )),
        }
    }
}

/// How the dissipative generator is assembled from labeled Pauli strings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DissipatorKind {
    /// Damp each listed coefficient direction at its rate.
    #[default]
    CoefficientDamping,
    /// Use the listed strings as jump operators of a Lindblad dissipator.
    Lindblad,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateTerm {
    pub label: String,
    pub rate: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingTerm {
    pub from: String,
    pub to: String,
    pub strength: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipatorConfig {
    #[serde(default)]
    pub kind: DissipatorKind,
    pub terms: Vec<RateTerm>,
    /// Rank-one coefficient couplings added on top, feeding the `from`
    /// component into the `to` direction.
    #[serde(default)]
    pub cross_couplings: Vec<CouplingTerm>,
}

fn lookup_string(basis: &PauliBasis, label: &str) -> Result<HilbertOp> {
    let idx = basis.index_of_label(label).ok_or_else(|| {
        Error::Config(format!(
            "unknown operator label `{label}` (expected a Pauli string such as `x0`)"
        ))
    })?;
    Ok(basis.elements[idx].clone())
}

impl DissipatorConfig {
    /// Builds the dissipative superoperator on an `n_qubits` register.
    pub fn build(&self, n_qubits: usize) -> Result<SuperOp> {
        if self.terms.is_empty() && self.cross_couplings.is_empty() {
            return Err(Error::Config("dissipator with no terms".into()));
        }
        let basis = PauliBasis::new(n_qubits);
        let identity_label: String = "0".repeat(n_qubits);
        let mut ops = Vec::with_capacity(self.terms.len());
        let mut rates = Vec::with_capacity(self.terms.len());
        for term in &self.terms {
            if term.label == identity_label && self.kind == DissipatorKind::CoefficientDamping {
                return Err(Error::Config(
                    "the identity coefficient cannot be damped without breaking the trace".into(),
                ));
            }
            ops.push(lookup_string(&basis, &term.label)?);
            rates.push(term.rate);
        }
        let mut total = match self.kind {
            DissipatorKind::CoefficientDamping => diagonal_damping(&ops, &rates)?,
            DissipatorKind::Lindblad => lindblad_superop(&Dissipator::new(ops, rates)?)?,
        };
        for coupling in &self.cross_couplings {
            let b_in = lookup_string(&basis, &coupling.from)?;
            let b_out = lookup_string(&basis, &coupling.to)?;
            total = total.plus(&rank_one_coupling(&b_out, &b_in, coupling.strength)?)?;
        }
        Ok(total)
    }
}

/// Builds the density matrix with the given Pauli-string expectation
/// values, `rho = (1 + sum_a c_a B_a) / 2^n`, and verifies it is a state.
pub fn density_from_pauli_coeffs(
    coeffs: &BTreeMap<String, f64>,
    n_qubits: usize,
) -> Result<HilbertOp> {
    let basis = PauliBasis::new(n_qubits);
    let dim = 1usize << n_qubits;
    let identity_label: String = "0".repeat(n_qubits);
    let mut rho = HilbertOp::identity(dim);
    for (label, &value) in coeffs {
        if *label == identity_label {
            return Err(Error::Config(
                "the identity coefficient is fixed by normalization; omit it".into(),
            ));
        }
        let op = lookup_string(&basis, label)?;
        rho = rho.plus(&op.scaled(C64::new(value, 0.0)))?;
    }
    let rho = rho.scaled(C64::new(1.0 / dim as f64, 0.0));
    require_density(&rho, 1e-9)?;
    Ok(rho)
}

/// Row-major `[re, im]` pairs for JSON output.
pub fn complex_rows(m: &Array2<C64>) -> Vec<Vec<[f64; 2]>> {
    m.rows()
        .into_iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

/// Row-major real entries for JSON output.
pub fn real_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows()
        .into_iter()
        .map(|row| row.to_vec())
        .collect()
}
