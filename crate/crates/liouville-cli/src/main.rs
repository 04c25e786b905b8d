//! `liouville`: command-line front end for the superoperator toolkit.
//!
//! Every subcommand reads one JSON config (a file path via `--config`, or
//! stdin when the path is `-`), runs a self-contained analysis, and writes
//! one JSON report to stdout (or `--out`). Reports are deterministic: the
//! same config and flags produce byte-identical output, including across
//! `--jobs` settings, because random sweeps derive one RNG per draw from
//! the base seed and draw index.
//!
//! Exit codes: 0 success, 2 config or usage error, 3 violated precondition
//! (a structurally valid request the model cannot satisfy), 4 numerical
//! self-check failure.
//!
//! CSV side outputs (`--csv`) print floats with 17 significant digits so
//! values parse back to the exact same `f64`; JSON reports rely on
//! serde_json's shortest round-trip encoding for the same guarantee.

use clap::{Parser, Subcommand, ValueEnum};
use liouville::classical::{
    damped_eigenfrequencies, damped_liouvillian, flow_trajectory, scaling_generator,
    scaling_map_symmetry_check,
};
use liouville::linalg::hermitian_eig;
use liouville::open_system::{dfls_scan, evolve, BlockDflsReport};
use liouville::operators::trace_inner_product;
use liouville::qubit_set::{
    analytic_spectrum, bloch_liouvillian, build_heff, cancellation_report, correlators_numeric,
    CorrelatorSpec, EffParams,
};
use liouville::serial::{complex_rows, density_from_pauli_coeffs, real_rows, Config, ModelConfig};
use liouville::superop::liouvillian_from_h;
use liouville::symmetry::{block_decompose, block_decompose_real, difference_degeneracies};
use liouville::{Error, HilbertOp, PauliBasis, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

/// Grouping tolerance for level-difference degeneracy classes.
const DEGENERACY_TOL: f64 = 1e-9;
/// Split between "vanishing" and "surviving" correlator amplitudes.
const CANCELLATION_TOL: f64 = 1e-10;
/// Residual cap for decoherence-free block scans.
const DFLS_TOL: f64 = 1e-10;
/// Evolved states must stay this close to unit trace and Hermiticity.
const SELF_CHECK_TOL: f64 = 1e-8;

#[derive(Parser)]
#[command(
    name = "liouville",
    version,
    about = "Superoperator spectra, symmetry blocks, correlators, and classical flows"
)]
struct Cli {
    /// JSON config: a file path, or "-" to read stdin.
    #[arg(long, global = true, default_value = "-")]
    config: String,

    /// Write the JSON report to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the config's RNG seed for random sweeps.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config's numerical tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Worker threads for independent parameter draws. Only sweeps
    /// parallelize; single-point analyses ignore this.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy levels, level-difference degeneracies, and closed-form agreement.
    Spectrum {
        /// Sweep this many random reduced-point draws, comparing the
        /// closed-form spectrum against the dense eigensolver on each.
        #[arg(long)]
        draws: Option<usize>,

        /// Insist on the closed-form route; fail if it does not apply.
        #[arg(long)]
        analytic: bool,
    },

    /// Dump the generator matrix and its symmetry block structure.
    Liouvillian {
        /// Operator basis for the dump.
        #[arg(long, value_enum, default_value_t = BasisArg::Pauli)]
        basis: BasisArg,
    },

    /// Heisenberg three-operator correlators on a time grid.
    Correlators {
        /// Sweep all 45 dynamical triples and report which amplitudes
        /// cancel (this is the default selection).
        #[arg(long, conflicts_with = "jkl")]
        all: bool,

        /// Single triple, e.g. "y,x,0" or "yx0".
        #[arg(long)]
        jkl: Option<String>,

        /// Also write the series as CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },

    /// Propagate a density matrix and track its Pauli coefficients.
    Evolve {
        /// Initial state as Pauli coefficients, e.g. "y0=0.4,z0=0.3";
        /// overrides the config's rho0.
        #[arg(long)]
        rho0: Option<String>,

        /// Also write the coefficient trajectories as CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },

    /// Classical phase-space analyses (needs a classical model).
    #[command(subcommand)]
    Classical(ClassicalCommand),
}

#[derive(Subcommand)]
enum ClassicalCommand {
    /// Integrate the damped flow and report its eigenfrequencies.
    Flow {
        /// Also write the trajectory as CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },

    /// Symmetry checks for the polynomial generator algebra.
    Algebra,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    /// Real Bloch representation over Pauli strings (two-spin models).
    Pauli,
    /// Column-stacked matrix units, for any finite Hamiltonian.
    Vectorized,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::SelfCheckFailed(_)
                | Error::NoConvergence { .. }
                | Error::StepSizeFailure { .. } => 4,
                _ => 3,
            })
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    if cli.jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let mut config = load_config(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.analysis.seed = Some(seed);
    }
    if let Some(tol) = cli.tol {
        if !tol.is_finite() || tol <= 0.0 {
            return Err(Error::Config(format!(
                "--tol must be positive and finite, got {tol}"
            )));
        }
        config.analysis.tol = Some(tol);
    }
    let report = match &cli.command {
        Command::Spectrum { draws, analytic } => {
            cmd_spectrum(&config, *draws, *analytic, cli.jobs)?
        }
        Command::Liouvillian { basis } => cmd_liouvillian(&config, *basis)?,
        Command::Correlators { all: _, jkl, csv } => {
            cmd_correlators(&config, jkl.as_deref(), csv.as_deref())?
        }
        Command::Evolve { rho0, csv } => cmd_evolve(&config, rho0.as_deref(), csv.as_deref())?,
        Command::Classical(ClassicalCommand::Flow { csv }) => cmd_flow(&config, csv.as_deref())?,
        Command::Classical(ClassicalCommand::Algebra) => cmd_algebra(&config)?,
    };
    emit(&report, cli.out.as_deref())
}

fn load_config(source: &str) -> Result<Config> {
    let text = if source == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Error::Config(format!("cannot read config from stdin: {e}")))?;
        buf
    } else {
        std::fs::read_to_string(source)
            .map_err(|e| Error::Config(format!("cannot read config file {source}: {e}")))?
    };
    Config::parse(&text)
}

fn emit(report: &Value, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report).map_err(encode_err)?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn encode_err(e: serde_json::Error) -> Error {
    Error::Config(format!("cannot encode report: {e}"))
}

/// 17 significant digits: enough for `f64` round trips through text.
fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(path: &Path, header: &[String], times: &[f64], rows: &[Vec<f64>]) -> Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for (t, row) in times.iter().zip(rows) {
        text.push_str(&sig17(*t));
        for v in row {
            text.push(',');
            text.push_str(&sig17(*v));
        }
        text.push('\n');
    }
    std::fs::write(path, text)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn cmd_spectrum(config: &Config, draws: Option<usize>, analytic: bool, jobs: usize) -> Result<Value> {
    let tol = config.analysis.tol.unwrap_or(DEGENERACY_TOL);
    let h = config.model.hamiltonian()?;
    let (levels, _) = hermitian_eig(&h)?;
    let degeneracies = difference_degeneracies(&levels, tol);
    let params = config.model.effective_params()?;

    if analytic {
        let Some(p) = &params else {
            return Err(Error::PreconditionViolated(
                "the closed-form spectrum needs a two-spin coupling model".into(),
            ));
        };
        if !p.is_reduced() {
            return Err(Error::PreconditionViolated(format!(
                "the closed-form spectrum needs beta = epsilon = 0, got beta = {}, epsilon = {}",
                p.beta, p.epsilon
            )));
        }
    }

    let mut report = json!({
        "command": "spectrum",
        "model": config.model.kind(),
        "levels": levels,
        "degeneracies": serde_json::to_value(&degeneracies).map_err(encode_err)?,
    });

    if let Some(p) = &params {
        report["parameters"] = serde_json::to_value(p).map_err(encode_err)?;
        if p.is_reduced() {
            let closed_form = analytic_spectrum(p)?;
            let worst = levels
                .iter()
                .zip(closed_form.iter())
                .map(|(n, a)| (n - a).abs())
                .fold(0.0_f64, f64::max);
            report["analytic"] = json!({
                "levels": closed_form.to_vec(),
                "max_deviation": worst,
                "within_tol": worst <= tol,
            });
        }
    }

    if let Some(n) = draws.or(config.analysis.draws) {
        let base_seed = config.analysis.seed.unwrap_or(0);
        let worst = sweep_reduced_draws(n, base_seed, jobs)?;
        report["draw_sweep"] = json!({
            "draws": n,
            "seed": base_seed,
            "worst_deviation": worst,
            "within_tol": worst <= tol,
        });
    }
    Ok(report)
}

/// One coupling draw at the reduced point, five magnitudes in `[-3, 3)`.
fn reduced_draw(rng: &mut ChaCha8Rng) -> EffParams {
    let mut pick = || rng.gen_range(-3.0..3.0);
    EffParams {
        alpha: pick(),
        beta: 0.0,
        gamma: pick(),
        delta: pick(),
        epsilon: 0.0,
        zeta: pick(),
        eta: pick(),
    }
}

fn draw_deviation(p: &EffParams) -> Result<f64> {
    let (numeric, _) = hermitian_eig(&build_heff(p))?;
    let closed_form = analytic_spectrum(p)?;
    Ok(numeric
        .iter()
        .zip(closed_form.iter())
        .map(|(n, a)| (n - a).abs())
        .fold(0.0_f64, f64::max))
}

/// Worst analytic-vs-numeric spectrum deviation over `n` seeded draws.
/// Draw `i` always uses seed `base + i`, so the result is independent of
/// the worker count and the max-reduction order.
fn sweep_reduced_draws(n: usize, base_seed: u64, jobs: usize) -> Result<f64> {
    let workers = jobs.min(n.max(1));
    let worst = Mutex::new(0.0_f64);
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for w in 0..workers {
            let worst = &worst;
            let failure = &failure;
            scope.spawn(move || {
                let mut local = 0.0_f64;
                for i in (w..n).step_by(workers) {
                    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(i as u64));
                    match draw_deviation(&reduced_draw(&mut rng)) {
                        Ok(dev) => local = local.max(dev),
                        Err(e) => {
                            failure.lock().unwrap().get_or_insert(e);
                            return;
                        }
                    }
                }
                let mut shared = worst.lock().unwrap();
                *shared = shared.max(local);
            });
        }
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok(worst.into_inner().unwrap())
}

fn cmd_liouvillian(config: &Config, basis: BasisArg) -> Result<Value> {
    match basis {
        BasisArg::Pauli => {
            let p = config.model.effective_params()?.ok_or_else(|| {
                Error::PreconditionViolated(format!(
                    "the Pauli-basis generator needs a two-spin coupling model, got {}",
                    config.model.kind()
                ))
            })?;
            let bloch = bloch_liouvillian(&p);
            let blocks = block_decompose_real(&bloch.mat, &bloch.labels, config.analysis.tol);
            Ok(json!({
                "command": "liouvillian",
                "basis": "pauli",
                "labels": bloch.labels,
                "matrix": real_rows(&bloch.mat),
                "blocks": serde_json::to_value(&blocks).map_err(encode_err)?,
            }))
        }
        BasisArg::Vectorized => {
            let h = config.model.hamiltonian()?;
            let l = liouvillian_from_h(&h)?;
            let n = h.dim();
            // Column stacking: flat index i holds the matrix unit |i%n><i/n|.
            let labels: Vec<String> = (0..n * n).map(|i| format!("{},{}", i % n, i / n)).collect();
            let blocks = block_decompose(&l.mat, &labels, config.analysis.tol);
            Ok(json!({
                "command": "liouvillian",
                "basis": "vectorized",
                "dim": n,
                "labels": labels,
                "matrix": complex_rows(&l.mat),
                "blocks": serde_json::to_value(&blocks).map_err(encode_err)?,
            }))
        }
    }
}

fn cmd_correlators(config: &Config, jkl: Option<&str>, csv: Option<&Path>) -> Result<Value> {
    let p = config.model.effective_params()?.ok_or_else(|| {
        Error::PreconditionViolated(format!(
            "correlators need a two-spin coupling model, got {}",
            config.model.kind()
        ))
    })?;
    let times = config.time_grid()?;
    let tol = config.analysis.tol.unwrap_or(CANCELLATION_TOL);
    let specs: Vec<CorrelatorSpec> = match jkl {
        Some(text) => {
            vec![CorrelatorSpec::parse(text).map_err(|e| Error::Config(e.to_string()))?]
        }
        None => CorrelatorSpec::all_nontrivial(),
    };
    let series = correlators_numeric(&build_heff(&p), &specs, &times)?;

    let entries: Vec<Value> = specs
        .iter()
        .zip(series.iter())
        .map(|(spec, values)| {
            let max_abs = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            json!({
                "triple": spec.label(),
                "max_abs": max_abs,
                "values": values,
            })
        })
        .collect();

    let mut report = json!({
        "command": "correlators",
        "parameters": serde_json::to_value(&p).map_err(encode_err)?,
        "times": times,
        "series": entries,
    });

    if jkl.is_none() {
        let cancel = cancellation_report(&p, &times, tol)?;
        report["cancellation"] = json!({
            "tol": cancel.tol,
            "vanishing": cancel.vanishing.iter().map(|s| s.label()).collect::<Vec<_>>(),
            "nonvanishing": cancel.nonvanishing.iter().map(|s| s.label()).collect::<Vec<_>>(),
        });
    }

    if let Some(path) = csv {
        let mut header = vec!["t".to_string()];
        header.extend(specs.iter().map(|s| format!("f_{}", s.label())));
        let rows: Vec<Vec<f64>> = (0..times.len())
            .map(|ti| series.iter().map(|col| col[ti]).collect())
            .collect();
        write_csv(path, &header, &times, &rows)?;
    }
    Ok(report)
}

fn cmd_evolve(config: &Config, rho0_flag: Option<&str>, csv: Option<&Path>) -> Result<Value> {
    let h = config.model.hamiltonian()?;
    let dim = h.dim();
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::PreconditionViolated(format!(
            "Pauli-coefficient states need a qubit register; dimension {dim} is not a power of two"
        )));
    }
    let n_qubits = dim.trailing_zeros() as usize;

    let coeffs: BTreeMap<String, f64> = match rho0_flag {
        Some(text) => parse_coeff_list(text)?,
        None => config.rho0.clone().ok_or_else(|| {
            Error::Config(
                "evolve needs an initial state: set rho0 in the config or pass --rho0".into(),
            )
        })?,
    };
    let rho0 = density_from_pauli_coeffs(&coeffs, n_qubits)?;

    let l_u = liouvillian_from_h(&h)?;
    let generator = match &config.dissipator {
        Some(d) => l_u.plus(&d.build(n_qubits)?)?,
        None => l_u.clone(),
    };
    let times = config.time_grid()?;
    let states = evolve(&generator, &rho0, &times)?;

    let basis = PauliBasis::new(n_qubits);
    let labels: Vec<String> = basis.labels().iter().skip(1).cloned().collect();
    let norm = dim as f64;
    let mut worst_trace = 0.0_f64;
    let mut worst_herm = 0.0_f64;
    let rows: Vec<Vec<f64>> = states
        .iter()
        .map(|state| {
            let tr = state.trace();
            worst_trace = worst_trace.max((tr.re - 1.0).abs()).max(tr.im.abs());
            worst_herm = worst_herm.max(state.hermiticity_deviation());
            basis
                .elements
                .iter()
                .skip(1)
                .map(|b| {
                    let overlap = trace_inner_product(b, state)
                        .expect("basis and state dimensions match");
                    overlap.re / norm
                })
                .collect()
        })
        .collect();
    if worst_trace > SELF_CHECK_TOL || worst_herm > SELF_CHECK_TOL {
        return Err(Error::SelfCheckFailed(format!(
            "evolved state left the density manifold: trace deviation {worst_trace:.3e}, \
             hermiticity deviation {worst_herm:.3e}"
        )));
    }

    let mut report = json!({
        "command": "evolve",
        "model": config.model.kind(),
        "times": times,
        "labels": labels,
        "coefficients": rows,
        "trace_deviation": worst_trace,
        "hermiticity_deviation": worst_herm,
    });

    // With both a coherent two-spin generator and a dissipator on the
    // table, scan which symmetry blocks stay decoherence-free.
    let params = config.model.effective_params()?;
    if let (Some(dconf), Some(p)) = (&config.dissipator, &params) {
        let l_d = dconf.build(n_qubits)?;
        let bloch = bloch_liouvillian(p);
        let blocks = block_decompose_real(&bloch.mat, &bloch.labels, config.analysis.tol);
        let basis_ops: Vec<HilbertOp> = bloch
            .labels
            .iter()
            .map(|lab| {
                let idx = basis
                    .index_of_label(lab)
                    .expect("Bloch labels index the Pauli basis");
                basis.elements[idx].clone()
            })
            .collect();
        let scan = dfls_scan(
            &l_u,
            &l_d,
            &blocks,
            &basis_ops,
            config.analysis.tol.unwrap_or(DFLS_TOL),
        )?;
        report["dfls"] = Value::Array(scan.iter().map(dfls_json).collect());
    }

    if let Some(path) = csv {
        let mut header = vec!["t".to_string()];
        header.extend(report["labels"].as_array().unwrap().iter().map(|v| {
            v.as_str().expect("labels are strings").to_string()
        }));
        write_csv(path, &header, &times, &rows)?;
    }
    Ok(report)
}

fn dfls_json(r: &BlockDflsReport) -> Value {
    json!({
        "block": r.block,
        "labels": r.labels,
        "preserved_by_unitary": r.preserved_by_unitary,
        "unitary_residual": r.unitary_residual,
        "annihilated_by_dissipator": r.annihilated_by_dissipator,
        "dissipator_residual_left": r.dissipator_residual_left,
        "dissipator_residual_right": r.dissipator_residual_right,
        "decoherence_free": r.decoherence_free,
    })
}

/// Parses "y0=0.4,z0=0.3" into a coefficient map.
fn parse_coeff_list(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut map = BTreeMap::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (label, value) = part.split_once('=').ok_or_else(|| {
            Error::Config(format!("bad state coefficient {part:?}: expected label=value"))
        })?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad state coefficient value in {part:?}")))?;
        if map.insert(label.trim().to_string(), value).is_some() {
            return Err(Error::Config(format!(
                "state coefficient {label:?} given twice"
            )));
        }
    }
    if map.is_empty() {
        return Err(Error::Config("empty state coefficient list".into()));
    }
    Ok(map)
}

fn require_classical(config: &Config) -> Result<&liouville::serial::ClassicalConfig> {
    match &config.model {
        ModelConfig::Classical(c) => Ok(c),
        other => Err(Error::PreconditionViolated(format!(
            "the classical command needs a classical model, got {}",
            other.kind()
        ))),
    }
}

fn cmd_flow(config: &Config, csv: Option<&Path>) -> Result<Value> {
    let c = require_classical(config)?;
    let times = config.time_grid()?;
    let freqs = damped_eigenfrequencies(c.gamma, c.mu)?;
    let trajectory = flow_trajectory(c.gamma, c.mu, (c.start[0], c.start[1]), &times)?;
    let (p_end, q_end) = *trajectory.last().expect("time grids are nonempty");

    if let Some(path) = csv {
        let header = vec!["t".to_string(), "p".to_string(), "q".to_string()];
        let rows: Vec<Vec<f64>> = trajectory.iter().map(|&(p, q)| vec![p, q]).collect();
        write_csv(path, &header, &times, &rows)?;
    }
    Ok(json!({
        "command": "classical-flow",
        "gamma": c.gamma,
        "mu": c.mu,
        "start": c.start,
        "eigenfrequencies": freqs.iter().map(|w| [w.re, w.im]).collect::<Vec<_>>(),
        "times": times,
        "trajectory": trajectory.iter().map(|&(p, q)| [p, q]).collect::<Vec<_>>(),
        "final_radius": p_end.hypot(q_end),
    }))
}

fn cmd_algebra(config: &Config) -> Result<Value> {
    let c = require_classical(config)?;
    let d = c.max_degree;
    // The commutator of the damped generator with the Euler operator
    // vanishes identically, not just to rounding: both sides scale each
    // monomial by the same integer degree, so f64 arithmetic cancels
    // exactly and `exactly_zero` reports a bitwise check.
    let l_tot = damped_liouvillian::<f64>(c.gamma, c.mu, d);
    let euler = scaling_generator::<f64>(d);
    let comm = l_tot.commutator(&euler)?;
    let freqs = damped_eigenfrequencies(c.gamma, c.mu)?;
    let dilation = scaling_map_symmetry_check(c.alpha, d)?;
    Ok(json!({
        "command": "classical-algebra",
        "gamma": c.gamma,
        "mu": c.mu,
        "max_degree": d,
        "scaling_commutator": {
            "max_abs": comm.max_abs(),
            "exactly_zero": comm.is_zero(),
        },
        "eigenfrequencies": freqs.iter().map(|w| [w.re, w.im]).collect::<Vec<_>>(),
        "dilation": serde_json::to_value(&dilation).map_err(encode_err)?,
    }))
}
