use std::f64::consts::LN_2;

use jones_core::blockalg::{
    block_average_expectation, partition_expectation, pimsner_popa_constant,
    quantum_privacy, random_invariant_ensemble, tensor_power, BlockState, ConditionalExpectation,
    DEFAULT_TENSOR_CAP,
};
use jones_core::io::{read_states, write_states, StateList};
use jones_core::linalg::random::seeded_rng;
use jones_core::linalg::{holevo_chi, relative_entropy, von_neumann_entropy, DensityMatrix, Ensemble, ExtendedReal};
use jones_core::toric::{
    dense_rdm, disturbance_experiment, omega_decomposition, stabilizer_rdm, toric_setup, Backend, DenseCaps,
    GeometryConfig, ToricConfig, ToricReport,
};
use jones_core::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Command, ExperimentConfig};
use crate::report::ReportRecord;
use crate::CliError;

/// Pairwise relative entropies are listed only up to this many states.
pub const MAX_PAIRWISE_STATES: usize = 16;

/// Sweep rows must agree to this precision.
pub const SWEEP_CONSTANCY_TOL: f64 = 1e-9;

/// Largest region whose ensemble may be written out densely.
pub const DUMP_EDGE_CAP: usize = 8;

/// Records plus the overall verdict.
pub struct Outcome {
    pub records: Vec<ReportRecord>,
    /// A numeric acceptance check failed.
    pub numeric_failure: bool,
    /// Some rows failed on their inputs (caps, geometry).
    pub input_failure: bool,
}

fn bits(v: ExtendedReal) -> ExtendedReal {
    v.to_bits()
}

#[derive(Serialize)]
struct VonNeumannRow {
    state: usize,
    dim: usize,
    nats: f64,
    bits: f64,
}

#[derive(Serialize)]
struct RelativeEntropyRow {
    rho: usize,
    sigma: usize,
    nats: ExtendedReal,
    bits: ExtendedReal,
}

#[derive(Serialize)]
struct ChiRow {
    members: usize,
    weights: Vec<f64>,
    nats: f64,
    bits: f64,
}

fn entropy(cfg: &ExperimentConfig, inputs: &[std::path::PathBuf]) -> Result<Outcome, CliError> {
    let parts = inputs.iter().map(|p| read_states(p)).collect::<Result<Vec<_>, _>>()?;
    let list = StateList::concat(parts)?;
    let mut records = Vec::new();
    for (k, rho) in list.states.iter().enumerate() {
        let s = von_neumann_entropy(rho)?;
        records.push(ReportRecord::new(
            "von_neumann_entropy",
            &VonNeumannRow {
                state: k,
                dim: rho.dim(),
                nats: s,
                bits: s / LN_2,
            },
            cfg,
        )?);
    }
    if list.len() <= MAX_PAIRWISE_STATES {
        for (i, a) in list.states.iter().enumerate() {
            for (j, b) in list.states.iter().enumerate() {
                if i == j || a.dim() != b.dim() {
                    continue;
                }
                let s = relative_entropy(a, b)?;
                records.push(ReportRecord::new(
                    "relative_entropy",
                    &RelativeEntropyRow {
                        rho: i,
                        sigma: j,
                        nats: s,
                        bits: bits(s),
                    },
                    cfg,
                )?);
            }
        }
    }
    if list.len() >= 2 {
        let ens = list.ensemble()?;
        let chi = holevo_chi(&ens)?;
        records.push(ReportRecord::new(
            "holevo_chi",
            &ChiRow {
                members: ens.len(),
                weights: ens.weights().to_vec(),
                nats: chi,
                bits: chi / LN_2,
            },
            cfg,
        )?);
    }
    Ok(Outcome {
        records,
        numeric_failure: false,
        input_failure: false,
    })
}

#[derive(Serialize)]
struct IndexRow {
    blocks: usize,
    block_dim: usize,
    power: usize,
    lambda_hat: f64,
    index_hat: ExtendedReal,
    expected: f64,
    samples: usize,
    log_index_nats: ExtendedReal,
    log_index_bits: ExtendedReal,
    pass: bool,
}

fn log_of(v: ExtendedReal) -> ExtendedReal {
    match v {
        ExtendedReal::Finite(x) if x > 0.0 => ExtendedReal::Finite(x.ln()),
        _ => ExtendedReal::PosInfinity,
    }
}

fn index(cfg: &ExperimentConfig, blocks: usize, block_dim: usize, square: bool) -> Result<Outcome, CliError> {
    let base = block_average_expectation(blocks, block_dim)?;
    let power = if square { 2 } else { 1 };
    let e = tensor_power(&base, power, DEFAULT_TENSOR_CAP)?;
    let pp = pimsner_popa_constant(&e, cfg.trials, cfg.seed)?;
    let expected = e.index();
    let pass = (pp.index_hat.as_f64() - expected).abs() <= cfg.tol;
    let log_index = log_of(pp.index_hat);
    let row = IndexRow {
        blocks,
        block_dim,
        power,
        lambda_hat: pp.lambda_hat,
        index_hat: pp.index_hat,
        expected,
        samples: pp.samples,
        log_index_nats: log_index,
        log_index_bits: bits(log_index),
        pass,
    };
    Ok(Outcome {
        records: vec![ReportRecord::new("index", &row, cfg)?],
        numeric_failure: !pass,
        input_failure: false,
    })
}

fn toric_config(cfg: &ExperimentConfig, geometry: GeometryConfig) -> ToricConfig {
    ToricConfig {
        geometry,
        index_trials: cfg.trials,
        seed: cfg.seed,
        ..ToricConfig::default()
    }
}

#[derive(Serialize)]
struct ToricRow<'a> {
    #[serde(flatten)]
    report: &'a ToricReport,
    disturbance_bits: f64,
    pass: bool,
}

/// Writes the four members of the ensemble as dense block-diagonal states.
fn dump_ensemble(n: usize, backend: Backend, geometry: &GeometryConfig, path: &std::path::Path) -> Result<(), CliError> {
    let setup = toric_setup(n, geometry)?;
    let edges = setup.region.num_edges();
    if edges > DUMP_EDGE_CAP {
        return Err(Error::CapExceeded {
            what: "region edges for a dense ensemble dump",
            required: edges,
            cap: DUMP_EDGE_CAP,
        }
        .into());
    }
    let rho0 = match backend {
        Backend::Dense => dense_rdm(&setup.region, DenseCaps::default())?,
        Backend::Stabilizer => stabilizer_rdm(&setup.region)?.to_dense()?,
    };
    let dec = omega_decomposition(&rho0, &setup.strings, &setup.hat)?;
    let dense: Vec<DensityMatrix> = dec.ensemble.members().iter().map(BlockState::to_dense).collect();
    let refs: Vec<&DensityMatrix> = dense.iter().collect();
    write_states(path, &refs, Some(dec.ensemble.weights()))?;
    Ok(())
}

fn toric(cfg: &ExperimentConfig, n: usize, backend: Backend, dump: Option<&std::path::Path>) -> Result<Outcome, CliError> {
    let geometry = cfg.load_geometry()?;
    let tc = toric_config(cfg, geometry.clone());
    let report = disturbance_experiment(n, backend, &tc)?;
    let pass = report.passes(cfg.tol);
    if let Some(path) = dump {
        dump_ensemble(n, backend, &geometry, path)?;
    }
    let row = ToricRow {
        report: &report,
        disturbance_bits: report.disturbance / LN_2,
        pass,
    };
    Ok(Outcome {
        records: vec![ReportRecord::new("toric", &row, cfg)?],
        numeric_failure: !pass,
        input_failure: false,
    })
}

#[derive(Serialize)]
struct SweepRow {
    n: usize,
    backend: Backend,
    ok: bool,
    disturbance: Option<f64>,
    disturbance_bits: Option<f64>,
    chi_ambient: Option<f64>,
    chi_sub: Option<f64>,
    edges: Option<usize>,
    pass: bool,
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepSummary {
    rows: usize,
    failed_rows: usize,
    /// Largest difference between two successful disturbance values.
    spread: f64,
    constant: bool,
}

fn sweep(cfg: &ExperimentConfig, sizes: Vec<usize>, backends: &[Backend]) -> Result<Outcome, CliError> {
    let geometry = cfg.load_geometry()?;
    let tc = toric_config(cfg, geometry);
    let jobs: Vec<(usize, Backend)> = sizes
        .iter()
        .flat_map(|&n| backends.iter().map(move |&b| (n, b)))
        .collect();
    // `collect` on an indexed parallel iterator keeps the job order.
    let results: Vec<(usize, Backend, Result<ToricReport, Error>)> = jobs
        .into_par_iter()
        .map(|(n, b)| (n, b, disturbance_experiment(n, b, &tc)))
        .collect();
    let mut records = Vec::new();
    let mut input_failure = false;
    let mut numeric_failure = false;
    let mut values = Vec::new();
    for (n, backend, res) in &results {
        let row = match res {
            Ok(r) => {
                let pass = r.passes(cfg.tol);
                numeric_failure |= !pass;
                values.push(r.disturbance);
                SweepRow {
                    n: *n,
                    backend: *backend,
                    ok: true,
                    disturbance: Some(r.disturbance),
                    disturbance_bits: Some(r.disturbance / LN_2),
                    chi_ambient: Some(r.chi_ambient),
                    chi_sub: Some(r.chi_sub),
                    edges: Some(r.edges),
                    pass,
                    error: None,
                }
            }
            Err(e) => {
                if is_input_error(e) {
                    input_failure = true;
                } else {
                    numeric_failure = true;
                }
                SweepRow {
                    n: *n,
                    backend: *backend,
                    ok: false,
                    disturbance: None,
                    disturbance_bits: None,
                    chi_ambient: None,
                    chi_sub: None,
                    edges: None,
                    pass: false,
                    error: Some(e.to_string()),
                }
            }
        };
        records.push(ReportRecord::new("sweep_row", &row, cfg)?);
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = if values.is_empty() { 0.0 } else { hi - lo };
    let constant = spread <= SWEEP_CONSTANCY_TOL;
    numeric_failure |= !constant;
    if !results.is_empty() {
        let summary = SweepSummary {
            rows: results.len(),
            failed_rows: results.iter().filter(|r| r.2.is_err()).count(),
            spread,
            constant,
        };
        records.push(ReportRecord::new("sweep_summary", &summary, cfg)?);
    }
    Ok(Outcome {
        records,
        numeric_failure,
        input_failure,
    })
}

#[derive(Serialize)]
struct PrivacyRow {
    blocks: usize,
    block_dim: usize,
    bob: Vec<usize>,
    eve: Vec<usize>,
    /// Maximally mixed states concentrated in single blocks of Eve's largest group.
    concentrated_nats: f64,
    concentrated_bits: f64,
    random_trials: usize,
    random_max_nats: Option<f64>,
    random_mean_nats: Option<f64>,
    log_index_bob: f64,
    log_index_eve: f64,
}

fn concentrated_ensemble(e: &ConditionalExpectation) -> Result<Ensemble<BlockState<DensityMatrix>>, Error> {
    let inc = e.inclusion();
    let g = (0..e.sub().num_blocks()).max_by_key(|&g| inc.multiplicity(g)).unwrap_or(0);
    let n = e.sub().dims()[g];
    let members = inc
        .members_of(g)
        .map(|j| BlockState::concentrated(e.ambient(), j, DensityMatrix::maximally_mixed(n)))
        .collect::<Result<Vec<_>, _>>()?;
    Ensemble::uniform(members)
}

/// Privacy trials are capped to keep the command interactive.
pub const MAX_PRIVACY_TRIALS: usize = 10_000;

fn privacy(cfg: &ExperimentConfig, block_dim: usize, bob: &[usize], eve: &[usize]) -> Result<Outcome, CliError> {
    if bob.len() != eve.len() {
        return Err(CliError::Input(format!(
            "Bob's partition has {} blocks but Eve's has {}",
            bob.len(),
            eve.len()
        )));
    }
    let e_bob = partition_expectation(bob, block_dim)?;
    let e_eve = partition_expectation(eve, block_dim)?;
    let conc = concentrated_ensemble(&e_eve)?;
    let concentrated = quantum_privacy(&conc, &e_bob, &e_eve)?;
    let trials = cfg.trials.min(MAX_PRIVACY_TRIALS);
    let mut rng = seeded_rng(cfg.seed);
    let mut samples = Vec::with_capacity(trials);
    for _ in 0..trials {
        let ens = random_invariant_ensemble(&e_eve, &mut rng, 2)?;
        samples.push(quantum_privacy(&ens, &e_bob, &e_eve)?);
    }
    let random_max = samples.iter().copied().reduce(f64::max);
    let random_mean = (!samples.is_empty()).then(|| samples.iter().sum::<f64>() / samples.len() as f64);
    let row = PrivacyRow {
        blocks: bob.len(),
        block_dim,
        bob: bob.to_vec(),
        eve: eve.to_vec(),
        concentrated_nats: concentrated,
        concentrated_bits: concentrated / LN_2,
        random_trials: trials,
        random_max_nats: random_max,
        random_mean_nats: random_mean,
        log_index_bob: e_bob.index().ln(),
        log_index_eve: e_eve.index().ln(),
    };
    Ok(Outcome {
        records: vec![ReportRecord::new("privacy", &row, cfg)?],
        numeric_failure: false,
        input_failure: false,
    })
}

/// Errors caused by the request rather than by the numerics.
pub fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Parse(_)
            | Error::InvalidInput(_)
            | Error::Geometry(_)
            | Error::CrossingParity(_)
            | Error::CapExceeded { .. }
            | Error::DimensionMismatch { .. }
            | Error::NotHermitian { .. }
            | Error::NegativeEigenvalue { .. }
            | Error::BadTrace { .. }
    )
}

/// Runs one validated configuration.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    match &cfg.command {
        Command::Entropy { inputs } => entropy(cfg, inputs),
        Command::Index {
            blocks,
            block_dim,
            tensor_square,
        } => index(cfg, *blocks, *block_dim, *tensor_square),
        Command::Toric {
            n,
            backend,
            dump_ensemble,
        } => toric(cfg, *n, *backend, dump_ensemble.as_deref()),
        Command::Sweep { sizes, backends } => sweep(cfg, sizes.values().collect(), backends),
        Command::Privacy { block_dim, bob, eve } => privacy(cfg, *block_dim, bob, eve),
    }
}
