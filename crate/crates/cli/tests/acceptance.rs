//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. `ACCEPTANCE_ONLY=2,5` restricts the run.

use std::f64::consts::LN_2;
use std::time::Instant;

use jones_cli::{execute, Command, ExperimentConfig, OutputFormat};
use jones_core::blockalg::{
    block_average_expectation, chain_rule_residual, entropic_disturbance, maximize_disturbance,
    pimsner_popa_constant, product_ensemble, random_invariant_ensemble, tensor_power, BlockState,
    ConditionalExpectation, MaximizeConfig, DEFAULT_TENSOR_CAP,
};
use jones_core::linalg::random::{random_density, random_simplex, seeded_rng, SeededRng};
use jones_core::linalg::{DensityMatrix, Ensemble};
use jones_core::pauli::{CosetMixtureState, PauliString};
use jones_core::toric::{
    build_hat_inclusion, compare_backends, dense_rdm, omega_decomposition, stabilizer_rdm, toric_setup,
    verify_projected_expectations, watatani_index_check, Backend, DenseCaps, GeometryConfig, Shape,
    TransporterData,
};

const LN4: f64 = 2.0 * LN_2;

type Check = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn toric_cfg(n: usize, backend: Backend) -> ExperimentConfig {
    ExperimentConfig {
        command: Command::Toric {
            n,
            backend,
            dump_ensemble: None,
        },
        geometry: None,
        seed: 0,
        trials: 1000,
        tol: 1e-6,
        out: None,
        format: OutputFormat::Records,
    }
}

fn toric_disturbance() -> Check {
    let mut ok = true;
    let mut notes = Vec::new();
    let runs = [(1, Backend::Dense, 10.0), (1, Backend::Stabilizer, 60.0), (2, Backend::Stabilizer, 60.0), (3, Backend::Stabilizer, 60.0)];
    for (n, backend, budget) in runs {
        let start = Instant::now();
        let outcome = execute(&toric_cfg(n, backend)).map_err(|e| e.to_string())?;
        let secs = start.elapsed().as_secs_f64();
        let p = &outcome.records[0].payload;
        let amb = p["chi_ambient"].as_f64().unwrap_or(f64::NAN);
        let sub = p["chi_sub"].as_f64().unwrap_or(f64::NAN);
        let gap = (amb - sub - LN4).abs();
        let good = gap <= 1e-9 && sub.abs() <= 1e-9 && secs < budget && outcome.exit_code() == 0;
        ok &= good;
        notes.push(format!("n={n} {backend}: |Δ−2ln2|={gap:.1e} χ_sub={sub:.1e} {secs:.2}s"));
    }
    verdict(ok, notes.join("; "))
}

fn toric_index() -> Check {
    let start = Instant::now();
    let setup = toric_setup(1, &GeometryConfig::default_geometry()).map_err(|e| e.to_string())?;
    let e = &setup.hat.expectation;
    let pp = pimsner_popa_constant(e, 1000, 7).map_err(|e| e.to_string())?;
    let probes = e.ambient().dims().iter().map(|d| d + 1).sum::<usize>();
    let secs = start.elapsed().as_secs_f64();
    let err = (pp.index_hat.as_f64() - 4.0).abs();
    verdict(
        err <= 1e-6 && pp.samples >= 1000 + probes && secs < 30.0,
        format!(
            "block dim {}: index {} (err {err:.1e}) over {} samples ({probes} rank-1) in {secs:.2}s",
            setup.hat.block_dim(),
            pp.index_hat,
            pp.samples
        ),
    )
}

/// The one-cone slice of the toric ensemble: the ground state on the first
/// wedge at `n = 1` with the strings restricted to it.
fn one_cone_ensemble() -> jones_core::Result<(ConditionalExpectation, Ensemble<BlockState<DensityMatrix>>)> {
    let g = GeometryConfig::default_geometry();
    let setup = toric_setup(1, &g)?;
    let cone: Vec<usize> = setup.region.subregions[0]
        .iter()
        .map(|&e| setup.region.qubit_of(e).expect("edge in region"))
        .collect();
    let rho_full = stabilizer_rdm(&setup.region)?;
    let rho = rho_full.reduce_to(&cone)?.to_dense()?;
    let local = |edges: &[jones_core::toric::Edge]| -> Vec<usize> {
        edges
            .iter()
            .map(|e| setup.region.subregions[0].iter().position(|x| x == e).expect("path inside its cone"))
            .collect()
    };
    let t = TransporterData {
        f_x: PauliString::z_on(cone.len(), &local(&setup.strings.primal_paths[0])),
        f_z: PauliString::x_on(cone.len(), &local(&setup.strings.dual_paths[0])),
        primal_paths: [setup.strings.primal_paths[0].clone(), vec![]],
        dual_paths: [setup.strings.dual_paths[0].clone(), vec![]],
    };
    let hat = build_hat_inclusion(&t)?;
    let dec = omega_decomposition(&rho, &t, &hat)?;
    Ok((hat.expectation, dec.ensemble))
}

fn tensor_power_check() -> Check {
    let start = Instant::now();
    let run = || -> jones_core::Result<(f64, f64, usize, usize)> {
        let (e, ens) = one_cone_ensemble()?;
        let e2 = tensor_power(&e, 2, DEFAULT_TENSOR_CAP)?;
        let pp = pimsner_popa_constant(&e2, 200, 3)?;
        let prod = product_ensemble(&ens, &ens)?;
        let d = entropic_disturbance(&prod, &e2)?;
        let dim = e2.ambient().dims().iter().copied().max().unwrap_or(0);
        Ok((pp.index_hat.as_f64(), d.disturbance, dim, e.ambient().dims()[0]))
    };
    let (index, dist, dim2, dim1) = run().map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    verdict(
        (index - 16.0).abs() <= 1e-5 && (dist - 2.0 * LN4).abs() <= 1e-6 && dim2 <= 16 && secs < 120.0,
        format!(
            "base block dim {dim1}, squared block dim {dim2}: index {index:.12} disturbance {dist:.12} (4ln2 = {:.12}) in {secs:.2}s",
            2.0 * LN4
        ),
    )
}

fn random_block_state(rng: &mut SeededRng, k: usize, n: usize) -> jones_core::Result<BlockState<DensityMatrix>> {
    let masses = random_simplex(rng, k);
    let blocks = masses
        .iter()
        .map(|&m| random_density(rng, n, n).scaled(m))
        .collect::<jones_core::Result<Vec<_>>>()?;
    BlockState::new(blocks)
}

fn chain_rule() -> Check {
    let mut worst = 0.0f64;
    let mut infinite = 0usize;
    let mut pairs = 0usize;
    let mut rng = seeded_rng(41);
    for n in [2, 4] {
        let e = block_average_expectation(4, n).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let omega = random_block_state(&mut rng, 4, n).map_err(|e| e.to_string())?;
            let psi = random_block_state(&mut rng, 4, n).map_err(|e| e.to_string())?;
            let phi = e.dual(&psi).map_err(|e| e.to_string())?;
            match chain_rule_residual(&omega, &phi, &e).map_err(|e| e.to_string())? {
                Some(r) => worst = worst.max(r),
                None => infinite += 1,
            }
            pairs += 1;
        }
    }
    verdict(
        worst <= 1e-8 && infinite == 0,
        format!("{pairs} pairs over ⊕⁴M₂ and ⊕⁴M₄: max residual {worst:.1e}, {infinite} infinite"),
    )
}

fn disturbance_bound() -> Check {
    let e = block_average_expectation(4, 2).map_err(|e| e.to_string())?;
    let mut rng = seeded_rng(2024);
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..10_000 {
        let bases = 1 + trial % 4;
        let ens = random_invariant_ensemble(&e, &mut rng, bases).map_err(|e| e.to_string())?;
        let d = entropic_disturbance(&ens, &e).map_err(|e| e.to_string())?;
        worst = worst.max(d.disturbance);
    }
    let best = maximize_disturbance(&e, &MaximizeConfig::default()).map_err(|e| e.to_string())?;
    verdict(
        worst <= LN4 + 1e-8 && best.best >= LN4 - 1e-6,
        format!(
            "max over 10000 random ensembles exceeds ln4 by {:.1e}; maximizer reached {:.12}",
            worst - LN4,
            best.best
        ),
    )
}

fn projected_expectations() -> Check {
    let setup = toric_setup(1, &GeometryConfig::default_geometry()).map_err(|e| e.to_string())?;
    let rho0 = dense_rdm(&setup.region, DenseCaps::default()).map_err(|e| e.to_string())?;
    let pe = verify_projected_expectations(&setup.hat, &rho0, &setup.strings, 200, 13).map_err(|e| e.to_string())?;
    verdict(
        pe.max_residual <= 1e-10 && pe.cases == 16 && pe.samples >= 200,
        format!(
            "{} observables × {} sign cases: max residual {:.1e}, cross terms {:.1e}",
            pe.samples, pe.cases, pe.max_residual, pe.cross_term_residual
        ),
    )
}

fn structural_checks() -> Check {
    let g = GeometryConfig::default_geometry();
    let mut ok = true;
    let mut notes = Vec::new();
    for (n, backend) in [(1, Backend::Dense), (1, Backend::Stabilizer), (2, Backend::Stabilizer), (3, Backend::Stabilizer)] {
        let setup = toric_setup(n, &g).map_err(|e| e.to_string())?;
        let checks = match backend {
            Backend::Dense => {
                let rho0 = dense_rdm(&setup.region, DenseCaps::default()).map_err(|e| e.to_string())?;
                omega_decomposition(&rho0, &setup.strings, &setup.hat).map(|d| d.checks)
            }
            Backend::Stabilizer => {
                let rho0: CosetMixtureState = stabilizer_rdm(&setup.region).map_err(|e| e.to_string())?;
                omega_decomposition(&rho0, &setup.strings, &setup.hat).map(|d| d.checks)
            }
        }
        .map_err(|e| e.to_string())?;
        ok &= checks.max_support_overlap <= 1e-10 && checks.max_trace_error <= 1e-10 && checks.restriction_spread <= 1e-10;
        notes.push(format!(
            "n={n} {backend}: overlap {:.1e} trace {:.1e} spread {:.1e}",
            checks.max_support_overlap, checks.max_trace_error, checks.restriction_spread
        ));
    }
    verdict(ok, notes.join("; "))
}

fn watatani() -> Check {
    let setup = toric_setup(1, &GeometryConfig::default_geometry()).map_err(|e| e.to_string())?;
    let w = watatani_index_check(&setup.hat, &setup.strings, 50, 17).map_err(|e| e.to_string())?;
    verdict(
        w.reconstruction_residual <= 1e-10 && w.index_residual <= 1e-12 && w.trace_residual <= 1e-10,
        format!(
            "{:?} basis: reconstruction {:.1e}, Σuu*−4I {:.1e}, trace {:.1e}",
            w.basis, w.reconstruction_residual, w.index_residual, w.trace_residual
        ),
    )
}

fn backend_equivalence() -> Check {
    let default = GeometryConfig::default_geometry();
    let mut rect = default.clone();
    rect.shape = Shape::Rectangle;
    rect.rect_base = [1, 1];
    rect.rect_growth = [1, 0];
    rect.cones[1].tip = [3, 0];
    let mut ok = true;
    let mut notes = Vec::new();
    for (label, n, g) in [("wedge", 1, &default), ("rectangle", 1, &rect), ("wedge", 2, &default)] {
        let start = Instant::now();
        let setup = toric_setup(n, g).map_err(|e| e.to_string())?;
        let cmp = compare_backends(&setup.region, &setup.strings, DenseCaps::default()).map_err(|e| e.to_string())?;
        let worst = cmp.max_residual();
        ok &= worst <= 1e-10 && cmp.edges <= 12;
        notes.push(format!(
            "{label} n={n} ({} edges, {} entropies): max residual {worst:.1e} in {:.1}s",
            cmp.edges,
            cmp.entropies.len(),
            start.elapsed().as_secs_f64()
        ));
    }
    verdict(ok, notes.join("; "))
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let criteria: [(&str, fn() -> Check); 9] = [
        ("toric disturbance", toric_disturbance),
        ("toric index", toric_index),
        ("tensor power", tensor_power_check),
        ("chain rule", chain_rule),
        ("disturbance bound", disturbance_bound),
        ("projected expectations", projected_expectations),
        ("structural checks", structural_checks),
        ("quasi-basis", watatani),
        ("backend equivalence", backend_equivalence),
    ];
    let mut failed = 0;
    let total = Instant::now();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS [{id}] {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{id}] {name} ({secs:.1}s): {detail}");
            }
        }
    }
    println!(
        "acceptance: {failed} failed in {:.1}s",
        total.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
