//! End-to-end acceptance checks, one line per criterion.
//!
//! Run all of them with `cargo test --release --test acceptance`, or pick some
//! by id: `cargo test --release --test acceptance -- c1 c7`.

use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;

use npi::checkpoint::{decode, encode, load_checkpoint_for, save_checkpoint, spec_hash};
use npi::config::{parse_config, OscillatorSection};
use npi::experiment::{oscillator_energies, run_experiment, RunOptions};
use npi::manifest::MANIFEST_NAME;
use npi_core::dnemd::{
    correlation_branches, harvest_initial_conditions, npi_average, run_branches, BranchEnsemble, BranchPlan, LiveRun,
    PerturbationSpec,
};
use npi_core::estimators::{harmonic_finite_p_energy, harmonic_quantum_energy};
use npi_core::integrator::{omega_max, Integrator, ThermostatSpec};
use npi_core::master_eq::{
    evolve_recorded, heisenberg_check, positivity_report, scan_redfield_violation, sigma_minus, sigma_z, CMatrix,
    DensityMatrix, LindbladGenerator,
};
use npi_core::observables::{column, observable_by_name, sample_trajectory, Observable};
use npi_core::potentials::ForceField;
use npi_core::rng::{derive_seed, RandomStream};
use npi_core::stats;
use npi_core::thermal::{
    assign_regions, gradient_targets, heat_flux_with, region_temperatures, ChainParams, FluxEstimator, ProfileMode,
};
use npi_core::types::{RingPolymerState, SystemSpec};

type Check = Result<(bool, String), String>;
type Criterion = (&'static str, &'static str, fn() -> Check);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn mean_err(x: &[f64]) -> (f64, f64) {
    (stats::mean(x), stats::correlated_standard_error(x).unwrap_or_else(|_| stats::standard_error(x)))
}

fn oscillator(beta: f64, production_steps: usize) -> OscillatorSection {
    OscillatorSection {
        omega: 1.0,
        mass: 1.0,
        beta,
        hbar: 1.0,
        tau: 1.0,
        dt: 0.05,
        equilibration_steps: 20_000,
        production_steps,
        record_stride: 4,
        tolerance: 0.02,
    }
}

fn c1_oscillator_energy() -> Check {
    let mut o = oscillator(1.0, 2_000_000);
    o.dt = 0.01;
    o.record_stride = 10;
    let [(prim, prim_err), (vir, vir_err)] = oscillator_energies(&o, 32, 101).map_err(|e| e.to_string())?;
    let exact_p = harmonic_finite_p_energy(1.0, 1.0, 1.0, 32);
    let exact_q = harmonic_quantum_energy(1.0, 1.0, 1.0);
    let rel = |x: f64, r: f64| (x - r).abs() / r;
    let pass =
        rel(prim, exact_p) < 0.02 && rel(vir, exact_p) < 0.02 && rel(prim, exact_q) < 0.03 && rel(vir, exact_q) < 0.03;
    Ok((
        pass,
        format!(
            "P=32: primitive {prim:.4}({prim_err:.4}) virial {vir:.4}({vir_err:.4}); finite-P {exact_p:.5}, quantum {exact_q:.5}; \
             max dev {:.2}% / {:.2}%",
            100.0 * rel(prim, exact_p).max(rel(vir, exact_p)),
            100.0 * rel(prim, exact_q).max(rel(vir, exact_q))
        ),
    ))
}

fn c2_trotter_order() -> Check {
    let beta = 6.0;
    let o = oscillator(beta, 3_000_000);
    let exact_q = harmonic_quantum_energy(beta, 1.0, 1.0);
    let mut errs = Vec::new();
    let mut parts = Vec::new();
    for p in [4, 8, 16] {
        let [_, (vir, vir_err)] = oscillator_energies(&o, p, derive_seed(202, p as u64)).map_err(|e| e.to_string())?;
        errs.push((vir - exact_q).abs());
        parts.push(format!("P={p} err {:.5}({vir_err:.5})", (vir - exact_q).abs()));
    }
    let r1 = errs[0] / errs[1];
    let r2 = errs[1] / errs[2];
    let ok = |r: f64| (2.5..=6.0).contains(&r);
    Ok((ok(r1) && ok(r2), format!("bhw=6 virial: {}; ratios {r1:.2}, {r2:.2}", parts.join(", "))))
}

fn benchmark_chain() -> ChainParams {
    ChainParams {
        n_particles: 32,
        mass: 1.0,
        spacing: 1.0,
        morse_depth: 5.0,
        morse_width: 2.0,
        lj_epsilon: 0.1,
        lj_sigma: 2.0 / 2f64.powf(1.0 / 6.0),
        lj_cutoff: 3.0,
    }
}

fn c3_equipartition() -> Check {
    let chain = benchmark_chain();
    let t = 1.0;
    let spec = chain.spec(1.0 / t, 1.0).map_err(|e| e.to_string())?;
    let ff = ForceField::new(&spec).map_err(|e| e.to_string())?;
    let thermo = ThermostatSpec::PileL { tau: 1.0, target_t: t };
    let mut it = Integrator::new(&spec, &ff, &thermo, 0.005, 1).map_err(|e| e.to_string())?;
    let mut s = chain.lattice_state(1, RandomStream::new(303, 0)).map_err(|e| e.to_string())?;
    it.run(&mut s, 20_000).map_err(|e| e.to_string())?;
    let obs: Vec<Arc<dyn Observable>> = vec![observable_by_name("kinetic", &spec).map_err(|e| e.to_string())?.into()];
    let samples = sample_trajectory(&mut it, &mut s, &spec, 400_000, 20, &obs, false).map_err(|e| e.to_string())?;
    let per_dof: Vec<f64> = column(&samples, "kinetic").map_err(|e| e.to_string())?.iter().map(|k| k / 32.0).collect();
    let (m, e) = mean_err(&per_dof);
    let dev = (m - t / 2.0).abs() / (t / 2.0);
    Ok((dev < 0.02, format!("P=1 chain: K per dof {m:.5}({e:.5}) vs T/2 = {:.3}; dev {:.2}%", t / 2.0, 100.0 * dev)))
}

struct GradientRun {
    t_mid: (f64, f64),
    t_mid_centroid: (f64, f64),
    flux: (f64, f64),
    flux_bead: (f64, f64),
    secs: f64,
}

/// Steady-state run of the benchmark chain between two region baths.
#[allow(clippy::too_many_arguments)]
fn gradient_run(
    t_hot: f64,
    t_cold: f64,
    p: usize,
    internal: bool,
    equilibration_time: f64,
    production_time: f64,
    sample_every: f64,
    seed: u64,
) -> Result<GradientRun, String> {
    let start = Instant::now();
    let chain = benchmark_chain();
    let t_ref = 0.5 * (t_hot + t_cold);
    let spec = chain.spec(1.0 / t_ref, 1.0).map_err(|e| e.to_string())?;
    let ff = ForceField::new(&spec).map_err(|e| e.to_string())?;
    let layout = chain.layout().map_err(|e| e.to_string())?;
    let thermo = ThermostatSpec::RegionLangevin {
        layout: layout.clone(),
        targets: gradient_targets(&layout, t_hot, t_cold, 1.0),
        internal_t: internal.then_some(t_ref),
    };
    let om = omega_max(&spec, p).map_err(|e| e.to_string())?;
    let dt = 0.005f64.min(0.4 / om);
    let mut it = Integrator::new(&spec, &ff, &thermo, dt, p).map_err(|e| e.to_string())?;
    let mut s = chain.lattice_state(p, RandomStream::new(seed, p as u64)).map_err(|e| e.to_string())?;
    it.run(&mut s, (equilibration_time / dt) as usize).map_err(|e| e.to_string())?;
    let stride = ((sample_every / dt).round() as usize).max(1);
    let steps = (production_time / dt) as usize;
    let (mut tm, mut tc, mut jc, mut jb) = (vec![], vec![], vec![], vec![]);
    let middle_mean = |temps: &[(Option<f64>, usize)]| {
        let (mut k, mut n) = (0.0, 0usize);
        for r in layout.middle_regions() {
            if let (Some(t), cnt) = temps[r] {
                k += t * cnt as f64;
                n += cnt;
            }
        }
        k / n as f64
    };
    for step in 1..=steps {
        it.step(&mut s).map_err(|e| e.to_string())?;
        if step % stride != 0 {
            continue;
        }
        let labels = assign_regions(&layout, &s).map_err(|e| e.to_string())?;
        let n_regions = layout.n_regions();
        tm.push(middle_mean(&region_temperatures(&s, &spec, &labels, n_regions, ProfileMode::BeadKinetic)));
        tc.push(middle_mean(&region_temperatures(&s, &spec, &labels, n_regions, ProfileMode::CentroidKinetic)));
        for (est, out) in [(FluxEstimator::Centroid, &mut jc), (FluxEstimator::BeadAverage, &mut jb)] {
            let recs = heat_flux_with(&s, &ff, &spec, &labels, &layout, est).map_err(|e| e.to_string())?;
            out.push(recs.iter().map(|r| r.flux).sum::<f64>() / recs.len() as f64);
        }
    }
    Ok(GradientRun {
        t_mid: mean_err(&tm),
        t_mid_centroid: mean_err(&tc),
        flux: mean_err(&jc),
        flux_bead: mean_err(&jb),
        secs: start.elapsed().as_secs_f64(),
    })
}

fn c4_mean_temperature() -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [1, 16, 32] {
        let r = gradient_run(1.1, 0.9, p, false, 100.0, 5000.0, 0.2, derive_seed(404, p as u64))?;
        let dev = (r.t_mid.0 - 1.0).abs();
        pass &= dev < 0.03;
        parts.push(format!(
            "P={p} T_mid {:.4}({:.4}) [centroid {:.3}({:.3})]",
            r.t_mid.0, r.t_mid.1, r.t_mid_centroid.0, r.t_mid_centroid.1
        ));
    }
    Ok((pass, parts.join(", ")))
}

fn c5_flux_convergence() -> Check {
    // cold enough that the chain is deep in the quantum regime
    let (t_hot, t_cold) = (0.065, 0.035);
    let mut flux = Vec::new();
    let mut parts = Vec::new();
    for p in [1, 16, 32, 64] {
        let r = gradient_run(t_hot, t_cold, p, true, 50.0, 20_000.0, 0.05, derive_seed(505, p as u64))?;
        parts.push(format!(
            "J({p}) {:.5}({:.5}) [T_mid {:.4}, bead-avg {:.4}, {:.0}s]",
            r.flux.0, r.flux.1, r.t_mid.0, r.flux_bead.0, r.secs
        ));
        flux.push(r.flux.0);
    }
    let (j1, j16, j32, j64) = (flux[0], flux[1], flux[2], flux[3]);
    let r1 = (j32 - j16).abs() / j16.abs();
    let r2 = (j64 - j32).abs() / j32.abs();
    Ok((
        r1 > r2 && r2 < 0.15,
        format!(
            "{}; |dJ| 16->32 {r1:.3}, 32->64 {r2:.3}; J(64)/J(1) = {:.3} (recorded only)",
            parts.join(", "),
            j64 / j1
        ),
    ))
}

fn c6_equilibrium_limit() -> Check {
    let err = |e: npi_core::error::Error| e.to_string();
    // npi average of the chain's virial energy over 16 unperturbed branches
    let chain = benchmark_chain();
    let spec = chain.spec(1.0, 1.0).map_err(err)?;
    let ff = ForceField::new(&spec).map_err(err)?;
    let thermo = ThermostatSpec::PileL { tau: 1.0, target_t: 1.0 };
    let p = 4;
    let obs: Vec<Arc<dyn Observable>> = vec![observable_by_name("energy_virial", &spec).map_err(err)?.into()];
    let mut it = Integrator::new(&spec, &ff, &thermo, 0.005, p).map_err(err)?;
    let mut s = chain.lattice_state(p, RandomStream::new(606, 0)).map_err(err)?;
    it.run(&mut s, 20_000).map_err(err)?;
    let mut reference = s.clone();
    let eq = sample_trajectory(&mut it, &mut reference, &spec, 400_000, 20, &obs, false).map_err(err)?;
    let (eq_mean, eq_err) = mean_err(&column(&eq, "energy_virial").map_err(err)?);
    let plan = BranchPlan::new(16, 1000, 2000, 0.005, 50, PerturbationSpec::none(), 607, 1);
    let harvest = {
        let mut run = LiveRun { integrator: &mut it, state: &mut s, steps: 16 * 1000 };
        harvest_initial_conditions(&mut run, &plan).map_err(err)?
    };
    let branches = run_branches(&harvest.snapshots, &plan, &spec, &ff, &thermo, &obs).map_err(err)?;
    let ens = BranchEnsemble::new(branches).map_err(err)?;
    let npi = npi_average(&ens, "energy_virial").map_err(err)?;
    let inside = npi.iter().filter(|pt| (pt.mean - eq_mean).abs() <= 3.0 * pt.stderr.hypot(eq_err)).count();
    let frac = inside as f64 / npi.len() as f64;

    // velocity autocorrelation of a free Langevin particle: (T/m) exp(-t/tau)
    let dt = 0.05;
    let mut free = SystemSpec::uniform(1, 1.0, 1, 100.0, 1.0);
    free.periodic = vec![true];
    let ff = ForceField::new(&free).map_err(err)?;
    let thermo = ThermostatSpec::PileL { tau: 1.0, target_t: 1.0 };
    let v: Vec<Arc<dyn Observable>> = vec![observable_by_name("centroid_velocity:0:0", &free).map_err(err)?.into()];
    let mut it = Integrator::new(&free, &ff, &thermo, dt, 1).map_err(err)?;
    let mut s = RingPolymerState::zeros(1, 1, 1, RandomStream::new(608, 0));
    it.run(&mut s, 1000).map_err(err)?;
    let max_lag = 60;
    let stride = 2;
    let mut traj = s.clone();
    let eq = sample_trajectory(&mut it, &mut traj, &free, 2_000_000, 1, &v, false).map_err(err)?;
    let vel = column(&eq, "centroid_velocity:0:0").map_err(err)?;
    let blocks: Vec<Vec<f64>> = vel
        .chunks(vel.len() / 20)
        .map(|b| stats::cross_correlation(b, b, max_lag).map_err(err))
        .collect::<Result<_, _>>()?;
    let plan = BranchPlan::new(1000, 100, max_lag, dt, stride, PerturbationSpec::none(), 609, 1);
    let harvest = {
        let mut run = LiveRun { integrator: &mut it, state: &mut s, steps: 1000 * 100 };
        harvest_initial_conditions(&mut run, &plan).map_err(err)?
    };
    let branches = run_branches(&harvest.snapshots, &plan, &free, &ff, &thermo, &v).map_err(err)?;
    let ens = BranchEnsemble::new(branches).map_err(err)?;
    let cb = correlation_branches(&ens, "centroid_velocity:0:0", "centroid_velocity:0:0").map_err(err)?;
    let (mut agree, mut oracle_b, mut oracle_e) = (0, 0, 0);
    for (m, pt) in cb.iter().enumerate() {
        let lag: Vec<f64> = blocks.iter().map(|b| b[m * stride]).collect();
        let (ce, se) = (stats::mean(&lag), stats::standard_error(&lag));
        let exact = (-pt.t).exp();
        agree += usize::from((pt.mean - ce).abs() <= 3.0 * pt.stderr.hypot(se));
        oracle_b += usize::from((pt.mean - exact).abs() <= 3.0 * pt.stderr);
        oracle_e += usize::from((ce - exact).abs() <= 3.0 * se);
    }
    let n = cb.len() as f64;
    let fr = |k: usize| k as f64 / n;
    let pass = frac >= 0.95 && fr(agree) >= 0.95 && fr(oracle_b) >= 0.95 && fr(oracle_e) >= 0.95;
    Ok((
        pass,
        format!(
            "npi vs equilibrium {eq_mean:.4}({eq_err:.4}): {inside}/{} points within 3 sigma; \
             C_vv branch vs trajectory {:.0}%, vs exp(-t): branch {:.0}%, trajectory {:.0}%",
            npi.len(),
            100.0 * fr(agree),
            100.0 * fr(oracle_b),
            100.0 * fr(oracle_e)
        ),
    ))
}

fn random_matrix(rng: &mut RandomStream, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.normal(), rng.normal()))
}

fn random_hermitian(rng: &mut RandomStream, n: usize) -> CMatrix {
    let a = random_matrix(rng, n);
    (&a + a.adjoint()) * c(0.5)
}

fn random_density(rng: &mut RandomStream, n: usize) -> Result<DensityMatrix, String> {
    let g = random_matrix(rng, n);
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    DensityMatrix::new(rho / tr).map_err(|e| e.to_string())
}

fn c7_lindblad_analytics() -> Check {
    let err = |e: npi_core::error::Error| e.to_string();
    let lambda = 0.4;
    let dt = 1e-3 / lambda;
    let t_final = 10.0;
    let excited = DensityMatrix::pure(&[c(1.0), c(0.0)]).map_err(err)?;
    let damped = LindbladGenerator::new(sigma_z() * c(0.5), vec![(sigma_minus(), lambda)], 1.0).map_err(err)?;
    let traj = evolve_recorded(&damped, &excited, t_final, dt, 100).map_err(err)?;
    let pop = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, r)| (r[(0, 0)].re - (-lambda * t).exp()).abs())
        .fold(0.0, f64::max);

    let plus = DensityMatrix::pure(&[c(0.5f64.sqrt()), c(0.5f64.sqrt())]).map_err(err)?;
    let dephasing = LindbladGenerator::new(sigma_z() * c(0.5), vec![(sigma_z(), lambda)], 1.0).map_err(err)?;
    let traj = evolve_recorded(&dephasing, &plus, t_final, dt, 100).map_err(err)?;
    let coh = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, r)| (r[(0, 1)].norm() - 0.5 * (-2.0 * lambda * t).exp()).abs())
        .fold(0.0, f64::max);

    let mut rng = RandomStream::new(707, 0);
    let h = random_hermitian(&mut rng, 3);
    let a = random_hermitian(&mut rng, 3);
    let rho0 = random_density(&mut rng, 3)?;
    let unitary = LindbladGenerator::new(h, vec![], 1.0).map_err(err)?;
    let mut sh = 0.0f64;
    for t in [0.5, 2.0, 5.0] {
        let (s, hz) = heisenberg_check(&unitary, &a, &rho0, t).map_err(err)?;
        sh = sh.max((s - hz).abs());
    }
    Ok((
        pop < 1e-6 && coh < 1e-6 && sh < 1e-7,
        format!("max |rho_ee - e^-lt| {pop:.1e}, max ||rho_eg| - e^-2lt/2| {coh:.1e}, Schrodinger-Heisenberg {sh:.1e}"),
    ))
}

fn c8_positivity() -> Check {
    let err = |e: npi_core::error::Error| e.to_string();
    let mut rng = RandomStream::new(808, 0);
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let n = 2 + (rng.next_u64() % 4) as usize;
        let h = random_hermitian(&mut rng, n);
        let n_jumps = 1 + (rng.next_u64() % 3) as usize;
        let jumps = (0..n_jumps).map(|_| (random_matrix(&mut rng, n), 0.05 + rng.uniform())).collect();
        let gen = LindbladGenerator::new(h, jumps, 1.0).map_err(err)?;
        let rho0 = random_density(&mut rng, n)?;
        let scale = npi_core::master_eq::generator_norm(&gen);
        let traj = evolve_recorded(&gen, &rho0, 5.0, 0.05 / scale, 10).map_err(err)?;
        worst = worst.min(positivity_report(&traj, 1e-10).worst());
    }
    let case = scan_redfield_violation(&[0.3, 0.6, 0.9, 1.2], 5, 8, (1.0, 1.0, 0.0, 0.0, 1.0), 5.0, 0.01, 1e-10)
        .map_err(err)?;
    let flagged = case.report.first_violation.is_some();
    let red = case.report.worst();
    Ok((
        worst >= -1e-10 && flagged && red < -1e-6,
        format!(
            "100 GKSL generators: worst eigenvalue {worst:.2e}; Redfield theta {:.1}: worst {red:.2e}, first flagged at t = {:?}",
            case.theta, case.report.first_violation
        ),
    ))
}

const SMALL_GRADIENT: &str = r#"
mode = "npi_gradient"
seed = 9
beads = [1, 4]

[chain]
n_particles = 10

[thermostat]
kind = "pile_l"
tau = 1.0
target_t = 1.0

[run]
dt = 0.01
equilibration_steps = 200
production_steps = 0

[branches]
n_branches = 4
spacing_steps = 50
branch_length_steps = 400
record_stride = 20

[gradient]
t_hot = 1.2
t_cold = 0.8
internal_t = 1.0
flux_estimator = "centroid"

[profile]
n_bins = 5
"#;

fn identical_outputs(text: &str, a: &Path, b: &Path, workers: (usize, usize)) -> Result<usize, String> {
    let cfg = parse_config(text).map_err(|e| e.to_string())?;
    let ma =
        run_experiment(&cfg, &RunOptions { output: a.to_path_buf(), workers: workers.0 }).map_err(|e| e.to_string())?;
    run_experiment(&cfg, &RunOptions { output: b.to_path_buf(), workers: workers.1 }).map_err(|e| e.to_string())?;
    for name in ma.files.iter().filter(|f| f.as_str() != MANIFEST_NAME) {
        let (x, y) =
            (fs::read(a.join(name)).map_err(|e| e.to_string())?, fs::read(b.join(name)).map_err(|e| e.to_string())?);
        if x != y {
            return Err(format!("{name} differs between repeated runs"));
        }
    }
    Ok(ma.files.len())
}

fn c9_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    let n_gradient = identical_outputs(SMALL_GRADIENT, &root.join("g1"), &root.join("g2"), (1, 2))?;
    let lindblad =
        fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/lindblad_damped_qubit.toml"))
            .map_err(|e| e.to_string())?;
    let n_lindblad = identical_outputs(&lindblad, &root.join("l1"), &root.join("l2"), (1, 1))?;

    // a checkpointed and resumed trajectory continues bit for bit
    let chain = benchmark_chain();
    let spec = chain.spec(1.0, 1.0).map_err(|e| e.to_string())?;
    let ff = ForceField::new(&spec).map_err(|e| e.to_string())?;
    let thermo = ThermostatSpec::PileL { tau: 1.0, target_t: 1.0 };
    let mut it = Integrator::new(&spec, &ff, &thermo, 0.005, 8).map_err(|e| e.to_string())?;
    let mut s = chain.lattice_state(8, RandomStream::new(909, 0)).map_err(|e| e.to_string())?;
    it.run(&mut s, 500).map_err(|e| e.to_string())?;
    let path = root.join("state.npi");
    save_checkpoint(&s, &spec, &path).map_err(|e| e.to_string())?;
    let mut resumed = load_checkpoint_for(&path, &spec).map_err(|e| e.to_string())?;
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let round_trip = bits(&resumed.positions) == bits(&s.positions)
        && bits(&resumed.momenta) == bits(&s.momenta)
        && resumed.rng == s.rng
        && resumed.time.to_bits() == s.time.to_bits();
    let hash = spec_hash(&spec);
    let bytes = encode(&s, &hash);
    let re_encoded = decode(&bytes).map(|(st, _)| encode(&st, &hash) == bytes).unwrap_or(false);
    it.run(&mut s, 500).map_err(|e| e.to_string())?;
    let mut fresh = Integrator::new(&spec, &ff, &thermo, 0.005, 8).map_err(|e| e.to_string())?;
    fresh.run(&mut resumed, 500).map_err(|e| e.to_string())?;
    let continued = bits(&resumed.positions) == bits(&s.positions) && bits(&resumed.momenta) == bits(&s.momenta);
    Ok((
        round_trip && re_encoded && continued,
        format!(
            "{n_gradient} gradient and {n_lindblad} lindblad files byte-identical; checkpoint round trip {round_trip}, \
             re-encode {re_encoded}, resumed run identical {continued}"
        ),
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("c1", "harmonic oscillator energy", c1_oscillator_energy),
        ("c2", "Trotter convergence order", c2_trotter_order),
        ("c3", "classical equipartition", c3_equipartition),
        ("c4", "steady-state mean temperature", c4_mean_temperature),
        ("c5", "flux convergence in P", c5_flux_convergence),
        ("c6", "NPI equilibrium limit", c6_equilibrium_limit),
        ("c7", "Lindblad analytics", c7_lindblad_analytics),
        ("c8", "positivity suite", c8_positivity),
        ("c9", "determinism and persistence", c9_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{id} {} {name} [{:.1}s]: {detail}",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
