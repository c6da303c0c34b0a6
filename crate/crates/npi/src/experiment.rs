//! Mode pipelines: equilibrate, branch, measure, and write artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use npi_core::dnemd::{
    harvest_initial_conditions, npi_average, run_branch, BranchEnsemble, BranchPlan, BranchSeries, LiveRun,
    PerturbationKind, PerturbationSpec,
};
use npi_core::estimators::{harmonic_finite_p_energy, harmonic_quantum_energy};
use npi_core::integrator::{Integrator, ThermostatSpec};
use npi_core::master_eq::{
    evolve_recorded, expectation, positivity_report, scan_redfield_violation, secular_reduce, tilted_qubit_redfield,
    Generator, LindbladGenerator, PositivityReport, RateEntry, RedfieldGenerator, Trajectory,
};
use npi_core::observables::{column, observable_by_name, Observable};
use npi_core::potentials::{ForceField, PotentialTerm};
use npi_core::rng::RandomStream;
use npi_core::stats;
use npi_core::thermal::{steady_state_detector, RegionLayout, RegionRole};
use npi_core::types::{RingPolymerState, SystemSpec};

use crate::config::{
    validate, ExperimentConfig, GradientSection, LindbladSection, Mode, OscillatorSection, ProfileSection,
    RedfieldModel, RedfieldSection,
};
use crate::error::{NpiError, Result};
use crate::manifest::{derive_seed, timestamp, RunManifest, RunStatus, SweepResult, MANIFEST_NAME};
use crate::output::{num, OutputDir};
use crate::probes::{BinQuantity, MiddleTemperature, ProfileBin, RegionFlux};

/// Invocation options that do not change results.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub output: PathBuf,
    pub workers: usize,
}

impl RunOptions {
    pub fn new(output: impl Into<PathBuf>) -> Self {
        Self { output: output.into(), workers: 1 }
    }
}

/// Runs the configured experiment. The manifest is written when the run
/// starts and finalized at the end; on failure it is marked failed and the
/// partial outputs are kept.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest> {
    validate(cfg)?;
    let mut out = OutputDir::create(&opts.output)?;
    let mut manifest = RunManifest::begin(cfg)?;
    out.write_untracked(MANIFEST_NAME, &manifest.to_json()?)?;
    let outcome = match cfg.mode {
        Mode::Equilibrium => sweep(cfg, &mut out, &mut manifest, equilibrium),
        Mode::NpiGradient => {
            sweep(cfg, &mut out, &mut manifest, |cfg, p, seed, out| gradient(cfg, p, seed, out, opts.workers.max(1)))
        }
        Mode::OscillatorBenchmark => oscillator(cfg, &mut out, &mut manifest),
        Mode::Lindblad => {
            lindblad(cfg.lindblad.as_ref().expect("validated"), &mut out).map(|r| manifest.results.push(r))
        }
        Mode::Redfield => {
            redfield(cfg.redfield.as_ref().expect("validated"), &mut out).map(|r| manifest.results.push(r))
        }
    };
    manifest.files = out.files().to_vec();
    manifest.finished = Some(timestamp());
    match outcome {
        Ok(()) => {
            manifest.status = RunStatus::Complete;
            out.write_untracked(MANIFEST_NAME, &manifest.to_json()?)?;
            Ok(manifest)
        }
        Err(e) => {
            manifest.status = RunStatus::Failed;
            manifest.error = Some(e.to_string());
            out.write_untracked(MANIFEST_NAME, &manifest.to_json()?)?;
            Err(e)
        }
    }
}

fn sweep<F>(cfg: &ExperimentConfig, out: &mut OutputDir, manifest: &mut RunManifest, mut one: F) -> Result<()>
where
    F: FnMut(&ExperimentConfig, usize, u64, &mut OutputDir) -> Result<SweepResult>,
{
    for &p in &cfg.beads {
        let seed = derive_seed(cfg.seed, p);
        let result = one(cfg, p, seed, out)?;
        manifest.results.push(result);
        manifest.files = out.files().to_vec();
        out.write_untracked(MANIFEST_NAME, &manifest.to_json()?)?;
    }
    Ok(())
}

/// System, force field and starting state for the molecular-dynamics modes.
fn md_setup(cfg: &ExperimentConfig, p: usize, seed: u64) -> Result<(SystemSpec, ForceField, RingPolymerState)> {
    let rng = RandomStream::new(seed, 0);
    let (spec, state) = match (&cfg.chain, &cfg.system) {
        (Some(c), _) => {
            let params = c.params();
            (params.spec(c.beta, c.hbar)?, params.lattice_state(p, rng)?)
        }
        (None, Some(s)) => {
            let centers = cfg.run.as_ref().and_then(|r| r.initial_positions.clone()).expect("validated");
            (s.clone(), RingPolymerState::collapsed(&centers, p, rng)?)
        }
        (None, None) => unreachable!("validated"),
    };
    let field = ForceField::new(&spec)?;
    Ok((spec, field, state))
}

fn mean_err(x: &[f64]) -> (f64, f64) {
    let m = stats::mean(x);
    let e = stats::correlated_standard_error(x).unwrap_or_else(|_| stats::standard_error(x));
    (m, e)
}

fn equilibrium(cfg: &ExperimentConfig, p: usize, seed: u64, out: &mut OutputDir) -> Result<SweepResult> {
    let run = cfg.run.as_ref().expect("validated");
    let thermostat = cfg.thermostat.as_ref().expect("validated");
    let (spec, field, mut state) = md_setup(cfg, p, seed)?;
    let mut integrator = Integrator::new(&spec, &field, thermostat, run.dt, p)?;
    let warnings = integrator.warnings().to_vec();
    integrator.run(&mut state, run.equilibration_steps)?;
    let start = state.time;
    let obs: Vec<Arc<dyn Observable>> =
        run.observables.iter().map(|n| observable_by_name(n, &spec).map(Arc::from)).collect::<npi_core::Result<_>>()?;
    let samples = npi_core::observables::sample_trajectory(
        &mut integrator,
        &mut state,
        &spec,
        run.production_steps,
        run.record_stride,
        &obs,
        false,
    )?;
    let mut header = vec!["time"];
    header.extend(run.observables.iter().map(String::as_str));
    out.write_csv(
        &format!("timeseries_P{p}.csv"),
        &header,
        samples.iter().map(|s| {
            let mut row = vec![num(start + s.time)];
            row.extend(run.observables.iter().map(|n| num(s.values[n])));
            row
        }),
    )?;
    out.write_checkpoint(&format!("state_P{p}.npi"), &state, &spec)?;
    let mut result = SweepResult { beads: p, seed, warnings, ..Default::default() };
    let mut rows = Vec::new();
    for name in &run.observables {
        let (m, e) = mean_err(&column(&samples, name)?);
        result.values.insert(name.clone(), m);
        result.values.insert(format!("{name}_err"), e);
        rows.push(vec![p.to_string(), name.clone(), num(m), num(e)]);
        if name == "temperature" {
            result.temperature = Some(m);
            result.temperature_err = Some(e);
        }
    }
    out.write_csv(&format!("summary_P{p}.csv"), &["beads", "observable", "mean", "stderr"], rows)?;
    Ok(result)
}

/// Layout for a gradient run: explicit, or the symmetric hot-middle-cold-middle-hot split of axis 0.
pub fn gradient_layout(g: &GradientSection, spec: &SystemSpec) -> Result<RegionLayout> {
    match &g.layout {
        Some(l) => Ok(l.clone()),
        None => Ok(RegionLayout::symmetric(0, 0.0, spec.box_length[0])?),
    }
}

fn run_branches_parallel(
    initials: &[RingPolymerState],
    plan: &BranchPlan,
    spec: &SystemSpec,
    field: &ForceField,
    base: &ThermostatSpec,
    obs: &[Arc<dyn Observable>],
    workers: usize,
) -> Result<Vec<BranchSeries>> {
    let workers = workers.min(initials.len()).max(1);
    let results: Vec<Vec<(usize, npi_core::Result<BranchSeries>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..initials.len())
                        .step_by(workers)
                        .map(|b| (b, run_branch(b, &initials[b], plan, spec, field, base, obs)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("branch worker panicked")).collect()
    });
    let mut flat: Vec<(usize, npi_core::Result<BranchSeries>)> = results.into_iter().flatten().collect();
    flat.sort_by_key(|(b, _)| *b);
    flat.into_iter().map(|(_, r)| r.map_err(NpiError::from)).collect()
}

fn gradient(cfg: &ExperimentConfig, p: usize, seed: u64, out: &mut OutputDir, workers: usize) -> Result<SweepResult> {
    let run = cfg.run.as_ref().expect("validated");
    let g = cfg.gradient.as_ref().expect("validated");
    let b = cfg.branches.as_ref().expect("validated");
    let default_profile = ProfileSection::default();
    let prof = cfg.profile.as_ref().unwrap_or(&default_profile);
    let thermostat = cfg.thermostat.as_ref().expect("validated");
    let (spec, field, mut state) = md_setup(cfg, p, seed)?;
    let layout = gradient_layout(g, &spec)?;

    let mut integrator = Integrator::new(&spec, &field, thermostat, run.dt, p)?;
    let mut warnings = integrator.warnings().to_vec();
    integrator.run(&mut state, run.equilibration_steps)?;
    out.write_checkpoint(&format!("equilibrated_P{p}.npi"), &state, &spec)?;

    let perturbation = PerturbationSpec {
        kind: PerturbationKind::ThermalGradient {
            layout: layout.clone(),
            t_hot: g.t_hot,
            t_cold: g.t_cold,
            gamma: g.gamma,
            internal_t: g.internal_t,
        },
        switch_on_steps: b.switch_on_steps,
    };
    let mut plan = BranchPlan::new(
        b.n_branches,
        b.spacing_steps,
        b.branch_length_steps,
        run.dt,
        b.record_stride,
        perturbation,
        seed,
        b.first_stream,
    );
    plan.noise = b.noise;
    let harvest = {
        let mut live =
            LiveRun { integrator: &mut integrator, state: &mut state, steps: b.n_branches * b.spacing_steps };
        harvest_initial_conditions(&mut live, &plan)?
    };
    warnings.extend(harvest.warnings.iter().cloned());

    let middles = layout.middle_regions();
    let mut obs: Vec<Arc<dyn Observable>> =
        vec![Arc::new(MiddleTemperature { layout: layout.clone(), mode: prof.mode })];
    for &r in &middles {
        obs.push(Arc::new(RegionFlux::new(layout.clone(), g.flux_estimator, r)));
    }
    let bins: Vec<(ProfileBin, ProfileBin)> = (0..prof.n_bins)
        .map(|k| {
            (
                ProfileBin::new(layout.clone(), prof.n_bins, k, BinQuantity::KineticSum, prof.mode),
                ProfileBin::new(layout.clone(), prof.n_bins, k, BinQuantity::Count, prof.mode),
            )
        })
        .collect();
    let centers: Vec<f64> = bins.iter().map(|(k, _)| k.center()).collect();
    let bin_names: Vec<(String, String)> = bins.iter().map(|(k, c)| (k.name.clone(), c.name.clone())).collect();
    for (k, c) in bins {
        obs.push(Arc::new(k));
        obs.push(Arc::new(c));
    }

    let mut series = run_branches_parallel(&harvest.snapshots, &plan, &spec, &field, thermostat, &obs, workers)?;
    let flux_names: Vec<String> = middles.iter().map(|r| format!("flux_region_{r}")).collect();
    for s in &mut series {
        for sample in &mut s.samples {
            let f = flux_names.iter().map(|n| sample.values[n]).sum::<f64>() / flux_names.len().max(1) as f64;
            sample.values.insert("flux".into(), f);
        }
    }
    let hot_power: Vec<f64> = series
        .iter()
        .map(|s| {
            let span = (b.branch_length_steps - b.switch_on_steps) as f64 * run.dt;
            let heat: f64 = layout
                .roles
                .iter()
                .enumerate()
                .filter(|(_, r)| **r == RegionRole::Hot)
                .map(|(k, _)| -s.thermostat_work[k])
                .sum();
            heat / span
        })
        .collect();
    let ensemble = BranchEnsemble::new(series)?;

    let npi_rows = |name: &str| -> Result<Vec<Vec<String>>> {
        Ok(npi_average(&ensemble, name)?
            .into_iter()
            .map(|pt| vec![num(pt.t), num(pt.mean), num(pt.stderr), pt.n_branches.to_string()])
            .collect())
    };
    let npi_header = ["t", "mean", "stderr", "n_branches"];
    out.write_csv(&format!("npi_P{p}_t_middle.csv"), &npi_header, npi_rows("t_middle")?)?;
    out.write_csv(&format!("npi_P{p}_flux.csv"), &npi_header, npi_rows("flux")?)?;

    let mut flux_rows = Vec::new();
    let region_means: Vec<Vec<npi_core::dnemd::NpiPoint>> =
        flux_names.iter().map(|n| npi_average(&ensemble, n)).collect::<npi_core::Result<_>>()?;
    for (k, t) in ensemble.times.iter().enumerate() {
        for (r, pts) in middles.iter().zip(&region_means) {
            flux_rows.push(vec![num(*t), num(pts[k].mean), r.to_string()]);
        }
    }
    out.write_csv(&format!("flux_P{p}.csv"), &["time", "flux", "region"], flux_rows)?;

    // steady-state window: the trailing fraction of every branch
    let n_t = ensemble.times.len();
    let first = n_t - ((n_t as f64 * g.average_fraction).ceil() as usize).clamp(1, n_t);
    let branch_means = |name: &str| -> Result<Vec<f64>> {
        ensemble.branches.iter().map(|s| Ok(stats::mean(&column(&s.samples[first..], name)?))).collect()
    };
    let over_branches = |x: &[f64]| (stats::mean(x), if x.len() > 1 { stats::standard_error(x) } else { f64::NAN });
    let (t_mid, t_err) = over_branches(&branch_means("t_middle")?);
    let (flux, flux_err) = over_branches(&branch_means("flux")?);

    let mut profile_rows = Vec::new();
    for (k, (kin, cnt)) in bin_names.iter().enumerate() {
        let (mut ksum, mut csum) = (0.0, 0.0);
        for s in &ensemble.branches {
            ksum += column(&s.samples[first..], kin)?.iter().sum::<f64>();
            csum += column(&s.samples[first..], cnt)?.iter().sum::<f64>();
        }
        let temp = if csum > 0.0 { num(2.0 * ksum / (csum * spec.dimension as f64)) } else { String::new() };
        let mode = match prof.mode {
            npi_core::thermal::ProfileMode::BeadKinetic => "bead_kinetic",
            npi_core::thermal::ProfileMode::CentroidKinetic => "centroid_kinetic",
        };
        profile_rows.push(vec![num(centers[k]), temp, (csum as u64).to_string(), mode.to_string()]);
    }
    out.write_csv(&format!("profile_P{p}.csv"), &["bin_center", "temperature", "count", "mode"], profile_rows)?;

    let mean_t = npi_average(&ensemble, "t_middle")?;
    let mean_f = npi_average(&ensemble, "flux")?;
    let tm: Vec<f64> = mean_t.iter().map(|x| x.mean).collect();
    let fm: Vec<f64> = mean_f.iter().map(|x| x.mean).collect();
    let window = (n_t / 10).max(1);
    let tol = 3.0 * flux_err.max(t_err).max(1e-12) * (ensemble.n_branches() as f64).sqrt();
    let mut values = BTreeMap::new();
    match steady_state_detector(&ensemble.times, &[&tm, &fm], window, tol) {
        Ok(st) => {
            if let Some(onset) = st.onset {
                values.insert("steady_onset".into(), onset);
            } else {
                warnings.push("no steady state detected within the branch length".into());
            }
        }
        Err(e) => warnings.push(format!("steady-state detection skipped: {e}")),
    }
    values.insert("hot_power".into(), stats::mean(&hot_power));
    if let Some(g) = harvest.inefficiency {
        values.insert("harvest_inefficiency".into(), g);
    }
    Ok(SweepResult {
        beads: p,
        seed,
        temperature: Some(t_mid),
        temperature_err: Some(t_err),
        flux: Some(flux),
        flux_err: Some(flux_err),
        values,
        warnings,
    })
}

/// One-dimensional harmonic oscillator as a single particle in an external well.
pub fn oscillator_spec(o: &OscillatorSection) -> SystemSpec {
    let mut spec = SystemSpec::uniform(1, o.mass, 1, 1e3, o.beta);
    spec.hbar = o.hbar;
    spec.topology.push(PotentialTerm::ExternalWell { i: 0, k_ext: o.mass * o.omega * o.omega, center: vec![0.0] });
    spec
}

/// Primitive and virial energies with correlated standard errors at one bead count.
pub fn oscillator_energies(o: &OscillatorSection, p: usize, seed: u64) -> Result<[(f64, f64); 2]> {
    let spec = oscillator_spec(o);
    let field = ForceField::new(&spec)?;
    let thermostat = ThermostatSpec::PileL { tau: o.tau, target_t: 1.0 / o.beta };
    let mut state = RingPolymerState::collapsed(&[vec![0.0]], p, RandomStream::new(seed, 0))?;
    let mut integrator = Integrator::new(&spec, &field, &thermostat, o.dt, p)?;
    integrator.run(&mut state, o.equilibration_steps)?;
    let obs: Vec<Arc<dyn Observable>> =
        vec![observable_by_name("energy_primitive", &spec)?.into(), observable_by_name("energy_virial", &spec)?.into()];
    let samples = npi_core::observables::sample_trajectory(
        &mut integrator,
        &mut state,
        &spec,
        o.production_steps,
        o.record_stride,
        &obs,
        false,
    )?;
    Ok([mean_err(&column(&samples, "energy_primitive")?), mean_err(&column(&samples, "energy_virial")?)])
}

fn oscillator(cfg: &ExperimentConfig, out: &mut OutputDir, manifest: &mut RunManifest) -> Result<()> {
    let o = cfg.oscillator.as_ref().expect("validated");
    let exact_q = harmonic_quantum_energy(o.beta, o.hbar, o.omega);
    let mut rows = Vec::new();
    for &p in &cfg.beads {
        let seed = derive_seed(cfg.seed, p);
        let [(prim, prim_err), (vir, vir_err)] = oscillator_energies(o, p, seed)?;
        let exact_p = harmonic_finite_p_energy(o.beta, o.hbar, o.omega, p);
        let pass = (prim - exact_p).abs() <= o.tolerance * exact_p && (vir - exact_p).abs() <= o.tolerance * exact_p;
        rows.push(vec![
            p.to_string(),
            num(prim),
            num(prim_err),
            num(vir),
            num(vir_err),
            num(exact_p),
            num(exact_q),
            pass.to_string(),
        ]);
        let mut values = BTreeMap::new();
        values.insert("energy_primitive".into(), prim);
        values.insert("energy_primitive_err".into(), prim_err);
        values.insert("energy_virial".into(), vir);
        values.insert("energy_virial_err".into(), vir_err);
        values.insert("exact_finite_p".into(), exact_p);
        values.insert("exact_quantum".into(), exact_q);
        values.insert("pass".into(), if pass { 1.0 } else { 0.0 });
        manifest.results.push(SweepResult { beads: p, seed, values, ..Default::default() });
    }
    out.write_csv(
        "energy_vs_p.csv",
        &["beads", "primitive", "primitive_err", "virial", "virial_err", "exact_finite_p", "exact_quantum", "pass"],
        rows,
    )
}

fn positivity_rows(r: &PositivityReport) -> Vec<Vec<String>> {
    r.times
        .iter()
        .zip(&r.min_eigenvalue)
        .zip(&r.trace_deviation)
        .map(|((t, m), d)| vec![num(*t), num(*m), num(*d)])
        .collect()
}

const POSITIVITY_HEADER: [&str; 3] = ["t", "min_eigenvalue", "trace_deviation"];

pub fn build_lindblad(l: &LindbladSection) -> Result<LindbladGenerator> {
    let h = l.hamiltonian.build().map_err(config_error("lindblad.hamiltonian"))?;
    let jumps = l
        .jumps
        .iter()
        .map(|j| Ok((j.operator.build().map_err(config_error("lindblad.jumps"))?, j.rate)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LindbladGenerator::new(h, jumps, l.hbar)?)
}

fn config_error(path: &'static str) -> impl Fn(String) -> NpiError {
    move |message| NpiError::Config(vec![crate::config::Diagnostic { path: path.into(), message }])
}

fn lindblad(l: &LindbladSection, out: &mut OutputDir) -> Result<SweepResult> {
    let gen = build_lindblad(l)?;
    let rho0 = l.initial.build(gen.dim()).map_err(config_error("lindblad.initial"))?;
    let traj = evolve_recorded(&gen, &rho0, l.t_final, l.dt, l.record_every)?;
    let ops: Vec<(String, npi_core::master_eq::CMatrix)> = l
        .observables
        .iter()
        .map(|o| Ok((o.name.clone(), o.operator.build().map_err(config_error("lindblad.observables"))?)))
        .collect::<Result<_>>()?;
    write_trajectory(out, "trajectory.csv", &traj, &ops)?;
    let report = positivity_report(&traj, 1e-10);
    out.write_csv("positivity.csv", &POSITIVITY_HEADER, positivity_rows(&report))?;
    let mut values = BTreeMap::new();
    values.insert("min_eigenvalue".into(), report.worst());
    Ok(SweepResult { beads: 0, values, ..Default::default() })
}

fn write_trajectory(
    out: &mut OutputDir,
    name: &str,
    traj: &Trajectory,
    ops: &[(String, npi_core::master_eq::CMatrix)],
) -> Result<()> {
    let dim = traj.states.first().map_or(0, |s| s.nrows());
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..dim).map(|k| format!("population_{k}")));
    header.extend(ops.iter().map(|(n, _)| n.clone()));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut rows = Vec::with_capacity(traj.times.len());
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![num(*t)];
        row.extend((0..dim).map(|k| num(rho[(k, k)].re)));
        let state = npi_core::master_eq::DensityMatrix { entries: rho.clone() };
        for (_, a) in ops {
            row.push(num(expectation(&state, a)?));
        }
        rows.push(row);
    }
    out.write_csv(name, &header, rows)
}

pub fn build_redfield(r: &RedfieldSection) -> Result<RedfieldGenerator> {
    Ok(match r.model {
        RedfieldModel::TiltedQubit => {
            tilted_qubit_redfield(r.w0, r.theta, r.gamma, r.gamma_0, r.shift, r.alpha2, r.hbar)?
        }
        RedfieldModel::General => {
            let h = r.hamiltonian.as_ref().expect("validated").build().map_err(config_error("redfield.hamiltonian"))?;
            let couplings = r
                .couplings
                .iter()
                .map(|c| c.build().map_err(config_error("redfield.couplings")))
                .collect::<Result<_>>()?;
            let rates = r.rates.iter().map(|x| RateEntry { omega: x.omega, gamma: x.gamma, shift: x.shift }).collect();
            RedfieldGenerator::new(h, couplings, rates, r.alpha2, r.hbar)?
        }
    })
}

fn redfield(r: &RedfieldSection, out: &mut OutputDir) -> Result<SweepResult> {
    let gen = build_redfield(r)?;
    let rho0 = r.initial.build(gen.dim()).map_err(config_error("redfield.initial"))?;
    let traj = evolve_recorded(&gen, &rho0, r.t_final, r.dt, r.record_every)?;
    write_trajectory(out, "trajectory.csv", &traj, &[])?;
    let report = positivity_report(&traj, r.tolerance);
    out.write_csv("positivity.csv", &POSITIVITY_HEADER, positivity_rows(&report))?;
    let mut values = BTreeMap::new();
    values.insert("min_eigenvalue".into(), report.worst());
    if let Some(t) = report.first_violation {
        values.insert("first_violation".into(), t);
    }
    let mut warnings = Vec::new();
    match secular_reduce(&gen) {
        Ok(sec) => {
            let straj = evolve_recorded(&sec, &rho0, r.t_final, r.dt, r.record_every)?;
            let srep = positivity_report(&straj, r.tolerance);
            out.write_csv("positivity_secular.csv", &POSITIVITY_HEADER, positivity_rows(&srep))?;
            values.insert("min_eigenvalue_secular".into(), srep.worst());
        }
        Err(e) => warnings.push(format!("no secular comparison: {e}")),
    }
    if let Some(scan) = &r.scan {
        let case = scan_redfield_violation(
            &scan.thetas,
            scan.n_polar,
            scan.n_azimuth,
            (r.w0, r.gamma, r.gamma_0, r.shift, r.alpha2),
            r.t_final,
            r.dt,
            r.tolerance,
        )?;
        out.write_csv(
            "scan.csv",
            &["theta", "polar", "azimuth", "min_eigenvalue", "first_violation"],
            [vec![
                num(case.theta),
                num(case.polar),
                num(case.azimuth),
                num(case.report.worst()),
                case.report.first_violation.map(num).unwrap_or_default(),
            ]],
        )?;
        values.insert("scan_min_eigenvalue".into(), case.report.worst());
    }
    Ok(SweepResult { beads: 0, values, warnings, ..Default::default() })
}

/// Default output directory when neither the config nor the command line names one.
pub fn default_output(cfg: &ExperimentConfig) -> PathBuf {
    Path::new("npi-output").join(cfg.mode.name())
}
