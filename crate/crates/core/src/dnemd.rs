//! Branched non-equilibrium averaging.
//!
//! Snapshots harvested along one equilibrium trajectory seed independent branch
//! trajectories that evolve under a perturbation. Branch observables recorded
//! on a shared time grid are then averaged across the ensemble.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{Integrator, ThermostatSpec};
use crate::observables::{column, record, EstimatorSample, Observable};
use crate::potentials::{ForceField, PotentialTerm};
use crate::rng::RandomStream;
use crate::stats;
use crate::thermal::{gradient_targets, RegionLayout};
use crate::types::{bead_mass, RingPolymerState, SystemSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationKind {
    None,
    /// Region baths replace the equilibrium thermostat.
    /// `internal_t` additionally thermostats the internal ring modes of unbathed particles.
    ThermalGradient {
        layout: RegionLayout,
        t_hot: f64,
        t_cold: f64,
        gamma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        internal_t: Option<f64>,
    },
    /// Extra potential terms added to the force field.
    CustomForce {
        name: String,
        terms: Vec<PotentialTerm>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    /// Branch steps run under equilibrium dynamics before the perturbation acts.
    #[serde(default)]
    pub switch_on_steps: usize,
}

impl PerturbationSpec {
    pub fn none() -> Self {
        Self { kind: PerturbationKind::None, switch_on_steps: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if let PerturbationKind::ThermalGradient { layout, t_hot, t_cold, gamma, internal_t } = &self.kind {
            layout.validate()?;
            if !(*t_cold > 0.0 && t_hot > t_cold) {
                return Err(Error::Configuration(format!(
                    "thermal gradient needs T_hot > T_cold > 0, got T_hot = {t_hot}, T_cold = {t_cold}"
                )));
            }
            if !(*gamma > 0.0) {
                return Err(Error::Configuration(format!("bath friction must be positive, got {gamma}")));
            }
            if let Some(t) = internal_t {
                if !(*t > 0.0 && t.is_finite()) {
                    return Err(Error::Configuration(format!("internal-mode temperature must be positive, got {t}")));
                }
            }
        }
        Ok(())
    }

    /// Force field and thermostat in force once the perturbation is on.
    pub fn dynamics(&self, field: &ForceField, base: &ThermostatSpec) -> (ForceField, ThermostatSpec) {
        match &self.kind {
            PerturbationKind::None => (field.clone(), base.clone()),
            PerturbationKind::ThermalGradient { layout, t_hot, t_cold, gamma, internal_t } => (
                field.clone(),
                ThermostatSpec::RegionLangevin {
                    layout: layout.clone(),
                    targets: gradient_targets(layout, *t_hot, *t_cold, *gamma),
                    internal_t: *internal_t,
                },
            ),
            PerturbationKind::CustomForce { terms, .. } => (field.extended(terms), base.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchNoise {
    /// Fresh thermostat noise stream per branch, keyed by the plan seed and stream id.
    Fresh,
    /// Keep the harvested state's stream, continuing the equilibrium noise.
    Continuation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPlan {
    pub n_branches: usize,
    pub spacing_steps: usize,
    pub branch_length_steps: usize,
    pub branch_dt: f64,
    pub record_stride: usize,
    pub perturbation: PerturbationSpec,
    pub seed: u64,
    pub stream_ids: Vec<u64>,
    pub noise: BranchNoise,
    /// Redraw bead momenta from the Maxwell-Boltzmann distribution at launch (experimental).
    #[serde(default)]
    pub resample_momenta: bool,
}

impl BranchPlan {
    /// Plan with stream ids `first_stream, first_stream + 1, ...`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_branches: usize,
        spacing_steps: usize,
        branch_length_steps: usize,
        branch_dt: f64,
        record_stride: usize,
        perturbation: PerturbationSpec,
        seed: u64,
        first_stream: u64,
    ) -> Self {
        Self {
            n_branches,
            spacing_steps,
            branch_length_steps,
            branch_dt,
            record_stride,
            perturbation,
            seed,
            stream_ids: (0..n_branches as u64).map(|k| first_stream + k).collect(),
            noise: BranchNoise::Fresh,
            resample_momenta: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_branches == 0 || self.spacing_steps == 0 || self.record_stride == 0 {
            return Err(Error::Configuration("branch count, spacing and record stride must be positive".into()));
        }
        if !(self.branch_dt > 0.0 && self.branch_dt.is_finite()) {
            return Err(Error::Configuration(format!("branch dt must be positive, got {}", self.branch_dt)));
        }
        if self.stream_ids.len() != self.n_branches {
            return Err(Error::Configuration(format!(
                "{} stream ids for {} branches",
                self.stream_ids.len(),
                self.n_branches
            )));
        }
        let mut ids = self.stream_ids.clone();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Configuration("branch stream ids must be distinct".into()));
        }
        self.perturbation.validate()
    }

    /// Recording times `m * record_stride * branch_dt`, starting at 0.
    pub fn time_grid(&self) -> Vec<f64> {
        (0..=self.branch_length_steps / self.record_stride)
            .map(|m| (m * self.record_stride) as f64 * self.branch_dt)
            .collect()
    }
}

/// A trajectory that can be stepped for a known number of steps.
pub trait TrajectorySource {
    /// Steps still available.
    fn remaining(&self) -> usize;
    /// Advances one step; returns the new state and its potential energy.
    fn advance(&mut self) -> Result<(&RingPolymerState, f64)>;
}

/// Live equilibrium run driven by an integrator.
pub struct LiveRun<'a> {
    pub integrator: &'a mut Integrator,
    pub state: &'a mut RingPolymerState,
    pub steps: usize,
}

impl TrajectorySource for LiveRun<'_> {
    fn remaining(&self) -> usize {
        self.steps
    }

    fn advance(&mut self) -> Result<(&RingPolymerState, f64)> {
        if self.steps == 0 {
            return Err(Error::InsufficientSampling("trajectory exhausted".into()));
        }
        self.integrator.step(self.state)?;
        self.steps -= 1;
        let p = self.state.n_beads() as f64;
        let u = self.integrator.slice_energies(self.state)?.iter().sum::<f64>() / p;
        Ok((self.state, u))
    }
}

/// Stored trajectory: `states[s]` is the state after `s + 1` steps.
pub struct StoredRun<'a> {
    pub states: &'a [RingPolymerState],
    pub potential: &'a [f64],
    pub cursor: usize,
}

impl TrajectorySource for StoredRun<'_> {
    fn remaining(&self) -> usize {
        self.states.len() - self.cursor
    }

    fn advance(&mut self) -> Result<(&RingPolymerState, f64)> {
        let s =
            self.states.get(self.cursor).ok_or_else(|| Error::InsufficientSampling("trajectory exhausted".into()))?;
        let u = self.potential.get(self.cursor).copied().unwrap_or(0.0);
        self.cursor += 1;
        Ok((s, u))
    }
}

#[derive(Clone, Debug)]
pub struct Harvest {
    pub snapshots: Vec<RingPolymerState>,
    /// Statistical inefficiency of the potential energy along the harvest run, in steps.
    pub inefficiency: Option<f64>,
    pub warnings: Vec<String>,
}

/// Takes snapshots at steps `spacing, 2 spacing, ..., n_branches * spacing`.
pub fn harvest_initial_conditions(run: &mut dyn TrajectorySource, plan: &BranchPlan) -> Result<Harvest> {
    plan.validate()?;
    let needed = plan.n_branches * plan.spacing_steps;
    if run.remaining() < needed {
        return Err(Error::InsufficientSampling(format!(
            "{} branches spaced {} steps apart need {needed} steps, trajectory has {}",
            plan.n_branches,
            plan.spacing_steps,
            run.remaining()
        )));
    }
    let mut snapshots = Vec::with_capacity(plan.n_branches);
    let mut potential = Vec::with_capacity(needed);
    for step in 1..=needed {
        let (s, u) = run.advance()?;
        potential.push(u);
        if step % plan.spacing_steps == 0 {
            snapshots.push(s.clone());
        }
    }
    let mut warnings = Vec::new();
    let inefficiency = stats::statistical_inefficiency(&potential, 16).ok();
    match inefficiency {
        Some(g) if (plan.spacing_steps as f64) < g => warnings.push(format!(
            "harvest spacing of {} steps is below the potential-energy correlation time of {g:.1} steps",
            plan.spacing_steps
        )),
        None => warnings.push("harvest run too short to estimate the correlation time".into()),
        _ => {}
    }
    Ok(Harvest { snapshots, inefficiency, warnings })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchSeries {
    pub branch: usize,
    pub samples: Vec<EstimatorSample>,
    pub final_state: RingPolymerState,
    /// Heat removed by each bath interval during the perturbed part of the branch.
    pub thermostat_work: Vec<f64>,
}

/// Evolves one branch and records on the plan's time grid (time 0 is the launch).
#[allow(clippy::too_many_arguments)]
pub fn run_branch(
    branch: usize,
    initial: &RingPolymerState,
    plan: &BranchPlan,
    spec: &SystemSpec,
    field: &ForceField,
    base_thermostat: &ThermostatSpec,
    observables: &[Arc<dyn Observable>],
) -> Result<BranchSeries> {
    run_branch_inner(branch, initial, plan, spec, field, base_thermostat, observables)
        .map_err(|e| Error::Branch { branch, source: alloc::boxed::Box::new(e) })
}

fn run_branch_inner(
    branch: usize,
    initial: &RingPolymerState,
    plan: &BranchPlan,
    spec: &SystemSpec,
    field: &ForceField,
    base_thermostat: &ThermostatSpec,
    observables: &[Arc<dyn Observable>],
) -> Result<BranchSeries> {
    plan.validate()?;
    let stream = *plan
        .stream_ids
        .get(branch)
        .ok_or_else(|| Error::Configuration(format!("no stream id for branch {branch}")))?;
    let mut state = initial.clone();
    if plan.noise == BranchNoise::Fresh {
        state.rng = RandomStream::new(plan.seed, stream);
    }
    if plan.resample_momenta {
        let p = state.n_beads();
        for i in 0..state.n_particles() {
            let sigma = libm::sqrt(bead_mass(spec.masses[i], p) * spec.temperature());
            for j in 0..p {
                for a in 0..state.dimension() {
                    let v = sigma * state.rng.normal();
                    state.momentum_mut(i, j)[a] = v;
                }
            }
        }
    }
    let n_beads = state.n_beads();
    let mut equilibrium = Integrator::new(spec, field, base_thermostat, plan.branch_dt, n_beads)?;
    let (pfield, pthermo) = plan.perturbation.dynamics(field, base_thermostat);
    let mut perturbed = Integrator::new(spec, &pfield, &pthermo, plan.branch_dt, n_beads)?;
    let mut samples = Vec::with_capacity(plan.branch_length_steps / plan.record_stride + 1);
    let grid = plan.time_grid();
    let switch = plan.perturbation.switch_on_steps;
    {
        let it = if switch > 0 { &mut equilibrium } else { &mut perturbed };
        samples.push(record(it, &state, spec, grid[0], observables)?);
    }
    for step in 1..=plan.branch_length_steps {
        let it = if step <= switch { &mut equilibrium } else { &mut perturbed };
        it.step(&mut state)?;
        if step % plan.record_stride == 0 {
            samples.push(record(it, &state, spec, grid[step / plan.record_stride], observables)?);
        }
    }
    Ok(BranchSeries { branch, samples, final_state: state, thermostat_work: perturbed.thermostat_work().to_vec() })
}

/// Runs the listed branches one after another.
pub fn run_branches(
    initials: &[RingPolymerState],
    plan: &BranchPlan,
    spec: &SystemSpec,
    field: &ForceField,
    base_thermostat: &ThermostatSpec,
    observables: &[Arc<dyn Observable>],
) -> Result<Vec<BranchSeries>> {
    initials
        .iter()
        .enumerate()
        .map(|(b, s)| run_branch(b, s, plan, spec, field, base_thermostat, observables))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchEnsemble {
    pub times: Vec<f64>,
    pub branches: Vec<BranchSeries>,
}

impl BranchEnsemble {
    /// Orders branches by index and checks that all share one time grid.
    pub fn new(mut branches: Vec<BranchSeries>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InsufficientSampling("empty branch ensemble".into()));
        }
        branches.sort_by_key(|b| b.branch);
        let times: Vec<f64> = branches[0].samples.iter().map(|s| s.time).collect();
        for b in &branches[1..] {
            let t: Vec<f64> = b.samples.iter().map(|s| s.time).collect();
            if t != times {
                return Err(Error::Alignment(format!(
                    "branch {} has a different time grid from branch {}",
                    b.branch, branches[0].branch
                )));
            }
        }
        Ok(Self { times, branches })
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NpiPoint {
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
    pub n_branches: usize,
}

/// Across-branch mean and standard error of `name` at every grid time.
pub fn npi_average(ensemble: &BranchEnsemble, name: &str) -> Result<Vec<NpiPoint>> {
    let cols: Vec<Vec<f64>> = ensemble.branches.iter().map(|b| column(&b.samples, name)).collect::<Result<_>>()?;
    Ok(ensemble
        .times
        .iter()
        .enumerate()
        .map(|(m, &t)| {
            let vals: Vec<f64> = cols.iter().map(|c| c[m]).collect();
            NpiPoint { t, mean: stats::mean(&vals), stderr: stats::standard_error(&vals), n_branches: vals.len() }
        })
        .collect())
}

/// `C_AB(l) = <A(t0) B(t0 + l)>` averaged over time origins of one equilibrium run.
/// Returns `(lag time, C)` pairs for lags `0..=max_lag` samples.
pub fn correlation_equilibrium(
    samples: &[EstimatorSample],
    a: &str,
    b: &str,
    max_lag: usize,
) -> Result<Vec<(f64, f64)>> {
    let xa = column(samples, a)?;
    let xb = column(samples, b)?;
    let c = stats::cross_correlation(&xa, &xb, max_lag)?;
    let dt = if samples.len() > 1 { samples[1].time - samples[0].time } else { 0.0 };
    Ok(c.into_iter().enumerate().map(|(l, v)| (l as f64 * dt, v)).collect())
}

/// Branch-ensemble form of the same correlation: `<A(0) B(t_m)>` over branches.
pub fn correlation_branches(ensemble: &BranchEnsemble, a: &str, b: &str) -> Result<Vec<NpiPoint>> {
    let mut out = Vec::with_capacity(ensemble.times.len());
    let a0: Vec<f64> = ensemble.branches.iter().map(|br| br.samples[0].get(a)).collect::<Result<_>>()?;
    for (m, &t) in ensemble.times.iter().enumerate() {
        let prod: Vec<f64> =
            ensemble.branches.iter().zip(&a0).map(|(br, x)| Ok(x * br.samples[m].get(b)?)).collect::<Result<_>>()?;
        out.push(NpiPoint {
            t,
            mean: stats::mean(&prod),
            stderr: stats::standard_error(&prod),
            n_branches: prod.len(),
        });
    }
    Ok(out)
}
