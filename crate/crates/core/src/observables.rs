//! Named observables and time-series sampling.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{estimator_position_observable, primitive_cached, virial_cached};
use crate::integrator::{bead_kinetic_energy, Integrator, ThermostatSpec};
use crate::potentials::{spring_energy, ForceField};
use crate::thermal::{particle_fluxes, particle_kinetic, ProfileMode};
use crate::types::{RingPolymerState, SystemSpec};

/// Everything an observable may read at one instant.
pub struct Probe<'a> {
    pub state: &'a RingPolymerState,
    pub spec: &'a SystemSpec,
    pub integrator: &'a mut Integrator,
}

pub trait Observable: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn evaluate(&self, probe: &mut Probe<'_>) -> Result<f64>;
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Potential,
    Kinetic,
    KineticCentroid,
    Temperature,
    TemperatureCentroid,
    EnergyPrimitive,
    EnergyVirial,
    Hamiltonian,
    Position { particle: usize, axis: usize },
    CentroidVelocity { particle: usize, axis: usize },
    Flux { axis: usize },
}

/// One of the observables known by name. Parametrised names use `:` separators,
/// e.g. `position:0:0` or `centroid_velocity:3:1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Builtin {
    name: String,
    kind: Kind,
}

pub const BUILTIN_NAMES: &[&str] = &[
    "potential",
    "kinetic",
    "kinetic_centroid",
    "temperature",
    "temperature_centroid",
    "energy_primitive",
    "energy_virial",
    "hamiltonian",
    "position:<particle>:<axis>",
    "centroid_velocity:<particle>:<axis>",
    "flux:<axis>",
];

impl Builtin {
    pub fn parse(name: &str, spec: &SystemSpec) -> Result<Self> {
        let unknown = || Error::UnknownObservable(name.to_string());
        let mut parts = name.split(':');
        let head = parts.next().ok_or_else(unknown)?;
        let args: Vec<usize> = parts.map(|s| s.parse::<usize>().map_err(|_| unknown())).collect::<Result<_>>()?;
        let n = spec.n_particles();
        let d = spec.dimension;
        let check = |particle: usize, axis: usize| {
            if particle < n && axis < d {
                Ok(())
            } else {
                Err(Error::UnknownObservable(format!("{name} (system has {n} particles in {d} dimensions)")))
            }
        };
        let kind = match (head, args.as_slice()) {
            ("potential", []) => Kind::Potential,
            ("kinetic", []) => Kind::Kinetic,
            ("kinetic_centroid", []) => Kind::KineticCentroid,
            ("temperature", []) => Kind::Temperature,
            ("temperature_centroid", []) => Kind::TemperatureCentroid,
            ("energy_primitive", []) => Kind::EnergyPrimitive,
            ("energy_virial", []) => Kind::EnergyVirial,
            ("hamiltonian", []) => Kind::Hamiltonian,
            ("position", &[particle, axis]) => {
                check(particle, axis)?;
                Kind::Position { particle, axis }
            }
            ("centroid_velocity", &[particle, axis]) => {
                check(particle, axis)?;
                Kind::CentroidVelocity { particle, axis }
            }
            ("flux", &[axis]) => {
                check(0, axis)?;
                Kind::Flux { axis }
            }
            _ => return Err(unknown()),
        };
        Ok(Self { name: name.to_string(), kind })
    }
}

fn kinetic(state: &RingPolymerState, spec: &SystemSpec, mode: ProfileMode) -> f64 {
    (0..state.n_particles()).map(|i| particle_kinetic(state, spec, i, mode)).sum()
}

impl Observable for Builtin {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, probe: &mut Probe<'_>) -> Result<f64> {
        let (state, spec) = (probe.state, probe.spec);
        let dof = (state.n_particles() * state.dimension()) as f64;
        let p = state.n_beads() as f64;
        Ok(match self.kind {
            Kind::Potential => probe.integrator.slice_energies(state)?.iter().sum::<f64>() / p,
            Kind::Kinetic => kinetic(state, spec, ProfileMode::BeadKinetic),
            Kind::KineticCentroid => kinetic(state, spec, ProfileMode::CentroidKinetic),
            Kind::Temperature => 2.0 * kinetic(state, spec, ProfileMode::BeadKinetic) / dof,
            Kind::TemperatureCentroid => 2.0 * kinetic(state, spec, ProfileMode::CentroidKinetic) / dof,
            Kind::EnergyPrimitive => primitive_cached(probe.integrator, state, spec)?,
            Kind::EnergyVirial => virial_cached(probe.integrator, state, spec)?,
            Kind::Hamiltonian => {
                let u = probe.integrator.slice_energies(state)?.iter().sum::<f64>() / p;
                bead_kinetic_energy(spec, state) + spring_energy(spec, state)? + u
            }
            Kind::Position { particle, axis } => {
                estimator_position_observable(state, |x| x[particle * state.dimension() + axis])
            }
            Kind::CentroidVelocity { particle, axis } => {
                state.centroid_momentum(particle)[axis] / spec.masses[particle]
            }
            Kind::Flux { axis } => {
                let f = particle_fluxes(state, probe.integrator.field(), spec)?;
                f.iter().skip(axis).step_by(state.dimension()).sum()
            }
        })
    }
}

type SliceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// User-supplied pure function of one bead slice, averaged over beads.
#[derive(Clone)]
pub struct PositionFunction {
    name: String,
    f: SliceFn,
}

impl PositionFunction {
    pub fn new(name: &str, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.to_string(), f: Arc::new(f) }
    }
}

impl fmt::Debug for PositionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PositionFunction").field("name", &self.name).finish()
    }
}

impl Observable for PositionFunction {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, probe: &mut Probe<'_>) -> Result<f64> {
        Ok(estimator_position_observable(probe.state, &*self.f))
    }
}

/// Name lookup: registered observables first, then the built-ins.
#[derive(Clone, Debug, Default)]
pub struct ObservableRegistry {
    custom: BTreeMap<String, Arc<dyn Observable>>,
}

impl ObservableRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, obs: Arc<dyn Observable>) {
        self.custom.insert(obs.name().to_string(), obs);
    }

    pub fn resolve(&self, name: &str, spec: &SystemSpec) -> Result<Arc<dyn Observable>> {
        if let Some(o) = self.custom.get(name) {
            return Ok(o.clone());
        }
        Ok(Arc::new(Builtin::parse(name, spec)?))
    }

    pub fn resolve_all(&self, names: &[String], spec: &SystemSpec) -> Result<Vec<Arc<dyn Observable>>> {
        names.iter().map(|n| self.resolve(n, spec)).collect()
    }
}

/// Resolves a built-in observable by name.
pub fn observable_by_name(name: &str, spec: &SystemSpec) -> Result<Box<dyn Observable>> {
    Ok(Box::new(Builtin::parse(name, spec)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSample {
    pub time: f64,
    pub values: BTreeMap<String, f64>,
}

impl EstimatorSample {
    pub fn get(&self, name: &str) -> Result<f64> {
        self.values.get(name).copied().ok_or_else(|| Error::UnknownObservable(name.to_string()))
    }
}

pub fn record(
    integrator: &mut Integrator,
    state: &RingPolymerState,
    spec: &SystemSpec,
    time: f64,
    observables: &[Arc<dyn Observable>],
) -> Result<EstimatorSample> {
    let mut values = BTreeMap::new();
    let mut probe = Probe { state, spec, integrator };
    for o in observables {
        let v = o.evaluate(&mut probe)?;
        if !v.is_finite() {
            return Err(Error::Contract(format!("observable {} is not finite at t = {time}", o.name())));
        }
        values.insert(o.name().to_string(), v);
    }
    Ok(EstimatorSample { time, values })
}

/// Advances `n_steps` and records every `stride` steps. With `include_initial`
/// the state before the first step is recorded at time 0; times are relative to the start.
pub fn sample_trajectory(
    integrator: &mut Integrator,
    state: &mut RingPolymerState,
    spec: &SystemSpec,
    n_steps: usize,
    stride: usize,
    observables: &[Arc<dyn Observable>],
    include_initial: bool,
) -> Result<Vec<EstimatorSample>> {
    if stride == 0 {
        return Err(Error::Domain("sample stride must be positive".into()));
    }
    let dt = integrator.dt();
    let mut out = Vec::with_capacity(n_steps / stride + 1);
    if include_initial {
        out.push(record(integrator, state, spec, 0.0, observables)?);
    }
    for step in 1..=n_steps {
        integrator.step(state)?;
        if step % stride == 0 {
            out.push(record(integrator, state, spec, step as f64 * dt, observables)?);
        }
    }
    Ok(out)
}

/// Equilibrium run from `state`, sampling every `sample_stride` steps.
#[allow(clippy::too_many_arguments)]
pub fn run_equilibrium_sampling(
    state: &mut RingPolymerState,
    spec: &SystemSpec,
    field: &ForceField,
    thermostat: &ThermostatSpec,
    dt: f64,
    n_steps: usize,
    sample_stride: usize,
    observables: &[Arc<dyn Observable>],
) -> Result<Vec<EstimatorSample>> {
    state.check_shape(spec)?;
    let mut integrator = Integrator::new(spec, field, thermostat, dt, state.n_beads())?;
    sample_trajectory(&mut integrator, state, spec, n_steps, sample_stride, observables, false)
}

/// Column of one observable across samples.
pub fn column(samples: &[EstimatorSample], name: &str) -> Result<Vec<f64>> {
    samples.iter().map(|s| s.get(name)).collect()
}
