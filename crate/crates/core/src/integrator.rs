//! BAOAB ring-polymer integrator with normal-mode Langevin thermostats.
//!
//! Each bead carries mass `m / P` while springs have stiffness `m omega_P^2` and
//! the physical potential couples with weight `1/P`. Static averages are the
//! same for any bead mass; this choice keeps the centroid on the physical time
//! scale, so transport coefficients do not drift with `P`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal_modes::{build_normal_modes, NormalModeBasis};
use crate::potentials::ForceField;
use crate::thermal::{RegionLayout, RegionRole};
use crate::types::{bead_mass, omega_p, RingPolymerState, SystemSpec};

/// Above this `dt * omega_max` the step is rejected outright.
pub const DT_HARD_LIMIT: f64 = 1.0;
/// Above this `dt * omega_max` a warning is recorded.
pub const DT_SOFT_LIMIT: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionTarget {
    /// Interval index in the layout.
    pub region: usize,
    pub target_t: f64,
    /// Centroid friction; zero switches the bath off.
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThermostatSpec {
    None,
    /// Centroid friction `1/tau`, internal mode `k` friction `2 Omega_k`.
    PileL {
        tau: f64,
        target_t: f64,
    },
    /// PILE-L baths acting only on particles whose centroid lies in a target region.
    /// With `internal_t` set, the internal ring modes of all other particles are
    /// also thermostatted (friction `2 Omega_k`) at that temperature; their centroids stay free.
    RegionLangevin {
        layout: RegionLayout,
        targets: Vec<RegionTarget>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        internal_t: Option<f64>,
    },
}

impl ThermostatSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::None => Ok(()),
            Self::PileL { tau, target_t } => {
                if !(*tau > 0.0 && tau.is_finite()) {
                    return Err(Error::Configuration(format!("thermostat tau must be positive, got {tau}")));
                }
                if !(*target_t > 0.0 && target_t.is_finite()) {
                    return Err(Error::Configuration(format!("target temperature must be positive, got {target_t}")));
                }
                Ok(())
            }
            Self::RegionLangevin { layout, targets, internal_t } => {
                layout.validate()?;
                if let Some(t) = internal_t {
                    if !(*t > 0.0 && t.is_finite()) {
                        return Err(Error::Configuration(format!(
                            "internal-mode temperature must be positive, got {t}"
                        )));
                    }
                }
                let mut seen = vec![false; layout.n_regions()];
                for t in targets {
                    if t.region >= layout.n_regions() {
                        return Err(Error::Configuration(format!("no region {} in layout", t.region)));
                    }
                    if layout.roles[t.region] == RegionRole::Middle {
                        return Err(Error::Configuration(format!(
                            "region {} is a middle region and cannot carry a bath",
                            t.region
                        )));
                    }
                    if core::mem::replace(&mut seen[t.region], true) {
                        return Err(Error::Configuration(format!("region {} has two baths", t.region)));
                    }
                    if !(t.target_t > 0.0 && t.target_t.is_finite()) {
                        return Err(Error::Configuration(format!(
                            "target temperature must be positive, got {}",
                            t.target_t
                        )));
                    }
                    if !(t.gamma >= 0.0 && t.gamma.is_finite()) {
                        return Err(Error::Configuration(format!("friction must be non-negative, got {}", t.gamma)));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Fastest angular frequency for `P` beads: the top free-ring mode combined
/// with the physical bound of [`omega_physical`].
pub fn omega_max(spec: &SystemSpec, n_beads: usize) -> Result<f64> {
    let wp = omega_p(spec.beta, spec.hbar, n_beads)?;
    let basis = build_normal_modes(n_beads);
    let ring = basis.dynamical_frequencies(wp).into_iter().fold(0.0, f64::max);
    Ok(libm::hypot(ring, omega_physical(spec)))
}

/// Gershgorin bound on the physical frequencies from the term stiffnesses.
/// Exact for a uniform harmonic chain; an estimate for anharmonic terms.
pub fn omega_physical(spec: &SystemSpec) -> f64 {
    let mut row = vec![0.0; spec.n_particles()];
    for term in &spec.topology {
        let k = term.stiffness();
        let members = term.members();
        // a term coupling m particles contributes at most m k to each row sum
        let weight = if members.len() == 1 { 1.0 } else { members.len() as f64 };
        for &i in &members {
            row[i] += weight * k;
        }
    }
    row.iter().zip(&spec.masses).map(|(r, m)| libm::sqrt(r / m)).fold(0.0, f64::max)
}

/// Rejects `dt * omega_max > 1`; returns a warning above 0.5.
pub fn check_time_step(spec: &SystemSpec, n_beads: usize, dt: f64) -> Result<Option<String>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::StepSize(format!("dt must be positive, got {dt}")));
    }
    let x = dt * omega_max(spec, n_beads)?;
    if x > DT_HARD_LIMIT {
        Err(Error::StepSize(format!(
            "dt * omega_max = {x:.3} exceeds {DT_HARD_LIMIT}; reduce dt below {:.3e}",
            DT_SOFT_LIMIT * dt / x
        )))
    } else if x > DT_SOFT_LIMIT {
        Ok(Some(format!("dt * omega_max = {x:.3} exceeds the recommended {DT_SOFT_LIMIT}")))
    } else {
        Ok(None)
    }
}

/// Reusable BAOAB stepper. Owns scratch buffers and a force cache keyed on positions.
#[derive(Clone, Debug)]
pub struct Integrator {
    field: ForceField,
    thermostat: ThermostatSpec,
    masses: Vec<f64>,
    n: usize,
    p: usize,
    d: usize,
    dt: f64,
    basis: NormalModeBasis,
    omega: Vec<f64>,
    cos_half: Vec<f64>,
    sin_half: Vec<f64>,
    forces: Vec<f64>,
    slice_energy: Vec<f64>,
    cached_at: Vec<f64>,
    cache_valid: bool,
    qx: Vec<f64>,
    qp: Vec<f64>,
    backup_x: Vec<f64>,
    backup_p: Vec<f64>,
    labels: Vec<usize>,
    work: Vec<f64>,
    warnings: Vec<String>,
}

impl Integrator {
    pub fn new(
        spec: &SystemSpec,
        field: &ForceField,
        thermostat: &ThermostatSpec,
        dt: f64,
        n_beads: usize,
    ) -> Result<Self> {
        spec.validate()?;
        thermostat.validate()?;
        if field.n_particles() != spec.n_particles() {
            return Err(Error::DimensionMismatch { expected: spec.n_particles(), actual: field.n_particles() });
        }
        if field.dimension() != spec.dimension {
            return Err(Error::DimensionMismatch { expected: spec.dimension, actual: field.dimension() });
        }
        if n_beads == 0 {
            return Err(Error::Domain("a ring needs at least one bead".into()));
        }
        if let ThermostatSpec::RegionLangevin { layout, .. } = thermostat {
            if layout.axis >= spec.dimension {
                return Err(Error::Configuration(format!(
                    "layout axis {} outside {} dimensions",
                    layout.axis, spec.dimension
                )));
            }
        }
        let mut warnings = Vec::new();
        warnings.extend(check_time_step(spec, n_beads, dt)?);
        let basis = build_normal_modes(n_beads);
        let omega = basis.dynamical_frequencies(omega_p(spec.beta, spec.hbar, n_beads)?);
        let cos_half = omega.iter().map(|w| libm::cos(w * dt / 2.0)).collect();
        let sin_half = omega.iter().map(|w| libm::sin(w * dt / 2.0)).collect();
        let n = spec.n_particles();
        let d = spec.dimension;
        let len = n * n_beads * d;
        let n_regions = match thermostat {
            ThermostatSpec::RegionLangevin { layout, .. } => layout.n_regions(),
            _ => 1,
        };
        Ok(Self {
            field: field.clone(),
            thermostat: thermostat.clone(),
            masses: spec.masses.iter().map(|&m| bead_mass(m, n_beads)).collect(),
            n,
            p: n_beads,
            d,
            dt,
            basis,
            omega,
            cos_half,
            sin_half,
            forces: vec![0.0; len],
            slice_energy: vec![0.0; n_beads],
            cached_at: vec![0.0; len],
            cache_valid: false,
            qx: vec![0.0; len],
            qp: vec![0.0; len],
            backup_x: vec![0.0; len],
            backup_p: vec![0.0; len],
            labels: vec![0; n],
            work: vec![0.0; n_regions],
            warnings,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_beads(&self) -> usize {
        self.p
    }

    pub fn field(&self) -> &ForceField {
        &self.field
    }

    pub fn thermostat(&self) -> &ThermostatSpec {
        &self.thermostat
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Free-ring angular frequencies of the dynamics, in mode index order.
    pub fn mode_frequencies(&self) -> &[f64] {
        &self.omega
    }

    /// Kinetic energy removed from the system by each bath interval (negative when heat flows in).
    pub fn thermostat_work(&self) -> &[f64] {
        &self.work
    }

    pub fn reset_thermostat_work(&mut self) {
        self.work.iter_mut().for_each(|w| *w = 0.0);
    }

    fn shape_check(&self, state: &RingPolymerState) -> Result<()> {
        if state.n_particles() != self.n || state.n_beads() != self.p || state.dimension() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.n * self.p * self.d,
                actual: state.n_particles() * state.n_beads() * state.dimension(),
            });
        }
        Ok(())
    }

    fn refresh_forces(&mut self, state: &RingPolymerState) -> Result<()> {
        if self.cache_valid && self.cached_at == state.positions {
            return Ok(());
        }
        let m = self.n * self.d;
        for j in 0..self.p {
            let x = &state.positions[j * m..(j + 1) * m];
            let f = &mut self.forces[j * m..(j + 1) * m];
            self.slice_energy[j] = self.field.forces_into(x, f)?;
        }
        self.cached_at.copy_from_slice(&state.positions);
        self.cache_valid = true;
        Ok(())
    }

    /// Physical forces on every bead, laid out like `state.positions`, without the `1/P` weight.
    pub fn bead_forces(&mut self, state: &RingPolymerState) -> Result<&[f64]> {
        self.shape_check(state)?;
        self.refresh_forces(state)?;
        Ok(&self.forces)
    }

    /// `U` of every bead slice.
    pub fn slice_energies(&mut self, state: &RingPolymerState) -> Result<&[f64]> {
        self.shape_check(state)?;
        self.refresh_forces(state)?;
        Ok(&self.slice_energy)
    }

    pub fn step(&mut self, state: &mut RingPolymerState) -> Result<()> {
        self.shape_check(state)?;
        self.backup_x.copy_from_slice(&state.positions);
        self.backup_p.copy_from_slice(&state.momenta);
        let t0 = state.time;
        match self.step_inner(state) {
            Ok(()) if state.is_finite() => Ok(()),
            Ok(()) => Err(self.failure(state, t0, "non-finite state after step".into())),
            Err(Error::SingularConfiguration(msg)) => Err(self.failure(state, t0, msg)),
            Err(e) => Err(e),
        }
    }

    pub fn run(&mut self, state: &mut RingPolymerState, n_steps: usize) -> Result<()> {
        for _ in 0..n_steps {
            self.step(state)?;
        }
        Ok(())
    }

    fn failure(&mut self, state: &mut RingPolymerState, t0: f64, reason: String) -> Error {
        let mut dump = state.clone();
        dump.positions.copy_from_slice(&self.backup_x);
        dump.momenta.copy_from_slice(&self.backup_p);
        dump.time = t0;
        self.cache_valid = false;
        Error::Integration { time: t0, reason, state: Box::new(dump) }
    }

    fn kick(&mut self, state: &mut RingPolymerState) -> Result<()> {
        self.refresh_forces(state)?;
        if self.forces.iter().any(|f| !f.is_finite()) {
            return Err(Error::SingularConfiguration("non-finite force".into()));
        }
        let h = 0.5 * self.dt / self.p as f64;
        for (p, f) in state.momenta.iter_mut().zip(&self.forces) {
            *p += h * f;
        }
        Ok(())
    }

    /// Exact half-step of the free ring, acting on the mode buffers.
    fn drift_half(&mut self) {
        let m = self.n * self.d;
        let h = 0.5 * self.dt;
        for k in 0..self.p {
            let (c, s, w) = (self.cos_half[k], self.sin_half[k], self.omega[k]);
            for i in 0..self.n {
                let mb = self.masses[i];
                for a in 0..self.d {
                    let idx = k * m + i * self.d + a;
                    let (x, p) = (self.qx[idx], self.qp[idx]);
                    if k == 0 {
                        self.qx[idx] = x + h * p / mb;
                    } else {
                        self.qx[idx] = c * x + s * p / (mb * w);
                        self.qp[idx] = c * p - mb * w * s * x;
                    }
                }
            }
        }
    }

    fn label_particles(&mut self, layout: &RegionLayout) {
        // centroid from the k = 0 mode: x_c = q_0 / sqrt(P)
        let scale = 1.0 / libm::sqrt(self.p as f64);
        for i in 0..self.n {
            let xc = self.qx[i * self.d + layout.axis] * scale;
            self.labels[i] = layout.region_of(xc);
        }
    }

    fn ou(&mut self, state: &mut RingPolymerState) {
        let thermostat = core::mem::replace(&mut self.thermostat, ThermostatSpec::None);
        match &thermostat {
            ThermostatSpec::None => {}
            ThermostatSpec::PileL { tau, target_t } => {
                for i in 0..self.n {
                    let dq = self.ou_particle(state, i, 1.0 / tau, *target_t);
                    self.work[0] -= dq;
                }
            }
            ThermostatSpec::RegionLangevin { layout, targets, internal_t } => {
                self.label_particles(layout);
                for i in 0..self.n {
                    let label = self.labels[i];
                    let bath = targets.iter().find(|t| t.region == label && t.gamma > 0.0);
                    let dq = match (bath, internal_t) {
                        (Some(t), _) => self.ou_particle(state, i, t.gamma, t.target_t),
                        (None, Some(t)) => self.ou_particle(state, i, 0.0, *t),
                        (None, None) => 0.0,
                    };
                    self.work[label] -= dq;
                }
            }
        }
        self.thermostat = thermostat;
    }

    /// Thermalises all modes of particle `i`; returns the kinetic energy gained.
    fn ou_particle(&mut self, state: &mut RingPolymerState, i: usize, gamma0: f64, target_t: f64) -> f64 {
        let m = self.n * self.d;
        let mb = self.masses[i];
        let sigma = libm::sqrt(mb * target_t);
        let mut dk = 0.0;
        for k in 0..self.p {
            let gamma = if k == 0 { gamma0 } else { 2.0 * self.omega[k] };
            if gamma == 0.0 {
                continue;
            }
            let c1 = libm::exp(-gamma * self.dt);
            let c2 = libm::sqrt(1.0 - c1 * c1);
            for a in 0..self.d {
                let idx = k * m + i * self.d + a;
                let old = self.qp[idx];
                let new = c1 * old + c2 * sigma * state.rng.normal();
                self.qp[idx] = new;
                dk += (new * new - old * old) / (2.0 * mb);
            }
        }
        dk
    }

    fn step_inner(&mut self, state: &mut RingPolymerState) -> Result<()> {
        let m = self.n * self.d;
        self.kick(state)?;
        self.basis.to_normal(&state.positions, &mut self.qx, m);
        self.basis.to_normal(&state.momenta, &mut self.qp, m);
        self.drift_half();
        self.ou(state);
        self.drift_half();
        self.basis.from_normal(&self.qx, &mut state.positions, m);
        self.basis.from_normal(&self.qp, &mut state.momenta, m);
        state.time += self.dt;
        self.kick(state)
    }
}

/// One BAOAB step. Convenience wrapper; loops should hold an [`Integrator`].
pub fn step_baoab(
    state: &RingPolymerState,
    field: &ForceField,
    spec: &SystemSpec,
    thermostat: &ThermostatSpec,
    dt: f64,
) -> Result<RingPolymerState> {
    state.check_shape(spec)?;
    let mut integrator = Integrator::new(spec, field, thermostat, dt, state.n_beads())?;
    let mut next = state.clone();
    integrator.step(&mut next)?;
    Ok(next)
}

/// Ring-polymer Hamiltonian: bead kinetic energy plus springs plus `(1/P) sum_j U_j`.
pub fn ring_hamiltonian(integrator: &mut Integrator, spec: &SystemSpec, state: &RingPolymerState) -> Result<f64> {
    let p = state.n_beads();
    let u: f64 = integrator.slice_energies(state)?.iter().sum::<f64>() / p as f64;
    let springs = crate::potentials::spring_energy(spec, state)?;
    Ok(bead_kinetic_energy(spec, state) + springs + u)
}

/// `sum_j sum_i |p_i^(j)|^2 / (2 m_i / P)`.
pub fn bead_kinetic_energy(spec: &SystemSpec, state: &RingPolymerState) -> f64 {
    let p = state.n_beads();
    let mut k = 0.0;
    for j in 0..p {
        for (i, &m) in spec.masses.iter().enumerate() {
            let mb = bead_mass(m, p);
            k += state.momentum(i, j).iter().map(|v| v * v).sum::<f64>() / (2.0 * mb);
        }
    }
    k
}
