//! Bonded and nonbonded interaction terms, evaluated one bead slice at a time.
//!
//! Particles only interact through beads that share the same imaginary-time
//! index, so every routine here sees a single `N * d` slice of positions.
//! The harmonic springs that join consecutive beads of one ring are handled
//! by [`spring_energy`] and the integrator, never by the force field.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{next_bead, omega_p, RingPolymerState, SystemSpec};

/// Lennard-Jones energies above this value are treated as particle overlap.
pub const SINGULAR_ENERGY: f64 = 1e12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialTerm {
    HarmonicBond {
        i: usize,
        j: usize,
        k: f64,
        r0: f64,
    },
    Morse {
        i: usize,
        j: usize,
        depth: f64,
        width: f64,
        r0: f64,
    },
    /// Truncated at `cutoff` and shifted so the energy vanishes there.
    LennardJones {
        i: usize,
        j: usize,
        epsilon: f64,
        sigma: f64,
        cutoff: f64,
    },
    /// Angle at vertex `j` between bonds `j-i` and `j-k`.
    HarmonicAngle {
        i: usize,
        j: usize,
        k: usize,
        k_theta: f64,
        theta0: f64,
    },
    /// Tether of one particle to a fixed point. Used to pin particles in
    /// non-periodic test setups; it breaks translation invariance on purpose.
    ExternalWell {
        i: usize,
        k_ext: f64,
        center: Vec<f64>,
    },
}

impl PotentialTerm {
    /// Curvature at the reference geometry: bond and pair terms at their
    /// minimum, angles per unit bond length.
    pub fn stiffness(&self) -> f64 {
        match *self {
            Self::HarmonicBond { k, .. } => k.abs(),
            Self::Morse { depth, width, .. } => 2.0 * depth.abs() * width * width,
            Self::LennardJones { epsilon, sigma, .. } => 72.0 * epsilon.abs() / (libm::cbrt(2.0) * sigma * sigma),
            Self::HarmonicAngle { k_theta, .. } => k_theta.abs(),
            Self::ExternalWell { k_ext, .. } => k_ext.abs(),
        }
    }

    pub fn members(&self) -> Vec<usize> {
        match *self {
            Self::HarmonicBond { i, j, .. } | Self::Morse { i, j, .. } | Self::LennardJones { i, j, .. } => {
                vec![i, j]
            }
            Self::HarmonicAngle { i, j, k, .. } => vec![i, j, k],
            Self::ExternalWell { i, .. } => vec![i],
        }
    }

    pub(crate) fn canonical_members(&self) -> Vec<usize> {
        let mut m = self.members();
        match self {
            Self::HarmonicAngle { .. } => {
                if m[0] > m[2] {
                    m.swap(0, 2);
                }
            }
            _ => m.sort_unstable(),
        }
        m
    }

    pub(crate) fn kind_tag(&self) -> u8 {
        match self {
            Self::HarmonicBond { .. } => 0,
            Self::Morse { .. } => 1,
            Self::LennardJones { .. } => 2,
            Self::HarmonicAngle { .. } => 3,
            Self::ExternalWell { .. } => 4,
        }
    }

    pub fn is_bonded(&self) -> bool {
        matches!(self, Self::HarmonicBond { .. } | Self::Morse { .. } | Self::HarmonicAngle { .. })
    }

    /// True for terms acting between exactly two particles.
    pub fn is_pair(&self) -> bool {
        matches!(self, Self::HarmonicBond { .. } | Self::Morse { .. } | Self::LennardJones { .. })
    }

    pub fn validate(&self, spec: &SystemSpec) -> Result<()> {
        let n = spec.n_particles();
        let members = self.members();
        if let Some(bad) = members.iter().find(|&&m| m >= n) {
            return Err(Error::InvalidSystem(format!("particle index {bad} out of range (N = {n})")));
        }
        let mut sorted = members.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != members.len() {
            return Err(Error::InvalidSystem(format!("term repeats a particle: {members:?}")));
        }
        let finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        let ok = match self {
            Self::HarmonicBond { k, r0, .. } => finite(&[*k, *r0]),
            Self::Morse { depth, width, r0, .. } => finite(&[*depth, *width, *r0]),
            Self::LennardJones { epsilon, sigma, cutoff, .. } => {
                if !(*cutoff > 0.0) {
                    return Err(Error::InvalidSystem(format!("Lennard-Jones cutoff must be positive, got {cutoff}")));
                }
                finite(&[*epsilon, *sigma, *cutoff])
            }
            Self::HarmonicAngle { k_theta, theta0, .. } => {
                if spec.dimension < 2 {
                    return Err(Error::InvalidSystem("angle terms need at least two dimensions".into()));
                }
                finite(&[*k_theta, *theta0])
            }
            Self::ExternalWell { k_ext, center, .. } => {
                if center.len() != spec.dimension {
                    return Err(Error::DimensionMismatch { expected: spec.dimension, actual: center.len() });
                }
                finite(&[*k_ext]) && finite(center)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSystem(format!("non-finite parameter in {self:?}")))
        }
    }
}

/// Energy and gradient data of one pair interaction on one bead slice.
#[derive(Clone, Copy, Debug)]
pub struct PairContribution<'a> {
    pub i: usize,
    pub j: usize,
    pub energy: f64,
    /// Force on `i` due to `j` (the force on `j` is its negative).
    pub force_on_i: &'a [f64],
    /// Minimum-image separation `r_i - r_j`.
    pub separation: &'a [f64],
}

/// Immutable collection of interaction terms bound to a box geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct ForceField {
    terms: Vec<PotentialTerm>,
    n_particles: usize,
    dimension: usize,
    box_length: Vec<f64>,
    minimum_image: Vec<bool>,
}

impl ForceField {
    pub fn new(spec: &SystemSpec) -> Result<Self> {
        Self::with_terms(spec, spec.topology.clone())
    }

    pub fn with_terms(spec: &SystemSpec, terms: Vec<PotentialTerm>) -> Result<Self> {
        spec.validate()?;
        for t in &terms {
            t.validate(spec)?;
        }
        Ok(Self {
            terms,
            n_particles: spec.n_particles(),
            dimension: spec.dimension,
            box_length: spec.box_length.clone(),
            minimum_image: spec.periodic.clone(),
        })
    }

    /// Field with additional terms appended (e.g. a perturbing external field).
    pub fn extended(&self, extra: &[PotentialTerm]) -> Self {
        let mut ff = self.clone();
        ff.terms.extend_from_slice(extra);
        ff
    }

    pub fn terms(&self) -> &[PotentialTerm] {
        &self.terms
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn has_external_terms(&self) -> bool {
        self.terms.iter().any(|t| matches!(t, PotentialTerm::ExternalWell { .. }))
    }

    /// Minimum-image vector `a - b`.
    #[inline]
    pub fn displacement(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        for ax in 0..self.dimension {
            let mut d = a[ax] - b[ax];
            if self.minimum_image[ax] {
                let l = self.box_length[ax];
                d -= l * libm::round(d / l);
            }
            out[ax] = d;
        }
    }

    fn check_slice(&self, x: &[f64]) -> Result<()> {
        let expected = self.n_particles * self.dimension;
        if x.len() != expected {
            return Err(Error::DimensionMismatch { expected, actual: x.len() });
        }
        Ok(())
    }

    /// Potential energy of one bead slice.
    pub fn energy(&self, x: &[f64]) -> Result<f64> {
        self.check_slice(x)?;
        let mut e = 0.0;
        self.visit(x, None, &mut |_| {}, &mut e)?;
        Ok(e)
    }

    /// Writes forces on one bead slice into `out` and returns the energy.
    pub fn forces_into(&self, x: &[f64], out: &mut [f64]) -> Result<f64> {
        self.check_slice(x)?;
        self.check_slice(out)?;
        out.iter_mut().for_each(|f| *f = 0.0);
        let mut e = 0.0;
        self.visit(x, Some(out), &mut |_| {}, &mut e)?;
        Ok(e)
    }

    pub fn forces(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut f = vec![0.0; x.len()];
        let e = self.forces_into(x, &mut f)?;
        Ok((e, f))
    }

    /// Calls `visit` for every pair term on the slice. Non-pair terms are skipped
    /// here; their energies are reported through [`ForceField::site_energies`].
    pub fn for_each_pair(&self, x: &[f64], mut visit: impl FnMut(PairContribution<'_>)) -> Result<()> {
        self.check_slice(x)?;
        let mut e = 0.0;
        self.visit(x, None, &mut visit, &mut e)
    }

    /// Energy of every term split evenly among its member particles.
    pub fn site_energies(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_slice(x)?;
        if out.len() != self.n_particles {
            return Err(Error::DimensionMismatch { expected: self.n_particles, actual: out.len() });
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for term in &self.terms {
            let mut e = 0.0;
            let single = core::slice::from_ref(term);
            self.visit_terms(single, x, None, &mut |_| {}, &mut e)?;
            let members = term.members();
            let share = e / members.len() as f64;
            for m in members {
                out[m] += share;
            }
        }
        Ok(())
    }

    fn visit(
        &self,
        x: &[f64],
        forces: Option<&mut [f64]>,
        pair_visit: &mut dyn FnMut(PairContribution<'_>),
        energy: &mut f64,
    ) -> Result<()> {
        self.visit_terms(&self.terms, x, forces, pair_visit, energy)
    }

    fn visit_terms(
        &self,
        terms: &[PotentialTerm],
        x: &[f64],
        mut forces: Option<&mut [f64]>,
        pair_visit: &mut dyn FnMut(PairContribution<'_>),
        energy: &mut f64,
    ) -> Result<()> {
        let d = self.dimension;
        let mut rij = [0.0f64; 3];
        let mut rkj = [0.0f64; 3];
        let mut fvec = [0.0f64; 3];
        for term in terms {
            match *term {
                PotentialTerm::HarmonicBond { i, j, .. }
                | PotentialTerm::Morse { i, j, .. }
                | PotentialTerm::LennardJones { i, j, .. } => {
                    self.displacement(&x[i * d..i * d + d], &x[j * d..j * d + d], &mut rij[..d]);
                    let r2: f64 = rij[..d].iter().map(|v| v * v).sum();
                    let r = libm::sqrt(r2);
                    let (e, du_dr) = pair_energy(term, r)?;
                    *energy += e;
                    // F_i = -dU/dr * r_hat
                    let scale = if r > 0.0 { -du_dr / r } else { 0.0 };
                    for a in 0..d {
                        fvec[a] = scale * rij[a];
                    }
                    if let Some(f) = forces.as_deref_mut() {
                        for a in 0..d {
                            f[i * d + a] += fvec[a];
                            f[j * d + a] -= fvec[a];
                        }
                    }
                    pair_visit(PairContribution { i, j, energy: e, force_on_i: &fvec[..d], separation: &rij[..d] });
                }
                PotentialTerm::HarmonicAngle { i, j, k, k_theta, theta0 } => {
                    self.displacement(&x[i * d..i * d + d], &x[j * d..j * d + d], &mut rij[..d]);
                    self.displacement(&x[k * d..k * d + d], &x[j * d..j * d + d], &mut rkj[..d]);
                    let nu = libm::sqrt(rij[..d].iter().map(|v| v * v).sum::<f64>());
                    let nv = libm::sqrt(rkj[..d].iter().map(|v| v * v).sum::<f64>());
                    if nu == 0.0 || nv == 0.0 {
                        return Err(Error::SingularConfiguration(format!("zero-length bond in angle {i}-{j}-{k}")));
                    }
                    let dot: f64 = rij[..d].iter().zip(&rkj[..d]).map(|(a, b)| a * b).sum();
                    let cos = (dot / (nu * nv)).clamp(-1.0, 1.0);
                    let theta = libm::acos(cos);
                    let dtheta = theta - theta0;
                    *energy += 0.5 * k_theta * dtheta * dtheta;
                    if let Some(f) = forces.as_deref_mut() {
                        let du = k_theta * dtheta;
                        if du == 0.0 {
                            continue;
                        }
                        let sin = libm::sqrt((1.0 - cos * cos).max(0.0));
                        if sin < 1e-10 {
                            return Err(Error::SingularConfiguration(format!(
                                "collinear angle {i}-{j}-{k} has an undefined gradient"
                            )));
                        }
                        // dtheta/du = -(v/(|u||v|) - cos u/|u|^2) / sin
                        let c = du / sin;
                        for a in 0..d {
                            let fi = c * (rkj[a] / (nu * nv) - cos * rij[a] / (nu * nu));
                            let fk = c * (rij[a] / (nu * nv) - cos * rkj[a] / (nv * nv));
                            f[i * d + a] += fi;
                            f[k * d + a] += fk;
                            f[j * d + a] -= fi + fk;
                        }
                    }
                }
                PotentialTerm::ExternalWell { i, k_ext, ref center } => {
                    self.displacement(&x[i * d..i * d + d], center, &mut rij[..d]);
                    let r2: f64 = rij[..d].iter().map(|v| v * v).sum();
                    *energy += 0.5 * k_ext * r2;
                    if let Some(f) = forces.as_deref_mut() {
                        for a in 0..d {
                            f[i * d + a] -= k_ext * rij[a];
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[inline]
fn sq(x: f64) -> f64 {
    x * x
}

#[inline]
fn pow6(x: f64) -> f64 {
    let x3 = x * x * x;
    x3 * x3
}

/// Energy and radial derivative of a pair term at separation `r`.
fn pair_energy(term: &PotentialTerm, r: f64) -> Result<(f64, f64)> {
    match *term {
        PotentialTerm::HarmonicBond { k, r0, .. } => {
            let dr = r - r0;
            Ok((0.5 * k * dr * dr, k * dr))
        }
        PotentialTerm::Morse { depth, width, r0, .. } => {
            let ex = libm::exp(-width * (r - r0));
            let one = 1.0 - ex;
            Ok((depth * one * one, 2.0 * depth * width * ex * one))
        }
        PotentialTerm::LennardJones { epsilon, sigma, cutoff, i, j } => {
            if r >= cutoff {
                return Ok((0.0, 0.0));
            }
            let lj = |r: f64| {
                let s6 = pow6(sigma / r);
                4.0 * epsilon * (s6 * s6 - s6)
            };
            let e = lj(r) - lj(cutoff);
            if !(e < SINGULAR_ENERGY) {
                return Err(Error::SingularConfiguration(format!(
                    "Lennard-Jones overlap between particles {i} and {j} at r = {r:e}"
                )));
            }
            let s6 = pow6(sigma / r);
            let du_dr = -24.0 * epsilon * (2.0 * s6 * s6 - s6) / r;
            Ok((e, du_dr))
        }
        _ => unreachable!("not a pair term"),
    }
}

/// Potential energy of the same-index bead slice `positions_at_bead_j`.
pub fn energy_bead_slice(field: &ForceField, spec: &SystemSpec, positions_at_bead_j: &[f64]) -> Result<f64> {
    if spec.dimension != field.dimension() {
        return Err(Error::DimensionMismatch { expected: field.dimension(), actual: spec.dimension });
    }
    field.energy(positions_at_bead_j)
}

pub fn forces_bead_slice(field: &ForceField, spec: &SystemSpec, positions_at_bead_j: &[f64]) -> Result<Vec<f64>> {
    if spec.dimension != field.dimension() {
        return Err(Error::DimensionMismatch { expected: field.dimension(), actual: spec.dimension });
    }
    Ok(field.forces(positions_at_bead_j)?.1)
}

/// `sum_j sum_i 1/2 m_i omega_P^2 |r_i^(j+1) - r_i^(j)|^2` with cyclic closure.
pub fn spring_energy(spec: &SystemSpec, state: &RingPolymerState) -> Result<f64> {
    state.check_shape(spec)?;
    let p = state.n_beads();
    let w2 = sq(omega_p(spec.beta, spec.hbar, p)?);
    let mut e = 0.0;
    for j in 0..p {
        let jn = next_bead(j, p);
        for (i, m) in spec.masses.iter().enumerate() {
            let d2: f64 = state.position(i, jn).iter().zip(state.position(i, j)).map(|(a, b)| (a - b) * (a - b)).sum();
            e += 0.5 * m * w2 * d2;
        }
    }
    Ok(e)
}

/// Bead-averaged physical potential `(1/P) sum_j U(slice j)`.
pub fn mean_slice_potential(field: &ForceField, state: &RingPolymerState) -> Result<f64> {
    let p = state.n_beads();
    let mut u = 0.0;
    for j in 0..p {
        u += field.energy(state.bead_slice(j))?;
    }
    Ok(u / p as f64)
}

/// Potential part of the ring-polymer Hamiltonian: springs plus `(1/P) sum_j U_j`.
pub fn total_ring_potential(field: &ForceField, spec: &SystemSpec, state: &RingPolymerState) -> Result<f64> {
    Ok(spring_energy(spec, state)? + mean_slice_potential(field, state)?)
}
