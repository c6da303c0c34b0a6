//! Shared domain types: system description and ring-polymer phase-space state.
//!
//! Reduced units throughout: `k_B = 1`, so `beta = 1/T`; `hbar` is a free
//! parameter (default 1). Lengths, masses and energies are whatever consistent
//! unit set the caller chooses.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::PotentialTerm;
use crate::rng::RandomStream;

/// Physical description of an N-particle system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub masses: Vec<f64>,
    pub dimension: usize,
    pub box_length: Vec<f64>,
    pub periodic: Vec<bool>,
    pub beta: f64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(default)]
    pub topology: Vec<PotentialTerm>,
}

fn default_hbar() -> f64 {
    1.0
}

impl SystemSpec {
    /// Free (non-periodic) system of identical particles with an empty topology.
    pub fn uniform(n_particles: usize, mass: f64, dimension: usize, box_length: f64, beta: f64) -> Self {
        Self {
            masses: vec![mass; n_particles],
            dimension,
            box_length: vec![box_length; dimension],
            periodic: vec![false; dimension],
            beta,
            hbar: 1.0,
            topology: Vec::new(),
        }
    }

    pub fn n_particles(&self) -> usize {
        self.masses.len()
    }

    pub fn temperature(&self) -> f64 {
        1.0 / self.beta
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_particles();
        if n == 0 {
            return Err(Error::InvalidSystem("at least one particle is required".into()));
        }
        if let Some((i, m)) = self.masses.iter().enumerate().find(|(_, m)| !(**m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidSystem(format!("mass of particle {i} must be positive, got {m}")));
        }
        if !(1..=3).contains(&self.dimension) {
            return Err(Error::InvalidSystem(format!("dimension must be 1, 2 or 3, got {}", self.dimension)));
        }
        if self.box_length.len() != self.dimension || self.periodic.len() != self.dimension {
            return Err(Error::InvalidSystem("box_length and periodic need one entry per axis".into()));
        }
        if self.box_length.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidSystem("box lengths must be positive".into()));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidSystem(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::InvalidSystem(format!("hbar must be positive, got {}", self.hbar)));
        }
        let mut seen: Vec<(u8, Vec<usize>)> = Vec::new();
        for term in &self.topology {
            term.validate(self)?;
            if term.is_bonded() {
                let key = (term.kind_tag(), term.canonical_members());
                if seen.contains(&key) {
                    return Err(Error::InvalidSystem(format!(
                        "duplicate bonded term over particles {:?}",
                        term.members()
                    )));
                }
                seen.push(key);
            }
        }
        Ok(())
    }
}

/// Ring-polymer spring frequency `sqrt(P) / (beta * hbar)`.
pub fn omega_p(beta: f64, hbar: f64, n_beads: usize) -> Result<f64> {
    if !(beta > 0.0) || !(hbar > 0.0) || n_beads == 0 {
        return Err(Error::Domain(format!(
            "omega_p needs positive inputs (beta = {beta}, hbar = {hbar}, P = {n_beads})"
        )));
    }
    Ok(libm::sqrt(n_beads as f64) / (beta * hbar))
}

/// Index of the bead following `j` on a ring of `n_beads` (bead P+1 is bead 1).
#[inline]
pub fn next_bead(j: usize, n_beads: usize) -> usize {
    if j + 1 == n_beads {
        0
    } else {
        j + 1
    }
}

#[inline]
pub fn prev_bead(j: usize, n_beads: usize) -> usize {
    if j == 0 {
        n_beads - 1
    } else {
        j - 1
    }
}

/// Positions and momenta of N ring polymers with P beads each.
///
/// Storage is bead-major: element `(j, i, a)` for bead `j`, particle `i`,
/// axis `a` lives at `(j * N + i) * d + a`, so a bead slice (all particles at
/// one imaginary-time index) is a contiguous `N * d` block. Bead positions are
/// kept unwrapped; minimum imaging applies only to inter-particle vectors.
#[derive(Clone, PartialEq)]
pub struct RingPolymerState {
    n_particles: usize,
    n_beads: usize,
    dimension: usize,
    pub positions: Vec<f64>,
    pub momenta: Vec<f64>,
    pub time: f64,
    pub rng: RandomStream,
}

impl core::fmt::Debug for RingPolymerState {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        // full arrays are far too long for diagnostics; show the shape and a checksum
        let sum = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
        f.debug_struct("RingPolymerState")
            .field("n_particles", &self.n_particles)
            .field("n_beads", &self.n_beads)
            .field("dimension", &self.dimension)
            .field("time", &self.time)
            .field("sum_abs_positions", &sum(&self.positions))
            .field("sum_abs_momenta", &sum(&self.momenta))
            .field("rng", &self.rng.cursor())
            .finish()
    }
}

impl RingPolymerState {
    pub fn zeros(n_particles: usize, n_beads: usize, dimension: usize, rng: RandomStream) -> Self {
        let len = n_particles * n_beads * dimension;
        Self { n_particles, n_beads, dimension, positions: vec![0.0; len], momenta: vec![0.0; len], time: 0.0, rng }
    }

    /// State with every bead of particle `i` placed at `centers[i]` and zero momenta.
    pub fn collapsed(centers: &[Vec<f64>], n_beads: usize, rng: RandomStream) -> Result<Self> {
        let d = centers.first().map(|c| c.len()).unwrap_or(0);
        if centers.iter().any(|c| c.len() != d) {
            return Err(Error::InvalidSystem("all centers must share one dimension".into()));
        }
        let mut s = Self::zeros(centers.len(), n_beads, d, rng);
        for j in 0..n_beads {
            for (i, c) in centers.iter().enumerate() {
                s.position_mut(i, j).copy_from_slice(c);
            }
        }
        Ok(s)
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn n_beads(&self) -> usize {
        self.n_beads
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    #[inline]
    fn offset(&self, particle: usize, bead: usize) -> usize {
        (bead * self.n_particles + particle) * self.dimension
    }

    #[inline]
    pub fn position(&self, particle: usize, bead: usize) -> &[f64] {
        let o = self.offset(particle, bead);
        &self.positions[o..o + self.dimension]
    }

    #[inline]
    pub fn position_mut(&mut self, particle: usize, bead: usize) -> &mut [f64] {
        let o = self.offset(particle, bead);
        &mut self.positions[o..o + self.dimension]
    }

    #[inline]
    pub fn momentum(&self, particle: usize, bead: usize) -> &[f64] {
        let o = self.offset(particle, bead);
        &self.momenta[o..o + self.dimension]
    }

    #[inline]
    pub fn momentum_mut(&mut self, particle: usize, bead: usize) -> &mut [f64] {
        let o = self.offset(particle, bead);
        &mut self.momenta[o..o + self.dimension]
    }

    /// Positions of all particles at bead index `bead`, an `N * d` block.
    #[inline]
    pub fn bead_slice(&self, bead: usize) -> &[f64] {
        let w = self.n_particles * self.dimension;
        &self.positions[bead * w..(bead + 1) * w]
    }

    #[inline]
    pub fn momentum_slice(&self, bead: usize) -> &[f64] {
        let w = self.n_particles * self.dimension;
        &self.momenta[bead * w..(bead + 1) * w]
    }

    /// Bead-averaged position of particle `i`.
    pub fn centroid(&self, particle: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.dimension];
        for j in 0..self.n_beads {
            for (ca, xa) in c.iter_mut().zip(self.position(particle, j)) {
                *ca += xa;
            }
        }
        let inv = 1.0 / self.n_beads as f64;
        c.iter_mut().for_each(|v| *v *= inv);
        c
    }

    /// Total ring momentum of particle `i` (momentum conjugate to the centroid).
    pub fn centroid_momentum(&self, particle: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.dimension];
        for j in 0..self.n_beads {
            for (ca, pa) in c.iter_mut().zip(self.momentum(particle, j)) {
                *ca += pa;
            }
        }
        c
    }

    pub fn check_shape(&self, spec: &SystemSpec) -> Result<()> {
        if self.n_particles != spec.n_particles() {
            return Err(Error::DimensionMismatch { expected: spec.n_particles(), actual: self.n_particles });
        }
        if self.dimension != spec.dimension {
            return Err(Error::DimensionMismatch { expected: spec.dimension, actual: self.dimension });
        }
        if self.n_beads == 0 {
            return Err(Error::InvalidSystem("a ring needs at least one bead".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.positions.iter().chain(&self.momenta).all(|v| v.is_finite())
    }

    /// Relabels beads cyclically: new bead `j` is old bead `j + shift`.
    pub fn rotate_beads(&mut self, shift: usize) {
        let w = self.n_particles * self.dimension;
        let s = (shift % self.n_beads) * w;
        self.positions.rotate_left(s);
        self.momenta.rotate_left(s);
    }
}

/// Dynamical mass carried by each bead of a particle with physical mass `mass`.
///
/// Beads move with mass `m / P` under the ring Hamiltonian with `U / P`
/// coupling. This keeps centroid motion on the physical time scale for every
/// P; configurational averages do not depend on this choice.
#[inline]
pub fn bead_mass(mass: f64, n_beads: usize) -> f64 {
    mass / n_beads as f64
}
