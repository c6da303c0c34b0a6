//! Region baths, kinetic temperature profiles and heat flux for a chain held
//! between a hot and a cold reservoir.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::RegionTarget;
use crate::normal_modes::build_normal_modes;
use crate::potentials::{ForceField, PotentialTerm};
use crate::rng::RandomStream;
use crate::types::{bead_mass, next_bead, omega_p, RingPolymerState, SystemSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionRole {
    Hot,
    Middle,
    Cold,
}

/// Intervals `[b_k, b_{k+1}]` tiling one periodic axis.
///
/// A point lying exactly on an inner boundary belongs to the lower interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionLayout {
    pub axis: usize,
    pub boundaries: Vec<f64>,
    pub roles: Vec<RegionRole>,
}

impl RegionLayout {
    /// Hot, middle, cold, middle, hot with widths `w/2, w, w, w, w/2` and `4w = length`.
    pub fn symmetric(axis: usize, origin: f64, length: f64) -> Result<Self> {
        let w = length / 4.0;
        let layout = Self {
            axis,
            boundaries: vec![
                origin,
                origin + 0.5 * w,
                origin + 1.5 * w,
                origin + 2.5 * w,
                origin + 3.5 * w,
                origin + length,
            ],
            roles: vec![RegionRole::Hot, RegionRole::Middle, RegionRole::Cold, RegionRole::Middle, RegionRole::Hot],
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        if self.boundaries.len() != self.roles.len() + 1 || self.roles.is_empty() {
            return Err(Error::Configuration(format!(
                "{} boundaries cannot delimit {} regions",
                self.boundaries.len(),
                self.roles.len()
            )));
        }
        if !self.boundaries.iter().all(|b| b.is_finite()) || self.boundaries.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Configuration("region boundaries must be finite and strictly increasing".into()));
        }
        Ok(())
    }

    pub fn n_regions(&self) -> usize {
        self.roles.len()
    }

    pub fn origin(&self) -> f64 {
        self.boundaries[0]
    }

    pub fn length(&self) -> f64 {
        self.boundaries[self.boundaries.len() - 1] - self.boundaries[0]
    }

    pub fn width(&self, region: usize) -> f64 {
        self.boundaries[region + 1] - self.boundaries[region]
    }

    pub fn center(&self, region: usize) -> f64 {
        0.5 * (self.boundaries[region + 1] + self.boundaries[region])
    }

    /// Folds a coordinate into `[origin, origin + length)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let l = self.length();
        let r = x - self.origin();
        let mut y = self.origin() + (r - l * libm::floor(r / l));
        if y >= self.origin() + l {
            y = self.origin();
        }
        y
    }

    pub fn region_of(&self, x: f64) -> usize {
        let y = self.wrap(x);
        let last = self.n_regions() - 1;
        (0..last).find(|&k| y <= self.boundaries[k + 1]).unwrap_or(last)
    }

    pub fn middle_regions(&self) -> Vec<usize> {
        (0..self.n_regions()).filter(|&k| self.roles[k] == RegionRole::Middle).collect()
    }

    /// `+1` if heat crosses the middle region along `+axis` when going hot to cold.
    pub fn flow_sign(&self, region: usize) -> f64 {
        let n = self.n_regions();
        let left = self.roles[(region + n - 1) % n];
        let right = self.roles[(region + 1) % n];
        match (left, right) {
            (RegionRole::Hot, _) | (_, RegionRole::Cold) => 1.0,
            _ => -1.0,
        }
    }
}

pub fn assign_regions(layout: &RegionLayout, state: &RingPolymerState) -> Result<Vec<usize>> {
    layout.validate()?;
    if layout.axis >= state.dimension() {
        return Err(Error::DimensionMismatch { expected: layout.axis + 1, actual: state.dimension() });
    }
    Ok((0..state.n_particles()).map(|i| layout.region_of(state.centroid(i)[layout.axis])).collect())
}

/// Bath targets for every hot and cold interval of `layout`.
pub fn gradient_targets(layout: &RegionLayout, t_hot: f64, t_cold: f64, gamma: f64) -> Vec<RegionTarget> {
    layout
        .roles
        .iter()
        .enumerate()
        .filter_map(|(region, role)| match role {
            RegionRole::Hot => Some(RegionTarget { region, target_t: t_hot, gamma }),
            RegionRole::Cold => Some(RegionTarget { region, target_t: t_cold, gamma }),
            RegionRole::Middle => None,
        })
        .collect()
}

/// Stand-alone Ornstein-Uhlenbeck step of length `dt` on the momenta of bathed
/// particles, in ring normal modes (centroid `gamma`, internal modes `2 Omega_k`).
pub fn apply_region_thermostats(
    state: &RingPolymerState,
    spec: &SystemSpec,
    labels: &[usize],
    layout: &RegionLayout,
    targets: &[RegionTarget],
    dt: f64,
    rng: &mut RandomStream,
) -> Result<RingPolymerState> {
    crate::integrator::ThermostatSpec::RegionLangevin {
        layout: layout.clone(),
        targets: targets.to_vec(),
        internal_t: None,
    }
    .validate()?;
    state.check_shape(spec)?;
    if labels.len() != state.n_particles() {
        return Err(Error::DimensionMismatch { expected: state.n_particles(), actual: labels.len() });
    }
    let p = state.n_beads();
    let d = state.dimension();
    let basis = build_normal_modes(p);
    let omega = basis.dynamical_frequencies(omega_p(spec.beta, spec.hbar, p)?);
    let mut out = state.clone();
    let mut beads = vec![0.0; p * d];
    let mut modes = vec![0.0; p * d];
    for (i, &label) in labels.iter().enumerate() {
        let Some(t) = targets.iter().find(|t| t.region == label) else { continue };
        if t.gamma == 0.0 {
            continue;
        }
        let mb = bead_mass(spec.masses[i], p);
        for j in 0..p {
            beads[j * d..(j + 1) * d].copy_from_slice(state.momentum(i, j));
        }
        basis.to_normal(&beads, &mut modes, d);
        for k in 0..p {
            let gamma = if k == 0 { t.gamma } else { 2.0 * omega[k] };
            let c1 = libm::exp(-gamma * dt);
            let c2 = libm::sqrt((1.0 - c1 * c1) * mb * t.target_t);
            for v in &mut modes[k * d..(k + 1) * d] {
                *v = c1 * *v + c2 * rng.normal();
            }
        }
        basis.from_normal(&modes, &mut beads, d);
        for j in 0..p {
            out.momentum_mut(i, j).copy_from_slice(&beads[j * d..(j + 1) * d]);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    /// Bead-averaged kinetic energy, `(1/P) sum_j |p_j|^2 / (2 m / P)` per particle.
    BeadKinetic,
    /// Kinetic energy of the centroid, `|sum_j p_j|^2 / (2 m)`.
    CentroidKinetic,
}

/// Kinetic energy of particle `i` under `mode`; averages to `d T / 2`.
pub fn particle_kinetic(state: &RingPolymerState, spec: &SystemSpec, i: usize, mode: ProfileMode) -> f64 {
    let p = state.n_beads();
    let m = spec.masses[i];
    match mode {
        ProfileMode::BeadKinetic => {
            let mb = bead_mass(m, p);
            let s: f64 = (0..p).map(|j| state.momentum(i, j).iter().map(|v| v * v).sum::<f64>()).sum();
            s / (2.0 * mb * p as f64)
        }
        ProfileMode::CentroidKinetic => {
            let pc = state.centroid_momentum(i);
            pc.iter().map(|v| v * v).sum::<f64>() / (2.0 * m)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileBin {
    pub center: f64,
    /// Absent when no particle visited the bin.
    pub temperature: Option<f64>,
    pub count: usize,
}

/// Running kinetic temperature histogram along the layout axis.
#[derive(Clone, Debug)]
pub struct ProfileAccumulator {
    layout: RegionLayout,
    lo: f64,
    hi: f64,
    mode: ProfileMode,
    kinetic: Vec<f64>,
    counts: Vec<usize>,
}

impl ProfileAccumulator {
    /// Bins `[lo, hi)` (in wrapped coordinates) into `n_bins` equal slabs.
    pub fn new(layout: &RegionLayout, n_bins: usize, lo: f64, hi: f64, mode: ProfileMode) -> Result<Self> {
        layout.validate()?;
        if n_bins == 0 || !(hi > lo) {
            return Err(Error::Domain(format!("bad profile range [{lo}, {hi}) with {n_bins} bins")));
        }
        Ok(Self { layout: layout.clone(), lo, hi, mode, kinetic: vec![0.0; n_bins], counts: vec![0; n_bins] })
    }

    pub fn whole_box(layout: &RegionLayout, n_bins: usize, mode: ProfileMode) -> Result<Self> {
        let lo = layout.origin();
        Self::new(layout, n_bins, lo, lo + layout.length(), mode)
    }

    pub fn add(&mut self, state: &RingPolymerState, spec: &SystemSpec) -> Result<()> {
        state.check_shape(spec)?;
        let n_bins = self.counts.len();
        let width = (self.hi - self.lo) / n_bins as f64;
        for i in 0..state.n_particles() {
            let x = self.layout.wrap(state.centroid(i)[self.layout.axis]);
            if x < self.lo || x >= self.hi {
                continue;
            }
            let b = (((x - self.lo) / width) as usize).min(n_bins - 1);
            self.kinetic[b] += particle_kinetic(state, spec, i, self.mode);
            self.counts[b] += 1;
        }
        Ok(())
    }

    pub fn finish(&self, dimension: usize) -> Vec<ProfileBin> {
        let width = (self.hi - self.lo) / self.counts.len() as f64;
        self.kinetic
            .iter()
            .zip(&self.counts)
            .enumerate()
            .map(|(b, (&k, &c))| ProfileBin {
                center: self.lo + (b as f64 + 0.5) * width,
                temperature: (c > 0).then(|| 2.0 * k / (c as f64 * dimension as f64)),
                count: c,
            })
            .collect()
    }
}

/// Kinetic temperature profile over the whole axis, averaged over `states`.
pub fn temperature_profile<'a>(
    states: impl IntoIterator<Item = &'a RingPolymerState>,
    spec: &SystemSpec,
    layout: &RegionLayout,
    n_bins: usize,
    mode: ProfileMode,
) -> Result<Vec<ProfileBin>> {
    let mut acc = ProfileAccumulator::whole_box(layout, n_bins, mode)?;
    for s in states {
        acc.add(s, spec)?;
    }
    Ok(acc.finish(spec.dimension))
}

/// Instantaneous kinetic temperature of every region: `(2 sum K / (n d), n)`.
pub fn region_temperatures(
    state: &RingPolymerState,
    spec: &SystemSpec,
    labels: &[usize],
    n_regions: usize,
    mode: ProfileMode,
) -> Vec<(Option<f64>, usize)> {
    let mut k = vec![0.0; n_regions];
    let mut n = vec![0usize; n_regions];
    for (i, &r) in labels.iter().enumerate() {
        k[r] += particle_kinetic(state, spec, i, mode);
        n[r] += 1;
    }
    k.iter().zip(&n).map(|(&k, &n)| ((n > 0).then(|| 2.0 * k / (n as f64 * spec.dimension as f64)), n)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxRecord {
    pub time: f64,
    /// Mean per-particle energy flux along the axis, positive from hot to cold.
    pub flux: f64,
    /// Energy current through the region: summed flux divided by region width.
    pub current: f64,
    pub region: usize,
    pub n_particles: usize,
}

/// Per-particle energy flux vectors of the ring-polymer Hamiltonian, `N * d` values.
///
/// For particle `i` this is `(1/P) sum_j [e_i^j v_i^j + 1/4 sum_k z_ik (F_ik . (v_i^j + v_k^j))]`
/// with bead energy `e = m|v|^2/2 + (site share of U) + P (spring share)`, plus
/// the flux carried by the ring springs inside the particle.
pub fn particle_fluxes(state: &RingPolymerState, field: &ForceField, spec: &SystemSpec) -> Result<Vec<f64>> {
    slice_fluxes(state, field, spec, true)
}

/// Bead-averaged per-slice flux without the ring springs: each slice carries
/// its own kinetic and site energy and its own pair virial.
pub fn bead_fluxes(state: &RingPolymerState, field: &ForceField, spec: &SystemSpec) -> Result<Vec<f64>> {
    slice_fluxes(state, field, spec, false)
}

fn slice_fluxes(state: &RingPolymerState, field: &ForceField, spec: &SystemSpec, springs: bool) -> Result<Vec<f64>> {
    state.check_shape(spec)?;
    if field.terms().iter().any(|t| matches!(t, PotentialTerm::HarmonicAngle { .. })) {
        return Err(Error::Domain("heat flux is defined for pair and single-site terms only".into()));
    }
    let n = state.n_particles();
    let p = state.n_beads();
    let d = state.dimension();
    let pf = p as f64;
    let wp = omega_p(spec.beta, spec.hbar, p)?;
    let w2 = wp * wp;
    let mb: Vec<f64> = spec.masses.iter().map(|&m| bead_mass(m, p)).collect();
    let mut flux = vec![0.0; n * d];
    let mut site = vec![0.0; n];
    let mut vel = vec![0.0; n * d];
    for j in 0..p {
        let x = state.bead_slice(j);
        for i in 0..n {
            for a in 0..d {
                vel[i * d + a] = state.momentum(i, j)[a] / mb[i];
            }
        }
        field.site_energies(x, &mut site)?;
        for i in 0..n {
            let v = &vel[i * d..(i + 1) * d];
            let kin = 0.5 * spec.masses[i] * v.iter().map(|c| c * c).sum::<f64>();
            // each bead owns half of each of its two springs
            let jn = next_bead(j, p);
            let jp = (j + p - 1) % p;
            let mut spring = 0.0;
            if springs && p > 1 {
                for other in [jn, jp] {
                    let d2: f64 =
                        state.position(i, other).iter().zip(state.position(i, j)).map(|(a, b)| (a - b) * (a - b)).sum();
                    spring += 0.25 * spec.masses[i] * w2 * d2;
                }
            }
            let e = kin + site[i] + pf * spring;
            for a in 0..d {
                flux[i * d + a] += e * v[a] / pf;
            }
            // spring j -> j+1: z = x^j - x^{j+1}, force on bead j is -m w^2 z
            if springs && p > 1 {
                let vn: Vec<f64> = state.momentum(i, jn).iter().map(|q| q / mb[i]).collect();
                let xj = state.position(i, j);
                let xn = state.position(i, jn);
                let mut fdotv = 0.0;
                for a in 0..d {
                    let z = xj[a] - xn[a];
                    fdotv += -spec.masses[i] * w2 * z * (v[a] + vn[a]);
                }
                for a in 0..d {
                    flux[i * d + a] += 0.5 * (xj[a] - xn[a]) * fdotv;
                }
            }
        }
        field.for_each_pair(x, |c| {
            let vi = &vel[c.i * d..(c.i + 1) * d];
            let vk = &vel[c.j * d..(c.j + 1) * d];
            let fv: f64 = (0..d).map(|a| c.force_on_i[a] * (vi[a] + vk[a])).sum();
            for a in 0..d {
                let q = 0.25 * c.separation[a] * fv / pf;
                flux[c.i * d + a] += q;
                flux[c.j * d + a] += q;
            }
        })?;
    }
    Ok(flux)
}

/// Per-particle energy flux of the centroids, `N * d` values:
/// `(e_i - e_mean) v_i + 1/4 sum_k z_ik (F_ik . (v_i + v_k))` with centroid
/// velocities `v = sum_j p_j / m`, centroid separations, bead-averaged pair
/// forces and bead-averaged site energies. `e_mean` is the instantaneous mean
/// of `e_i` over all particles.
pub fn centroid_fluxes(state: &RingPolymerState, field: &ForceField, spec: &SystemSpec) -> Result<Vec<f64>> {
    state.check_shape(spec)?;
    if field.terms().iter().any(|t| matches!(t, PotentialTerm::HarmonicAngle { .. })) {
        return Err(Error::Domain("heat flux is defined for pair and single-site terms only".into()));
    }
    let n = state.n_particles();
    let p = state.n_beads();
    let d = state.dimension();
    let pf = p as f64;
    let mut vel = vec![0.0; n * d];
    let mut cen = vec![0.0; n * d];
    for i in 0..n {
        let pc = state.centroid_momentum(i);
        let xc = state.centroid(i);
        for a in 0..d {
            vel[i * d + a] = pc[a] / spec.masses[i];
            cen[i * d + a] = xc[a];
        }
    }
    let mut energy = vec![0.0; n];
    let mut site = vec![0.0; n];
    for j in 0..p {
        field.site_energies(state.bead_slice(j), &mut site)?;
        for i in 0..n {
            energy[i] += site[i] / pf;
        }
    }
    for i in 0..n {
        let v = &vel[i * d..(i + 1) * d];
        energy[i] += 0.5 * spec.masses[i] * v.iter().map(|c| c * c).sum::<f64>();
    }
    // A constant energy offset adds nothing on average when particles stay
    // bound, but the zero-point part of the site energy makes it large.
    let mean_energy = energy.iter().sum::<f64>() / n as f64;
    let mut flux = vec![0.0; n * d];
    for i in 0..n {
        let e = energy[i] - mean_energy;
        for a in 0..d {
            flux[i * d + a] = e * vel[i * d + a];
        }
    }
    // bead-averaged pair forces, keyed by term order
    let pairs: Vec<(usize, usize)> = field
        .terms()
        .iter()
        .filter(|t| t.is_pair())
        .map(|t| {
            let m = t.members();
            (m[0], m[1])
        })
        .collect();
    let mut fbar = vec![0.0; pairs.len() * d];
    for j in 0..p {
        let mut k = 0;
        field.for_each_pair(state.bead_slice(j), |c| {
            for a in 0..d {
                fbar[k * d + a] += c.force_on_i[a] / pf;
            }
            k += 1;
        })?;
    }
    let mut z = vec![0.0; d];
    for (k, &(i, m)) in pairs.iter().enumerate() {
        field.displacement(&cen[i * d..(i + 1) * d], &cen[m * d..(m + 1) * d], &mut z);
        let f = &fbar[k * d..(k + 1) * d];
        let fv: f64 = (0..d).map(|a| f[a] * (vel[i * d + a] + vel[m * d + a])).sum();
        for a in 0..d {
            let q = 0.25 * z[a] * fv;
            flux[i * d + a] += q;
            flux[m * d + a] += q;
        }
    }
    Ok(flux)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxEstimator {
    /// Energy flux of the full ring-polymer Hamiltonian, springs included.
    RingPolymer,
    /// Per-slice flux averaged over beads, springs excluded.
    BeadAverage,
    /// Flux carried by the centroids under bead-averaged forces.
    Centroid,
}

/// Flux through every middle region using the chosen estimator.
pub fn heat_flux_with(
    state: &RingPolymerState,
    field: &ForceField,
    spec: &SystemSpec,
    labels: &[usize],
    layout: &RegionLayout,
    estimator: FluxEstimator,
) -> Result<Vec<FluxRecord>> {
    if labels.len() != state.n_particles() {
        return Err(Error::DimensionMismatch { expected: state.n_particles(), actual: labels.len() });
    }
    let d = state.dimension();
    let per_particle = match estimator {
        FluxEstimator::RingPolymer => particle_fluxes(state, field, spec)?,
        FluxEstimator::BeadAverage => bead_fluxes(state, field, spec)?,
        FluxEstimator::Centroid => centroid_fluxes(state, field, spec)?,
    };
    Ok(layout
        .middle_regions()
        .into_iter()
        .map(|r| {
            let sign = layout.flow_sign(r);
            let (sum, count) = labels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == r)
                .fold((0.0, 0usize), |(s, c), (i, _)| (s + per_particle[i * d + layout.axis], c + 1));
            FluxRecord {
                time: state.time,
                flux: if count > 0 { sign * sum / count as f64 } else { 0.0 },
                current: sign * sum / layout.width(r),
                region: r,
                n_particles: count,
            }
        })
        .collect())
}

/// Flux through every middle region of the layout, bead-averaged over slices.
pub fn heat_flux(
    state: &RingPolymerState,
    field: &ForceField,
    spec: &SystemSpec,
    labels: &[usize],
    layout: &RegionLayout,
) -> Result<Vec<FluxRecord>> {
    heat_flux_with(state, field, spec, labels, layout, FluxEstimator::BeadAverage)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyState {
    pub steady: bool,
    pub onset: Option<f64>,
}

/// Splits every series into consecutive non-overlapping windows of `window`
/// samples and reports the first window after which all window means change by
/// less than `tolerance`. The onset is the start time of the earlier window.
pub fn steady_state_detector(times: &[f64], series: &[&[f64]], window: usize, tolerance: f64) -> Result<SteadyState> {
    if window == 0 {
        return Err(Error::Domain("window must hold at least one sample".into()));
    }
    if series.iter().any(|s| s.len() != times.len()) {
        return Err(Error::Alignment("series and time grid differ in length".into()));
    }
    let n_windows = times.len() / window;
    if n_windows < 2 {
        return Err(Error::InsufficientSampling(format!(
            "{} samples make fewer than two windows of {window}",
            times.len()
        )));
    }
    let mean = |s: &[f64], w: usize| s[w * window..(w + 1) * window].iter().sum::<f64>() / window as f64;
    for w in 0..n_windows - 1 {
        if series.iter().all(|s| (mean(s, w + 1) - mean(s, w)).abs() < tolerance) {
            return Ok(SteadyState { steady: true, onset: Some(times[w * window]) });
        }
    }
    Ok(SteadyState { steady: false, onset: None })
}

/// Uniform periodic one-dimensional chain: Morse bonds between nearest
/// neighbours and Lennard-Jones pairs between next-nearest neighbours.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub n_particles: usize,
    pub mass: f64,
    pub spacing: f64,
    pub morse_depth: f64,
    pub morse_width: f64,
    pub lj_epsilon: f64,
    pub lj_sigma: f64,
    pub lj_cutoff: f64,
}

impl ChainParams {
    pub fn spec(&self, beta: f64, hbar: f64) -> Result<SystemSpec> {
        let n = self.n_particles;
        if n < 5 {
            return Err(Error::InvalidSystem(format!("a periodic chain needs at least 5 particles, got {n}")));
        }
        let mut spec = SystemSpec::uniform(n, self.mass, 1, n as f64 * self.spacing, beta);
        spec.hbar = hbar;
        spec.periodic = vec![true];
        for i in 0..n {
            spec.topology.push(PotentialTerm::Morse {
                i,
                j: (i + 1) % n,
                depth: self.morse_depth,
                width: self.morse_width,
                r0: self.spacing,
            });
        }
        if self.lj_epsilon != 0.0 {
            for i in 0..n {
                spec.topology.push(PotentialTerm::LennardJones {
                    i,
                    j: (i + 2) % n,
                    epsilon: self.lj_epsilon,
                    sigma: self.lj_sigma,
                    cutoff: self.lj_cutoff,
                });
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Collapsed rings on the lattice sites `(i + 1/2) * spacing`.
    pub fn lattice_state(&self, n_beads: usize, rng: RandomStream) -> Result<RingPolymerState> {
        let centers: Vec<Vec<f64>> = (0..self.n_particles).map(|i| vec![(i as f64 + 0.5) * self.spacing]).collect();
        RingPolymerState::collapsed(&centers, n_beads, rng)
    }

    pub fn layout(&self) -> Result<RegionLayout> {
        RegionLayout::symmetric(0, 0.0, self.n_particles as f64 * self.spacing)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_state(xs: &[f64], p: usize) -> RingPolymerState {
        let centers: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        RingPolymerState::collapsed(&centers, p, RandomStream::new(1, 1)).unwrap()
    }

    #[test]
    fn symmetric_layout_widths() {
        let l = RegionLayout::symmetric(0, 0.0, 40.0).unwrap();
        let widths: Vec<f64> = (0..5).map(|k| l.width(k)).collect();
        assert_eq!(widths, vec![5.0, 10.0, 10.0, 10.0, 5.0]);
        assert_eq!(l.middle_regions(), vec![1, 3]);
        assert_eq!(l.flow_sign(1), 1.0);
        assert_eq!(l.flow_sign(3), -1.0);
    }

    #[test]
    fn boundary_goes_to_lower_interval() {
        let l = RegionLayout::symmetric(0, 0.0, 40.0).unwrap();
        let s = chain_state(&[5.0, 15.0, 25.0, 35.0, 0.0, 40.0, -1.0], 3);
        assert_eq!(assign_regions(&l, &s).unwrap(), vec![0, 1, 2, 3, 0, 0, 4]);
    }

    #[test]
    fn lattice_counts_follow_widths() {
        let l = RegionLayout::symmetric(0, 0.0, 40.0).unwrap();
        let xs: Vec<f64> = (0..80).map(|i| 0.25 + 0.5 * i as f64).collect();
        let labels = assign_regions(&l, &chain_state(&xs, 1)).unwrap();
        for k in 0..5 {
            let count = labels.iter().filter(|&&r| r == k).count() as f64;
            assert!((count - 80.0 * l.width(k) / 40.0).abs() <= 1.0);
        }
    }

    #[test]
    fn zero_friction_leaves_momenta() {
        let l = RegionLayout::symmetric(0, 0.0, 8.0).unwrap();
        let spec = SystemSpec::uniform(4, 1.0, 1, 8.0, 1.0);
        let mut s = chain_state(&[0.5, 2.5, 4.5, 6.5], 4);
        for (n, v) in s.momenta.iter_mut().enumerate() {
            *v = n as f64 * 0.1;
        }
        let labels = assign_regions(&l, &s).unwrap();
        let targets = gradient_targets(&l, 1.2, 0.8, 0.0);
        let out =
            apply_region_thermostats(&s, &spec, &labels, &l, &targets, 0.1, &mut RandomStream::new(0, 0)).unwrap();
        assert_eq!(out.momenta, s.momenta);
    }

    #[test]
    fn hand_computed_bins() {
        let l = RegionLayout::symmetric(0, 0.0, 4.0).unwrap();
        let mut spec = SystemSpec::uniform(2, 1.0, 1, 4.0, 1.0);
        spec.masses = vec![1.0, 2.0];
        let mut s = chain_state(&[0.5, 3.5], 2);
        // bead masses 0.5 and 1.0
        s.momentum_mut(0, 0)[0] = 1.0;
        s.momentum_mut(0, 1)[0] = -1.0;
        s.momentum_mut(1, 0)[0] = 2.0;
        s.momentum_mut(1, 1)[0] = 0.0;
        let bead = temperature_profile([&s], &spec, &l, 2, ProfileMode::BeadKinetic).unwrap();
        // particle 0: (1/2)(1/1 + 1/1) = 1 -> T = 2; particle 1: (1/2)(4/2) = 1 -> T = 2
        assert_eq!(bead[0].temperature, Some(2.0));
        assert_eq!(bead[1].temperature, Some(2.0));
        let cen = temperature_profile([&s], &spec, &l, 2, ProfileMode::CentroidKinetic).unwrap();
        // centroid momenta 0 and 2 -> K = 0 and 4/4
        assert_eq!(cen[0].temperature, Some(0.0));
        assert_eq!(cen[1].temperature, Some(2.0));
        let sparse = temperature_profile([&s], &spec, &l, 4, ProfileMode::BeadKinetic).unwrap();
        assert_eq!(sparse[1].count, 0);
        assert_eq!(sparse[1].temperature, None);
    }

    #[test]
    fn still_chain_has_no_flux() {
        let mut spec = SystemSpec::uniform(4, 1.0, 1, 8.0, 1.0);
        spec.periodic = vec![true];
        for i in 0..4 {
            spec.topology.push(PotentialTerm::Morse { i, j: (i + 1) % 4, depth: 1.0, width: 1.0, r0: 2.0 });
        }
        let ff = ForceField::new(&spec).unwrap();
        let mut s = chain_state(&[0.9, 3.1, 5.0, 7.2], 3);
        s.position_mut(2, 1)[0] += 0.1;
        let l = RegionLayout::symmetric(0, 0.0, 8.0).unwrap();
        let labels = assign_regions(&l, &s).unwrap();
        for r in heat_flux(&s, &ff, &spec, &labels, &l).unwrap() {
            assert_eq!(r.flux, 0.0);
        }
    }

    #[test]
    fn detector_on_synthetic_series() {
        let t: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let flat = vec![3.0; 100];
        let r = steady_state_detector(&t, &[&flat], 10, 1e-9).unwrap();
        assert_eq!(r, SteadyState { steady: true, onset: Some(0.0) });
        let ramp: Vec<f64> = t.iter().map(|x| 0.01 * x).collect();
        assert!(!steady_state_detector(&t, &[&ramp], 10, 0.05).unwrap().steady);
        assert!(matches!(
            steady_state_detector(&t[..15], &[&flat[..15]], 10, 1.0),
            Err(Error::InsufficientSampling(_))
        ));
    }

    #[test]
    fn detector_onset_tracks_relaxation_rate() {
        // a e^{-r t}: consecutive window means differ by about a e^{-r t} (1 - e^{-r W}),
        // so the first difference below tol happens near t* = ln(a (1 - e^{-rW}) / tol) / r
        let (a, rate, tol, w) = (1.0, 0.05, 1e-3, 20usize);
        let dt = 0.1;
        let t: Vec<f64> = (0..20_000).map(|i| i as f64 * dt).collect();
        let y: Vec<f64> = t.iter().map(|x| a * libm::exp(-rate * x)).collect();
        let onset = steady_state_detector(&t, &[&y], w, tol).unwrap().onset.unwrap();
        let span = w as f64 * dt;
        let t_star = libm::log(a * (1.0 - libm::exp(-rate * span)) / tol) / rate;
        assert!((onset - t_star).abs() <= 2.0 * span, "onset {onset} vs {t_star}");
    }
}
