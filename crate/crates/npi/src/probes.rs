//! Region-resolved observables for thermal-gradient branches.

use npi_core::observables::{Observable, Probe};
use npi_core::thermal::{
    assign_regions, heat_flux_with, particle_kinetic, region_temperatures, FluxEstimator, ProfileMode, RegionLayout,
};
use npi_core::Result;

/// Kinetic temperature of all particles in middle regions.
#[derive(Debug)]
pub struct MiddleTemperature {
    pub layout: RegionLayout,
    pub mode: ProfileMode,
}

impl Observable for MiddleTemperature {
    fn name(&self) -> &str {
        "t_middle"
    }

    fn evaluate(&self, probe: &mut Probe<'_>) -> Result<f64> {
        let labels = assign_regions(&self.layout, probe.state)?;
        let temps = region_temperatures(probe.state, probe.spec, &labels, self.layout.n_regions(), self.mode);
        let (mut sum, mut count) = (0.0, 0usize);
        for r in self.layout.middle_regions() {
            if let (Some(t), n) = temps[r] {
                sum += t * n as f64;
                count += n;
            }
        }
        Ok(if count > 0 { sum / count as f64 } else { f64::NAN })
    }
}

/// Mean per-particle flux through one middle region, positive from hot to cold.
#[derive(Debug)]
pub struct RegionFlux {
    pub layout: RegionLayout,
    pub estimator: FluxEstimator,
    pub region: usize,
    pub name: String,
}

impl RegionFlux {
    pub fn new(layout: RegionLayout, estimator: FluxEstimator, region: usize) -> Self {
        Self { layout, estimator, region, name: format!("flux_region_{region}") }
    }
}

impl Observable for RegionFlux {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, probe: &mut Probe<'_>) -> Result<f64> {
        let labels = assign_regions(&self.layout, probe.state)?;
        let records =
            heat_flux_with(probe.state, probe.integrator.field(), probe.spec, &labels, &self.layout, self.estimator)?;
        Ok(records.iter().find(|r| r.region == self.region).map_or(0.0, |r| r.flux))
    }
}

/// What a [`ProfileBin`] reports for its slab.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinQuantity {
    KineticSum,
    Count,
}

/// Summed particle kinetic energy, or particle count, in one slab of the box.
#[derive(Debug)]
pub struct ProfileBin {
    pub layout: RegionLayout,
    pub n_bins: usize,
    pub bin: usize,
    pub quantity: BinQuantity,
    pub mode: ProfileMode,
    pub name: String,
}

impl ProfileBin {
    pub fn new(layout: RegionLayout, n_bins: usize, bin: usize, quantity: BinQuantity, mode: ProfileMode) -> Self {
        let tag = match quantity {
            BinQuantity::KineticSum => "kinetic",
            BinQuantity::Count => "count",
        };
        Self { layout, n_bins, bin, quantity, mode, name: format!("bin_{bin}_{tag}") }
    }

    pub fn center(&self) -> f64 {
        self.layout.origin() + (self.bin as f64 + 0.5) * self.layout.length() / self.n_bins as f64
    }
}

impl Observable for ProfileBin {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, probe: &mut Probe<'_>) -> Result<f64> {
        let state = probe.state;
        let width = self.layout.length() / self.n_bins as f64;
        let mut total = 0.0;
        for i in 0..state.n_particles() {
            let x = self.layout.wrap(state.centroid(i)[self.layout.axis]) - self.layout.origin();
            let b = ((x / width) as usize).min(self.n_bins - 1);
            if b == self.bin {
                total += match self.quantity {
                    BinQuantity::Count => 1.0,
                    BinQuantity::KineticSum => particle_kinetic(state, probe.spec, i, self.mode),
                };
            }
        }
        Ok(total)
    }
}
