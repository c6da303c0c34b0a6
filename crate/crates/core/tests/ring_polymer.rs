use std::sync::Arc;

use npi_core::estimators::{energy_estimator_primitive, energy_estimator_virial};
use npi_core::integrator::{omega_max, ring_hamiltonian, Integrator, RegionTarget, ThermostatSpec};
use npi_core::observables::{column, observable_by_name, sample_trajectory, Observable};
use npi_core::potentials::ForceField;
use npi_core::rng::RandomStream;
use npi_core::stats;
use npi_core::thermal::{assign_regions, heat_flux, ChainParams};
use npi_core::types::{RingPolymerState, SystemSpec};
use proptest::prelude::*;

fn chain(n: usize) -> ChainParams {
    ChainParams {
        n_particles: n,
        mass: 1.0,
        spacing: 1.0,
        morse_depth: 5.0,
        morse_width: 2.0,
        lj_epsilon: 0.1,
        lj_sigma: 2.0 / 2f64.powf(1.0 / 6.0),
        lj_cutoff: 3.0,
    }
}

fn mean_err(x: &[f64]) -> (f64, f64) {
    (stats::mean(x), stats::correlated_standard_error(x).unwrap())
}

#[test]
fn free_particle_primitive_energy_is_classical_for_every_p() {
    let mut spec = SystemSpec::uniform(3, 1.0, 2, 50.0, 2.0);
    spec.periodic = vec![true, true];
    let ff = ForceField::new(&spec).unwrap();
    let th = ThermostatSpec::PileL { tau: 0.5, target_t: 0.5 };
    let obs: Vec<Arc<dyn Observable>> = vec![observable_by_name("energy_primitive", &spec).unwrap().into()];
    let want = 3.0 * 2.0 / (2.0 * spec.beta);
    for p in [1, 4, 16] {
        let dt = 0.3 / omega_max(&spec, p).unwrap().max(1.0);
        let mut it = Integrator::new(&spec, &ff, &th, dt, p).unwrap();
        let centers = vec![vec![10.0, 10.0], vec![20.0, 30.0], vec![40.0, 5.0]];
        let mut s = RingPolymerState::collapsed(&centers, p, RandomStream::new(12, p as u64)).unwrap();
        it.run(&mut s, 2000).unwrap();
        let samples = sample_trajectory(&mut it, &mut s, &spec, 200_000, 5, &obs, false).unwrap();
        let (m, e) = mean_err(&column(&samples, "energy_primitive").unwrap());
        assert!((m - want).abs() < 4.0 * e + 1e-3, "P = {p}: {m} +- {e}, want {want}");
    }
}

#[test]
fn chain_hamiltonian_does_not_drift() {
    let c = chain(12);
    let spec = c.spec(1.0, 1.0).unwrap();
    let ff = ForceField::new(&spec).unwrap();
    let p = 4;
    let dt = 0.1 / omega_max(&spec, p).unwrap();
    let mut s = c.lattice_state(p, RandomStream::new(5, 0)).unwrap();
    let bath = ThermostatSpec::PileL { tau: 1.0, target_t: 1.0 };
    Integrator::new(&spec, &ff, &bath, dt, p).unwrap().run(&mut s, 20_000).unwrap();
    let mut it = Integrator::new(&spec, &ff, &ThermostatSpec::None, dt, p).unwrap();
    let (mut t, mut h) = (vec![], vec![]);
    for step in 0..200_000 {
        t.push(step as f64 * dt);
        h.push(ring_hamiltonian(&mut it, &spec, &s).unwrap());
        it.step(&mut s).unwrap();
    }
    // secular drift per 1e4 steps; the bounded Verlet oscillation is ~1e-4 here
    let (slope, _) = stats::linear_fit(&t, &h);
    let drift = (slope * 10_000.0 * dt / stats::mean(&h)).abs();
    assert!(drift < 1e-5, "relative drift {drift:e}");
}

#[test]
fn equal_baths_carry_no_mean_flux() {
    let c = chain(16);
    let spec = c.spec(1.0, 1.0).unwrap();
    let ff = ForceField::new(&spec).unwrap();
    let layout = c.layout().unwrap();
    let targets = [0, 2, 4].map(|region| RegionTarget { region, target_t: 1.0, gamma: 1.0 }).to_vec();
    let th = ThermostatSpec::RegionLangevin { layout: layout.clone(), targets, internal_t: None };
    let mut it = Integrator::new(&spec, &ff, &th, 0.005, 2).unwrap();
    let mut s = c.lattice_state(2, RandomStream::new(8, 0)).unwrap();
    it.run(&mut s, 10_000).unwrap();
    let mut flux = vec![];
    for step in 1..=100_000 {
        it.step(&mut s).unwrap();
        if step % 20 == 0 {
            let labels = assign_regions(&layout, &s).unwrap();
            let recs = heat_flux(&s, &ff, &spec, &labels, &layout).unwrap();
            flux.push(0.5 * (recs[0].flux + recs[1].flux));
        }
    }
    let (m, e) = mean_err(&flux);
    assert!(m.abs() < 2.0 * e, "{m} +- {e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn estimators_ignore_bead_labels(
        jitter in prop::collection::vec(-0.1f64..0.1, 8 * 6),
        kick in prop::collection::vec(-1.0f64..1.0, 8 * 6),
        shift in 0usize..6,
    ) {
        let c = chain(8);
        let spec = c.spec(1.3, 0.7).unwrap();
        let ff = ForceField::new(&spec).unwrap();
        let mut s = c.lattice_state(6, RandomStream::new(0, 0)).unwrap();
        for i in 0..8 {
            for j in 0..6 {
                s.position_mut(i, j)[0] += jitter[j * 8 + i];
                s.momentum_mut(i, j)[0] = kick[j * 8 + i];
            }
        }
        let mut r = s.clone();
        r.rotate_beads(shift);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs());
        prop_assert!(close(
            energy_estimator_primitive(&s, &ff, &spec).unwrap(),
            energy_estimator_primitive(&r, &ff, &spec).unwrap()
        ));
        prop_assert!(close(
            energy_estimator_virial(&s, &ff, &spec).unwrap(),
            energy_estimator_virial(&r, &ff, &spec).unwrap()
        ));
        let mut it = Integrator::new(&spec, &ff, &ThermostatSpec::None, 0.001, 6).unwrap();
        let h = ring_hamiltonian(&mut it, &spec, &s).unwrap();
        let hr = ring_hamiltonian(&mut it, &spec, &r).unwrap();
        prop_assert!(close(h, hr));
    }
}
