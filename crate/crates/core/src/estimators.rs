//! Bead-averaged estimators and the closed-form harmonic oscillator references.

use crate::error::Result;
use crate::integrator::Integrator;
use crate::potentials::{spring_energy, ForceField};
use crate::types::{RingPolymerState, SystemSpec};

/// `(1/P) sum_j A(slice j)` for a function of one bead slice (`N * d` positions).
pub fn estimator_position_observable(state: &RingPolymerState, a: impl Fn(&[f64]) -> f64) -> f64 {
    let p = state.n_beads();
    (0..p).map(|j| a(state.bead_slice(j))).sum::<f64>() / p as f64
}

/// `N P d / (2 beta) - springs + (1/P) sum_j U_j`.
pub fn energy_estimator_primitive(state: &RingPolymerState, field: &ForceField, spec: &SystemSpec) -> Result<f64> {
    let u = crate::potentials::mean_slice_potential(field, state)?;
    primitive_from_parts(state, spec, u)
}

fn primitive_from_parts(state: &RingPolymerState, spec: &SystemSpec, mean_u: f64) -> Result<f64> {
    let n = state.n_particles() as f64;
    let p = state.n_beads() as f64;
    let d = state.dimension() as f64;
    Ok(n * p * d / (2.0 * spec.beta) - spring_energy(spec, state)? + mean_u)
}

/// Centroid virial form `N d / (2 beta) + (1/P) sum_j [(r_j - r_c) . grad U_j / 2 + U_j]`.
pub fn energy_estimator_virial(state: &RingPolymerState, field: &ForceField, spec: &SystemSpec) -> Result<f64> {
    state.check_shape(spec)?;
    let p = state.n_beads();
    let m = state.n_particles() * state.dimension();
    let mut u = 0.0;
    let mut forces = alloc::vec![0.0; p * m];
    for j in 0..p {
        u += field.forces_into(state.bead_slice(j), &mut forces[j * m..(j + 1) * m])?;
    }
    Ok(virial_from_parts(state, spec, &forces, u / p as f64))
}

fn virial_from_parts(state: &RingPolymerState, spec: &SystemSpec, forces: &[f64], mean_u: f64) -> f64 {
    let n = state.n_particles();
    let p = state.n_beads();
    let d = state.dimension();
    let mut w = 0.0;
    for i in 0..n {
        let c = state.centroid(i);
        for j in 0..p {
            let x = state.position(i, j);
            let f = &forces[(j * n + i) * d..(j * n + i + 1) * d];
            for a in 0..d {
                // grad U = -F
                w -= (x[a] - c[a]) * f[a];
            }
        }
    }
    (n * d) as f64 / (2.0 * spec.beta) + 0.5 * w / p as f64 + mean_u
}

/// Primitive estimator reusing the integrator's force cache.
pub fn primitive_cached(integrator: &mut Integrator, state: &RingPolymerState, spec: &SystemSpec) -> Result<f64> {
    let p = state.n_beads() as f64;
    let u = integrator.slice_energies(state)?.iter().sum::<f64>() / p;
    primitive_from_parts(state, spec, u)
}

/// Virial estimator reusing the integrator's force cache.
pub fn virial_cached(integrator: &mut Integrator, state: &RingPolymerState, spec: &SystemSpec) -> Result<f64> {
    let p = state.n_beads() as f64;
    let u = integrator.slice_energies(state)?.iter().sum::<f64>() / p;
    let f = integrator.bead_forces(state)?;
    Ok(virial_from_parts(state, spec, f, u))
}

/// Exact quantum energy of one harmonic degree of freedom, `(hbar w / 2) coth(beta hbar w / 2)`.
pub fn harmonic_quantum_energy(beta: f64, hbar: f64, omega: f64) -> f64 {
    let x = 0.5 * beta * hbar * omega;
    0.5 * hbar * omega / libm::tanh(x)
}

/// Exact `P`-bead discretised energy of one harmonic degree of freedom,
/// `sum_k (beta hbar^2 w^2 / P^2) / (4 sin^2(pi k / P) + (beta hbar w / P)^2)`.
pub fn harmonic_finite_p_energy(beta: f64, hbar: f64, omega: f64, n_beads: usize) -> f64 {
    let p = n_beads as f64;
    let a = beta * hbar * omega / p;
    (0..n_beads)
        .map(|k| {
            let s = libm::sin(core::f64::consts::PI * k as f64 / p);
            (a * a / beta) / (4.0 * s * s + a * a)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PotentialTerm;
    use crate::rng::RandomStream;
    use alloc::vec;

    #[test]
    fn bead_average_basics() {
        let s = RingPolymerState::collapsed(&[vec![2.5]], 6, RandomStream::new(0, 0)).unwrap();
        assert_eq!(estimator_position_observable(&s, |x| x[0]), 2.5);
        let mut s = RingPolymerState::zeros(1, 2, 1, RandomStream::new(0, 0));
        s.position_mut(0, 0)[0] = 1.0;
        s.position_mut(0, 1)[0] = 3.0;
        assert_eq!(estimator_position_observable(&s, |x| x[0]), 2.0);
    }

    #[test]
    fn bead_average_ignores_labelling() {
        let mut s = RingPolymerState::zeros(2, 7, 2, RandomStream::new(0, 0));
        for (n, v) in s.positions.iter_mut().enumerate() {
            *v = libm::sin(n as f64 * 1.37);
        }
        let a = |x: &[f64]| x[0] * x[3] + libm::exp(x[1]);
        let before = estimator_position_observable(&s, a);
        for shift in 1..7 {
            let mut r = s.clone();
            r.rotate_beads(shift);
            assert!((estimator_position_observable(&r, a) - before).abs() < 1e-15);
        }
    }

    #[test]
    fn single_bead_estimators_are_classical() {
        let mut spec = SystemSpec::uniform(2, 1.0, 2, 10.0, 0.7);
        spec.topology.push(PotentialTerm::Morse { i: 0, j: 1, depth: 1.0, width: 1.2, r0: 1.0 });
        let ff = ForceField::new(&spec).unwrap();
        let mut s = RingPolymerState::zeros(2, 1, 2, RandomStream::new(0, 0));
        s.position_mut(1, 0).copy_from_slice(&[1.3, 0.2]);
        let u = ff.energy(s.bead_slice(0)).unwrap();
        let kin = 2.0 * 2.0 / (2.0 * 0.7);
        assert!((energy_estimator_primitive(&s, &ff, &spec).unwrap() - (kin + u)).abs() < 1e-14);
        assert!((energy_estimator_virial(&s, &ff, &spec).unwrap() - (kin + u)).abs() < 1e-14);
    }

    #[test]
    fn finite_p_energy_matches_partition_function() {
        // independent route: -d ln Z_P / d beta by central differences,
        // Z_P = prod_k [4 sin^2(pi k/P) + (beta hbar w / P)^2]^{-1/2}
        let ln_z = |beta: f64, p: usize| -> f64 {
            (0..p)
                .map(|k| {
                    let s = libm::sin(core::f64::consts::PI * k as f64 / p as f64);
                    let a = beta * 1.3 / p as f64;
                    -0.5 * libm::log(4.0 * s * s + a * a)
                })
                .sum()
        };
        for p in [1, 2, 5, 32] {
            for beta in [0.4, 1.0, 3.0] {
                let h = 1e-5;
                let fd = -(ln_z(beta + h, p) - ln_z(beta - h, p)) / (2.0 * h);
                let e = harmonic_finite_p_energy(beta, 1.0, 1.3, p);
                assert!((fd - e).abs() < 1e-7 * e, "P = {p}, beta = {beta}");
            }
        }
        assert!((harmonic_finite_p_energy(2.0, 1.0, 1.0, 1) - 0.5).abs() < 1e-15);
        let q = harmonic_quantum_energy(1.0, 1.0, 1.0);
        assert!((harmonic_finite_p_energy(1.0, 1.0, 1.0, 4096) - q).abs() < 1e-6);
        assert!((q - 1.0819767068693265).abs() < 1e-12);
    }
}
