use nalgebra::DMatrix;
use npi_core::master_eq::{
    evolve_recorded, generator_norm, positivity_report, secular_reduce, tilted_qubit_redfield, CMatrix, DensityMatrix,
    LindbladGenerator,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn matrix(n: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n)
        .prop_map(move |v| DMatrix::from_iterator(n, n, v.into_iter().map(|(re, im)| Complex64::new(re, im))))
}

fn hermitian(n: usize) -> impl Strategy<Value = CMatrix> {
    matrix(n).prop_map(|a| (&a + a.adjoint()) * Complex64::new(0.5, 0.0))
}

fn pure_state(n: usize) -> impl Strategy<Value = DensityMatrix> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
        .prop_filter("non-zero vector", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let psi: Vec<Complex64> = v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
            DensityMatrix::pure(&psi).unwrap()
        })
}

fn gksl_case() -> impl Strategy<Value = (LindbladGenerator, DensityMatrix)> {
    (2usize..=4).prop_flat_map(|n| {
        (hermitian(n), prop::collection::vec((matrix(n), 0.0..2.0f64), 1..=3), pure_state(n))
            .prop_map(|(h, jumps, rho)| (LindbladGenerator::new(h, jumps, 1.0).unwrap(), rho))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gksl_flow_stays_physical((gen, rho0) in gksl_case()) {
        let dt = 0.05 / generator_norm(&gen).max(1.0);
        let traj = evolve_recorded(&gen, &rho0, 3.0, dt, 5).unwrap();
        let report = positivity_report(&traj, 1e-10);
        prop_assert!(report.worst() >= -1e-10, "min eigenvalue {}", report.worst());
        prop_assert!(report.trace_deviation.iter().all(|d| *d < 1e-8));
        for rho in &traj.states {
            let purity = (rho * rho).trace().re;
            prop_assert!(purity <= 1.0 + 1e-10, "purity {purity}");
            prop_assert!((rho - rho.adjoint()).norm() < 1e-12);
        }
    }
}

#[test]
fn secular_redfield_matches_its_lindblad_reduction() {
    // a coupling diagonal in the energy basis has only the zero Bohr frequency
    let red = tilted_qubit_redfield(1.3, 0.0, 0.7, 0.4, 0.0, 1.0, 1.0).unwrap();
    let lind = secular_reduce(&red).unwrap();
    let psi = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
    let rho0 = DensityMatrix::pure(&psi).unwrap();
    let a = evolve_recorded(&red, &rho0, 4.0, 0.005, 20).unwrap();
    let b = evolve_recorded(&lind, &rho0, 4.0, 0.005, 20).unwrap();
    assert_eq!(a.times, b.times);
    for (x, y) in a.states.iter().zip(&b.states) {
        assert!((x - y).norm() < 1e-10, "{}", (x - y).norm());
    }
}

#[test]
fn secular_reduction_of_tilted_coupling_is_positive() {
    let red = tilted_qubit_redfield(1.0, 0.6, 1.0, 0.0, 0.0, 1.0, 1.0).unwrap();
    let lind = secular_reduce(&red).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let rho0 = DensityMatrix::pure(&[Complex64::new(s, 0.0), Complex64::new(s, 0.0)]).unwrap();
    let full = positivity_report(&evolve_recorded(&red, &rho0, 5.0, 0.01, 1).unwrap(), 1e-10);
    let sec = positivity_report(&evolve_recorded(&lind, &rho0, 5.0, 0.01, 1).unwrap(), 1e-10);
    assert!(sec.worst() >= -1e-10);
    assert!(sec.first_violation.is_none());
    // the non-secular terms are what break positivity here
    assert!(full.worst() < sec.worst());
}
