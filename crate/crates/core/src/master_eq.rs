//! Dense Lindblad and Redfield master equations for small Hilbert spaces.
//!
//! Basis convention for qubits: index 0 is the excited state `|e>`, index 1 the
//! ground state `|g>`, so `sigma_z |0> = +|0>` and `sigma_minus = |g><e|`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Largest Hilbert-space dimension accepted by the dense routines.
pub const MAX_DIM: usize = 64;
/// Relative tolerance under which two Bohr frequencies are one secular block.
pub const BOHR_MERGE_TOL: f64 = 1e-9;
/// RK4 is rejected when the step times the generator norm estimate exceeds this.
pub const RK4_STABILITY: f64 = 2.8;
pub const TRACE_DRIFT_LIMIT: f64 = 1e-8;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0), -I, I, c(0.0)])
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

pub fn sigma_minus() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(1.0), c(0.0)])
}

pub fn sigma_plus() -> CMatrix {
    sigma_minus().adjoint()
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn hermiticity_error(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

fn check_square(m: &CMatrix, dim: usize, what: &str) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::InvalidSystem(format!("{what} is {}x{}, expected {dim}x{dim}", m.nrows(), m.ncols())));
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and matching column eigenvectors.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = (m + m.adjoint()) * c(0.5);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMatrix::from_fn(m.nrows(), m.ncols(), |r, col| eig.eigenvectors[(r, order[col])]);
    (vals, vecs)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub entries: CMatrix,
}

impl DensityMatrix {
    /// Checks Hermiticity and unit trace to `1e-12`.
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 || entries.nrows() > MAX_DIM {
            return Err(Error::InvalidSystem(format!("density matrix must be square with dimension 1..={MAX_DIM}")));
        }
        if hermiticity_error(&entries) > 1e-12 {
            return Err(Error::InvalidSystem("density matrix is not Hermitian".into()));
        }
        let tr = entries.trace();
        if (tr - c(1.0)).norm() > 1e-12 {
            return Err(Error::InvalidSystem(format!("density matrix trace is {tr}")));
        }
        Ok(Self { entries })
    }

    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(norm > 0.0) {
            return Err(Error::Domain("zero state vector".into()));
        }
        let v = nalgebra::DVector::from_iterator(psi.len(), psi.iter().map(|z| z / libm::sqrt(norm)));
        let mut m = &v * v.adjoint();
        m = (&m + m.adjoint()) * c(0.5);
        Self::new(m)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::new(CMatrix::identity(dim, dim) * c(1.0 / dim as f64))
    }

    /// `exp(-beta H) / Z`.
    pub fn gibbs(h: &CMatrix, beta: f64) -> Result<Self> {
        let (e, v) = hermitian_eigen(h);
        let e0 = e[0];
        let w: Vec<f64> = e.iter().map(|x| libm::exp(-beta * (x - e0))).collect();
        let z: f64 = w.iter().sum();
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(w.len(), w.iter().map(|x| c(x / z))));
        let m = &v * d * v.adjoint();
        Self::new((&m + m.adjoint()) * c(0.5))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&self.entries).0[0]
    }
}

/// `tr(rho A)` for Hermitian `A`.
pub fn expectation(rho: &DensityMatrix, a: &CMatrix) -> Result<f64> {
    check_square(a, rho.dim(), "observable")?;
    if hermiticity_error(a) > 1e-12 {
        return Err(Error::Domain("observable is not Hermitian".into()));
    }
    Ok((&rho.entries * a).trace().re)
}

/// Right-hand side of a master equation.
pub trait Generator {
    fn dim(&self) -> usize;
    fn rhs(&self, rho: &CMatrix) -> CMatrix;
}

#[derive(Clone, Debug, PartialEq)]
pub struct LindbladGenerator {
    pub h: CMatrix,
    pub jumps: Vec<(CMatrix, f64)>,
    pub hbar: f64,
}

impl LindbladGenerator {
    pub fn new(h: CMatrix, jumps: Vec<(CMatrix, f64)>, hbar: f64) -> Result<Self> {
        let dim = h.nrows();
        if dim == 0 || dim > MAX_DIM || h.ncols() != dim {
            return Err(Error::InvalidSystem(format!("Hamiltonian must be square with dimension 1..={MAX_DIM}")));
        }
        if hermiticity_error(&h) > 1e-12 {
            return Err(Error::InvalidSystem("Hamiltonian is not Hermitian".into()));
        }
        if !(hbar > 0.0) {
            return Err(Error::Domain(format!("hbar must be positive, got {hbar}")));
        }
        for (k, (l, rate)) in jumps.iter().enumerate() {
            check_square(l, dim, "jump operator")?;
            if !(*rate >= 0.0 && rate.is_finite()) {
                return Err(Error::InvalidSystem(format!("jump {k} has rate {rate}; rates must be non-negative")));
            }
        }
        Ok(Self { h, jumps, hbar })
    }

    pub fn has_dissipation(&self) -> bool {
        self.jumps.iter().any(|(_, r)| *r != 0.0)
    }
}

/// `-(i/hbar)[H, rho] + sum_j lambda_j (L rho L^+ - {L^+ L, rho} / 2)`.
pub fn lindblad_rhs(gen: &LindbladGenerator, rho: &CMatrix) -> CMatrix {
    let mut out = commutator(&gen.h, rho) * (-I / gen.hbar);
    for (l, rate) in &gen.jumps {
        if *rate == 0.0 {
            continue;
        }
        let ld = l.adjoint();
        let ldl = &ld * l;
        out += (l * rho * &ld - (&ldl * rho + rho * &ldl) * c(0.5)) * c(*rate);
    }
    out
}

impl Generator for LindbladGenerator {
    fn dim(&self) -> usize {
        self.h.nrows()
    }

    fn rhs(&self, rho: &CMatrix) -> CMatrix {
        lindblad_rhs(self, rho)
    }
}

/// Bath response at one Bohr frequency: `Gamma(omega) = gamma / 2 + i shift`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateEntry {
    pub omega: f64,
    pub gamma: f64,
    pub shift: f64,
}

/// System-bath coupling `alpha * sum_a A_a (x) B_a` with Hermitian system operators `A_a`.
#[derive(Clone, Debug)]
pub struct RedfieldGenerator {
    pub h_s: CMatrix,
    pub couplings: Vec<CMatrix>,
    pub rates: Vec<RateEntry>,
    pub alpha2: f64,
    pub hbar: f64,
    blocks: Vec<Vec<(f64, CMatrix)>>,
    lambdas: Vec<CMatrix>,
}

/// Frequencies closer than `BOHR_MERGE_TOL` relative to the larger of the two
/// (or of `scale`, the spectral width, so near-zero splittings merge with zero).
fn same_frequency(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= BOHR_MERGE_TOL * a.abs().max(b.abs()).max(scale)
}

fn spectral_width(h: &CMatrix, hbar: f64) -> f64 {
    let (e, _) = hermitian_eigen(h);
    (e[e.len() - 1] - e[0]) / hbar
}

/// Splits `A` into Bohr-frequency components `A(omega) = sum_{E_m - E_n = hbar omega} P_n A P_m`.
pub fn bohr_components(h: &CMatrix, a: &CMatrix, hbar: f64) -> Vec<(f64, CMatrix)> {
    let (e, v) = hermitian_eigen(h);
    let a_eig = v.adjoint() * a * &v;
    let dim = e.len();
    let scale = (e[dim - 1] - e[0]) / hbar;
    let mut out: Vec<(f64, CMatrix)> = Vec::new();
    for n in 0..dim {
        for m in 0..dim {
            let z = a_eig[(n, m)];
            if z.norm() == 0.0 {
                continue;
            }
            let w = (e[m] - e[n]) / hbar;
            let slot = match out.iter().position(|(w0, _)| same_frequency(*w0, w, scale)) {
                Some(k) => k,
                None => {
                    out.push((w, CMatrix::zeros(dim, dim)));
                    out.len() - 1
                }
            };
            out[slot].1[(n, m)] += z;
        }
    }
    for (_, comp) in &mut out {
        *comp = &v * &*comp * v.adjoint();
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

impl RedfieldGenerator {
    /// Every Bohr frequency carried by a coupling must have an entry in `rates`.
    pub fn new(h_s: CMatrix, couplings: Vec<CMatrix>, rates: Vec<RateEntry>, alpha2: f64, hbar: f64) -> Result<Self> {
        LindbladGenerator::new(h_s.clone(), Vec::new(), hbar)?;
        let dim = h_s.nrows();
        for a in &couplings {
            check_square(a, dim, "coupling operator")?;
            if hermiticity_error(a) > 1e-12 {
                return Err(Error::InvalidSystem("coupling operators must be Hermitian".into()));
            }
        }
        if rates.iter().any(|r| !(r.omega.is_finite() && r.gamma.is_finite() && r.shift.is_finite()))
            || !alpha2.is_finite()
        {
            return Err(Error::InvalidSystem("rate table must be finite".into()));
        }
        let scale = spectral_width(&h_s, hbar);
        let mut blocks = Vec::with_capacity(couplings.len());
        let mut lambdas = Vec::with_capacity(couplings.len());
        for a in &couplings {
            let comps = bohr_components(&h_s, a, hbar);
            let mut lambda = CMatrix::zeros(dim, dim);
            for (w, comp) in &comps {
                let r = rates
                    .iter()
                    .find(|r| same_frequency(r.omega, *w, scale))
                    .ok_or_else(|| Error::InvalidSystem(format!("rate table has no entry for Bohr frequency {w}")))?;
                lambda += comp * Complex64::new(0.5 * r.gamma, r.shift);
            }
            blocks.push(comps);
            lambdas.push(lambda);
        }
        Ok(Self { h_s, couplings, rates, alpha2, hbar, blocks, lambdas })
    }

    pub fn rate_at(&self, omega: f64) -> Option<RateEntry> {
        let scale = spectral_width(&self.h_s, self.hbar);
        self.rates.iter().copied().find(|r| same_frequency(r.omega, omega, scale))
    }
}

/// `-(i/hbar)[H, rho] + alpha^2 sum_a ([Lambda_a rho, A_a] + [A_a, rho Lambda_a^+])`
/// with `Lambda_a = sum_omega Gamma(omega) A_a(omega)`.
pub fn redfield_rhs(gen: &RedfieldGenerator, rho: &CMatrix) -> CMatrix {
    let mut out = commutator(&gen.h_s, rho) * (-I / gen.hbar);
    for (a, lambda) in gen.couplings.iter().zip(&gen.lambdas) {
        let lr = lambda * rho;
        let rl = rho * lambda.adjoint();
        out += (commutator(&lr, a) + commutator(a, &rl)) * c(gen.alpha2);
    }
    out
}

impl Generator for RedfieldGenerator {
    fn dim(&self) -> usize {
        self.h_s.nrows()
    }

    fn rhs(&self, rho: &CMatrix) -> CMatrix {
        redfield_rhs(self, rho)
    }
}

/// Secular (rotating-wave) limit: jumps `A_a(omega)` at rate `alpha^2 gamma(omega)`
/// and the Lamb-shift Hamiltonian `H + hbar alpha^2 sum S(omega) A^+ A`.
pub fn secular_reduce(gen: &RedfieldGenerator) -> Result<LindbladGenerator> {
    let mut h = gen.h_s.clone();
    let mut jumps = Vec::new();
    for comps in &gen.blocks {
        for (w, a) in comps {
            let r = gen.rate_at(*w).expect("checked at construction");
            let rate = gen.alpha2 * r.gamma;
            if rate < 0.0 {
                return Err(Error::InvalidSystem(format!("negative secular rate {rate} at Bohr frequency {w}")));
            }
            let ada = a.adjoint() * a;
            h += &ada * c(gen.hbar * gen.alpha2 * r.shift);
            if rate > 0.0 {
                jumps.push((a.clone(), rate));
            }
        }
    }
    let h = (&h + h.adjoint()) * c(0.5);
    LindbladGenerator::new(h, jumps, gen.hbar)
}

/// Power-iteration estimate of the generator's largest eigenvalue modulus.
pub fn generator_norm<G: Generator + ?Sized>(gen: &G) -> f64 {
    let dim = gen.dim();
    let mut x = CMatrix::from_fn(dim, dim, |r, col| Complex64::new(1.0 + 0.37 * r as f64, 0.11 * col as f64 - 0.2));
    let mut est = 0.0;
    for _ in 0..60 {
        let n = x.norm();
        if n == 0.0 {
            return 0.0;
        }
        x /= c(n);
        let y = gen.rhs(&x);
        est = y.norm();
        x = y;
    }
    est
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
}

fn rk4_step<G: Generator + ?Sized>(gen: &G, rho: &CMatrix, dt: f64) -> CMatrix {
    let h = c(dt);
    let k1 = gen.rhs(rho);
    let k2 = gen.rhs(&(rho + &k1 * (h * 0.5)));
    let k3 = gen.rhs(&(rho + &k2 * (h * 0.5)));
    let k4 = gen.rhs(&(rho + &k3 * h));
    let next = rho + (k1 + (k2 + k3) * c(2.0) + k4) * (h / 6.0);
    (&next + next.adjoint()) * c(0.5)
}

/// Fixed-step RK4 from 0 to `t_final`, recording every `record_every` steps
/// (the initial and final states are always recorded).
pub fn evolve_recorded<G: Generator + ?Sized>(
    gen: &G,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
    record_every: usize,
) -> Result<Trajectory> {
    if rho0.dim() != gen.dim() {
        return Err(Error::DimensionMismatch { expected: gen.dim(), actual: rho0.dim() });
    }
    if !(dt > 0.0 && t_final >= 0.0 && dt.is_finite() && t_final.is_finite()) || record_every == 0 {
        return Err(Error::Domain(format!("bad integration window t_final = {t_final}, dt = {dt}")));
    }
    let norm = generator_norm(gen);
    if norm * dt > RK4_STABILITY {
        return Err(Error::StepSize(format!(
            "dt = {dt} times generator norm {norm:.3e} exceeds {RK4_STABILITY}; use dt < {:.3e}",
            RK4_STABILITY / norm
        )));
    }
    let n_steps = libm::ceil(t_final / dt - 1e-9) as usize;
    let h = if n_steps > 0 { t_final / n_steps as f64 } else { dt };
    let mut rho = rho0.entries.clone();
    let mut traj = Trajectory { times: vec![0.0], states: vec![rho.clone()] };
    for step in 1..=n_steps {
        rho = rk4_step(gen, &rho, h);
        let drift = (rho.trace() - c(1.0)).norm();
        if drift > TRACE_DRIFT_LIMIT || !drift.is_finite() {
            return Err(Error::StepSize(format!(
                "trace drifted by {drift:.2e} at t = {:.6}; reduce dt below {dt}",
                step as f64 * h
            )));
        }
        if step % record_every == 0 || step == n_steps {
            traj.times.push(step as f64 * h);
            traj.states.push(rho.clone());
        }
    }
    Ok(traj)
}

pub fn evolve<G: Generator + ?Sized>(gen: &G, rho0: &DensityMatrix, t_final: f64, dt: f64) -> Result<Trajectory> {
    evolve_recorded(gen, rho0, t_final, dt, 1)
}

/// Schrodinger `tr(rho(t) A)` and Heisenberg `tr(rho0 A(t))` for a dissipation-free generator.
pub fn heisenberg_check(gen: &LindbladGenerator, a: &CMatrix, rho0: &DensityMatrix, t: f64) -> Result<(f64, f64)> {
    if gen.has_dissipation() {
        return Err(Error::Contract("Schrodinger/Heisenberg equivalence is checked for unitary dynamics only".into()));
    }
    check_square(a, gen.dim(), "observable")?;
    let scale = gen.h.norm() / gen.hbar;
    let dt = if scale > 0.0 { 0.01 / scale } else { t.max(1e-3) };
    let schr = evolve_recorded(gen, rho0, t, dt, usize::MAX)?;
    let rho_t = schr.states.last().expect("non-empty");
    let lhs = (rho_t * a).trace().re;
    let heis = HeisenbergGenerator { h: &gen.h, hbar: gen.hbar };
    let n_steps = libm::ceil(t / dt - 1e-9) as usize;
    let h = if n_steps > 0 { t / n_steps as f64 } else { dt };
    let mut op = a.clone();
    for _ in 0..n_steps {
        op = rk4_step(&heis, &op, h);
    }
    let rhs = (&rho0.entries * op).trace().re;
    Ok((lhs, rhs))
}

struct HeisenbergGenerator<'a> {
    h: &'a CMatrix,
    hbar: f64,
}

impl Generator for HeisenbergGenerator<'_> {
    fn dim(&self) -> usize {
        self.h.nrows()
    }

    fn rhs(&self, a: &CMatrix) -> CMatrix {
        commutator(self.h, a) * (I / self.hbar)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PositivityReport {
    pub times: Vec<f64>,
    pub min_eigenvalue: Vec<f64>,
    pub trace_deviation: Vec<f64>,
    pub first_violation: Option<f64>,
}

impl PositivityReport {
    pub fn worst(&self) -> f64 {
        self.min_eigenvalue.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Minimum eigenvalue of `(rho + rho^+)/2` and trace error at every recorded time.
pub fn positivity_report(traj: &Trajectory, tolerance: f64) -> PositivityReport {
    let mut report = PositivityReport {
        times: traj.times.clone(),
        min_eigenvalue: Vec::with_capacity(traj.states.len()),
        trace_deviation: Vec::with_capacity(traj.states.len()),
        first_violation: None,
    };
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        let lo = hermitian_eigen(rho).0[0];
        if lo < -tolerance && report.first_violation.is_none() {
            report.first_violation = Some(*t);
        }
        report.min_eigenvalue.push(lo);
        report.trace_deviation.push((rho.trace() - c(1.0)).norm());
    }
    report
}

/// Qubit `H = (hbar w0 / 2) sigma_z` coupled through `cos(theta) sigma_z + sin(theta) sigma_x`
/// to a zero-temperature bath: emission at rate `gamma`, no absorption, pure
/// dephasing at rate `gamma_0`, and a Lamb shift `shift` on the emission channel.
pub fn tilted_qubit_redfield(
    w0: f64,
    theta: f64,
    gamma: f64,
    gamma_0: f64,
    shift: f64,
    alpha2: f64,
    hbar: f64,
) -> Result<RedfieldGenerator> {
    let h = sigma_z() * c(0.5 * hbar * w0);
    let a = sigma_z() * c(libm::cos(theta)) + sigma_x() * c(libm::sin(theta));
    // A(omega) with omega = (E_m - E_n)/hbar: the lowering part |g><e| sits at omega = +w0
    let rates = vec![
        RateEntry { omega: w0, gamma, shift },
        RateEntry { omega: -w0, gamma: 0.0, shift: 0.0 },
        RateEntry { omega: 0.0, gamma: gamma_0, shift: 0.0 },
    ];
    RedfieldGenerator::new(h, vec![a], rates, alpha2, hbar)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ViolationCase {
    pub theta: f64,
    /// Bloch angles of the initial pure state.
    pub polar: f64,
    pub azimuth: f64,
    pub report: PositivityReport,
}

/// Scans coupling angles and initial pure states of [`tilted_qubit_redfield`]
/// and returns the case with the most negative eigenvalue.
#[allow(clippy::too_many_arguments)]
pub fn scan_redfield_violation(
    thetas: &[f64],
    n_polar: usize,
    n_azimuth: usize,
    params: (f64, f64, f64, f64, f64),
    t_final: f64,
    dt: f64,
    tolerance: f64,
) -> Result<ViolationCase> {
    let (w0, gamma, gamma_0, shift, alpha2) = params;
    let mut best: Option<ViolationCase> = None;
    for &theta in thetas {
        let gen = tilted_qubit_redfield(w0, theta, gamma, gamma_0, shift, alpha2, 1.0)?;
        for a in 0..n_polar {
            let polar = core::f64::consts::PI * a as f64 / (n_polar.max(2) - 1) as f64;
            for b in 0..n_azimuth {
                let azimuth = 2.0 * core::f64::consts::PI * b as f64 / n_azimuth as f64;
                let psi = [c(libm::cos(polar / 2.0)), Complex64::from_polar(libm::sin(polar / 2.0), azimuth)];
                let rho0 = DensityMatrix::pure(&psi)?;
                let traj = evolve(&gen, &rho0, t_final, dt)?;
                let report = positivity_report(&traj, tolerance);
                if best.as_ref().is_none_or(|b| report.worst() < b.report.worst()) {
                    best = Some(ViolationCase { theta, polar, azimuth, report });
                }
            }
        }
    }
    best.ok_or_else(|| Error::Domain("empty scan".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        max_abs(&(a - b)) < tol
    }

    #[test]
    fn decay_of_excited_state() {
        let gen = LindbladGenerator::new(CMatrix::zeros(2, 2), vec![(sigma_minus(), 1.0)], 1.0).unwrap();
        let rho = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(0.0)]));
        let d = lindblad_rhs(&gen, &rho);
        let want = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(-1.0), c(1.0)]));
        assert!(close(&d, &want, 1e-15));
        let idle = LindbladGenerator::new(CMatrix::zeros(3, 3), vec![], 1.0).unwrap();
        assert_eq!(lindblad_rhs(&idle, &CMatrix::identity(3, 3)), CMatrix::zeros(3, 3));
    }

    #[test]
    fn negative_rate_rejected() {
        assert!(LindbladGenerator::new(sigma_z(), vec![(sigma_minus(), -0.1)], 1.0).is_err());
    }

    #[test]
    fn expectation_basics() {
        let mixed = DensityMatrix::maximally_mixed(4).unwrap();
        assert!((expectation(&mixed, &CMatrix::identity(4, 4)).unwrap() - 1.0).abs() < 1e-15);
        let up = DensityMatrix::pure(&[c(1.0), c(0.0)]).unwrap();
        assert_eq!(expectation(&up, &sigma_z()).unwrap(), 1.0);
    }

    #[test]
    fn rabi_oscillation() {
        let gen = LindbladGenerator::new(sigma_x(), vec![], 1.0).unwrap();
        let up = DensityMatrix::pure(&[c(1.0), c(0.0)]).unwrap();
        for t in [0.3, 1.0, 2.7] {
            let (s, h) = heisenberg_check(&gen, &sigma_z(), &up, t).unwrap();
            let want = libm::cos(2.0 * t);
            assert!((s - want).abs() < 1e-8 && (h - want).abs() < 1e-8, "{s} {h} {want}");
        }
        let (s, h) = heisenberg_check(&gen, &CMatrix::identity(2, 2), &up, 1.0).unwrap();
        assert!((s - 1.0).abs() < 1e-14 && (h - 1.0).abs() < 1e-14);
        let damped = LindbladGenerator::new(sigma_x(), vec![(sigma_minus(), 0.2)], 1.0).unwrap();
        assert!(matches!(heisenberg_check(&damped, &sigma_z(), &up, 1.0), Err(Error::Contract(_))));
    }

    #[test]
    fn bohr_components_resum() {
        let h = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0), c(1.0), c(1.0 + 1e-12), c(2.5)]));
        let a = CMatrix::from_fn(4, 4, |r, k| c(1.0 / (1.0 + r as f64 + k as f64)));
        let comps = bohr_components(&h, &a, 1.0);
        let total = comps.iter().fold(CMatrix::zeros(4, 4), |acc, (_, m)| acc + m);
        assert!(close(&total, &a, 1e-12));
        // 0, +-1, +-1.5, +-2.5: the near-degenerate pair merges into the same blocks
        assert_eq!(comps.len(), 7);
    }

    #[test]
    fn zero_rates_leave_commutator() {
        let gen = tilted_qubit_redfield(1.0, 0.6, 0.0, 0.0, 0.0, 1.0, 1.0).unwrap();
        let rho = DensityMatrix::pure(&[c(0.6), c(0.8)]).unwrap().entries;
        let want = commutator(&gen.h_s, &rho) * (-I);
        assert!(close(&redfield_rhs(&gen, &rho), &want, 1e-15));
        assert!(secular_reduce(&gen).unwrap().jumps.is_empty());
    }

    #[test]
    fn negative_secular_rate_rejected() {
        let gen = tilted_qubit_redfield(1.0, 0.6, -0.5, 0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(secular_reduce(&gen).is_err());
    }

    #[test]
    fn step_size_guard() {
        let gen = LindbladGenerator::new(sigma_x() * c(100.0), vec![], 1.0).unwrap();
        let up = DensityMatrix::pure(&[c(1.0), c(0.0)]).unwrap();
        assert!(matches!(evolve(&gen, &up, 1.0, 0.1), Err(Error::StepSize(_))));
    }

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(v.len(), v.iter().map(|x| c(*x))))
    }

    #[test]
    fn damped_qubit_matches_exponentials() {
        let lam = 0.7;
        let decay = LindbladGenerator::new(sigma_z() * c(0.5), vec![(sigma_minus(), lam)], 1.0).unwrap();
        let dephase = LindbladGenerator::new(CMatrix::zeros(2, 2), vec![(sigma_z(), lam)], 1.0).unwrap();
        let plus = DensityMatrix::pure(&[c(1.0), c(1.0)]).unwrap();
        let up = DensityMatrix::pure(&[c(1.0), c(0.0)]).unwrap();
        let a = evolve_recorded(&decay, &up, 3.0, 1e-3, 100).unwrap();
        let b = evolve_recorded(&dephase, &plus, 3.0, 1e-3, 100).unwrap();
        for (t, rho) in a.times.iter().zip(&a.states) {
            assert!((rho[(0, 0)].re - libm::exp(-lam * t)).abs() < 1e-10);
        }
        for (t, rho) in b.times.iter().zip(&b.states) {
            assert!((rho[(0, 1)].norm() - 0.5 * libm::exp(-2.0 * lam * t)).abs() < 1e-10);
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        let gen =
            LindbladGenerator::new(sigma_x() * c(1.3) + sigma_z() * c(0.4), vec![(sigma_minus(), 0.5)], 1.0).unwrap();
        let rho0 = DensityMatrix::pure(&[c(0.8), Complex64::new(0.0, 0.6)]).unwrap();
        let exact = evolve(&gen, &rho0, 2.0, 1e-4).unwrap().states.pop().unwrap();
        let err = |dt: f64| max_abs(&(evolve(&gen, &rho0, 2.0, dt).unwrap().states.pop().unwrap() - &exact));
        let order = libm::log2(err(0.1) / err(0.05));
        assert!((order - 4.0).abs() < 0.3, "{order}");
    }

    #[test]
    fn detailed_balance_keeps_gibbs_state() {
        let (w, beta) = (1.4, 0.8);
        let n = 1.0 / (libm::exp(beta * w) - 1.0);
        let h = sigma_z() * c(0.5 * w);
        let gen =
            LindbladGenerator::new(h.clone(), vec![(sigma_minus(), 0.3 * (n + 1.0)), (sigma_plus(), 0.3 * n)], 1.0)
                .unwrap();
        let rho = DensityMatrix::gibbs(&h, beta).unwrap();
        assert!(max_abs(&lindblad_rhs(&gen, &rho.entries)) < 1e-14);
        let far = DensityMatrix::pure(&[c(1.0), c(1.0)]).unwrap();
        let end = evolve_recorded(&gen, &far, 60.0, 0.01, usize::MAX).unwrap().states.pop().unwrap();
        assert!(close(&end, &rho.entries, 1e-6));
    }

    #[test]
    fn secular_generator_agrees_on_populations() {
        // transverse coupling on a diagonal Hamiltonian: populations never see the non-secular terms
        let gen = tilted_qubit_redfield(1.0, core::f64::consts::FRAC_PI_2, 1.0, 0.0, 0.3, 0.2, 1.0).unwrap();
        let sec = secular_reduce(&gen).unwrap();
        assert_eq!(sec.jumps.len(), 1);
        assert!((sec.jumps[0].1 - 0.2).abs() < 1e-15);
        assert!(close(&sec.jumps[0].0, &sigma_minus(), 1e-15));
        let rho0 = DensityMatrix::new(diag(&[0.9, 0.1])).unwrap();
        let a = evolve(&gen, &rho0, 5.0, 0.01).unwrap();
        let b = evolve(&sec, &rho0, 5.0, 0.01).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!((x[(0, 0)] - y[(0, 0)]).norm() < 1e-12);
        }
        // Lamb shift lands on the excited level
        assert!((sec.h[(0, 0)].re - (0.5 + 0.2 * 0.3)).abs() < 1e-14);
    }
}
