//! Real orthogonal normal-mode basis of the cyclic ring spring matrix.

use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::PI;

/// Columns are the normal modes; `transform[j * P + k]` is the weight of bead
/// `j` in mode `k`. Modes are stored in index order `k = 0..P`, so the
/// frequencies are not monotone (`P = 4` gives `0, sqrt2, 2, sqrt2`).
#[derive(Clone, Debug, PartialEq)]
pub struct NormalModeBasis {
    pub n_beads: usize,
    pub transform: Vec<f64>,
    /// Spring-matrix frequencies in units of `omega_P`: `2 sin(k pi / P)`.
    pub frequencies: Vec<f64>,
}

pub fn build_normal_modes(n_beads: usize) -> NormalModeBasis {
    assert!(n_beads > 0, "a ring needs at least one bead");
    let p = n_beads;
    let pf = p as f64;
    let mut c = vec![0.0; p * p];
    for j in 0..p {
        let jf = j as f64;
        for k in 0..p {
            let kf = k as f64;
            c[j * p + k] = if k == 0 {
                libm::sqrt(1.0 / pf)
            } else if 2 * k < p {
                libm::sqrt(2.0 / pf) * libm::cos(2.0 * PI * jf * kf / pf)
            } else if 2 * k == p {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * libm::sqrt(1.0 / pf)
            } else {
                libm::sqrt(2.0 / pf) * libm::sin(2.0 * PI * jf * kf / pf)
            };
        }
    }
    let frequencies = (0..p).map(|k| 2.0 * libm::sin(k as f64 * PI / pf)).collect();
    NormalModeBasis { n_beads: p, transform: c, frequencies }
}

impl NormalModeBasis {
    /// Bead-major `src` (P blocks of `stride` values) to mode-major `dst`.
    pub fn to_normal(&self, src: &[f64], dst: &mut [f64], stride: usize) {
        let p = self.n_beads;
        debug_assert!(src.len() == p * stride && dst.len() == p * stride);
        if p == 1 {
            dst.copy_from_slice(src);
            return;
        }
        dst.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..p {
            let out = &mut dst[k * stride..(k + 1) * stride];
            for j in 0..p {
                let w = self.transform[j * p + k];
                let inp = &src[j * stride..(j + 1) * stride];
                for (o, x) in out.iter_mut().zip(inp) {
                    *o += w * x;
                }
            }
        }
    }

    pub fn from_normal(&self, src: &[f64], dst: &mut [f64], stride: usize) {
        let p = self.n_beads;
        debug_assert!(src.len() == p * stride && dst.len() == p * stride);
        if p == 1 {
            dst.copy_from_slice(src);
            return;
        }
        dst.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..p {
            let out = &mut dst[j * stride..(j + 1) * stride];
            let row = &self.transform[j * p..(j + 1) * p];
            for (k, &w) in row.iter().enumerate() {
                let inp = &src[k * stride..(k + 1) * stride];
                for (o, x) in out.iter_mut().zip(inp) {
                    *o += w * x;
                }
            }
        }
    }

    /// Free-ring angular frequencies for beads of mass `m / P` joined by
    /// springs of stiffness `m omega_P^2`: `sqrt(P) * omega_P * 2 sin(k pi / P)`.
    pub fn dynamical_frequencies(&self, omega_p: f64) -> Vec<f64> {
        let s = libm::sqrt(self.n_beads as f64) * omega_p;
        self.frequencies.iter().map(|w| s * w).collect()
    }
}
