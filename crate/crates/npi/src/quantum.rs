//! Dense operators and states as written in configuration files.

use npi_core::master_eq::{sigma_minus, sigma_plus, sigma_x, sigma_y, sigma_z, CMatrix, DensityMatrix, MAX_DIM};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Either a named qubit operator or a dense matrix given as real and
/// imaginary parts, optionally multiplied by `scale`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatrixSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default = "unit")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub re: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

fn unit() -> f64 {
    1.0
}

pub const MATRIX_PRESETS: &[&str] = &["sigma_x", "sigma_y", "sigma_z", "sigma_minus", "sigma_plus", "identity"];

impl MatrixSpec {
    pub fn preset(name: &str, scale: f64) -> Self {
        Self { preset: Some(name.into()), scale, re: None, im: None }
    }

    pub fn dense(re: Vec<Vec<f64>>, im: Option<Vec<Vec<f64>>>) -> Self {
        Self { preset: None, scale: 1.0, re: Some(re), im }
    }

    pub fn build(&self) -> Result<CMatrix, String> {
        let base = match (&self.preset, &self.re) {
            (Some(_), Some(_)) => return Err("give either `preset` or `re`/`im`, not both".into()),
            (None, None) => return Err("missing `preset` or `re`".into()),
            (Some(p), None) => {
                if self.im.is_some() {
                    return Err("`im` needs `re`".into());
                }
                match p.as_str() {
                    "sigma_x" => sigma_x(),
                    "sigma_y" => sigma_y(),
                    "sigma_z" => sigma_z(),
                    "sigma_minus" => sigma_minus(),
                    "sigma_plus" => sigma_plus(),
                    "identity" => CMatrix::identity(2, 2),
                    other => {
                        return Err(format!("unknown operator preset `{other}`; known: {}", MATRIX_PRESETS.join(", ")))
                    }
                }
            }
            (None, Some(re)) => {
                let n = re.len();
                if n == 0 || n > MAX_DIM || re.iter().any(|r| r.len() != n) {
                    return Err(format!("`re` must be a square matrix of size 1..={MAX_DIM}"));
                }
                if let Some(im) = &self.im {
                    if im.len() != n || im.iter().any(|r| r.len() != n) {
                        return Err("`im` must have the shape of `re`".into());
                    }
                }
                CMatrix::from_fn(n, n, |r, c| Complex64::new(re[r][c], self.im.as_ref().map_or(0.0, |im| im[r][c])))
            }
        };
        if !self.scale.is_finite() {
            return Err("scale must be finite".into());
        }
        Ok(base * Complex64::new(self.scale, 0.0))
    }
}

/// Initial state: a named qubit state or a pure state vector.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub re: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

pub const STATE_PRESETS: &[&str] = &["excited", "ground", "plus", "maximally_mixed"];

impl StateSpec {
    pub fn preset(name: &str) -> Self {
        Self { preset: Some(name.into()), re: None, im: None }
    }

    pub fn vector(re: Vec<f64>, im: Option<Vec<f64>>) -> Self {
        Self { preset: None, re: Some(re), im }
    }

    pub fn build(&self, dim: usize) -> Result<DensityMatrix, String> {
        let c = |x: f64| Complex64::new(x, 0.0);
        let rho = match (&self.preset, &self.re) {
            (Some(_), Some(_)) => return Err("give either `preset` or `re`/`im`, not both".into()),
            (None, None) => return Err("missing `preset` or `re`".into()),
            (Some(p), None) => match p.as_str() {
                "maximally_mixed" => DensityMatrix::maximally_mixed(dim),
                "excited" | "ground" | "plus" if dim != 2 => {
                    return Err(format!("preset `{p}` is a qubit state but the system has dimension {dim}"))
                }
                "excited" => DensityMatrix::pure(&[c(1.0), c(0.0)]),
                "ground" => DensityMatrix::pure(&[c(0.0), c(1.0)]),
                "plus" => DensityMatrix::pure(&[c(1.0), c(1.0)]),
                other => return Err(format!("unknown state preset `{other}`; known: {}", STATE_PRESETS.join(", "))),
            },
            (None, Some(re)) => {
                if re.len() != dim || self.im.as_ref().is_some_and(|im| im.len() != dim) {
                    return Err(format!("state vector must have {dim} entries"));
                }
                let psi: Vec<Complex64> =
                    (0..dim).map(|k| Complex64::new(re[k], self.im.as_ref().map_or(0.0, |im| im[k]))).collect();
                DensityMatrix::pure(&psi)
            }
        };
        rho.map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_and_dense_agree() {
        let a = MatrixSpec::preset("sigma_y", 2.0).build().unwrap();
        let b = MatrixSpec::dense(vec![vec![0.0, 0.0], vec![0.0, 0.0]], Some(vec![vec![0.0, -2.0], vec![2.0, 0.0]]))
            .build()
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_shapes_rejected() {
        assert!(MatrixSpec::dense(vec![vec![1.0, 0.0]], None).build().is_err());
        assert!(MatrixSpec::preset("sigma_w", 1.0).build().is_err());
        assert!(StateSpec::vector(vec![1.0, 0.0, 0.0], None).build(2).is_err());
        assert!(StateSpec::preset("excited").build(3).is_err());
        assert_eq!(StateSpec::preset("maximally_mixed").build(3).unwrap().dim(), 3);
    }
}
