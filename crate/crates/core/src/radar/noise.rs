use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

use super::doppler_template;

/// Known covariance of the radar disturbance.
#[derive(Debug, Clone)]
pub enum NoiseCovariance {
    /// `σ²·I`.
    White { dim: usize, variance: f64 },
    /// General Hermitian positive-definite matrix, kept with its Cholesky factor.
    Full {
        covariance: DMatrix<Complex64>,
        lower: DMatrix<Complex64>,
    },
}

impl NoiseCovariance {
    pub fn white(dim: usize, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) || dim == 0 {
            return Err(Error::SingularCovariance);
        }
        Ok(Self::White { dim, variance })
    }

    pub fn full(covariance: DMatrix<Complex64>) -> Result<Self> {
        if !covariance.is_square() || covariance.nrows() == 0 {
            return Err(Error::SingularCovariance);
        }
        let scale = covariance.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if (&covariance - covariance.adjoint()).iter().any(|v| v.norm() > 1e-12 * scale) {
            return Err(Error::SingularCovariance);
        }
        let chol = covariance.clone().cholesky().ok_or(Error::SingularCovariance)?;
        let lower = chol.l();
        // reject numerically singular factors
        let diag: Vec<f64> = lower.diagonal().iter().map(|v| v.re).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        if diag.iter().any(|&d| !(d > 1e-8 * max)) {
            return Err(Error::SingularCovariance);
        }
        Ok(Self::Full { covariance, lower })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::White { dim, .. } => *dim,
            Self::Full { covariance, .. } => covariance.nrows(),
        }
    }

    pub fn white_variance(&self) -> Option<f64> {
        match self {
            Self::White { variance, .. } => Some(*variance),
            Self::Full { .. } => None,
        }
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        match self {
            Self::White { dim, variance } => DMatrix::identity(*dim, *dim) * Complex64::new(*variance, 0.0),
            Self::Full { covariance, .. } => covariance.clone(),
        }
    }

    /// `L⁻¹v` with `C = L Lᴴ`; whitened noise is `CN(0, I)`.
    pub fn whiten(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(match self {
            Self::White { variance, .. } => {
                let s = 1.0 / variance.sqrt();
                v.iter().map(|x| x * s).collect()
            }
            Self::Full { lower, .. } => {
                let rhs = DVector::from_column_slice(v);
                lower
                    .solve_lower_triangular(&rhs)
                    .ok_or(Error::SingularCovariance)?
                    .iter()
                    .copied()
                    .collect()
            }
        })
    }

    /// `C⁻¹v`.
    pub fn solve(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        match self {
            Self::White { variance, .. } => {
                if v.len() != self.dim() {
                    return Err(Error::LengthMismatch {
                        expected: self.dim(),
                        got: v.len(),
                    });
                }
                Ok(v.iter().map(|x| x / variance).collect())
            }
            Self::Full { lower, .. } => {
                let w = DVector::from_vec(self.whiten(v)?);
                Ok(lower
                    .adjoint()
                    .solve_upper_triangular(&w)
                    .ok_or(Error::SingularCovariance)?
                    .iter()
                    .copied()
                    .collect())
            }
        }
    }
}

/// `ξ = C⁻¹h / ‖C^{-1/2}h‖` for `h = h(c, ν)`.
pub fn whitened_template(code: &[f64], doppler: f64, pri: f64, noise: &NoiseCovariance) -> Result<Vec<Complex64>> {
    let h = doppler_template(code, doppler, pri);
    let cinv_h = noise.solve(&h)?;
    let quad: f64 = h.iter().zip(&cinv_h).map(|(a, b)| (a.conj() * b).re).sum();
    if !(quad > 0.0) {
        return Err(Error::SingularCovariance);
    }
    let s = 1.0 / quad.sqrt();
    Ok(cinv_h.into_iter().map(|v| v * s).collect())
}
