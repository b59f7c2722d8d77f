//! Gaussian law of the random vector and the standardization `z = D(ξ - μ)` that
//! reduces any `N(μ, Σ)` problem to `N(0, R)` with `R = L Lᵀ`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::problem::InequalitySystem;

/// Relative pivot tolerance of the Cholesky factorization.
pub const PIVOT_TOLERANCE: f64 = 1e-12;
/// Condition numbers of `R` above this value are flagged in diagnostics.
pub const CONDITION_WARNING: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianModel {
    mean: Vec<f64>,
    covariance: DMatrix<f64>,
    correlation: DMatrix<f64>,
    scale: Vec<f64>,
    cholesky: DMatrix<f64>,
    eig_min: f64,
    eig_max: f64,
}

impl GaussianModel {
    /// Builds the model from a mean vector and a row-major covariance matrix.
    pub fn new(mean: Vec<f64>, covariance: &[Vec<f64>]) -> Result<Self> {
        let m = mean.len();
        if covariance.len() != m || covariance.iter().any(|row| row.len() != m) {
            return Err(Error::DimensionMismatch(format!(
                "mean has length {m} but covariance is not {m}x{m}"
            )));
        }
        let cov = DMatrix::from_fn(m, m, |i, j| covariance[i][j]);
        Self::from_matrix(mean, cov)
    }

    pub fn from_matrix(mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let m = mean.len();
        if m == 0 {
            return Err(Error::DimensionMismatch("dimension must be at least 1".into()));
        }
        if covariance.nrows() != m || covariance.ncols() != m {
            return Err(Error::DimensionMismatch(format!(
                "mean has length {m} but covariance is {}x{}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("mean and covariance must be finite".into()));
        }
        for i in 0..m {
            if covariance[(i, i)] <= 0.0 {
                return Err(Error::NotPositiveDefinite { index: i, pivot: covariance[(i, i)] });
            }
            for j in 0..i {
                let (a, b) = (covariance[(i, j)], covariance[(j, i)]);
                if (a - b).abs() > 1e-12 * (a.abs() + b.abs()).max(f64::MIN_POSITIVE) {
                    return Err(Error::InvalidArgument(format!("covariance is not symmetric at ({i}, {j})")));
                }
            }
        }

        let scale: Vec<f64> = (0..m).map(|i| 1.0 / covariance[(i, i)].sqrt()).collect();
        let correlation = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                1.0
            } else {
                // symmetrize explicitly so R is exactly symmetric
                0.5 * (covariance[(i, j)] + covariance[(j, i)]) * scale[i] * scale[j]
            }
        });
        let cholesky = cholesky_lower(&correlation)?;
        let eig = SymmetricEigen::new(correlation.clone()).eigenvalues;
        let eig_min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let eig_max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        Ok(Self { mean, covariance, correlation, scale, cholesky, eig_min, eig_max })
    }

    /// Standard normal model `N(0, I_m)`.
    pub fn standard(m: usize) -> Result<Self> {
        Self::from_matrix(vec![0.0; m], DMatrix::identity(m, m))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn correlation(&self) -> &DMatrix<f64> {
        &self.correlation
    }

    /// Diagonal of `D`, with `D_ii = 1 / sqrt(Σ_ii)`.
    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    /// Lower Cholesky factor `L` of the correlation matrix.
    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.cholesky
    }

    /// `L v`, exploiting the triangular structure.
    pub fn apply_cholesky(&self, v: &[f64]) -> Vec<f64> {
        let m = self.dim();
        (0..m)
            .map(|i| (0..=i).map(|j| self.cholesky[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Spectral norm `‖L‖ = sqrt(λ_max(R))`.
    pub fn cholesky_norm(&self) -> f64 {
        self.eig_max.sqrt()
    }

    /// `K* = max_v ‖Lv‖^{-m} = λ_min(R)^{-m/2}`.
    pub fn min_stretch_constant(&self) -> f64 {
        self.eig_min.powf(-(self.dim() as f64) / 2.0)
    }

    pub fn condition_number(&self) -> f64 {
        self.eig_max / self.eig_min
    }

    pub fn is_near_singular(&self) -> bool {
        !(self.condition_number() <= CONDITION_WARNING)
    }

    /// `D(ξ - μ)`.
    pub fn standardize_point(&self, xi: &[f64]) -> Vec<f64> {
        xi.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, mu), d)| d * (x - mu))
            .collect()
    }

    /// `D⁻¹ z + μ`.
    pub fn destandardize_point(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((z, mu), d)| z / d + mu)
            .collect()
    }

    /// Returns `g̃(x, z) = g(x, D⁻¹z + μ)`.
    pub fn standardize_system(&self, system: &InequalitySystem) -> Result<InequalitySystem> {
        if system.m() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "system has random dimension {} but the model has {}",
                system.m(),
                self.dim()
            )));
        }
        let inv_scale: Vec<f64> = self.scale.iter().map(|d| 1.0 / d).collect();
        Ok(system.compose_affine_z(&inv_scale, &self.mean))
    }
}

/// Lower Cholesky factor with a pivot tolerance relative to the largest diagonal entry.
pub fn cholesky_lower(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let max_diag = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    let threshold = PIVOT_TOLERANCE * max_diag;
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > threshold) {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let diag = pivot.sqrt();
        l[(j, j)] = diag;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / diag;
        }
    }
    Ok(l)
}
