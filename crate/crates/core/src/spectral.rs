//! Eigensystem of the centered covariance-sample Gram matrix and the
//! effective-dimension functionals built from it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, GofError, Result};
use crate::regularizers::Regularizer;

/// Eigenpairs of (1/s) H̃^{1/2} K_s H̃^{1/2}, eigenvalues sorted descending.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    kappa: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralSummary {
    pub lambda: f64,
    pub n1_hat: f64,
    pub n2_hat: f64,
}

/// √(s/(s-1)), the scale that turns the centering projection H_s into H̃_s^{1/2}.
pub fn half_centering_scale(s: usize) -> f64 {
    (s as f64 / (s as f64 - 1.0)).sqrt()
}

/// (1/s) H̃^{1/2} K H̃^{1/2} = H K H / (s - 1), explicitly symmetrized.
pub fn centered_covariance(k_s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = k_s.nrows();
    if s != k_s.ncols() {
        return Err(GofError::DimensionMismatch { expected: s, got: k_s.ncols() });
    }
    if s < 2 {
        return Err(GofError::TooFewSamples { what: "covariance sample", min: 2, got: s });
    }
    let scale = k_s.amax().max(f64::MIN_POSITIVE);
    let asym = (k_s - k_s.transpose()).amax();
    if asym > 1e-10 * scale {
        return Err(GofError::Asymmetric(asym));
    }
    let sf = s as f64;
    let row_means: Vec<f64> = k_s.row_iter().map(|r| r.sum() / sf).collect();
    let col_means: Vec<f64> = k_s.column_iter().map(|c| c.sum() / sf).collect();
    let grand = row_means.iter().sum::<f64>() / sf;
    let inv = 1.0 / (sf - 1.0);
    let mut c = DMatrix::from_fn(s, s, |i, j| (k_s[(i, j)] - row_means[i] - col_means[j] + grand) * inv);
    for i in 0..s {
        for j in 0..i {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(c)
}

/// Eigendecomposition of the centered covariance-sample Gram matrix.
///
/// `kappa` is the kernel bound; eigenvalues in (-1e-10 κ, 0) are clamped to
/// zero and anything more negative is rejected as an assembly error.
pub fn centered_eigensystem(k_s: &DMatrix<f64>, kappa: f64) -> Result<EigenSystem> {
    let c = centered_covariance(k_s)?;
    EigenSystem::from_symmetric(c, kappa)
}

impl EigenSystem {
    fn from_symmetric(c: DMatrix<f64>, kappa: f64) -> Result<Self> {
        let s = c.nrows();
        let eig = SymmetricEigen::new(c);
        let mut order: Vec<usize> = (0..s).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let tol = 1e-10 * kappa;
        let mut values = DVector::zeros(s);
        let mut vectors = DMatrix::zeros(s, s);
        for (dst, &src) in order.iter().enumerate() {
            let v = eig.eigenvalues[src];
            if v < -tol {
                return Err(GofError::NegativeEigenvalue(v));
            }
            values[dst] = v.max(0.0);
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Ok(Self { eigenvalues: values, eigenvectors: vectors, kappa })
    }

    /// Builds an eigensystem from explicit pairs (columns of `vectors`).
    pub fn from_parts(eigenvalues: DVector<f64>, eigenvectors: DMatrix<f64>, kappa: f64) -> Result<Self> {
        let s = eigenvalues.len();
        if eigenvectors.shape() != (s, s) {
            return Err(GofError::DimensionMismatch { expected: s, got: eigenvectors.ncols() });
        }
        Ok(Self { eigenvalues, eigenvectors, kappa })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn sample_count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Per-mode coefficients (g_λ(λ̂_i) - g_λ(0)) / λ̂_i.
    pub fn ratio_coefficients(&self, reg: Regularizer, lambda: f64) -> Result<Vec<f64>> {
        self.eigenvalues.iter().map(|&ev| reg.g_diff_ratio(lambda, ev, self.kappa)).collect()
    }

    /// G = Σ_i ((g_λ(λ̂_i) - g_λ(0)) / λ̂_i) α̂_i α̂_iᵀ.
    pub fn build_g(&self, reg: Regularizer, lambda: f64) -> Result<DMatrix<f64>> {
        let coef = self.ratio_coefficients(reg, lambda)?;
        let v = &self.eigenvectors;
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * coef[j]);
        let mut g = scaled * v.transpose();
        let s = g.nrows();
        for i in 0..s {
            for j in 0..i {
                let m = 0.5 * (g[(i, j)] + g[(j, i)]);
                g[(i, j)] = m;
                g[(j, i)] = m;
            }
        }
        Ok(g)
    }

    pub fn n1_hat(&self, lambda: f64) -> Result<f64> {
        check_lambda(lambda)?;
        Ok(self.eigenvalues.iter().map(|&ev| ev / (ev + lambda)).sum())
    }

    pub fn n2_hat(&self, lambda: f64) -> Result<f64> {
        check_lambda(lambda)?;
        Ok(self.eigenvalues.iter().map(|&ev| (ev / (ev + lambda)).powi(2)).sum::<f64>().sqrt())
    }

    pub fn summary(&self, lambda: f64) -> Result<SpectralSummary> {
        Ok(SpectralSummary { lambda, n1_hat: self.n1_hat(lambda)?, n2_hat: self.n2_hat(lambda)? })
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("regularization parameter must be positive, got {lambda}")))
    }
}

pub fn build_g(eigen: &EigenSystem, reg: Regularizer, lambda: f64) -> Result<DMatrix<f64>> {
    eigen.build_g(reg, lambda)
}

pub fn n1_hat(eigen: &EigenSystem, lambda: f64) -> Result<f64> {
    eigen.n1_hat(lambda)
}

pub fn n2_hat(eigen: &EigenSystem, lambda: f64) -> Result<f64> {
    eigen.n2_hat(lambda)
}
