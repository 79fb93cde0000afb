//! The Gaussian posterior object shared by the exact and variational
//! routes.
//!
//! Both posteriors have mean `Σ_j a_j e_j(t)` and covariance
//! `k(t,s) - (R E(t))ᵀ C (R E(s))` where `E(t) = (e_j(t))_{j≤J}`, `R` is a
//! `q×J` reduction map and `C` a PSD weight: for the exact posterior
//! `R = Φ diag(λ_j κ_j)` (rows indexed by data) and `C = (K + σ²I)^{-1}`
//! held as a Cholesky factor; for a variational posterior `R` maps into the
//! `m` inducing directions and `C` is a dense `m×m` matrix bounded by the
//! identity. The integrated posterior variance `∫ C(t,t) dμ` collapses to
//! trace identities through basis orthonormality and is cached at
//! construction.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::spectral::{
    basis_matrix, BasisSide, ForwardOperator, Point, PriorSpectrum, SeriesFunction,
};
use crate::variational::SchemeKind;

/// Which construction produced a posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosteriorKind {
    Exact,
    Variational { scheme: SchemeKind, m: usize },
}

pub(crate) enum CovWeight {
    /// `C = (K + σ²I)^{-1}`, applied through the cached Cholesky factor.
    Solve(Cholesky<f64, Dyn>),
    /// Explicit PSD matrix (inducing-variable corrections).
    Dense(DMatrix<f64>),
}

/// A Gaussian posterior over `f`, evaluable pointwise and as series
/// coefficients on the `e`-basis.
pub struct GaussianPosterior {
    kind: PosteriorKind,
    op: Arc<dyn ForwardOperator>,
    prior: PriorSpectrum,
    mean: SeriesFunction,
    reduce_map: DMatrix<f64>,
    weight: CovWeight,
    variance_mass: f64,
}

impl GaussianPosterior {
    pub(crate) fn from_parts(
        kind: PosteriorKind,
        op: Arc<dyn ForwardOperator>,
        prior: PriorSpectrum,
        mean: SeriesFunction,
        reduce_map: DMatrix<f64>,
        weight: CovWeight,
        variance_mass: f64,
    ) -> Self {
        debug_assert_eq!(reduce_map.ncols(), prior.truncation());
        GaussianPosterior {
            kind,
            op,
            prior,
            mean,
            reduce_map,
            weight,
            variance_mass,
        }
    }

    pub fn kind(&self) -> PosteriorKind {
        self.kind
    }

    pub fn operator(&self) -> &Arc<dyn ForwardOperator> {
        &self.op
    }

    pub fn prior(&self) -> &PriorSpectrum {
        &self.prior
    }

    pub fn truncation(&self) -> usize {
        self.prior.truncation()
    }

    /// Posterior mean as `e`-basis coefficients.
    pub fn mean_coeffs(&self) -> &SeriesFunction {
        &self.mean
    }

    /// Posterior mean at a point.
    pub fn mean_at(&self, t: Point) -> Result<f64> {
        self.mean.eval(self.op.as_ref(), t)
    }

    /// Integrated posterior variance `∫ C(t,t) dμ(t)`, exact in the
    /// truncated model.
    pub fn variance_mass(&self) -> f64 {
        self.variance_mass
    }

    /// Posterior covariance on the full grid: entry `(i, k)` is
    /// `cov(p_i, p_k)`.
    pub fn cov_grid(&self, points: &[Point]) -> Result<DMatrix<f64>> {
        let e = basis_matrix(self.op.as_ref(), BasisSide::E, points, self.truncation())?;
        // prior part: E diag(λ) Eᵀ
        let mut scaled = e.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.prior.lambda(j + 1);
        }
        let mut cov = &scaled * e.transpose();
        // correction: (R Eᵀ)ᵀ C (R Eᵀ)
        let p = &self.reduce_map * e.transpose();
        let correction = match &self.weight {
            CovWeight::Solve(chol) => {
                let x = chol.solve(&p);
                p.tr_mul(&x)
            }
            CovWeight::Dense(c) => p.tr_mul(&(c * &p)),
        };
        cov -= correction;
        Ok(cov)
    }

    /// Pointwise posterior variances `cov(p, p)` along a grid.
    pub fn var_at(&self, points: &[Point]) -> Result<Vec<f64>> {
        let e = basis_matrix(self.op.as_ref(), BasisSide::E, points, self.truncation())?;
        let p = &self.reduce_map * e.transpose();
        let corrected = match &self.weight {
            CovWeight::Solve(chol) => chol.solve(&p),
            CovWeight::Dense(c) => c * &p,
        };
        Ok((0..points.len())
            .map(|i| {
                let prior: f64 = e
                    .row(i)
                    .iter()
                    .enumerate()
                    .map(|(j, v)| self.prior.lambda(j + 1) * v * v)
                    .sum();
                prior - p.column(i).dot(&corrected.column(i))
            })
            .collect())
    }

    /// Posterior covariance between two points.
    pub fn cov_eval(&self, t: Point, s: Point) -> Result<f64> {
        Ok(self.cov_grid(&[t, s])?[(0, 1)])
    }

    /// Full coefficient-space covariance `Λ - Rᵀ C R` (a `J×J` matrix);
    /// intended for modest truncation levels.
    pub fn coeff_covariance(&self) -> DMatrix<f64> {
        let j_max = self.truncation();
        let corrected = match &self.weight {
            CovWeight::Solve(chol) => chol.solve(&self.reduce_map),
            CovWeight::Dense(c) => c * &self.reduce_map,
        };
        let mut cov = self.reduce_map.tr_mul(&corrected);
        cov.neg_mut();
        for j in 0..j_max {
            cov[(j, j)] += self.prior.lambda(j + 1);
        }
        cov
    }

    /// Posterior mean and covariance in coefficient space, for sampling.
    pub fn coeff_distribution(&self) -> (DVector<f64>, DMatrix<f64>) {
        (
            DVector::from_column_slice(self.mean.coeffs()),
            self.coeff_covariance(),
        )
    }
}

pub(crate) fn check_sigma2(sigma2: f64) -> Result<()> {
    if sigma2 > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "posterior construction requires sigma2 > 0, got {sigma2}"
        )))
    }
}
