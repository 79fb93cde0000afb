//! Gram matrices and the exact conjugate posterior.
//!
//! With the prior aligned to the operator SVD, the covariance of
//! `Af = (Af(x_i))_i` is `K_ff = Σ_j λ_j κ_j² φ_j φ_jᵀ` where
//! `φ_j = (g_j(x_i))_i`. One Cholesky factorization of `K_ff + σ²I` is
//! cached and reused for every solve; no matrix is ever inverted
//! explicitly.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::posterior::{check_sigma2, CovWeight, GaussianPosterior, PosteriorKind};
use crate::spectral::{
    basis_matrix, tol, BasisSide, ForwardOperator, Point, PriorSpectrum, SeriesFunction,
};

/// Design points, responses, noise level and generation seed.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Vec<Point>,
    y: DVector<f64>,
    sigma2: f64,
    seed: u64,
}

impl Dataset {
    /// `σ² = 0` is accepted so noiseless data can be generated for
    /// checks; posterior construction itself requires `σ² > 0`.
    pub fn new(x: Vec<Point>, y: Vec<f64>, sigma2: f64, seed: u64) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::Parameter(format!(
                "need matching nonempty x/y, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        if sigma2.is_nan() || sigma2 < 0.0 {
            return Err(Error::Parameter(format!(
                "sigma2 must be >= 0, got {sigma2}"
            )));
        }
        Ok(Dataset {
            x,
            y: DVector::from_vec(y),
            sigma2,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    /// Datasets are nonempty by construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self) -> &[Point] {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// The forward Gram matrix with its cached Cholesky factor, plus the
/// basis evaluations it was assembled from (reused by the empirical
/// inducing scheme, the cross-kernel and the MISE trace identities).
pub struct GramSet {
    k_ff: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    /// `Φ` with entries `g_j(x_i)`, `n × J`.
    phi: DMatrix<f64>,
    sigma2: f64,
    jitter: f64,
}

impl GramSet {
    pub fn k_ff(&self) -> &DMatrix<f64> {
        &self.k_ff
    }

    /// Cholesky factor of `K_ff + (σ² + jitter) I`.
    pub fn chol(&self) -> &Cholesky<f64, Dyn> {
        &self.chol
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Jitter that had to be added on top of `σ²` (usually zero).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn n(&self) -> usize {
        self.k_ff.nrows()
    }

    /// `log |K_ff + σ²I|` from the cached factor.
    pub fn logdet(&self) -> f64 {
        2.0 * self
            .chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|d| d.ln())
            .sum::<f64>()
    }

    /// `Φ diag(λ_j κ_j)`, the cross-kernel evaluations
    /// `Cov(f-coefficient j, Af(x_i))`.
    pub fn phi_cross(&self, op: &dyn ForwardOperator, prior: &PriorSpectrum) -> DMatrix<f64> {
        let mut m = self.phi.clone();
        for (j, mut col) in m.column_iter_mut().enumerate() {
            col *= prior.lambda(j + 1) * op.kappa(j + 1);
        }
        m
    }
}

#[cfg(test)]
pub(crate) fn gram_from_matrix(k_ff: DMatrix<f64>, phi: DMatrix<f64>, sigma2: f64) -> GramSet {
    let mut shifted = k_ff.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += sigma2;
    }
    let (chol, jitter) = cholesky_with_jitter(&shifted, "gram_from_matrix").unwrap();
    GramSet {
        k_ff,
        chol,
        phi,
        sigma2,
        jitter,
    }
}

/// Cholesky with the jitter ladder: on failure add
/// `1e-10 × mean diagonal`, doubling up to 6 times.
pub(crate) fn cholesky_with_jitter(
    a: &DMatrix<f64>,
    label: &str,
) -> Result<(Cholesky<f64, Dyn>, f64)> {
    if let Some(c) = Cholesky::new(a.clone()) {
        return Ok((c, 0.0));
    }
    let n = a.nrows();
    let mut jitter = tol::JITTER_REL * a.trace() / n as f64;
    if jitter <= 0.0 {
        jitter = tol::JITTER_REL;
    }
    for _ in 0..=6 {
        let mut b = a.clone();
        for i in 0..n {
            b[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(b) {
            return Ok((c, jitter));
        }
        jitter *= 2.0;
    }
    let min_eig = a
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    Err(Error::Numerical(format!(
        "{label}: Cholesky failed after max jitter {jitter:.3e}; min eigenvalue ≈ {min_eig:.3e}"
    )))
}

/// Assembles `K_ff[i][k] = Σ_{j≤J} λ_j κ_j² g_j(x_i) g_j(x_k)` and caches
/// the Cholesky factor of `K_ff + σ²I`.
pub fn build_gram(
    op: &dyn ForwardOperator,
    prior: &PriorSpectrum,
    data: &Dataset,
) -> Result<GramSet> {
    check_sigma2(data.sigma2())?;
    let j_max = prior.truncation();
    let phi = basis_matrix(op, BasisSide::G, data.x(), j_max)?;
    let mut phi_w = phi.clone();
    for (j, mut col) in phi_w.column_iter_mut().enumerate() {
        let w = prior.lambda(j + 1) * op.kappa(j + 1).powi(2);
        col *= w.sqrt();
    }
    let mut k_ff = &phi_w * phi_w.transpose();
    // mirror the lower triangle so symmetry holds exactly, not just up to
    // gemm accumulation order
    for i in 0..k_ff.nrows() {
        for k in 0..i {
            k_ff[(k, i)] = k_ff[(i, k)];
        }
    }
    let mut shifted = k_ff.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += data.sigma2();
    }
    let (chol, jitter) = cholesky_with_jitter(&shifted, "build_gram")?;
    Ok(GramSet {
        k_ff,
        chol,
        phi,
        sigma2: data.sigma2(),
        jitter,
    })
}

/// The exact conjugate posterior. Builds the Gram set internally; use
/// [`exact_posterior_from_gram`] to reuse one.
pub fn exact_posterior(
    op: &Arc<dyn ForwardOperator>,
    prior: &PriorSpectrum,
    data: &Dataset,
) -> Result<GaussianPosterior> {
    let gram = build_gram(op.as_ref(), prior, data)?;
    exact_posterior_from_gram(op, prior, data, &gram)
}

/// The exact posterior from a prebuilt [`GramSet`].
///
/// Mean coefficients are `a_j = λ_j κ_j (φ_jᵀ w)` with
/// `w = (K_ff + σ²I)^{-1} y`; the covariance correction is carried by the
/// cross map `Φ diag(λ_j κ_j)` and the cached Cholesky factor.
pub fn exact_posterior_from_gram(
    op: &Arc<dyn ForwardOperator>,
    prior: &PriorSpectrum,
    data: &Dataset,
    gram: &GramSet,
) -> Result<GaussianPosterior> {
    if gram.n() != data.len() {
        return Err(Error::Parameter(format!(
            "gram built for n = {}, data has n = {}",
            gram.n(),
            data.len()
        )));
    }
    let w = gram.chol.solve(data.y());
    let proj = gram.phi.tr_mul(&w);
    let mean: Vec<f64> = proj
        .iter()
        .enumerate()
        .map(|(j, v)| prior.lambda(j + 1) * op.kappa(j + 1) * v)
        .collect();
    let reduce_map = gram.phi_cross(op.as_ref(), prior);
    let variance_mass = exact_variance_mass(&gram.chol, &reduce_map, prior, gram.sigma2);
    Ok(GaussianPosterior::from_parts(
        PosteriorKind::Exact,
        Arc::clone(op),
        prior.clone(),
        SeriesFunction::new(mean, op.e_tag()),
        reduce_map,
        CovWeight::Solve(gram.chol.clone()),
        variance_mass,
    ))
}

/// `∫ C(t,t) dμ = Σ_j λ_j − Σ_j (λ_j κ_j)² φ_jᵀ (K+σ²I)^{-1} φ_j`.
///
/// The correction trace decays like `(λ_j κ_j)²`, so columns whose bound
/// `(λ_j κ_j)² ‖φ_j‖² / σ²` contributes below `1e-13` of the prior mass
/// are skipped; the omission only widens the reported variance.
fn exact_variance_mass(
    chol: &Cholesky<f64, Dyn>,
    reduce_map: &DMatrix<f64>,
    prior: &PriorSpectrum,
    sigma2: f64,
) -> f64 {
    let j_max = prior.truncation();
    let prior_mass: f64 = (1..=j_max).map(|j| prior.lambda(j)).sum();
    let bounds: Vec<f64> = (0..j_max)
        .map(|j| reduce_map.column(j).norm_squared() / sigma2)
        .collect();
    let mut suffix = vec![0.0; j_max + 1];
    for j in (0..j_max).rev() {
        suffix[j] = suffix[j + 1] + bounds[j];
    }
    let target = 1e-13 * prior_mass;
    let j_var = suffix.iter().position(|s| *s <= target).unwrap_or(j_max);
    if j_var == 0 {
        return prior_mass;
    }
    let cols = reduce_map.columns(0, j_var).into_owned();
    let solved = chol.solve(&cols);
    let trace: f64 = cols.iter().zip(solved.iter()).map(|(a, b)| a * b).sum();
    prior_mass - trace
}

/// `log p(y | X) = -½ log|2π(σ²I+K_ff)| - ½ yᵀ(σ²I+K_ff)^{-1} y`.
pub fn log_marginal_likelihood(data: &Dataset, gram: &GramSet) -> Result<f64> {
    if gram.n() != data.len() {
        return Err(Error::Parameter(format!(
            "gram built for n = {}, data has n = {}",
            gram.n(),
            data.len()
        )));
    }
    let n = data.len() as f64;
    let quad = data.y().dot(&gram.chol.solve(data.y()));
    Ok(-0.5 * (n * (2.0 * std::f64::consts::PI).ln() + gram.logdet() + quad))
}
