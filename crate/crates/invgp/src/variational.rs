//! Inducing-variable schemes, optimal variational parameters, the
//! variational predictive posterior and the closed-form KL/ELBO.
//!
//! Two spectral constructions are provided. The population scheme takes
//! `u_j = ∫ Af(x) g_j(x) dG(x)`, which under the SVD alignment gives the
//! diagonal `K_uu = diag(λ_j κ_j²)` and `K_uf[j][i] = λ_j κ_j² g_j(x_i)`
//! in closed form, an `O(n m²)`-compatible structure. The empirical scheme
//! takes `u_j = Σ_i v_j^i Af(x_i)` with `v_j` the eigenvectors of `K_ff`,
//! giving `K_uu = diag(ρ_j)` and the optimal rank-`m` approximation
//! `Q_ff = Σ_{j≤m} ρ_j v_j v_jᵀ`.
//!
//! Internally everything is carried in whitened coordinates
//! `B_u = K_uu^{-1/2} K_uf`, whose rows stay bounded however fast the
//! spectrum decays; the fitted inner matrix `I + σ^{-2} B_u B_uᵀ` is then
//! well conditioned even for severely ill-posed operators.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exact::{cholesky_with_jitter, Dataset, GramSet};
use crate::posterior::{check_sigma2, CovWeight, GaussianPosterior, PosteriorKind};
use crate::spectral::{basis_matrix, tol, BasisSide, ForwardOperator, Point, PriorSpectrum};

/// The two spectral inducing-variable constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    PopulationSpectral,
    EmpiricalSpectral,
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SchemeKind::PopulationSpectral => write!(f, "population"),
            SchemeKind::EmpiricalSpectral => write!(f, "empirical"),
        }
    }
}

/// An inducing-variable scheme with its cross-covariance matrices.
///
/// Modes whose prior variance is numerically zero (relative to the
/// leading one) are dropped from the active set; they carry no
/// information and would otherwise poison the whitened solves.
pub struct InducingScheme {
    kind: SchemeKind,
    op: Arc<dyn ForwardOperator>,
    prior: PriorSpectrum,
    m: usize,
    k_uu_diag: DVector<f64>,
    k_uf: DMatrix<f64>,
    /// `K_uu^{-1/2} K_uf`, active rows only.
    b_u: DMatrix<f64>,
    /// `K_uu^{-1/2} ×` (cross map to the `e`-basis): `K_tu(t) =
    /// K_uu^{1/2} · cross_scaled · E(t)`.
    cross_scaled: DMatrix<f64>,
    dropped: usize,
}

impl InducingScheme {
    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    /// Requested number of inducing variables.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of numerically active inducing directions.
    pub fn active_m(&self) -> usize {
        self.k_uu_diag.len()
    }

    /// Modes dropped as numerically degenerate.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// Diagonal of `K_uu` (active modes).
    pub fn k_uu_diag(&self) -> &DVector<f64> {
        &self.k_uu_diag
    }

    pub fn k_uu(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.k_uu_diag)
    }

    pub fn k_uf(&self) -> &DMatrix<f64> {
        &self.k_uf
    }

    pub fn n(&self) -> usize {
        self.k_uf.ncols()
    }

    pub fn operator(&self) -> &Arc<dyn ForwardOperator> {
        &self.op
    }

    pub fn prior(&self) -> &PriorSpectrum {
        &self.prior
    }

    /// `Cov(f(t), u)` as an active-m vector.
    pub fn k_tu(&self, t: Point) -> Result<DVector<f64>> {
        let e = basis_matrix(
            self.op.as_ref(),
            BasisSide::E,
            &[t],
            self.prior.truncation(),
        )?;
        let scaled = &self.cross_scaled * e.transpose();
        Ok(DVector::from_fn(self.active_m(), |a, _| {
            self.k_uu_diag[a].sqrt() * scaled[(a, 0)]
        }))
    }

    /// The Nyström-type approximation `Q_ff = K_ufᵀ K_uu^{-1} K_uf`.
    pub fn q_ff(&self) -> DMatrix<f64> {
        self.b_u.tr_mul(&self.b_u)
    }

    pub(crate) fn b_u(&self) -> &DMatrix<f64> {
        &self.b_u
    }

    pub(crate) fn cross_scaled(&self) -> &DMatrix<f64> {
        &self.cross_scaled
    }
}

/// Population spectral features: closed-form diagonal scheme, no
/// quadrature needed under the SVD alignment.
pub fn population_scheme(
    op: &Arc<dyn ForwardOperator>,
    prior: &PriorSpectrum,
    data: &Dataset,
    m: usize,
) -> Result<InducingScheme> {
    let j_max = prior.truncation();
    if m < 1 || m > j_max {
        return Err(Error::Parameter(format!(
            "population scheme needs 1 <= m <= J = {j_max}, got m = {m}"
        )));
    }
    let weights: Vec<f64> = (1..=m)
        .map(|j| prior.lambda(j) * op.kappa(j).powi(2))
        .collect();
    let active: Vec<usize> = (0..m).filter(|&a| weights[a] > 0.0).collect();
    let dropped = m - active.len();
    let g = basis_matrix(op.as_ref(), BasisSide::G, data.x(), m)?;
    let n = data.len();
    let mut k_uf = DMatrix::zeros(active.len(), n);
    let mut b_u = DMatrix::zeros(active.len(), n);
    let mut cross_scaled = DMatrix::zeros(active.len(), j_max);
    let mut k_uu_diag = DVector::zeros(active.len());
    for (row, &a) in active.iter().enumerate() {
        let w = weights[a];
        k_uu_diag[row] = w;
        for i in 0..n {
            k_uf[(row, i)] = w * g[(i, a)];
            b_u[(row, i)] = w.sqrt() * g[(i, a)];
        }
        cross_scaled[(row, a)] = prior.lambda(a + 1).sqrt();
    }
    Ok(InducingScheme {
        kind: SchemeKind::PopulationSpectral,
        op: Arc::clone(op),
        prior: prior.clone(),
        m,
        k_uu_diag,
        k_uf,
        b_u,
        cross_scaled,
        dropped,
    })
}

/// Empirical spectral features from the eigendecomposition of `K_ff`.
///
/// Eigenvalues are sorted descending with ties broken by original index;
/// negative values within `-1e-10·trace` are clamped to zero, anything
/// further negative is a solver failure.
pub fn empirical_scheme(
    op: &Arc<dyn ForwardOperator>,
    prior: &PriorSpectrum,
    gram: &GramSet,
    m: usize,
) -> Result<InducingScheme> {
    let n = gram.n();
    if m < 1 || m > n {
        return Err(Error::Parameter(format!(
            "empirical scheme needs 1 <= m <= n = {n}, got m = {m}"
        )));
    }
    let eig = gram.k_ff().clone().symmetric_eigen();
    let trace = gram.k_ff().trace();
    let clamp = tol::EIG_CLAMP_REL * trace.max(f64::MIN_POSITIVE);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut rho = Vec::with_capacity(m);
    for &idx in order.iter().take(m) {
        let v = eig.eigenvalues[idx];
        if v < -clamp {
            return Err(Error::Numerical(format!(
                "eigensolver returned eigenvalue {v:.3e} below -{clamp:.3e}"
            )));
        }
        rho.push((idx, v.max(0.0)));
    }
    let rho_max = rho.first().map(|r| r.1).unwrap_or(0.0);
    let keep: Vec<(usize, f64)> = rho
        .iter()
        .copied()
        .filter(|&(_, r)| r > tol::EIGENVALUE_DROP_REL * rho_max && r > 0.0)
        .collect();
    let dropped = m - keep.len();
    let j_max = prior.truncation();
    let phi_v = gram.phi_cross(op.as_ref(), prior);
    let mut k_uf = DMatrix::zeros(keep.len(), n);
    let mut b_u = DMatrix::zeros(keep.len(), n);
    let mut cross_scaled = DMatrix::zeros(keep.len(), j_max);
    let mut k_uu_diag = DVector::zeros(keep.len());
    for (row, &(idx, r)) in keep.iter().enumerate() {
        let v = eig.eigenvectors.column(idx);
        k_uu_diag[row] = r;
        let sqrt_r = r.sqrt();
        for i in 0..n {
            k_uf[(row, i)] = r * v[i];
            b_u[(row, i)] = sqrt_r * v[i];
        }
        let w = v.transpose() * &phi_v;
        for j in 0..j_max {
            cross_scaled[(row, j)] = w[(0, j)] / sqrt_r;
        }
    }
    Ok(InducingScheme {
        kind: SchemeKind::EmpiricalSpectral,
        op: Arc::clone(op),
        prior: prior.clone(),
        m,
        k_uu_diag,
        k_uf,
        b_u,
        cross_scaled,
        dropped,
    })
}

/// Optimal variational parameters of the inducing distribution.
#[derive(Debug, Clone)]
pub struct VariationalParams {
    mu_u: DVector<f64>,
    sigma_u: DMatrix<f64>,
    /// `K_uu^{-1/2} μ*_u`, kept for stable downstream use.
    scaled_mean: DVector<f64>,
    /// `(I + σ^{-2} B Bᵀ)^{-1} = K_uu^{-1/2} Σ*_u K_uu^{-1/2}`.
    inner_inv: DMatrix<f64>,
}

impl VariationalParams {
    /// `μ*_u = σ^{-2} K_uu (K_uu + σ^{-2} K_uf K_ufᵀ)^{-1} K_uf y`.
    pub fn mu_u(&self) -> &DVector<f64> {
        &self.mu_u
    }

    /// `Σ*_u = K_uu (K_uu + σ^{-2} K_uf K_ufᵀ)^{-1} K_uu`.
    pub fn sigma_u(&self) -> &DMatrix<f64> {
        &self.sigma_u
    }

    pub(crate) fn scaled_mean(&self) -> &DVector<f64> {
        &self.scaled_mean
    }

    pub(crate) fn inner_inv(&self) -> &DMatrix<f64> {
        &self.inner_inv
    }
}

/// Fits the optimal variational parameters with one symmetric
/// factorization of the whitened `m×m` inner matrix.
pub fn fit_variational(scheme: &InducingScheme, data: &Dataset) -> Result<VariationalParams> {
    check_sigma2(data.sigma2())?;
    if scheme.n() != data.len() {
        return Err(Error::Parameter(format!(
            "scheme built for n = {}, data has n = {}",
            scheme.n(),
            data.len()
        )));
    }
    let m = scheme.active_m();
    let sigma2 = data.sigma2();
    let mut inner = scheme.b_u() * scheme.b_u().transpose();
    inner /= sigma2;
    for a in 0..m {
        inner[(a, a)] += 1.0;
    }
    let (chol, _) = cholesky_with_jitter(&inner, "fit_variational")?;
    let by = scheme.b_u() * data.y();
    let scaled_mean = chol.solve(&by) / sigma2;
    let inner_inv = chol.inverse();
    let mut mu_u = DVector::zeros(m);
    let mut sigma_u = DMatrix::zeros(m, m);
    for a in 0..m {
        let sa = scheme.k_uu_diag()[a].sqrt();
        mu_u[a] = sa * scaled_mean[a];
        for b in 0..m {
            sigma_u[(a, b)] = sa * scheme.k_uu_diag()[b].sqrt() * inner_inv[(a, b)];
        }
    }
    Ok(VariationalParams {
        mu_u,
        sigma_u,
        scaled_mean,
        inner_inv,
    })
}

/// The variational predictive posterior
/// `mean(t) = K_tu K_uu^{-1} μ*_u`,
/// `cov(t,s) = k(t,s) - K_tu K_uu^{-1}(K_uu - Σ*_u)K_uu^{-1} K_su`.
pub fn variational_posterior(
    scheme: &InducingScheme,
    params: &VariationalParams,
    prior: &PriorSpectrum,
    op: &Arc<dyn ForwardOperator>,
) -> Result<GaussianPosterior> {
    if prior != scheme.prior() {
        return Err(Error::Parameter(
            "prior differs from the one the scheme was built with".into(),
        ));
    }
    if op.name() != scheme.operator().name() {
        return Err(Error::Parameter(format!(
            "operator {} differs from the scheme's {}",
            op.name(),
            scheme.operator().name()
        )));
    }
    let m = scheme.active_m();
    if params.scaled_mean().len() != m {
        return Err(Error::Parameter(format!(
            "params fitted for {} active modes, scheme has {m}",
            params.scaled_mean().len()
        )));
    }
    let mean = scheme.cross_scaled().tr_mul(params.scaled_mean());
    // correction weight in whitened coordinates: I - (I + σ^{-2}BBᵀ)^{-1}
    let mut weight = params.inner_inv().clone();
    weight.neg_mut();
    for a in 0..m {
        weight[(a, a)] += 1.0;
    }
    // enforce symmetry against accumulated roundoff
    let weight = 0.5 * (&weight + weight.transpose());
    let cross = scheme.cross_scaled().clone();
    let gram_m = &cross * cross.transpose();
    let prior_mass: f64 = (1..=prior.truncation()).map(|j| prior.lambda(j)).sum();
    let variance_mass = prior_mass - (&weight * &gram_m).trace();
    Ok(GaussianPosterior::from_parts(
        PosteriorKind::Variational {
            scheme: scheme.kind(),
            m: scheme.m(),
        },
        Arc::clone(op),
        prior.clone(),
        crate::spectral::SeriesFunction::new(mean.iter().copied().collect(), op.e_tag()),
        cross,
        CovWeight::Dense(weight),
        variance_mass,
    ))
}

/// `KL(Ψ* ‖ Π[·|X,Y])` in closed form:
/// `½[yᵀ((σ²I+Q)^{-1} − (σ²I+K)^{-1})y + log(|σ²I+Q|/|σ²I+K|)
///   + σ^{-2}Tr(K − Q)]`.
pub fn kl_to_posterior(scheme: &InducingScheme, data: &Dataset, gram: &GramSet) -> Result<f64> {
    let (logdet_q, quad_q) = q_side(scheme, data, gram)?;
    let quad_k = data.y().dot(&gram.chol().solve(data.y()));
    let trace_gap = gram.k_ff().trace() - scheme.q_ff().trace();
    Ok(0.5 * (quad_q - quad_k + logdet_q - gram.logdet() + trace_gap / data.sigma2()))
}

/// The evidence lower bound
/// `L = -½ log|2π(σ²I+Q)| - ½ yᵀ(σ²I+Q)^{-1}y - (2σ²)^{-1} Tr(K - Q)`,
/// satisfying `L = log marginal likelihood - KL`.
pub fn elbo(scheme: &InducingScheme, data: &Dataset, gram: &GramSet) -> Result<f64> {
    let (logdet_q, quad_q) = q_side(scheme, data, gram)?;
    let n = data.len() as f64;
    let trace_gap = gram.k_ff().trace() - scheme.q_ff().trace();
    Ok(
        -0.5 * (n * (2.0 * std::f64::consts::PI).ln() + logdet_q + quad_q)
            - trace_gap / (2.0 * data.sigma2()),
    )
}

fn q_side(scheme: &InducingScheme, data: &Dataset, gram: &GramSet) -> Result<(f64, f64)> {
    check_sigma2(data.sigma2())?;
    if scheme.n() != data.len() || gram.n() != data.len() {
        return Err(Error::Parameter(
            "scheme, gram and data disagree on n".into(),
        ));
    }
    let mut a_q = scheme.q_ff();
    for i in 0..a_q.nrows() {
        a_q[(i, i)] += data.sigma2();
    }
    let (chol_q, _) = cholesky_with_jitter(&a_q, "kl/elbo Q side")?;
    let logdet_q = 2.0
        * chol_q
            .l_dirty()
            .diagonal()
            .iter()
            .map(|d| d.ln())
            .sum::<f64>();
    let quad_q = data.y().dot(&chol_q.solve(data.y()));
    Ok((logdet_q, quad_q))
}

/// The two gap quantities of the approximation condition:
/// `Tr(K_ff − Q_ff)` and the spectral norm `‖K_ff − Q_ff‖`.
pub fn trace_and_norm_gap(scheme: &InducingScheme, gram: &GramSet) -> Result<(f64, f64)> {
    if scheme.n() != gram.n() {
        return Err(Error::Parameter("scheme and gram disagree on n".into()));
    }
    let diff = gram.k_ff() - scheme.q_ff();
    let trace = diff.trace();
    let spec = diff
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()));
    Ok((trace, spec))
}
