//! Brute-force coefficient-space references for the acceptance suite:
//! the prior is `N(0, Λ)` on the `e`-coefficients, data enter through
//! `(Φ_κ)_{ij} = κ_j g_j(x_i)`, and both posteriors are built as explicit
//! `J`-dimensional Gaussians with dense inverses — no shared code with
//! the library's solve paths.

use invgp::exact::Dataset;
use invgp::spectral::{ForwardOperator, PriorSpectrum};
use invgp::variational::SchemeKind;
use nalgebra::{DMatrix, DVector};

pub struct CoeffGaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

pub fn phi_kappa(op: &dyn ForwardOperator, prior: &PriorSpectrum, data: &Dataset) -> DMatrix<f64> {
    DMatrix::from_fn(data.len(), prior.truncation(), |i, j| {
        op.kappa(j + 1) * op.g_basis(j + 1, data.x()[i])
    })
}

fn lambda_matrix(prior: &PriorSpectrum) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_vec(prior.lambdas()))
}

pub fn exact_coeff_posterior(
    op: &dyn ForwardOperator,
    prior: &PriorSpectrum,
    data: &Dataset,
) -> CoeffGaussian {
    let j_max = prior.truncation();
    let phi_k = phi_kappa(op, prior, data);
    let mut precision = phi_k.tr_mul(&phi_k) / data.sigma2();
    for j in 0..j_max {
        precision[(j, j)] += 1.0 / prior.lambda(j + 1);
    }
    let cov = precision.try_inverse().expect("invertible precision");
    let mean = &cov * phi_k.tr_mul(data.y()) / data.sigma2();
    CoeffGaussian { mean, cov }
}

pub fn inducing_map(
    op: &dyn ForwardOperator,
    prior: &PriorSpectrum,
    data: &Dataset,
    kind: SchemeKind,
    m: usize,
) -> DMatrix<f64> {
    let j_max = prior.truncation();
    match kind {
        SchemeKind::PopulationSpectral => {
            DMatrix::from_fn(m, j_max, |a, j| if a == j { op.kappa(j + 1) } else { 0.0 })
        }
        SchemeKind::EmpiricalSpectral => {
            let phi_k = phi_kappa(op, prior, data);
            let k_ff = &phi_k * lambda_matrix(prior) * phi_k.transpose();
            let eig = k_ff.symmetric_eigen();
            let n = data.len();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
            let mut v = DMatrix::zeros(m, n);
            for (row, &idx) in order.iter().take(m).enumerate() {
                v.set_row(row, &eig.eigenvectors.column(idx).transpose());
            }
            v * phi_k
        }
    }
}

pub fn variational_coeff_posterior(
    op: &dyn ForwardOperator,
    prior: &PriorSpectrum,
    data: &Dataset,
    kind: SchemeKind,
    m: usize,
) -> CoeffGaussian {
    let lam = lambda_matrix(prior);
    let phi_k = phi_kappa(op, prior, data);
    let s = inducing_map(op, prior, data, kind, m);
    let sigma2 = data.sigma2();
    let k_uu = &s * &lam * s.transpose();
    let k_uf = &s * &lam * phi_k.transpose();
    let inner = (&k_uu + &k_uf * k_uf.transpose() / sigma2)
        .try_inverse()
        .expect("invertible inner matrix");
    let mu_star = &k_uu * &inner * &k_uf * data.y() / sigma2;
    let sigma_star = &k_uu * &inner * &k_uu;
    let k_uu_inv = k_uu.try_inverse().expect("invertible K_uu");
    let cross = &lam * s.transpose() * &k_uu_inv;
    let mean = &cross * &mu_star;
    let cov = &lam - &cross * &s * &lam + &cross * &sigma_star * cross.transpose();
    CoeffGaussian { mean, cov }
}

pub fn gaussian_kl(a: &CoeffGaussian, b: &CoeffGaussian) -> f64 {
    let j = a.mean.len() as f64;
    let b_inv = b.cov.clone().try_inverse().expect("invertible covariance");
    let trace = (&b_inv * &a.cov).trace();
    let diff = &b.mean - &a.mean;
    let quad = diff.dot(&(&b_inv * &diff));
    let logdet = |m: &DMatrix<f64>| -> f64 {
        m.clone()
            .cholesky()
            .expect("PD covariance")
            .l_dirty()
            .diagonal()
            .iter()
            .map(|d| 2.0 * d.ln())
            .sum()
    };
    0.5 * (trace + quad - j + logdet(&b.cov) - logdet(&a.cov))
}

/// Monte-Carlo MISE from an explicit coefficient Gaussian: mean of
/// `‖a - f_0‖²` over `draws` samples, with its standard error.
pub fn mc_mise(gaussian: &CoeffGaussian, f0: &[f64], draws: usize, seed: u64) -> (f64, f64) {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let j_max = gaussian.mean.len();
    let chol = gaussian.cov.clone().cholesky().expect("PD covariance").l();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        let z = DVector::from_fn(j_max, |_, _| StandardNormal.sample(&mut rng));
        let a = &gaussian.mean + &chol * z;
        let err: f64 = (0..j_max).map(|j| (a[j] - f0[j]).powi(2)).sum();
        sum += err;
        sum_sq += err * err;
    }
    let mean = sum / draws as f64;
    let var = (sum_sq / draws as f64 - mean * mean).max(0.0);
    (mean, (var / draws as f64).sqrt())
}
