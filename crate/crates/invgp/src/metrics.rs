//! Evaluation functionals: MISE, pointwise credible bands, recommended
//! inducing-variable counts and empirical contraction-rate slopes.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::posterior::GaussianPosterior;
use crate::spectral::{
    ForwardOperator, IllPosedness, Point, PriorSpectrum, SobolevTruth, SpectralFamily,
};

/// Decomposition of the mean integrated squared error
/// `∫ ‖f - f_0‖²_{L2(T;μ)} dΠ[f|X,Y] = ‖mean - f_0‖² + ∫ C(t,t) dμ`.
#[derive(Debug, Clone, Copy)]
pub struct MiseReport {
    pub mise: f64,
    /// `‖posterior mean − f_0‖²` via Parseval on the shared basis.
    pub sq_bias: f64,
    /// Integrated posterior variance, computed in closed form.
    pub variance_mass: f64,
    /// Bound on the prior mass neglected by the truncation.
    pub truncation_tail: f64,
}

/// Closed-form MISE of a Gaussian posterior against a Sobolev truth.
/// Posterior and truth must share the `e`-basis and truncation.
pub fn mise(post: &GaussianPosterior, truth: &SobolevTruth) -> Result<MiseReport> {
    let mean = post.mean_coeffs();
    if truth.series().basis() != mean.basis() {
        return Err(Error::BasisMismatch {
            expected: mean.basis().clone(),
            found: truth.series().basis().clone(),
        });
    }
    if truth.series().truncation() != mean.truncation() {
        return Err(Error::Parameter(format!(
            "truth truncated at {}, posterior at {}",
            truth.series().truncation(),
            mean.truncation()
        )));
    }
    let sq_bias: f64 = mean
        .coeffs()
        .iter()
        .zip(truth.series().coeffs())
        .map(|(a, f)| (a - f) * (a - f))
        .sum();
    let variance_mass = post.variance_mass();
    Ok(MiseReport {
        mise: sq_bias + variance_mass,
        sq_bias,
        variance_mass,
        truncation_tail: post.prior().tail_mass(),
    })
}

/// Pointwise credible band on a grid.
#[derive(Debug, Clone)]
pub struct CredibleBand {
    pub grid: Vec<Point>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl CredibleBand {
    /// Fraction of grid points at which `values` lies inside the band.
    pub fn coverage_of(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.grid.len());
        let hits = values
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .filter(|(v, (lo, up))| **v >= **lo && **v <= **up)
            .count();
        hits as f64 / values.len() as f64
    }

    pub fn mean_width(&self) -> f64 {
        self.upper
            .iter()
            .zip(&self.lower)
            .map(|(u, l)| u - l)
            .sum::<f64>()
            / self.grid.len() as f64
    }
}

/// `mean(t) ± z_{(1+level)/2} √cov(t,t)` on the grid, with the exact
/// normal quantile.
pub fn credible_band(post: &GaussianPosterior, grid: &[Point], level: f64) -> Result<CredibleBand> {
    if !(0.0 < level && level < 1.0) {
        return Err(Error::Parameter(format!(
            "level must lie in (0,1), got {level}"
        )));
    }
    if grid.is_empty() {
        return Err(Error::Parameter("empty grid".into()));
    }
    let z = normal_quantile(0.5 * (1.0 + level));
    let vars = post.var_at(grid)?;
    let scale = post.prior().lambdas().iter().sum::<f64>().max(1e-300);
    let mut mean = Vec::with_capacity(grid.len());
    let mut lower = Vec::with_capacity(grid.len());
    let mut upper = Vec::with_capacity(grid.len());
    for (&t, &v) in grid.iter().zip(&vars) {
        if v < -1e-8 * scale {
            return Err(Error::Numerical(format!(
                "negative posterior variance {v:.3e} at ({}, {})",
                t.0, t.1
            )));
        }
        let sd = v.max(0.0).sqrt();
        let m = post.mean_at(t)?;
        mean.push(m);
        lower.push(m - z * sd);
        upper.push(m + z * sd);
    }
    Ok(CredibleBand {
        grid: grid.to_vec(),
        mean,
        lower,
        upper,
    })
}

/// Standard normal quantile (inverse CDF).
pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

/// Number of inducing variables sufficient for rate-optimal contraction:
/// `⌈n^{1/(1+2p+2α)}⌉` in the mildly ill-posed case and
/// `⌈((ξ+2c)^{-1} log n)^{1/p}⌉` in the severely ill-posed case, with
/// `p, c` from the operator and `α, ξ` from the prior. For a polynomial
/// prior on a severe operator `ξ = 0`.
pub fn recommended_m(op: &dyn ForwardOperator, prior: &PriorSpectrum, n: usize) -> usize {
    debug_assert!(n >= 2);
    let nf = (n as f64).max(2.0);
    let m = match op.illposedness() {
        IllPosedness::Mild { p } => {
            let alpha = match *prior.family() {
                SpectralFamily::Polynomial { alpha } => alpha,
                SpectralFamily::Exponential { alpha, .. } => alpha,
            };
            nf.powf(1.0 / (1.0 + 2.0 * p + 2.0 * alpha))
        }
        IllPosedness::Severe { c, p } => {
            let xi = match *prior.family() {
                SpectralFamily::Polynomial { .. } => 0.0,
                SpectralFamily::Exponential { xi, .. } => xi,
            };
            (nf.ln() / (xi + 2.0 * c)).powf(1.0 / p)
        }
    };
    (m.ceil() as usize).max(1)
}

/// Fitted log–log (or log–loglog) MISE slope against the theoretical
/// contraction exponent.
#[derive(Debug, Clone)]
pub struct RateEstimate {
    /// Ordinary least-squares slope.
    pub slope: f64,
    /// `-2(α∧β)/(1+2α+2p)` in the mild case, `-2β/p` in the severe case.
    pub theory_exponent: f64,
    pub n_grid: Vec<usize>,
    /// Coefficient of determination of the fit.
    pub r2: f64,
}

/// Least-squares slope of `log MISE` against `log n` (mild) or
/// `log log n` (severe).
pub fn rate_slope(
    mise_by_n: &[(usize, f64)],
    op: &dyn ForwardOperator,
    prior: &PriorSpectrum,
    truth: &SobolevTruth,
) -> Result<RateEstimate> {
    if mise_by_n.len() < 4 {
        return Err(Error::Parameter(format!(
            "need at least 4 sample sizes, got {}",
            mise_by_n.len()
        )));
    }
    if !mise_by_n.windows(2).all(|w| w[0].0 < w[1].0) {
        return Err(Error::Parameter(
            "sample sizes must be strictly increasing".into(),
        ));
    }
    if let Some((n, m)) = mise_by_n.iter().find(|(_, m)| m.is_nan() || *m <= 0.0) {
        return Err(Error::Data(format!("non-positive MISE {m} at n = {n}")));
    }
    let beta = truth.beta();
    let (xs, theory_exponent): (Vec<f64>, f64) = match op.illposedness() {
        IllPosedness::Mild { p } => {
            let alpha = match *prior.family() {
                SpectralFamily::Polynomial { alpha } => alpha,
                SpectralFamily::Exponential { alpha, .. } => alpha,
            };
            (
                mise_by_n.iter().map(|(n, _)| (*n as f64).ln()).collect(),
                -2.0 * alpha.min(beta) / (1.0 + 2.0 * alpha + 2.0 * p),
            )
        }
        IllPosedness::Severe { p, .. } => (
            mise_by_n
                .iter()
                .map(|(n, _)| (*n as f64).ln().ln())
                .collect(),
            -2.0 * beta / p,
        ),
    };
    let ys: Vec<f64> = mise_by_n.iter().map(|(_, m)| m.ln()).collect();
    let (slope, r2) = ols_slope(&xs, &ys);
    Ok(RateEstimate {
        slope,
        theory_exponent,
        n_grid: mise_by_n.iter().map(|(n, _)| *n).collect(),
        r2,
    })
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 {
        (sxy * sxy) / (sxx * syy)
    } else {
        1.0
    };
    (slope, r2)
}
