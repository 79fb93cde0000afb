//! Truncated spectral representations of functions, priors and operators.
//!
//! Everything downstream works in the singular system of the forward
//! operator: `A e_j = κ_j g_j` with `(e_j)` orthonormal in `L2(T; μ)` and
//! `(g_j)` orthonormal in `L2(X; G)`. A function is a coefficient vector
//! against one of the two bases, truncated at a level `J`; by Parseval its
//! `L2` norm is the Euclidean norm of the coefficients.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quadrature::QuadRule;

/// Module-level numerical tolerances.
pub mod tol {
    /// Relative tolerance for Parseval/orthonormality quadrature checks.
    pub const QUADRATURE_REL: f64 = 1e-6;
    /// Base jitter added to Gram diagonals, relative to the mean diagonal.
    pub const JITTER_REL: f64 = 1e-10;
    /// Relative threshold below which empirical eigenvalues are treated as
    /// numerically zero and dropped from an inducing set.
    pub const EIGENVALUE_DROP_REL: f64 = 1e-12;
    /// Negative eigenvalues beyond `-EIG_CLAMP_REL * trace` raise an error;
    /// smaller excursions are clamped to zero.
    pub const EIG_CLAMP_REL: f64 = 1e-10;
}

/// A point in a one- or two-dimensional domain.
///
/// The coordinate convention depends on the [`Domain`]: on the unit
/// interval only the first coordinate is used, on the unit disc the pair is
/// `(r, θ)` in polar form, and on the sinogram cylinder it is `(s, φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point(pub f64, pub f64);

impl Point {
    /// Point on the unit interval.
    pub fn x(v: f64) -> Self {
        Point(v, 0.0)
    }

    /// Polar point `(r, θ)` on the unit disc.
    pub fn polar(r: f64, theta: f64) -> Self {
        Point(r, theta)
    }

    /// Sinogram point `(s, φ)`: offset of the line and angle of its normal.
    pub fn ray(s: f64, phi: f64) -> Self {
        Point(s, phi)
    }
}

/// Descriptor of a parameter or design domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// `[0, 1]`.
    UnitInterval,
    /// `{r ≤ 1}` in polar coordinates `(r, θ)`.
    UnitDisc,
    /// `[0, 1] × [0, 2π)` in `(s, φ)`, the Radon design domain.
    Cylinder,
}

impl Domain {
    pub fn contains(&self, p: Point) -> bool {
        match self {
            Domain::UnitInterval => (0.0..=1.0).contains(&p.0),
            Domain::UnitDisc => (0.0..=1.0).contains(&p.0) && p.1.is_finite(),
            Domain::Cylinder => (0.0..=1.0).contains(&p.0) && p.1.is_finite(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Domain::UnitInterval => "unit interval",
            Domain::UnitDisc => "unit disc",
            Domain::Cylinder => "cylinder [0,1]x[0,2pi)",
        }
    }
}

/// Which of the two singular bases a series is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisSide {
    /// `e_j`, orthonormal on the parameter domain `T`.
    E,
    /// `g_j`, orthonormal on the design domain `X`.
    G,
}

/// Identifier of an orthonormal basis: operator family plus side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisTag {
    pub op: &'static str,
    pub side: BasisSide,
}

impl std::fmt::Display for BasisTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let side = match self.side {
            BasisSide::E => "e",
            BasisSide::G => "g",
        };
        write!(f, "{}.{}", self.op, side)
    }
}

/// Degree of ill-posedness of a forward operator (how fast `κ_j` decays).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IllPosedness {
    /// `κ_j ≍ j^{-p}`.
    Mild { p: f64 },
    /// `κ_j ≍ e^{-c j^p}`.
    Severe { c: f64, p: f64 },
}

/// A forward operator given through its singular system.
///
/// Implementors supply the singular values `κ_j` (positive, nonincreasing),
/// closed-form evaluations of both singular bases, the degree of
/// ill-posedness, and the design distribution `G` (a sampler plus a
/// quadrature rule; `μ` on the parameter side gets a rule as well).
/// Indices `j` are 1-based throughout.
pub trait ForwardOperator: Send + Sync {
    /// Short family name; also keys the basis tags.
    fn name(&self) -> &'static str;

    /// Singular value `κ_j`, `j ≥ 1`.
    fn kappa(&self, j: usize) -> f64;

    /// `e_j(t)` on the parameter domain.
    fn e_basis(&self, j: usize, t: Point) -> f64;

    /// `g_j(x)` on the design domain.
    fn g_basis(&self, j: usize, x: Point) -> f64;

    fn illposedness(&self) -> IllPosedness;

    fn domain_t(&self) -> Domain;

    fn domain_x(&self) -> Domain;

    /// Exponent `γ` in the sup-norm growth `‖e_j‖_∞ ∨ ‖g_j‖_∞ ≲ j^γ`.
    /// Metadata only; not enforced numerically.
    fn basis_sup_growth(&self) -> f64;

    /// `n` i.i.d. draws from the design distribution `G`, deterministic in
    /// the seed regardless of thread count.
    fn sample_design(&self, n: usize, seed: u64) -> Vec<Point>;

    /// Quadrature rule for `∫ · dG` on the design domain, accurate for
    /// products of basis functions up to index `j_max`.
    fn design_quadrature(&self, j_max: usize) -> QuadRule;

    /// Quadrature rule for `∫ · dμ` on the parameter domain.
    fn param_quadrature(&self, j_max: usize) -> QuadRule;

    fn e_tag(&self) -> BasisTag {
        BasisTag {
            op: self.name(),
            side: BasisSide::E,
        }
    }

    fn g_tag(&self) -> BasisTag {
        BasisTag {
            op: self.name(),
            side: BasisSide::G,
        }
    }

    /// Evaluates one basis function, checking domain membership.
    fn basis_at(&self, side: BasisSide, j: usize, p: Point) -> Result<f64> {
        let domain = match side {
            BasisSide::E => self.domain_t(),
            BasisSide::G => self.domain_x(),
        };
        if !domain.contains(p) {
            return Err(Error::Domain {
                point: p,
                domain: domain.name(),
            });
        }
        Ok(match side {
            BasisSide::E => self.e_basis(j, p),
            BasisSide::G => self.g_basis(j, p),
        })
    }
}

/// Fills a `points.len() × j_max` matrix of basis evaluations `b_j(p_i)`.
pub fn basis_matrix(
    op: &dyn ForwardOperator,
    side: BasisSide,
    points: &[Point],
    j_max: usize,
) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(points.len(), j_max);
    for (i, &p) in points.iter().enumerate() {
        for j in 1..=j_max {
            m[(i, j - 1)] = op.basis_at(side, j, p)?;
        }
    }
    Ok(m)
}

/// A function represented by coefficients against one singular basis,
/// truncated at level `J = coeffs.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFunction {
    coeffs: Vec<f64>,
    basis: BasisTag,
}

impl SeriesFunction {
    pub fn new(coeffs: Vec<f64>, basis: BasisTag) -> Self {
        SeriesFunction { coeffs, basis }
    }

    /// Series of zeros at truncation `j_max`.
    pub fn zero(j_max: usize, basis: BasisTag) -> Self {
        SeriesFunction {
            coeffs: vec![0.0; j_max],
            basis,
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn basis(&self) -> &BasisTag {
        &self.basis
    }

    /// Truncation level `J`.
    pub fn truncation(&self) -> usize {
        self.coeffs.len()
    }

    /// `L2` norm; equals the Euclidean coefficient norm by orthonormality.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Sobolev norm `(Σ_j j^{2β} f_j²)^{1/2}` on the truncated range.
    pub fn sobolev_norm(&self, beta: f64) -> Result<f64> {
        if beta < 0.0 {
            return Err(Error::parameter(format!("beta must be >= 0, got {beta}")));
        }
        Ok(self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| ((i + 1) as f64).powf(2.0 * beta) * c * c)
            .sum::<f64>()
            .sqrt())
    }

    /// Evaluates `Σ_{j≤J} f_j b_j(t)` for this series' own basis.
    pub fn eval(&self, op: &dyn ForwardOperator, t: Point) -> Result<f64> {
        let expected = match self.basis.side {
            BasisSide::E => op.e_tag(),
            BasisSide::G => op.g_tag(),
        };
        if self.basis != expected {
            return Err(Error::BasisMismatch {
                expected,
                found: self.basis.clone(),
            });
        }
        let domain = match self.basis.side {
            BasisSide::E => op.domain_t(),
            BasisSide::G => op.domain_x(),
        };
        if !domain.contains(t) {
            return Err(Error::Domain {
                point: t,
                domain: domain.name(),
            });
        }
        let eval = |j: usize| match self.basis.side {
            BasisSide::E => op.e_basis(j, t),
            BasisSide::G => op.g_basis(j, t),
        };
        Ok(self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * eval(i + 1))
            .sum())
    }
}

/// Evaluates a truncated series in its declared basis at a point.
pub fn eval_series(f: &SeriesFunction, op: &dyn ForwardOperator, t: Point) -> Result<f64> {
    f.eval(op, t)
}

/// Truncated action of the operator: `(f_j) ↦ (κ_j f_j)`, mapping the
/// `e`-basis to the `g`-basis.
pub fn forward_map(f: &SeriesFunction, op: &dyn ForwardOperator) -> Result<SeriesFunction> {
    let expected = op.e_tag();
    if *f.basis() != expected {
        return Err(Error::BasisMismatch {
            expected,
            found: f.basis().clone(),
        });
    }
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| op.kappa(i + 1) * c)
        .collect();
    Ok(SeriesFunction::new(coeffs, op.g_tag()))
}

/// Eigenvalue decay family of a GP prior aligned with the operator SVD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralFamily {
    /// `λ_j = j^{-1-2α}`, `α > 0`.
    Polynomial { alpha: f64 },
    /// `λ_j = j^{-α} e^{-ξ j^p}`, `α ≥ 0`, `ξ > 0`, `p ≥ 1`.
    Exponential { alpha: f64, xi: f64, p: f64 },
}

impl SpectralFamily {
    pub fn lambda(&self, j: usize) -> f64 {
        let jf = j as f64;
        match *self {
            SpectralFamily::Polynomial { alpha } => jf.powf(-1.0 - 2.0 * alpha),
            SpectralFamily::Exponential { alpha, xi, p } => {
                jf.powf(-alpha) * (-xi * jf.powf(p)).exp()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SpectralFamily::Polynomial { alpha } if alpha > 0.0 => Ok(()),
            SpectralFamily::Polynomial { alpha } => Err(Error::parameter(format!(
                "polynomial family needs alpha > 0, got {alpha}"
            ))),
            SpectralFamily::Exponential { alpha, xi, p }
                if alpha >= 0.0 && xi > 0.0 && p >= 1.0 =>
            {
                Ok(())
            }
            SpectralFamily::Exponential { alpha, xi, p } => Err(Error::parameter(format!(
                "exponential family needs alpha >= 0, xi > 0, p >= 1; got ({alpha}, {xi}, {p})"
            ))),
        }
    }
}

/// Prior eigenvalues `λ_j` truncated at `J`, strictly decreasing and
/// positive for both families.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpectrum {
    family: SpectralFamily,
    truncation: usize,
}

impl PriorSpectrum {
    pub fn new(family: SpectralFamily, truncation: usize) -> Result<Self> {
        family.validate()?;
        if truncation == 0 {
            return Err(Error::parameter("truncation must be >= 1"));
        }
        Ok(PriorSpectrum { family, truncation })
    }

    /// Truncation chosen by the default policy for this operator/prior pair.
    pub fn with_default_truncation(
        family: SpectralFamily,
        op: &dyn ForwardOperator,
    ) -> Result<Self> {
        family.validate()?;
        let j = TruncationPolicy::default().choose(op, &family);
        PriorSpectrum::new(family, j)
    }

    pub fn family(&self) -> &SpectralFamily {
        &self.family
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn lambda(&self, j: usize) -> f64 {
        self.family.lambda(j)
    }

    /// All eigenvalues `λ_1, …, λ_J`.
    pub fn lambdas(&self) -> Vec<f64> {
        (1..=self.truncation).map(|j| self.lambda(j)).collect()
    }

    /// Upper bound on the neglected prior mass `Σ_{j>J} λ_j`.
    pub fn tail_mass(&self) -> f64 {
        series_tail(|j| self.lambda(j), self.truncation)
    }
}

/// Picks the series truncation level `J`.
///
/// The default targets a neglected prior-forward mass
/// `Σ_{j>J} λ_j κ_j² < rel_tol · Σ_{j≤J} λ_j κ_j²` with `rel_tol = 1e-12`,
/// capped at `j_max = 4096`. For severely ill-posed operators the resulting
/// `J` is tiny; for slowly decaying mild spectra the cap binds and the
/// achieved tail is reported through [`TruncationPolicy::choose_with_tail`].
#[derive(Debug, Clone, Copy)]
pub struct TruncationPolicy {
    pub rel_tol: f64,
    pub j_max: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            rel_tol: 1e-12,
            j_max: 4096,
        }
    }
}

impl TruncationPolicy {
    pub fn choose(&self, op: &dyn ForwardOperator, family: &SpectralFamily) -> usize {
        self.choose_with_tail(op, family).0
    }

    /// Returns `(J, relative tail bound achieved at J)`.
    pub fn choose_with_tail(
        &self,
        op: &dyn ForwardOperator,
        family: &SpectralFamily,
    ) -> (usize, f64) {
        let weight = |j: usize| {
            let k = op.kappa(j);
            family.lambda(j) * k * k
        };
        let cap = self.j_max;
        let mut head = weight(1);
        let mut j = 1;
        // Advance until the next term alone drops below the target, then
        // price the full tail once and walk it forward incrementally.
        while j < cap && weight(j + 1) >= self.rel_tol * head {
            j += 1;
            head += weight(j);
        }
        let mut tail = series_tail(weight, j);
        while j < cap && tail >= self.rel_tol * head {
            j += 1;
            let w = weight(j);
            head += w;
            tail = (tail - w).max(0.0);
        }
        (j, tail / head)
    }
}

/// Estimates `Σ_{j>start} w_j` for a positive, eventually decreasing
/// sequence by direct summation with a ratio/integral continuation bound.
pub(crate) fn series_tail(weight: impl Fn(usize) -> f64, start: usize) -> f64 {
    const CHUNK: usize = 4096;
    let mut total = 0.0;
    let mut j = start + 1;
    let mut prev = weight(start.max(1));
    loop {
        let mut block = 0.0;
        for _ in 0..CHUNK {
            block += weight(j);
            j += 1;
        }
        total += block;
        let cur = weight(j - 1);
        if cur == 0.0 {
            return total;
        }
        // Continuation: geometric bound if the ratio is safely below one,
        // otherwise a power-law integral estimate from the last chunk.
        let ratio = cur / prev.max(f64::MIN_POSITIVE);
        if block < 1e-6 * total || j > start + 40 * CHUNK {
            let per_step = (ratio.powf(1.0 / CHUNK as f64)).min(1.0 - 1e-12);
            let geo = cur * per_step / (1.0 - per_step);
            let q = -(ratio.ln()) / ((j as f64 - 1.0) / (j as f64 - 1.0 - CHUNK as f64)).ln();
            let integral = if q > 1.0 {
                cur * (j as f64 - 1.0) / (q - 1.0)
            } else {
                f64::INFINITY
            };
            return total + geo.min(integral);
        }
        prev = cur;
    }
}

/// A smooth truth `f_0` with its Sobolev regularity and cached norm.
#[derive(Debug, Clone)]
pub struct SobolevTruth {
    beta: f64,
    series: SeriesFunction,
    sobolev_norm: f64,
}

impl SobolevTruth {
    pub fn new(beta: f64, series: SeriesFunction) -> Result<Self> {
        if beta <= 0.0 {
            return Err(Error::parameter(format!("beta must be > 0, got {beta}")));
        }
        let sobolev_norm = series.sobolev_norm(beta)?;
        Ok(SobolevTruth {
            beta,
            series,
            sobolev_norm,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn series(&self) -> &SeriesFunction {
        &self.series
    }

    pub fn sobolev_norm(&self) -> f64 {
        self.sobolev_norm
    }
}
