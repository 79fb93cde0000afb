//! Gaussian-process posteriors for linear inverse regression problems.
//!
//! The observation model is `Y_i = (A f_0)(x_i) + Z_i` with `Z_i ~ N(0, σ²)`
//! and a known injective linear operator `A` given through its singular
//! system `A e_j = κ_j g_j`. Priors are centered GPs whose covariance
//! eigenfunctions coincide with the `e_j`, so every Gram matrix reduces to
//! diagonally weighted outer products of basis evaluations.
//!
//! The crate provides:
//!
//! * [`spectral`] — truncated series functions, prior spectra, the
//!   [`ForwardOperator`](spectral::ForwardOperator) singular-system trait;
//! * [`operators`] — the Volterra integral operator, the heat semigroup
//!   and the Radon transform, with design-point samplers;
//! * [`exact`] — the conjugate posterior, Gram matrices and the log
//!   marginal likelihood;
//! * [`variational`] — population- and empirical-spectral inducing
//!   variables, optimal variational parameters, ELBO and the closed-form
//!   KL gap to the exact posterior;
//! * [`metrics`] — MISE, credible bands, contraction-rate slopes and
//!   recommended inducing-variable counts.

pub mod error;
pub mod exact;
pub mod metrics;
pub mod operators;
pub mod posterior;
pub mod quadrature;
pub mod spectral;
pub mod variational;

pub use error::{Error, Result};
pub use exact::{build_gram, exact_posterior, log_marginal_likelihood, Dataset, GramSet};
pub use posterior::{GaussianPosterior, PosteriorKind};
pub use spectral::{
    BasisSide, BasisTag, Domain, ForwardOperator, IllPosedness, Point, PriorSpectrum,
    SeriesFunction, SobolevTruth, SpectralFamily, TruncationPolicy,
};
pub use variational::{
    elbo, empirical_scheme, fit_variational, kl_to_posterior, population_scheme,
    trace_and_norm_gap, variational_posterior, InducingScheme, SchemeKind, VariationalParams,
};
