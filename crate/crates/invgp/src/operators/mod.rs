//! The three forward operators used throughout: the Volterra integral
//! operator, the heat semigroup at time `T`, and the Radon transform on
//! the unit disc, each given through its closed-form singular system.

pub mod zernike;

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::quadrature::QuadRule;
use crate::spectral::{Domain, ForwardOperator, IllPosedness, Point};
use zernike::{angular, chebyshev_u, index_pair, zernike_radial};

/// Volterra operator `Af(x) = ∫_0^x f`: `κ_j = ((j-1/2)π)^{-1}`,
/// `e_j = √2 cos((j-1/2)πx)`, `g_j = √2 sin((j-1/2)πx)`, uniform design
/// on `[0, 1)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct VolterraOp;

impl ForwardOperator for VolterraOp {
    fn name(&self) -> &'static str {
        "volterra"
    }

    fn kappa(&self, j: usize) -> f64 {
        1.0 / ((j as f64 - 0.5) * PI)
    }

    fn e_basis(&self, j: usize, t: Point) -> f64 {
        SQRT_2 * ((j as f64 - 0.5) * PI * t.0).cos()
    }

    fn g_basis(&self, j: usize, x: Point) -> f64 {
        SQRT_2 * ((j as f64 - 0.5) * PI * x.0).sin()
    }

    fn illposedness(&self) -> IllPosedness {
        IllPosedness::Mild { p: 1.0 }
    }

    fn domain_t(&self) -> Domain {
        Domain::UnitInterval
    }

    fn domain_x(&self) -> Domain {
        Domain::UnitInterval
    }

    fn basis_sup_growth(&self) -> f64 {
        0.0
    }

    fn sample_design(&self, n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Point::x(rng.gen::<f64>())).collect()
    }

    fn design_quadrature(&self, j_max: usize) -> QuadRule {
        QuadRule::unit_interval(interval_nodes(j_max))
    }

    fn param_quadrature(&self, j_max: usize) -> QuadRule {
        QuadRule::unit_interval(interval_nodes(j_max))
    }
}

/// Heat operator: `Af` is the solution of `u_t = u_xx` on `[0,1]` with
/// Dirichlet boundary and initial condition `f`, evaluated at time `T`.
/// `κ_j = e^{-j²π²T}` and `e_j = g_j = √2 sin(jπx)`.
#[derive(Debug, Clone, Copy)]
pub struct HeatOp {
    diffusion_time: f64,
}

impl HeatOp {
    pub fn new(diffusion_time: f64) -> Result<Self> {
        if diffusion_time > 0.0 {
            Ok(HeatOp { diffusion_time })
        } else {
            Err(Error::parameter(format!(
                "diffusion time must be > 0, got {diffusion_time}"
            )))
        }
    }

    pub fn diffusion_time(&self) -> f64 {
        self.diffusion_time
    }
}

impl ForwardOperator for HeatOp {
    fn name(&self) -> &'static str {
        "heat"
    }

    fn kappa(&self, j: usize) -> f64 {
        let jf = j as f64;
        (-jf * jf * PI * PI * self.diffusion_time).exp()
    }

    fn e_basis(&self, j: usize, t: Point) -> f64 {
        SQRT_2 * (j as f64 * PI * t.0).sin()
    }

    fn g_basis(&self, j: usize, x: Point) -> f64 {
        self.e_basis(j, x)
    }

    fn illposedness(&self) -> IllPosedness {
        IllPosedness::Severe {
            c: PI * PI * self.diffusion_time,
            p: 2.0,
        }
    }

    fn domain_t(&self) -> Domain {
        Domain::UnitInterval
    }

    fn domain_x(&self) -> Domain {
        Domain::UnitInterval
    }

    fn basis_sup_growth(&self) -> f64 {
        0.0
    }

    fn sample_design(&self, n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Point::x(rng.gen::<f64>())).collect()
    }

    fn design_quadrature(&self, j_max: usize) -> QuadRule {
        QuadRule::unit_interval(interval_nodes(j_max))
    }

    fn param_quadrature(&self, j_max: usize) -> QuadRule {
        QuadRule::unit_interval(interval_nodes(j_max))
    }
}

/// Radon transform on the unit disc, normalized as the average of `f`
/// along the chord with offset `s` and normal angle `φ`.
///
/// In single-index form with `(m_j, l_j)` from [`zernike::index_pair`]:
/// `e_j(r,θ) = √(m_j+1) R_{m_j}^{|l_j|}(r) A_{l_j}(θ)` on the disc with
/// `μ = π^{-1}·Lebesgue`, `g_j(s,φ) = U_{m_j}(s) A_{l_j}(φ)` on
/// `[0,1]×[0,2π)` with `dG = (4/π)√(1-s²) ds × dφ/(2π)`, and
/// `κ_j = (m_j+1)^{-1/2}`, hence mildly ill-posed of degree `p = 1/4`.
/// `A_l` is the real trigonometric factor (cosine for `l > 0`, sine for
/// `l < 0`, constant for `l = 0`).
#[derive(Debug, Clone, Copy, Default)]
pub struct RadonOp;

impl ForwardOperator for RadonOp {
    fn name(&self) -> &'static str {
        "radon"
    }

    fn kappa(&self, j: usize) -> f64 {
        let (m, _) = index_pair(j);
        1.0 / ((m as f64 + 1.0).sqrt())
    }

    fn e_basis(&self, j: usize, t: Point) -> f64 {
        let (m, l) = index_pair(j);
        let norm = (m as f64 + 1.0).sqrt();
        norm * zernike_radial(m, l.unsigned_abs(), t.0) * angular(l, t.1)
    }

    fn g_basis(&self, j: usize, x: Point) -> f64 {
        let (m, l) = index_pair(j);
        chebyshev_u(m, x.0) * angular(l, x.1)
    }

    fn illposedness(&self) -> IllPosedness {
        IllPosedness::Mild { p: 0.25 }
    }

    fn domain_t(&self) -> Domain {
        Domain::UnitDisc
    }

    fn domain_x(&self) -> Domain {
        Domain::Cylinder
    }

    fn basis_sup_growth(&self) -> f64 {
        0.5
    }

    fn sample_design(&self, n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                // s from (4/π)√(1-s²) ds by rejection from the uniform
                // envelope, φ uniform on [0, 2π).
                let s = loop {
                    let cand = rng.gen::<f64>();
                    let u = rng.gen::<f64>();
                    if u * u <= 1.0 - cand * cand {
                        break cand;
                    }
                };
                Point::ray(s, 2.0 * PI * rng.gen::<f64>())
            })
            .collect()
    }

    fn design_quadrature(&self, j_max: usize) -> QuadRule {
        let m_max = index_pair(j_max.max(1)).0 as usize;
        QuadRule::radon_design(4 * (m_max + 4), (8 * (m_max + 4)).max(16))
    }

    fn param_quadrature(&self, j_max: usize) -> QuadRule {
        let m_max = index_pair(j_max.max(1)).0 as usize;
        QuadRule::unit_disc(4 * (m_max + 4), (8 * (m_max + 4)).max(16))
    }
}

impl RadonOp {
    /// Applies the transform to an arbitrary function on the disc by
    /// Gauss–Legendre integration along the chord. The defining-formula
    /// route; the singular system is never consulted.
    pub fn chord_average(
        &self,
        f: impl Fn(f64, f64) -> f64,
        s: f64,
        phi: f64,
        nodes: usize,
    ) -> f64 {
        let w = (1.0 - s * s).max(0.0).sqrt();
        if w == 0.0 {
            return f(s * phi.cos(), s * phi.sin());
        }
        let integral = crate::quadrature::integrate(
            |t| f(s * phi.cos() - t * phi.sin(), s * phi.sin() + t * phi.cos()),
            -w,
            w,
            nodes,
        );
        integral / (2.0 * w)
    }
}

fn interval_nodes(j_max: usize) -> usize {
    (4 * j_max).max(16)
}

/// The Volterra singular system.
pub fn volterra() -> Arc<dyn ForwardOperator> {
    Arc::new(VolterraOp)
}

/// The heat singular system for diffusion time `T > 0`.
pub fn heat(diffusion_time: f64) -> Result<Arc<dyn ForwardOperator>> {
    Ok(Arc::new(HeatOp::new(diffusion_time)?))
}

/// The Radon singular system.
pub fn radon() -> Arc<dyn ForwardOperator> {
    Arc::new(RadonOp)
}

/// `n` i.i.d. design points from the operator's design distribution,
/// deterministic given the seed.
pub fn sample_design(op: &dyn ForwardOperator, n: usize, seed: u64) -> Vec<Point> {
    op.sample_design(n, seed)
}
