//! Gauss–Legendre and product quadrature rules.
//!
//! Rules are returned as node/weight pairs against the *probability*
//! measures of the problem (`μ` on the parameter domain, `G` on the design
//! domain), so `∫ h dν ≈ Σ_i w_i h(p_i)` with `Σ w_i ≈ 1`.

use crate::spectral::Point;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the Legendre recurrence; accurate to machine
/// precision for the orders used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and derivative by the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        xs.iter().map(|x| mid + half * x).collect(),
        ws.iter().map(|w| half * w).collect(),
    )
}

/// `∫_a^b f` by Gauss–Legendre with `n` nodes.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let (xs, ws) = gauss_legendre_on(n, a, b);
    xs.iter().zip(&ws).map(|(x, w)| w * f(*x)).sum()
}

/// A discrete rule `∫ h dν ≈ Σ_i w_i h(p_i)` on a 1- or 2-D domain.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn apply(&self, h: impl Fn(Point) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * h(*p))
            .sum()
    }

    /// Rule for Lebesgue measure on `[0, 1]` (used for both `μ` and `G` of
    /// the interval operators).
    pub fn unit_interval(n: usize) -> Self {
        let (xs, ws) = gauss_legendre_on(n, 0.0, 1.0);
        QuadRule {
            nodes: xs.into_iter().map(Point::x).collect(),
            weights: ws,
        }
    }

    /// Product rule for `μ = π^{-1}·Lebesgue` on the unit disc:
    /// Gauss–Legendre in `r` against `2 r dr`, trapezoid in the angle.
    pub fn unit_disc(n_r: usize, n_theta: usize) -> Self {
        let (rs, wrs) = gauss_legendre_on(n_r, 0.0, 1.0);
        let mut nodes = Vec::with_capacity(n_r * n_theta);
        let mut weights = Vec::with_capacity(n_r * n_theta);
        let dtheta = 2.0 * std::f64::consts::PI / n_theta as f64;
        for (r, wr) in rs.iter().zip(&wrs) {
            for k in 0..n_theta {
                nodes.push(Point::polar(*r, k as f64 * dtheta));
                weights.push(2.0 * r * wr / n_theta as f64);
            }
        }
        QuadRule { nodes, weights }
    }

    /// Product rule for the Radon design distribution
    /// `dG = (4/π)√(1-s²) ds × dφ/(2π)`. The `s` factor is integrated with
    /// Gauss–Legendre after the substitution `s = sin u`, which removes the
    /// square-root endpoint singularity; the angle uses the trapezoid rule.
    pub fn radon_design(n_s: usize, n_phi: usize) -> Self {
        let (us, wus) = gauss_legendre_on(n_s, 0.0, 0.5 * std::f64::consts::PI);
        let mut nodes = Vec::with_capacity(n_s * n_phi);
        let mut weights = Vec::with_capacity(n_s * n_phi);
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        for (u, wu) in us.iter().zip(&wus) {
            let s = u.sin();
            let c = u.cos();
            let ws = 4.0 / std::f64::consts::PI * c * c * wu;
            for k in 0..n_phi {
                nodes.push(Point::ray(s, k as f64 * dphi));
                weights.push(ws / n_phi as f64);
            }
        }
        QuadRule { nodes, weights }
    }
}
