//! Zernike radial polynomials, Chebyshev-II polynomials and the
//! single-index bookkeeping for the Radon singular system.

/// Degree/order pair `(m_j, l_j)` of the `j`-th disc basis function,
/// `j ≥ 1`: `m_j = ⌈(√(1+8j)-1)/2⌉ - 1` and `l_j = 2(j-1) - m_j(m_j+2)`,
/// so `l` runs over `-m, -m+2, …, m` within each degree block.
pub fn index_pair(j: usize) -> (u32, i32) {
    debug_assert!(j >= 1);
    let est = ((((1 + 8 * j) as f64).sqrt() - 1.0) / 2.0).ceil() as i64 - 1;
    // Integer fixup: m is the unique value with tri(m) < j <= tri(m+1).
    let tri = |m: i64| (m * (m + 1) / 2) as usize;
    let mut m = est.max(0);
    while tri(m) >= j {
        m -= 1;
    }
    while tri(m + 1) < j {
        m += 1;
    }
    let l = 2 * (j as i64 - 1) - m * (m + 2);
    (m as u32, l as i32)
}

/// Zernike radial polynomial `R_m^l(r)`, `0 ≤ l ≤ m`, `m - l` even.
///
/// Computed as `(-1)^k r^l P_k^{(l,0)}(1 - 2r²)` with `k = (m-l)/2` via the
/// Jacobi three-term recurrence; no factorial ratios.
pub fn zernike_radial(m: u32, l: u32, r: f64) -> f64 {
    debug_assert!(l <= m && (m - l).is_multiple_of(2));
    let k = ((m - l) / 2) as usize;
    let a = l as f64;
    let x = 1.0 - 2.0 * r * r;
    let p = jacobi_a0(k, a, x);
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * r.powi(l as i32) * p
}

/// Jacobi polynomial `P_k^{(a,0)}(x)` by the standard recurrence.
fn jacobi_a0(k: usize, a: f64, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut p_prev = 1.0;
    let mut p = (a + 1.0) + (a + 2.0) * (x - 1.0) / 2.0;
    for i in 2..=k {
        let n = i as f64;
        let c0 = 2.0 * n * (n + a) * (2.0 * n + a - 2.0);
        let c1 = (2.0 * n + a - 1.0) * ((2.0 * n + a) * (2.0 * n + a - 2.0) * x + a * a);
        let c2 = 2.0 * (n + a - 1.0) * (n - 1.0) * (2.0 * n + a);
        let next = (c1 * p - c2 * p_prev) / c0;
        p_prev = p;
        p = next;
    }
    p
}

/// Chebyshev polynomial of the second kind `U_m(s)`.
pub fn chebyshev_u(m: u32, s: f64) -> f64 {
    let mut u_prev = 1.0;
    if m == 0 {
        return u_prev;
    }
    let mut u = 2.0 * s;
    for _ in 2..=m {
        let next = 2.0 * s * u - u_prev;
        u_prev = u;
        u = next;
    }
    u
}

/// Real angular factor shared by both Radon bases: `√2 cos(lθ)` for
/// `l > 0`, `1` for `l = 0` and `√2 sin(lθ)` for `l < 0`.
pub fn angular(l: i32, theta: f64) -> f64 {
    let lf = l as f64;
    match l.cmp(&0) {
        std::cmp::Ordering::Greater => std::f64::consts::SQRT_2 * (lf * theta).cos(),
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Less => std::f64::consts::SQRT_2 * (lf * theta).sin(),
    }
}
