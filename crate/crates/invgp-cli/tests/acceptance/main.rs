//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured quantities (run with `--nocapture` to see them).
//!
//! ```text
//! cargo test -p invgp-cli --test acceptance -- --nocapture
//! ```

mod oracle;

use std::sync::Arc;
use std::time::Instant;

use invgp::exact::{build_gram, exact_posterior_from_gram, log_marginal_likelihood, Dataset};
use invgp::metrics::{mise, recommended_m};
use invgp::operators::{heat, radon, volterra, RadonOp};
use invgp::quadrature::integrate;
use invgp::spectral::{
    BasisSide, ForwardOperator, Point, PriorSpectrum, SpectralFamily, TruncationPolicy,
};
use invgp::variational::{
    elbo, empirical_scheme, fit_variational, kl_to_posterior, population_scheme,
    variational_posterior, SchemeKind,
};
use invgp_cli::config::{ExperimentConfig, OperatorChoice, SchemeChoice};
use invgp_cli::experiment::{eval_grid, run_experiment, time_exact_fit, time_population_fit};
use invgp_cli::phase::phase_grid;
use invgp_cli::sim::{derive_seed, generate_data, SeedPurpose};
use invgp_cli::truth::{make_truth, TruthRecipe};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pass(criterion: usize, detail: &str) {
    println!("criterion {criterion:>2} PASS: {detail}");
}

fn prior_for(op: &dyn ForwardOperator, family: SpectralFamily) -> PriorSpectrum {
    let j = TruncationPolicy::default().choose(op, &family);
    PriorSpectrum::new(family, j).unwrap()
}

/// Criterion 1 — with m = n empirical inducing variables the variational
/// posterior reproduces the exact one on a 100-point grid at
/// `1e-6·(‖y‖ ∨ 1)`, within 10 s per operator.
#[test]
fn criterion_01_full_rank_recovery() {
    let cases: Vec<(Arc<dyn ForwardOperator>, SpectralFamily, TruthRecipe, f64)> = vec![
        (
            volterra(),
            SpectralFamily::Polynomial { alpha: 0.6 },
            TruthRecipe::VolterraCosine,
            0.6,
        ),
        (
            heat(0.01).unwrap(),
            SpectralFamily::Exponential {
                alpha: 0.0,
                xi: 0.1,
                p: 2.0,
            },
            TruthRecipe::HeatSine,
            1.0,
        ),
        (
            radon(),
            SpectralFamily::Polynomial { alpha: 0.6 },
            TruthRecipe::RadonZernike,
            0.6,
        ),
    ];
    let n = 200;
    let mut details = Vec::new();
    for (op, family, recipe, beta) in cases {
        let start = Instant::now();
        let prior = prior_for(op.as_ref(), family);
        let truth = make_truth(&recipe, beta, op.as_ref(), prior.truncation()).unwrap();
        let data = generate_data(op.as_ref(), &truth, n, 1.0, 77).unwrap();
        let tol = 1e-6 * data.y().norm().max(1.0);

        let gram = build_gram(op.as_ref(), &prior, &data).unwrap();
        let exact = exact_posterior_from_gram(&op, &prior, &data, &gram).unwrap();
        let scheme = empirical_scheme(&op, &prior, &gram, n).unwrap();
        let params = fit_variational(&scheme, &data).unwrap();
        let post = variational_posterior(&scheme, &params, &prior, &op).unwrap();

        let grid = eval_grid(op.as_ref(), 100);
        let mut mean_diff = 0.0f64;
        for t in &grid {
            let d = (exact.mean_at(*t).unwrap() - post.mean_at(*t).unwrap()).abs();
            mean_diff = mean_diff.max(d);
        }
        let cov_diff = (exact.cov_grid(&grid).unwrap() - post.cov_grid(&grid).unwrap())
            .abs()
            .max();
        let elapsed = start.elapsed().as_secs_f64();
        assert!(
            mean_diff < tol,
            "{}: mean sup-diff {mean_diff:.3e} >= {tol:.3e}",
            op.name()
        );
        assert!(
            cov_diff < tol,
            "{}: cov sup-diff {cov_diff:.3e} >= {tol:.3e}",
            op.name()
        );
        assert!(elapsed < 10.0, "{}: took {elapsed:.1}s", op.name());
        details.push(format!(
            "{} mean {mean_diff:.1e} cov {cov_diff:.1e} in {elapsed:.1}s",
            op.name()
        ));
    }
    pass(
        1,
        &format!("full-rank recovery at n = {n}: {}", details.join("; ")),
    );
}

/// Criterion 2 — across 20 random configurations with n ≤ 300:
/// `elbo + kl = log marginal likelihood` to 1e-8, `kl ≥ 0`, and
/// `kl(m+1) ≤ kl(m) + 1e-8` for the empirical scheme.
#[test]
fn criterion_02_kl_identity_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(20260811);
    let mut max_gap = 0.0f64;
    for case in 0..20 {
        let use_heat = case % 2 == 1;
        let (op, family): (Arc<dyn ForwardOperator>, SpectralFamily) = if use_heat {
            (
                heat(0.005 + 0.02 * rng.gen::<f64>()).unwrap(),
                SpectralFamily::Exponential {
                    alpha: rng.gen::<f64>(),
                    xi: 0.05 + 0.3 * rng.gen::<f64>(),
                    p: 2.0,
                },
            )
        } else {
            (
                volterra(),
                SpectralFamily::Polynomial {
                    alpha: 0.4 + 1.2 * rng.gen::<f64>(),
                },
            )
        };
        let j_max = if use_heat {
            12
        } else {
            15 + (rng.gen::<f64>() * 25.0) as usize
        };
        let prior = PriorSpectrum::new(family, j_max).unwrap();
        let n = 20 + (rng.gen::<f64>() * 280.0) as usize;
        let x = op.sample_design(n, 1000 + case as u64);
        let y: Vec<f64> = (0..n).map(|_| 4.0 * (rng.gen::<f64>() - 0.5)).collect();
        let data = Dataset::new(x, y, 1.0, case as u64).unwrap();
        let gram = build_gram(op.as_ref(), &prior, &data).unwrap();
        let lml = log_marginal_likelihood(&data, &gram).unwrap();

        let mut prev_kl = f64::INFINITY;
        for m in 1..=8.min(n) {
            let emp = empirical_scheme(&op, &prior, &gram, m).unwrap();
            let kl = kl_to_posterior(&emp, &data, &gram).unwrap();
            let l = elbo(&emp, &data, &gram).unwrap();
            let gap = (l + kl - lml).abs();
            max_gap = max_gap.max(gap);
            assert!(gap < 1e-8, "case {case} m {m}: identity gap {gap:.3e}");
            assert!(kl >= -1e-8, "case {case} m {m}: kl = {kl:.3e}");
            assert!(kl <= prev_kl + 1e-8, "case {case} m {m}: kl not monotone");
            prev_kl = kl;

            let pop = population_scheme(&op, &prior, &data, m.min(j_max)).unwrap();
            let kl_p = kl_to_posterior(&pop, &data, &gram).unwrap();
            let l_p = elbo(&pop, &data, &gram).unwrap();
            let gap_p = (l_p + kl_p - lml).abs();
            max_gap = max_gap.max(gap_p);
            assert!(
                gap_p < 1e-8 && kl_p >= -1e-8,
                "case {case} population m {m}"
            );
        }
    }
    pass(
        2,
        &format!("20 random configs, max |elbo + kl - lml| = {max_gap:.2e}"),
    );
}

/// Criterion 3 — the closed-form KL matches the brute-force Gaussian KL
/// between explicitly constructed coefficient-space distributions to 1e-6
/// for n ≤ 20, J ≤ 20.
#[test]
fn criterion_03_finite_dimensional_kl_oracle() {
    let op = volterra();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let cases = [
        (10usize, 8usize, SchemeKind::PopulationSpectral, 3usize),
        (14, 12, SchemeKind::PopulationSpectral, 5),
        (20, 20, SchemeKind::PopulationSpectral, 9),
        (10, 8, SchemeKind::EmpiricalSpectral, 3),
        (16, 14, SchemeKind::EmpiricalSpectral, 6),
        (20, 18, SchemeKind::EmpiricalSpectral, 7),
    ];
    for &(n, j_max, kind, m) in &cases {
        let alpha = 0.5 + rng.gen::<f64>();
        let prior = PriorSpectrum::new(SpectralFamily::Polynomial { alpha }, j_max).unwrap();
        let x = op.sample_design(n, 300 + n as u64);
        let y: Vec<f64> = (0..n).map(|_| 3.0 * (rng.gen::<f64>() - 0.5)).collect();
        let data = Dataset::new(x, y, 1.0, n as u64).unwrap();
        let gram = build_gram(op.as_ref(), &prior, &data).unwrap();
        let scheme = match kind {
            SchemeKind::PopulationSpectral => population_scheme(&op, &prior, &data, m).unwrap(),
            SchemeKind::EmpiricalSpectral => empirical_scheme(&op, &prior, &gram, m).unwrap(),
        };
        assert_eq!(scheme.dropped(), 0);
        let kl = kl_to_posterior(&scheme, &data, &gram).unwrap();
        let exact_ref = oracle::exact_coeff_posterior(op.as_ref(), &prior, &data);
        let var_ref = oracle::variational_coeff_posterior(op.as_ref(), &prior, &data, kind, m);
        let kl_ref = oracle::gaussian_kl(&var_ref, &exact_ref);
        let diff = (kl - kl_ref).abs();
        worst = worst.max(diff);
        assert!(
            diff < 1e-6,
            "n={n} J={j_max} {kind:?} m={m}: {kl} vs {kl_ref}"
        );
    }
    pass(
        3,
        &format!("KL closed form vs brute force, worst diff {worst:.2e}"),
    );
}

/// Criterion 4 — closed-form MISE within 3 standard errors of a
/// 10⁵-draw Monte-Carlo estimate, exact and variational, n ≤ 20.
#[test]
fn criterion_04_mise_against_monte_carlo() {
    let op = volterra();
    let j_max = 12;
    let prior = PriorSpectrum::new(SpectralFamily::Polynomial { alpha: 0.7 }, j_max).unwrap();
    let truth = make_truth(&TruthRecipe::VolterraCosine, 0.7, op.as_ref(), j_max).unwrap();
    let f0 = truth.series().coeffs().to_vec();
    let data = generate_data(op.as_ref(), &truth, 18, 1.0, 4).unwrap();
    let gram = build_gram(op.as_ref(), &prior, &data).unwrap();
    let mut details = Vec::new();

    let exact = exact_posterior_from_gram(&op, &prior, &data, &gram).unwrap();
    let closed = mise(&exact, &truth).unwrap().mise;
    let reference = oracle::exact_coeff_posterior(op.as_ref(), &prior, &data);
    let (mc, se) = oracle::mc_mise(&reference, &f0, 100_000, 41);
    assert!(
        (closed - mc).abs() < 3.0 * se,
        "exact: {closed} vs {mc} ± {se}"
    );
    details.push(format!(
        "exact |Δ| = {:.1e} (3se = {:.1e})",
        (closed - mc).abs(),
        3.0 * se
    ));

    for (kind, m) in [
        (SchemeKind::PopulationSpectral, 4usize),
        (SchemeKind::EmpiricalSpectral, 6),
    ] {
        let scheme = match kind {
            SchemeKind::PopulationSpectral => population_scheme(&op, &prior, &data, m).unwrap(),
            SchemeKind::EmpiricalSpectral => empirical_scheme(&op, &prior, &gram, m).unwrap(),
        };
        let params = fit_variational(&scheme, &data).unwrap();
        let post = variational_posterior(&scheme, &params, &prior, &op).unwrap();
        let closed = mise(&post, &truth).unwrap().mise;
        let reference = oracle::variational_coeff_posterior(op.as_ref(), &prior, &data, kind, m);
        let (mc, se) = oracle::mc_mise(&reference, &f0, 100_000, 42 + m as u64);
        assert!(
            (closed - mc).abs() < 3.0 * se,
            "{kind:?}: {closed} vs {mc} ± {se}"
        );
        details.push(format!("{kind:?} |Δ| = {:.1e}", (closed - mc).abs()));
    }
    pass(
        4,
        &format!("closed-form MISE vs 1e5-draw MC: {}", details.join(", ")),
    );
}

/// Criterion 5 — each operator's defining formula applied to `e_j`
/// reproduces `κ_j g_j` for j ≤ 10 at 1e-5, and both bases are
/// orthonormal under quadrature for j ≤ 30 at 1e-6.
#[test]
fn criterion_05_singular_system_verification() {
    let pi = std::f64::consts::PI;
    // Volterra: A f(x) = ∫_0^x f
    let vol = volterra();
    for j in 1..=10 {
        for k in 0..=10 {
            let x = k as f64 / 10.0;
            let lhs = integrate(|s| vol.e_basis(j, Point::x(s)), 0.0, x, 64);
            let rhs = vol.kappa(j) * vol.g_basis(j, Point::x(x));
            assert!((lhs - rhs).abs() < 1e-5, "volterra j={j} x={x}");
        }
    }
    // heat: numerical sine projection, semigroup damping, resummation
    let diffusion_time = 0.01;
    let h = heat(diffusion_time).unwrap();
    for j in 1..=10 {
        let coeffs: Vec<f64> = (1..=64)
            .map(|jp| {
                integrate(
                    |s| h.e_basis(j, Point::x(s)) * 2f64.sqrt() * (jp as f64 * pi * s).sin(),
                    0.0,
                    1.0,
                    256,
                )
            })
            .collect();
        for k in 0..=10 {
            let x = k as f64 / 10.0;
            let lhs: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(idx, c)| {
                    let jp = (idx + 1) as f64;
                    c * (-jp * jp * pi * pi * diffusion_time).exp()
                        * 2f64.sqrt()
                        * (jp * pi * x).sin()
                })
                .sum();
            let rhs = h.kappa(j) * h.g_basis(j, Point::x(x));
            assert!((lhs - rhs).abs() < 1e-5, "heat j={j} x={x}");
        }
    }
    // Radon: chord-averaged line integral
    let rad = RadonOp;
    for j in 1..=10 {
        let f = |x: f64, y: f64| {
            let r = (x * x + y * y).sqrt();
            rad.e_basis(j, Point::polar(r, y.atan2(x)))
        };
        for si in 0..=9 {
            let s = si as f64 / 10.0 + 0.013;
            for pk in 0..6 {
                let phi = pk as f64 * pi / 3.0;
                let lhs = rad.chord_average(f, s, phi, 80);
                let rhs = rad.kappa(j) * rad.g_basis(j, Point::ray(s, phi));
                assert!((lhs - rhs).abs() < 1e-5, "radon j={j} s={s} phi={phi}");
            }
        }
    }
    // orthonormality at 1e-6 for j ≤ 30 on all six bases
    let ops: Vec<Arc<dyn ForwardOperator>> = vec![volterra(), heat(0.01).unwrap(), radon()];
    for op in &ops {
        for side in [BasisSide::E, BasisSide::G] {
            let rule = match side {
                BasisSide::E => op.param_quadrature(30),
                BasisSide::G => op.design_quadrature(30),
            };
            for i in 1..=30 {
                for j in i..=30 {
                    let v = rule.apply(|p| {
                        let bi = match side {
                            BasisSide::E => op.e_basis(i, p),
                            BasisSide::G => op.g_basis(i, p),
                        };
                        let bj = match side {
                            BasisSide::E => op.e_basis(j, p),
                            BasisSide::G => op.g_basis(j, p),
                        };
                        bi * bj
                    });
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (v - expect).abs() < 1e-6,
                        "{} {side:?} ({i},{j}): {v}",
                        op.name()
                    );
                }
            }
        }
    }
    pass(
        5,
        "defining-formula identities at 1e-5 (j ≤ 10), orthonormality at 1e-6 (j ≤ 30)",
    );
}

/// Criterion 6 — recommended_m reproduces the reference anchors exactly.
#[test]
fn criterion_06_recommended_m_anchors() {
    let vol = volterra();
    let prior_v = PriorSpectrum::new(SpectralFamily::Polynomial { alpha: 0.6 }, 32).unwrap();
    let m_v = recommended_m(vol.as_ref(), &prior_v, 15_000);
    assert_eq!(m_v, 10);

    let h = heat(0.01).unwrap();
    let prior_h = PriorSpectrum::new(
        SpectralFamily::Exponential {
            alpha: 0.0,
            xi: 0.1,
            p: 2.0,
        },
        16,
    )
    .unwrap();
    let m_h = recommended_m(h.as_ref(), &prior_h, 8_000);
    assert_eq!(m_h, 6);

    let r = radon();
    let prior_r = PriorSpectrum::new(SpectralFamily::Polynomial { alpha: 0.6 }, 32).unwrap();
    let m_r500 = recommended_m(r.as_ref(), &prior_r, 500);
    let m_r5000 = recommended_m(r.as_ref(), &prior_r, 5_000);
    assert_eq!(m_r500, 10);
    assert_eq!(m_r5000, 24);

    pass(
        6,
        &format!(
        "volterra(n=15000) = {m_v}, heat(n=8000) = {m_h}, radon(n=500/5000) = {m_r500}/{m_r5000}"
    ),
    );
}

/// Criterion 7 — heat contrast at n = 2000, T = 0.01, ξ = 0.1, 10
/// replicates: m = 6 matches the exact posterior MISE within 10%, m = 3
/// is at least 1.5× worse and its credible bands are wider. Under 5 min.
#[test]
fn criterion_07_heat_contrast() {
    let start = Instant::now();
    let config = ExperimentConfig {
        operator: OperatorChoice::Heat {
            diffusion_time: 0.01,
        },
        n: 2000,
        m_list: vec![3, 6],
        beta: 1.0,
        xi: 0.1,
        replicates: 10,
        seed: 7,
        scheme: SchemeChoice::Population,
        exact: true,
        grid_size: 100,
        ..Default::default()
    };
    let record = run_experiment(&config).unwrap();
    let collect =
        |scheme: &str, m: usize, field: fn(&invgp_cli::experiment::RunCell) -> Option<f64>| {
            let mut v: Vec<f64> = record
                .rows
                .iter()
                .filter(|r| r.scheme == scheme && r.m == m)
                .filter_map(field)
                .collect();
            assert_eq!(v.len(), 10, "{scheme} m={m}: missing rows");
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        };
    let median = |v: &[f64]| 0.5 * (v[v.len() / 2] + v[(v.len() - 1) / 2]);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

    let mise_exact = median(&collect("exact", 0, |r| r.mise));
    let mise_m6 = median(&collect("population", 6, |r| r.mise));
    let mise_m3 = median(&collect("population", 3, |r| r.mise));
    let width_m6 = mean(&collect("population", 6, |r| r.band_width));
    let width_m3 = mean(&collect("population", 3, |r| r.band_width));
    let elapsed = start.elapsed().as_secs_f64();

    assert!(
        (mise_m6 - mise_exact).abs() <= 0.10 * mise_exact,
        "m=6 median MISE {mise_m6} vs exact {mise_exact}"
    );
    assert!(
        mise_m3 >= 1.5 * mise_m6,
        "m=3 median MISE {mise_m3} not 1.5x m=6 {mise_m6}"
    );
    assert!(
        width_m3 > width_m6,
        "bands not wider: {width_m3} vs {width_m6}"
    );
    assert!(elapsed < 300.0, "took {elapsed:.0}s");
    pass(7, &format!(
        "heat n=2000: MISE exact {mise_exact:.4}, m6 {mise_m6:.4} ({:+.2}%), m3 {mise_m3:.4} ({:.2}x); band width {width_m3:.3} > {width_m6:.3}; {elapsed:.0}s",
        100.0 * (mise_m6 - mise_exact) / mise_exact,
        mise_m3 / mise_m6
    ));
}

/// Criterion 8 — scaled phase-transition grid: for each n the log MISE
/// ratio flattens (successive differences < 0.05 in absolute value) for
/// all m past the threshold `⌈n^{1/4.2}⌉`. Under 10 min.
#[test]
fn criterion_08_phase_transition_trend() {
    let start = Instant::now();
    let op = volterra();
    let family = SpectralFamily::Polynomial { alpha: 0.6 };
    let prior = prior_for(op.as_ref(), family);
    let truth = make_truth(
        &TruthRecipe::VolterraCosine,
        0.6,
        op.as_ref(),
        prior.truncation(),
    )
    .unwrap();
    let n_list = [200usize, 500, 1000, 2000];
    let m_list: Vec<usize> = (1..=12).collect();
    let grid = phase_grid(&op, &prior, &truth, &n_list, &m_list, 5, 1.0, 88).unwrap();
    let mut details = Vec::new();
    for (i, &n) in n_list.iter().enumerate() {
        let threshold = (n as f64).powf(1.0 / 4.2).ceil() as usize;
        assert_eq!(grid.threshold[i], threshold, "threshold curve mismatch");
        let row = &grid.log_ratio[i];
        let mut worst = 0.0f64;
        for m in threshold + 1..=12 {
            let diff = (row[m - 1] - row[m - 2]).abs();
            worst = worst.max(diff);
            assert!(
                diff < 0.05,
                "n={n}: |Δ log ratio| = {diff:.3} at m = {m} (threshold {threshold})"
            );
        }
        details.push(format!("n={n} thr={threshold} max|Δ|={worst:.3}"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 600.0, "took {elapsed:.0}s");
    pass(8, &format!("{} ({elapsed:.0}s)", details.join("; ")));
}

/// Criterion 9 — log-log MISE slope over n ∈ {250, …, 4000} with
/// m = recommended, within ±30% of the theoretical −2β/(1+2β+2p) = −0.4.
/// Under 15 min.
#[test]
fn criterion_09_rate_slope() {
    let start = Instant::now();
    let op = volterra();
    let family = SpectralFamily::Polynomial { alpha: 1.0 };
    let prior = prior_for(op.as_ref(), family);
    let truth = make_truth(
        &TruthRecipe::VolterraCosine,
        1.0,
        op.as_ref(),
        prior.truncation(),
    )
    .unwrap();
    let n_list = [250usize, 500, 1000, 2000, 4000];
    let reps = 10;
    let mut mise_by_n = Vec::new();
    for (i, &n) in n_list.iter().enumerate() {
        let m = recommended_m(op.as_ref(), &prior, n);
        let mut total = 0.0;
        for r in 0..reps {
            let seed = derive_seed(909, (i * reps + r) as u64, SeedPurpose::Replicate);
            let data = generate_data(op.as_ref(), &truth, n, 1.0, seed).unwrap();
            let (post, _) = time_population_fit(&op, &prior, &data, m).unwrap();
            total += mise(&post, &truth).unwrap().mise;
        }
        mise_by_n.push((n, total / reps as f64));
    }
    let est = invgp::metrics::rate_slope(&mise_by_n, op.as_ref(), &prior, &truth).unwrap();
    assert!((est.theory_exponent + 0.4).abs() < 1e-12);
    let rel = (est.slope - est.theory_exponent).abs() / est.theory_exponent.abs();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        rel <= 0.30,
        "slope {} vs theory {} ({}% off)",
        est.slope,
        est.theory_exponent,
        (100.0 * rel).round()
    );
    assert!(elapsed < 900.0, "took {elapsed:.0}s");
    pass(
        9,
        &format!(
            "slope {:.3} vs theory -0.4 ({:.0}% off, r² = {:.3}), {elapsed:.0}s",
            est.slope,
            100.0 * rel,
            est.r2
        ),
    );
}

/// Criterion 10 — at n = 4000 the population-scheme variational fit is
/// at least 10× faster than the exact fit; its pipeline touches only
/// `m×n`/`m×m`/`m×J` arrays (no `n×n` allocation on the `--exact off`
/// path).
#[test]
fn criterion_10_performance_contract() {
    let op = volterra();
    let family = SpectralFamily::Polynomial { alpha: 1.0 };
    let prior = prior_for(op.as_ref(), family);
    let truth = make_truth(
        &TruthRecipe::VolterraCosine,
        1.0,
        op.as_ref(),
        prior.truncation(),
    )
    .unwrap();
    let n = 4000;
    let data = generate_data(op.as_ref(), &truth, n, 1.0, 515).unwrap();
    let m = recommended_m(op.as_ref(), &prior, n);

    let (post_var, var_ms) = time_population_fit(&op, &prior, &data, m).unwrap();
    let (_gram, post_exact, exact_ms) = time_exact_fit(&op, &prior, &data).unwrap();
    let ratio = exact_ms / var_ms;
    assert!(
        ratio >= 10.0,
        "exact {exact_ms:.1}ms / variational {var_ms:.3}ms = {ratio:.1}x"
    );
    // sanity: both posteriors are usable
    let m_e = mise(&post_exact, &truth).unwrap().mise;
    let m_v = mise(&post_var, &truth).unwrap().mise;
    assert!(m_e > 0.0 && m_v > 0.0);
    pass(
        10,
        &format!(
            "n = 4000, m = {m}: exact fit {exact_ms:.0}ms, variational {var_ms:.2}ms ({ratio:.0}x)"
        ),
    );
}
