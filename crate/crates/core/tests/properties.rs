use mtcp_core::covariance::{projected_cov_z_eta, projected_cov_z_eta_streamed};
use mtcp_core::direct::direct_estimate_with_proxy;
use mtcp_core::factors::{khatri_rao, realify};
use mtcp_core::forecast::{fit_models, forecast_matrices};
use mtcp_core::linalg::{pinv_complex, sym_eigen_desc, to_complex, C64};
use mtcp_core::metrics::{rho2, rho2_complex};
use mtcp_core::proxy::xi_pca;
use mtcp_core::rank::build_m;
use mtcp_core::refined::{project, refined_estimate_detailed};
use mtcp_core::simulation::{generate_dgp, DgpConfig};
use mtcp_core::{estimate, CpEstimate, EstimatorConfig, MatrixSeries, Method};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn random_series(p: usize, q: usize, n: usize, seed: u64) -> MatrixSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    MatrixSeries::from_fn(p, q, n, |_, _, _| gaussian(&mut rng)).unwrap()
}

fn orthonormal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(rows, cols, |_, _| gaussian(rng));
    m.qr().q().columns(0, cols).into_owned()
}

/// `Y_t = A X_t Bᵀ + ε_t` with `X_t = [[z1, z2], [-z2, z1]]` and `z_t` a
/// rotating VAR(1). The lag covariances are then rotation-scalings in the
/// loading basis, so the eigenproblem has a complex conjugate pair.
fn rotating_series(seed: u64, p: usize, q: usize, n: usize) -> MatrixSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(p, 2, |_, _| rng.random_range(-3.0..3.0));
    let b = DMatrix::from_fn(q, 2, |_, _| rng.random_range(-3.0..3.0));
    let theta = 0.6 + 0.6 * rng.random::<f64>();
    let (c, s) = (0.9 * theta.cos(), 0.9 * theta.sin());
    let mut z = [0.0f64; 2];
    let mut slices = Vec::with_capacity(n);
    for t in 0..n + 100 {
        let (e0, e1) = (gaussian(&mut rng), gaussian(&mut rng));
        z = [c * z[0] - s * z[1] + e0, s * z[0] + c * z[1] + e1];
        if t >= 100 {
            let x = DMatrix::from_row_slice(2, 2, &[z[0], z[1], -z[1], z[0]]);
            let noise = DMatrix::from_fn(p, q, |_, _| 0.3 * gaussian(&mut rng));
            slices.push(&a * x * b.transpose() + noise);
        }
    }
    MatrixSeries::new(slices).unwrap()
}

fn check_pair_relations(est: &CpEstimate) {
    for pair in &est.pairs.pairs {
        let k = pair.kappa as f64;
        let (l, lt) = (pair.index, pair.partner);
        let da = (est.a.column(lt) - est.a.column(l).map(|z| z.conj()) * C64::new(k, 0.0)).camax();
        let db = (est.b.column(lt) - est.b.column(l).map(|z| z.conj()) * C64::new(k, 0.0)).camax();
        let dx = (est.factors.column(lt) - est.factors.column(l).map(|z| z.conj())).camax();
        assert!(
            da <= 1e-8 && db <= 1e-8 && dx <= 1e-8,
            "pair ({l},{lt}): {da:e} {db:e} {dx:e}"
        );
        assert!((est.eigenvalues[lt] - est.eigenvalues[l].conj()).norm() <= 1e-8);
    }
    let (im, re) = est.reconstruction_imaginary();
    assert!(im <= 1e-8 * re.max(1.0), "imaginary residue {im:e} against {re:e}");
}

#[test]
fn conjugate_pairs_satisfy_relations() {
    let mut complex_seen = 0;
    for seed in 0..20 {
        let series = rotating_series(seed, 10, 8, 300);
        for method in [Method::Direct, Method::Refined] {
            let Ok(est) = estimate(&series, method, &EstimatorConfig::default()) else {
                continue;
            };
            assert_eq!(est.pairs.reals.len() + 2 * est.pairs.pairs.len(), est.d_hat);
            if !est.pairs.pairs.is_empty() {
                complex_seen += 1;
            }
            check_pair_relations(&est);
        }
    }
    assert!(
        complex_seen >= 20,
        "only {complex_seen} estimates had complex eigenvalues"
    );
}

#[test]
fn conjugate_pair_forecast_is_real() {
    let est = (0..20)
        .filter_map(|seed| {
            estimate(
                &rotating_series(seed, 10, 8, 300),
                Method::Refined,
                &EstimatorConfig::default(),
            )
            .ok()
        })
        .find(|e| !e.pairs.pairs.is_empty())
        .expect("some estimate has a conjugate pair");
    let models = fit_models(&realify(&est).unwrap(), 5).unwrap();
    let out = forecast_matrices(&est, &models, 3).unwrap();
    assert_eq!(out.matrices.len(), 3);
    for x in &out.factors {
        let y = est.signal(x);
        let scale = y.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        assert!(y.iter().all(|z| z.im.abs() <= 1e-8 * scale.max(1.0)));
    }
}

#[test]
fn realified_reconstruction_round_trip() {
    let series = rotating_series(5, 9, 7, 300);
    let est = estimate(&series, Method::Direct, &EstimatorConfig::default()).unwrap();
    let r = realify(&est).unwrap();
    assert_eq!(r.series.len(), est.d_hat);
    for t in [0, 17, 299] {
        let values: Vec<f64> = r.series.iter().map(|s| s[t]).collect();
        let rebuilt = est.signal(&r.recombine(&values));
        let direct: Vec<C64> = est.factors.row(t).iter().cloned().collect();
        let reference = est.signal(&direct);
        let tol = 1e-10 * reference.iter().map(|z| z.norm()).fold(1.0, f64::max);
        assert!((rebuilt - reference).camax() <= tol);
    }
}

#[test]
fn khatri_rao_pseudo_inverse_is_left_inverse() {
    let (series, _) = generate_dgp(&DgpConfig::new(9, 7, 3, 300, 4)).unwrap();
    for method in [Method::Direct, Method::Refined] {
        let est = estimate(&series, method, &EstimatorConfig::default()).unwrap();
        let h = khatri_rao(&est.a, &est.b);
        let (hp, _) = pinv_complex(&h);
        let defect = (hp * h - DMatrix::<C64>::identity(est.d_hat, est.d_hat)).camax();
        assert!(defect <= 1e-8, "{method}: {defect:e}");
        for l in 0..est.d_hat {
            assert!((est.a.column(l).norm() - 1.0).abs() < 1e-12);
            assert!((est.b.column(l).norm() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn direct_invariant_to_proxy_scale() {
    let (series, _) = generate_dgp(&DgpConfig::new(8, 6, 2, 300, 9)).unwrap();
    let xi = xi_pca(&series).unwrap().values;
    let scaled: Vec<f64> = xi.iter().map(|v| 7.5 * v).collect();
    let cfg = EstimatorConfig::default();
    let e1 = direct_estimate_with_proxy(&series, &xi, &cfg).unwrap();
    let e2 = direct_estimate_with_proxy(&series, &scaled, &cfg).unwrap();
    assert_eq!(e1.d_hat, e2.d_hat);
    assert!(rho2_complex(&e1.a, &e2.a) < 1e-12);
    assert!(rho2_complex(&e1.b, &e2.b) < 1e-12);
}

#[test]
fn direct_handles_wide_orientation() {
    let cfg = DgpConfig {
        noise: false,
        ..DgpConfig::new(5, 11, 2, 200, 21)
    };
    let (series, truth) = generate_dgp(&cfg).unwrap();
    let est = estimate(&series, Method::Direct, &EstimatorConfig::default()).unwrap();
    assert_eq!(est.a.nrows(), 5);
    assert_eq!(est.b.nrows(), 11);
    assert!(rho2(&truth.a, &est.a) < 1e-8 && rho2(&truth.b, &est.b) < 1e-8);
}

#[test]
fn direct_and_refined_agree_noise_free() {
    for seed in 0..10 {
        let cfg = DgpConfig {
            noise: false,
            ..DgpConfig::new(10, 8, 3, 200, 100 + seed)
        };
        let (series, _) = generate_dgp(&cfg).unwrap();
        let d = estimate(&series, Method::Direct, &EstimatorConfig::default()).unwrap();
        let r = estimate(&series, Method::Refined, &EstimatorConfig::default()).unwrap();
        assert!(rho2_complex(&d.a, &r.a) <= 1e-6);
        assert!(rho2_complex(&d.b, &r.b) <= 1e-6);
    }
}

#[test]
fn refined_left_eigenvectors_and_range_containment() {
    for seed in 0..10 {
        let (series, _) = generate_dgp(&DgpConfig::new(12, 10, 3, 300, 40 + seed)).unwrap();
        let (est, det) = refined_estimate_detailed(&series, &EstimatorConfig::default()).unwrap();
        let s1 = &det.sigma1;
        let j2 = (s1 * s1.transpose()).try_inverse().unwrap() * s1 * det.sigma2.transpose();
        let j2 = to_complex(&j2);
        for l in 0..est.d_hat {
            let u = det.u_inv.row(l).transpose();
            let resid = (&j2 * &u - &u * est.eigenvalues[l]).norm() / u.norm();
            assert!(resid <= 1e-6, "seed {seed} row {l}: {resid:e}");
        }
        let p = to_complex(&det.projection.p_hat);
        let q = to_complex(&det.projection.q_hat);
        let ra = (&est.a - &p * p.adjoint() * &est.a).camax();
        let rb = (&est.b - &q * q.adjoint() * &est.b).camax();
        assert!(ra <= 1e-12 && rb <= 1e-12);
    }
}

#[test]
fn d1_rank_certain_direct() {
    let cfg = EstimatorConfig::default();
    for seed in 0..40 {
        let (series, _) = generate_dgp(&DgpConfig::new(8, 8, 1, 300, seed)).unwrap();
        assert_eq!(estimate(&series, Method::Direct, &cfg).unwrap().d_hat, 1);
    }
}

#[test]
fn huge_threshold_gives_all_zero_spectrum() {
    let (series, _) = generate_dgp(&DgpConfig::new(6, 6, 2, 100, 1)).unwrap();
    let cfg = EstimatorConfig {
        delta1: 1e9,
        ..Default::default()
    };
    for method in [Method::Direct, Method::Refined] {
        assert_eq!(estimate(&series, method, &cfg).unwrap_err().name(), "AllZeroSpectrum");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn streamed_matches_shortcut(p in 2usize..=16, q in 2usize..=16, n in 10usize..=100, seed in any::<u64>(), k in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 1 + rng.random_range(0..p.min(q));
        let series = random_series(p, q, n, seed ^ 0xabc);
        let ph = orthonormal(p, d, &mut rng);
        let qh = orthonormal(q, d, &mut rng);
        let w = DVector::from_fn(d * d, |_, _| gaussian(&mut rng));
        let fast = projected_cov_z_eta(&series, &ph, &qh, &w, k, 0.0).unwrap();
        let slow = projected_cov_z_eta_streamed(&series, &ph, &qh, &w, k, 0.0).unwrap();
        prop_assert!((fast - slow).amax() <= 1e-10);
    }

    #[test]
    fn m1_symmetric_psd(seed in any::<u64>()) {
        let series = random_series(3, 2, 20, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xi: Vec<f64> = (0..20).map(|_| gaussian(&mut rng)).collect();
        let (m1, m2) = build_m(&series, &xi, 3, 0.0).unwrap();
        prop_assert!((&m1 - m1.transpose()).amax() <= 1e-12);
        let (e1, _) = sym_eigen_desc(&m1);
        let (e2, _) = sym_eigen_desc(&m2);
        prop_assert!(e1.iter().chain(&e2).all(|v| *v >= -1e-12));
    }

    #[test]
    fn projection_orthonormal(seed in any::<u64>(), d in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g1 = DMatrix::from_fn(7, 7, |_, _| gaussian(&mut rng));
        let g2 = DMatrix::from_fn(5, 5, |_, _| gaussian(&mut rng));
        let series = random_series(7, 5, 6, seed);
        let proj = project(&series, &(&g1 * g1.transpose()), &(&g2 * g2.transpose()), d).unwrap();
        let ip = proj.p_hat.transpose() * &proj.p_hat - DMatrix::identity(d, d);
        let iq = proj.q_hat.transpose() * &proj.q_hat - DMatrix::identity(d, d);
        prop_assert!(ip.amax() <= 1e-10 && iq.amax() <= 1e-10);
        prop_assert_eq!(proj.z.p(), d);
        prop_assert_eq!(proj.z.q(), d);
    }

    #[test]
    fn rho2_bounds_and_invariances(seed in any::<u64>(), cols in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = DMatrix::from_fn(6, cols, |_, _| gaussian(&mut rng));
        let est = DMatrix::from_fn(6, cols, |_, _| C64::new(gaussian(&mut rng), gaussian(&mut rng)));
        let r = rho2(&truth, &est);
        prop_assert!((0.0..=1.0).contains(&r));
        let mut rotated = est.clone();
        for mut c in rotated.column_iter_mut() {
            let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
            c *= phase;
        }
        let mut permuted = rotated.clone();
        permuted.swap_columns(0, cols - 1);
        prop_assert!((rho2(&truth, &permuted) - r).abs() <= 1e-12);
        prop_assert!(rho2(&truth, &to_complex(&truth)) <= 1e-12);
    }
}
