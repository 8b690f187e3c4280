use rayon::prelude::*;

use slds_core::fbm::{
    fgn_autocovariance, sample_fbm, sample_fbm_cholesky, two_sided_sample, CholeskyFactor, HurstParameter,
};
use slds_core::seed;
use slds_core::stats::{covariance_estimate, mean_estimate};

/// fBm covariance `½(s^{2H} + t^{2H} − |t−s|^{2H})`.
fn fbm_cov(s: f64, t: f64, h: f64) -> f64 {
    0.5 * (s.abs().powf(2.0 * h) + t.abs().powf(2.0 * h) - (t - s).abs().powf(2.0 * h))
}

#[test]
fn autocovariance_matches_fbm_covariance() {
    let dt = 0.03;
    for h in [0.55, 0.75, 0.95] {
        let hp = HurstParameter::new(h).unwrap();
        for k in 0..20u64 {
            let (a, b) = (k as f64 * dt, (k + 1) as f64 * dt);
            // Cov(β(b) − β(a), β(dt) − β(0))
            let oracle = fbm_cov(b, dt, h) - fbm_cov(a, dt, h);
            let got = fgn_autocovariance(k, hp, dt);
            assert!((got - oracle).abs() < 1e-13, "h={h} k={k}: {got} vs {oracle}");
        }
    }
}

#[test]
fn cholesky_factor_reproduces_the_covariance_matrix() {
    let (n, dt) = (40, 0.05);
    let h = HurstParameter::new(0.8).unwrap();
    let factor = CholeskyFactor::new(n, h, dt).unwrap();
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            factor.increments(&e)
        })
        .collect();
    for i in 0..n {
        for k in 0..n {
            let lltt: f64 = (0..n).map(|j| columns[j][i] * columns[j][k]).sum();
            let expected = fgn_autocovariance(i.abs_diff(k) as u64, h, dt);
            assert!((lltt - expected).abs() < 1e-12, "({i},{k})");
        }
    }
}

#[test]
fn brownian_reference_has_uncorrelated_increments() {
    let h = HurstParameter::brownian_reference();
    let dt = 0.1;
    let pairs: Vec<(f64, f64)> = (0..20_000u64)
        .into_par_iter()
        .map(|i| {
            let p = sample_fbm(2, h, dt, seed::realization_seed(11, i)).unwrap();
            (p.value(1), p.value(2) - p.value(1))
        })
        .collect();
    let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let cov = covariance_estimate(&x, &y);
    assert!(cov.agrees_with(0.0, 3.0), "{cov:?}");
    let var = mean_estimate(&x.iter().map(|v| v * v).collect::<Vec<_>>());
    assert!(var.agrees_with(dt, 3.0), "{var:?}");
}

#[test]
fn both_samplers_have_the_same_variance_law() {
    let h = HurstParameter::new(0.75).unwrap();
    let dt = 0.02;
    let n_paths = 6000u64;
    let draws: Vec<(f64, f64)> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let s = seed::realization_seed(12, i);
            let fft = sample_fbm(50, h, dt, s).unwrap().value(50);
            let chol = sample_fbm_cholesky(50, h, dt, s).unwrap().value(50);
            (fft * fft, chol * chol)
        })
        .collect();
    let target = 1.0f64;
    for col in [0, 1] {
        let xs: Vec<f64> = draws.iter().map(|d| if col == 0 { d.0 } else { d.1 }).collect();
        let est = mean_estimate(&xs);
        assert!(est.agrees_with(target, 3.0), "sampler {col}: {est:?}");
    }
}

#[test]
fn variance_grows_like_t_to_the_2h() {
    let h = HurstParameter::new(0.75).unwrap();
    let dt = 0.05;
    let samples: Vec<[f64; 3]> = (0..8000u64)
        .into_par_iter()
        .map(|i| {
            let p = sample_fbm(80, h, dt, seed::realization_seed(13, i)).unwrap();
            [10, 40, 80].map(|k| p.value(k).powi(2))
        })
        .collect();
    for (j, k) in [10usize, 40, 80].iter().enumerate() {
        let xs: Vec<f64> = samples.iter().map(|s| s[j]).collect();
        let t = *k as f64 * dt;
        let est = mean_estimate(&xs);
        assert!(est.agrees_with(t.powf(1.5), 3.0), "t={t}: {est:?}");
    }
}

#[test]
fn two_sided_covariance_across_the_origin() {
    let h = HurstParameter::new(0.75).unwrap();
    let dt = 0.05;
    let pairs: Vec<(f64, f64)> = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let p = two_sided_sample(1.0, 1.0, h, dt, seed::realization_seed(14, i)).unwrap();
            (p.value_at(-1.0).unwrap(), p.value_at(1.0).unwrap())
        })
        .collect();
    let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let products: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a * b).collect();
    let est = mean_estimate(&products);
    let target = fbm_cov(-1.0, 1.0, 0.75);
    assert!((target - (1.0 - 2f64.sqrt())).abs() < 1e-15);
    assert!(est.agrees_with(target, 3.0), "{est:?} vs {target}");
}
