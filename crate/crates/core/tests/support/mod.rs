//! Independent oracles and deterministic property checks shared by the
//! integration tests and the acceptance runner.
#![allow(dead_code)]

pub mod naive;

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use tsgbm::compression::{ar_fit, log_spread_features, monomial_features, quantiles, FeatureMap};
use tsgbm::gbm::{fit_gbm, fit_gbm_traced, logsumexp, softmax_minimax_grad_hess, softmax_weights};
use tsgbm::gbm::{GbmParams, LossSpec};
use tsgbm::simulators::{
    state_space_simulate_with, stoch_vol_simulate, stoch_vol_trace, weibull_sample, GaussianNoise,
    ScriptedNoise, SimOptions, ZeroNoise, STATE_SPACE_OBS_STD,
};
use tsgbm::types::ObservationSequence;

pub type Check = Result<String, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn seq(v: Vec<f64>) -> ObservationSequence {
    ObservationSequence::new(v, "test").unwrap()
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

/// `max L <= S <= max L + ln(M) / K` and weights summing to one.
pub fn softmax_sandwich() -> Check {
    let mut r = rng(1);
    let mut worst_gap = 0.0f64;
    for case in 0..1000 {
        let m = r.random_range(1..200);
        let k = [1.0, 10.0, 1e3, 1e4][case % 4];
        let scale = [1e-3, 1.0, 50.0][case % 3];
        let v: Vec<f64> = (0..m).map(|_| scale * r.random::<f64>()).collect();
        let s = logsumexp(&v, k).map_err(|e| e.to_string())?;
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let upper = max + (m as f64).ln() / k;
        let slack = 1e-12 * max.abs().max(1.0);
        ensure!(s >= max - slack && s <= upper + slack, "case {case}: S={s}, max={max}, upper={upper}");
        let mut w = vec![0.0; m];
        softmax_weights(&v, k, &mut w);
        let sum: f64 = w.iter().sum();
        ensure!((sum - 1.0).abs() < 1e-12, "case {case}: weights sum to {sum}");
        ensure!(w.iter().all(|&x| x >= 0.0), "case {case}: negative weight");
        worst_gap = worst_gap.max((s - max) / (upper - max).max(f64::MIN_POSITIVE));
    }
    Ok(format!("1000 vectors, max (S-maxL)/(lnM/K) = {worst_gap:.3}"))
}

/// Analytic soft-max gradient against central differences of `S(p)`.
pub fn softmax_gradient_fd() -> Check {
    let mut worst = 0.0f64;
    for (i, &k) in [1.0, 1e3, 1e4].iter().enumerate() {
        let mut r = rng(10 + i as u64);
        let m = 40;
        let t: Vec<f64> = (0..m).map(|_| r.random::<f64>()).collect();
        let p: Vec<f64> = (0..m).map(|_| r.random::<f64>()).collect();
        // spread the top losses so several rows carry weight at large K
        let s_of = |p: &[f64]| {
            let l: Vec<f64> = p.iter().zip(&t).map(|(a, b)| (b - a) * (b - a)).collect();
            logsumexp(&l, k).unwrap()
        };
        let (g, h) = softmax_minimax_grad_hess(&p, &t, k).map_err(|e| e.to_string())?;
        let hsum: f64 = h.iter().sum();
        ensure!((hsum - 2.0).abs() < 1e-12, "K={k}: Hessian diagonal sums to {hsum}, expected 2");
        let step = 1e-7;
        let mut fd = vec![0.0; m];
        for j in 0..m {
            let mut up = p.clone();
            let mut dn = p.clone();
            up[j] += step;
            dn[j] -= step;
            fd[j] = (s_of(&up) - s_of(&dn)) / (2.0 * step);
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / norm(&g);
        ensure!(rel < 1e-4, "K={k}: relative gradient error {rel:e}");
        let gmax = g.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        for j in 0..m {
            let e = (g[j] - fd[j]).abs() / g[j].abs().max(1e-3 * gmax);
            ensure!(e < 1e-4, "K={k}: component {j} analytic {} vs fd {}", g[j], fd[j]);
        }
        worst = worst.max(rel);
    }
    Ok(format!("K in {{1, 1e3, 1e4}}, worst relative error {worst:.2e}"))
}

pub fn regression_data(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut r = rng(seed);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![r.random_range(-3.0..3.0), r.random_range(-3.0..3.0), r.random_range(0.0..1.0)])
        .collect();
    let y = x
        .iter()
        .map(|v| v[0].sin() + 0.5 * v[1] + 0.1 * r.sample::<f64, _>(StandardNormal))
        .collect();
    (x, y)
}

/// Training loss never increases across iterations with every row in every tree.
pub fn monotone_training_loss() -> Check {
    let (x, y) = regression_data(600, 3);
    let params = GbmParams {
        learning_rate: 0.1,
        iterations: 200,
        max_depth: 4,
        num_leaves: 8,
        bagging_fraction: 1.0,
        min_data_in_leaf: 10,
        l1_regularization: 1e-3,
        histogram_bins: 255,
    };
    let mut out = Vec::new();
    for loss in [LossSpec::squared(), LossSpec::softmax_minimax(1e3)] {
        let (_, trace) = fit_gbm_traced(&x, &y, &params, &loss, 7).map_err(|e| e.to_string())?;
        for (t, w) in trace.loss.windows(2).enumerate() {
            ensure!(w[1] <= w[0] + 1e-12, "{:?}: loss rose at iteration {t}: {} -> {}", loss.kind, w[0], w[1]);
        }
        let first = trace.loss[0];
        let last = *trace.loss.last().unwrap();
        ensure!(last < first, "{:?}: no progress ({first} -> {last})", loss.kind);
        out.push(format!("{:?} {first:.4}->{last:.4}", loss.kind));
    }
    Ok(out.join(", "))
}

/// Histogram GBM against exhaustive best-first trees on 200 rows.
pub fn gbm_matches_naive() -> Check {
    let mut r = rng(4);
    let n = 200;
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            vec![
                r.random::<f64>(),
                r.random_range(0..6) as f64,
                r.sample::<f64, _>(StandardNormal),
            ]
        })
        .collect();
    let y: Vec<f64> = x
        .iter()
        .map(|v| (3.0 * v[0]).cos() + 0.3 * v[1] - 0.2 * v[2] * v[2] + 0.05 * r.sample::<f64, _>(StandardNormal))
        .collect();
    let params = GbmParams {
        learning_rate: 0.3,
        iterations: 40,
        max_depth: 3,
        num_leaves: 6,
        bagging_fraction: 1.0,
        min_data_in_leaf: 5,
        l1_regularization: 0.05,
        histogram_bins: 255,
    };
    let model = fit_gbm(&x, &y, &params, &LossSpec::squared(), 0).map_err(|e| e.to_string())?;
    let oracle = naive::fit(&x, &y, &params);
    ensure!(model.trees.len() == oracle.trees.len(), "tree counts differ");
    for (t, (a, b)) in model.trees.iter().zip(&oracle.trees).enumerate() {
        ensure!(a.n_leaves() == b.n_leaves(), "tree {t}: {} vs {} leaves", a.n_leaves(), b.n_leaves());
    }
    let probe: Vec<Vec<f64>> = (0..300)
        .map(|_| vec![r.random::<f64>(), r.random_range(-1.0..6.0), 1.5 * r.sample::<f64, _>(StandardNormal)])
        .collect();
    let mut worst = 0.0f64;
    for row in x.iter().chain(&probe) {
        let a = model.predict_row(row).map_err(|e| e.to_string())?;
        let b = oracle.predict(row);
        worst = worst.max((a - b).abs());
    }
    ensure!(worst < 1e-8, "max prediction difference {worst:e}");
    Ok(format!("{} trees, max |diff| = {worst:.1e}", model.trees.len()))
}

/// Hand-computed quantiles plus affine equivariance.
pub fn quantile_oracle() -> Check {
    let y = seq((1..=9).map(f64::from).collect());
    let q = quantiles(&y, 4).map_err(|e| e.to_string())?;
    let expected = [2.6, 4.2, 5.8, 7.4];
    for (a, b) in q.iter().zip(expected) {
        ensure!((a - b).abs() < 1e-12, "quantiles {q:?}, expected {expected:?}");
    }
    let shuffled = seq(vec![9.0, 1.0, 5.0, 3.0, 7.0, 2.0, 8.0, 4.0, 6.0]);
    ensure!(quantiles(&shuffled, 4).unwrap() == q, "quantiles depend on order");
    let mut r = rng(5);
    let raw: Vec<f64> = (0..1001).map(|_| r.sample(StandardNormal)).collect();
    let base = quantiles(&seq(raw.clone()), 7).unwrap();
    let moved = quantiles(&seq(raw.iter().map(|v| 2.5 * v - 1.0).collect()), 7).unwrap();
    for (a, b) in base.iter().zip(&moved) {
        ensure!((2.5 * a - 1.0 - b).abs() < 1e-12, "not affine equivariant");
    }
    ensure!(quantiles(&y, 10).is_err(), "n > N accepted");
    Ok("hand values, order and affine checks".into())
}

fn ar2_series(c: f64, a1: f64, a2: f64, n: usize, noise: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let mut y = vec![1.0, 0.5];
    for k in 2..n {
        let e: f64 = r.sample(StandardNormal);
        y.push(c + a1 * y[k - 1] + a2 * y[k - 2] + noise * e);
    }
    y
}

/// Exact recovery, residual orthogonality, consistency and rank detection.
pub fn ar_oracle() -> Check {
    let exact = ar2_series(0.0, 1.2, -0.5, 120, 0.0, 0);
    let c = ar_fit(&seq(exact.clone()), 2, false).map_err(|e| e.to_string())?;
    ensure!((c[0] - 1.2).abs() < 1e-9 && (c[1] + 0.5).abs() < 1e-9, "noiseless AR(2) gave {c:?}");
    match ar_fit(&seq(exact), 3, false) {
        Err(tsgbm::Error::DegenerateFit { rank: 2, expected: 3 }) => {}
        other => return Err(format!("rank-2 regressors not detected: {other:?}")),
    }

    let noisy = ar2_series(0.0, 0.5, -0.3, 100_000, 1.0, 6);
    let c = ar_fit(&seq(noisy.clone()), 2, false).unwrap();
    ensure!((c[0] - 0.5).abs() < 0.01 && (c[1] + 0.3).abs() < 0.01, "AR(2) estimate {c:?}");

    let p = 4;
    let c = ar_fit(&seq(noisy.clone()), p, false).unwrap();
    let mut worst = 0.0f64;
    for j in 1..=p {
        let (mut dot, mut ee, mut xx) = (0.0, 0.0, 0.0);
        for k in p..noisy.len() {
            let fit: f64 = (0..p).map(|i| c[i] * noisy[k - 1 - i]).sum();
            let e = noisy[k] - fit;
            dot += e * noisy[k - j];
            ee += e * e;
            xx += noisy[k - j] * noisy[k - j];
        }
        worst = worst.max(dot.abs() / (ee * xx).sqrt());
    }
    ensure!(worst < 1e-8, "residuals correlate with a lag: {worst:e}");

    let shifted = ar2_series(2.0, 0.5, -0.3, 100_000, 1.0, 7);
    let c = ar_fit(&seq(shifted), 2, true).unwrap();
    ensure!((c[0] - 2.0).abs() < 0.05, "intercept {}", c[0]);
    Ok(format!("orthogonality {worst:.1e}"))
}

/// Monomial and log-spread expansions against explicit formulas.
pub fn feature_oracle() -> Check {
    let a = [2.0, 3.0, 5.0];
    let m = monomial_features(&a, 2);
    let expected = [2.0, 3.0, 5.0, 4.0, 9.0, 25.0, 6.0, 10.0, 15.0];
    ensure!(m == expected, "monomials {m:?}");
    ensure!(monomial_features(&a, 1) == a, "degree 1 is not the identity");
    let l = log_spread_features(&a).map_err(|e| e.to_string())?;
    let ln = |v: f64| v.ln();
    let expected = [ln(2.0), ln(3.0), ln(5.0), ln(3.0) - ln(2.0), ln(5.0) - ln(2.0), ln(5.0) - ln(3.0)];
    for (x, y) in l.iter().zip(expected) {
        ensure!((x - y).abs() < 1e-15, "log spread {l:?}");
    }
    ensure!(log_spread_features(&[1.0, 0.0]).is_err(), "log spread accepted zero");
    for n in 1..8 {
        let alpha: Vec<f64> = (1..=n).map(f64::from).collect();
        let map = FeatureMap::Monomial { degree: 2 };
        ensure!(map.expand(&alpha).unwrap().len() == map.output_len(n as usize), "length mismatch at n={n}");
        ensure!(map.output_len(n as usize) == (2 * n + n * (n - 1) / 2) as usize, "count at n={n}");
    }
    Ok("monomial order and counts, log spread".into())
}

fn weibull_cdf(x: f64, eta: f64, gamma: f64) -> f64 {
    1.0 - (-(x / eta).powf(gamma)).exp()
}

/// Kolmogorov-Smirnov distance of `n` draws from the Weibull CDF.
pub fn weibull_ks(eta: f64, gamma: f64, n: usize, seed: u64) -> f64 {
    let mut y = weibull_sample(eta, gamma, n, seed).unwrap().samples;
    y.sort_unstable_by(f64::total_cmp);
    let nf = n as f64;
    y.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = weibull_cdf(x, eta, gamma);
        d.max((i as f64 + 1.0) / nf - f).max(f - i as f64 / nf)
    })
}

pub const WEIBULL_ROWS: [(f64, f64); 5] = [(2.0, 2.0), (2.0, 8.0), (4.0, 2.0), (4.0, 8.0), (8.0, 2.0)];

pub fn weibull_ks_check() -> Check {
    let mut worst = 0.0f64;
    for (i, &(eta, gamma)) in WEIBULL_ROWS.iter().enumerate() {
        let d = weibull_ks(eta, gamma, 1_000_000, 100 + i as u64);
        ensure!(d < 0.005, "KS distance {d} at ({eta}, {gamma})");
        worst = worst.max(d);
    }
    Ok(format!("max KS distance {worst:.5}"))
}

/// Noise-free recursions of both dynamical models, by hand.
pub fn zero_noise_recursions() -> Check {
    let a = 0.7;
    let opts = SimOptions {
        burn_in: 3,
        initial_state: Some(vec![1.0, 0.5]),
    };
    let y = state_space_simulate_with(a, 12, &opts, &mut ZeroNoise).map_err(|e| e.to_string())?;
    let (mut x1, mut x2) = (1.0f64, 0.5f64);
    let mut expected = Vec::new();
    for k in 0..15 {
        if k >= 3 {
            expected.push(a * x1 + x2);
        }
        let n1 = a * x1;
        let n2 = x1 + a * a * x2;
        x1 = n1;
        x2 = n2;
    }
    for (u, v) in y.samples.iter().zip(&expected) {
        ensure!((u - v).abs() < 1e-14, "state-space {u} vs {v}");
    }

    let (sa, sb) = (0.2, 0.6);
    let opts = SimOptions {
        burn_in: 2,
        initial_state: Some(vec![0.3]),
    };
    let mut ones = ScriptedNoise::new(vec![vec![1.0; 32], vec![]]);
    let trace = stoch_vol_trace(sa, sb, 30, &opts, &mut ones).map_err(|e| e.to_string())?;
    let mut x = 0.3f64;
    for k in 0..32 {
        if k >= 2 {
            let i = k - 2;
            ensure!((trace.latent[i] - x).abs() < 1e-14, "latent {i}");
            ensure!((trace.observed[i] - (0.5 * x).exp()).abs() < 1e-14, "observed {i}");
        }
        x = sa + sb * x;
    }

    // single-channel script: only the observation noise is active
    let mut obs = ScriptedNoise::new(vec![vec![], vec![], vec![1.0, -2.0]]);
    let opts = SimOptions {
        burn_in: 0,
        initial_state: Some(vec![0.0, 0.0]),
    };
    let y = state_space_simulate_with(0.5, 3, &opts, &mut obs).unwrap();
    let want = [STATE_SPACE_OBS_STD, -2.0 * STATE_SPACE_OBS_STD, 0.0];
    ensure!(y.samples == want, "observation noise scaling {:?}", y.samples);
    Ok("state-space and volatility recursions exact".into())
}

/// `ln(y^2) = x + ln(r^2)` on a noisy volatility trace.
pub fn volatility_transform_identity() -> Check {
    let opts = SimOptions::default();
    let mut noise = GaussianNoise(<tsgbm::seed::Rng as SeedableRng>::seed_from_u64(9));
    let trace = stoch_vol_trace(0.1, 0.75, 5000, &opts, &mut noise).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for i in 0..5000 {
        let lhs = (trace.observed[i] * trace.observed[i]).ln();
        let rhs = trace.latent[i] + (trace.shocks[i] * trace.shocks[i]).ln();
        worst = worst.max((lhs - rhs).abs());
    }
    ensure!(worst < 1e-10, "identity error {worst:e}");
    let raw = stoch_vol_simulate(0.1, 0.75, 500, 3, false).unwrap();
    let t = stoch_vol_simulate(0.1, 0.75, 500, 3, true).unwrap();
    for (a, b) in raw.samples.iter().zip(&t.samples) {
        ensure!(((a * a).ln() - b).abs() < 1e-15, "transformed output differs");
    }
    Ok(format!("max error {worst:.1e}"))
}

pub fn property_suite() -> Vec<(&'static str, fn() -> Check)> {
    vec![
        ("soft-max sandwich bound", softmax_sandwich as fn() -> Check),
        ("soft-max gradient vs finite differences", softmax_gradient_fd),
        ("monotone training loss", monotone_training_loss),
        ("GBM vs naive exhaustive trees", gbm_matches_naive),
        ("quantile oracle", quantile_oracle),
        ("AR oracle", ar_oracle),
        ("feature oracle", feature_oracle),
        ("zero-noise recursions", zero_noise_recursions),
        ("volatility transform identity", volatility_transform_identity),
        ("Weibull KS at N=1e6", weibull_ks_check),
    ]
}
