use num_complex::Complex64;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tfk_core::coeffs::{grunwald, CoefficientTable};
use tfk_core::history::{substantial_history_sum, HistoryWeights};
use tfk_core::oracle::dense_history_oracle;
use tfk_core::special::gamma as gamma_fn;
use tfk_core::{ComplexVector, ModelParams, SolutionHistory, SpaceGrid, TimeGrid};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_history(rng: &mut StdRng, space: SpaceGrid, time: TimeGrid) -> SolutionHistory {
    let sites = space.interior_len();
    let draw = |rng: &mut StdRng| -> ComplexVector {
        (0..sites)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect::<Vec<_>>()
            .into()
    };
    let mut h = SolutionHistory::new(space, time, draw(rng)).unwrap();
    for _ in 0..time.n_count {
        h.push(draw(rng)).unwrap();
    }
    h
}

#[test]
fn history_sum_matches_dense_oracle_on_200_cases() {
    let mut rng = StdRng::seed_from_u64(11);
    for case in 0..200 {
        let m = rng.gen_range(2..=32);
        let n = rng.gen_range(1..=64);
        let gamma = rng.gen_range(0.05..0.95);
        let lambda = rng.gen_range(0.0..5.0);
        let p = c(rng.gen_range(0.0..10.0), rng.gen_range(-20.0..20.0));
        let params = ModelParams::unit_interval(gamma, lambda, p);
        let space = SpaceGrid::new(0.0, 1.0, m).unwrap();
        let time = TimeGrid::new(rng.gen_range(0.1..2.0), n).unwrap();
        let history = random_history(&mut rng, space, time);
        let coeffs = CoefficientTable::new(gamma, lambda, time.tau, n).unwrap();
        let weights = HistoryWeights::for_grid(&params, &space, time.tau, n);
        let level = rng.gen_range(0..=n);
        let got = substantial_history_sum(&coeffs, &weights, &history, level).unwrap();
        let rates: Vec<Complex64> = space.interior_nodes().iter().map(|&x| p * x * time.tau).collect();
        let levels: Vec<Vec<Complex64>> = history.levels().iter().map(|v| v.to_vec()).collect();
        let want = dense_history_oracle(&coeffs.d, coeffs.inv_tau_gamma(), &rates, &levels, level);
        // scale of the summands: (1/τ^γ) Σ|d_k| max|G|
        let scale = coeffs.inv_tau_gamma() * coeffs.d[..=level].iter().map(|d| d.abs()).sum::<f64>();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() <= 1e-13 * scale, "case {case}: {a} vs {b} (scale {scale})");
        }
    }
}

#[test]
fn constant_history_decays_like_the_derivative_of_a_constant() {
    // λ = p = 0, G ≡ 1: sum = Q_n/τ^γ ≈ t_n^{−γ}/Γ(1−γ)
    let gamma = 0.4;
    let params = ModelParams::unit_interval(gamma, 0.0, c(0.0, 0.0));
    let space = SpaceGrid::new(0.0, 1.0, 4).unwrap();
    let mut prev = f64::INFINITY;
    for n in [32usize, 64, 128, 256] {
        let time = TimeGrid::new(1.0, n).unwrap();
        let ones = ComplexVector::from_vec(vec![c(1.0, 0.0); 3]);
        let mut h = SolutionHistory::new(space, time, ones.clone()).unwrap();
        for _ in 0..n {
            h.push(ones.clone()).unwrap();
        }
        let coeffs = CoefficientTable::new(gamma, 0.0, time.tau, n).unwrap();
        let w = HistoryWeights::for_grid(&params, &space, time.tau, n);
        let v = substantial_history_sum(&coeffs, &w, &h, n).unwrap()[1].re;
        let want = 1.0 / gamma_fn(1.0 - gamma);
        let err = (v - want).abs() / want;
        assert!(err < 0.6 * prev, "n={n}: {err} after {prev}");
        prev = err;
    }
    assert!(prev < 1e-2);
}

#[test]
fn factorization_through_the_exponential() {
    // Σ d_k e^{−pUkτ} G^{n−k} = e^{−ct_n} Σ g_k e^{ct_{n−k}} G^{n−k} + (d_0 − 1) G^n
    let (gamma, lambda, p) = (0.6, 2.0, c(3.0, 7.0));
    let params = ModelParams::unit_interval(gamma, lambda, p);
    let space = SpaceGrid::new(0.0, 1.0, 8).unwrap();
    let time = TimeGrid::new(1.0, 40).unwrap();
    let g_of = |x: f64, t: f64| c(t.sin() * (1.0 + x), t * t * x);
    let h = SolutionHistory::sample(space, time, g_of);
    let coeffs = CoefficientTable::new(gamma, lambda, time.tau, 40).unwrap();
    let w = HistoryWeights::for_grid(&params, &space, time.tau, 40);
    let g = grunwald(gamma, 40).unwrap();
    for n in [1usize, 7, 40] {
        let got = substantial_history_sum(&coeffs, &w, &h, n).unwrap();
        for (i, &x) in space.interior_nodes().iter().enumerate() {
            let rate = p * x + lambda;
            let tn = time.level(n);
            let mut s = c(0.0, 0.0);
            for k in 0..=n {
                let t = time.level(n - k);
                s += (rate * t).exp() * g_of(x, t) * g[k];
            }
            let want = ((-rate * tn).exp() * s + g_of(x, tn) * (coeffs.d[0] - 1.0)) * coeffs.inv_tau_gamma();
            assert!((got[i] - want).norm() <= 1e-13 * want.norm().max(1.0), "n={n} x={x}: {} vs {want}", got[i]);
        }
    }
}

#[test]
fn truncation_error_is_first_order() {
    // G = e^{−ct}t²: the sum approximates e^{−ct}·2t^{2−γ}/Γ(3−γ) − e^{−γλτ}λ^γ G
    let (gamma, lambda, p) = (0.5, 3.0, c(5.0, 0.0));
    let params = ModelParams::unit_interval(gamma, lambda, p);
    let space = SpaceGrid::new(0.0, 1.0, 2).unwrap();
    let x = 0.5;
    let rate = p * x + lambda;
    let mut errs = vec![];
    for n in [32usize, 64, 128, 256, 512] {
        let time = TimeGrid::new(1.0, n).unwrap();
        let h = SolutionHistory::sample(space, time, |x, t| (-(p * x + lambda) * t).exp() * t * t);
        let coeffs = CoefficientTable::new(gamma, lambda, time.tau, n).unwrap();
        let w = HistoryWeights::for_grid(&params, &space, time.tau, n);
        let got = substantial_history_sum(&coeffs, &w, &h, n).unwrap()[0];
        let g1 = (-rate).exp();
        let want = g1 * 2.0 / gamma_fn(3.0 - gamma) - (-gamma * lambda * time.tau).exp() * lambda.powf(gamma) * g1;
        errs.push((got - want).norm());
    }
    for pair in errs.windows(2) {
        let r = pair[0] / pair[1];
        assert!((1.8..2.2).contains(&r), "{errs:?}");
    }
}

/// Product-rectangle Riemann–Liouville integral of order α at t_n from
/// values v(t_1..t_n).
fn rl_rectangle(alpha: f64, tau: f64, v: &[Complex64], n: usize) -> Complex64 {
    let tn = n as f64 * tau;
    let mut s = c(0.0, 0.0);
    for j in 1..=n {
        let w = (tn - (j - 1) as f64 * tau).powf(alpha) - (tn - j as f64 * tau).powf(alpha);
        s += v[j] * w;
    }
    s / gamma_fn(alpha + 1.0)
}

/// Grünwald–Letnikov derivative of order α at t_n.
fn gl_derivative(g: &[f64], tau: f64, alpha: f64, v: &[Complex64], n: usize) -> Complex64 {
    let mut s = c(0.0, 0.0);
    for k in 0..=n {
        s += v[n - k] * g[k];
    }
    s / tau.powf(alpha)
}

fn halving_ratios(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| w[0] / w[1]).collect()
}

#[test]
fn derivative_of_integral_returns_the_function() {
    let gamma = 0.35;
    let v = |t: f64| c(t.sin() + t * t, t.powi(3));
    let mut errs = vec![];
    for n in [32usize, 64, 128, 256] {
        let tau = 1.0 / n as f64;
        let vals: Vec<Complex64> = (0..=n).map(|j| v(j as f64 * tau)).collect();
        let int: Vec<Complex64> = (0..=n).map(|m| rl_rectangle(gamma, tau, &vals, m)).collect();
        let g = grunwald(gamma, n).unwrap();
        errs.push((gl_derivative(&g, tau, gamma, &int, n) - v(1.0)).norm());
    }
    for r in halving_ratios(&errs) {
        assert!((1.7..2.3).contains(&r), "{errs:?}");
    }
}

#[test]
fn integral_of_derivative_returns_the_function() {
    let gamma = 0.7;
    let v = |t: f64| c(t.sin() + t * t, t.powi(3));
    let mut errs = vec![];
    for n in [32usize, 64, 128, 256] {
        let tau = 1.0 / n as f64;
        let vals: Vec<Complex64> = (0..=n).map(|j| v(j as f64 * tau)).collect();
        let g = grunwald(gamma, n).unwrap();
        let der: Vec<Complex64> = (0..=n).map(|m| gl_derivative(&g, tau, gamma, &vals, m)).collect();
        errs.push((rl_rectangle(gamma, tau, &der, n) - v(1.0)).norm());
    }
    for r in halving_ratios(&errs) {
        assert!((1.7..2.3).contains(&r), "{errs:?}");
    }
}

#[test]
fn substantial_derivative_two_ways() {
    // [c + ∂_t](e^{−ct} I^γ(e^{ct}G)) and e^{−ct} D^{1−γ}(e^{ct}G), discretized
    // independently, differ by O(τ).
    let (gamma, rate) = (0.4, c(3.0, 5.0));
    let g_of = |t: f64| c(t * t, t.sin());
    let t_end = 1.0;
    let mut errs = vec![];
    for n in [64usize, 128, 256, 512] {
        let tau = t_end / n as f64;
        let lifted: Vec<Complex64> = (0..=n).map(|j| {
            let t = j as f64 * tau;
            (rate * t).exp() * g_of(t)
        }).collect();
        let outer = |m: usize| (-rate * (m as f64 * tau)).exp() * rl_rectangle(gamma, tau, &lifted, m);
        let first = rate * outer(n) + (outer(n) - outer(n - 1)) / tau;
        let g = grunwald(1.0 - gamma, n).unwrap();
        let second = (-rate * t_end).exp() * gl_derivative(&g, tau, 1.0 - gamma, &lifted, n);
        errs.push((first - second).norm());
    }
    for r in halving_ratios(&errs) {
        assert!((1.7..2.3).contains(&r), "{errs:?}");
    }
}

proptest! {
    #[test]
    fn weights_never_grow(re in 0.0f64..50.0, im in -500.0f64..500.0, tau in 1e-4f64..0.1) {
        let params = ModelParams::unit_interval(0.5, 1.0, c(re, im));
        let space = SpaceGrid::new(0.0, 1.0, 16).unwrap();
        let w = HistoryWeights::for_grid(&params, &space, tau, 200);
        for k in 0..=200 {
            for (s, &x) in space.interior_nodes().iter().enumerate() {
                let v = w.get(s, k);
                prop_assert!(v.norm() <= 1.0 + 1e-12);
                let direct = (-c(re, im) * x * (k as f64 * tau)).exp();
                prop_assert!((v - direct).norm() <= 1e-11);
            }
        }
    }
}
