//! The oracle-equivalence suite behind the `verify` command: every
//! production routine against its brute-force reference.

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::coeffs::{d_zero, grunwald, CoefficientTable};
use crate::error::Result;
use crate::fdm::assemble_fdm_system;
use crate::fem::weighted_mass_apply;
use crate::history::{substantial_history_sum, HistoryWeights};
use crate::laplace::{euler_invert, InversionConfig};
use crate::manufactured::example2_lifted;
use crate::model::{ComplexVector, ModelParams, SolutionHistory, SpaceGrid, TimeGrid};
use crate::oracle::{
    adaptive_integrate, adaptive_rl_oracle, dense_history_oracle, dense_solve_oracle, example2_source_oracle,
    grunwald_oracle,
};
use crate::quadrature::{caputo_of, gauss_jacobi, gauss_legendre, rl_integral};

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Observed deviation.
    pub deviation: f64,
    pub tolerance: f64,
}

fn outcome(name: &str, deviation: Result<f64>, tolerance: f64) -> CheckOutcome {
    let deviation = deviation.unwrap_or(f64::INFINITY);
    CheckOutcome {
        name: name.into(),
        passed: deviation <= tolerance,
        deviation,
        tolerance,
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_vec(rng: &mut StdRng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// Runs every check with a fixed seed.
pub fn verify_all() -> Vec<CheckOutcome> {
    vec![
        outcome("grunwald vs product formula", grunwald_check(), 1e-14),
        outcome("d_0 closed form", d_zero_check(), 1e-15),
        outcome("history sum vs dense convolution (200 cases)", history_check(), 1e-13),
        outcome("tridiagonal solve vs dense elimination (M=128)", tridiag_check(), 1e-12),
        outcome("gauss-jacobi polynomial exactness", jacobi_check(), 1e-12),
        outcome("rl integral of e^{3t} vs adaptive", rl_check(), 1e-12),
        outcome("caputo of t e^{3t} vs adaptive", caputo_check(), 1e-12),
        outcome("example 2 source vs adaptive", example2_check(), 1e-10),
        outcome("weighted mass vs adaptive", weighted_mass_check(), 1e-12),
        outcome("inversion of 1/(p+2)", inversion_check(), 1e-8),
    ]
}

fn grunwald_check() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for gamma in [0.1, 0.3, 0.5, 0.8, 0.95] {
        let a = grunwald(gamma, 50)?;
        let b = grunwald_oracle(gamma, 50);
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).abs() / y.abs());
        }
    }
    Ok(worst)
}

fn d_zero_check() -> Result<f64> {
    let want = 1.0 - (-0.15f64).exp() * 0.3f64.sqrt();
    Ok((d_zero(0.5, 3.0, 0.1) - want).abs())
}

/// Largest deviation relative to (1/τ^γ) Σ|d_k|, the scale of the summands.
fn history_check() -> Result<f64> {
    let mut rng = StdRng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let m = rng.gen_range(2..=32);
        let n = rng.gen_range(1..=64);
        let gamma = rng.gen_range(0.05..0.95);
        let lambda = rng.gen_range(0.0..5.0);
        let p = c(rng.gen_range(0.0..10.0), rng.gen_range(-20.0..20.0));
        let params = ModelParams::unit_interval(gamma, lambda, p);
        let space = SpaceGrid::new(0.0, 1.0, m)?;
        let time = TimeGrid::new(1.0, n)?;
        let mut history = SolutionHistory::new(space, time, random_vec(&mut rng, m - 1).into())?;
        for _ in 0..n {
            history.push(random_vec(&mut rng, m - 1).into())?;
        }
        let coeffs = CoefficientTable::new(gamma, lambda, time.tau, n)?;
        let weights = HistoryWeights::for_grid(&params, &space, time.tau, n);
        let got = substantial_history_sum(&coeffs, &weights, &history, n)?;
        let rates: Vec<Complex64> = space.interior_nodes().iter().map(|&x| p * x * time.tau).collect();
        let levels: Vec<Vec<Complex64>> = history.levels().iter().map(|v| v.to_vec()).collect();
        let want = dense_history_oracle(&coeffs.d, coeffs.inv_tau_gamma(), &rates, &levels, n);
        let scale = coeffs.inv_tau_gamma() * coeffs.d.iter().map(|d| d.abs()).sum::<f64>();
        for (a, b) in got.iter().zip(&want) {
            worst = worst.max((a - b).norm() / scale);
        }
    }
    Ok(worst)
}

fn tridiag_check() -> Result<f64> {
    let mut rng = StdRng::seed_from_u64(3);
    let params = ModelParams::unit_interval(0.5, 3.0, c(5.0, 0.0));
    let grid = SpaceGrid::new(0.0, 1.0, 129)?;
    let tau = 1.0 / 128.0;
    let op = assemble_fdm_system(&params, &grid, tau, d_zero(0.5, 3.0, tau))?;
    let rhs = random_vec(&mut rng, 128);
    let x = op.solve(&ComplexVector::from_vec(rhs.clone()))?;
    let dense = op
        .to_dense()
        .into_iter()
        .map(|r| r.into_iter().map(|v| c(v, 0.0)).collect())
        .collect();
    let y = dense_solve_oracle(dense, rhs)?;
    let scale = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(x.iter().zip(&y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale)
}

fn jacobi_check() -> Result<f64> {
    // a random polynomial of degree 2K − 1 against the weight (1 − ξ)^{−γ}
    let mut rng = StdRng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for (gamma, order) in [(0.3, 4usize), (0.5, 8), (0.8, 16)] {
        let rule = gauss_jacobi(gamma, order)?;
        let coef: Vec<f64> = (0..2 * order).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let poly = |x: f64| coef.iter().rev().fold(0.0, |acc, &a| acc * x + a);
        let got: f64 = rule.apply(poly);
        // (1 − ξ)^{−γ} removed by ξ = 1 − u^{1/(1−γ)}
        let a = 1.0 - gamma;
        let want = adaptive_integrate(|u| c(poly(1.0 - u.powf(1.0 / a)) / a, 0.0), 0.0, 2f64.powf(a), 1e-14)?.re;
        worst = worst.max((got - want).abs() / want.abs().max(1.0));
    }
    Ok(worst)
}

fn rl_check() -> Result<f64> {
    let rule = gauss_jacobi(0.5, 32)?;
    let got: Complex64 = rl_integral(0.5, |s: f64| c((3.0 * s).exp(), 0.0), 0.5, &rule)?;
    let want = adaptive_rl_oracle(0.5, |s| c((3.0 * s).exp(), 0.0), 0.5, 1e-14)?;
    Ok((got - want).norm() / want.norm())
}

fn caputo_check() -> Result<f64> {
    let rule = gauss_jacobi(0.3, 32)?;
    let dv = |s: f64| c((1.0 + 3.0 * s) * (3.0 * s).exp(), 0.0);
    let got: Complex64 = caputo_of(0.3, dv, 1.0, &rule)?;
    let want = adaptive_rl_oracle(0.3, dv, 1.0, 1e-14)?;
    Ok((got - want).norm() / want.norm())
}

fn example2_check() -> Result<f64> {
    let (gamma, lambda, p) = (0.5, 3.0, c(0.0, 5.0));
    let params = ModelParams::unit_interval(gamma, lambda, p);
    let pr = example2_lifted(&params, &gauss_jacobi(gamma, 32)?)?;
    let got = pr.source.eval(0.5, 0.25);
    let want = example2_source_oracle(gamma, lambda, p, 0.5, 0.25, 1e-14)?;
    Ok((got - want).norm() / want.norm().max(1.0))
}

fn weighted_mass_check() -> Result<f64> {
    let mut rng = StdRng::seed_from_u64(4);
    let params = ModelParams::unit_interval(0.5, 0.0, c(0.0, 5.0));
    let grid = SpaceGrid::new(0.0, 1.0, 16)?;
    let (k, tau) = (3usize, 1.0 / 64.0);
    let coeffs = random_vec(&mut rng, 15);
    let got = weighted_mass_apply(k, &coeffs, &params, &grid, tau, &gauss_legendre(4)?)?;
    let h = grid.h;
    let node = |j: usize| if j == 0 || j == 16 { c(0.0, 0.0) } else { coeffs[j - 1] };
    let weight = |x: f64| (-params.p * x * (k as f64 * tau)).exp();
    let mut worst: f64 = 0.0;
    for m in 1..16 {
        let (xl, xm, xr) = (grid.node(m - 1), grid.node(m), grid.node(m + 1));
        let left = adaptive_integrate(
            |x| weight(x) * (node(m - 1) * ((xm - x) / h) + node(m) * ((x - xl) / h)) * ((x - xl) / h),
            xl,
            xm,
            1e-15,
        )?;
        let right = adaptive_integrate(
            |x| weight(x) * (node(m) * ((xr - x) / h) + node(m + 1) * ((x - xm) / h)) * ((xr - x) / h),
            xm,
            xr,
            1e-15,
        )?;
        let want = left + right;
        worst = worst.max((got[m - 1] - want).norm() / want.norm().max(h));
    }
    Ok(worst)
}

fn inversion_check() -> Result<f64> {
    let cfg = InversionConfig::default();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let a = 0.1 + 1.9 * i as f64 / 19.0;
        let v = euler_invert(a, &cfg, |p| Ok((p + 2.0).inv()))?;
        worst = worst.max((v - (-2.0 * a).exp()).abs());
    }
    Ok(worst)
}
