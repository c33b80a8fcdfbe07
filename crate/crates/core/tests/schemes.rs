use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tfk_core::coeffs::{d_zero, CoefficientTable};
use tfk_core::fdm::{assemble_fdm_system, march_fdm, march_fdm_final};
use tfk_core::fem::{assemble_fem, fem_load, march_fem, weighted_mass_apply, FemOptions};
use tfk_core::history::{substantial_history_sum, HistoryWeights};
use tfk_core::manufactured::{
    example1, example1_lifted, example2, example2_lifted, lift_boundary, ManufacturedProblem, Profile,
};
use tfk_core::norms::{l2_h, max_h, spacetime_norms};
use tfk_core::oracle::{adaptive_integrate, dense_solve_oracle, example2_source_oracle, grunwald_oracle};
use tfk_core::quadrature::{gauss_jacobi, gauss_legendre};
use tfk_core::{ComplexVector, IcVariant, ModelParams, SolutionHistory, SpaceGrid, SpaceTimeFn, TimeGrid};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn zero_source(_: f64, _: f64) -> Complex64 {
    ZERO
}

#[test]
fn stability_bound_holds_for_every_step_size() {
    let mut rng = StdRng::seed_from_u64(21);
    let space = SpaceGrid::new(0.0, 1.0, 32).unwrap();
    let modes: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.0..6.0)))
        .collect();
    let forced = move |x: f64, t: f64| {
        modes
            .iter()
            .enumerate()
            .map(|(j, &(a, b, w))| c(a, b) * ((j + 1) as f64 * std::f64::consts::PI * x).sin() * (w * t).cos())
            .sum::<Complex64>()
    };
    for (gamma, lambda, p) in [(0.3, 3.0, c(1.0, 1.0)), (0.8, 0.0, c(0.0, 10.0)), (0.5, 5.0, c(5.0, 0.0))] {
        let params = ModelParams::unit_interval(gamma, lambda, p);
        for n in [8usize, 32, 128, 1024] {
            let time = TimeGrid::new(1.0, n).unwrap();
            let tau = time.tau;
            let ic: ComplexVector = (0..31).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect::<Vec<_>>().into();
            let d0 = d_zero(gamma, lambda, tau);
            for with_source in [false, true] {
                let src: &dyn SpaceTimeFn = if with_source { &forced } else { &zero_source };
                let h = march_fdm(&params, &space, &time, src, &ic, IcVariant::ZeroIc).unwrap();
                let k = params.k_gamma;
                let mut lhs = 0.0;
                let mut f_sum = 0.0;
                let init = tau.powf(1.0 - gamma) * d0 * l2_h(&ic, &space).powi(2);
                for level in 1..=n {
                    lhs += k * tau * max_h(h.level(level).unwrap()).powi(2);
                    let f = ComplexVector::from_fn(&space, |x| src.eval(x, time.level(level)));
                    f_sum += l2_h(&f, &space).powi(2);
                    let rhs = tau / (12.0 * k) * f_sum + init;
                    assert!(lhs <= rhs, "γ={gamma} N={n} L={level} src={with_source}: {lhs} > {rhs}");
                }
            }
        }
    }
}

/// Plain Grünwald subdiffusion march with dense matrices.
fn dense_subdiffusion(gamma: f64, k: f64, space: &SpaceGrid, time: &TimeGrid, f: &dyn Fn(f64, f64) -> Complex64) -> Vec<Vec<Complex64>> {
    let m = space.interior_len();
    let g = grunwald_oracle(gamma, time.n_count);
    let inv = time.tau.powf(-gamma);
    let h2 = space.h * space.h;
    let a: Vec<Vec<Complex64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let v = if i == j {
                        inv + 2.0 * k / h2
                    } else if i.abs_diff(j) == 1 {
                        -k / h2
                    } else {
                        0.0
                    };
                    c(v, 0.0)
                })
                .collect()
        })
        .collect();
    let xs = space.interior_nodes();
    let mut levels = vec![vec![ZERO; m]];
    for n in 1..=time.n_count {
        let t = time.level(n);
        let rhs: Vec<Complex64> = (0..m)
            .map(|i| {
                let mut s = f(xs[i], t);
                for kk in 1..=n {
                    s -= levels[n - kk][i] * g[kk] * inv;
                }
                s
            })
            .collect();
        levels.push(dense_solve_oracle(a.clone(), rhs).unwrap());
    }
    levels
}

#[test]
fn reduces_to_plain_subdiffusion() {
    let gamma = 0.45;
    let params = ModelParams::unit_interval(gamma, 0.0, ZERO);
    let space = SpaceGrid::new(0.0, 1.0, 24).unwrap();
    let time = TimeGrid::new(0.7, 30).unwrap();
    let f = |x: f64, t: f64| c((3.0 * x).sin() * (1.0 + t), x * t);
    let h = march_fdm(&params, &space, &time, &f, &ComplexVector::zeros(23), IcVariant::ZeroIc).unwrap();
    let dense = dense_subdiffusion(gamma, 1.0, &space, &time, &f);
    for n in 1..=30 {
        let scale = dense[n].iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (a, b) in h.level(n).unwrap().iter().zip(&dense[n]) {
            assert!((a - b).norm() <= 1e-12 * scale, "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn exact_solution_leaves_a_vanishing_residual() {
    // residual of the lifted Example 1 solution in the difference scheme
    let params = ModelParams::unit_interval(0.5, 3.0, c(5.0, 0.0));
    let pr = example1_lifted(&params).unwrap();
    let space = SpaceGrid::new(0.0, 1.0, 512).unwrap();
    let mut prev = f64::INFINITY;
    for n in [16usize, 32, 64] {
        let time = TimeGrid::new(1.0, n).unwrap();
        let exact = pr.exact_history(space, time).unwrap();
        let coeffs = CoefficientTable::new(params.gamma, params.lambda, time.tau, n).unwrap();
        let w = HistoryWeights::for_grid(&params, &space, time.tau, n);
        let op = assemble_fdm_system(&params, &space, time.tau, coeffs.d[0]).unwrap();
        let mut worst: f64 = 0.0;
        for level in 1..=n {
            let lhs = substantial_history_sum(&coeffs, &w, &exact, level).unwrap();
            let g = exact.level(level).unwrap();
            // op·G = (d_0/τ^γ)G − K H G
            let khg: Vec<Complex64> = op.apply(g).iter().zip(g.iter()).map(|(a, b)| b * (coeffs.d[0] * coeffs.inv_tau_gamma()) - a).collect();
            let f = ComplexVector::from_fn(&space, |x| pr.source.eval(x, time.level(level)));
            for i in 0..g.len() {
                worst = worst.max((lhs[i] - khg[i] - f[i]).norm());
            }
        }
        if prev.is_finite() {
            let r = prev / worst;
            assert!((1.6..2.4).contains(&r), "N={n}: {prev} -> {worst}");
        }
        prev = worst;
    }
}

#[test]
fn lifting_then_reconstructing_converges_to_the_exact_solution() {
    let params = ModelParams::unit_interval(0.3, 3.0, c(1.0, 1.0));
    let rule = gauss_jacobi(0.3, 32).unwrap();
    let g_problem = example1(&params).unwrap();
    let lifted = lift_boundary(&g_problem, &params, &rule).unwrap();
    let space = SpaceGrid::new(0.0, 1.0, 256).unwrap();
    let mut errs = vec![];
    for n in [16usize, 32, 64] {
        let time = TimeGrid::new(1.0, n).unwrap();
        let w = march_fdm(&params, &space, &time, lifted.problem.source.as_ref(), &ComplexVector::zeros(255), IcVariant::ZeroIc).unwrap();
        let g = lifted.reconstruct(&w).unwrap();
        let exact = g_problem.exact_history(space, time).unwrap();
        errs.push(spacetime_norms(&g.difference(&exact).unwrap()).st_0prime_hinf);
    }
    for pair in errs.windows(2) {
        let r = pair[0] / pair[1];
        assert!((1.8..2.2).contains(&r), "{errs:?}");
    }
}

#[test]
fn fem_and_fdm_agree_under_refinement() {
    let params = ModelParams::unit_interval(0.5, 3.0, c(5.0, 0.0));
    let pr = example1_lifted(&params).unwrap();
    let mut prev = f64::INFINITY;
    for m in [16usize, 32, 64, 128] {
        let space = SpaceGrid::new(0.0, 1.0, m).unwrap();
        let time = TimeGrid::new(1.0, m).unwrap();
        let zero = ComplexVector::zeros(m - 1);
        let a = march_fdm_final(&params, &space, &time, pr.source.as_ref(), &zero, IcVariant::ZeroIc).unwrap();
        let b = march_fem(&params, &space, &time, pr.source.as_ref(), &|_| ZERO, IcVariant::ZeroIc, FemOptions::default()).unwrap();
        let diff = max_h(&a.sub(b.final_coefficients()).unwrap());
        assert!(diff < 0.6 * prev, "M={m}: {diff} after {prev}");
        prev = diff;
    }
}

#[test]
fn fem_steps_satisfy_the_galerkin_equations() {
    let params = ModelParams::unit_interval(0.8, 3.0, c(0.0, 10.0));
    let pr = example1_lifted(&params).unwrap();
    let space = SpaceGrid::new(0.0, 1.0, 24).unwrap();
    let time = TimeGrid::new(1.0, 20).unwrap();
    let sol = march_fem(&params, &space, &time, pr.source.as_ref(), &|_| ZERO, IcVariant::ZeroIc, FemOptions::default()).unwrap();
    let rule = gauss_legendre(FemOptions::default().quad_order).unwrap();
    let coeffs = CoefficientTable::new(params.gamma, params.lambda, time.tau, 20).unwrap();
    let mats = assemble_fem(&space, &params, time.tau, coeffs.d[0]).unwrap();
    for n in 1..=20 {
        let gn = sol.coefficients(n).unwrap();
        let mut lhs = mats.stiffness.apply(gn).into_inner();
        lhs.iter_mut().for_each(|v| *v *= params.k_gamma);
        let mut scale: f64 = 0.0;
        for k in 0..=n {
            let wm = weighted_mass_apply(k, sol.coefficients(n - k).unwrap(), &params, &space, time.tau, &rule).unwrap();
            for (l, v) in lhs.iter_mut().zip(wm.iter()) {
                let term = v * (coeffs.d[k] * coeffs.inv_tau_gamma());
                scale = scale.max(term.norm());
                *l += term;
            }
        }
        let load = fem_load(pr.source.as_ref(), time.level(n), &space, &rule).unwrap();
        for (l, f) in lhs.iter().zip(load.iter()) {
            assert!((l - f).norm() <= 1e-11 * scale.max(f.norm()), "n={n}: {l} vs {f}");
        }
    }
}

#[test]
fn weighted_mass_matches_adaptive_quadrature() {
    let mut rng = StdRng::seed_from_u64(4);
    let params = ModelParams::unit_interval(0.5, 0.0, c(0.0, 5.0));
    let space = SpaceGrid::new(0.0, 1.0, 16).unwrap();
    let tau = 1.0 / 64.0;
    let k = 3;
    let coeffs: Vec<Complex64> = (0..15).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let rule = gauss_legendre(4).unwrap();
    let got = weighted_mass_apply(k, &coeffs, &params, &space, tau, &rule).unwrap();
    let h = space.h;
    let node = |j: usize| if j == 0 || j == 16 { ZERO } else { coeffs[j - 1] };
    // G_h on element [x_j, x_{j+1}]
    let gh = |j: usize, x: f64| node(j) * ((space.node(j + 1) - x) / h) + node(j + 1) * ((x - space.node(j)) / h);
    for m in 1..16 {
        let weight = |x: f64| (-params.p * x * (k as f64 * tau)).exp();
        let left = adaptive_integrate(|x| weight(x) * gh(m - 1, x) * ((x - space.node(m - 1)) / h), space.node(m - 1), space.node(m), 1e-15).unwrap();
        let right = adaptive_integrate(|x| weight(x) * gh(m, x) * ((space.node(m + 1) - x) / h), space.node(m), space.node(m + 1), 1e-15).unwrap();
        let want = left + right;
        assert!((got[m - 1] - want).norm() <= 1e-12 * want.norm().max(h), "m={m}: {} vs {want}", got[m - 1]);
    }
}

#[test]
fn load_vector_matches_adaptive_quadrature() {
    let params = ModelParams::unit_interval(0.5, 3.0, c(5.0, 0.0));
    let pr = example1_lifted(&params).unwrap();
    let space = SpaceGrid::new(0.0, 1.0, 64).unwrap();
    let rule = gauss_legendre(4).unwrap();
    let t = 0.5;
    let got = fem_load(pr.source.as_ref(), t, &space, &rule).unwrap();
    let h = space.h;
    for m in 1..64 {
        let xm = space.node(m);
        let hat = |x: f64| 1.0 - (x - xm).abs() / h;
        let want = adaptive_integrate(|x| pr.source.eval(x, t) * hat(x), xm - h, xm, 1e-16).unwrap()
            + adaptive_integrate(|x| pr.source.eval(x, t) * hat(x), xm, xm + h, 1e-16).unwrap();
        assert!((got[m - 1] - want).norm() <= 1e-12 * want.norm().max(h), "m={m}: {} vs {want}", got[m - 1]);
    }
}

#[test]
fn example2_source_matches_adaptive_oracle() {
    let (gamma, lambda, p) = (0.5, 3.0, c(0.0, 5.0));
    let params = ModelParams::unit_interval(gamma, lambda, p);
    let rule = gauss_jacobi(gamma, 32).unwrap();
    let pr = example2_lifted(&params, &rule).unwrap();
    for (x, t) in [(0.5, 0.25), (0.1, 0.5), (0.9, 0.01)] {
        let got = pr.source.eval(x, t);
        let want = example2_source_oracle(gamma, lambda, p, x, t, 1e-14).unwrap();
        assert!((got - want).norm() <= 1e-10 * want.norm().max(1.0), "({x},{t}): {got} vs {want}");
    }
}

#[test]
fn example2_source_is_bounded_near_zero() {
    let params = ModelParams::unit_interval(0.8, 5.0, c(0.0, 5.0));
    let rule = gauss_jacobi(0.8, 32).unwrap();
    for pr in [example2(&params, &rule).unwrap(), example2_lifted(&params, &rule).unwrap()] {
        let mut prev: Option<Complex64> = None;
        for j in 0..=60 {
            let t = 0.5 * 10f64.powf(-(j as f64) / 6.0);
            let v = pr.source.eval(0.3, t);
            assert!(v.is_finite() && v.norm() < 100.0, "t={t}: {v}");
            if let Some(q) = prev {
                // no jumps between neighbouring log-spaced samples
                assert!((v - q).norm() < 5.0, "t={t}: {q} -> {v}");
            }
            prev = Some(v);
        }
    }
}

fn poly_profile(a0: f64, a1: f64, a2: f64) -> Profile {
    Profile::new(
        move |s| c(a0 + a1 * s + a2 * s * s, 0.0),
        move |s| c(a1 + 2.0 * a2 * s, 0.0),
        move |_| c(2.0 * a2, 0.0),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lifting_round_trip(a0 in -2.0f64..2.0, a1 in -2.0f64..2.0, a2 in -2.0f64..2.0,
                          bl in -2.0f64..2.0, br in -2.0f64..2.0,
                          re in 0.0f64..5.0, im in -10.0f64..10.0, gamma in 0.1f64..0.9) {
        let params = ModelParams::unit_interval(gamma, 1.0, c(re, im));
        let phi1 = a0 + a1 + a2;
        let problem = ManufacturedProblem {
            name: "random".into(),
            exact: None,
            exact_dx: None,
            source: Arc::new(zero_source),
            initial: poly_profile(a0, a1, a2),
            boundary_left: poly_profile(a0, bl, 0.0),
            boundary_right: poly_profile(phi1, 0.0, br),
            lifted: false,
        };
        let rule = gauss_jacobi(gamma, 32).unwrap();
        let lifted = lift_boundary(&problem, &params, &rule).unwrap();
        let l = &lifted.lifting;
        for s in [0.0, 0.13, 0.5, 1.0] {
            let scale = 1.0 + problem.initial.eval(s).norm();
            prop_assert!((l.value(s, 0.0) - problem.initial.eval(s)).norm() <= 1e-14 * scale);
            prop_assert!((l.value(0.0, s) - problem.boundary_left.eval(s)).norm() <= 1e-14 * (1.0 + problem.boundary_left.eval(s).norm()));
            prop_assert!((l.value(1.0, s) - problem.boundary_right.eval(s)).norm() <= 1e-14 * (1.0 + problem.boundary_right.eval(s).norm()));
        }
        let space = SpaceGrid::new(0.0, 1.0, 8).unwrap();
        let time = TimeGrid::new(1.0, 4).unwrap();
        let zero_w = SolutionHistory::sample(space, time, |_, _| ZERO);
        let g = lifted.reconstruct(&zero_w).unwrap();
        for n in 0..=4 {
            for (i, x) in space.interior_nodes().into_iter().enumerate() {
                prop_assert!((g.level(n).unwrap()[i] - l.value(x, time.level(n))).norm() <= 1e-14 * (1.0 + l.value(x, time.level(n)).norm()));
            }
        }
    }
}
