//! Acceptance criteria 1–9. Each test prints one PASS/FAIL line straight to
//! stdout (not captured) and then asserts. Heavy criteria run one at a time
//! so the timings are wall-clock times of a single job.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tfk_cli::check::{check_report, Check, Finding, Quantity, RateCheck};
use tfk_cli::config::Norm;
use tfk_cli::invert::{density_curve, parse_a_grid, pole_curve, DensitySetup};
use tfk_cli::presets::preset;
use tfk_cli::{run_study, ConvergenceReport};
use tfk_core::coeffs::{d_coeffs, d_zero, tempered_grunwald};
use tfk_core::laplace::InversionConfig;
use tfk_core::norms::{h1_semi_h, l2_h, max_h};
use tfk_core::verify::verify_all;
use tfk_core::SpaceGrid;
use num_complex::Complex64;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn announce(criterion: u32, passed: bool, detail: &str) {
    let line = format!("criterion {criterion}: {} {detail}\n", if passed { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

type Cached = (ConvergenceReport, Duration);

/// Runs a preset once per test binary.
fn study(name: &str) -> Cached {
    static CACHE: OnceLock<Mutex<HashMap<String, Cached>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(name) {
        return hit.clone();
    }
    let cfg = preset(name).unwrap().config;
    let start = Instant::now();
    let report = run_study(&cfg, 0).unwrap_or_else(|e| panic!("{name}: {e}"));
    let entry = (report, start.elapsed());
    cache.lock().unwrap().insert(name.into(), entry.clone());
    entry
}

struct Outcome {
    passed: bool,
    summary: String,
}

fn judge(name: &str, check: Check) -> (Outcome, ConvergenceReport, Duration) {
    let (report, elapsed) = study(name);
    let expectation = preset(name).unwrap().expectation;
    let findings = check_report(&report, &expectation, &check);
    let worst = |q: Quantity, f: fn(&Finding) -> f64| {
        findings.iter().filter(|x| x.quantity == q).map(f).fold(0.0, f64::max)
    };
    let value_dev = worst(Quantity::Error, |f| ((f.observed - f.expected) / f.expected).abs());
    let rate_dev = worst(Quantity::Rate, |f| (f.observed - f.expected).abs());
    let failed: Vec<String> = findings.iter().filter(|f| !f.passed).map(|f| f.to_string()).collect();
    let passed = !findings.is_empty() && failed.is_empty();
    let mut summary = format!(
        "{name}: {} comparisons, worst relative error deviation {value_dev:.2e}, worst rate deviation {rate_dev:.4}, {:.1} s",
        findings.len(),
        elapsed.as_secs_f64()
    );
    for f in failed {
        summary.push_str(&format!("\n    {f}"));
    }
    (Outcome { passed, summary }, report, elapsed)
}

fn finish(criterion: u32, parts: &[Outcome], extra: &[(bool, String)]) {
    let passed = parts.iter().all(|o| o.passed) && extra.iter().all(|(ok, _)| *ok);
    let mut detail: Vec<String> = parts.iter().map(|o| o.summary.clone()).collect();
    detail.extend(extra.iter().map(|(ok, s)| format!("{}{s}", if *ok { "" } else { "FAILED " })));
    announce(criterion, passed, &detail.join("; "));
    assert!(passed, "criterion {criterion} failed: {}", detail.join("\n"));
}

fn within(limit: Duration, elapsed: Duration) -> (bool, String) {
    (
        elapsed <= limit,
        format!("runtime {:.1} s (limit {} s)", elapsed.as_secs_f64(), limit.as_secs()),
    )
}

/// Every error of `larger` exceeds the matching error of `smaller`.
fn dominates(larger: &ConvergenceReport, smaller: &ConvergenceReport) -> (bool, String) {
    let mut ok = true;
    for (a, b) in larger.cells.iter().zip(&smaller.cells) {
        assert_eq!((a.param, a.level), (b.param, b.level));
        ok &= a.errors.iter().zip(&b.errors).all(|(x, y)| x > y);
    }
    (ok, format!("{} errors exceed {} cell by cell", larger.config.name, smaller.config.name))
}

#[test]
fn criterion_1_fdm_time_order() {
    let _g = serial();
    let (o, _, t) = judge(
        "ex1-fdm-time",
        Check {
            value_rel: Some(0.05),
            rate: RateCheck::Reference { tol: 0.05 },
        },
    );
    finish(1, &[o], &[within(Duration::from_secs(300), t)]);
}

#[test]
fn criterion_2_fdm_joint_order() {
    let _g = serial();
    let (o, _, t) = judge(
        "ex1-fdm-joint",
        Check {
            value_rel: Some(0.05),
            rate: RateCheck::Fixed { target: 2.0, tol: 0.05 },
        },
    );
    finish(2, &[o], &[within(Duration::from_secs(120), t)]);
}

#[test]
fn criterion_3_general_initial_data() {
    let _g = serial();
    let (time, time_report, _) = judge(
        "ex1-fdm-time-general",
        Check {
            value_rel: Some(0.10),
            rate: RateCheck::Reference { tol: 0.05 },
        },
    );
    let (joint, joint_report, _) = judge(
        "ex1-fdm-joint-general",
        Check {
            value_rel: Some(0.10),
            rate: RateCheck::Fixed { target: 2.0, tol: 0.05 },
        },
    );
    let (plain_time, _) = study("ex1-fdm-time");
    let (plain_joint, _) = study("ex1-fdm-joint");
    finish(
        3,
        &[time, joint],
        &[dominates(&time_report, &plain_time), dominates(&joint_report, &plain_joint)],
    );
}

#[test]
fn criterion_4_fem() {
    let _g = serial();
    let check = Check {
        value_rel: Some(0.15),
        rate: RateCheck::Fixed { target: 1.0, tol: 0.07 },
    };
    let (a, _, ta) = judge("ex1-fem-tau-h", check);
    let (b, _, tb) = judge("ex1-fem-tau-h2", check);
    finish(4, &[a, b], &[within(Duration::from_secs(180), ta + tb)]);
}

#[test]
fn criterion_5_example2_fdm_self_convergence() {
    let _g = serial();
    for name in ["ex2-fdm-time", "ex2-fdm-joint"] {
        let cfg = preset(name).unwrap().config;
        assert_eq!(cfg.reference, tfk_cli::presets::EXAMPLE2_REFERENCE);
    }
    let (a, ra, ta) = judge(
        "ex2-fdm-time",
        Check {
            value_rel: None,
            rate: RateCheck::Fixed { target: 1.0, tol: 0.08 },
        },
    );
    let (b, rb, tb) = judge(
        "ex2-fdm-joint",
        Check {
            value_rel: None,
            rate: RateCheck::Fixed { target: 2.0, tol: 0.45 },
        },
    );
    for r in [&ra, &rb] {
        assert_eq!(r.config.norms, vec![Norm::FinalMax, Norm::FinalH1]);
    }
    finish(5, &[a, b], &[within(Duration::from_secs(600), ta + tb)]);
}

#[test]
fn criterion_6_example2_fem_refinement() {
    let _g = serial();
    let check = Check {
        value_rel: Some(0.15),
        rate: RateCheck::Fixed { target: 1.0, tol: 0.05 },
    };
    let (a, _, _) = judge("ex2-fem-tau-h", check);
    let (b, _, _) = judge("ex2-fem-tau-h2", check);
    finish(6, &[a, b], &[]);
}

#[test]
fn criterion_7_laplace_pair() {
    let _g = serial();
    let start = Instant::now();
    let a = parse_a_grid("0.1:2:20").unwrap();
    let pts = pole_curve(&InversionConfig::default(), &a).unwrap();
    let elapsed = start.elapsed();
    let worst = pts.iter().map(|p| p.abs_error).fold(0.0, f64::max);
    let detail = format!("{} points, max |error| {worst:.2e} (limit 1e-6)", pts.len());
    finish(
        7,
        &[],
        &[(pts.len() == 20 && worst <= 1e-6, detail), within(Duration::from_secs(1), elapsed)],
    );
}

#[test]
fn criterion_8_density_from_the_solver() {
    let _g = serial();
    let start = Instant::now();
    let a = parse_a_grid("0.1:2:10").unwrap();
    let mut extra = vec![];
    for (lambda, gamma) in [(0.0, 0.3), (3.0, 0.6)] {
        let setup = DensitySetup::standard(gamma, lambda);
        assert_eq!((setup.cells, setup.t_final, setup.x0), (1024, 0.5, 0.5));
        let pts = density_curve(&setup, &a, 0).unwrap();
        let worst = pts.iter().map(|p| p.abs_error).fold(0.0, f64::max);
        extra.push((worst <= 5e-4, format!("λ={lambda}, γ={gamma}: max |error| {worst:.2e} over {} A values (limit 5e-4)", pts.len())));
    }
    extra.push(within(Duration::from_secs(900), start.elapsed()));
    finish(8, &[], &extra);
}

/// Σ_{n=0}^{L} Σ_{k=0}^{n} d_k Z^{n−k} Z^n.
fn quadratic_form(d: &[f64], z: &[f64]) -> f64 {
    (0..z.len()).map(|n| (0..=n).map(|k| d[k] * z[n - k] * z[n]).sum::<f64>()).sum()
}

/// Grünwald–Letnikov derivative of order α at the last node.
fn gl_last(g: &[f64], tau: f64, alpha: f64, v: &[f64]) -> f64 {
    let n = v.len() - 1;
    (0..=n).map(|k| g[k] * v[n - k]).sum::<f64>() / tau.powf(alpha)
}

/// Product-rectangle fractional integral of order α at the last node.
fn rl_last(alpha: f64, tau: f64, v: &[f64]) -> f64 {
    let n = v.len() - 1;
    let tn = n as f64 * tau;
    let s: f64 = (1..=n)
        .map(|j| v[j] * ((tn - (j - 1) as f64 * tau).powf(alpha) - (tn - j as f64 * tau).powf(alpha)))
        .sum();
    s / tfk_core::special::gamma(alpha + 1.0)
}

#[test]
fn criterion_9_property_suites() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2024);
    let mut extra = vec![];

    // sign pattern and partial-sum floor of the tempered weights
    let mut sign_ok = true;
    for _ in 0..200 {
        let (gamma, lambda, tau) = (rng.gen_range(0.01..0.99), rng.gen_range(0.0..20.0), rng.gen_range(1e-4..1.0));
        let g = tempered_grunwald(gamma, lambda, tau, 300).unwrap();
        let floor = (1.0 - (-lambda * tau).exp()).powf(gamma);
        let mut s = 0.0;
        for (k, gk) in g.iter().enumerate() {
            if k > 0 {
                sign_ok &= *gk < 0.0 || (*gk == 0.0 && k as f64 * lambda * tau > 700.0);
            }
            s += gk;
            sign_ok &= s - floor >= -2.0 * (k as f64 + 4.0) * f64::EPSILON;
        }
        sign_ok &= d_zero(gamma, lambda, tau) > 0.0;
    }
    extra.push((sign_ok, "coefficient signs and sums over 200 draws".to_string()));

    let mut form_ok = true;
    for _ in 0..100 {
        let (gamma, lambda) = (rng.gen_range(0.01..0.99), rng.gen_range(0.0..10.0));
        let tau = 10f64.powf(rng.gen_range(-4.0..0.0));
        let len = rng.gen_range(1..=256);
        let d = d_coeffs(gamma, lambda, tau, len).unwrap();
        let z: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm2: f64 = z.iter().map(|v| v * v).sum();
        form_ok &= quadratic_form(&d, &z) >= -1e-12 * norm2;
    }
    extra.push((form_ok, "quadratic form nonnegative over 100 draws".to_string()));

    for o in verify_all() {
        extra.push((o.passed, format!("{} ({:.1e} <= {:.0e})", o.name, o.deviation, o.tolerance)));
    }

    let mut norm_ok = true;
    for (a, b) in [(0.0, 1.0), (-1.0, 2.0)] {
        let len: f64 = b - a;
        for m in [4usize, 16, 64, 256] {
            let grid = SpaceGrid::new(a, b, m).unwrap();
            for _ in 0..1000 {
                let v: Vec<Complex64> = (0..m - 1)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let semi = h1_semi_h(&v, &grid);
                norm_ok &= l2_h(&v, &grid) <= len / 6f64.sqrt() * semi * (1.0 + 1e-14);
                norm_ok &= max_h(&v) <= len / 2f64.sqrt() * semi;
            }
        }
    }
    extra.push((norm_ok, "discrete Poincare inequalities, 1000 vectors per grid".to_string()));

    // D^γ ∘ I^γ and I^γ ∘ D^γ return the function with O(τ) error
    let gamma = 0.4;
    let v = |t: f64| t.sin() + t * t;
    let (mut e_di, mut e_id) = (vec![], vec![]);
    for n in [32usize, 64, 128, 256] {
        let tau = 1.0 / n as f64;
        let vals: Vec<f64> = (0..=n).map(|j| v(j as f64 * tau)).collect();
        let g = tfk_core::coeffs::grunwald(gamma, n).unwrap();
        let int: Vec<f64> = (0..=n).map(|m| rl_last(gamma, tau, &vals[..=m])).collect();
        e_di.push((gl_last(&g, tau, gamma, &int) - v(1.0)).abs());
        let der: Vec<f64> = (0..=n).map(|m| gl_last(&g, tau, gamma, &vals[..=m])).collect();
        e_id.push((rl_last(gamma, tau, &der) - v(1.0)).abs());
    }
    let first_order = |e: &[f64]| e.windows(2).all(|w| (1.7..2.3).contains(&(w[0] / w[1])));
    extra.push((
        first_order(&e_di) && first_order(&e_id),
        format!(
            "fractional identities decay like τ (errors at τ=1/256: {:.1e} and {:.1e})",
            e_di[3], e_id[3]
        ),
    ));

    extra.push(within(Duration::from_secs(120), start.elapsed()));
    finish(9, &[], &extra);
}
