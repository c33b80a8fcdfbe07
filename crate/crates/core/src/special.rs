//! Special functions: Γ(x) and the truncated exponential moment
//! ∫₀ᵗ u^{a−1} e^{−cu} du for complex c with Re c ≥ 0.

use num_complex::Complex64;

/// Γ(x) for real x.
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

const SERIES_RADIUS: f64 = 2.0;
const EPS: f64 = 1e-17;
const TINY: f64 = 1e-300;

/// φ(a, z) = ∫₀¹ v^{a−1} e^{−zv} dv, a > 0, Re z ≥ 0.
///
/// Power series near the origin, otherwise z^{−a}(Γ(a) − Γ(a, z)) with the
/// upper incomplete gamma from its Legendre continued fraction.
pub fn unit_exp_moment(a: f64, z: Complex64) -> Complex64 {
    debug_assert!(a > 0.0);
    if z.norm() < SERIES_RADIUS {
        series(a, z)
    } else {
        let upper = upper_gamma_cf(a, z);
        (Complex64::new(gamma(a), 0.0) - upper) * z.powf(-a)
    }
}

/// φ(a + k, z) for k = 0..out.len(), sharing one series or continued
/// fraction; the upper orders come from φ(a+1, z) = (aφ(a, z) − e^{−z})/z.
pub fn unit_exp_moment_ladder(a: f64, z: Complex64, out: &mut [Complex64]) {
    if out.is_empty() {
        return;
    }
    if z.norm() < SERIES_RADIUS {
        series_ladder(a, z, out);
        return;
    }
    out[0] = unit_exp_moment(a, z);
    let ez = (-z).exp();
    let zi = z.inv();
    for k in 1..out.len() {
        out[k] = (out[k - 1] * (a + (k - 1) as f64) - ez) * zi;
    }
}

/// ∫₀ᵗ u^{a−1} e^{−cu} du.
pub fn exp_moment(a: f64, c: Complex64, t: f64) -> Complex64 {
    if t <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    unit_exp_moment(a, c * t) * t.powf(a)
}

/// Riemann–Liouville integral of order 1−γ of e^{sξ}, evaluated at t:
/// (1/Γ(1−γ)) ∫₀ᵗ (t−ξ)^{−γ} e^{sξ} dξ.
pub fn rl_integral_exp(gamma_order: f64, s: Complex64, t: f64) -> Complex64 {
    if t <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    (s * t).exp() * exp_moment(1.0 - gamma_order, s, t) / gamma(1.0 - gamma_order)
}

fn series(a: f64, z: Complex64) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0); // (−z)^n / n!
    let mut sum = term / a;
    for n in 1..200 {
        term *= -z / n as f64;
        let contrib = term / (a + n as f64);
        sum += contrib;
        if contrib.norm() <= EPS * sum.norm() {
            break;
        }
    }
    sum
}

fn series_ladder(a: f64, z: Complex64, out: &mut [Complex64]) {
    let mut term = Complex64::new(1.0, 0.0);
    for (k, o) in out.iter_mut().enumerate() {
        *o = term / (a + k as f64);
    }
    for n in 1..200 {
        term *= -z / n as f64;
        let mut done = true;
        for (k, o) in out.iter_mut().enumerate() {
            let contrib = term / (a + (n + k) as f64);
            *o += contrib;
            done &= contrib.norm() <= EPS * o.norm();
        }
        if done {
            break;
        }
    }
}

fn upper_gamma_cf(a: f64, z: Complex64) -> Complex64 {
    // Modified Lentz evaluation of
    // Γ(a,z) = e^{−z} z^a / (z+1−a− 1(1−a)/(z+3−a− 2(2−a)/(z+5−a− ...)))
    let tiny = Complex64::new(TINY, 0.0);
    let mut b = z + 1.0 - a;
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 1..20_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = d * an + b;
        if d.norm() < TINY {
            d = tiny;
        }
        c = b + c.inv() * an;
        if c.norm() < TINY {
            c = tiny;
        }
        d = d.inv();
        let del = d * c;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    (-z).exp() * z.powf(a) * h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(a: f64, z: Complex64) -> Complex64 {
        // v = w^k with k·a ≥ 5 leaves a smooth integrand k w^{ka−1} e^{−z w^k}
        let k = (5.0 / a).ceil();
        let n = 200_000;
        let h = 1.0 / n as f64;
        let f = |w: f64| (-z * w.powf(k)).exp() * k * w.powf(k * a - 1.0);
        let mut s = f(0.0) + f(1.0);
        for i in 1..n {
            let w = i as f64 * h;
            s += f(w) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn zero_argument_is_reciprocal() {
        for a in [0.2, 0.7, 1.0, 2.5] {
            let v = unit_exp_moment(a, Complex64::new(0.0, 0.0));
            assert!((v.re - 1.0 / a).abs() < 1e-15 && v.im == 0.0);
        }
    }

    #[test]
    fn integer_order_closed_form() {
        // a = 1: (1 − e^{−z})/z
        for z in [
            Complex64::new(0.5, 0.3),
            Complex64::new(3.0, 40.0),
            Complex64::new(0.0, 7.0),
            Complex64::new(50.0, -2.0),
        ] {
            let exact = (Complex64::new(1.0, 0.0) - (-z).exp()) / z;
            let v = unit_exp_moment(1.0, z);
            assert!((v - exact).norm() < 1e-13 * exact.norm(), "{z}: {v} vs {exact}");
        }
    }

    #[test]
    fn matches_brute_force_across_regimes() {
        for a in [0.2, 0.5, 0.7, 1.3, 2.7] {
            for z in [
                Complex64::new(0.1, 0.1),
                Complex64::new(1.9, 0.0),
                Complex64::new(0.0, 2.1),
                Complex64::new(0.0, 9.0),
                Complex64::new(4.0, 25.0),
                Complex64::new(12.0, -3.0),
            ] {
                let v = unit_exp_moment(a, z);
                let r = brute(a, z);
                assert!((v - r).norm() < 1e-9 * r.norm().max(1e-3), "a={a} z={z}: {v} vs {r}");
            }
        }
    }

    #[test]
    fn ladder_matches_individual_orders() {
        for a in [0.2, 0.4, 0.7] {
            for z in [
                Complex64::new(0.3, 0.2),
                Complex64::new(1.9, 0.5),
                Complex64::new(2.0, 0.1),
                Complex64::new(0.5, 30.0),
                Complex64::new(90.0, 1200.0),
            ] {
                let mut out = [Complex64::new(0.0, 0.0); 3];
                unit_exp_moment_ladder(a, z, &mut out);
                for (k, v) in out.iter().enumerate() {
                    let r = unit_exp_moment(a + k as f64, z);
                    assert!((v - r).norm() <= 1e-12 * r.norm(), "a={a} z={z} k={k}: {v} vs {r}");
                }
            }
        }
    }

    #[test]
    fn rl_of_constant_exponential() {
        // s = 0: t^{1−γ}/Γ(2−γ)
        let v = rl_integral_exp(0.3, Complex64::new(0.0, 0.0), 0.8);
        let exact = 0.8f64.powf(0.7) / gamma(1.7);
        assert!((v.re - exact).abs() < 1e-14);
    }
}
