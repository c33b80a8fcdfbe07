//! Slow, independent reference computations. Nothing here calls the
//! routines it is used to check.

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: Complex64,
    carry: Complex64,
}

impl KahanSum {
    pub fn add(&mut self, v: Complex64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> Complex64 {
        self.sum
    }
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += s * WGK[i];
        if i % 2 == 1 {
            g += s * WG[i / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

fn adapt<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, tol: f64, depth: usize, acc: &mut KahanSum) -> f64 {
    let (v, err) = gk15(f, a, b);
    if err <= tol || depth == 0 || (b - a) < 1e-15 * (1.0 + a.abs()) {
        acc.add(v);
        return err;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1, acc) + adapt(f, m, b, 0.5 * tol, depth - 1, acc)
}

/// ∫_a^b f by recursive 15-point Gauss–Kronrod. Returns the value and the
/// summed error estimate; fails if the estimate exceeds `tol`.
pub fn adaptive_integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Result<Complex64> {
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut acc = KahanSum::default();
    let est = adapt(&f, a, b, tol, 60, &mut acc);
    if est > tol {
        return Err(Error::ToleranceNotMet { tol, estimate: est });
    }
    Ok(acc.value())
}

/// ₀I_t^{1−γ} v(t), with u = (t−ξ)^{1−γ} removing the endpoint singularity:
/// (1/((1−γ)Γ(1−γ))) ∫₀^{t^{1−γ}} v(t − u^{1/(1−γ)}) du.
pub fn adaptive_rl_oracle<F>(gamma: f64, v: F, t: f64, tol: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    if t <= 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let a = 1.0 - gamma;
    let upper = t.powf(a);
    let scale = 1.0 / (a * statrs::function::gamma::gamma(a));
    let inner = adaptive_integrate(|u| v((t - u.powf(1.0 / a)).max(0.0)), 0.0, upper, tol / scale)?;
    Ok(inner * scale)
}

/// g_k = (−1)^k ∏_{j=1}^k (γ − j + 1)/j, the running product carried as a
/// double-double pair, k = 0..=n.
pub fn grunwald_oracle(gamma: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let (mut hi, mut lo) = (1.0f64, 0.0f64);
    out.push(1.0);
    for k in 1..=n {
        let f = -(gamma - k as f64 + 1.0) / k as f64;
        let p = hi * f;
        let e = hi.mul_add(f, -p) + lo * f;
        hi = p + e;
        lo = e - (hi - p);
        out.push(hi + lo);
    }
    out
}

/// (1/τ^γ) Σ_{k=0}^{n} d_k e^{−r_s k} G^{n−k}_s with every weight evaluated
/// directly and Kahan summation. `rates[s] = pU(x_s)τ`.
pub fn dense_history_oracle(
    d: &[f64],
    inv_tau_gamma: f64,
    rates: &[Complex64],
    levels: &[Vec<Complex64>],
    n: usize,
) -> Vec<Complex64> {
    (0..rates.len())
        .map(|s| {
            let mut acc = KahanSum::default();
            for k in 0..=n {
                let w = (-rates[s] * k as f64).exp();
                acc.add(w * levels[n - k][s] * d[k]);
            }
            acc.value() * inv_tau_gamma
        })
        .collect()
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve_oracle(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Result<Vec<Complex64>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            got: a.len(),
        });
    }
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .expect("non-empty range");
        if a[piv][col].norm() <= 1e-14 * scale {
            return Err(Error::SingularMatrix(col));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for i in col + 1..n {
            let f = a[i][col] / a[col][col];
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in col..n {
                let v = a[col][j];
                a[i][j] -= f * v;
            }
            let v = b[col];
            b[i] -= f * v;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    Ok(x)
}

/// The Example 2 W-source at (x, t) for U(x) = x on (0, 1), K = 1, built
/// from adaptive fractional integrals:
/// g = f − (e^{−ct}ᶜD^γ(e^{ct}L) − λ^γL) + L_xx, with
/// f = −λ^γe^{−pxt} + λe^{−(λ+px)t} ₀I_t^{1−γ}(e^{λs}) and
/// e^{ct}L = (e^{−t}−1)e^{(λ+p)t}x + te^{λt}(1−x).
pub fn example2_source_oracle(gamma: f64, lambda: f64, p: Complex64, x: f64, t: f64, tol: f64) -> Result<Complex64> {
    let c = |v: f64| Complex64::new(v, 0.0);
    let lp = p + lambda;
    let i_exp = adaptive_rl_oracle(gamma, |s| c((lambda * s).exp()), t, tol)?;
    let c1 = adaptive_rl_oracle(gamma, |s| (lp - 1.0) * ((lp - 1.0) * s).exp() - lp * (lp * s).exp(), t, tol)?;
    let c2 = adaptive_rl_oracle(gamma, |s| c((1.0 + lambda * s) * (lambda * s).exp()), t, tol)?;
    let e = (-(p * x + lambda) * t).exp();
    let lg = lambda.powf(gamma);
    let f = -lg * (-p * x * t).exp() + e * i_exp * lambda;
    let ar = ((-t).exp() - 1.0) * (lp * t).exp();
    let al = c(t * (lambda * t).exp());
    let b = ar * x + al * (1.0 - x);
    let l = e * b;
    let lxx = e * (p * p * t * t * b - p * 2.0 * t * (ar - al));
    let caputo = e * (c1 * x + c2 * (1.0 - x));
    Ok(f - (caputo - lg * l) + lxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn rl_of_one() {
        for (g, t) in [(0.3, 0.8), (0.5, 2.0), (0.9, 0.1)] {
            let v = adaptive_rl_oracle(g, |_| c(1.0), t, 1e-13).unwrap();
            let want = t.powf(1.0 - g) / statrs::function::gamma::gamma(2.0 - g);
            assert!((v.re - want).abs() < 1e-12, "{g}: {} {want}", v.re);
        }
        assert_eq!(adaptive_rl_oracle(0.5, |_| c(1.0), 0.0, 1e-13).unwrap(), c(0.0));
    }

    #[test]
    fn rl_self_consistent_under_tolerance_halving() {
        let f = |x: f64| c((3.0 * x).exp());
        let a = adaptive_rl_oracle(0.5, f, 0.5, 1e-10).unwrap();
        let b = adaptive_rl_oracle(0.5, f, 0.5, 1e-13).unwrap();
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn integrate_polynomial_and_oscillation() {
        let v = adaptive_integrate(|x| c(x * x), 0.0, 3.0, 1e-13).unwrap();
        assert!((v.re - 9.0).abs() < 1e-13);
        let w = adaptive_integrate(|x| Complex64::new(0.0, 40.0 * x).exp(), 0.0, 1.0, 1e-12).unwrap();
        let exact = (Complex64::new(0.0, 40.0).exp() - 1.0) / Complex64::new(0.0, 40.0);
        assert!((w - exact).norm() < 1e-12);
    }

    #[test]
    fn dense_solver() {
        let id = vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]];
        let b = vec![Complex64::new(1.0, 2.0), c(3.0)];
        assert_eq!(dense_solve_oracle(id, b.clone()).unwrap(), b);
        let sing = vec![vec![c(1.0), c(2.0)], vec![c(2.0), c(4.0)]];
        assert_eq!(dense_solve_oracle(sing, b), Err(Error::SingularMatrix(1)));
    }

    #[test]
    fn grunwald_reference() {
        let g = grunwald_oracle(0.5, 2);
        assert!((g[1] + 0.5).abs() < 1e-14 && (g[2] + 0.125).abs() < 1e-14);
    }

    #[test]
    fn history_single_term() {
        let levels = vec![vec![c(2.0), Complex64::new(0.0, 1.0)]];
        let v = dense_history_oracle(&[0.5], 4.0, &[c(1.0), c(2.0)], &levels, 0);
        assert_eq!(v, vec![c(4.0), Complex64::new(0.0, 2.0)]);
    }
}
