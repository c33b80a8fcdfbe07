//! Numerical inversion of the Laplace transform in A by the Fourier series
//! method with Euler summation:
//!
//! ```text
//! s_n(A) = e^{Ã/2}/(2A) Re G(Ã/2A) + e^{Ã/2}/A Σ_{j=1}^{n} (−1)^j Re G(Ã/2A + jπi/A)
//! G(A)  ≈ Σ_{k=0}^{K₂} C(K₂,k) 2^{−K₂} s_{K₁+k}(A)
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_K2: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    pub a_tilde: f64,
    pub k1: usize,
    pub k2: usize,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            a_tilde: 18.4,
            k1: 25,
            k2: 15,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_tilde > 0.0) || !self.a_tilde.is_finite() {
            return Err(Error::ConfigOverflow(format!("Ã must be positive, got {}", self.a_tilde)));
        }
        if self.k1 < 1 {
            return Err(Error::ConfigOverflow("K1 must be at least 1".into()));
        }
        if self.k2 > MAX_K2 {
            return Err(Error::ConfigOverflow(format!("K2 = {} exceeds {MAX_K2}", self.k2)));
        }
        Ok(())
    }

    /// Transform evaluations per inverted point.
    pub fn evaluations(&self) -> usize {
        self.k1 + self.k2 + 1
    }
}

fn check_a(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::ConfigOverflow(format!("A must be positive, got {a}")))
    }
}

/// p_j = Ã/2A + jπi/A for j = 0..=n.
pub fn transform_points(a: f64, a_tilde: f64, n: usize) -> Vec<Complex64> {
    (0..=n)
        .map(|j| Complex64::new(a_tilde / (2.0 * a), j as f64 * PI / a))
        .collect()
}

/// C(K₂, k) 2^{−K₂}, k = 0..=K₂, by Pascal's rule.
pub fn binomial_weights(k2: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for _ in 0..k2 {
        let mut next = vec![1.0; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    let scale = 0.5f64.powi(k2 as i32);
    row.into_iter().map(|c| c * scale).collect()
}

fn checked(p: Complex64, v: Complex64) -> Result<Complex64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::EvaluatorFailure {
            p: p.to_string(),
            reason: format!("non-finite value {v}"),
        })
    }
}

/// All partial sums s_0..s_n from transform values at p_0..p_n.
pub fn partial_sums_from_values(a: f64, a_tilde: f64, values: &[Complex64]) -> Vec<f64> {
    let e = (a_tilde / 2.0).exp() / a;
    let mut out = Vec::with_capacity(values.len());
    let mut s = 0.5 * e * values[0].re;
    out.push(s);
    for (j, v) in values.iter().enumerate().skip(1) {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * e * v.re;
        out.push(s);
    }
    out
}

/// s_n(A).
pub fn partial_sum<F>(a: f64, n: usize, a_tilde: f64, mut eval: F) -> Result<f64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    check_a(a)?;
    let pts = transform_points(a, a_tilde, n);
    let values = pts
        .iter()
        .map(|&p| eval(p).and_then(|v| checked(p, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(*partial_sums_from_values(a, a_tilde, &values).last().expect("n + 1 values"))
}

/// Euler-summed inverse from precomputed values at p_0..p_{K₁+K₂}.
pub fn euler_from_values(a: f64, cfg: &InversionConfig, values: &[Complex64]) -> Result<f64> {
    cfg.validate()?;
    check_a(a)?;
    if values.len() != cfg.evaluations() {
        return Err(Error::LengthMismatch {
            expected: cfg.evaluations(),
            got: values.len(),
        });
    }
    let pts = transform_points(a, cfg.a_tilde, cfg.k1 + cfg.k2);
    for (&p, &v) in pts.iter().zip(values) {
        checked(p, v)?;
    }
    let s = partial_sums_from_values(a, cfg.a_tilde, values);
    Ok(binomial_weights(cfg.k2)
        .iter()
        .enumerate()
        .map(|(k, w)| w * s[cfg.k1 + k])
        .sum())
}

/// G(A) from a transform evaluator; calls `eval` exactly K₁+K₂+1 times, in
/// ascending j.
pub fn euler_invert<F>(a: f64, cfg: &InversionConfig, mut eval: F) -> Result<f64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    cfg.validate()?;
    check_a(a)?;
    let values = transform_points(a, cfg.a_tilde, cfg.k1 + cfg.k2)
        .into_iter()
        .map(|p| eval(p).and_then(|v| checked(p, v)))
        .collect::<Result<Vec<_>>>()?;
    euler_from_values(a, cfg, &values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shifted(p: Complex64) -> Result<Complex64> {
        Ok((p + 2.0).inv())
    }

    #[test]
    fn first_term_only() {
        let s = partial_sum(0.5, 0, 18.4, shifted).unwrap();
        let want = (9.2f64).exp() / 1.0 * (1.0 / (18.4 + 2.0));
        assert!((s - want).abs() < 1e-12 * want);
    }

    #[test]
    fn exponential_pair() {
        let cfg = InversionConfig::default();
        for a in [0.1, 0.5, 1.0, 2.0] {
            let v = euler_invert(a, &cfg, shifted).unwrap();
            assert!((v - (-2.0 * a).exp()).abs() < 1e-8, "A={a}: {v}");
        }
    }

    #[test]
    fn single_binomial_term() {
        let cfg = InversionConfig { k2: 0, ..Default::default() };
        let e = euler_invert(0.7, &cfg, shifted).unwrap();
        let s = partial_sum(0.7, 25, 18.4, shifted).unwrap();
        assert!((e - s).abs() < 1e-14 * s.abs().max(1.0));
    }

    #[test]
    fn weights() {
        assert_eq!(binomial_weights(2), vec![0.25, 0.5, 0.25]);
        let w = binomial_weights(40);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(w[20] * 2f64.powi(40), 137_846_528_820.0);
    }

    #[test]
    fn config_errors() {
        let cfg = InversionConfig { k2: 41, ..Default::default() };
        assert!(matches!(euler_invert(1.0, &cfg, shifted), Err(Error::ConfigOverflow(_))));
        let bad = |_p: Complex64| Ok(Complex64::new(f64::NAN, 0.0));
        assert!(matches!(
            euler_invert(1.0, &InversionConfig::default(), bad),
            Err(Error::EvaluatorFailure { .. })
        ));
    }

    #[test]
    fn call_count() {
        let mut calls = 0;
        let cfg = InversionConfig::default();
        euler_invert(1.3, &cfg, |p| {
            calls += 1;
            shifted(p)
        })
        .unwrap();
        assert_eq!(calls, 41);
    }
}
