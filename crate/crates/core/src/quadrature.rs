//! Gauss–Jacobi and Gauss–Legendre rules on (−1, 1), and the
//! Riemann–Liouville integral / Caputo derivative of smooth functions they
//! are used for when assembling manufactured sources.

use std::ops::{AddAssign, Mul};

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::check_gamma;
use crate::special::gamma as gamma_fn;

pub const MAX_JACOBI_ORDER: usize = 128;
pub const MAX_LEGENDRE_ORDER: usize = 64;
/// Points used for every manufactured-source evaluation.
pub const DEFAULT_JACOBI_ORDER: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RuleKind {
    /// Weight (1 − ξ)^α (1 + ξ)^β.
    Jacobi { alpha: f64, beta: f64 },
    Legendre,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: RuleKind,
    pub order: usize,
}

impl QuadratureRule {
    /// Σ w_j f(ξ_j).
    pub fn apply<T, F>(&self, f: F) -> T
    where
        F: Fn(f64) -> T,
        T: Zero + Mul<f64, Output = T> + AddAssign,
    {
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += f(x) * w;
        }
        acc
    }

    /// ∫_a^b f(x) (weight mapped affinely), i.e. the rule on [a, b].
    pub fn integrate<T, F>(&self, a: f64, b: f64, f: F) -> T
    where
        F: Fn(f64) -> T,
        T: Zero + Mul<f64, Output = T> + AddAssign,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.apply(|s| f(mid + half * s)) * half
    }

    /// The Jacobi order γ of a (1 − ξ)^{−γ} rule, if this is one.
    pub fn singular_order(&self) -> Option<f64> {
        match self.kind {
            RuleKind::Jacobi { alpha, beta } if beta == 0.0 && alpha < 0.0 => Some(-alpha),
            _ => None,
        }
    }
}

/// K-point rule for the weight (1 − ξ)^{−γ} on (−1, 1).
pub fn gauss_jacobi(gamma: f64, order: usize) -> Result<QuadratureRule> {
    check_gamma(gamma)?;
    if order > MAX_JACOBI_ORDER {
        return Err(Error::OrderTooLarge {
            order,
            max: MAX_JACOBI_ORDER,
        });
    }
    jacobi_rule(-gamma, 0.0, order)
}

/// General Gauss–Jacobi rule by Golub–Welsch on the monic recurrence,
/// with nodes polished by Newton and weights from Christoffel numbers.
pub fn jacobi_rule(alpha: f64, beta: f64, order: usize) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(Error::BadPartition("quadrature order must be >= 1".into()));
    }
    if !(alpha > -1.0 && beta > -1.0) {
        return Err(Error::RuleMismatch(format!(
            "Jacobi exponents must exceed -1, got ({alpha}, {beta})"
        )));
    }
    let (diag, offdiag) = jacobi_recurrence(alpha, beta, order);
    let mu0 = 2f64.powf(alpha + beta + 1.0) * gamma_fn(alpha + 1.0) * gamma_fn(beta + 1.0)
        / gamma_fn(alpha + beta + 2.0);

    let mut jm = DMatrix::<f64>::zeros(order, order);
    for i in 0..order {
        jm[(i, i)] = diag[i];
        if i + 1 < order {
            jm[(i, i + 1)] = offdiag[i];
            jm[(i + 1, i)] = offdiag[i];
        }
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jm).eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut weights = Vec::with_capacity(order);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (pk, dpk, _) = orthonormal_eval(&diag, &offdiag, mu0, *x);
            if dpk != 0.0 {
                let step = pk / dpk;
                if (*x - step).abs() < 1.0 {
                    *x -= step;
                }
            }
        }
        let (_, _, sumsq) = orthonormal_eval(&diag, &offdiag, mu0, *x);
        weights.push(1.0 / sumsq);
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        kind: RuleKind::Jacobi { alpha, beta },
        order,
    })
}

/// Diagonal a_0..a_{K−1} and off-diagonal √b_1..√b_{K−1} of the Jacobi matrix.
fn jacobi_recurrence(alpha: f64, beta: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
    let ab = alpha + beta;
    let diag = (0..order)
        .map(|n| {
            if n == 0 {
                (beta - alpha) / (ab + 2.0)
            } else {
                let s = 2.0 * n as f64 + ab;
                (beta * beta - alpha * alpha) / (s * (s + 2.0))
            }
        })
        .collect();
    let offdiag = (1..order)
        .map(|n| {
            let nf = n as f64;
            let s = 2.0 * nf + ab;
            let b = 4.0 * nf * (nf + alpha) * (nf + beta) * (nf + ab)
                / (s * s * (s + 1.0) * (s - 1.0));
            b.sqrt()
        })
        .collect();
    (diag, offdiag)
}

/// Evaluates the degree-K orthonormal polynomial, its derivative, and
/// Σ_{j<K} p̂_j(x)² at x.
fn orthonormal_eval(diag: &[f64], offdiag: &[f64], mu0: f64, x: f64) -> (f64, f64, f64) {
    let k = diag.len();
    let mut p_prev = 0.0;
    let mut dp_prev = 0.0;
    let mut p = 1.0 / mu0.sqrt();
    let mut dp = 0.0;
    let mut sumsq = p * p;
    // √b_K is needed for the last step; extend the recurrence by one term
    // using the same closed form through the ratio with the previous one.
    for j in 0..k {
        let bj = if j == 0 { 0.0 } else { offdiag[j - 1] };
        let bnext = if j + 1 < k {
            offdiag[j]
        } else {
            // scale is irrelevant for root finding; use 1
            1.0
        };
        let p_next = ((x - diag[j]) * p - bj * p_prev) / bnext;
        let dp_next = (p + (x - diag[j]) * dp - bj * dp_prev) / bnext;
        p_prev = p;
        dp_prev = dp;
        p = p_next;
        dp = dp_next;
        if j + 1 < k {
            sumsq += p * p;
        }
    }
    (p, dp, sumsq)
}

/// K-point Gauss–Legendre rule by Newton iteration on P_K.
pub fn gauss_legendre(order: usize) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(Error::BadPartition("quadrature order must be >= 1".into()));
    }
    if order > MAX_LEGENDRE_ORDER {
        return Err(Error::OrderTooLarge {
            order,
            max: MAX_LEGENDRE_ORDER,
        });
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_eval(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_eval(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        kind: RuleKind::Legendre,
        order,
    })
}

fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn check_rule(gamma: f64, rule: &QuadratureRule) -> Result<()> {
    match rule.singular_order() {
        Some(g) if (g - gamma).abs() <= 1e-15 => Ok(()),
        _ => Err(Error::RuleMismatch(format!(
            "need a (1-x)^(-{gamma}) Jacobi rule, got {:?}",
            rule.kind
        ))),
    }
}

/// ₀I_t^{1−γ} v(t) = (1/Γ(1−γ)) ∫₀ᵗ (t−ξ)^{−γ} v(ξ) dξ via the mapped
/// Jacobi rule: (t/2)^{1−γ}/Γ(1−γ) Σ w_j v(t(1+ξ_j)/2).
pub fn rl_integral<T, F>(gamma: f64, v: F, t: f64, rule: &QuadratureRule) -> Result<T>
where
    F: Fn(f64) -> T,
    T: Zero + Mul<f64, Output = T> + AddAssign,
{
    check_rule(gamma, rule)?;
    if t <= 0.0 {
        return Ok(T::zero());
    }
    let scale = (0.5 * t).powf(1.0 - gamma) / gamma_fn(1.0 - gamma);
    Ok(rule.apply(|s| v(0.5 * t * (1.0 + s))) * scale)
}

/// Caputo derivative ₀^C D_t^γ v(t) = ₀I_t^{1−γ} v'(t), from the analytic
/// derivative `dv`.
pub fn caputo_of<T, F>(gamma: f64, dv: F, t: f64, rule: &QuadratureRule) -> Result<T>
where
    F: Fn(f64) -> T,
    T: Zero + Mul<f64, Output = T> + AddAssign,
{
    rl_integral(gamma, dv, t, rule)
}
