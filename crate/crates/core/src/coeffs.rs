//! Grünwald-type weights of the discrete tempered substantial derivative.
//!
//! * `g_k`: coefficients of (1 − z)^γ,
//! * `g_k^λ = e^{−kλτ} g_k`: coefficients of (1 − z e^{−λτ})^γ,
//! * `d_k`: the scheme weights, `d_0 = 1 − e^{−γλτ}(λτ)^γ` and `d_k = g_k^λ` for k ≥ 1,
//! * `Q_k = Σ_{j≤k} g_j`: coefficients of (1 − z)^{γ−1}.

use crate::error::Result;
use crate::model::{check_gamma, check_lambda};

/// g_0..g_n by the multiplicative recurrence g_k = (1 − (γ+1)/k) g_{k−1}.
pub fn grunwald(gamma: f64, n: usize) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    let mut g = Vec::with_capacity(n + 1);
    g.push(1.0);
    for k in 1..=n {
        let prev = g[k - 1];
        g.push((1.0 - (gamma + 1.0) / k as f64) * prev);
    }
    Ok(g)
}

/// Tempered weights e^{−kλτ} g_k, k = 0..n.
pub fn tempered_grunwald(gamma: f64, lambda: f64, tau: f64, n: usize) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    let plain = grunwald(gamma, n)?;
    Ok(temper(&plain, lambda * tau))
}

fn temper(plain: &[f64], rate: f64) -> Vec<f64> {
    plain
        .iter()
        .enumerate()
        .map(|(k, g)| if k == 0 { 1.0 } else { (-(k as f64) * rate).exp() * g })
        .collect()
}

/// d_0 = 1 − e^{−γλτ}(λτ)^γ: the k = 0 weight after absorbing the −λ^γ G term.
pub fn d_zero(gamma: f64, lambda: f64, tau: f64) -> f64 {
    let lt = lambda * tau;
    if lt == 0.0 {
        1.0
    } else {
        1.0 - (-gamma * lt).exp() * lt.powf(gamma)
    }
}

/// Scheme weights d_0..d_n.
pub fn d_coeffs(gamma: f64, lambda: f64, tau: f64, n: usize) -> Result<Vec<f64>> {
    let mut d = tempered_grunwald(gamma, lambda, tau, n)?;
    d[0] = d_zero(gamma, lambda, tau);
    Ok(d)
}

/// Partial sums Q_k = Σ_{j=0}^k g_j, k = 0..n.
pub fn q_partial_sums(gamma: f64, n: usize) -> Result<Vec<f64>> {
    let g = grunwald(gamma, n)?;
    Ok(partial_sums(&g))
}

fn partial_sums(g: &[f64]) -> Vec<f64> {
    g.iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// All weight sequences for one (γ, λ, τ), k = 0..N. Built once per run and
/// shared by the schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub gamma: f64,
    pub lambda: f64,
    pub tau: f64,
    pub g_plain: Vec<f64>,
    pub g_tempered: Vec<f64>,
    pub d: Vec<f64>,
    pub q_partial: Vec<f64>,
}

impl CoefficientTable {
    pub fn new(gamma: f64, lambda: f64, tau: f64, n: usize) -> Result<Self> {
        check_gamma(gamma)?;
        check_lambda(lambda)?;
        let g_plain = grunwald(gamma, n)?;
        let g_tempered = temper(&g_plain, lambda * tau);
        let mut d = g_tempered.clone();
        d[0] = d_zero(gamma, lambda, tau);
        let q_partial = partial_sums(&g_plain);
        Ok(Self {
            gamma,
            lambda,
            tau,
            g_plain,
            g_tempered,
            d,
            q_partial,
        })
    }

    /// Largest index covered.
    pub fn max_k(&self) -> usize {
        self.d.len() - 1
    }

    /// 1/τ^γ.
    pub fn inv_tau_gamma(&self) -> f64 {
        self.tau.powf(-self.gamma)
    }

    /// CSV rows `k,g_plain,g_tempered,d,q_partial`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,g_plain,g_tempered,d,q_partial\n");
        for k in 0..=self.max_k() {
            out.push_str(&format!(
                "{k},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                self.g_plain[k], self.g_tempered[k], self.d[k], self.q_partial[k]
            ));
        }
        out
    }
}
