//! The discrete tempered fractional substantial derivative
//!
//! ```text
//! (1/τ^γ) Σ_{k=0}^{n} d_k e^{−pU(x)kτ} G^{n−k}(x)
//! ```
//!
//! and the correction that removes the zero-initial-data restriction.

use num_complex::Complex64;

use crate::coeffs::CoefficientTable;
use crate::error::{Error, Result};
use crate::model::{ComplexVector, ModelParams, SolutionHistory, SpaceGrid};

/// Steps between exact re-evaluations of e^{−pUkτ} in the running products.
pub const REFRESH_PERIOD: usize = 64;

/// Diagonal entries w_{m,k} = e^{−pU(x_m)kτ} of the matrices M_k.
#[derive(Debug, Clone)]
pub struct HistoryWeights {
    sites: usize,
    max_k: usize,
    table: Vec<Complex64>,
}

impl HistoryWeights {
    /// Weights for the sites with potential values `potential`, k = 0..max_k.
    pub fn new(p: Complex64, potential: &[f64], tau: f64, max_k: usize) -> Self {
        let sites = potential.len();
        let rates: Vec<Complex64> = potential.iter().map(|&u| p * u * tau).collect();
        let ratios: Vec<Complex64> = rates.iter().map(|r| (-r).exp()).collect();
        let mut table = Vec::with_capacity((max_k + 1) * sites);
        table.extend(std::iter::repeat(Complex64::new(1.0, 0.0)).take(sites));
        for k in 1..=max_k {
            let prev = (k - 1) * sites;
            for s in 0..sites {
                let w = if k % REFRESH_PERIOD == 0 {
                    (-rates[s] * k as f64).exp()
                } else {
                    table[prev + s] * ratios[s]
                };
                table.push(w);
            }
        }
        Self {
            sites,
            max_k,
            table,
        }
    }

    /// Weights at the interior nodes of `grid` for the model's p and U.
    pub fn for_grid(params: &ModelParams, grid: &SpaceGrid, tau: f64, max_k: usize) -> Self {
        let u: Vec<f64> = grid
            .interior_nodes()
            .iter()
            .map(|&x| params.potential.eval(x))
            .collect();
        Self::new(params.p, &u, tau, max_k)
    }

    pub fn max_k(&self) -> usize {
        self.max_k
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// w_{·,k} for all sites.
    pub fn level(&self, k: usize) -> &[Complex64] {
        &self.table[k * self.sites..(k + 1) * self.sites]
    }

    pub fn get(&self, site: usize, k: usize) -> Complex64 {
        self.table[k * self.sites + site]
    }
}

/// (1/τ^γ) Σ_{k=0}^{n} d_k w_{·,k} ⊙ G^{n−k}: the left side of the fully
/// discrete equation at level n.
pub fn substantial_history_sum(
    coeffs: &CoefficientTable,
    weights: &HistoryWeights,
    history: &SolutionHistory,
    n: usize,
) -> Result<ComplexVector> {
    if history.len() <= n {
        return Err(Error::HistoryTooShort {
            available: history.len(),
            requested: n,
        });
    }
    let covered = coeffs.max_k().min(weights.max_k());
    if covered < n {
        return Err(Error::CoefficientTableTooShort {
            available: covered,
            requested: n,
        });
    }
    let sites = history.space().interior_len();
    if weights.sites() != sites {
        return Err(Error::LengthMismatch {
            expected: sites,
            got: weights.sites(),
        });
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); sites];
    for k in 0..=n {
        let dk = coeffs.d[k];
        let w = weights.level(k);
        let g = &history.levels()[n - k];
        for ((a, wi), gi) in acc.iter_mut().zip(w).zip(g.iter()) {
            *a += wi * gi * dk;
        }
    }
    let scale = coeffs.inv_tau_gamma();
    Ok(ComplexVector::from_vec(
        acc.into_iter().map(|a| a * scale).collect(),
    ))
}

/// The subtraction term (e^{−(λ+pU(x_m))nτ}/τ^γ) Q_n φ_m that lets the
/// scheme start from non-zero initial data without lifting.
pub fn general_ic_correction(
    phi: &ComplexVector,
    params: &ModelParams,
    grid: &SpaceGrid,
    n: usize,
    tau: f64,
    coeffs: &CoefficientTable,
) -> Result<ComplexVector> {
    if coeffs.max_k() < n {
        return Err(Error::CoefficientTableTooShort {
            available: coeffs.max_k(),
            requested: n,
        });
    }
    if phi.len() != grid.interior_len() {
        return Err(Error::LengthMismatch {
            expected: grid.interior_len(),
            got: phi.len(),
        });
    }
    let factor = coeffs.q_partial[n] * tau.powf(-params.gamma);
    let t = n as f64 * tau;
    Ok(ComplexVector::from_vec(
        phi.iter()
            .enumerate()
            .map(|(i, &v)| {
                let x = grid.node(i + 1);
                (-params.coupling_rate(x) * t).exp() * v * factor
            })
            .collect(),
    ))
}

/// Level-major history store for time marching.
///
/// Values are kept split into real and imaginary planes so the lagged sum
/// Σ_{k≥1} d_k e^{−r_s k} G^{n−k}_s vectorises across sites. Level j is
/// stored as e^{r_s j} G^j_s, which turns the sum into e^{−r_s n} Σ d_k H^{n−k}_s
/// with real coefficients. Once max |Re r_s|·j passes [`SCALE_LIMIT`] the
/// store is converted back to plain values and the weights become running
/// products of e^{−r_s}, re-evaluated exactly every [`REFRESH_PERIOD`] steps.
#[derive(Debug, Clone)]
pub struct HistoryAccumulator {
    sites: usize,
    rate: Vec<Complex64>,
    ratio_re: Vec<f64>,
    ratio_im: Vec<f64>,
    max_re_rate: f64,
    scaled: bool,
    re: Vec<f64>,
    im: Vec<f64>,
    levels: usize,
    w_re: Vec<f64>,
    w_im: Vec<f64>,
}

/// Largest |Re r|·j kept in the scaled store.
pub const SCALE_LIMIT: f64 = 300.0;

impl HistoryAccumulator {
    /// `rates[s] = p·U(x_s)·τ` for every site; `capacity` is the expected
    /// number of levels.
    pub fn new(rates: Vec<Complex64>, capacity: usize) -> Self {
        let sites = rates.len();
        let ratios: Vec<Complex64> = rates.iter().map(|r| (-r).exp()).collect();
        Self {
            sites,
            ratio_re: ratios.iter().map(|r| r.re).collect(),
            ratio_im: ratios.iter().map(|r| r.im).collect(),
            max_re_rate: rates.iter().map(|r| r.re.abs()).fold(0.0, f64::max),
            scaled: true,
            rate: rates,
            re: Vec::with_capacity(capacity * sites),
            im: Vec::with_capacity(capacity * sites),
            levels: 0,
            w_re: vec![0.0; sites],
            w_im: vec![0.0; sites],
        }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Stored level count; the next level to be solved has this index.
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// e^{sign·r_s j} for every site.
    fn factors(&self, j: usize, sign: f64) -> impl Iterator<Item = Complex64> + '_ {
        let j = sign * j as f64;
        self.rate.iter().map(move |r| (r * j).exp())
    }

    fn unscale(&mut self) {
        for j in 0..self.levels {
            let f: Vec<Complex64> = self.factors(j, -1.0).collect();
            let base = j * self.sites;
            for (s, w) in f.into_iter().enumerate() {
                let v = Complex64::new(self.re[base + s], self.im[base + s]) * w;
                self.re[base + s] = v.re;
                self.im[base + s] = v.im;
            }
        }
        self.scaled = false;
    }

    pub fn push(&mut self, values: &[Complex64]) {
        assert_eq!(values.len(), self.sites, "history level has wrong length");
        let j = self.levels;
        if self.scaled && self.max_re_rate * j as f64 > SCALE_LIMIT {
            self.unscale();
        }
        if self.scaled {
            let stored: Vec<Complex64> = self.factors(j, 1.0).zip(values).map(|(w, v)| w * v).collect();
            self.re.extend(stored.iter().map(|v| v.re));
            self.im.extend(stored.iter().map(|v| v.im));
        } else {
            self.re.extend(values.iter().map(|v| v.re));
            self.im.extend(values.iter().map(|v| v.im));
        }
        self.levels += 1;
    }

    pub fn level(&self, j: usize) -> Vec<Complex64> {
        let r = &self.re[j * self.sites..(j + 1) * self.sites];
        let i = &self.im[j * self.sites..(j + 1) * self.sites];
        let plain = r.iter().zip(i).map(|(&a, &b)| Complex64::new(a, b));
        if self.scaled {
            plain.zip(self.factors(j, -1.0)).map(|(v, w)| v * w).collect()
        } else {
            plain.collect()
        }
    }

    /// Σ_{k=1}^{n} d_k e^{−r_s k} G^{n−k}_s for n = `self.levels()`, written
    /// into `out` (no 1/τ^γ factor).
    pub fn lagged_sum(&mut self, d: &[f64], out: &mut [Complex64]) {
        let n = self.levels;
        assert!(d.len() > n || n == 0, "coefficient table too short");
        assert_eq!(out.len(), self.sites);
        if self.scaled {
            self.scaled_sum(d, out);
        } else {
            self.weighted_sum(d, out);
        }
    }

    fn scaled_sum(&self, d: &[f64], out: &mut [Complex64]) {
        let n = self.levels;
        let sites = self.sites;
        let mut acc_re = vec![0.0; sites];
        let mut acc_im = vec![0.0; sites];
        for k in 1..=n {
            let dk = d[k];
            let base = (n - k) * sites;
            let g_re = &self.re[base..base + sites];
            let g_im = &self.im[base..base + sites];
            for s in 0..sites {
                acc_re[s] += dk * g_re[s];
                acc_im[s] += dk * g_im[s];
            }
        }
        for ((o, w), (a, b)) in out.iter_mut().zip(self.factors(n, -1.0)).zip(acc_re.into_iter().zip(acc_im)) {
            *o = w * Complex64::new(a, b);
        }
    }

    fn weighted_sum(&mut self, d: &[f64], out: &mut [Complex64]) {
        let n = self.levels;
        let sites = self.sites;
        let mut acc_re = vec![0.0; sites];
        let mut acc_im = vec![0.0; sites];
        self.w_re.iter_mut().for_each(|w| *w = 1.0);
        self.w_im.iter_mut().for_each(|w| *w = 0.0);
        for k in 1..=n {
            let dk = d[k];
            let base = (n - k) * sites;
            let g_re = &self.re[base..base + sites];
            let g_im = &self.im[base..base + sites];
            if k % REFRESH_PERIOD == 0 {
                for s in 0..sites {
                    let w = (-self.rate[s] * k as f64).exp();
                    self.w_re[s] = w.re;
                    self.w_im[s] = w.im;
                }
            } else {
                let (wr, wi) = (&mut self.w_re[..], &mut self.w_im[..]);
                for s in 0..sites {
                    let a = wr[s] * self.ratio_re[s] - wi[s] * self.ratio_im[s];
                    let b = wr[s] * self.ratio_im[s] + wi[s] * self.ratio_re[s];
                    wr[s] = a;
                    wi[s] = b;
                }
            }
            let (wr, wi) = (&self.w_re[..], &self.w_im[..]);
            for s in 0..sites {
                let pr = wr[s] * g_re[s] - wi[s] * g_im[s];
                let pi = wr[s] * g_im[s] + wi[s] * g_re[s];
                acc_re[s] += dk * pr;
                acc_im[s] += dk * pi;
            }
        }
        for s in 0..sites {
            out[s] = Complex64::new(acc_re[s], acc_im[s]);
        }
    }
}
