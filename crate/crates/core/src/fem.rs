//! P1 finite elements in space with the same time discretization as the
//! difference scheme. Weighted mass terms, loads and the history are all
//! evaluated with a Gauss–Legendre rule on each element.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::CoefficientTable;
use crate::error::{Error, Result};
use crate::fdm::TridiagonalOperator;
use crate::history::HistoryAccumulator;
use crate::model::{
    ComplexVector, IcVariant, ModelParams, SolutionHistory, SpaceGrid, SpaceTimeFn, TimeGrid,
};
use crate::norms::h1_error_continuous;
use crate::quadrature::{gauss_legendre, QuadratureRule, RuleKind};

pub const DEFAULT_QUAD_ORDER: usize = 4;

#[derive(Debug, Clone)]
pub struct FemMatrices {
    pub mass: TridiagonalOperator,
    pub stiffness: TridiagonalOperator,
    /// (d_0/τ^γ)·mass + K·stiffness, factorized.
    pub system: TridiagonalOperator,
}

pub fn assemble_fem(grid: &SpaceGrid, params: &ModelParams, tau: f64, d0: f64) -> Result<FemMatrices> {
    let n = grid.interior_len();
    let h = grid.h;
    let mass = TridiagonalOperator::constant(n, h / 6.0, 4.0 * h / 6.0)?;
    let stiffness = TridiagonalOperator::constant(n, -1.0 / h, 2.0 / h)?;
    let a = d0 * tau.powf(-params.gamma);
    let k = params.k_gamma;
    let system = TridiagonalOperator::constant(n, a * h / 6.0 - k / h, a * 4.0 * h / 6.0 + 2.0 * k / h)?;
    Ok(FemMatrices {
        mass,
        stiffness,
        system,
    })
}

fn check_legendre(rule: &QuadratureRule) -> Result<()> {
    if rule.kind != RuleKind::Legendre {
        return Err(Error::RuleMismatch(format!(
            "element integrals need a Gauss–Legendre rule, got {:?}",
            rule.kind
        )));
    }
    Ok(())
}

/// Quadrature sites of all elements, element-major.
#[derive(Debug, Clone)]
struct ElementSites {
    x: Vec<f64>,
    /// Value of the right-hand hat on its element at each rule node.
    s: Vec<f64>,
    /// Rule weight times the Jacobian h/2.
    w: Vec<f64>,
    per: usize,
    elements: usize,
}

impl ElementSites {
    fn new(grid: &SpaceGrid, rule: &QuadratureRule) -> Self {
        let per = rule.nodes.len();
        let elements = grid.m_count;
        let mut x = Vec::with_capacity(per * elements);
        for e in 0..elements {
            let (xl, xr) = (grid.node(e), grid.node(e + 1));
            for &xi in &rule.nodes {
                x.push(0.5 * (xl + xr) + 0.5 * (xr - xl) * xi);
            }
        }
        Self {
            x,
            s: rule.nodes.iter().map(|xi| 0.5 * (1.0 + xi)).collect(),
            w: rule.weights.iter().map(|w| 0.5 * grid.h * w).collect(),
            per,
            elements,
        }
    }

    /// P1 function with interior nodal values `c` at every site.
    fn interpolate(&self, c: &[Complex64], out: &mut [Complex64]) {
        let zero = Complex64::new(0.0, 0.0);
        for e in 0..self.elements {
            let left = if e == 0 { zero } else { c[e - 1] };
            let right = if e + 1 == self.elements { zero } else { c[e] };
            for q in 0..self.per {
                let s = self.s[q];
                out[e * self.per + q] = left * (1.0 - s) + right * s;
            }
        }
    }

    /// Σ_q w_q v_q φ_m(x_q) for every interior hat φ_m.
    fn test_against_hats(&self, v: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for e in 0..self.elements {
            let mut l = Complex64::new(0.0, 0.0);
            let mut r = Complex64::new(0.0, 0.0);
            for q in 0..self.per {
                let wv = v[e * self.per + q] * self.w[q];
                l += wv * (1.0 - self.s[q]);
                r += wv * self.s[q];
            }
            if e > 0 {
                out[e - 1] += l;
            }
            if e + 1 < self.elements {
                out[e] += r;
            }
        }
    }
}

/// ((e^{−pU kτ} G_h, φ_m))_m for the P1 function G_h with coefficients
/// `coeffs`.
pub fn weighted_mass_apply(
    k: usize,
    coeffs: &[Complex64],
    params: &ModelParams,
    grid: &SpaceGrid,
    tau: f64,
    rule: &QuadratureRule,
) -> Result<ComplexVector> {
    check_legendre(rule)?;
    if coeffs.len() != grid.interior_len() {
        return Err(Error::LengthMismatch {
            expected: grid.interior_len(),
            got: coeffs.len(),
        });
    }
    let sites = ElementSites::new(grid, rule);
    let mut v = vec![Complex64::new(0.0, 0.0); sites.x.len()];
    sites.interpolate(coeffs, &mut v);
    let kt = k as f64 * tau;
    for (vi, &x) in v.iter_mut().zip(&sites.x) {
        *vi *= (-params.p * params.potential.eval(x) * kt).exp();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); grid.interior_len()];
    sites.test_against_hats(&v, &mut out);
    Ok(ComplexVector::from_vec(out))
}

/// ((f(·, t), φ_m))_m.
pub fn fem_load(source: &dyn SpaceTimeFn, t: f64, grid: &SpaceGrid, rule: &QuadratureRule) -> Result<ComplexVector> {
    check_legendre(rule)?;
    let sites = ElementSites::new(grid, rule);
    let mut v = vec![Complex64::new(0.0, 0.0); sites.x.len()];
    source.eval_many(&sites.x, t, &mut v);
    let mut out = vec![Complex64::new(0.0, 0.0); grid.interior_len()];
    sites.test_against_hats(&v, &mut out);
    Ok(ComplexVector::from_vec(out))
}

/// How the initial data enters the general-IC correction term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum IcTesting {
    /// φ evaluated exactly at the quadrature sites.
    #[default]
    Exact,
    /// The P1 interpolant of φ at the quadrature sites.
    Interpolant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FemOptions {
    pub quad_order: usize,
    pub ic_testing: IcTesting,
}

impl Default for FemOptions {
    fn default() -> Self {
        Self {
            quad_order: DEFAULT_QUAD_ORDER,
            ic_testing: IcTesting::Exact,
        }
    }
}

/// Nodal coefficients G_h⁰..G_hᴺ; boundary coefficients are zero and not
/// stored.
#[derive(Debug, Clone)]
pub struct FemSolution {
    pub history: SolutionHistory,
}

impl FemSolution {
    pub fn coefficients(&self, n: usize) -> Option<&ComplexVector> {
        self.history.level(n)
    }

    pub fn final_coefficients(&self) -> &ComplexVector {
        self.history.last()
    }

    /// √(Σ_{n≥1} τ |G(t_n) − G_hⁿ|₁²) with the seminorm of the exact
    /// solution taken from its x-derivative `exact_dx`.
    pub fn energy_error(&self, exact_dx: &dyn SpaceTimeFn, rule: &QuadratureRule) -> Result<f64> {
        let grid = self.history.space();
        let time = self.history.time();
        let mut s = 0.0;
        for (n, level) in self.history.levels().iter().enumerate().skip(1) {
            let t = time.level(n);
            let e = h1_error_continuous(level, grid, |x| exact_dx.eval(x, t), rule)?;
            s += time.tau * e * e;
        }
        Ok(s.sqrt())
    }
}

/// A prepared finite element march.
pub struct FemSolver {
    params: ModelParams,
    space: SpaceGrid,
    time: TimeGrid,
    coeffs: CoefficientTable,
    mats: FemMatrices,
    sites: ElementSites,
    options: FemOptions,
}

impl FemSolver {
    pub fn new(params: &ModelParams, space: &SpaceGrid, time: &TimeGrid, options: FemOptions) -> Result<Self> {
        let params = params.validate(space)?;
        let coeffs = CoefficientTable::new(params.gamma, params.lambda, time.tau, time.n_count)?;
        let mats = assemble_fem(space, &params, time.tau, coeffs.d[0])?;
        let rule = gauss_legendre(options.quad_order)?;
        Ok(Self {
            sites: ElementSites::new(space, &rule),
            params,
            space: *space,
            time: *time,
            coeffs,
            mats,
            options,
        })
    }

    pub fn matrices(&self) -> &FemMatrices {
        &self.mats
    }

    /// Marches from G_h⁰ = interpolant of `initial`, calling
    /// `observe(n, G_hⁿ)` for n = 0..=N.
    pub fn run<F>(
        &self,
        source: &dyn SpaceTimeFn,
        initial: &dyn Fn(f64) -> Complex64,
        variant: IcVariant,
        mut observe: F,
    ) -> Result<()>
    where
        F: FnMut(usize, &[Complex64]) -> Result<()>,
    {
        let p = &self.params;
        let tau = self.time.tau;
        let nsites = self.sites.x.len();
        let unknowns = self.space.interior_len();
        let zero = Complex64::new(0.0, 0.0);
        let u: Vec<f64> = self.sites.x.iter().map(|&x| p.potential.eval(x)).collect();
        let rates: Vec<Complex64> = u.iter().map(|&ux| p.p * ux * tau).collect();
        let inv = self.coeffs.inv_tau_gamma();

        let g0 = ComplexVector::from_fn(&self.space, initial);
        let mut at_sites = vec![zero; nsites];
        self.sites.interpolate(&g0, &mut at_sites);
        // φ at the sites for the correction term
        let phi_sites: Vec<Complex64> = match self.options.ic_testing {
            IcTesting::Exact => self.sites.x.iter().map(|&x| initial(x)).collect(),
            IcTesting::Interpolant => at_sites.clone(),
        };
        let coupling: Vec<Complex64> = self.sites.x.iter().map(|&x| p.coupling_rate(x)).collect();

        let mut acc = HistoryAccumulator::new(rates, self.time.n_count + 1);
        acc.push(&at_sites);
        observe(0, &g0)?;

        let mut f_sites = vec![zero; nsites];
        let mut lag = vec![zero; nsites];
        let mut rhs = vec![zero; unknowns];
        for n in 1..=self.time.n_count {
            let t = self.time.level(n);
            source.eval_many(&self.sites.x, t, &mut f_sites);
            acc.lagged_sum(&self.coeffs.d, &mut lag);
            let q = self.coeffs.q_partial[n] * inv;
            for s in 0..nsites {
                f_sites[s] -= lag[s] * inv;
                if variant == IcVariant::GeneralIc {
                    f_sites[s] += (-coupling[s] * t).exp() * phi_sites[s] * q;
                }
            }
            self.sites.test_against_hats(&f_sites, &mut rhs);
            self.mats.system.solve_in_place(&mut rhs)?;
            if rhs.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::EvaluatorFailure {
                    p: p.p.to_string(),
                    reason: format!("non-finite value at level {n}"),
                });
            }
            self.sites.interpolate(&rhs, &mut at_sites);
            acc.push(&at_sites);
            observe(n, &rhs)?;
        }
        Ok(())
    }
}

/// Runs the finite element scheme and keeps every level.
pub fn march_fem(
    params: &ModelParams,
    space: &SpaceGrid,
    time: &TimeGrid,
    source: &dyn SpaceTimeFn,
    initial: &dyn Fn(f64) -> Complex64,
    variant: IcVariant,
    options: FemOptions,
) -> Result<FemSolution> {
    let solver = FemSolver::new(params, space, time, options)?;
    let mut history: Option<SolutionHistory> = None;
    solver.run(source, initial, variant, |n, g| {
        let v = ComplexVector::from_vec(g.to_vec());
        match history.as_mut() {
            None if n == 0 => history = Some(SolutionHistory::new(*space, *time, v)?),
            Some(h) => h.push(v)?,
            None => unreachable!("level 0 is observed first"),
        }
        Ok(())
    })?;
    Ok(FemSolution {
        history: history.expect("level 0 always observed"),
    })
}

/// Runs the scheme and keeps only G_hᴺ.
pub fn march_fem_final(
    params: &ModelParams,
    space: &SpaceGrid,
    time: &TimeGrid,
    source: &dyn SpaceTimeFn,
    initial: &dyn Fn(f64) -> Complex64,
    variant: IcVariant,
    options: FemOptions,
) -> Result<ComplexVector> {
    let solver = FemSolver::new(params, space, time, options)?;
    let mut last = ComplexVector::zeros(space.interior_len());
    solver.run(source, initial, variant, |n, g| {
        if n == time.n_count {
            last = ComplexVector::from_vec(g.to_vec());
        }
        Ok(())
    })?;
    Ok(last)
}
