//! Test problems with known data: the three bundled examples and the
//! lifting that turns non-homogeneous initial/boundary data into a
//! zero-data problem.
//!
//! All sources are for the form
//!
//! ```text
//! e^{−ct} ᶜD_t^γ(e^{ct} G) − λ^γ G = K G_xx + f,   c(x) = λ + pU(x).
//! ```

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ComplexVector, ModelParams, SolutionHistory, SpaceGrid, SpaceTimeFn, TimeGrid};
use crate::quadrature::{caputo_of, gauss_legendre, rl_integral, QuadratureRule, MAX_LEGENDRE_ORDER};
use crate::special::{gamma as gamma_fn, unit_exp_moment_ladder};

type ScalarFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;
pub type Field = Arc<dyn SpaceTimeFn>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A function of one variable with its first two derivatives.
#[derive(Clone)]
pub struct Profile {
    pub value: ScalarFn,
    pub d1: ScalarFn,
    pub d2: ScalarFn,
}

impl Profile {
    pub fn new<F, F1, F2>(value: F, d1: F1, d2: F2) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
        F1: Fn(f64) -> Complex64 + Send + Sync + 'static,
        F2: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
        }
    }

    pub fn zero() -> Self {
        Self::new(|_| ZERO, |_| ZERO, |_| ZERO)
    }

    pub fn eval(&self, s: f64) -> Complex64 {
        (self.value)(s)
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Profile(..)")
    }
}

/// Source, data and (when known) exact solution of one problem.
#[derive(Clone)]
pub struct ManufacturedProblem {
    pub name: String,
    pub exact: Option<Field>,
    /// ∂G/∂x of the exact solution.
    pub exact_dx: Option<Field>,
    pub source: Field,
    /// φ(x) = G(x, 0).
    pub initial: Profile,
    /// ψ_l(t) = G(a, t).
    pub boundary_left: Profile,
    /// ψ_r(t) = G(b, t).
    pub boundary_right: Profile,
    pub lifted: bool,
}

impl fmt::Debug for ManufacturedProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedProblem")
            .field("name", &self.name)
            .field("has_exact", &self.exact.is_some())
            .field("lifted", &self.lifted)
            .finish()
    }
}

impl ManufacturedProblem {
    /// φ at the interior nodes.
    pub fn initial_vector(&self, grid: &SpaceGrid) -> ComplexVector {
        ComplexVector::from_fn(grid, |x| self.initial.eval(x))
    }

    /// Exact solution sampled on every level, if known.
    pub fn exact_history(&self, space: SpaceGrid, time: TimeGrid) -> Option<SolutionHistory> {
        let exact = self.exact.clone()?;
        Some(SolutionHistory::sample(space, time, move |x, t| exact.eval(x, t)))
    }
}

/// The function subtracted by [`lift_boundary`]:
///
/// ```text
/// L = e^{−c(x)t} [φ(x) + ξ(A_r(t) − φ(b)) + (1−ξ)(A_l(t) − φ(a))]
/// ```
///
/// with ξ = (x−a)/(b−a), A_l = ψ_l e^{c(a)t}, A_r = ψ_r e^{c(b)t}.
pub struct Lifting {
    params: ModelParams,
    phi: Profile,
    left: Profile,
    right: Profile,
    phi_a: Complex64,
    phi_b: Complex64,
    c_a: Complex64,
    c_b: Complex64,
    rule: QuadratureRule,
}

struct LiftTerms {
    a_l: Complex64,
    a_r: Complex64,
}

impl Lifting {
    fn ends(&self, t: f64) -> LiftTerms {
        LiftTerms {
            a_l: self.left.eval(t) * (self.c_a * t).exp(),
            a_r: self.right.eval(t) * (self.c_b * t).exp(),
        }
    }

    fn blend(&self, x: f64, e: &LiftTerms) -> (Complex64, Complex64, Complex64) {
        let (a, b) = (self.params.a, self.params.b);
        let xi = (x - a) / (b - a);
        let jump_r = e.a_r - self.phi_b;
        let jump_l = e.a_l - self.phi_a;
        let bv = self.phi.eval(x) + jump_r * xi + jump_l * (1.0 - xi);
        let bx = (self.phi.d1)(x) + (jump_r - jump_l) / (b - a);
        let bxx = (self.phi.d2)(x);
        (bv, bx, bxx)
    }

    /// Caputo derivatives of A_l and A_r at t.
    fn caputo_ends(&self, t: f64) -> (Complex64, Complex64) {
        let g = self.params.gamma;
        let dl = |s: f64| ((self.left.d1)(s) + self.c_a * self.left.eval(s)) * (self.c_a * s).exp();
        let dr = |s: f64| ((self.right.d1)(s) + self.c_b * self.right.eval(s)) * (self.c_b * s).exp();
        let cl = caputo_of(g, dl, t, &self.rule).expect("rule checked at construction");
        let cr = caputo_of(g, dr, t, &self.rule).expect("rule checked at construction");
        (cl, cr)
    }

    fn potential_terms(&self, x: f64) -> (Complex64, Complex64, Complex64) {
        let p = &self.params;
        let c = p.coupling_rate(x);
        let c1 = p.p * p.potential.derivative(x).unwrap_or(0.0);
        let c2 = p.p * p.potential.second_derivative(x).unwrap_or(0.0);
        (c, c1, c2)
    }

    /// L(x, t).
    pub fn value(&self, x: f64, t: f64) -> Complex64 {
        let (c, _, _) = self.potential_terms(x);
        let (bv, _, _) = self.blend(x, &self.ends(t));
        (-c * t).exp() * bv
    }

    /// ∂L/∂x.
    pub fn dx(&self, x: f64, t: f64) -> Complex64 {
        let (c, c1, _) = self.potential_terms(x);
        let (bv, bx, _) = self.blend(x, &self.ends(t));
        (-c * t).exp() * (bx - c1 * t * bv)
    }

    fn residual_with(&self, x: f64, t: f64, e: &LiftTerms, cap: (Complex64, Complex64)) -> Complex64 {
        // e^{−ct}ᶜD^γ(e^{ct}L) − λ^γ L − K L_xx
        let p = &self.params;
        let (c, c1, c2) = self.potential_terms(x);
        let (bv, bx, bxx) = self.blend(x, e);
        let ect = (-c * t).exp();
        let xi = (x - p.a) / (p.b - p.a);
        let lhs = ect * (cap.1 * xi + cap.0 * (1.0 - xi)) - ect * bv * p.lambda.powf(p.gamma);
        let lxx = ect * (c1 * c1 * t * t * bv - c2 * t * bv - c1 * bx * (2.0 * t) + bxx);
        lhs - lxx * p.k_gamma
    }

    /// The operator applied to L at (x, t).
    pub fn residual(&self, x: f64, t: f64) -> Complex64 {
        self.residual_with(x, t, &self.ends(t), self.caputo_ends(t))
    }
}

impl SpaceTimeFn for Lifting {
    fn eval(&self, x: f64, t: f64) -> Complex64 {
        self.value(x, t)
    }
}

struct LiftedSource {
    original: Field,
    lifting: Arc<Lifting>,
}

impl SpaceTimeFn for LiftedSource {
    fn eval(&self, x: f64, t: f64) -> Complex64 {
        self.original.eval(x, t) - self.lifting.residual(x, t)
    }

    fn eval_many(&self, xs: &[f64], t: f64, out: &mut [Complex64]) {
        self.original.eval_many(xs, t, out);
        let ends = self.lifting.ends(t);
        let cap = self.lifting.caputo_ends(t);
        for (o, &x) in out.iter_mut().zip(xs) {
            *o -= self.lifting.residual_with(x, t, &ends, cap);
        }
    }
}

struct Difference(Field, Arc<Lifting>, bool);

impl SpaceTimeFn for Difference {
    fn eval(&self, x: f64, t: f64) -> Complex64 {
        let l = if self.2 { self.1.dx(x, t) } else { self.1.value(x, t) };
        self.0.eval(x, t) - l
    }
}

/// A zero-data problem for W = G − L together with L.
#[derive(Clone)]
pub struct LiftedProblem {
    pub problem: ManufacturedProblem,
    pub lifting: Arc<Lifting>,
}

impl LiftedProblem {
    /// G = W + L on every level of a W history.
    pub fn reconstruct(&self, w: &SolutionHistory) -> Result<SolutionHistory> {
        let l = SolutionHistory::sample(*w.space(), *w.time(), |x, t| self.lifting.value(x, t));
        let neg = SolutionHistory::sample(*w.space(), *w.time(), |_, _| ZERO);
        w.difference(&neg.difference(&l)?)
    }
}

/// Subtracts the lifting L from a problem with non-homogeneous data.
///
/// Needs U' and U'' whenever p ≠ 0 and the lifting is not constant in x.
/// `rule` must be the Gauss–Jacobi rule for the model's γ; it evaluates the
/// Caputo derivatives of the boundary terms.
pub fn lift_boundary(
    problem: &ManufacturedProblem,
    params: &ModelParams,
    rule: &QuadratureRule,
) -> Result<LiftedProblem> {
    if rule.singular_order() != Some(params.gamma) {
        return Err(Error::RuleMismatch(format!(
            "lifting needs the Gauss–Jacobi rule for γ = {}",
            params.gamma
        )));
    }
    if params.p != ZERO && !params.potential.has_derivatives() {
        return Err(Error::MissingData(format!(
            "potential '{}' has no derivatives",
            params.potential.label()
        )));
    }
    let phi_a = problem.initial.eval(params.a);
    let phi_b = problem.initial.eval(params.b);
    for (side, phi, psi) in [
        ("left", phi_a, problem.boundary_left.eval(0.0)),
        ("right", phi_b, problem.boundary_right.eval(0.0)),
    ] {
        if (phi - psi).norm() > 1e-12 * (1.0 + phi.norm()) {
            return Err(Error::IncompatibleData(format!(
                "{side} corner: φ = {phi}, ψ(0) = {psi}"
            )));
        }
    }
    let lifting = Arc::new(Lifting {
        c_a: params.coupling_rate(params.a),
        c_b: params.coupling_rate(params.b),
        params: params.clone(),
        phi: problem.initial.clone(),
        left: problem.boundary_left.clone(),
        right: problem.boundary_right.clone(),
        phi_a,
        phi_b,
        rule: rule.clone(),
    });
    let source: Field = Arc::new(LiftedSource {
        original: problem.source.clone(),
        lifting: lifting.clone(),
    });
    let exact = problem
        .exact
        .clone()
        .map(|e| Arc::new(Difference(e, lifting.clone(), false)) as Field);
    let exact_dx = problem
        .exact_dx
        .clone()
        .map(|e| Arc::new(Difference(e, lifting.clone(), true)) as Field);
    Ok(LiftedProblem {
        problem: ManufacturedProblem {
            name: format!("{} (lifted)", problem.name),
            exact,
            exact_dx,
            source,
            initial: Profile::zero(),
            boundary_left: Profile::zero(),
            boundary_right: Profile::zero(),
            lifted: true,
        },
        lifting,
    })
}

fn check_unit_linear(params: &ModelParams) -> Result<()> {
    let linear = [0.0, 0.3, 1.0]
        .iter()
        .all(|&x| (params.potential.eval(x) - x).abs() < 1e-15);
    if params.a != 0.0 || params.b != 1.0 || !linear {
        return Err(Error::IncompatibleData(
            "example needs U(x) = x on (0, 1)".into(),
        ));
    }
    Ok(())
}

fn check_unit(params: &ModelParams) -> Result<()> {
    if params.a != 0.0 || params.b != 1.0 {
        return Err(Error::IncompatibleData("example needs the interval (0, 1)".into()));
    }
    Ok(())
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

// Example 1: G = (t²+1) e^{−(λ+px)t} S(x), S = sin x − x sin 1.

#[derive(Clone, Copy)]
struct Ex1 {
    gamma: f64,
    lambda: f64,
    k: f64,
    p: Complex64,
    lifted: bool,
}

impl Ex1 {
    fn s(x: f64) -> f64 {
        x.sin() - x * 1f64.sin()
    }

    fn exp(&self, x: f64, t: f64) -> Complex64 {
        (-(self.p * x + self.lambda) * t).exp()
    }

    fn time_factor(&self, t: f64) -> f64 {
        if self.lifted {
            t * t
        } else {
            t * t + 1.0
        }
    }
}

impl SpaceTimeFn for Ex1 {
    fn eval(&self, x: f64, t: f64) -> Complex64 {
        let p = self.p;
        let e = self.exp(x, t);
        let tf = self.time_factor(t);
        let cap = 2.0 * t.powf(2.0 - self.gamma) / gamma_fn(3.0 - self.gamma);
        let s1 = 1f64.sin();
        // (e^{−(λ+px)t} S)_xx / e^{−(λ+px)t}
        let bracket = (p * p * t * t - 1.0) * x.sin() - p * (2.0 * t * x.cos())
            + (p * (2.0 * t) - p * p * (t * t * x)) * s1;
        e * Self::s(x) * (cap - self.lambda.powf(self.gamma) * tf) - e * bracket * (self.k * tf)
    }
}

struct Ex1Exact(Ex1, bool);

impl SpaceTimeFn for Ex1Exact {
    fn eval(&self, x: f64, t: f64) -> Complex64 {
        let ex = &self.0;
        let e = ex.exp(x, t) * ex.time_factor(t);
        if self.1 {
            let ds = x.cos() - 1f64.sin();
            e * (real(ds) - ex.p * (t * Ex1::s(x)))
        } else {
            e * Ex1::s(x)
        }
    }
}

fn example1_impl(params: &ModelParams, lifted: bool) -> Result<ManufacturedProblem> {
    check_unit_linear(params)?;
    let ex = Ex1 {
        gamma: params.gamma,
        lambda: params.lambda,
        k: params.k_gamma,
        p: params.p,
        lifted,
    };
    let initial = if lifted {
        Profile::zero()
    } else {
        let s1 = 1f64.sin();
        Profile::new(
            |x| real(Ex1::s(x)),
            move |x| real(x.cos() - s1),
            |x| real(-x.sin()),
        )
    };
    Ok(ManufacturedProblem {
        name: if lifted { "example1-lifted" } else { "example1" }.into(),
        exact: Some(Arc::new(Ex1Exact(ex, false))),
        exact_dx: Some(Arc::new(Ex1Exact(ex, true))),
        source: Arc::new(ex),
        initial,
        boundary_left: Profile::zero(),
        boundary_right: Profile::zero(),
        lifted,
    })
}

/// Example 1 for G itself: φ = sin x − x sin 1, zero boundary data.
pub fn example1(params: &ModelParams) -> Result<ManufacturedProblem> {
    example1_impl(params, false)
}

/// Example 1 after subtracting (sin x − x sin 1)e^{−(λ+px)t}: the unknown
/// is W = t² e^{−(λ+px)t}(sin x − x sin 1) with zero data.
pub fn example1_lifted(params: &ModelParams) -> Result<ManufacturedProblem> {
    example1_impl(params, true)
}

// Example 2: φ = 0, ψ_l = t, ψ_r = e^{−t} − 1, no exact solution.

#[derive(Clone)]
struct Ex2 {
    gamma: f64,
    lambda: f64,
    k: f64,
    p: Complex64,
    rule: QuadratureRule,
    lifted: bool,
}

/// t-only pieces of the Example 2 sources.
#[derive(Clone, Copy)]
struct Ex2Time {
    /// ₀I_t^{1−γ}(e^{λs})
    i_exp: Complex64,
    /// ᶜD^γ((e^{−s}−1)e^{(λ+p)s})
    c1: Complex64,
    /// ᶜD^γ(s e^{λs})
    c2: Complex64,
}

impl Ex2 {
    fn time_terms(&self, t: f64) -> Ex2Time {
        let g = self.gamma;
        let lam = self.lambda;
        let lp = self.p + lam;
        let i_exp = rl_integral(g, |s: f64| real((lam * s).exp()), t, &self.rule)
            .expect("rule checked at construction");
        if !self.lifted {
            return Ex2Time { i_exp, c1: ZERO, c2: ZERO };
        }
        let c1 = caputo_of(
            g,
            |s: f64| (lp - 1.0) * ((lp - 1.0) * s).exp() - lp * (lp * s).exp(),
            t,
            &self.rule,
        )
        .expect("rule checked at construction");
        let c2 = caputo_of(g, |s: f64| real((1.0 + lam * s) * (lam * s).exp()), t, &self.rule)
            .expect("rule checked at construction");
        Ex2Time { i_exp, c1, c2 }
    }

    fn at(&self, x: f64, t: f64, tt: &Ex2Time) -> Complex64 {
        let p = self.p;
        let lg = self.lambda.powf(self.gamma);
        let epx = (-p * (x * t)).exp();
        let e = epx * (-self.lambda * t).exp();
        let base = -lg * epx + e * tt.i_exp * self.lambda;
        if !self.lifted {
            return base;
        }
        let em1 = (-t).exp() - 1.0;
        // e^{pt}e^{−pxt} written as one exponential
        let ep1x = (p * (t * (1.0 - x))).exp();
        let caputo = -(tt.c1 * x + tt.c2 * (1.0 - x)) * e;
        let tempering = (em1 * x * ep1x + (t * (1.0 - x) - 1.0) * epx) * lg;
        let diffusion = (em1 * (p * p * (t * t * x) - p * (2.0 * t)) * ep1x
            + (-p * p * (t * x) + p * p * t + p * 2.0) * (t * t) * epx)
            * self.k;
        caputo + tempering + e * tt.i_exp * self.lambda + diffusion
    }
}

impl SpaceTimeFn for Ex2 {
    fn eval(&self, x: f64, t: f64) -> Complex64 {
        self.at(x, t, &self.time_terms(t))
    }

    fn eval_many(&self, xs: &[f64], t: f64, out: &mut [Complex64]) {
        let tt = self.time_terms(t);
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = self.at(x, t, &tt);
        }
    }
}

fn example2_impl(params: &ModelParams, rule: &QuadratureRule, lifted: bool) -> Result<ManufacturedProblem> {
    check_unit_linear(params)?;
    if rule.singular_order() != Some(params.gamma) {
        return Err(Error::RuleMismatch(format!(
            "example 2 needs the Gauss–Jacobi rule for γ = {}",
            params.gamma
        )));
    }
    let ex = Ex2 {
        gamma: params.gamma,
        lambda: params.lambda,
        k: params.k_gamma,
        p: params.p,
        rule: rule.clone(),
        lifted,
    };
    let (left, right) = if lifted {
        (Profile::zero(), Profile::zero())
    } else {
        (
            Profile::new(real, |_| real(1.0), |_| ZERO),
            Profile::new(
                |t| real((-t).exp() - 1.0),
                |t| real(-(-t).exp()),
                |t| real((-t).exp()),
            ),
        )
    };
    Ok(ManufacturedProblem {
        name: if lifted { "example2-lifted" } else { "example2" }.into(),
        exact: None,
        exact_dx: None,
        source: Arc::new(ex),
        initial: Profile::zero(),
        boundary_left: left,
        boundary_right: right,
        lifted,
    })
}

/// Example 2 for G: source −λ^γ e^{−pxt} + λe^{−(λ+px)t} ₀I_t^{1−γ}(e^{λt}),
/// φ = 0, ψ_l = t, ψ_r = e^{−t} − 1. The fractional integral uses `rule`.
pub fn example2(params: &ModelParams, rule: &QuadratureRule) -> Result<ManufacturedProblem> {
    example2_impl(params, rule, false)
}

/// Example 2 for W = G − [(e^{−t}−1)e^{(λ+p)t}x + te^{λt}(1−x)]e^{−(λ+px)t},
/// with the source written out term by term; Caputo and RL parts by `rule`.
pub fn example2_lifted(params: &ModelParams, rule: &QuadratureRule) -> Result<ManufacturedProblem> {
    example2_impl(params, rule, true)
}

/// The lifting function of Example 2, for reconstructing G from W.
pub fn example2_lifting(params: &ModelParams) -> impl Fn(f64, f64) -> Complex64 + Send + Sync {
    let p = params.p;
    move |x, t| {
        let em1 = (-t).exp() - 1.0;
        em1 * x * (p * (t * (1.0 - x))).exp() + t * (1.0 - x) * (-p * (x * t)).exp()
    }
}

// Example 3: G = t² e^{−λt}(x − x³)/(p+2).
//
// With z = pU(x)t the Caputo part reduces to
//   e^{−pUt}ᶜD^γ(t²e^{pUt}) = t^{2−γ}/Γ(1−γ) [(2+z)φ(1−γ,z) − (2+2z)φ(2−γ,z) + zφ(3−γ,z)]
// where φ(a,z) = ∫₀¹ v^{a−1}e^{−zv}dv; G_xx = −6x t²e^{−λt}/(p+2).

#[derive(Clone)]
struct Ex3 {
    gamma: f64,
    lambda: f64,
    k: f64,
    p: Complex64,
    potential: crate::model::Potential,
    inv_gamma: f64,
    lambda_pow: f64,
    inv_p2: Complex64,
}

impl Ex3 {
    fn new(params: &ModelParams) -> Self {
        Ex3 {
            gamma: params.gamma,
            lambda: params.lambda,
            k: params.k_gamma,
            p: params.p,
            potential: params.potential.clone(),
            inv_gamma: 1.0 / gamma_fn(1.0 - params.gamma),
            lambda_pow: params.lambda.powf(params.gamma),
            inv_p2: (params.p + 2.0).inv(),
        }
    }

    fn exact(&self, x: f64, t: f64) -> Complex64 {
        t * t * (-self.lambda * t).exp() * (x - x * x * x) * self.inv_p2
    }

    /// e^{−ct}ᶜD^γ(t² e^{ct}) / t^{2−γ} with c = pU(x), times Γ(1−γ).
    fn caputo_core(&self, x: f64, t: f64) -> Complex64 {
        let z = self.p * self.potential.eval(x) * t;
        let mut phi = [ZERO; 3];
        unit_exp_moment_ladder(1.0 - self.gamma, z, &mut phi);
        (z + 2.0) * phi[0] - (z * 2.0 + 2.0) * phi[1] + z * phi[2]
    }

    /// e^{−ct}ᶜD^γ(t² e^{ct}) with c = pU(x).
    #[cfg(test)]
    fn caputo_factor(&self, x: f64, t: f64) -> Complex64 {
        if t <= 0.0 {
            return ZERO;
        }
        self.caputo_core(x, t) * (t.powf(2.0 - self.gamma) * self.inv_gamma)
    }
    /// The source on every interior node of `space` × `time`, level-major.
    ///
    /// E_k(t) = ∫₀ᵗ u^{k−γ}e^{−cu}du is carried from level to level: closed
    /// form on [0, τ], Gauss–Legendre on each later step.
    fn tabulate(&self, space: &SpaceGrid, time: &TimeGrid) -> Result<Vec<Complex64>> {
        let g = self.gamma;
        let tau = time.tau;
        let xs = space.interior_nodes();
        let m = xs.len();
        let cs: Vec<Complex64> = xs.iter().map(|&x| self.p * self.potential.eval(x)).collect();
        let cmax = cs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let order = (10 + (cmax * tau).ceil() as usize).min(MAX_LEGENDRE_ORDER);
        let rule = gauss_legendre(order)?;
        let s: Vec<f64> = rule.nodes.iter().map(|&v| 0.5 * (v + 1.0)).collect();
        let w: Vec<f64> = rule.weights.iter().map(|&v| 0.5 * v * tau).collect();
        let shifts: Vec<Complex64> = cs
            .iter()
            .flat_map(|&c| s.iter().map(move |&sj| (-c * (tau * sj)).exp()))
            .collect();
        let mut e: Vec<[Complex64; 3]> = cs
            .iter()
            .map(|&c| {
                let mut phi = [ZERO; 3];
                unit_exp_moment_ladder(1.0 - g, c * tau, &mut phi);
                [phi[0] * tau.powf(1.0 - g), phi[1] * tau.powf(2.0 - g), phi[2] * tau.powf(3.0 - g)]
            })
            .collect();
        let mut out = vec![ZERO; (time.n_count + 1) * m];
        let mut basis = vec![[0.0; 3]; order];
        for n in 1..=time.n_count {
            let t = time.level(n);
            if n > 1 {
                let t0 = time.level(n - 1);
                for ((b, &sj), &wj) in basis.iter_mut().zip(&s).zip(&w) {
                    let u = t0 + tau * sj;
                    let v = wj * u.powf(-g);
                    *b = [v, v * u, v * u * u];
                }
                for (i, &c) in cs.iter().enumerate() {
                    let lead = (-c * t0).exp();
                    let mut acc = [ZERO; 3];
                    for (j, b) in basis.iter().enumerate() {
                        let v = lead * shifts[i * order + j];
                        acc[0] += v * b[0];
                        acc[1] += v * b[1];
                        acc[2] += v * b[2];
                    }
                    for k in 0..3 {
                        e[i][k] += acc[k];
                    }
                }
            }
            let ef = self.inv_p2 * (-self.lambda * t).exp();
            let tt = t * t;
            let row = &mut out[n * m..(n + 1) * m];
            for (i, (&x, &c)) in xs.iter().zip(&cs).enumerate() {
                let ei = e[i];
                let core = ((c * tt + 2.0 * t) * ei[0] - (c * (2.0 * t) + 2.0) * ei[1] + c * ei[2]) * self.inv_gamma;
                row[i] = ef * ((x - x * x * x) * (core - tt * self.lambda_pow) + 6.0 * self.k * tt * x);
            }
        }
        Ok(out)
    }
}

impl SpaceTimeFn for Ex3 {
    fn eval(&self, x: f64, t: f64) -> Complex64 {
        let mut out = [ZERO];
        self.eval_many(&[x], t, &mut out);
        out[0]
    }

    fn eval_many(&self, xs: &[f64], t: f64, out: &mut [Complex64]) {
        let e = self.inv_p2 * (-self.lambda * t).exp();
        let cap = if t > 0.0 { t.powf(2.0 - self.gamma) * self.inv_gamma } else { 0.0 };
        let tt = t * t;
        for (o, &x) in out.iter_mut().zip(xs) {
            let shape = x - x * x * x;
            let core = if t > 0.0 { self.caputo_core(x, t) * cap } else { ZERO };
            *o = e * (shape * (core - tt * self.lambda_pow) + 6.0 * self.k * tt * x);
        }
    }
}

struct Ex3Exact(Ex3, bool);

impl SpaceTimeFn for Ex3Exact {
    fn eval(&self, x: f64, t: f64) -> Complex64 {
        if self.1 {
            t * t * (-self.0.lambda * t).exp() * (1.0 - 3.0 * x * x) / (self.0.p + 2.0)
        } else {
            self.0.exact(x, t)
        }
    }
}

/// Example 3: the transform t²e^{−λt}(x − x³)/(p+2) of the density
/// t²e^{−λt−2A}(x − x³); zero data, any admissible U.
pub fn example3(params: &ModelParams) -> Result<ManufacturedProblem> {
    check_unit(params)?;
    let ex = Ex3::new(params);
    Ok(ManufacturedProblem {
        name: "example3".into(),
        exact: Some(Arc::new(Ex3Exact(ex.clone(), false))),
        exact_dx: Some(Arc::new(Ex3Exact(ex.clone(), true))),
        source: Arc::new(ex),
        initial: Profile::zero(),
        boundary_left: Profile::zero(),
        boundary_right: Profile::zero(),
        lifted: false,
    })
}

/// [`example3`] with the source tabulated on the nodes of `space` × `time`,
/// for repeated solves at many p. Off-grid points use the closed form.
pub fn example3_on_grid(params: &ModelParams, space: &SpaceGrid, time: &TimeGrid) -> Result<ManufacturedProblem> {
    let mut problem = example3(params)?;
    let values = Ex3::new(params).tabulate(space, time)?;
    problem.source = Arc::new(TabulatedSource {
        space: *space,
        time: *time,
        values,
        fallback: problem.source.clone(),
    });
    Ok(problem)
}

struct TabulatedSource {
    space: SpaceGrid,
    time: TimeGrid,
    values: Vec<Complex64>,
    fallback: Field,
}

impl SpaceTimeFn for TabulatedSource {
    fn eval(&self, x: f64, t: f64) -> Complex64 {
        let fm = (x - self.space.a) / self.space.h;
        let fn_ = t / self.time.tau;
        let (m, n) = (fm.round(), fn_.round());
        let inside = m >= 1.0 && m < self.space.m_count as f64 && n >= 0.0 && n <= self.time.n_count as f64;
        if inside && (fm - m).abs() < 1e-9 && (fn_ - n).abs() < 1e-9 {
            let row = self.space.m_count - 1;
            return self.values[n as usize * row + m as usize - 1];
        }
        self.fallback.eval(x, t)
    }
}

/// The inverse transform of Example 3: t²e^{−λt−2A}(x − x³).
pub fn example3_density(lambda: f64, a: f64, x: f64, t: f64) -> f64 {
    t * t * (-lambda * t - 2.0 * a).exp() * (x - x * x * x)
}
