//! Problem definition: model parameters, uniform grids and the complex
//! containers shared by both schemes.

use std::fmt;
use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The potential U(x0) defining the functional A = ∫ U(x0(s)) ds.
///
/// Derivatives are optional; they are only needed when lifting
/// non-homogeneous boundary data (the lifted source contains U' and U'').
#[derive(Clone)]
pub struct Potential {
    label: String,
    value: RealFn,
    first: Option<RealFn>,
    second: Option<RealFn>,
}

impl Potential {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            value: Arc::new(f),
            first: None,
            second: None,
        }
    }

    /// Attaches analytic first and second derivatives.
    pub fn with_derivatives<F1, F2>(mut self, first: F1, second: F2) -> Self
    where
        F1: Fn(f64) -> f64 + Send + Sync + 'static,
        F2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.first = Some(Arc::new(first));
        self.second = Some(Arc::new(second));
        self
    }

    /// U(x0) = c.
    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_| c).with_derivatives(|_| 0.0, |_| 0.0)
    }

    /// U(x0) = x0.
    pub fn linear() -> Self {
        Self::new("x0", |x| x).with_derivatives(|_| 1.0, |_| 0.0)
    }

    /// U(x0) = x0².
    pub fn quadratic() -> Self {
        Self::new("x0^2", |x| x * x).with_derivatives(|x| 2.0 * x, |_| 2.0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn derivative(&self, x: f64) -> Option<f64> {
        self.first.as_ref().map(|f| f(x))
    }

    pub fn second_derivative(&self, x: f64) -> Option<f64> {
        self.second.as_ref().map(|f| f(x))
    }

    pub fn has_derivatives(&self) -> bool {
        self.first.is_some() && self.second.is_some()
    }
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Potential({})", self.label)
    }
}

/// Parameters of the backward tempered fractional Feynman–Kac problem.
#[derive(Debug, Clone)]
pub struct ModelParams {
    /// Fractional order, 0 < gamma < 1.
    pub gamma: f64,
    /// Tempering parameter, lambda >= 0.
    pub lambda: f64,
    /// Diffusion coefficient, K > 0.
    pub k_gamma: f64,
    /// Laplace variable dual to the functional A.
    pub p: Complex64,
    pub potential: Potential,
    pub a: f64,
    pub b: f64,
}

impl ModelParams {
    /// Parameters on (0, 1) with K = 1 and U(x0) = x0, the setting of all
    /// bundled manufactured problems.
    pub fn unit_interval(gamma: f64, lambda: f64, p: Complex64) -> Self {
        Self {
            gamma,
            lambda,
            k_gamma: 1.0,
            p,
            potential: Potential::linear(),
            a: 0.0,
            b: 1.0,
        }
    }

    /// Checks every model invariant on the nodes of `grid` and returns the
    /// parameters unchanged when they hold. Reports the first violation.
    pub fn validate(&self, grid: &SpaceGrid) -> Result<ModelParams> {
        check_gamma(self.gamma)?;
        check_lambda(self.lambda)?;
        if !(self.k_gamma > 0.0) {
            return Err(Error::NonpositiveDiffusion(self.k_gamma));
        }
        if !(self.a < self.b) {
            return Err(Error::BadPartition(format!(
                "interval ({}, {}) is empty",
                self.a, self.b
            )));
        }
        if grid.a != self.a || grid.b != self.b {
            return Err(Error::GridMismatch(format!(
                "grid spans ({}, {}), model spans ({}, {})",
                grid.a, grid.b, self.a, self.b
            )));
        }
        for x in grid.nodes() {
            let u = self.potential.eval(x);
            if !(u >= 0.0) {
                return Err(Error::NegativePotential { x, value: u });
            }
            let re = (self.p * u).re;
            if re < 0.0 {
                return Err(Error::ReParameterNegative { x, value: re });
            }
        }
        Ok(self.clone())
    }

    /// λ + p·U(x0), the combined rate of the substantial coupling.
    #[inline]
    pub fn coupling_rate(&self, x: f64) -> Complex64 {
        self.lambda + self.p * self.potential.eval(x)
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::GammaOutOfRange(gamma))
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeTempering(lambda))
    }
}

/// Uniform partition a = x_0 < ... < x_M = b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceGrid {
    pub a: f64,
    pub b: f64,
    pub m_count: usize,
    pub h: f64,
}

impl SpaceGrid {
    pub fn new(a: f64, b: f64, m_count: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::BadPartition(format!("need a < b, got ({a}, {b})")));
        }
        if m_count < 2 {
            return Err(Error::BadPartition(format!(
                "need at least two cells, got M = {m_count}"
            )));
        }
        Ok(Self {
            a,
            b,
            m_count,
            h: (b - a) / m_count as f64,
        })
    }

    /// Node x_m; the last node is exactly b.
    #[inline]
    pub fn node(&self, m: usize) -> f64 {
        if m == self.m_count {
            self.b
        } else {
            self.a + m as f64 * self.h
        }
    }

    /// All M + 1 nodes, boundary included.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.m_count).map(move |m| self.node(m))
    }

    /// The M − 1 interior nodes, the unknowns of both schemes.
    pub fn interior_nodes(&self) -> Vec<f64> {
        (1..self.m_count).map(|m| self.node(m)).collect()
    }

    pub fn interior_len(&self) -> usize {
        self.m_count - 1
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    /// Whether `fine` has exactly twice as many cells on the same interval.
    pub fn is_halving_of(&self, fine: &SpaceGrid) -> bool {
        self.a == fine.a && self.b == fine.b && fine.m_count == 2 * self.m_count
    }
}

/// Uniform time levels t_n = n·τ, n = 0..N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_final: f64,
    pub n_count: usize,
    pub tau: f64,
}

impl TimeGrid {
    pub fn new(t_final: f64, n_count: usize) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::BadPartition(format!("need T > 0, got {t_final}")));
        }
        if n_count < 1 {
            return Err(Error::BadPartition("need at least one time step".into()));
        }
        Ok(Self {
            t_final,
            n_count,
            tau: t_final / n_count as f64,
        })
    }

    #[inline]
    pub fn level(&self, n: usize) -> f64 {
        if n == self.n_count {
            self.t_final
        } else {
            n as f64 * self.tau
        }
    }

    pub fn levels(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_count).map(move |n| self.level(n))
    }
}

/// Complex values at the interior nodes m = 1..M−1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn from_vec(v: Vec<Complex64>) -> Self {
        Self(v)
    }

    /// Samples `f` at the interior nodes of `grid`.
    pub fn from_fn(grid: &SpaceGrid, f: impl Fn(f64) -> Complex64) -> Self {
        Self((1..grid.m_count).map(|m| f(grid.node(m))).collect())
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self(self.0.iter().map(|v| v * c).collect())
    }

    pub fn sub(&self, other: &ComplexVector) -> Result<ComplexVector> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

impl Deref for ComplexVector {
    type Target = [Complex64];
    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl DerefMut for ComplexVector {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }
}

impl From<Vec<Complex64>> for ComplexVector {
    fn from(v: Vec<Complex64>) -> Self {
        Self(v)
    }
}

/// Every time level G⁰..Gᴺ of a march. The scheme is nonlocal in time, so
/// the full history is kept.
#[derive(Debug, Clone)]
pub struct SolutionHistory {
    space: SpaceGrid,
    time: TimeGrid,
    levels: Vec<ComplexVector>,
}

impl SolutionHistory {
    pub fn new(space: SpaceGrid, time: TimeGrid, initial: ComplexVector) -> Result<Self> {
        if initial.len() != space.interior_len() {
            return Err(Error::LengthMismatch {
                expected: space.interior_len(),
                got: initial.len(),
            });
        }
        let mut levels = Vec::with_capacity(time.n_count + 1);
        levels.push(initial);
        Ok(Self {
            space,
            time,
            levels,
        })
    }

    pub fn push(&mut self, level: ComplexVector) -> Result<()> {
        if level.len() != self.space.interior_len() {
            return Err(Error::LengthMismatch {
                expected: self.space.interior_len(),
                got: level.len(),
            });
        }
        if self.levels.len() > self.time.n_count {
            return Err(Error::HistoryTooShort {
                available: self.time.n_count + 1,
                requested: self.levels.len(),
            });
        }
        self.levels.push(level);
        Ok(())
    }

    pub fn space(&self) -> &SpaceGrid {
        &self.space
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    /// Number of stored levels.
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.levels.len() == self.time.n_count + 1
    }

    pub fn level(&self, n: usize) -> Option<&ComplexVector> {
        self.levels.get(n)
    }

    pub fn levels(&self) -> &[ComplexVector] {
        &self.levels
    }

    pub fn last(&self) -> &ComplexVector {
        self.levels.last().expect("history always holds level 0")
    }

    /// Level-wise difference `self − other`.
    pub fn difference(&self, other: &SolutionHistory) -> Result<SolutionHistory> {
        if self.space != other.space || self.time != other.time || self.len() != other.len() {
            return Err(Error::GridMismatch(
                "histories live on different grids".into(),
            ));
        }
        let levels = self
            .levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(SolutionHistory {
            space: self.space,
            time: self.time,
            levels,
        })
    }

    /// History of `f(x, t)` sampled at every interior node and level.
    pub fn sample(
        space: SpaceGrid,
        time: TimeGrid,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> SolutionHistory {
        let levels = time
            .levels()
            .map(|t| ComplexVector::from_fn(&space, |x| f(x, t)))
            .collect();
        SolutionHistory {
            space,
            time,
            levels,
        }
    }
}

/// A space-time function such as a source term f(x, t).
///
/// `eval_many` lets implementations hoist work that depends on t only.
pub trait SpaceTimeFn: Send + Sync {
    fn eval(&self, x: f64, t: f64) -> Complex64;

    fn eval_many(&self, xs: &[f64], t: f64, out: &mut [Complex64]) {
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = self.eval(x, t);
        }
    }
}

impl<F> SpaceTimeFn for F
where
    F: Fn(f64, f64) -> Complex64 + Send + Sync,
{
    fn eval(&self, x: f64, t: f64) -> Complex64 {
        self(x, t)
    }
}

/// Which form of the substantial derivative a march uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IcVariant {
    /// Zero initial data, or data already lifted away.
    ZeroIc,
    /// Arbitrary initial data handled by the Q_n correction.
    GeneralIc,
}

impl fmt::Display for IcVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IcVariant::ZeroIc => "zero-ic",
            IcVariant::GeneralIc => "general-ic",
        })
    }
}
