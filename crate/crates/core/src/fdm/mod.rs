//! Finite difference scheme: central differences in space, the discrete
//! tempered substantial derivative in time.
//!
//! At level n the scheme reads
//!
//! ```text
//! (d_0/τ^γ − K δ_x²) G^n = f^n − (1/τ^γ) Σ_{k=1}^{n} d_k M_k G^{n−k}  [+ general-IC term]
//! ```
//!
//! The left-hand matrix is real and the same at every level, so it is
//! factorized once.

mod tridiag;

pub use tridiag::TridiagonalOperator;

use num_complex::Complex64;

use crate::coeffs::CoefficientTable;
use crate::error::{Error, Result};
use crate::history::HistoryAccumulator;
use crate::model::{
    ComplexVector, IcVariant, ModelParams, SolutionHistory, SpaceGrid, SpaceTimeFn, TimeGrid,
};

/// (d_0/τ^γ) I − K δ_x² on the interior nodes.
pub fn assemble_fdm_system(
    params: &ModelParams,
    grid: &SpaceGrid,
    tau: f64,
    d0: f64,
) -> Result<TridiagonalOperator> {
    let h2 = grid.h * grid.h;
    let diag = d0 * tau.powf(-params.gamma) + 2.0 * params.k_gamma / h2;
    TridiagonalOperator::constant(grid.interior_len(), -params.k_gamma / h2, diag)
}

/// Solves one tridiagonal system; convenience wrapper that factorizes and
/// discards.
pub fn tridiag_solve(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &ComplexVector,
) -> Result<ComplexVector> {
    TridiagonalOperator::new(sub.to_vec(), diag.to_vec(), sup.to_vec())?.solve(rhs)
}

/// A prepared finite difference march for one (model, grid) pair.
pub struct FdmSolver {
    params: ModelParams,
    space: SpaceGrid,
    time: TimeGrid,
    coeffs: CoefficientTable,
    op: TridiagonalOperator,
    nodes: Vec<f64>,
}

impl FdmSolver {
    pub fn new(params: &ModelParams, space: &SpaceGrid, time: &TimeGrid) -> Result<Self> {
        let params = params.validate(space)?;
        let coeffs = CoefficientTable::new(params.gamma, params.lambda, time.tau, time.n_count)?;
        let op = assemble_fdm_system(&params, space, time.tau, coeffs.d[0])?;
        Ok(Self {
            nodes: space.interior_nodes(),
            params,
            space: *space,
            time: *time,
            coeffs,
            op,
        })
    }

    pub fn operator(&self) -> &TridiagonalOperator {
        &self.op
    }

    pub fn coefficients(&self) -> &CoefficientTable {
        &self.coeffs
    }

    /// Marches all levels, calling `observe(n, G^n)` for n = 0..=N.
    pub fn run<F>(
        &self,
        source: &dyn SpaceTimeFn,
        ic: &ComplexVector,
        variant: IcVariant,
        mut observe: F,
    ) -> Result<()>
    where
        F: FnMut(usize, &[Complex64]) -> Result<()>,
    {
        let sites = self.space.interior_len();
        if ic.len() != sites {
            return Err(Error::LengthMismatch {
                expected: sites,
                got: ic.len(),
            });
        }
        let tau = self.time.tau;
        let p = &self.params;
        let rates: Vec<Complex64> = self
            .nodes
            .iter()
            .map(|&x| p.p * p.potential.eval(x) * tau)
            .collect();
        let coupling: Vec<Complex64> = self.nodes.iter().map(|&x| p.coupling_rate(x)).collect();
        let inv = self.coeffs.inv_tau_gamma();
        let mut acc = HistoryAccumulator::new(rates, self.time.n_count + 1);
        acc.push(ic);
        observe(0, ic)?;
        let mut rhs = vec![Complex64::new(0.0, 0.0); sites];
        let mut lag = vec![Complex64::new(0.0, 0.0); sites];
        for n in 1..=self.time.n_count {
            let t = self.time.level(n);
            source.eval_many(&self.nodes, t, &mut rhs);
            acc.lagged_sum(&self.coeffs.d, &mut lag);
            for (r, l) in rhs.iter_mut().zip(&lag) {
                *r -= l * inv;
            }
            if variant == IcVariant::GeneralIc {
                let q = self.coeffs.q_partial[n] * inv;
                for ((r, c), phi) in rhs.iter_mut().zip(&coupling).zip(ic.iter()) {
                    *r += (-c * t).exp() * phi * q;
                }
            }
            self.op.solve_in_place(&mut rhs)?;
            if rhs.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::EvaluatorFailure {
                    p: p.p.to_string(),
                    reason: format!("non-finite value at level {n}"),
                });
            }
            acc.push(&rhs);
            observe(n, &rhs)?;
        }
        Ok(())
    }
}

/// Runs the finite difference scheme and returns every level G⁰..Gᴺ.
///
/// `ic` holds the interior values of the initial data (zero for
/// [`IcVariant::ZeroIc`] problems; a nonzero vector is accepted there too
/// and simply used as G⁰).
pub fn march_fdm(
    params: &ModelParams,
    space: &SpaceGrid,
    time: &TimeGrid,
    source: &dyn SpaceTimeFn,
    ic: &ComplexVector,
    variant: IcVariant,
) -> Result<SolutionHistory> {
    let solver = FdmSolver::new(params, space, time)?;
    let mut history = SolutionHistory::new(*space, *time, ic.clone())?;
    solver.run(source, ic, variant, |n, g| {
        if n > 0 {
            history.push(ComplexVector::from_vec(g.to_vec()))?;
        }
        Ok(())
    })?;
    Ok(history)
}

/// Runs the scheme and keeps only the final level Gᴺ.
pub fn march_fdm_final(
    params: &ModelParams,
    space: &SpaceGrid,
    time: &TimeGrid,
    source: &dyn SpaceTimeFn,
    ic: &ComplexVector,
    variant: IcVariant,
) -> Result<ComplexVector> {
    let solver = FdmSolver::new(params, space, time)?;
    let mut last = ic.clone();
    solver.run(source, ic, variant, |n, g| {
        if n == time.n_count {
            last = ComplexVector::from_vec(g.to_vec());
        }
        Ok(())
    })?;
    Ok(last)
}
