//! Runs every (parameter, level) cell of a study and assembles the
//! Err/Rate report.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tfk_core::fdm::FdmSolver;
use tfk_core::fem::{FemOptions, FemSolver};
use tfk_core::manufactured::{
    example1, example1_lifted, example2_lifted, example3, example3_on_grid, ManufacturedProblem,
};
use tfk_core::norms::{h1_error_continuous, level_norms, refinement_error, restrict};
use tfk_core::quadrature::{gauss_jacobi, gauss_legendre};
use tfk_core::{ComplexVector, ModelParams, SpaceGrid, TimeGrid};

use crate::config::{Level, Norm, ParamSet, Reference, Scheme, StudyConfig, Variant};
use crate::error::{CliError, CliResult};

/// Gauss–Legendre points per element for the continuous seminorm.
const ENERGY_RULE_ORDER: usize = 8;

pub fn version_string() -> String {
    format!("{} ({})", env!("CARGO_PKG_VERSION"), env!("TFK_GIT_DESCRIBE"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub param: usize,
    pub level: usize,
    pub cells: usize,
    pub steps: usize,
    pub h: f64,
    pub tau: f64,
    /// One entry per configured norm.
    pub errors: Vec<f64>,
    /// log₂(err_previous/err_this); `None` on the coarsest level.
    pub rates: Vec<Option<f64>>,
    /// Wall time of the cell; left out of serialized reports.
    #[serde(skip)]
    pub runtime: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub version: String,
    pub config: StudyConfig,
    pub cells: Vec<CellResult>,
}

impl ConvergenceReport {
    pub fn cell(&self, param: usize, level: usize) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.param == param && c.level == level)
    }

    fn norm_index(&self, norm: Norm) -> Option<usize> {
        self.config.norms.iter().position(|&n| n == norm)
    }

    /// Errors of one parameter set down the ladder.
    pub fn errors(&self, param: usize, norm: Norm) -> Vec<f64> {
        let Some(k) = self.norm_index(norm) else { return vec![] };
        let mut cells: Vec<&CellResult> = self.cells.iter().filter(|c| c.param == param).collect();
        cells.sort_by_key(|c| c.level);
        cells.iter().map(|c| c.errors[k]).collect()
    }

    /// Rates of one parameter set, coarsest pair first.
    pub fn rates(&self, param: usize, norm: Norm) -> Vec<f64> {
        let e = self.errors(param, norm);
        e.windows(2).map(|w| rate(w[0], w[1])).collect()
    }

    pub fn total_runtime(&self) -> Duration {
        self.cells.iter().map(|c| c.runtime).sum()
    }
}

pub fn rate(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn problem(cfg: &StudyConfig, params: &ModelParams, space: &SpaceGrid, time: &TimeGrid) -> tfk_core::Result<ManufacturedProblem> {
    match (cfg.example, cfg.variant) {
        (1, Variant::ZeroIc) => example1_lifted(params),
        (1, Variant::GeneralIc) => example1(params),
        (2, _) => example2_lifted(params, &gauss_jacobi(params.gamma, cfg.jacobi_order)?),
        // the tabulated source only covers grid nodes
        (_, _) if cfg.scheme == Scheme::Fdm => example3_on_grid(params, space, time),
        _ => example3(params),
    }
}

/// Marches one grid, handing every level to `observe`.
fn march<F>(cfg: &StudyConfig, params: &ModelParams, level: Level, observe: F) -> tfk_core::Result<()>
where
    F: FnMut(usize, &[Complex64]) -> tfk_core::Result<()>,
{
    let space = SpaceGrid::new(0.0, 1.0, level.cells)?;
    let time = TimeGrid::new(cfg.t_final, level.steps)?;
    let pr = problem(cfg, params, &space, &time)?;
    match cfg.scheme {
        Scheme::Fdm => {
            let solver = FdmSolver::new(params, &space, &time)?;
            solver.run(pr.source.as_ref(), &pr.initial_vector(&space), cfg.variant.into(), observe)
        }
        Scheme::Fem => {
            let options = FemOptions {
                quad_order: cfg.quad_order,
                ic_testing: cfg.ic_testing,
            };
            let solver = FemSolver::new(params, &space, &time, options)?;
            let phi = pr.initial.clone();
            solver.run(pr.source.as_ref(), &|x| phi.eval(x), cfg.variant.into(), observe)
        }
    }
}

fn solve_final(cfg: &StudyConfig, params: &ModelParams, level: Level) -> tfk_core::Result<ComplexVector> {
    let mut last = ComplexVector::zeros(level.cells - 1);
    march(cfg, params, level, |n, g| {
        if n == level.steps {
            last = ComplexVector::from_vec(g.to_vec());
        }
        Ok(())
    })?;
    Ok(last)
}

/// Final-time reference solves, shared by every study in the process.
fn reference_solve(cfg: &StudyConfig, p: &ParamSet, level: Level) -> tfk_core::Result<ComplexVector> {
    static CACHE: OnceLock<Mutex<HashMap<String, ComplexVector>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = format!(
        "{:?}|{:?}|{}|{:?}|{}|{:?}|{}|{:?}|{:?}",
        cfg.scheme, cfg.variant, cfg.example, cfg.t_final, cfg.quad_order, cfg.ic_testing, cfg.jacobi_order, p, level
    );
    if let Some(w) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(w.clone());
    }
    let w = solve_final(cfg, &p.model(), level)?;
    cache.lock().unwrap_or_else(|e| e.into_inner()).insert(key, w.clone());
    Ok(w)
}

fn exact_errors(cfg: &StudyConfig, params: &ModelParams, level: Level) -> tfk_core::Result<Vec<f64>> {
    let space = SpaceGrid::new(0.0, 1.0, level.cells)?;
    let time = TimeGrid::new(cfg.t_final, level.steps)?;
    let pr = problem(cfg, params, &space, &time)?;
    let exact = pr
        .exact
        .clone()
        .ok_or_else(|| tfk_core::Error::MissingData(format!("{} has no exact solution", pr.name)))?;
    let want_energy = cfg.norms.contains(&Norm::Energy);
    let exact_dx = match (&pr.exact_dx, want_energy) {
        (Some(d), true) => Some(d.clone()),
        (None, true) => return Err(tfk_core::Error::MissingData(format!("{} has no exact x-derivative", pr.name))),
        _ => None,
    };
    let rule = gauss_legendre(ENERGY_RULE_ORDER)?;
    let nodes = space.interior_nodes();
    let mut want = vec![Complex64::new(0.0, 0.0); nodes.len()];
    let (mut st_max, mut st_h1, mut max_t, mut energy) = (0.0, 0.0, 0.0f64, 0.0);
    let (mut final_max, mut final_h1) = (0.0, 0.0);
    march(cfg, params, level, |n, g| {
        if n == 0 {
            return Ok(());
        }
        let t = time.level(n);
        exact.eval_many(&nodes, t, &mut want);
        let diff: Vec<Complex64> = g.iter().zip(&want).map(|(a, b)| a - b).collect();
        let ln = level_norms(&diff, &space);
        st_max += time.tau * ln.max_h;
        st_h1 += time.tau * ln.h1_semi * ln.h1_semi;
        max_t = max_t.max(ln.max_h);
        if let Some(dx) = &exact_dx {
            let e = h1_error_continuous(g, &space, |x| dx.eval(x, t), &rule)?;
            energy += time.tau * e * e;
        }
        if n == level.steps {
            final_max = ln.max_h;
            final_h1 = ln.h1_semi;
        }
        Ok(())
    })?;
    Ok(cfg
        .norms
        .iter()
        .map(|norm| match norm {
            Norm::SpacetimeMax => st_max,
            Norm::SpacetimeH1 => st_h1.sqrt(),
            Norm::MaxInTime => max_t,
            Norm::FinalMax => final_max,
            Norm::FinalH1 => final_h1,
            Norm::Energy => energy.sqrt(),
            Norm::RefinementH1 => f64::NAN,
        })
        .collect())
}

/// Errors of the final level `coarse` against a finer final level.
fn final_errors(
    cfg: &StudyConfig,
    coarse: &ComplexVector,
    coarse_grid: &SpaceGrid,
    fine: &ComplexVector,
    fine_grid: &SpaceGrid,
) -> tfk_core::Result<Vec<f64>> {
    let restricted = restrict(fine, fine_grid, coarse_grid)?;
    let ln = level_norms(&coarse.sub(&restricted)?, coarse_grid);
    cfg.norms
        .iter()
        .map(|norm| match norm {
            Norm::FinalMax => Ok(ln.max_h),
            Norm::FinalH1 => Ok(ln.h1_semi),
            Norm::RefinementH1 => refinement_error(coarse, coarse_grid, fine, fine_grid),
            _ => Ok(f64::NAN),
        })
        .collect()
}

fn cell_errors(
    cfg: &StudyConfig,
    params: &ModelParams,
    level: Level,
    reference: Option<&(Level, ComplexVector)>,
) -> tfk_core::Result<Vec<f64>> {
    match cfg.reference {
        Reference::Exact => exact_errors(cfg, params, level),
        Reference::FineGrid { .. } => {
            let (ref_level, ref_final) = reference.expect("reference solved before the cells");
            let w = solve_final(cfg, params, level)?;
            let coarse = SpaceGrid::new(0.0, 1.0, level.cells)?;
            let fine = SpaceGrid::new(0.0, 1.0, ref_level.cells)?;
            final_errors(cfg, &w, &coarse, ref_final, &fine)
        }
        Reference::Refinement => {
            let child = cfg.refinement_child(level);
            let w = solve_final(cfg, params, level)?;
            let wf = solve_final(cfg, params, child)?;
            let coarse = SpaceGrid::new(0.0, 1.0, level.cells)?;
            let fine = SpaceGrid::new(0.0, 1.0, child.cells)?;
            final_errors(cfg, &w, &coarse, &wf, &fine)
        }
    }
}

fn cell_failure(p: &ParamSet, level: Level, source: tfk_core::Error) -> CliError {
    CliError::Cell {
        params: p.to_string(),
        cells: level.cells,
        steps: level.steps,
        source,
    }
}

/// Runs the study on at most `jobs` threads (0 picks the rayon default).
/// The report does not depend on `jobs` or on completion order.
pub fn run_study(cfg: &StudyConfig, jobs: usize) -> CliResult<ConvergenceReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::BadConfig(format!("thread pool: {e}")))?;
    pool.install(|| run_cells(cfg))
}

fn run_cells(cfg: &StudyConfig) -> CliResult<ConvergenceReport> {
    let levels = cfg.levels();
    let references: Vec<Option<(Level, ComplexVector)>> = match cfg.reference {
        Reference::FineGrid { cells, steps } => {
            let level = Level { cells, steps };
            cfg.params
                .par_iter()
                .map(|p| {
                    reference_solve(cfg, p, level)
                        .map(|w| Some((level, w)))
                        .map_err(|e| cell_failure(p, level, e))
                })
                .collect::<CliResult<_>>()?
        }
        _ => vec![None; cfg.params.len()],
    };
    let jobs: Vec<(usize, usize)> = (0..cfg.params.len())
        .flat_map(|i| (0..levels.len()).map(move |l| (i, l)))
        .collect();
    let mut cells: Vec<CellResult> = jobs
        .par_iter()
        .map(|&(i, l)| {
            let p = &cfg.params[i];
            let level = levels[l];
            let start = Instant::now();
            let errors = cell_errors(cfg, &p.model(), level, references[i].as_ref())
                .map_err(|e| cell_failure(p, level, e))?;
            Ok(CellResult {
                param: i,
                level: l,
                cells: level.cells,
                steps: level.steps,
                h: 1.0 / level.cells as f64,
                tau: cfg.t_final / level.steps as f64,
                rates: vec![None; errors.len()],
                errors,
                runtime: start.elapsed(),
            })
        })
        .collect::<CliResult<_>>()?;
    for k in 1..cells.len() {
        let (before, after) = cells.split_at_mut(k);
        let (prev, cur) = (&before[k - 1], &mut after[0]);
        if prev.param == cur.param {
            cur.rates = prev.errors.iter().zip(&cur.errors).map(|(&a, &b)| Some(rate(a, b))).collect();
        }
    }
    Ok(ConvergenceReport {
        version: version_string(),
        config: cfg.clone(),
        cells,
    })
}
