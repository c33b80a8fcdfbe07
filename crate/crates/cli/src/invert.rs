//! Density of the functional A recovered from solver output by Laplace
//! inversion, for the problem with known density t²e^{−λt−2A}(x0 − x0³).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tfk_core::fdm::march_fdm_final;
use tfk_core::laplace::{euler_invert, InversionConfig};
use tfk_core::manufactured::{example3_density, example3_on_grid};
use tfk_core::{ComplexVector, IcVariant, ModelParams, SpaceGrid, TimeGrid};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensitySetup {
    pub gamma: f64,
    pub lambda: f64,
    /// Space cells on (0, 1); the step count is T·M, so τ = h.
    pub cells: usize,
    pub t_final: f64,
    /// Must be a grid node.
    pub x0: f64,
    pub inversion: InversionConfig,
}

impl DensitySetup {
    /// h = τ = 1/2¹⁰, T = 0.5, x0 = 0.5 and the default inversion constants.
    pub fn standard(gamma: f64, lambda: f64) -> Self {
        Self {
            gamma,
            lambda,
            cells: 1024,
            t_final: 0.5,
            x0: 0.5,
            inversion: InversionConfig::default(),
        }
    }

    fn grids(&self) -> CliResult<(SpaceGrid, TimeGrid, usize)> {
        let space = SpaceGrid::new(0.0, 1.0, self.cells)?;
        let steps = ((self.t_final * self.cells as f64).round() as usize).max(1);
        let time = TimeGrid::new(self.t_final, steps)?;
        let pos = self.x0 * self.cells as f64;
        let node = pos.round();
        if (pos - node).abs() > 1e-9 || node < 1.0 || node >= self.cells as f64 {
            return Err(CliError::BadConfig(format!(
                "x0 = {} is not an interior node of the grid with M = {}",
                self.x0, self.cells
            )));
        }
        Ok((space, time, node as usize - 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub a: f64,
    pub numeric: f64,
    pub analytic: f64,
    pub abs_error: f64,
}

/// Solves the transformed problem at every inversion node and inverts;
/// one point per entry of `a_values`, in order.
pub fn density_curve(setup: &DensitySetup, a_values: &[f64], jobs: usize) -> CliResult<Vec<DensityPoint>> {
    setup.inversion.validate()?;
    let (space, time, node) = setup.grids()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::BadConfig(format!("thread pool: {e}")))?;
    let zero = ComplexVector::zeros(space.interior_len());
    pool.install(|| {
        a_values
            .par_iter()
            .map(|&a| {
                let numeric = euler_invert(a, &setup.inversion, |p| {
                    let params = ModelParams::unit_interval(setup.gamma, setup.lambda, p);
                    let pr = example3_on_grid(&params, &space, &time)?;
                    let g = march_fdm_final(&params, &space, &time, pr.source.as_ref(), &zero, IcVariant::ZeroIc)?;
                    Ok(g[node])
                })?;
                let analytic = example3_density(setup.lambda, a, setup.x0, setup.t_final);
                Ok(DensityPoint {
                    a,
                    numeric,
                    analytic,
                    abs_error: (numeric - analytic).abs(),
                })
            })
            .collect()
    })
}

/// Inverts 1/(p + 2), whose original is e^{−2A}.
pub fn pole_curve(inversion: &InversionConfig, a_values: &[f64]) -> CliResult<Vec<DensityPoint>> {
    a_values
        .iter()
        .map(|&a| {
            let numeric = euler_invert(a, inversion, |p: Complex64| Ok((p + 2.0).inv()))?;
            let analytic = (-2.0 * a).exp();
            Ok(DensityPoint {
                a,
                numeric,
                analytic,
                abs_error: (numeric - analytic).abs(),
            })
        })
        .collect()
}

/// `start:stop:count` (inclusive, evenly spaced) or a comma-separated list.
pub fn parse_a_grid(text: &str) -> CliResult<Vec<f64>> {
    let bad = |m: String| CliError::BadConfig(format!("A grid `{text}`: {m}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(e.to_string()));
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:count".into()));
        }
        let (start, stop) = (num(parts[0])?, num(parts[1])?);
        let count: usize = parts[2].trim().parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
        match count {
            0 => vec![],
            1 => vec![start],
            _ => (0..count)
                .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                .collect(),
        }
    } else {
        text.split(',').map(num).collect::<CliResult<_>>()?
    };
    if values.is_empty() {
        return Err(bad("no points".into()));
    }
    if let Some(a) = values.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(bad(format!("A = {a} is not positive")));
    }
    Ok(values)
}
