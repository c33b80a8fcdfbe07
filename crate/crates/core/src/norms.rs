//! Discrete norms on interior nodal vectors (boundary values zero) and the
//! space-time composites built from them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ComplexVector, SolutionHistory, SpaceGrid};
use crate::quadrature::QuadratureRule;

/// Discrete inner product (v, w)_h = h Σ v_m w̄_m.
pub fn inner_h(v: &[Complex64], w: &[Complex64], grid: &SpaceGrid) -> Complex64 {
    v.iter().zip(w).map(|(a, b)| a * b.conj()).sum::<Complex64>() * grid.h
}

/// ‖v‖_h.
pub fn l2_h(v: &[Complex64], grid: &SpaceGrid) -> f64 {
    (grid.h * v.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
}

/// |v|_{h,1}, including the two boundary difference quotients.
pub fn h1_semi_h(v: &[Complex64], grid: &SpaceGrid) -> f64 {
    let zero = Complex64::new(0.0, 0.0);
    let n = v.len();
    let mut s = 0.0;
    for m in 0..=n {
        let right = if m < n { v[m] } else { zero };
        let left = if m > 0 { v[m - 1] } else { zero };
        s += (right - left).norm_sqr();
    }
    (s / grid.h).sqrt()
}

/// ‖v‖_{h,∞}.
pub fn max_h(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Exact |·|₁ of the P1 function with nodal values `coeffs`. Same number as
/// [`h1_semi_h`].
pub fn fem_h1_seminorm(coeffs: &[Complex64], grid: &SpaceGrid) -> f64 {
    h1_semi_h(coeffs, grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LevelNorms {
    pub l2_h: f64,
    pub h1_semi: f64,
    pub max_h: f64,
}

pub fn level_norms(v: &[Complex64], grid: &SpaceGrid) -> LevelNorms {
    LevelNorms {
        l2_h: l2_h(v, grid),
        h1_semi: h1_semi_h(v, grid),
        max_h: max_h(v),
    }
}

/// Space-time composites, level 0 excluded.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpaceTimeNorms {
    /// √(Σ τ |vⁿ|²_{h,1})
    pub st_0h1: f64,
    /// Σ τ ‖vⁿ‖_{h,∞}
    pub st_0prime_hinf: f64,
    /// max_n ‖vⁿ‖_{h,∞}
    pub max_hinf: f64,
}

pub fn spacetime_norms(history: &SolutionHistory) -> SpaceTimeNorms {
    let grid = history.space();
    let tau = history.time().tau;
    let mut out = SpaceTimeNorms::default();
    let mut sq = 0.0;
    for level in &history.levels()[1..] {
        let n = level_norms(level, grid);
        sq += tau * n.h1_semi * n.h1_semi;
        out.st_0prime_hinf += tau * n.max_h;
        out.max_hinf = out.max_hinf.max(n.max_h);
    }
    out.st_0h1 = sq.sqrt();
    out
}

/// Per-level and composite norms of one history, plus the P1 seminorm of
/// the final level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub levels: Vec<LevelNorms>,
    pub composite: SpaceTimeNorms,
    pub fem_h1_semi: f64,
}

impl NormReport {
    pub fn of(history: &SolutionHistory) -> Self {
        let grid = history.space();
        Self {
            levels: history.levels().iter().map(|l| level_norms(l, grid)).collect(),
            composite: spacetime_norms(history),
            fem_h1_semi: fem_h1_seminorm(history.last(), grid),
        }
    }
}

/// Interior nodal values of the coarse P1 function on the refined grid.
pub fn prolongate(coarse: &[Complex64], coarse_grid: &SpaceGrid, fine_grid: &SpaceGrid) -> Result<ComplexVector> {
    if !coarse_grid.is_halving_of(fine_grid) {
        return Err(Error::GridMismatch(format!(
            "M = {} is not a halving of M = {}",
            fine_grid.m_count, coarse_grid.m_count
        )));
    }
    check_len(coarse, coarse_grid)?;
    let zero = Complex64::new(0.0, 0.0);
    let at = |m: usize| {
        if m == 0 || m == coarse_grid.m_count {
            zero
        } else {
            coarse[m - 1]
        }
    };
    let out = (1..fine_grid.m_count)
        .map(|j| {
            if j % 2 == 0 {
                at(j / 2)
            } else {
                (at(j / 2) + at(j / 2 + 1)) * 0.5
            }
        })
        .collect();
    Ok(ComplexVector::from_vec(out))
}

/// Values of a fine-grid vector at the nodes of a coarser nested grid.
pub fn restrict(fine: &[Complex64], fine_grid: &SpaceGrid, coarse_grid: &SpaceGrid) -> Result<ComplexVector> {
    check_len(fine, fine_grid)?;
    let ratio = fine_grid.m_count / coarse_grid.m_count;
    if coarse_grid.a != fine_grid.a
        || coarse_grid.b != fine_grid.b
        || ratio == 0
        || ratio * coarse_grid.m_count != fine_grid.m_count
    {
        return Err(Error::GridMismatch(format!(
            "M = {} does not nest in M = {}",
            coarse_grid.m_count, fine_grid.m_count
        )));
    }
    Ok(ComplexVector::from_vec(
        (1..coarse_grid.m_count).map(|m| fine[m * ratio - 1]).collect(),
    ))
}

/// |G_{h/2} − G_h|₁ with the coarse solution injected into the fine space.
pub fn refinement_error(
    coarse: &[Complex64],
    coarse_grid: &SpaceGrid,
    fine: &[Complex64],
    fine_grid: &SpaceGrid,
) -> Result<f64> {
    check_len(fine, fine_grid)?;
    let lifted = prolongate(coarse, coarse_grid, fine_grid)?;
    let diff = lifted.sub(&ComplexVector::from_vec(fine.to_vec()))?;
    Ok(fem_h1_seminorm(&diff, fine_grid))
}

/// |u − u_h|₁ for a P1 function u_h and a function u with known derivative
/// `du`, by `rule` on every element.
pub fn h1_error_continuous(
    coeffs: &[Complex64],
    grid: &SpaceGrid,
    du: impl Fn(f64) -> Complex64,
    rule: &QuadratureRule,
) -> Result<f64> {
    check_len(coeffs, grid)?;
    let zero = Complex64::new(0.0, 0.0);
    let at = |m: usize| {
        if m == 0 || m == grid.m_count {
            zero
        } else {
            coeffs[m - 1]
        }
    };
    let mut s = 0.0;
    for e in 0..grid.m_count {
        let (xl, xr) = (grid.node(e), grid.node(e + 1));
        let slope = (at(e + 1) - at(e)) / (xr - xl);
        s += rule.integrate(xl, xr, |x| (du(x) - slope).norm_sqr());
    }
    Ok(s.sqrt())
}

fn check_len(v: &[Complex64], grid: &SpaceGrid) -> Result<()> {
    if v.len() != grid.interior_len() {
        Err(Error::LengthMismatch {
            expected: grid.interior_len(),
            got: v.len(),
        })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TimeGrid;
    use crate::quadrature::gauss_legendre;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn zero_vector() {
        let g = SpaceGrid::new(0.0, 1.0, 8).unwrap();
        assert_eq!(level_norms(&vec![c(0.0); 7], &g), LevelNorms::default());
    }

    #[test]
    fn single_node_hand_values() {
        let g = SpaceGrid::new(0.0, 1.0, 2).unwrap();
        let n = level_norms(&[c(1.0)], &g);
        assert!((n.l2_h - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((n.h1_semi - 2.0).abs() < 1e-15);
        assert_eq!(n.max_h, 1.0);
    }

    #[test]
    fn hat_function_seminorm() {
        let g = SpaceGrid::new(0.0, 1.0, 10).unwrap();
        let mut v = vec![c(0.0); 9];
        v[4] = c(1.0);
        assert!((fem_h1_seminorm(&v, &g) - (2.0 / g.h).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn composite_one_level() {
        let s = SpaceGrid::new(0.0, 1.0, 2).unwrap();
        let t = TimeGrid::new(0.25, 1).unwrap();
        let mut h = SolutionHistory::new(s, t, ComplexVector::from_vec(vec![c(9.0)])).unwrap();
        h.push(ComplexVector::from_vec(vec![Complex64::new(0.0, 3.0)])).unwrap();
        let n = spacetime_norms(&h);
        assert!((n.st_0prime_hinf - 0.75).abs() < 1e-15);
        assert!((n.st_0h1 - 0.5 * 6.0).abs() < 1e-15);
    }

    #[test]
    fn prolongation_is_linear_interpolation() {
        let cg = SpaceGrid::new(0.0, 1.0, 4).unwrap();
        let fg = SpaceGrid::new(0.0, 1.0, 8).unwrap();
        let v = prolongate(&[c(1.0), c(2.0), c(3.0)], &cg, &fg).unwrap();
        let want = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 1.5];
        for (a, b) in v.iter().zip(want) {
            assert!((a.re - b).abs() < 1e-15);
        }
        assert_eq!(restrict(&v, &fg, &cg).unwrap().into_inner(), vec![c(1.0), c(2.0), c(3.0)]);
        assert!(refinement_error(&[c(1.0), c(2.0), c(3.0)], &cg, &v, &fg).unwrap() < 1e-15);
        assert!(matches!(prolongate(&[c(1.0)], &cg, &fg), Err(Error::LengthMismatch { .. })));
        assert!(matches!(
            prolongate(&[c(1.0); 7], &fg, &cg),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn continuous_error_of_interpolant() {
        // u = x(1−x): per element the slope error is linear, ∫(u' − s)² = h³/3,
        // so |u − I_h u|₁² = h²/3.
        let g = SpaceGrid::new(0.0, 1.0, 16).unwrap();
        let v: Vec<Complex64> = g.interior_nodes().iter().map(|&x| c(x * (1.0 - x))).collect();
        let r = gauss_legendre(3).unwrap();
        let e = h1_error_continuous(&v, &g, |x| c(1.0 - 2.0 * x), &r).unwrap();
        assert!((e - g.h / 3f64.sqrt()).abs() < 1e-14);
    }
}
