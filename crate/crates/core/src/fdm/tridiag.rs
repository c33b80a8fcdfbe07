//! Real tridiagonal operators with a cached LU factorization, applied to
//! complex right-hand sides.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ComplexVector;

/// A real tridiagonal matrix `tridiag(sub, diag, sup)` factorized once.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    // L has unit diagonal and sub-diagonal `lower`; U has diagonal `pivot`
    // and super-diagonal `sup`.
    lower: Vec<f64>,
    pivot: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::LengthMismatch {
                expected: 1,
                got: 0,
            });
        }
        for len in [sub.len(), sup.len()] {
            if len != n - 1 {
                return Err(Error::LengthMismatch {
                    expected: n - 1,
                    got: len,
                });
            }
        }
        let mut lower = Vec::with_capacity(n - 1);
        let mut pivot = Vec::with_capacity(n);
        pivot.push(diag[0]);
        check_pivot(diag[0], 0)?;
        for i in 1..n {
            let l = sub[i - 1] / pivot[i - 1];
            let u = diag[i] - l * sup[i - 1];
            check_pivot(u, i)?;
            lower.push(l);
            pivot.push(u);
        }
        Ok(Self {
            sub,
            diag,
            sup,
            lower,
            pivot,
        })
    }

    /// Constant-stencil operator `tridiag(off, diag, off)` of size n.
    pub fn constant(n: usize, off: f64, diag: f64) -> Result<Self> {
        let m = n.saturating_sub(1);
        Self::new(vec![off; m], vec![diag; n], vec![off; m])
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn sub(&self) -> &[f64] {
        &self.sub
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn sup(&self) -> &[f64] {
        &self.sup
    }

    /// Overwrites `rhs` with the solution of A x = rhs.
    pub fn solve_in_place(&self, rhs: &mut [Complex64]) -> Result<()> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        for i in 1..n {
            let prev = rhs[i - 1];
            rhs[i] -= prev * self.lower[i - 1];
        }
        rhs[n - 1] /= self.pivot[n - 1];
        for i in (0..n - 1).rev() {
            let next = rhs[i + 1];
            rhs[i] = (rhs[i] - next * self.sup[i]) / self.pivot[i];
        }
        Ok(())
    }

    pub fn solve(&self, rhs: &ComplexVector) -> Result<ComplexVector> {
        let mut x = rhs.clone();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    /// A·x.
    pub fn apply(&self, x: &[Complex64]) -> ComplexVector {
        let n = self.len();
        assert_eq!(x.len(), n);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let mut v = x[i] * self.diag[i];
            if i > 0 {
                v += x[i - 1] * self.sub[i - 1];
            }
            if i + 1 < n {
                v += x[i + 1] * self.sup[i];
            }
            y.push(v);
        }
        ComplexVector::from_vec(y)
    }

    /// min over rows of |diag| / (|sub| + |sup|); infinite for a diagonal matrix.
    pub fn dominance_ratio(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let off = if i > 0 { self.sub[i - 1].abs() } else { 0.0 }
                    + if i + 1 < n { self.sup[i].abs() } else { 0.0 };
                self.diag[i].abs() / off
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = self.diag[i];
            if i > 0 {
                a[i][i - 1] = self.sub[i - 1];
            }
            if i + 1 < n {
                a[i][i + 1] = self.sup[i];
            }
        }
        a
    }
}

fn check_pivot(p: f64, row: usize) -> Result<()> {
    if p == 0.0 || !p.is_finite() {
        Err(Error::SingularPivot(row))
    } else {
        Ok(())
    }
}
