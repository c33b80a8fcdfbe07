//! Comparison of a report with reference errors and rates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::study::ConvergenceReport;

/// Reference numbers laid out `[norm][level][param]` and
/// `[norm][level pair][param]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub values: Vec<Vec<Vec<f64>>>,
    pub rates: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RateCheck {
    /// |rate − reference rate| ≤ tol
    Reference { tol: f64 },
    /// |rate − target| ≤ tol
    Fixed { target: f64, tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// Relative tolerance on errors; `None` checks rates only.
    pub value_rel: Option<f64>,
    pub rate: RateCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Error,
    Rate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub norm: usize,
    /// Level, or the finer level of a rate pair.
    pub level: usize,
    pub param: usize,
    pub quantity: Quantity,
    pub observed: f64,
    pub expected: f64,
    pub passed: bool,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.quantity {
            Quantity::Error => "err",
            Quantity::Rate => "rate",
        };
        write!(
            f,
            "{} norm {} level {} param {}: {what} {:.4e} vs {:.4e}",
            if self.passed { "ok  " } else { "FAIL" },
            self.norm,
            self.level,
            self.param,
            self.observed,
            self.expected
        )
    }
}

pub fn check_report(report: &ConvergenceReport, expect: &Expectation, check: &Check) -> Vec<Finding> {
    let mut out = vec![];
    for (k, &norm) in report.config.norms.iter().enumerate() {
        for param in 0..report.config.params.len() {
            let errors = report.errors(param, norm);
            let rates = report.rates(param, norm);
            if let Some(rel) = check.value_rel {
                for (level, &e) in errors.iter().enumerate() {
                    let want = expect.values[k][level][param];
                    out.push(Finding {
                        norm: k,
                        level,
                        param,
                        quantity: Quantity::Error,
                        observed: e,
                        expected: want,
                        passed: ((e - want) / want).abs() <= rel,
                    });
                }
            }
            for (pair, &r) in rates.iter().enumerate() {
                let (want, tol) = match check.rate {
                    RateCheck::Reference { tol } => (expect.rates[k][pair][param], tol),
                    RateCheck::Fixed { target, tol } => (target, tol),
                };
                out.push(Finding {
                    norm: k,
                    level: pair + 1,
                    param,
                    quantity: Quantity::Rate,
                    observed: r,
                    expected: want,
                    passed: (r - want).abs() <= tol,
                });
            }
        }
    }
    out
}

pub fn all_pass(findings: &[Finding]) -> bool {
    !findings.is_empty() && findings.iter().all(|f| f.passed)
}
