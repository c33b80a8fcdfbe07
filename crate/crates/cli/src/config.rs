//! Study configuration and its TOML form.

use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use tfk_core::fem::{IcTesting, DEFAULT_QUAD_ORDER};
use tfk_core::{IcVariant, ModelParams};

use crate::check::{Check, Expectation};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Fdm,
    Fem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    ZeroIc,
    GeneralIc,
}

impl From<Variant> for IcVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::ZeroIc => IcVariant::ZeroIc,
            Variant::GeneralIc => IcVariant::GeneralIc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub gamma: f64,
    pub lambda: f64,
    pub p_re: f64,
    pub p_im: f64,
}

impl ParamSet {
    pub fn new(gamma: f64, lambda: f64, p_re: f64, p_im: f64) -> Self {
        Self { gamma, lambda, p_re, p_im }
    }

    pub fn p(&self) -> Complex64 {
        Complex64::new(self.p_re, self.p_im)
    }

    pub fn model(&self) -> ModelParams {
        ModelParams::unit_interval(self.gamma, self.lambda, self.p())
    }
}

impl fmt::Display for ParamSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "γ={}, λ={}, p={}", self.gamma, self.lambda, fmt_complex(self.p()))
    }
}

/// `1+1i`, `5`, `10i`, `2-3i`.
pub fn fmt_complex(p: Complex64) -> String {
    match (p.re == 0.0, p.im == 0.0) {
        (_, true) => format!("{}", p.re),
        (true, false) => format!("{}i", p.im),
        (false, false) if p.im > 0.0 => format!("{}+{}i", p.re, p.im),
        _ => format!("{}-{}i", p.re, -p.im),
    }
}

/// One grid: `cells` space cells on (0, 1) and `steps` time steps on (0, T].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub cells: usize,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// N = T·M, so τ = h.
    TauEqH,
    /// N = T·M², so τ = h².
    TauEqHSquared,
}

impl StepRule {
    pub fn steps(self, cells: usize, t_final: f64) -> usize {
        let m = cells as f64;
        let n = match self {
            StepRule::TauEqH => t_final * m,
            StepRule::TauEqHSquared => t_final * m * m,
        };
        (n.round() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ladder {
    Explicit { levels: Vec<Level> },
    Rule { rule: StepRule, cells: Vec<usize> },
}

impl Ladder {
    pub fn levels(&self, t_final: f64) -> Vec<Level> {
        match self {
            Ladder::Explicit { levels } => levels.clone(),
            Ladder::Rule { rule, cells } => cells
                .iter()
                .map(|&m| Level {
                    cells: m,
                    steps: rule.steps(m, t_final),
                })
                .collect(),
        }
    }
}

/// What the errors are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reference {
    /// The known solution.
    Exact,
    /// One solve on a finer grid, restricted to each study grid at t = T.
    FineGrid { cells: usize, steps: usize },
    /// Each level against its own halving (2M cells, steps from the ladder rule).
    Refinement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    /// Σ_{n≥1} τ ‖eⁿ‖_{h,∞}
    SpacetimeMax,
    /// √(Σ_{n≥1} τ |eⁿ|²_{h,1})
    SpacetimeH1,
    /// max_{n≥1} ‖eⁿ‖_{h,∞}
    MaxInTime,
    /// ‖eᴺ‖_{h,∞}
    FinalMax,
    /// |eᴺ|_{h,1}
    FinalH1,
    /// √(Σ_{n≥1} τ |G(t_n) − G_hⁿ|₁²) with the continuous seminorm.
    Energy,
    /// |G_{h/2}ᴺ − G_hᴺ|₁
    RefinementH1,
}

impl Norm {
    pub fn key(self) -> &'static str {
        match self {
            Norm::SpacetimeMax => "spacetime_max",
            Norm::SpacetimeH1 => "spacetime_h1",
            Norm::MaxInTime => "max_in_time",
            Norm::FinalMax => "final_max",
            Norm::FinalH1 => "final_h1",
            Norm::Energy => "energy",
            Norm::RefinementH1 => "refinement_h1",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Norm::SpacetimeMax => "|||·|||_{0',h,∞}",
            Norm::SpacetimeH1 => "|||·|||_{0,h,1}",
            Norm::MaxInTime => "max_n ‖·‖_{h,∞}",
            Norm::FinalMax => "‖·‖_{h,∞}",
            Norm::FinalH1 => "|·|_{h,1}",
            Norm::Energy => "|||·|||_{0,h,1} (continuous)",
            Norm::RefinementH1 => "|·|*_1",
        }
    }

    fn needs_history(self) -> bool {
        matches!(self, Norm::SpacetimeMax | Norm::SpacetimeH1 | Norm::MaxInTime | Norm::Energy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Markdown,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Markdown => "md",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Outputs {
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub formats: Vec<Format>,
}

fn default_quad_order() -> usize {
    DEFAULT_QUAD_ORDER
}

fn default_jacobi_order() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub name: String,
    pub scheme: Scheme,
    pub variant: Variant,
    pub example: u8,
    pub t_final: f64,
    pub params: Vec<ParamSet>,
    pub ladder: Ladder,
    pub reference: Reference,
    pub norms: Vec<Norm>,
    /// Gauss–Legendre sites per element for the finite element history.
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
    #[serde(default)]
    pub ic_testing: IcTesting,
    /// Gauss–Jacobi order for the Caputo terms of the second example.
    #[serde(default = "default_jacobi_order")]
    pub jacobi_order: usize,
    #[serde(default)]
    pub outputs: Outputs,
}

impl StudyConfig {
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        let cfg: StudyConfig = toml::from_str(text).map_err(|e| CliError::BadConfig(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> CliResult<String> {
        toml::to_string_pretty(self).map_err(|e| CliError::BadConfig(e.to_string()))
    }

    pub fn levels(&self) -> Vec<Level> {
        self.ladder.levels(self.t_final)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::BadConfig(msg));
        if !(1..=3).contains(&self.example) {
            return bad(format!("example must be 1, 2 or 3, got {}", self.example));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final must be positive, got {}", self.t_final));
        }
        let levels = self.levels();
        if levels.len() < 2 {
            return bad(format!("a ladder needs at least two levels, got {}", levels.len()));
        }
        for pair in levels.windows(2) {
            let (c, f) = (pair[0], pair[1]);
            let refines = f.cells >= c.cells && f.steps >= c.steps && (f.cells > c.cells || f.steps > c.steps);
            if !refines {
                return bad(format!(
                    "ladder must strictly refine: ({}, {}) then ({}, {})",
                    c.cells, c.steps, f.cells, f.steps
                ));
            }
        }
        if levels.iter().any(|l| l.cells < 2 || l.steps < 1) {
            return bad("every level needs at least two cells and one step".into());
        }
        if self.norms.is_empty() {
            return bad("no norms requested".into());
        }
        match self.reference {
            Reference::Exact => {
                if self.example == 2 {
                    return bad("the second example has no closed-form solution; use a fine_grid or refinement reference".into());
                }
                if self.norms.contains(&Norm::RefinementH1) {
                    return bad("refinement_h1 needs a refinement reference".into());
                }
                if self.norms.contains(&Norm::Energy) && self.scheme != Scheme::Fem {
                    return bad("the energy norm applies to the finite element scheme".into());
                }
            }
            Reference::FineGrid { cells, steps } => {
                if let Some(n) = self.norms.iter().find(|n| n.needs_history() || **n == Norm::RefinementH1) {
                    return bad(format!("{} is not available against a fine-grid reference", n.key()));
                }
                for l in &levels {
                    if cells % l.cells != 0 || cells < l.cells || steps < l.steps {
                        return bad(format!(
                            "reference ({cells}, {steps}) does not refine level ({}, {})",
                            l.cells, l.steps
                        ));
                    }
                }
            }
            Reference::Refinement => {
                if !matches!(self.ladder, Ladder::Rule { .. }) {
                    return bad("a refinement reference needs a rule ladder".into());
                }
                if let Some(n) = self.norms.iter().find(|n| n.needs_history()) {
                    return bad(format!("{} is not available against a refinement reference", n.key()));
                }
            }
        }
        if self.quad_order == 0 {
            return bad("quad_order must be positive".into());
        }
        Ok(())
    }

    /// Grid of the halving used by a refinement reference.
    pub fn refinement_child(&self, level: Level) -> Level {
        let cells = 2 * level.cells;
        let steps = match self.ladder {
            Ladder::Rule { rule, .. } => rule.steps(cells, self.t_final),
            Ladder::Explicit { .. } => 2 * level.steps,
        };
        Level { cells, steps }
    }
}

/// A study file: the study plus optional reference values for `--check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyFile {
    #[serde(flatten)]
    pub study: StudyConfig,
    pub expect: Option<Expectation>,
    pub check: Option<Check>,
}

impl StudyFile {
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::BadConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}
