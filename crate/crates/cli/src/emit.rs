//! CSV, Markdown and JSON renderings of a convergence report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{Format, Reference, Scheme, Variant};
use crate::error::{CliError, CliResult};
use crate::study::ConvergenceReport;

/// `1.2351e-06`: four decimals and a signed two-digit exponent.
pub fn fmt_err(v: f64) -> String {
    if !v.is_finite() || v == 0.0 {
        return format!("{v:.4e}");
    }
    let s = format!("{v:.4e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

/// `1/2^7` for powers of two, `1/n` for other integer reciprocals.
pub fn fmt_step(v: f64) -> String {
    let inv = 1.0 / v;
    let n = inv.round();
    if (inv - n).abs() > 1e-9 * inv || n < 1.0 {
        return fmt_err(v);
    }
    let n = n as u64;
    if n.is_power_of_two() && n > 1 {
        format!("1/2^{}", n.trailing_zeros())
    } else {
        format!("1/{n}")
    }
}

pub fn to_csv(report: &ConvergenceReport) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["param", "gamma", "lambda", "p_re", "p_im", "level", "cells", "steps", "h", "tau"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for n in &report.config.norms {
        header.push(format!("err_{}", n.key()));
        header.push(format!("rate_{}", n.key()));
    }
    let csv_err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for c in &report.cells {
        let p = &report.config.params[c.param];
        let mut row = vec![
            c.param.to_string(),
            p.gamma.to_string(),
            p.lambda.to_string(),
            p.p_re.to_string(),
            p.p_im.to_string(),
            c.level.to_string(),
            c.cells.to_string(),
            c.steps.to_string(),
            c.h.to_string(),
            c.tau.to_string(),
        ];
        for (e, r) in c.errors.iter().zip(&c.rates) {
            row.push(e.to_string());
            row.push(r.map(|r| r.to_string()).unwrap_or_default());
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

fn describe(report: &ConvergenceReport) -> String {
    let cfg = &report.config;
    let scheme = match cfg.scheme {
        Scheme::Fdm => "finite difference",
        Scheme::Fem => "finite element",
    };
    let variant = match cfg.variant {
        Variant::ZeroIc => "zero initial data",
        Variant::GeneralIc => "general initial data",
    };
    let reference = match cfg.reference {
        Reference::Exact => "the exact solution".to_string(),
        Reference::FineGrid { cells, steps } => format!("a reference solve with M = {cells}, N = {steps}"),
        Reference::Refinement => "the solution on the halved grid".to_string(),
    };
    format!(
        "{scheme} scheme, example {}, {variant}, T = {}; errors against {reference}.",
        cfg.example, cfg.t_final
    )
}

/// Err/Rate column pairs per parameter set, one block of rows per norm.
pub fn to_markdown(report: &ConvergenceReport) -> String {
    let cfg = &report.config;
    let levels = cfg.levels();
    let space_varies = levels.windows(2).any(|w| w[0].cells != w[1].cells);
    let mut out = String::new();
    let _ = writeln!(out, "# {}\n", cfg.name);
    let _ = writeln!(out, "{}\n", describe(report));
    let _ = writeln!(out, "version: {}\n", report.version);
    let step_col = if space_varies { "h" } else { "τ" };
    let mut header = format!("| norm | {step_col} |");
    let mut rule = String::from("|---|---|");
    for p in &cfg.params {
        let _ = write!(header, " {p} Err | Rate |");
        rule.push_str("---|---|");
    }
    let _ = writeln!(out, "{header}\n{rule}");
    for (k, norm) in cfg.norms.iter().enumerate() {
        for (l, level) in levels.iter().enumerate() {
            let label = if l == 0 { norm.label().replace('|', "\\|") } else { String::new() };
            let step = if space_varies {
                fmt_step(1.0 / level.cells as f64)
            } else {
                fmt_step(cfg.t_final / level.steps as f64)
            };
            let mut row = format!("| {label} | {step} |");
            for i in 0..cfg.params.len() {
                match report.cell(i, l) {
                    Some(c) => {
                        let rate = c.rates[k].map(|r| format!("{r:.4}")).unwrap_or_else(|| "---".into());
                        let _ = write!(row, " {} | {rate} |", fmt_err(c.errors[k]));
                    }
                    None => row.push_str(" | |"),
                }
            }
            let _ = writeln!(out, "{row}");
        }
    }
    out
}

pub fn to_json(report: &ConvergenceReport) -> CliResult<String> {
    serde_json::to_string_pretty(report).map_err(|e| CliError::Io(e.to_string()))
}

pub fn from_json(text: &str) -> CliResult<ConvergenceReport> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

pub fn render(report: &ConvergenceReport, format: Format) -> CliResult<String> {
    match format {
        Format::Csv => to_csv(report),
        Format::Markdown => Ok(to_markdown(report)),
        Format::Json => to_json(report),
    }
}

/// Writes `<dir>/<name>.<ext>` and returns its path.
pub fn emit_report(report: &ConvergenceReport, format: Format, dir: &Path) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(format!("{}.{}", report.config.name, format.extension()));
    std::fs::write(&path, render(report, format)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}
