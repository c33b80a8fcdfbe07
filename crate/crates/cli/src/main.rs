use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use tfk_cli::check::{all_pass, check_report};
use tfk_cli::config::{Format, Reference, Variant};
use tfk_cli::emit::{emit_report, render};
use tfk_cli::invert::{density_curve, parse_a_grid, pole_curve, DensityPoint, DensitySetup};
use tfk_cli::presets::{preset, NAMES};
use tfk_cli::config::StudyFile;
use tfk_cli::run_study;
use tfk_core::coeffs::CoefficientTable;
use tfk_core::fdm::march_fdm;
use tfk_core::fem::{march_fem, FemOptions, IcTesting};
use tfk_core::laplace::InversionConfig;
use tfk_core::manufactured::{example1, example1_lifted, example2_lifted, example3, example3_on_grid};
use tfk_core::norms::spacetime_norms;
use tfk_core::quadrature::gauss_jacobi;
use tfk_core::verify::verify_all;
use tfk_core::{ModelParams, SpaceGrid, TimeGrid};

#[derive(Parser)]
#[command(name = "tfk", version = concat!(env!("CARGO_PKG_VERSION"), " (", env!("TFK_GIT_DESCRIBE"), ")"), about = "Time-tempered fractional Feynman-Kac solvers")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML file with a study (`convergence`) or density setup (`invert`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; results go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Output format; repeat to write several files with --out.
    #[arg(long, global = true, value_enum)]
    format: Vec<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Markdown => Format::Markdown,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    ZeroIc,
    GeneralIc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Transform {
    /// The solver-backed transform of the third example.
    Example3,
    /// 1/(p + 2).
    Pole,
}

#[derive(Subcommand)]
enum Command {
    /// Grünwald, tempered and scheme coefficients.
    Coeffs {
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 16)]
        n: usize,
    },
    /// One finite difference solve of a bundled problem.
    SolveFdm(SolveArgs),
    /// One finite element solve of a bundled problem.
    SolveFem {
        #[command(flatten)]
        solve: SolveArgs,
        /// Gauss-Legendre sites per element for the history terms.
        #[arg(long, default_value_t = tfk_core::fem::DEFAULT_QUAD_ORDER)]
        quad_order: usize,
        /// Test φ through its P1 interpolant instead of exactly.
        #[arg(long)]
        interpolant_ic: bool,
    },
    /// Convergence study from a preset or --config.
    Convergence {
        #[arg(long)]
        preset: Option<String>,
        /// List the presets and exit.
        #[arg(long)]
        list: bool,
        /// Compare with the preset's reference values; exit code 2 on failure.
        #[arg(long)]
        check: bool,
        /// Override the fine-grid reference (cells).
        #[arg(long, requires = "reference_steps")]
        reference_cells: Option<usize>,
        /// Override the fine-grid reference (steps).
        #[arg(long, requires = "reference_cells")]
        reference_steps: Option<usize>,
    },
    /// Laplace inversion in A.
    Invert {
        #[arg(long, value_enum, default_value = "example3")]
        transform: Transform,
        #[arg(long, default_value_t = 0.3)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        /// Space cells; τ = h.
        #[arg(long = "M", default_value_t = 1024)]
        cells: usize,
        #[arg(long = "t", default_value_t = 0.5)]
        t_final: f64,
        #[arg(long, default_value_t = 0.5)]
        x0: f64,
        /// start:stop:count or a comma-separated list.
        #[arg(long = "A-grid", default_value = "0.1:2:20")]
        a_grid: String,
        #[arg(long, default_value_t = 18.4)]
        a_tilde: f64,
        #[arg(long, default_value_t = 25)]
        k1: usize,
        #[arg(long, default_value_t = 15)]
        k2: usize,
    },
    /// Oracle-equivalence checks of the library.
    Verify,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value_t = 1)]
    example: u8,
    #[arg(long, value_enum, default_value = "zero-ic")]
    variant: VariantArg,
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    kgamma: f64,
    #[arg(long, default_value_t = 0.0)]
    p_re: f64,
    #[arg(long, default_value_t = 0.0)]
    p_im: f64,
    #[arg(long = "M")]
    cells: usize,
    #[arg(long = "N")]
    steps: usize,
    #[arg(long = "T", default_value_t = 1.0)]
    t_final: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn formats(common: &Common, default: &[Format]) -> Vec<Format> {
    if common.format.is_empty() {
        default.to_vec()
    } else {
        common.format.iter().map(|&f| f.into()).collect()
    }
}

fn write_out(common: &Common, file: &str, text: &str) -> Result<()> {
    match &common.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
            let path = dir.join(file);
            fs::write(&path, text).with_context(|| path.display().to_string())?;
            eprintln!("wrote {}", path.display());
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let common = &cli.common;
    match cli.command {
        Command::Coeffs { gamma, lambda, tau, n } => {
            let t = CoefficientTable::new(gamma, lambda, tau, n)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["k", "g", "g_tempered", "d", "q"])?;
            for k in 0..=n {
                w.write_record([
                    k.to_string(),
                    t.g_plain[k].to_string(),
                    t.g_tempered[k].to_string(),
                    t.d[k].to_string(),
                    t.q_partial[k].to_string(),
                ])?;
            }
            write_out(common, "coeffs.csv", &String::from_utf8(w.into_inner()?)?)?;
        }
        Command::SolveFdm(args) => solve(common, &args, None)?,
        Command::SolveFem {
            solve: args,
            quad_order,
            interpolant_ic,
        } => {
            let ic_testing = if interpolant_ic { IcTesting::Interpolant } else { IcTesting::Exact };
            solve(common, &args, Some(FemOptions { quad_order, ic_testing }))?
        }
        Command::Convergence {
            preset: name,
            list,
            check,
            reference_cells,
            reference_steps,
        } => {
            if list {
                for n in NAMES {
                    println!("{n}");
                }
                return Ok(ExitCode::SUCCESS);
            }
            return convergence(common, name, check, reference_cells.zip(reference_steps));
        }
        Command::Invert {
            transform,
            gamma,
            lambda,
            cells,
            t_final,
            x0,
            a_grid,
            a_tilde,
            k1,
            k2,
        } => {
            let a_values = parse_a_grid(&a_grid)?;
            let inversion = InversionConfig { a_tilde, k1, k2 };
            let points = match transform {
                Transform::Pole => pole_curve(&inversion, &a_values)?,
                Transform::Example3 => {
                    let setup = match &common.config {
                        Some(path) => {
                            let text = fs::read_to_string(path).with_context(|| path.display().to_string())?;
                            toml::from_str(&text).with_context(|| path.display().to_string())?
                        }
                        None => DensitySetup {
                            gamma,
                            lambda,
                            cells,
                            t_final,
                            x0,
                            inversion,
                        },
                    };
                    density_curve(&setup, &a_values, common.jobs)?
                }
            };
            write_out(common, "density.csv", &density_csv(&points)?)?;
            let worst = points.iter().map(|p| p.abs_error).fold(0.0, f64::max);
            eprintln!("max |pdf_numeric - pdf_analytic| = {worst:.3e}");
        }
        Command::Verify => {
            let outcomes = verify_all();
            let mut ok = true;
            for o in &outcomes {
                ok &= o.passed;
                println!(
                    "{} {} (deviation {:.3e}, tolerance {:.0e})",
                    if o.passed { "PASS" } else { "FAIL" },
                    o.name,
                    o.deviation,
                    o.tolerance
                );
            }
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn density_csv(points: &[DensityPoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["A", "pdf_numeric", "pdf_analytic", "abs_error"])?;
    for p in points {
        w.write_record([p.a, p.numeric, p.analytic, p.abs_error].map(|v| v.to_string()))?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn convergence(common: &Common, name: Option<String>, check: bool, reference: Option<(usize, usize)>) -> Result<ExitCode> {
    let found = name.as_deref().map(|n| preset(n).with_context(|| format!("unknown preset `{n}`; try --list")));
    let (mut cfg, expectation) = match (&common.config, found) {
        (Some(path), None) => {
            let file = StudyFile::load(path)?;
            (file.study, file.expect.zip(file.check))
        }
        (None, Some(p)) => {
            let p = p?;
            (p.config, Some((p.expectation, p.check)))
        }
        (Some(_), Some(_)) => bail!("give either --preset or --config"),
        (None, None) => bail!("a study needs --preset or --config"),
    };
    if let Some((cells, steps)) = reference {
        if !matches!(cfg.reference, Reference::FineGrid { .. }) {
            bail!("this study has no fine-grid reference to override");
        }
        cfg.reference = Reference::FineGrid { cells, steps };
    }
    if let Some(dir) = &common.out {
        cfg.outputs.dir = Some(dir.clone());
    }
    if !common.format.is_empty() {
        cfg.outputs.formats = formats(common, &[]);
    }
    let report = run_study(&cfg, common.jobs)?;
    eprintln!("{} cells in {:.1} s", report.cells.len(), report.total_runtime().as_secs_f64());
    match &cfg.outputs.dir {
        Some(dir) => {
            let fmts = if cfg.outputs.formats.is_empty() {
                vec![Format::Csv, Format::Markdown, Format::Json]
            } else {
                cfg.outputs.formats.clone()
            };
            for f in fmts {
                eprintln!("wrote {}", emit_report(&report, f, dir)?.display());
            }
        }
        None => {
            let f = cfg.outputs.formats.first().copied().unwrap_or(Format::Markdown);
            print!("{}", render(&report, f)?);
        }
    }
    if check {
        let Some((expect, tolerances)) = expectation else {
            bail!("--check needs reference values: a preset, or [expect] and [check] in the config file");
        };
        let findings = check_report(&report, &expect, &tolerances);
        for f in findings.iter().filter(|f| !f.passed) {
            eprintln!("{f}");
        }
        if !all_pass(&findings) {
            eprintln!("check failed");
            return Ok(ExitCode::from(2));
        }
        eprintln!("check passed ({} comparisons)", findings.len());
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct NodeValue {
    x: f64,
    re: f64,
    im: f64,
    exact_re: Option<f64>,
    exact_im: Option<f64>,
}

fn solve(common: &Common, args: &SolveArgs, fem: Option<FemOptions>) -> Result<()> {
    let mut params = ModelParams::unit_interval(args.gamma, args.lambda, Complex64::new(args.p_re, args.p_im));
    params.k_gamma = args.kgamma;
    let space = SpaceGrid::new(0.0, 1.0, args.cells)?;
    let time = TimeGrid::new(args.t_final, args.steps)?;
    let variant = match args.variant {
        VariantArg::ZeroIc => Variant::ZeroIc,
        VariantArg::GeneralIc => Variant::GeneralIc,
    };
    let pr = match (args.example, variant) {
        (1, Variant::ZeroIc) => example1_lifted(&params)?,
        (1, Variant::GeneralIc) => example1(&params)?,
        (2, _) => example2_lifted(&params, &gauss_jacobi(args.gamma, 32)?)?,
        (3, _) if fem.is_none() => example3_on_grid(&params, &space, &time)?,
        (3, _) => example3(&params)?,
        (e, _) => bail!("example must be 1, 2 or 3, got {e}"),
    };
    if args.kgamma != 1.0 {
        eprintln!("note: the bundled sources assume K = 1; errors against the exact solution are not meaningful");
    }
    let history = match fem {
        None => march_fdm(&params, &space, &time, pr.source.as_ref(), &pr.initial_vector(&space), variant.into())?,
        Some(options) => {
            let phi = pr.initial.clone();
            march_fem(&params, &space, &time, pr.source.as_ref(), &|x| phi.eval(x), variant.into(), options)?.history
        }
    };
    if let Some(exact) = pr.exact_history(space, time) {
        let s = spacetime_norms(&history.difference(&exact)?);
        eprintln!(
            "errors: spacetime_max {:.4e}, spacetime_h1 {:.4e}, max_in_time {:.4e}",
            s.st_0prime_hinf, s.st_0h1, s.max_hinf
        );
    }
    if example_is_lifted(args.example, variant) {
        eprintln!("values are the lifted unknown W (zero boundary and initial data)");
    }
    let t = args.t_final;
    let rows: Vec<NodeValue> = space
        .interior_nodes()
        .iter()
        .zip(history.last().iter())
        .map(|(&x, g)| {
            let e = pr.exact.as_ref().map(|f| f.eval(x, t));
            NodeValue {
                x,
                re: g.re,
                im: g.im,
                exact_re: e.map(|e| e.re),
                exact_im: e.map(|e| e.im),
            }
        })
        .collect();
    let stem = format!("solve-{}-ex{}", if fem.is_some() { "fem" } else { "fdm" }, args.example);
    for f in formats(common, &[Format::Csv]) {
        let text = match f {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for r in &rows {
                    w.serialize(r)?;
                }
                String::from_utf8(w.into_inner()?)?
            }
            Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
            Format::Markdown => {
                let mut s = String::from("| x | Re G | Im G |\n|---|---|---|\n");
                for r in &rows {
                    s.push_str(&format!("| {} | {:.6e} | {:.6e} |\n", r.x, r.re, r.im));
                }
                s
            }
        };
        write_out(common, &format!("{stem}.{}", f.extension()), &text)?;
    }
    Ok(())
}

fn example_is_lifted(example: u8, variant: Variant) -> bool {
    example == 2 || (example == 1 && variant == Variant::ZeroIc)
}
