//! `mkq`: center-outward quantiles, tail functionals, and multivariate risk
//! measures from the command line.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mkq::maps::RankSign;
use mkq::risk::{generate_scenario, risk_report, Scenario, ScenarioSpec};
use mkq::tails::{ContourKind, TailOptions};
use mkq::{
    direction_grid, Contour, DirectionGrid, Error, FittedPotential, GammaModel, PointCloud,
    ReferenceSpec, SolveMethod, SolveOptions,
};

#[derive(Parser)]
#[command(
    name = "mkq",
    version,
    about = "Center-outward quantiles, superquantiles, shortfalls, and multivariate VaR/CVaR \
             via entropically regularized optimal transport"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Averaged stochastic gradient on fresh reference draws.
    Sgd,
    /// Fixed-point (Sinkhorn) iteration on a frozen reference grid.
    Fixed,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
    Csv,
}

#[derive(Args)]
struct ModelArgs {
    /// Input CSV: header row, then one numeric observation per line.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Previously fitted model (output of `mkq fit`); takes precedence over
    /// fitting from --input.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Reference measure: ud | ud-plus | udq:<p> | udq-plus:<p>.
    #[arg(long, default_value = "ud")]
    reference: String,
    /// Entropic regularization strength.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long, value_enum, default_value_t = Method::Fixed)]
    method: Method,
    /// Solver sweeps (fixed) or gradient steps (sgd).
    #[arg(long)]
    iters: Option<usize>,
    /// Fixed-point residual tolerance.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Seed for every random draw in the run.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reference discretization size (grid for fixed, minibatch for sgd).
    #[arg(long)]
    batch: Option<usize>,
    /// Standardize each column to zero mean and unit variance before
    /// fitting. Caveat: common-scalar scale equivariance does not cover
    /// per-column scaling, so results are in standardized units.
    #[arg(long, default_value_t = false)]
    standardize: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Contour levels in (0,1), comma-separated.
    #[arg(long, default_value = "0.25,0.5,0.75", value_delimiter = ',')]
    levels: Vec<f64>,
    /// Number of contour directions (defaults per dimension).
    #[arg(long)]
    directions: Option<usize>,
    /// Midpoint-rule steps for radial tail integrals.
    #[arg(long, default_value_t = 128)]
    radial_steps: usize,
    /// Upper truncation of the outer radial integral.
    #[arg(long, default_value_t = 1.0)]
    rmax: f64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Output file (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the entropic dual potential and persist it as JSON.
    Fit {
        #[command(flatten)]
        model: ModelArgs,
        /// Where to write the fitted model.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Evaluate the quantile map at points or emit contour vertices.
    Quantile {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// Reference points "u0,u1,..." (repeatable); contours when omitted.
        #[arg(long)]
        at: Vec<String>,
    },
    /// Evaluate the center-outward superquantile.
    Superquantile {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long)]
        at: Vec<String>,
    },
    /// Evaluate the center-outward expected shortfall.
    Shortfall {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long)]
        at: Vec<String>,
    },
    /// Emit quantile, superquantile, and shortfall contours at each level.
    Contour {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Vector-at-Risk report per level.
    Var {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Conditional-Vector-at-Risk report per level.
    Cvar {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Center-outward ranks and signs of each data row.
    Rank {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic scenario to CSV (pair scenarios write a second
    /// file with a `-b` suffix).
    Simulate {
        /// scaled-cov | outliers | shift | directional | banana
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Covariance factor (scaled-cov).
        #[arg(long, default_value_t = 4.0)]
        scale: f64,
        /// Outlier fraction (outliers).
        #[arg(long, default_value_t = 0.05)]
        fraction: f64,
        /// Outlier displacement radius (outliers).
        #[arg(long, default_value_t = 8.0)]
        radius: f64,
        /// Shift vector "b0,b1" (shift).
        #[arg(long, default_value = "2,0", value_delimiter = ',')]
        shift: Vec<f64>,
        /// Axis elongation factor (directional).
        #[arg(long, default_value_t = 3.0)]
        elongation: f64,
        /// Quadratic bend (banana).
        #[arg(long, default_value_t = 1.0)]
        curvature: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Closed-form gamma-model oracle evaluations.
    Analytic {
        /// Dimension of the product model.
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Component exponent p > 1.
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// quantile | distribution | superquantile | shortfall.
        #[arg(long, default_value = "quantile")]
        op: String,
        /// Evaluation points "c0,c1,..." (repeatable).
        #[arg(long, required = true)]
        at: Vec<String>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit two clouds and report their risk measures rescaled by the
    /// pairwise maximum.
    Compare {
        #[command(flatten)]
        model: ModelArgs,
        /// Second input CSV.
        #[arg(long)]
        input2: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help and version are not errors.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, kind) = match &err {
                Error::Parameter(_) => (1, "parameter"),
                Error::Data(_) | Error::Io(_) => (2, "data"),
                Error::Numerical(_) => (3, "numerical"),
            };
            eprintln!(
                "{}",
                serde_json::json!({ "error": { "kind": kind, "message": err.to_string() } })
            );
            ExitCode::from(code)
        }
    }
}

// ---------------------------------------------------------------------------
// Model acquisition

fn parse_reference(spec: &str, d: usize) -> Result<ReferenceSpec, Error> {
    match spec {
        "ud" => ReferenceSpec::spherical(d),
        "ud-plus" => ReferenceSpec::spherical_positive(d),
        _ => {
            if let Some(p) = spec.strip_prefix("udq-plus:") {
                let p: f64 = p
                    .parse()
                    .map_err(|_| Error::parameter(format!("invalid p in reference {spec:?}")))?;
                ReferenceSpec::q_conjugate_positive(d, p)
            } else if let Some(p) = spec.strip_prefix("udq:") {
                let p: f64 = p
                    .parse()
                    .map_err(|_| Error::parameter(format!("invalid p in reference {spec:?}")))?;
                ReferenceSpec::q_conjugate(d, p)
            } else {
                Err(Error::parameter(format!(
                    "unknown reference {spec:?}; expected ud | ud-plus | udq:<p> | udq-plus:<p>"
                )))
            }
        }
    }
}

fn standardize(cloud: &PointCloud) -> Result<PointCloud, Error> {
    let n = cloud.n();
    let d = cloud.dim();
    let mean = cloud.mean();
    let mut var = vec![0.0; d];
    for row in cloud.rows() {
        for (v, (x, m)) in var.iter_mut().zip(row.iter().zip(&mean)) {
            *v += (x - m) * (x - m);
        }
    }
    let mut flat = Vec::with_capacity(n * d);
    for row in cloud.rows() {
        for k in 0..d {
            let sd = (var[k] / n as f64).sqrt();
            if sd == 0.0 {
                return Err(Error::data(format!("column {k} is constant; cannot standardize")));
            }
            flat.push((row[k] - mean[k]) / sd);
        }
    }
    PointCloud::from_flat(n, d, flat)
}

fn load_input(args: &ModelArgs) -> Result<PointCloud, Error> {
    let path = args
        .input
        .as_ref()
        .ok_or_else(|| Error::parameter("--input is required here"))?;
    let cloud = mkq::io::load_csv(path)?;
    if args.standardize {
        standardize(&cloud)
    } else {
        Ok(cloud)
    }
}

fn solve_options(args: &ModelArgs) -> SolveOptions {
    let method = match args.method {
        Method::Sgd => SolveMethod::AveragedSgd,
        Method::Fixed => SolveMethod::FixedPoint,
    };
    let mut opts = match method {
        SolveMethod::AveragedSgd => SolveOptions::sgd(),
        SolveMethod::FixedPoint => SolveOptions::default(),
    };
    if let Some(iters) = args.iters {
        opts.iterations = iters;
    }
    opts.reference_points = args.batch;
    opts.tolerance = args.tol;
    opts.seed = args.seed;
    opts
}

fn obtain_model(args: &ModelArgs) -> Result<FittedPotential, Error> {
    if let Some(path) = &args.model {
        return mkq::persist::load_potential(path);
    }
    let cloud = load_input(args)?;
    let reference = parse_reference(&args.reference, cloud.dim())?;
    mkq::solve_semidual(cloud, reference, args.epsilon, &solve_options(args))
}

fn grid_for(model: &FittedPotential, eval: &EvalArgs) -> Result<DirectionGrid, Error> {
    let m = eval
        .directions
        .unwrap_or_else(|| mkq::default_direction_count(model.dim()));
    direction_grid(model.reference(), m)
}

fn tail_options(eval: &EvalArgs) -> TailOptions {
    TailOptions {
        radial_steps: eval.radial_steps,
        r_min: 0.0,
        r_max: eval.rmax,
    }
}

fn parse_points(at: &[String], d: usize) -> Result<Vec<Vec<f64>>, Error> {
    at.iter()
        .map(|s| {
            let point: Result<Vec<f64>, Error> = s
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::parameter(format!("invalid coordinate {f:?}")))
                })
                .collect();
            let point = point?;
            if point.len() != d {
                return Err(Error::parameter(format!(
                    "point {s:?} has {} coordinates, expected {d}",
                    point.len()
                )));
            }
            Ok(point)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Output helpers

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match output {
        Some(path) => {
            fs::write(path, text)?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render_table(headers: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |cells: &[String], widths: &[usize], out: &mut String| {
        let formatted: Vec<String> = cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:>w$}", w = w))
            .collect();
        let _ = writeln!(out, "{}", formatted.join("  "));
    };
    line(headers, &widths, &mut out);
    let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    for row in rows {
        line(row, &widths, &mut out);
    }
    out
}

fn render_csv(headers: &[String], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", headers.join(","));
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

fn render<T: Serialize>(
    format: Format,
    json_value: &T,
    headers: &[String],
    rows: &[Vec<String>],
) -> Result<String, Error> {
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(json_value)
                .map_err(|e| Error::data(format!("serialization failed: {e}")))?;
            s.push('\n');
            s
        }
        Format::Table => render_table(headers, rows),
        Format::Csv => render_csv(headers, rows),
    })
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

// ---------------------------------------------------------------------------
// Subcommand bodies

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Fit { model, output, format } => {
            let fit = obtain_model(&model)?;
            mkq::persist::save_potential(&fit, &output)?;
            #[derive(Serialize)]
            struct FitSummary<'a> {
                n: usize,
                d: usize,
                epsilon: f64,
                log: &'a mkq::SolveLog,
                model_path: String,
            }
            let summary = FitSummary {
                n: fit.data().n(),
                d: fit.dim(),
                epsilon: fit.epsilon(),
                log: fit.solve_log(),
                model_path: output.display().to_string(),
            };
            let headers: Vec<String> =
                ["n", "d", "epsilon", "iterations", "residual", "converged"]
                    .map(String::from)
                    .to_vec();
            let rows = vec![vec![
                fit.data().n().to_string(),
                fit.dim().to_string(),
                format!("{}", fit.epsilon()),
                fit.solve_log().iterations_run.to_string(),
                format!("{:.3e}", fit.solve_log().residual),
                fit.solve_log().converged.to_string(),
            ]];
            emit(&None, &render(format, &summary, &headers, &rows)?)
        }
        Command::Quantile { model, eval, at } => {
            evaluate_map(&model, &eval, &at, ContourKind::Quantile)
        }
        Command::Superquantile { model, eval, at } => {
            evaluate_map(&model, &eval, &at, ContourKind::Superquantile)
        }
        Command::Shortfall { model, eval, at } => {
            evaluate_map(&model, &eval, &at, ContourKind::Shortfall)
        }
        Command::Contour { model, eval } => {
            let fit = obtain_model(&model)?;
            let grid = grid_for(&fit, &eval)?;
            let opts = tail_options(&eval);
            let mut contours: Vec<(ContourKind, Contour)> = Vec::new();
            for &level in &eval.levels {
                for kind in [
                    ContourKind::Quantile,
                    ContourKind::Superquantile,
                    ContourKind::Shortfall,
                ] {
                    contours.push((kind, mkq::tail_contour(&fit, kind, level, &grid, &opts)?));
                }
            }
            emit_contours(&eval, fit.dim(), &contours)
        }
        Command::Var { model, eval } | Command::Cvar { model, eval } => {
            let fit = obtain_model(&model)?;
            let grid = grid_for(&fit, &eval)?;
            let opts = tail_options(&eval);
            let reports: Vec<_> = eval
                .levels
                .iter()
                .map(|&alpha| risk_report(&fit, alpha, &grid, &opts))
                .collect::<Result<_, _>>()?;
            let d = fit.dim();
            let mut headers = vec!["alpha".to_string()];
            headers.extend((0..d).map(|k| format!("var_{k}")));
            headers.push("rho_q".into());
            headers.extend((0..d).map(|k| format!("cvar_{k}")));
            headers.push("rho_s".into());
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    let mut row = vec![format!("{}", r.alpha)];
                    row.extend(r.vector_at_risk.iter().map(|&v| num(v)));
                    row.push(num(r.rho_q));
                    row.extend(r.conditional_vector_at_risk.iter().map(|&v| num(v)));
                    row.push(num(r.rho_s));
                    row
                })
                .collect();
            emit(&eval.output, &render(eval.format, &reports, &headers, &rows)?)
        }
        Command::Rank { model, format, output } => {
            let fit = obtain_model(&model)?;
            let data = fit.data().clone();
            let ranks: Vec<RankSign> = data
                .rows()
                .map(|x| fit.rank_sign(x))
                .collect::<Result<_, _>>()?;
            let d = fit.dim();
            let mut headers = vec!["row".to_string(), "rank".to_string()];
            headers.extend((0..d).map(|k| format!("sign_{k}")));
            headers.push("direction_defined".into());
            let rows: Vec<Vec<String>> = ranks
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let mut row = vec![i.to_string(), num(r.rank)];
                    row.extend(r.sign.iter().map(|&s| num(s)));
                    row.push(r.direction_defined.to_string());
                    row
                })
                .collect();
            emit(&output, &render(format, &ranks, &headers, &rows)?)
        }
        Command::Simulate {
            scenario,
            n,
            seed,
            scale,
            fraction,
            radius,
            shift,
            elongation,
            curvature,
            output,
        } => {
            let spec = match scenario.as_str() {
                "scaled-cov" => ScenarioSpec::GaussianScaledCov { n, scale, seed },
                "outliers" => ScenarioSpec::GaussianOutliers {
                    n,
                    fraction,
                    radius,
                    seed,
                },
                "shift" => ScenarioSpec::GaussianShift { n, shift, seed },
                "directional" => ScenarioSpec::GaussianDirectional { n, elongation, seed },
                "banana" => ScenarioSpec::Banana { n, curvature, seed },
                other => {
                    return Err(Error::parameter(format!(
                        "unknown scenario {other:?}; expected scaled-cov | outliers | shift | \
                         directional | banana"
                    )))
                }
            };
            match generate_scenario(&spec)? {
                Scenario::Single(cloud) => mkq::io::write_csv(&output, &cloud, None),
                Scenario::Pair(a, b) => {
                    mkq::io::write_csv(&output, &a, None)?;
                    mkq::io::write_csv(&sibling_path(&output), &b, None)
                }
            }
        }
        Command::Analytic {
            d,
            p,
            op,
            at,
            format,
            output,
        } => {
            let model = GammaModel::new(d, p)?;
            let points = parse_points(&at, d)?;
            let values: Vec<Vec<f64>> = points
                .iter()
                .map(|x| match op.as_str() {
                    "quantile" => model.mk_quantile(x),
                    "distribution" => model.mk_distribution(x),
                    "superquantile" => model.mk_superquantile(x),
                    "shortfall" => model.mk_expected_shortfall(x),
                    other => Err(Error::parameter(format!(
                        "unknown analytic op {other:?}; expected quantile | distribution | \
                         superquantile | shortfall"
                    ))),
                })
                .collect::<Result<_, _>>()?;
            #[derive(Serialize)]
            struct AnalyticRow {
                input: Vec<f64>,
                output: Vec<f64>,
            }
            let records: Vec<AnalyticRow> = points
                .iter()
                .zip(&values)
                .map(|(i, o)| AnalyticRow {
                    input: i.clone(),
                    output: o.clone(),
                })
                .collect();
            let mut headers: Vec<String> = (0..d).map(|k| format!("in_{k}")).collect();
            headers.extend((0..d).map(|k| format!("out_{k}")));
            let rows: Vec<Vec<String>> = records
                .iter()
                .map(|r| {
                    r.input
                        .iter()
                        .chain(&r.output)
                        .map(|&v| num(v))
                        .collect()
                })
                .collect();
            emit(&output, &render(format, &records, &headers, &rows)?)
        }
        Command::Compare { model, input2, eval } => {
            let fit_a = obtain_model(&model)?;
            let second = ModelArgs {
                input: Some(input2),
                model: None,
                reference: model.reference.clone(),
                epsilon: model.epsilon,
                method: model.method,
                iters: model.iters,
                tol: model.tol,
                seed: model.seed,
                batch: model.batch,
                standardize: model.standardize,
            };
            let fit_b = obtain_model(&second)?;
            let grid = grid_for(&fit_a, &eval)?;
            let opts = tail_options(&eval);
            #[derive(Serialize)]
            struct CompareRow {
                alpha: f64,
                rho_q_first: f64,
                rho_q_second: f64,
                rho_s_first: f64,
                rho_s_second: f64,
            }
            let mut records = Vec::new();
            for &alpha in &eval.levels {
                let a = risk_report(&fit_a, alpha, &grid, &opts)?;
                let b = risk_report(&fit_b, alpha, &grid, &opts)?;
                // Bars are rescaled by the pairwise maximum per measure.
                let q_max = a.rho_q.max(b.rho_q);
                let s_max = a.rho_s.max(b.rho_s);
                records.push(CompareRow {
                    alpha,
                    rho_q_first: a.rho_q / q_max,
                    rho_q_second: b.rho_q / q_max,
                    rho_s_first: a.rho_s / s_max,
                    rho_s_second: b.rho_s / s_max,
                });
            }
            let headers: Vec<String> =
                ["alpha", "rho_q_first", "rho_q_second", "rho_s_first", "rho_s_second"]
                    .map(String::from)
                    .to_vec();
            let rows: Vec<Vec<String>> = records
                .iter()
                .map(|r| {
                    vec![
                        format!("{}", r.alpha),
                        num(r.rho_q_first),
                        num(r.rho_q_second),
                        num(r.rho_s_first),
                        num(r.rho_s_second),
                    ]
                })
                .collect();
            emit(&eval.output, &render(eval.format, &records, &headers, &rows)?)
        }
    }
}

/// `quantile`, `superquantile`, and `shortfall` bodies: pointwise when --at
/// is given, contour vertices otherwise.
fn evaluate_map(
    model: &ModelArgs,
    eval: &EvalArgs,
    at: &[String],
    kind: ContourKind,
) -> Result<(), Error> {
    let fit = obtain_model(model)?;
    let opts = tail_options(eval);
    if !at.is_empty() {
        let points = parse_points(at, fit.dim())?;
        let values: Vec<Vec<f64>> = points
            .iter()
            .map(|u| match kind {
                ContourKind::Quantile => fit.quantile(u),
                ContourKind::Superquantile => mkq::superquantile(&fit, u, &opts),
                ContourKind::Shortfall => mkq::expected_shortfall(&fit, u, &opts),
            })
            .collect::<Result<_, _>>()?;
        #[derive(Serialize)]
        struct EvalRow {
            u: Vec<f64>,
            value: Vec<f64>,
        }
        let records: Vec<EvalRow> = points
            .iter()
            .zip(&values)
            .map(|(u, v)| EvalRow {
                u: u.clone(),
                value: v.clone(),
            })
            .collect();
        let d = fit.dim();
        let mut headers: Vec<String> = (0..d).map(|k| format!("u_{k}")).collect();
        headers.extend((0..d).map(|k| format!("value_{k}")));
        let rows: Vec<Vec<String>> = records
            .iter()
            .map(|r| r.u.iter().chain(&r.value).map(|&v| num(v)).collect())
            .collect();
        emit(&eval.output, &render(eval.format, &records, &headers, &rows)?)
    } else {
        let grid = grid_for(&fit, eval)?;
        let contours: Vec<(ContourKind, Contour)> = eval
            .levels
            .iter()
            .map(|&level| Ok((kind, mkq::tail_contour(&fit, kind, level, &grid, &opts)?)))
            .collect::<Result<_, Error>>()?;
        emit_contours(eval, fit.dim(), &contours)
    }
}

fn kind_name(kind: ContourKind) -> &'static str {
    match kind {
        ContourKind::Quantile => "quantile",
        ContourKind::Superquantile => "superquantile",
        ContourKind::Shortfall => "shortfall",
    }
}

fn emit_contours(
    eval: &EvalArgs,
    d: usize,
    contours: &[(ContourKind, Contour)],
) -> Result<(), Error> {
    #[derive(Serialize)]
    struct ContourRecord<'a> {
        kind: &'static str,
        level: f64,
        vertices: &'a [Vec<f64>],
    }
    let records: Vec<ContourRecord> = contours
        .iter()
        .map(|(kind, c)| ContourRecord {
            kind: kind_name(*kind),
            level: c.level,
            vertices: &c.vertices,
        })
        .collect();
    let mut headers: Vec<String> = ["level", "kind", "dir_index"].map(String::from).to_vec();
    headers.extend((0..d).map(|k| format!("coord_{k}")));
    let mut rows = Vec::new();
    for (kind, c) in contours {
        for (j, v) in c.vertices.iter().enumerate() {
            let mut row = vec![
                format!("{}", c.level),
                kind_name(*kind).to_string(),
                j.to_string(),
            ];
            row.extend(v.iter().map(|&x| num(x)));
            rows.push(row);
        }
    }
    emit(&eval.output, &render(eval.format, &records, &headers, &rows)?)
}

/// `foo.csv` -> `foo-b.csv` for the second cloud of pair scenarios.
fn sibling_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}-b.{ext}"))
}
