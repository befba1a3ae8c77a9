//! Experiment orchestration: config in, tables, plots and a manifest out.

use std::path::{Path, PathBuf};
use std::time::Instant;

use robin_core::analysis::{lp_norm, sup_norm, Region, SupRegion};
use robin_core::experiments::{
    analytic_interval_solution, convergence_study, estimate_constant, level_set_pipeline, solve_robin,
    stability_sweep, theorem0_ratio, RobinProblem, SolveSettings,
};
use robin_core::fields::{BoundaryField, SourceField};
use robin_core::linalg::SolverOptions;
use robin_core::mesh::{build_mesh, Mesh};
use robin_core::stampacchia::GapVariant;
use serde_json::{json, Value};

use crate::config::{boundary_field, source_field, ConfigError, DomainName, Experiment, FieldSpec, RunConfig};
use crate::output::{emit_csv, emit_svg, Cell, Series, Table};

pub const DIMENSION_WARNING: &str =
    "illustrative: dimension below 3 lies outside the dimension hypothesis of the sup-norm estimates";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("experiment failed: {0}")]
    Solve(#[from] robin_core::Error),
    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Solve(_) => 3,
            RunError::Io { .. } => 4,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            RunError::Config(e) => json!({"error": "invalid_config", "field": e.field, "message": e.message}),
            RunError::Solve(e) => json!({"error": "solve_failed", "message": e.to_string()}),
            RunError::Io { path, message } => json!({"error": "io", "path": path, "message": message}),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> RunError {
    RunError::Io { path: path.to_path_buf(), message: e.to_string() }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub experiment: Experiment,
    pub files: Vec<PathBuf>,
    /// Human-readable summary, one line per entry.
    pub summary: Vec<String>,
    pub manifest: Value,
}

/// Tables, plots and result metadata of one experiment, before anything is
/// written.
#[derive(Default)]
struct Products {
    tables: Vec<(&'static str, Table)>,
    plots: Vec<(&'static str, Series)>,
    results: serde_json::Map<String, Value>,
    summary: Vec<String>,
}

/// Runs the configured experiment and writes every product into `output_dir`.
pub fn run(config: &RunConfig, output_dir: &Path) -> Result<RunOutcome, RunError> {
    let experiment = config.validate()?;
    let t_mesh = Instant::now();
    let mesh = build_mesh(config.domain.domain(), config.n).map_err(|e| ConfigError::new("n", e.to_string()))?;
    let mesh_ms = elapsed_ms(t_mesh);

    let settings = SolveSettings {
        quad_order: config.quad_order,
        lumped: config.lumped,
        solver: SolverOptions { tol: config.tol, ..SolverOptions::default() },
    };
    let f = source_field(&config.f);

    let t_exp = Instant::now();
    let products = match experiment {
        Experiment::Solve => solve_experiment(config, &mesh, &f, &settings)?,
        Experiment::Stability => stability_experiment(config, &mesh, &f, &settings)?,
        Experiment::Convergence => convergence_experiment(config, &mesh, &f, &settings)?,
        Experiment::Stampacchia => stampacchia_experiment(config, &mesh, &f, &settings)?,
        Experiment::Theorem0 => theorem0_experiment(config, &mesh, &f, &settings)?,
    };
    let experiment_ms = elapsed_ms(t_exp);

    let t_out = Instant::now();
    std::fs::create_dir_all(output_dir).map_err(|e| io_err(output_dir, e))?;
    let mut files = Vec::new();
    for (name, table) in &products.tables {
        let path = output_dir.join(name);
        emit_csv(table, &path).map_err(|e| io_err(&path, e))?;
        files.push(path);
    }
    for (name, series) in &products.plots {
        let path = output_dir.join(name);
        emit_svg(series, &path).map_err(|e| io_err(&path, e))?;
        files.push(path);
    }
    let output_ms = elapsed_ms(t_out);

    let mut echo = config.clone();
    echo.experiment = Some(experiment);
    echo.output_dir = Some(output_dir.to_path_buf());
    let warnings: Vec<&str> = match config.domain {
        DomainName::Interval | DomainName::Square => vec![DIMENSION_WARNING],
        DomainName::Cube => vec![],
    };
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": experiment.name(),
        "config": echo.to_json(),
        "mesh": {
            "domain": mesh.domain().name(),
            "dim": mesh.dim(),
            "n": mesh.n(),
            "h": mesh.h(),
            "vertices": mesh.num_vertices(),
            "cells": mesh.num_cells(),
            "boundary_facets": mesh.boundary_facets().len(),
        },
        "timings_ms": {"mesh": mesh_ms, "experiment": experiment_ms, "output": output_ms},
        "results": products.results,
        "warnings": warnings,
        "files": files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect::<Vec<_>>(),
    });
    let manifest_path = output_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(&manifest_path, text).map_err(|e| io_err(&manifest_path, e))?;
    files.push(manifest_path);

    Ok(RunOutcome { experiment, files, summary: products.summary, manifest })
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn coefficients(specs: &[FieldSpec], mesh: &Mesh, quad_order: usize) -> Result<Vec<BoundaryField>, ConfigError> {
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| boundary_field(s, &format!("beta_sequence[{i}]"), mesh, quad_order))
        .collect()
}

fn single_beta(config: &RunConfig, mesh: &Mesh) -> Result<BoundaryField, ConfigError> {
    let field = if config.beta.is_some() { "beta" } else { "beta_sequence[0]" };
    let spec = config.single_spec().ok_or_else(|| ConfigError::new("beta", "missing"))?;
    boundary_field(&spec, field, mesh, config.quad_order)
}

fn solution_products(mesh: &Mesh, values: &[f64], out: &mut Products) {
    let dim = mesh.dim();
    let coords = ["x", "y", "z"];
    let mut header = vec!["vertex_index"];
    header.extend_from_slice(&coords[..dim]);
    header.push("value");
    let mut table = Table::new(&header);
    for (i, (p, v)) in mesh.vertices().iter().zip(values).enumerate() {
        let mut row = vec![Cell::Int(i as u64)];
        row.extend(p[..dim].iter().map(|c| Cell::Float(*c)));
        row.push(Cell::Float(*v));
        table.push(row);
    }
    out.tables.push(("solution.csv", table));
    let (x_label, points) = if dim == 1 {
        ("x", mesh.vertices().iter().zip(values).map(|(p, v)| (p[0], *v)).collect())
    } else {
        ("vertex index", values.iter().enumerate().map(|(i, v)| (i as f64, *v)).collect())
    };
    out.plots.push((
        "solution.svg",
        Series { title: "Discrete solution".into(), x_label: x_label.into(), y_label: "u".into(), points },
    ));
}

fn solve_experiment(config: &RunConfig, mesh: &Mesh, f: &SourceField, settings: &SolveSettings) -> Result<Products, RunError> {
    let beta = single_beta(config, mesh)?;
    let problem = RobinProblem::new(mesh, config.lambda, beta.clone(), f.clone()).with_settings(*settings);
    let (u, report) = solve_robin(&problem)?;
    let mut out = Products::default();
    let max = u.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = u.values().iter().copied().fold(f64::INFINITY, f64::min);
    out.results.insert("iterations".into(), json!(report.iterations));
    out.results.insert("final_relative_residual".into(), json!(report.final_relative_residual));
    out.results.insert("sup_closure".into(), json!(sup_norm(&u, SupRegion::Closure)));
    out.results.insert("sup_boundary".into(), json!(sup_norm(&u, SupRegion::Boundary)));
    out.results.insert("min".into(), json!(min));
    out.results.insert("max".into(), json!(max));
    // Closed form available for constant data on the interval.
    if let (DomainName::Interval, BoundaryField::Constant(b), SourceField::Constant(fc)) = (config.domain, &beta, f) {
        let oracle = analytic_interval_solution(config.lambda, *b, *fc)?;
        let err = mesh
            .vertices()
            .iter()
            .zip(u.values())
            .map(|(p, v)| (oracle.eval(p[0]) - v).abs())
            .fold(0.0, f64::max);
        out.results.insert("oracle_max_error".into(), json!(err));
        out.summary.push(format!("max nodal error vs closed form = {err:.6e}"));
    }
    out.summary.push(format!("max u = {max:.16e} ({} CG iterations)", report.iterations));
    solution_products(mesh, u.values(), &mut out);
    Ok(out)
}

fn stability_experiment(config: &RunConfig, mesh: &Mesh, f: &SourceField, settings: &SolveSettings) -> Result<Products, RunError> {
    let specs = config.beta_sequence.as_ref().expect("validated").specs();
    let betas = coefficients(&specs, mesh, config.quad_order)?;
    let records = stability_sweep(mesh, config.lambda, f, &betas, settings)?;
    let mut out = Products::default();

    let mut table = Table::new(&["n", "m", "diff_sup", "un_bd_sup", "beta_diff", "ratio"]);
    for r in &records {
        table.push(vec![
            Cell::Int(r.n as u64),
            Cell::Int(r.m as u64),
            Cell::Float(r.diff_sup_closure),
            Cell::Float(r.un_sup_boundary),
            Cell::Float(r.beta_diff_sup),
            Cell::MaybeFloat(r.ratio),
        ]);
    }
    out.tables.push(("stability.csv", table));

    let c_hat = match estimate_constant(&records) {
        Ok(c) => Some(c),
        Err(robin_core::Error::NoInformativePairs) => None,
        Err(e) => return Err(e.into()),
    };
    // Second normalization: the source norm in place of the boundary sup of u_n.
    let f_norm = config
        .p
        .map(|p| lp_norm(f, mesh, p, Region::Domain, config.quad_order))
        .transpose()?;
    let c_hat_source = f_norm.filter(|fp| *fp > 0.0).and_then(|fp| {
        records
            .iter()
            .filter(|r| r.ratio.is_some())
            .map(|r| r.diff_sup_closure / (fp * r.beta_diff_sup))
            .reduce(f64::max)
    });
    let informative = records.iter().filter(|r| r.ratio.is_some()).count();
    let mut summary = Table::new(&["records", "informative", "c_hat", "p", "f_norm_p", "c_hat_source"]);
    summary.push(vec![
        Cell::Int(records.len() as u64),
        Cell::Int(informative as u64),
        Cell::MaybeFloat(c_hat),
        Cell::MaybeFloat(config.p),
        Cell::MaybeFloat(f_norm),
        Cell::MaybeFloat(c_hat_source),
    ]);
    out.tables.push(("stability_summary.csv", summary));

    out.results.insert("records".into(), json!(records.len()));
    out.results.insert("informative".into(), json!(informative));
    out.results.insert("c_hat".into(), json!(c_hat));
    out.results.insert("c_hat_source".into(), json!(c_hat_source));
    out.summary.push(match c_hat {
        Some(c) => format!("C_hat = {c:.16e}"),
        None => "C_hat undefined: no informative pairs".to_string(),
    });

    let points: Vec<(f64, f64)> = records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.ratio.map(|q| (i as f64, q)))
        .collect();
    if !points.is_empty() {
        out.plots.push((
            "stability_ratios.svg",
            Series { title: "Stability ratios".into(), x_label: "record".into(), y_label: "ratio".into(), points },
        ));
    }
    Ok(out)
}

fn convergence_experiment(config: &RunConfig, mesh: &Mesh, f: &SourceField, settings: &SolveSettings) -> Result<Products, RunError> {
    let specs = config.beta_sequence.as_ref().expect("validated").specs();
    let betas: Vec<(usize, BoundaryField)> = coefficients(&specs, mesh, config.quad_order)?.into_iter().enumerate().collect();
    let limit_field = if config.beta_limit.is_some() { "beta_limit" } else { "beta_sequence" };
    let limit = boundary_field(&config.limit_spec().expect("validated"), limit_field, mesh, config.quad_order)?;
    let records = convergence_study(mesh, config.lambda, f, &betas, &limit, settings)?;
    let mut out = Products::default();

    let mut table = Table::new(&["n", "sup_err", "un_bd_sup", "beta_diff", "ratio"]);
    for r in &records {
        let denom = r.un_sup_boundary * r.beta_diff_sup;
        table.push(vec![
            Cell::Int(r.n as u64),
            Cell::Float(r.sup_err_closure),
            Cell::Float(r.un_sup_boundary),
            Cell::Float(r.beta_diff_sup),
            Cell::MaybeFloat((denom > 0.0).then(|| r.sup_err_closure / denom)),
        ]);
    }
    out.tables.push(("convergence.csv", table));

    let first = records.first().map(|r| r.sup_err_closure).unwrap_or(0.0);
    let last = records.last().map(|r| r.sup_err_closure).unwrap_or(0.0);
    let reduction = (first > 0.0).then(|| last / first);
    out.results.insert("err_first".into(), json!(first));
    out.results.insert("err_last".into(), json!(last));
    out.results.insert("reduction".into(), json!(reduction));
    out.summary.push(format!("sup error {first:.6e} -> {last:.6e}"));
    out.plots.push((
        "convergence.svg",
        Series {
            title: "Distance to the limit solution".into(),
            x_label: "n".into(),
            y_label: "sup error".into(),
            points: records.iter().map(|r| (r.n as f64, r.sup_err_closure)).collect(),
        },
    ));
    Ok(out)
}

fn stampacchia_experiment(config: &RunConfig, mesh: &Mesh, f: &SourceField, settings: &SolveSettings) -> Result<Products, RunError> {
    let (a, b) = config.pair_specs().expect("validated");
    let (fa, fb) = if config.beta_sequence.as_ref().is_some_and(|s| s.len() >= 2) {
        ("beta_sequence[0]", "beta_sequence[1]")
    } else {
        ("beta", "beta_limit")
    };
    let beta_a = boundary_field(&a, fa, mesh, config.quad_order)?;
    let beta_b = boundary_field(&b, fb, mesh, config.quad_order)?;
    let (ua, _) = solve_robin(&RobinProblem::new(mesh, config.lambda, beta_a, f.clone()).with_settings(*settings))?;
    let (ub, _) = solve_robin(&RobinProblem::new(mesh, config.lambda, beta_b, f.clone()).with_settings(*settings))?;
    let diff = ua.difference(&ub)?;
    let report = level_set_pipeline(&diff, mesh.dim(), config.c2.unwrap_or(0.0))?;
    let mut out = Products::default();

    let mut phi = Table::new(&["k", "phi"]);
    for (k, v) in report.samples.ks().iter().zip(report.samples.values()) {
        phi.push(vec![Cell::Float(*k), Cell::Float(*v)]);
    }
    out.tables.push(("stampacchia_phi.csv", phi));

    let variant = match report.params.variant {
        GapVariant::Quadratic => "quadratic",
        GapVariant::Classical => "classical",
    };
    let boundary_sup = sup_norm(&diff, SupRegion::Boundary);
    let mut summary = Table::new(&[
        "alpha",
        "delta",
        "k0",
        "phi0",
        "c",
        "fitted_c",
        "variant",
        "predicted_gap",
        "vanish_point",
        "boundary_sup",
        "hypothesis_ok",
        "conclusion_ok",
    ]);
    summary.push(vec![
        Cell::Float(report.params.alpha),
        Cell::Float(report.params.delta),
        Cell::Float(report.params.k0),
        Cell::Float(report.params.phi0),
        Cell::Float(report.params.c),
        Cell::Float(report.fitted_c),
        Cell::Text(variant.into()),
        Cell::Float(report.decay.predicted_gap),
        Cell::MaybeFloat(report.decay.vanish_point),
        Cell::Float(boundary_sup),
        Cell::Bool(report.decay.hypothesis_ok),
        Cell::Bool(report.decay.conclusion_ok),
    ]);
    out.tables.push(("stampacchia_summary.csv", summary));

    out.results.insert("hypothesis_ok".into(), json!(report.decay.hypothesis_ok));
    out.results.insert("conclusion_ok".into(), json!(report.decay.conclusion_ok));
    out.results.insert("predicted_gap".into(), json!(report.decay.predicted_gap));
    out.results.insert("vanish_point".into(), json!(report.decay.vanish_point));
    out.summary.push(format!(
        "hypothesis_ok = {}, conclusion_ok = {}, gap = {:.6e}",
        report.decay.hypothesis_ok, report.decay.conclusion_ok, report.decay.predicted_gap
    ));
    out.plots.push((
        "stampacchia_phi.svg",
        Series {
            title: "Boundary level-set measure".into(),
            x_label: "k".into(),
            y_label: "phi(k)".into(),
            points: report.samples.ks().iter().copied().zip(report.samples.values().iter().copied()).collect(),
        },
    ));
    Ok(out)
}

fn theorem0_experiment(config: &RunConfig, mesh: &Mesh, f: &SourceField, settings: &SolveSettings) -> Result<Products, RunError> {
    let p = config.p.expect("validated");
    let beta = single_beta(config, mesh)?;
    let (u, _) = solve_robin(&RobinProblem::new(mesh, config.lambda, beta, f.clone()).with_settings(*settings))?;
    let ratio = theorem0_ratio(&u, f, p, config.quad_order)?;
    let f_norm = lp_norm(f, mesh, p, Region::Domain, config.quad_order)?;
    let u_sup = sup_norm(&u, SupRegion::Closure);
    let mut out = Products::default();
    let mut table = Table::new(&["n", "p", "u_sup", "f_norm_p", "ratio"]);
    table.push(vec![
        Cell::Int(mesh.n() as u64),
        Cell::Float(p),
        Cell::Float(u_sup),
        Cell::Float(f_norm),
        Cell::Float(ratio),
    ]);
    out.tables.push(("theorem0.csv", table));
    out.results.insert("ratio".into(), json!(ratio));
    out.summary.push(format!("sup u / |f|_p = {ratio:.16e}"));
    solution_products(mesh, u.values(), &mut out);
    Ok(out)
}
