//! End-to-end experiments: Robin solves, the sup-norm stability sweep over a
//! family of coefficients, convergence towards a limit coefficient, the
//! `‖u‖_∞ / ‖f‖_p` monitor and the level-set pipeline.

use rayon::prelude::*;

use crate::analysis::{level_set_measure, lp_norm, sup_norm, DiscreteSolution, Region, SupRegion, LEVEL_SET_QUAD_ORDER};
use crate::assembly::{assemble_load, RobinOperator};
use crate::error::{invalid, Error, Result};
use crate::fields::{boundary_sup, boundary_sup_diff, BoundaryField, SourceField};
use crate::linalg::{solve_spd, SolveReport, SolverOptions};
use crate::mesh::Mesh;
use crate::stampacchia::{fit_minimal_c, theorem_constants, verify_decay, DecayReport, PhiSamples, StampacchiaParams};

/// Discretisation and solver settings shared by every solve of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSettings {
    pub quad_order: usize,
    pub lumped: bool,
    pub solver: SolverOptions,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings { quad_order: 2, lumped: false, solver: SolverOptions::default() }
    }
}

/// `−Δu + λu = f` in Ω, `∂u/∂ν + βu = 0` on ∂Ω.
#[derive(Debug, Clone)]
pub struct RobinProblem<'m> {
    pub mesh: &'m Mesh,
    pub lambda: f64,
    pub beta: BoundaryField,
    pub f: SourceField,
    pub settings: SolveSettings,
}

impl<'m> RobinProblem<'m> {
    pub fn new(mesh: &'m Mesh, lambda: f64, beta: BoundaryField, f: SourceField) -> Self {
        RobinProblem { mesh, lambda, beta, f, settings: SolveSettings::default() }
    }

    pub fn with_settings(mut self, settings: SolveSettings) -> Self {
        self.settings = settings;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(invalid(format!("lambda must be positive and finite, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Galerkin solution `(K + λM + B) U = F`.
pub fn solve_robin<'m>(problem: &RobinProblem<'m>) -> Result<(DiscreteSolution<'m>, SolveReport)> {
    problem.validate()?;
    let s = &problem.settings;
    let op = RobinOperator::assemble(problem.mesh, problem.lambda, &problem.beta, s.lumped, s.quad_order)?;
    let a = op.system();
    let load = assemble_load(problem.mesh, &problem.f, s.quad_order)?;
    let (x, report) = solve_spd(&a, &load, &s.solver)?;
    Ok((DiscreteSolution::new(problem.mesh, x)?, report))
}

/// Closed-form solution on (0,1) for constant f and the same β at both ends:
/// `u(x) = f/λ + A cosh(√λ (x − 1/2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalOracle {
    pub lambda: f64,
    pub beta: f64,
    pub f: f64,
    amplitude: f64,
}

impl IntervalOracle {
    pub fn eval(&self, x: f64) -> f64 {
        self.f / self.lambda + self.amplitude * (self.lambda.sqrt() * (x - 0.5)).cosh()
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }
}

pub fn analytic_interval_solution(lambda: f64, beta: f64, f_const: f64) -> Result<IntervalOracle> {
    if !(lambda > 0.0) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    if !(beta >= 0.0) {
        return Err(invalid(format!("beta must be nonnegative, got {beta}")));
    }
    let r = lambda.sqrt();
    let amplitude = -(beta * f_const / lambda) / (r * (r / 2.0).sinh() + beta * (r / 2.0).cosh());
    Ok(IntervalOracle { lambda, beta, f: f_const, amplitude })
}

/// One ordered pair of the stability experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityRecord {
    pub n: usize,
    pub m: usize,
    /// ‖u_n − u_m‖_{∞,Ω̄}
    pub diff_sup_closure: f64,
    /// ‖u_n‖_{∞,∂Ω}
    pub un_sup_boundary: f64,
    /// ‖β_n − β_m‖_{∞,∂Ω}
    pub beta_diff_sup: f64,
    pub ratio: Option<f64>,
}

/// Solves one problem per coefficient, in parallel, keeping input order.
fn solve_family<'m>(
    mesh: &'m Mesh,
    lambda: f64,
    f: &SourceField,
    betas: &[BoundaryField],
    settings: &SolveSettings,
) -> Result<Vec<DiscreteSolution<'m>>> {
    betas
        .par_iter()
        .enumerate()
        .map(|(i, beta)| {
            let problem = RobinProblem::new(mesh, lambda, beta.clone(), f.clone()).with_settings(*settings);
            solve_robin(&problem)
                .map(|(u, _)| u)
                .map_err(|e| Error::SolveFailed { index: i, source: Box::new(e) })
        })
        .collect()
}

/// Ratio `diff / (un_bd · beta_diff)`, undefined when the coefficients agree
/// to rounding or the boundary trace vanishes.
fn stability_ratio(diff: f64, un_bd: f64, beta_diff: f64, beta_n_sup: f64) -> Option<f64> {
    let threshold = 1e-14 * (1.0 + beta_n_sup);
    let denom = un_bd * beta_diff;
    (beta_diff > threshold && denom > 0.0).then(|| diff / denom)
}

/// Every ordered pair `(n, m)`, `n ≠ m`, sorted by `(n, m)`.
pub fn stability_sweep(
    mesh: &Mesh,
    lambda: f64,
    f: &SourceField,
    betas: &[BoundaryField],
    settings: &SolveSettings,
) -> Result<Vec<StabilityRecord>> {
    if betas.len() < 2 {
        return Err(invalid("the stability sweep needs at least two coefficients"));
    }
    let q = settings.quad_order;
    let solutions = solve_family(mesh, lambda, f, betas, settings)?;
    let boundary_sups: Vec<f64> = solutions.iter().map(|u| sup_norm(u, SupRegion::Boundary)).collect();
    let beta_sups = betas.iter().map(|b| boundary_sup(b, mesh, q)).collect::<Result<Vec<_>>>()?;
    let mut records = Vec::with_capacity(betas.len() * (betas.len() - 1));
    for n in 0..betas.len() {
        for m in 0..betas.len() {
            if n == m {
                continue;
            }
            let diff = sup_norm(&solutions[n].difference(&solutions[m])?, SupRegion::Closure);
            let beta_diff = boundary_sup_diff(&betas[n], &betas[m], mesh, q)?;
            records.push(StabilityRecord {
                n,
                m,
                diff_sup_closure: diff,
                un_sup_boundary: boundary_sups[n],
                beta_diff_sup: beta_diff,
                ratio: stability_ratio(diff, boundary_sups[n], beta_diff, beta_sups[n]),
            });
        }
    }
    Ok(records)
}

/// Smallest constant consistent with the records: the largest defined ratio.
pub fn estimate_constant(records: &[StabilityRecord]) -> Result<f64> {
    records
        .iter()
        .filter_map(|r| r.ratio)
        .reduce(f64::max)
        .ok_or(Error::NoInformativePairs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRecord {
    pub n: usize,
    /// ‖u_n − u‖_{∞,Ω̄} against the limit solution on the same mesh.
    pub sup_err_closure: f64,
    /// ‖u_n‖_{∞,∂Ω}
    pub un_sup_boundary: f64,
    /// ‖β_n − β‖_{∞,∂Ω}
    pub beta_diff_sup: f64,
}

/// Distance of each `u_n` from the solution for `beta_limit`; the `n` of each
/// record is taken from `betas`.
pub fn convergence_study(
    mesh: &Mesh,
    lambda: f64,
    f: &SourceField,
    betas: &[(usize, BoundaryField)],
    beta_limit: &BoundaryField,
    settings: &SolveSettings,
) -> Result<Vec<ConvergenceRecord>> {
    let mut all: Vec<BoundaryField> = betas.iter().map(|(_, b)| b.clone()).collect();
    all.push(beta_limit.clone());
    let solutions = solve_family(mesh, lambda, f, &all, settings)?;
    let limit = solutions.last().expect("limit solution present");
    betas
        .iter()
        .zip(&solutions)
        .map(|((n, beta), u)| {
            Ok(ConvergenceRecord {
                n: *n,
                sup_err_closure: sup_norm(&u.difference(limit)?, SupRegion::Closure),
                un_sup_boundary: sup_norm(u, SupRegion::Boundary),
                beta_diff_sup: boundary_sup_diff(beta, beta_limit, mesh, settings.quad_order)?,
            })
        })
        .collect()
}

/// `‖u‖_{∞,Ω̄} / ‖f‖_p`: an empirical lower bound for the constant in the
/// L∞ estimate of the solution operator.
pub fn theorem0_ratio(u: &DiscreteSolution<'_>, f: &SourceField, p: f64, quad_order: usize) -> Result<f64> {
    let fp = lp_norm(f, u.mesh(), p, Region::Domain, quad_order)?;
    if fp == 0.0 {
        return Err(invalid("the source has zero L^p norm"));
    }
    Ok(sup_norm(u, SupRegion::Closure) / fp)
}

pub const PIPELINE_GRID_POINTS: usize = 64;

/// Output of [`level_set_pipeline`].
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub samples: PhiSamples,
    pub params: StampacchiaParams,
    pub fitted_c: f64,
    pub decay: DecayReport,
}

/// Samples φ(k) = σ(∂Ω ∩ {|u_diff| > k}) on a 64-point grid over
/// `[0, 1.5·‖u_diff‖_{∞,∂Ω}]`, fits the decay constant and checks the lemma
/// with the exponents of dimension `d`. The lemma constant is the larger of
/// `c2` and the fitted one.
pub fn level_set_pipeline(u_diff: &DiscreteSolution<'_>, d: usize, c2: f64) -> Result<PipelineReport> {
    let mut params = theorem_constants(d, c2)?;
    let top = sup_norm(u_diff, SupRegion::Boundary);
    let ks: Vec<f64> = if top > 0.0 {
        let hi = 1.5 * top;
        (0..PIPELINE_GRID_POINTS)
            .map(|i| hi * i as f64 / (PIPELINE_GRID_POINTS - 1) as f64)
            .collect()
    } else {
        // Zero boundary trace: φ ≡ 0, any increasing grid will do.
        (0..PIPELINE_GRID_POINTS).map(|i| i as f64).collect()
    };
    let values = ks
        .iter()
        .map(|&k| level_set_measure(u_diff, k, Region::Boundary, LEVEL_SET_QUAD_ORDER))
        .collect::<Result<Vec<_>>>()?;
    let samples = PhiSamples::new(ks, values)?;
    let fitted_c = fit_minimal_c(&samples, params.alpha, params.delta)?;
    params.c = c2.max(fitted_c);
    params.phi0 = samples.values()[0];
    let decay = verify_decay(&samples, &params)?;
    Ok(PipelineReport { samples, params, fitted_c, decay })
}
