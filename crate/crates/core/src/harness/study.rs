//! Mesh studies: bounds per `(h, xi)` row, reference values and rate fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{CaseConfig, ModelChoice, QoiChoice};
use crate::bounds::{sensitivity_bounds, BoundsReport};
use crate::equilibration::{build_admissible_pair, EQUILIBRIUM_TOL};
use crate::error::{Error, Result};
use crate::forms::{
    assemble_qoi, frame_rotation_at_b, frame_sway_at_c, membrane_average, AssembledProblem, ParamProblem, QoI,
    QoiTarget,
};
use crate::mesh::PortalFrame;
use crate::sensitivity::{evaluate_qoi, solve_adjoint_pair, solve_primal_pair};

/// Number of finest meshes used by the rate fits.
pub const RATE_POINTS: usize = 3;

/// One `(h, xi)` evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub h: f64,
    pub xi: f64,
    pub j_h: f64,
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    /// `|J - J_h| / |J|`.
    pub re_jh: f64,
    /// `(upper - lower) / |J|`.
    pub re_gap: f64,
    pub solver_res: f64,
    pub equil_res: f64,
}

impl StudyRow {
    pub fn brackets(&self, j_ref: f64) -> bool {
        self.lower <= j_ref && j_ref <= self.upper
    }

    pub fn equilibrium_ok(&self) -> bool {
        self.equil_res <= EQUILIBRIUM_TOL
    }
}

/// Outcome of one `(mesh, xi)` point; failures are kept rather than
/// aborting the study.
#[derive(Debug, Clone, PartialEq)]
pub struct RowOutcome {
    pub divisions: usize,
    pub xi: f64,
    pub result: std::result::Result<StudyRow, Error>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub xi: f64,
    /// Slope of `log gap` against `log h`.
    pub gap: Option<f64>,
    /// Slope of `log RE(J_h)` against `log h`.
    pub re_jh: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub config: CaseConfig,
    /// Reference value `J(u'_h)` on the reference mesh, per `xi`.
    pub j_ref: Vec<(f64, f64)>,
    /// Sorted by `h` descending, then `xi` ascending.
    pub outcomes: Vec<RowOutcome>,
    pub rates: Vec<RateFit>,
}

impl StudyResult {
    pub fn rows(&self) -> Vec<StudyRow> {
        self.outcomes.iter().filter_map(|o| o.result.as_ref().ok().cloned()).collect()
    }

    pub fn reference(&self, xi: f64) -> Option<f64> {
        self.j_ref.iter().find(|(x, _)| *x == xi).map(|(_, j)| *j)
    }

    /// Rows that failed, did not bracket the reference or failed the
    /// equilibrium guard.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for o in &self.outcomes {
            match &o.result {
                Err(e) => v.push(format!("m={} xi={}: {e}", o.divisions, o.xi)),
                Ok(r) => {
                    let j = self.reference(r.xi).unwrap_or(f64::NAN);
                    if !r.brackets(j) {
                        v.push(format!(
                            "m={} xi={}: J_ref={j:e} outside [{:e}, {:e}]",
                            o.divisions, o.xi, r.lower, r.upper
                        ));
                    }
                    if !r.equilibrium_ok() {
                        v.push(format!("m={} xi={}: equilibrium defect {:e}", o.divisions, o.xi, r.equil_res));
                    }
                }
            }
        }
        v
    }

    pub fn all_strict(&self) -> bool {
        self.violations().is_empty()
    }

    pub fn rate(&self, xi: f64) -> Option<RateFit> {
        self.rates.iter().copied().find(|r| r.xi == xi)
    }
}

/// Least-squares slope of `log y` against `log h`.
pub fn fit_rate(h: &[f64], y: &[f64]) -> Result<f64> {
    if h.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            got: y.len(),
        });
    }
    if h.len() < 3 {
        return Err(Error::InvalidInput("a rate fit needs at least three points".into()));
    }
    if h.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("rate fits need positive finite values".into()));
    }
    let n = h.len() as f64;
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let z: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let mz = z.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxz: f64 = x.iter().zip(&z).map(|(a, b)| (a - mx) * (b - mz)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("rate fits need distinct mesh sizes".into()));
    }
    Ok(sxz / sxx)
}

/// Problem of a case at `divisions` and `xi`, with parameter values
/// `betas` (the case values unless overridden).
pub fn case_problem(config: &CaseConfig, divisions: usize, xi: f64, betas: Option<[f64; 2]>) -> Result<ParamProblem> {
    let (model, parameter, _, default_betas) = config.resolved();
    let betas = betas.unwrap_or(default_betas);
    match model {
        ModelChoice::Frame => ParamProblem::portal_frame(&PortalFrame::default(), divisions, parameter, betas, xi),
        ModelChoice::Membrane => ParamProblem::membrane(divisions, parameter, betas, xi),
    }
}

pub fn case_qoi(config: &CaseConfig, problem: &ParamProblem) -> Result<QoI> {
    let target: QoiTarget = match config.resolved().2 {
        QoiChoice::Sway => frame_sway_at_c(&PortalFrame::default()),
        QoiChoice::Rotation => frame_rotation_at_b(&PortalFrame::default()),
        QoiChoice::Average => membrane_average(),
    };
    assemble_qoi(problem, target)
}

/// `J(u'_h)` of an assembled problem.
pub fn sensitivity_value(asm: &AssembledProblem, qoi: &QoI) -> Result<f64> {
    evaluate_qoi(&solve_primal_pair(asm)?, qoi)
}

/// Full pipeline at one mesh: solve, recover, bound.
pub fn bound_at(config: &CaseConfig, divisions: usize, xi: f64) -> Result<BoundsReport> {
    let problem = case_problem(config, divisions, xi, None)?;
    let asm = problem.assemble(config.rel_tol)?;
    let qoi = case_qoi(config, &problem)?;
    let primal = solve_primal_pair(&asm)?;
    let adjoint = solve_adjoint_pair(&asm, &qoi)?;
    let j_h = evaluate_qoi(&primal, &qoi)?;
    let pp = build_admissible_pair(&asm, &primal, None)?;
    let pd = build_admissible_pair(&asm, &adjoint, Some(&qoi))?;
    let mut report = sensitivity_bounds(&pp, &pd, j_h, &problem)?;
    report.meta.case = config.case.name().to_string();
    report.meta.solver_res = primal.max_backward_error().max(adjoint.max_backward_error());
    Ok(report)
}

fn reference_value(config: &CaseConfig, xi: f64) -> Result<f64> {
    let problem = case_problem(config, config.reference, xi, None)?;
    let asm = problem.assemble(config.rel_tol)?;
    sensitivity_value(&asm, &case_qoi(config, &problem)?)
}

fn row(report: &BoundsReport, j_ref: f64) -> StudyRow {
    StudyRow {
        h: report.meta.h,
        xi: report.meta.xi,
        j_h: report.quantity_value,
        lower: report.lower,
        upper: report.upper,
        gap: report.gap(),
        re_jh: (j_ref - report.quantity_value).abs() / j_ref.abs(),
        re_gap: (report.upper - report.lower) / j_ref.abs(),
        solver_res: report.meta.solver_res,
        equil_res: report.meta.equil_res,
    }
}

fn fit_rates(xi: f64, outcomes: &[RowOutcome]) -> RateFit {
    let rows: Vec<&StudyRow> = outcomes
        .iter()
        .filter(|o| o.xi == xi)
        .filter_map(|o| o.result.as_ref().ok())
        .filter(|r| r.equilibrium_ok())
        .collect();
    let finest = &rows[rows.len().saturating_sub(RATE_POINTS)..];
    let h: Vec<f64> = finest.iter().map(|r| r.h).collect();
    let gap: Vec<f64> = finest.iter().map(|r| r.gap).collect();
    let re: Vec<f64> = finest.iter().map(|r| r.re_jh).collect();
    RateFit {
        xi,
        gap: fit_rate(&h, &gap).ok(),
        re_jh: fit_rate(&h, &re).ok(),
    }
}

/// Runs the study of `config`. Per-row failures are recorded; only an
/// invalid configuration or a failed reference solve aborts.
pub fn run_case(config: &CaseConfig) -> Result<StudyResult> {
    config.validate()?;
    let j_ref = config
        .xi
        .par_iter()
        .map(|&xi| reference_value(config, xi).map(|j| (xi, j)))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(usize, f64)> = config
        .meshes
        .iter()
        .flat_map(|&m| config.xi.iter().map(move |&xi| (m, xi)))
        .collect();
    let mut outcomes: Vec<RowOutcome> = points
        .par_iter()
        .map(|&(m, xi)| {
            let j = j_ref.iter().find(|(x, _)| *x == xi).map(|(_, j)| *j).unwrap_or(f64::NAN);
            RowOutcome {
                divisions: m,
                xi,
                result: bound_at(config, m, xi).map(|r| row(&r, j)),
            }
        })
        .collect();
    outcomes.sort_by(|a, b| a.divisions.cmp(&b.divisions).then(a.xi.total_cmp(&b.xi)));
    let rates = config.xi.iter().map(|&xi| fit_rates(xi, &outcomes)).collect();
    Ok(StudyResult {
        config: config.clone(),
        j_ref,
        outcomes,
        rates,
    })
}
