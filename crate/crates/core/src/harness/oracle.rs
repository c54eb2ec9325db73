//! Independent checks of `J(u'_h)`: central finite differences of the FE
//! QoI in the parameter, and dense linear algebra on small meshes.

use nalgebra::{DMatrix, DVector};

use super::config::{CaseConfig, ModelChoice};
use super::study::{case_problem, case_qoi, sensitivity_value};
use crate::error::{Error, Result};
use crate::forms::{
    assemble_qoi, membrane_average, MembraneLoad, ModelKind, Parameter, ParamProblem, MEMBRANE_MEAN,
    MEMBRANE_QOI_BOX,
};
use crate::linalg::SymSparse;

/// Steps of the frame and membrane `beta_1` difference quotients.
pub const SMOOTH_DELTAS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// Largest relative change between the last two extrapolation levels
/// accepted as noise-free.
pub const FD_NOISE_TOL: f64 = 5e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct FdOracle {
    /// `(delta, (Q(beta + delta) - Q(beta - delta)) / (2 delta))`.
    pub quotients: Vec<(f64, f64)>,
    /// Richardson extrapolation of the quotients.
    pub extrapolated: f64,
    /// `J(u'_h)` on the same mesh.
    pub j_h: f64,
    pub rel_diff: f64,
    /// Relative change of the last extrapolation step.
    pub noise: f64,
    pub noisy: bool,
}

/// Steps for a case on `divisions`: the membrane load box moves in whole
/// cells, so its half-width steps are `4h, 2h, h`.
pub fn default_deltas(config: &CaseConfig, divisions: usize) -> Vec<f64> {
    let (model, parameter, _, _) = config.resolved();
    if model == ModelChoice::Membrane && parameter == Parameter::Beta2 {
        let h = 1.0 / divisions as f64;
        vec![4.0 * h, 2.0 * h, h]
    } else {
        SMOOTH_DELTAS.to_vec()
    }
}

fn qoi_at(config: &CaseConfig, divisions: usize, betas: [f64; 2]) -> Result<f64> {
    let problem = case_problem(config, divisions, 1.0, Some(betas))?;
    let asm = problem.assemble(config.rel_tol)?;
    let qoi = case_qoi(config, &problem)?;
    let (u, _) = asm.factor.solve(&asm.f)?;
    Ok(qoi.value(&u))
}

/// Repeated Richardson extrapolation for step ratio 2 and even error
/// expansions.
fn richardson(values: &[f64]) -> Vec<Vec<f64>> {
    let mut table = vec![values.to_vec()];
    let mut factor = 4.0;
    while table.last().map_or(0, Vec::len) > 1 {
        let prev = table.last().unwrap();
        let next: Vec<f64> = prev.windows(2).map(|w| (factor * w[1] - w[0]) / (factor - 1.0)).collect();
        table.push(next);
        factor *= 4.0;
    }
    table
}

/// Central differences of the FE QoI in the case parameter on the
/// reference mesh, extrapolated over `deltas` (halving steps).
pub fn fd_oracle(config: &CaseConfig, deltas: &[f64]) -> Result<FdOracle> {
    if deltas.len() < 2 {
        return Err(Error::InvalidInput("the oracle needs at least two steps".into()));
    }
    if deltas.windows(2).any(|w| (w[0] - 2.0 * w[1]).abs() > 1e-12 * w[0]) {
        return Err(Error::InvalidInput("oracle steps must halve".into()));
    }
    let (_, parameter, _, betas) = config.resolved();
    let n = config.reference;
    let mut quotients = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let mut plus = betas;
        let mut minus = betas;
        plus[parameter.index()] += d;
        minus[parameter.index()] -= d;
        let dq = (qoi_at(config, n, plus)? - qoi_at(config, n, minus)?) / (2.0 * d);
        quotients.push((d, dq));
    }
    let table = richardson(&quotients.iter().map(|q| q.1).collect::<Vec<_>>());
    let extrapolated = table.last().unwrap()[0];
    let before = &table[table.len() - 2];
    let noise = (extrapolated - before[before.len() - 1]).abs() / extrapolated.abs();
    let problem = case_problem(config, n, 1.0, None)?;
    let asm = problem.assemble(config.rel_tol)?;
    let j_h = sensitivity_value(&asm, &case_qoi(config, &problem)?)?;
    Ok(FdOracle {
        quotients,
        extrapolated,
        j_h,
        rel_diff: (extrapolated - j_h).abs() / j_h.abs(),
        noise,
        noisy: noise > FD_NOISE_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseCheck {
    pub j_sparse: f64,
    pub j_dense: f64,
    pub rel_diff: f64,
    /// Largest relative difference of the two primal solution vectors.
    pub field_diff: f64,
}

fn dense(a: &SymSparse) -> DMatrix<f64> {
    let n = a.dim();
    DMatrix::from_fn(n, n, |i, j| a.get(i, j))
}

/// `J(u'_h)` by dense Cholesky solves against the sparse pipeline.
pub fn dense_oracle(config: &CaseConfig, divisions: usize, xi: f64) -> Result<DenseCheck> {
    let problem = case_problem(config, divisions, xi, None)?;
    let asm = problem.assemble(config.rel_tol)?;
    let qoi = case_qoi(config, &problem)?;
    let chol = dense(&asm.k)
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { pivot: 0, value: f64::NAN })?;
    let u = chol.solve(&DVector::from_column_slice(&asm.f));
    let rhs = (DVector::from_column_slice(&asm.f_prime) - dense(&asm.k_prime) * &u) * xi;
    let big_u = chol.solve(&rhs);
    let j_dense = DVector::from_column_slice(&qoi.g).dot(&big_u) / xi;
    let primal = crate::sensitivity::solve_primal_pair(&asm)?;
    let j_sparse = crate::sensitivity::evaluate_qoi(&primal, &qoi)?;
    let scale = u.amax().max(f64::MIN_POSITIVE);
    let field_diff = primal
        .first
        .iter()
        .zip(u.iter())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs() / scale));
    Ok(DenseCheck {
        j_sparse,
        j_dense,
        rel_diff: (j_sparse - j_dense).abs() / j_dense.abs(),
        field_diff,
    })
}

/// Membrane `J_2` with the load derivative on the boundary of the loaded
/// box (the adopted reading) and on the boundary of the QoI box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineLoadVariants {
    pub load_boundary: f64,
    pub qoi_boundary: f64,
}

pub fn membrane_line_load_variants(n: usize, rel_tol: f64) -> Result<LineLoadVariants> {
    let problem = ParamProblem::membrane(n, Parameter::Beta2, MEMBRANE_MEAN, 1.0)?;
    let qoi = assemble_qoi(&problem, membrane_average())?;
    let load_boundary = sensitivity_value(&problem.assemble(rel_tol)?, &qoi)?;
    let mut alt = problem.clone();
    if let ModelKind::Membrane(m) = &mut alt.model {
        let mut lp = MembraneLoad::zeros(&m.mesh);
        for e in m.mesh.box_boundary_edges(MEMBRANE_QOI_BOX.0, MEMBRANE_QOI_BOX.1)? {
            lp.edge[e] = 1.0;
        }
        m.load_prime = lp;
    }
    let qoi_boundary = sensitivity_value(&alt.assemble(rel_tol)?, &qoi)?;
    Ok(LineLoadVariants {
        load_boundary,
        qoi_boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::CaseId;

    #[test]
    fn richardson_removes_even_terms() {
        let f = |d: f64| 2.0 + 3.0 * d * d + 5.0 * d.powi(4);
        let t = richardson(&[f(0.1), f(0.05), f(0.025)]);
        assert!((t[2][0] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn frame_beta2_quotient_is_exact() {
        // the frame load is quadratic in beta_2, so central differences are exact
        let mut c = CaseConfig::preset(CaseId::FrameJ2);
        c.reference = 4;
        let o = fd_oracle(&c, &SMOOTH_DELTAS).unwrap();
        for (_, q) in &o.quotients {
            assert!((q - o.j_h).abs() <= 1e-10 * o.j_h.abs());
        }
    }

    #[test]
    fn steps_must_halve() {
        let c = CaseConfig::preset(CaseId::FrameJ1);
        assert!(fd_oracle(&c, &[1e-2, 3e-3]).is_err());
        assert!(fd_oracle(&c, &[1e-2]).is_err());
    }

    #[test]
    fn dense_matches_sparse_on_small_meshes() {
        for case in CaseId::STUDIES {
            let c = CaseConfig::preset(case);
            let m = if matches!(case, CaseId::FrameJ1 | CaseId::FrameJ2) { 4 } else { 8 };
            let d = dense_oracle(&c, m, 1.0).unwrap();
            assert!(d.rel_diff < 1e-10 && d.field_diff < 1e-10, "{case}: {d:?}");
        }
    }
}
