//! Block primal and adjoint pairs by staggered SPD solves.
//!
//! Primal: `K u = f`, `K U = xi f' - xi K' u` with `U = xi u'`.
//! Adjoint: `K W = g / xi`, `K w = -xi K' W`.
//! Both reuse the single factorization of `K` held by [`AssembledProblem`].

use crate::error::{Error, Result};
use crate::forms::{AssembledProblem, ModelKind, ParamProblem, QoI};
use crate::linalg::{dot, SolveInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Primal,
    Adjoint,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Primal => "primal",
            Role::Adjoint => "adjoint",
        }
    }
}

/// `{u_h, U_h}` (primal) or `{w_h, W_h}` (adjoint).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub xi: f64,
    pub role: Role,
    /// Solver diagnostics of the two staggered solves, in solve order.
    pub solves: [SolveInfo; 2],
}

impl FieldPair {
    pub fn max_rel_residual(&self) -> f64 {
        self.solves[0].rel_residual.max(self.solves[1].rel_residual)
    }

    pub fn max_backward_error(&self) -> f64 {
        self.solves[0].backward_error.max(self.solves[1].backward_error)
    }

    /// `u'_h = U_h / xi` (primal only).
    pub fn derivative(&self) -> Result<Vec<f64>> {
        self.expect(Role::Primal)?;
        Ok(self.second.iter().map(|v| v / self.xi).collect())
    }

    fn expect(&self, role: Role) -> Result<()> {
        if self.role != role {
            return Err(Error::RoleMismatch {
                expected: role.name(),
                got: self.role.name(),
            });
        }
        Ok(())
    }
}

/// Admissible range of the coupling weight. The block form is measured in
/// its own energy, so `alpha = 1` and `psi` is the largest pointwise ratio
/// `|c'| / c` over the stiffness coefficients; `xi_max = 2 alpha / psi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiValidation {
    pub alpha: f64,
    pub psi: f64,
    pub xi_max: f64,
}

const RATIO_SAMPLES: usize = 64;

pub fn validate_xi(problem: &ParamProblem) -> XiValidation {
    let psi = match &problem.model {
        ModelKind::Beam(b) => {
            let mut psi = 0.0_f64;
            for e in &b.mesh.elements {
                let (ei, eip) = (&b.ei[e.member], &b.ei_prime[e.member]);
                if eip.is_zero() {
                    continue;
                }
                for k in 0..=RATIO_SAMPLES {
                    let s = e.s_a + e.length() * k as f64 / RATIO_SAMPLES as f64;
                    psi = psi.max(eip.eval(s).abs() / ei.eval(s));
                }
            }
            psi
        }
        ModelKind::Membrane(m) => {
            let ra = if m.a_prime == 0.0 { 0.0 } else { m.a_prime.abs() / m.a };
            let rk = if m.k_prime == 0.0 { 0.0 } else { m.k_prime.abs() / m.k };
            ra.max(rk)
        }
    };
    XiValidation {
        alpha: 1.0,
        psi,
        xi_max: if psi > 0.0 { 2.0 / psi } else { f64::INFINITY },
    }
}

/// `K u = f`, then `K U = xi (f' - K' u)`.
pub fn solve_primal_pair(asm: &AssembledProblem) -> Result<FieldPair> {
    let xi = asm.problem.xi;
    let (u, i0) = asm.factor.solve(&asm.f)?;
    let ku = asm.k_prime.matvec(&u)?;
    let rhs: Vec<f64> = asm
        .f_prime
        .iter()
        .zip(&ku)
        .map(|(fp, k)| xi * (fp - k))
        .collect();
    let (big_u, i1) = asm.factor.solve(&rhs)?;
    Ok(FieldPair {
        first: u,
        second: big_u,
        xi,
        role: Role::Primal,
        solves: [i0, i1],
    })
}

/// `K W = g / xi`, then `K w = -xi K' W`.
pub fn solve_adjoint_pair(asm: &AssembledProblem, qoi: &QoI) -> Result<FieldPair> {
    let xi = asm.problem.xi;
    if qoi.g.len() != asm.k.dim() {
        return Err(Error::DimensionMismatch {
            expected: asm.k.dim(),
            got: qoi.g.len(),
        });
    }
    let rhs: Vec<f64> = qoi.g.iter().map(|g| g / xi).collect();
    let (big_w, i0) = asm.factor.solve(&rhs)?;
    let kw = asm.k_prime.matvec(&big_w)?;
    let rhs: Vec<f64> = kw.iter().map(|v| -xi * v).collect();
    let (w, i1) = asm.factor.solve(&rhs)?;
    Ok(FieldPair {
        first: w,
        second: big_w,
        xi,
        role: Role::Adjoint,
        solves: [i0, i1],
    })
}

/// `J(u'_h) = g^T U / xi` by direct differentiation.
pub fn evaluate_qoi(pair: &FieldPair, qoi: &QoI) -> Result<f64> {
    pair.expect(Role::Primal)?;
    if qoi.g.len() != pair.second.len() {
        return Err(Error::DimensionMismatch {
            expected: pair.second.len(),
            got: qoi.g.len(),
        });
    }
    Ok(dot(&qoi.g, &pair.second) / pair.xi)
}

/// Adjoint-state value `lambda^T (f' - K' u)` with `lambda = xi W`.
pub fn adjoint_state_value(
    asm: &AssembledProblem,
    primal: &FieldPair,
    adjoint: &FieldPair,
) -> Result<f64> {
    primal.expect(Role::Primal)?;
    adjoint.expect(Role::Adjoint)?;
    let ku = asm.k_prime.matvec(&primal.first)?;
    Ok(adjoint
        .second
        .iter()
        .zip(asm.f_prime.iter().zip(&ku))
        .map(|(w, (fp, k))| adjoint.xi * w * (fp - k))
        .sum())
}

/// Residual functionals of the block forms against every FE basis pair,
/// relative to the size of the terms. Zero up to round-off for solved pairs.
pub fn block_residual(asm: &AssembledProblem, pair: &FieldPair, qoi: Option<&QoI>) -> Result<f64> {
    let xi = pair.xi;
    let k1 = asm.k.matvec(&pair.first)?;
    let k2 = asm.k.matvec(&pair.second)?;
    let (r1, r2, scale): (Vec<f64>, Vec<f64>, f64) = match pair.role {
        Role::Primal => {
            let kp = asm.k_prime.matvec(&pair.first)?;
            let r1: Vec<f64> = k1.iter().zip(&asm.f).map(|(a, b)| a - b).collect();
            let r2: Vec<f64> = (0..k2.len())
                .map(|i| k2[i] + xi * kp[i] - xi * asm.f_prime[i])
                .collect();
            let scale = crate::linalg::norm(&asm.f) + crate::linalg::norm(&k2) + crate::linalg::norm(&asm.f_prime) * xi;
            (r1, r2, scale)
        }
        Role::Adjoint => {
            let qoi = qoi.ok_or_else(|| Error::InvalidInput("adjoint residual needs the QoI".into()))?;
            let kp = asm.k_prime.matvec(&pair.second)?;
            let r1: Vec<f64> = (0..k1.len()).map(|i| k1[i] + xi * kp[i]).collect();
            let r2: Vec<f64> = k2.iter().zip(&qoi.g).map(|(a, g)| a - g / xi).collect();
            let scale = crate::linalg::norm(&k1) + crate::linalg::norm(&qoi.g) / xi;
            (r1, r2, scale)
        }
    };
    let r = crate::linalg::norm(&r1) + crate::linalg::norm(&r2);
    Ok(if scale > 0.0 { r / scale } else { r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{
        assemble_qoi, frame_rotation_at_b, frame_sway_at_c, membrane_average, Parameter,
        FRAME_MEAN, MEMBRANE_MEAN,
    };
    use crate::linalg::DEFAULT_REL_TOL;
    use crate::mesh::PortalFrame;

    fn frame(param: Parameter, n: usize) -> AssembledProblem {
        ParamProblem::portal_frame(&PortalFrame::default(), n, param, FRAME_MEAN, 1.0)
            .unwrap()
            .assemble(DEFAULT_REL_TOL)
            .unwrap()
    }

    #[test]
    fn xi_ranges() {
        let geo = PortalFrame::default();
        let p = ParamProblem::portal_frame(&geo, 2, Parameter::Beta1, FRAME_MEAN, 1.0).unwrap();
        assert!((validate_xi(&p).xi_max - 2.0).abs() < 1e-14);
        let m = ParamProblem::membrane(8, Parameter::Beta1, MEMBRANE_MEAN, 1.0).unwrap();
        assert!((validate_xi(&m).xi_max - 2.0).abs() < 1e-14);
        let m = ParamProblem::membrane(8, Parameter::Beta2, MEMBRANE_MEAN, 50.0).unwrap();
        assert!(validate_xi(&m).xi_max.is_infinite());
        let err = ParamProblem::portal_frame(&geo, 2, Parameter::Beta1, FRAME_MEAN, 2.0).unwrap_err();
        assert!(matches!(err, Error::XiOutOfRange { xi_max, .. } if (xi_max - 2.0).abs() < 1e-14));
        assert!(ParamProblem::membrane(8, Parameter::Beta2, MEMBRANE_MEAN, 0.0).is_err());
    }

    #[test]
    fn frame_beta1_mean_response() {
        let asm = frame(Parameter::Beta1, 50);
        let p = solve_primal_pair(&asm).unwrap();
        let delta_c = p.first[crate::mesh::frame::SWAY];
        assert!((delta_c - 0.0430866).abs() / 0.0430866 < 5e-3, "{delta_c}");
    }

    #[test]
    fn ddm_matches_adjoint_state() {
        let geo = PortalFrame::default();
        let asm = frame(Parameter::Beta2, 4);
        let q = assemble_qoi(&asm.problem, frame_rotation_at_b(&geo)).unwrap();
        let p = solve_primal_pair(&asm).unwrap();
        let a = solve_adjoint_pair(&asm, &q).unwrap();
        let j = evaluate_qoi(&p, &q).unwrap();
        let l = adjoint_state_value(&asm, &p, &a).unwrap();
        assert!((j - l).abs() <= 1e-11 * j.abs());

        let m = ParamProblem::membrane(8, Parameter::Beta1, MEMBRANE_MEAN, 1.0)
            .unwrap()
            .assemble(DEFAULT_REL_TOL)
            .unwrap();
        let q = assemble_qoi(&m.problem, membrane_average()).unwrap();
        let p = solve_primal_pair(&m).unwrap();
        let a = solve_adjoint_pair(&m, &q).unwrap();
        let j = evaluate_qoi(&p, &q).unwrap();
        let l = adjoint_state_value(&m, &p, &a).unwrap();
        assert!((j - l).abs() <= 1e-11 * j.abs());
    }

    #[test]
    fn role_mismatch_rejected() {
        let geo = PortalFrame::default();
        let asm = frame(Parameter::Beta1, 2);
        let q = assemble_qoi(&asm.problem, frame_sway_at_c(&geo)).unwrap();
        let a = solve_adjoint_pair(&asm, &q).unwrap();
        assert!(matches!(evaluate_qoi(&a, &q), Err(Error::RoleMismatch { .. })));
    }

    #[test]
    fn uncoupled_pairs_vanish() {
        // membrane beta_2: K' = 0, so the adjoint w is zero
        let m = ParamProblem::membrane(8, Parameter::Beta2, MEMBRANE_MEAN, 1.0)
            .unwrap()
            .assemble(DEFAULT_REL_TOL)
            .unwrap();
        let q = assemble_qoi(&m.problem, membrane_average()).unwrap();
        let a = solve_adjoint_pair(&m, &q).unwrap();
        assert!(a.first.iter().all(|&v| v == 0.0));
        assert!(block_residual(&m, &a, Some(&q)).unwrap() < 1e-12);
    }
}
