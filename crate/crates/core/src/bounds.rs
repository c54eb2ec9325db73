//! Extended constitutive-relation-error estimators and the resulting strict
//! bounds on a sensitivity QoI.
//!
//! With residual pairs `p = {s_1, s_2}` (primal) and `d = {t_1, t_2}`
//! (adjoint), compliance `1/c` and `lambda = xi c' / (2c)`:
//!
//! ```text
//! E^2(p)    = int (s_1^2 + s_2^2 + 2 lambda s_1 s_2) / c
//! A^S(p, d) = int (s_1 t_1 + s_2 t_2 + lambda (s_1 t_2 + t_1 s_2)) / c
//! J in J_h + A^S(p, d) / 2 -+ E(p) E(d) / 2
//! ```

use crate::equilibration::{integral_product, single_field_difference, AdmissibleResidualPair, SingleLoad, StressField};
use crate::error::{Error, Result};
use crate::forms::{beam_element_coeffs, AssembledProblem, ModelKind, ParamProblem, QoI};
use crate::poly::Poly;
use crate::quadrature::adaptive_gauss;
use crate::sensitivity::Role;

/// Relative tolerance of the adaptive integration of rational integrands.
pub const INTEGRATION_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorValue {
    pub value: f64,
    /// `int s_1^2 / c`, `int s_2^2 / c`, `int 2 lambda s_1 s_2 / c`.
    pub parts: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundsMeta {
    pub h: f64,
    pub xi: f64,
    pub case: String,
    pub solver_res: f64,
    pub equil_res: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub quantity_value: f64,
    pub correction: f64,
    pub e_primal: f64,
    pub e_dual: f64,
    pub upper: f64,
    pub lower: f64,
    pub kappa: f64,
    pub meta: BoundsMeta,
}

impl BoundsReport {
    pub fn gap(&self) -> f64 {
        self.e_primal * self.e_dual
    }

    pub fn center(&self) -> f64 {
        self.quantity_value + self.correction
    }

    pub fn brackets(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    /// `upper - lower` reproduces `E_p E_d` up to the rounding of the
    /// centre value the interval is built around.
    pub fn gap_consistent(&self, rel_tol: f64) -> bool {
        let slack = rel_tol * self.gap() + 4.0 * f64::EPSILON * self.center().abs();
        ((self.upper - self.lower) - self.gap()).abs() <= slack
    }
}

/// `int x y / c` per element, split into the moment/flux part and the
/// membrane reaction part.
fn inner_per_element(problem: &ParamProblem, x: &StressField, y: &StressField) -> Result<Vec<[f64; 2]>> {
    match (&problem.model, x, y) {
        (ModelKind::Beam(model), StressField::Beam { moments: mx }, StressField::Beam { moments: my }) => {
            let els = &model.mesh.elements;
            if mx.len() != els.len() || my.len() != els.len() {
                return Err(Error::MeshMismatch);
            }
            Ok(els
                .iter()
                .zip(mx.iter().zip(my))
                .map(|(e, (a, b))| {
                    let num = a * b;
                    let (ei, _) = beam_element_coeffs(model, e);
                    [weighted_integral(&num, &ei, e.length()), 0.0]
                })
                .collect())
        }
        (
            ModelKind::Membrane(m),
            StressField::Membrane { flux: fx, reaction: rx, .. },
            StressField::Membrane { flux: fy, reaction: ry, .. },
        ) => {
            let nc = m.mesh.n_cells();
            if fx.len() != nc || fy.len() != nc {
                return Err(Error::MeshMismatch);
            }
            let h2 = m.mesh.h * m.mesh.h;
            Ok((0..nc)
                .map(|c| {
                    let flux = h2 / m.a
                        * (integral_product(&fx[c][0], &fy[c][0]) + integral_product(&fx[c][1], &fy[c][1]));
                    let reaction = if m.k > 0.0 {
                        h2 / m.k * integral_product(&rx[c], &ry[c])
                    } else {
                        0.0
                    };
                    [flux, reaction]
                })
                .collect())
        }
        _ => Err(Error::MeshMismatch),
    }
}

/// `int_0^h num / den`, exact for constant `den`.
fn weighted_integral(num: &Poly, den: &Poly, h: f64) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    if den.degree() == 0 {
        return num.integrate(0.0, h) / den.coeffs()[0];
    }
    adaptive_gauss(0.0, h, INTEGRATION_TOL, &|x| num.eval(x) / den.eval(x))
}

/// `E` of an admissible residual pair.
pub fn cre_estimator(pair: &AdmissibleResidualPair, problem: &ParamProblem) -> Result<EstimatorValue> {
    let s11 = inner_per_element(problem, &pair.sigma_res, &pair.sigma_res)?;
    let s22 = inner_per_element(problem, &pair.big_sigma_res, &pair.big_sigma_res)?;
    let s12 = inner_per_element(problem, &pair.sigma_res, &pair.big_sigma_res)?;
    let mut parts = [0.0; 3];
    for e in 0..s11.len() {
        parts[0] += s11[e][0] + s11[e][1];
        parts[1] += s22[e][0] + s22[e][1];
        parts[2] += 2.0 * (pair.lambda[e] * s12[e][0] + pair.lambda_reaction[e] * s12[e][1]);
    }
    let sq = parts[0] + parts[1] + parts[2];
    if sq < 0.0 {
        // a tiny negative value is round-off on an essentially zero field
        if sq < -1e-14 * (parts[0] + parts[1]).max(f64::MIN_POSITIVE) {
            return Err(Error::NegativeEstimator { value: sq });
        }
        return Ok(EstimatorValue { value: 0.0, parts });
    }
    Ok(EstimatorValue {
        value: sq.sqrt(),
        parts,
    })
}

/// Symmetric stress form `A^S(p, d)` of two residual pairs.
pub fn cross_term(p: &AdmissibleResidualPair, d: &AdmissibleResidualPair, problem: &ParamProblem) -> Result<f64> {
    if p.lambda.len() != d.lambda.len() || p.xi != d.xi {
        return Err(Error::MeshMismatch);
    }
    let a11 = inner_per_element(problem, &p.sigma_res, &d.sigma_res)?;
    let a22 = inner_per_element(problem, &p.big_sigma_res, &d.big_sigma_res)?;
    let a12 = inner_per_element(problem, &p.sigma_res, &d.big_sigma_res)?;
    let a21 = inner_per_element(problem, &d.sigma_res, &p.big_sigma_res)?;
    let mut s = 0.0;
    for e in 0..a11.len() {
        s += a11[e][0] + a11[e][1] + a22[e][0] + a22[e][1];
        s += p.lambda[e] * (a12[e][0] + a21[e][0]) + p.lambda_reaction[e] * (a12[e][1] + a21[e][1]);
    }
    Ok(s)
}

/// `kappa = sqrt(e_d / e_p)`; infinite when only `e_p` vanishes and NaN
/// when both do (the bounds then have zero width and `kappa` is unused).
pub fn optimal_kappa(e_p: f64, e_d: f64) -> f64 {
    if e_p == 0.0 {
        return if e_d == 0.0 { f64::NAN } else { f64::INFINITY };
    }
    (e_d / e_p).sqrt()
}

fn interval(quantity_value: f64, correction: f64, e_primal: f64, e_dual: f64, meta: BoundsMeta) -> BoundsReport {
    let center = quantity_value + correction;
    let half = 0.5 * e_primal * e_dual;
    BoundsReport {
        quantity_value,
        correction,
        e_primal,
        e_dual,
        upper: center + half,
        lower: center - half,
        kappa: optimal_kappa(e_primal, e_dual),
        meta,
    }
}

/// Strict bounds on `J(u')` from the primal and adjoint residual pairs and
/// the computed value `j_h`.
pub fn sensitivity_bounds(
    pair_p: &AdmissibleResidualPair,
    pair_d: &AdmissibleResidualPair,
    j_h: f64,
    problem: &ParamProblem,
) -> Result<BoundsReport> {
    if pair_p.role != Role::Primal {
        return Err(Error::RoleMismatch {
            expected: "primal",
            got: pair_p.role.name(),
        });
    }
    if pair_d.role != Role::Adjoint {
        return Err(Error::RoleMismatch {
            expected: "adjoint",
            got: pair_d.role.name(),
        });
    }
    let e_p = cre_estimator(pair_p, problem)?.value;
    let e_d = cre_estimator(pair_d, problem)?.value;
    let correction = 0.5 * cross_term(pair_p, pair_d, problem)?;
    let meta = BoundsMeta {
        h: problem.h(),
        xi: problem.xi,
        equil_res: pair_p
            .equilibrium_defect
            .max(pair_d.equilibrium_defect)
            .max(pair_p.galerkin_defect)
            .max(pair_d.galerkin_defect),
        ..BoundsMeta::default()
    };
    Ok(interval(j_h, correction, e_p, e_d, meta))
}

/// Bounds on a plain QoI `Q(u)` of the single-field problem: `sigma_diff`
/// and `tau_diff` are admissible minus FE stress of the primal and adjoint
/// solutions, `q_h = Q(u_h)`.
pub fn symmetric_bounds(
    problem: &ParamProblem,
    sigma_diff: &StressField,
    tau_diff: &StressField,
    q_h: f64,
) -> Result<BoundsReport> {
    let sum = |x: &StressField, y: &StressField| -> Result<f64> {
        Ok(inner_per_element(problem, x, y)?.iter().map(|v| v[0] + v[1]).sum())
    };
    let e_p = sum(sigma_diff, sigma_diff)?.max(0.0).sqrt();
    let e_d = sum(tau_diff, tau_diff)?.max(0.0).sqrt();
    let correction = 0.5 * sum(sigma_diff, tau_diff)?;
    let meta = BoundsMeta {
        h: problem.h(),
        xi: problem.xi,
        ..BoundsMeta::default()
    };
    Ok(interval(q_h, correction, e_p, e_d, meta))
}

/// Bounds on `Q(u)` for the problem `K u = f` and the QoI `g`: both fields
/// are solved, recovered and passed to [`symmetric_bounds`].
pub fn plain_qoi_bounds(asm: &AssembledProblem, qoi: &QoI) -> Result<BoundsReport> {
    let (u, su) = asm.factor.solve(&asm.f)?;
    let (z, sz) = asm.factor.solve(&qoi.g)?;
    let (du, def_u) = single_field_difference(asm, &u, SingleLoad::Problem)?;
    let (dz, def_z) = single_field_difference(asm, &z, SingleLoad::Qoi(qoi))?;
    let mut r = symmetric_bounds(&asm.problem, &du, &dz, qoi.value(&u))?;
    r.meta.solver_res = su.backward_error.max(sz.backward_error);
    r.meta.equil_res = def_u.max(def_z);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{BeamModel, Parameter};
    use crate::mesh::{build_single_span, SpanEnd, StiffnessProfile};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_beam(n: usize, ei_prime: f64) -> ParamProblem {
        let mesh = build_single_span(1.0, n, SpanEnd::Clamped, SpanEnd::Clamped, StiffnessProfile::Uniform { ei: 1.0 })
            .unwrap();
        let model = BeamModel {
            mesh,
            ei: vec![Poly::constant(1.0)],
            ei_prime: vec![Poly::constant(ei_prime)],
            q: vec![1.0],
            q_prime: vec![0.0],
            point_loads: vec![],
            point_loads_prime: vec![],
        };
        ParamProblem::new(ModelKind::Beam(model), Parameter::Beta1, [1.0, 1.0], 1.0).unwrap()
    }

    fn beam_pair(role: Role, lambda: f64, s1: Vec<Poly>, s2: Vec<Poly>) -> AdmissibleResidualPair {
        let n = s1.len();
        let zero = StressField::Beam {
            moments: vec![Poly::zero(); n],
        };
        AdmissibleResidualPair {
            role,
            xi: 1.0,
            sigma_res: StressField::Beam { moments: s1 },
            big_sigma_res: StressField::Beam { moments: s2 },
            lambda: vec![lambda; n],
            lambda_reaction: vec![0.0; n],
            recovered: [zero.clone(), zero.clone()],
            fe: [zero.clone(), zero],
            equilibrium_defect: 0.0,
            galerkin_defect: 0.0,
        }
    }

    fn random_moments(rng: &mut ChaCha8Rng, n: usize) -> Vec<Poly> {
        (0..n)
            .map(|_| Poly::new((0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()))
            .collect()
    }

    #[test]
    fn manufactured_constant_residuals() {
        let p = unit_beam(1, 1.0);
        let one = vec![Poly::constant(1.0)];
        let pair = beam_pair(Role::Primal, 0.5, one.clone(), one);
        let e = cre_estimator(&pair, &p).unwrap();
        assert!((e.value * e.value - 3.0).abs() < 1e-14);
        assert!((e.parts[0] - 1.0).abs() < 1e-15 && (e.parts[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_pair_and_uncoupled_sum() {
        let p = unit_beam(3, 0.0);
        let z = beam_pair(Role::Primal, 0.0, vec![Poly::zero(); 3], vec![Poly::zero(); 3]);
        assert_eq!(cre_estimator(&z, &p).unwrap().value, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = beam_pair(Role::Primal, 0.0, random_moments(&mut rng, 3), random_moments(&mut rng, 3));
        let e = cre_estimator(&x, &p).unwrap();
        assert_eq!(e.parts[2], 0.0);
        assert!((e.value * e.value - e.parts[0] - e.parts[1]).abs() < 1e-14);
        assert_eq!(cross_term(&x, &z, &p).unwrap(), 0.0);
    }

    #[test]
    fn cross_term_is_symmetric_and_bounded() {
        let p = unit_beam(4, 1.2);
        let lam = 0.6;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = beam_pair(Role::Primal, lam, random_moments(&mut rng, 4), random_moments(&mut rng, 4));
            let b = beam_pair(Role::Adjoint, lam, random_moments(&mut rng, 4), random_moments(&mut rng, 4));
            let ab = cross_term(&a, &b, &p).unwrap();
            let ba = cross_term(&b, &a, &p).unwrap();
            assert!((ab - ba).abs() <= 1e-14 * ab.abs().max(1.0));
            let (ea, eb) = (cre_estimator(&a, &p).unwrap().value, cre_estimator(&b, &p).unwrap().value);
            assert!(ab.abs() <= ea * eb * (1.0 + 1e-12));
            let aa = cross_term(&a, &a, &p).unwrap();
            assert!((aa - ea * ea).abs() <= 1e-13 * aa);
        }
    }

    #[test]
    fn tapered_stiffness_uses_rational_integral() {
        let mesh = build_single_span(1.0, 1, SpanEnd::Clamped, SpanEnd::Clamped, StiffnessProfile::Uniform { ei: 1.0 })
            .unwrap();
        let model = BeamModel {
            mesh,
            ei: vec![Poly::new(vec![1.0, 1.0])],
            ei_prime: vec![Poly::zero()],
            q: vec![0.0],
            q_prime: vec![0.0],
            point_loads: vec![],
            point_loads_prime: vec![],
        };
        let p = ParamProblem::new(ModelKind::Beam(model), Parameter::Beta1, [1.0, 1.0], 1.0).unwrap();
        let pair = beam_pair(Role::Primal, 0.0, vec![Poly::constant(1.0)], vec![Poly::zero()]);
        let e = cre_estimator(&pair, &p).unwrap();
        assert!((e.value * e.value - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn role_order_enforced() {
        let p = unit_beam(1, 0.0);
        let z = beam_pair(Role::Primal, 0.0, vec![Poly::zero()], vec![Poly::zero()]);
        assert!(matches!(
            sensitivity_bounds(&z, &z, 0.0, &p),
            Err(Error::RoleMismatch { .. })
        ));
    }

    #[test]
    fn zero_residuals_collapse_to_the_value() {
        let p = unit_beam(2, 0.0);
        let zp = beam_pair(Role::Primal, 0.0, vec![Poly::zero(); 2], vec![Poly::zero(); 2]);
        let zd = beam_pair(Role::Adjoint, 0.0, vec![Poly::zero(); 2], vec![Poly::zero(); 2]);
        let r = sensitivity_bounds(&zp, &zd, 0.75, &p).unwrap();
        assert_eq!((r.lower, r.upper), (0.75, 0.75));
        assert!(r.kappa.is_nan());
    }

    #[test]
    fn kappa_formula() {
        assert_eq!(optimal_kappa(1.0, 1.0), 1.0);
        assert_eq!(optimal_kappa(4.0, 1.0), 0.5);
        assert!(optimal_kappa(0.0, 1.0).is_infinite());
        assert!(optimal_kappa(0.0, 0.0).is_nan());
    }

    #[test]
    fn kappa_minimizes_the_split_bound() {
        let (ep, ed) = (0.3_f64, 2.5_f64);
        let k = optimal_kappa(ep, ed);
        let f = |k: f64| 0.5 * (k * k * ep * ep + ed * ed / (k * k));
        assert!((f(k) - ep * ed).abs() < 1e-14);
        for i in 0..=200 {
            let kk = k * 10f64.powf(-1.0 + i as f64 / 100.0);
            assert!(f(kk) >= ep * ed - 1e-14);
        }
    }

    #[test]
    fn interval_is_centered() {
        let r = interval(1.0, 0.25, 0.5, 0.2, BoundsMeta::default());
        assert!((r.upper - 1.3).abs() < 1e-15 && (r.lower - 1.2).abs() < 1e-15);
        assert!(r.gap_consistent(1e-13));
        assert!(r.brackets(1.25));
    }
}
