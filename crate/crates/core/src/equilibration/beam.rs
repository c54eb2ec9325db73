//! Moment recovery for Hermite beam elements from element end forces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{StressField, RICH_TESTS};
use crate::error::{Error, Result};
use crate::forms::{beam_element_coeffs, hermite_basis, hermite_curvatures, BeamModel, QoI};
use crate::mesh::Mesh1D;
use crate::poly::Poly;
use crate::sensitivity::{FieldPair, Role};

/// Tolerance on the assembled nodal balance of the end forces.
const NODAL_TOL: f64 = 1e-9;

const TEST_SEED: u64 = 0x5eed_b0a1;

/// Loads of a single-field beam problem.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamLoad {
    /// Uniform transverse load per element.
    pub q: Vec<f64>,
    /// Concentrated loads on free DOFs (forces on deflections, moments on
    /// rotations).
    pub nodal: Vec<f64>,
}

impl BeamLoad {
    pub fn zeros(mesh: &Mesh1D) -> Self {
        BeamLoad {
            q: vec![0.0; mesh.elements.len()],
            nodal: vec![0.0; mesh.n_free],
        }
    }

    pub fn scale(&self) -> f64 {
        self.q.iter().chain(&self.nodal).fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

fn element_values(dofs: &[Option<usize>; 4], v: &[f64]) -> [f64; 4] {
    dofs.map(|d| d.map_or(0.0, |g| v[g]))
}

/// Curvature `v''` of the element interpolant of a DOF vector.
fn element_curvature(h: f64, vals: [f64; 4]) -> Poly {
    let c = hermite_curvatures(h);
    (0..4).fold(Poly::zero(), |acc, i| &acc + &c[i].scale(vals[i]))
}

/// FE bending moment `EI v''` per element.
pub(crate) fn fe_moments(model: &BeamModel, coeffs: &[f64], coupled: Option<(&[f64], f64)>) -> Vec<Poly> {
    model
        .mesh
        .elements
        .iter()
        .map(|e| {
            let (ei, eip) = beam_element_coeffs(model, e);
            let h = e.length();
            let mut m = &ei * &element_curvature(h, element_values(&e.dofs, coeffs));
            if let Some((v, c)) = coupled {
                let k = &eip * &element_curvature(h, element_values(&e.dofs, v));
                m = &m + &k.scale(c);
            }
            m
        })
        .collect()
}

/// Recovers an admissible moment from a finite element moment field:
/// element end forces `r = int M N'' - q int N` fix `M(0)` and `M'(0)`, and
/// `M'' = q` fills the interior. The nodal balance of the end forces is the
/// discrete equilibrium of the FE solution, so the result is admissible up
/// to the solver residual.
pub(crate) fn recover_from_fe(mesh: &Mesh1D, fe: &[Poly], load: &BeamLoad) -> Result<StressField> {
    if fe.len() != mesh.elements.len() || load.q.len() != mesh.elements.len() {
        return Err(Error::MeshMismatch);
    }
    if load.nodal.len() != mesh.n_free {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_free,
            got: load.nodal.len(),
        });
    }
    let mut balance: Vec<f64> = load.nodal.iter().map(|p| -p).collect();
    let mut scale: Vec<f64> = load.nodal.iter().map(|p| p.abs()).collect();
    let mut moments = Vec::with_capacity(fe.len());
    for (e, m_fe) in mesh.elements.iter().zip(fe) {
        let h = e.length();
        let q = load.q[moments.len()];
        let c = hermite_curvatures(h);
        let unit = [h / 2.0, h * h / 12.0, h / 2.0, -h * h / 12.0];
        let r: [f64; 4] = std::array::from_fn(|i| (m_fe * &c[i]).integrate(0.0, h) - q * unit[i]);
        for i in 0..4 {
            if let Some(g) = e.dofs[i] {
                balance[g] += r[i];
                scale[g] += r[i].abs() + (q * unit[i]).abs();
            }
        }
        moments.push(Poly::new(vec![-r[1], r[0], 0.5 * q]));
    }
    // normwise, like the solver acceptance: single rows of a stiff frame
    // can carry cancelling end forces far larger than their net balance
    let num = balance.iter().fold(0.0_f64, |m, b| m.max(b.abs()));
    let den = scale.iter().fold(0.0_f64, |m, s| m.max(*s));
    let worst = if den > 0.0 { num / den } else { num };
    if worst > NODAL_TOL {
        return Err(Error::EquilibriumViolation {
            defect: worst,
            tolerance: NODAL_TOL,
            context: "nodal balance of beam end forces".into(),
        });
    }
    Ok(StressField::Beam { moments })
}

/// Admissible moment for the single-field problem `int EI u'' v'' = load(v)`
/// given its FE solution `coeffs`.
pub fn recover_beam_moments(model: &BeamModel, coeffs: &[f64], load: &BeamLoad) -> Result<StressField> {
    if coeffs.len() != model.mesh.n_free {
        return Err(Error::DimensionMismatch {
            expected: model.mesh.n_free,
            got: coeffs.len(),
        });
    }
    recover_from_fe(&model.mesh, &fe_moments(model, coeffs, None), load)
}

/// Relative defect of `int M v'' - int q v - P.v` over random `C^1`
/// piecewise quintic test functions that satisfy the kinematic constraints.
pub fn equilibrium_defect(mesh: &Mesh1D, field: &StressField, load: &BeamLoad, n_tests: usize) -> Result<f64> {
    let StressField::Beam { moments } = field else {
        return Err(Error::MeshMismatch);
    };
    if moments.len() != mesh.elements.len() {
        return Err(Error::MeshMismatch);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(TEST_SEED);
    let mut worst = 0.0_f64;
    for _ in 0..n_tests {
        let z: Vec<f64> = (0..mesh.n_free).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut total = 0.0;
        let mut scale = 0.0;
        for (e, (el, m)) in mesh.elements.iter().zip(moments).enumerate() {
            let h = el.length();
            let basis = hermite_basis(h);
            let vals = element_values(&el.dofs, &z);
            let mut v = (0..4).fold(Poly::zero(), |acc, i| &acc + &basis[i].scale(vals[i]));
            // quintic bubble with zero end values and slopes
            let (c0, c1): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let x = Poly::new(vec![0.0, 1.0]);
            let hx = Poly::new(vec![h, -1.0]);
            let bubble = &(&(&x * &x) * &(&hx * &hx)) * &Poly::new(vec![c0, c1 / h]);
            v = &v + &bubble.scale(16.0 / h.powi(4));
            let a = (m * &v.derivative().derivative()).integrate(0.0, h);
            let b = load.q[e] * v.integrate(0.0, h);
            total += a - b;
            scale += a.abs() + b.abs();
        }
        for (p, zi) in load.nodal.iter().zip(&z) {
            total -= p * zi;
            scale += (p * zi).abs();
        }
        worst = worst.max(if scale > 0.0 { total.abs() / scale } else { total.abs() });
    }
    Ok(worst)
}

/// Relative defect of `int (rec - fe) N_a''` over all FE basis functions.
pub(crate) fn basis_defect(mesh: &Mesh1D, rec: &[&StressField], fe: &[&StressField]) -> f64 {
    let mut worst = 0.0_f64;
    for (r, f) in rec.iter().zip(fe) {
        let (StressField::Beam { moments: mr }, StressField::Beam { moments: mf }) = (r, f) else {
            return f64::INFINITY;
        };
        let mut g = vec![0.0; mesh.n_free];
        let mut s = vec![0.0; mesh.n_free];
        for (e, (pr, pf)) in mesh.elements.iter().zip(mr.iter().zip(mf)) {
            let h = e.length();
            let c = hermite_curvatures(h);
            for i in 0..4 {
                if let Some(d) = e.dofs[i] {
                    let a = (pr * &c[i]).integrate(0.0, h);
                    let b = (pf * &c[i]).integrate(0.0, h);
                    g[d] += a - b;
                    s[d] += a.abs() + b.abs();
                }
            }
        }
        let smax = s.iter().cloned().fold(0.0_f64, f64::max);
        let gmax = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        worst = worst.max(if smax > 0.0 { gmax / smax } else { gmax });
    }
    worst
}

/// `lambda = xi EI' / (2 EI)` per element. Requires `EI'` proportional to
/// `EI` on each member, so that `lambda` is constant per element.
pub(crate) fn element_lambdas(model: &BeamModel, xi: f64) -> Result<Vec<f64>> {
    let mut per_member = Vec::with_capacity(model.ei.len());
    for (m, (ei, eip)) in model.ei.iter().zip(&model.ei_prime).enumerate() {
        if eip.is_zero() {
            per_member.push(0.0);
            continue;
        }
        let c = eip.coeffs()[0] / ei.coeffs()[0];
        let diff = eip - &ei.scale(c);
        let size = eip.coeffs().iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if diff.coeffs().iter().any(|v| v.abs() > 1e-14 * size) {
            return Err(Error::InvalidInput(format!(
                "EI' is not proportional to EI on member {m}"
            )));
        }
        per_member.push(0.5 * xi * c);
    }
    Ok(model.mesh.elements.iter().map(|e| per_member[e.member]).collect())
}

/// Field-by-field data of a beam block pair.
pub(crate) struct BeamPair<'a> {
    model: &'a BeamModel,
    fe: [Vec<Poly>; 2],
    loads: [BeamLoad; 2],
}

impl<'a> BeamPair<'a> {
    pub(crate) fn new(model: &'a BeamModel, pair: &FieldPair, qoi: Option<&QoI>, n: usize) -> Result<Self> {
        let mesh = &model.mesh;
        let xi = pair.xi;
        let per_element = |q: &[f64], s: f64| -> Vec<f64> {
            mesh.elements.iter().map(|e| s * q[e.member]).collect()
        };
        let nodal = |pts: &[(usize, f64)], s: f64| -> Vec<f64> {
            let mut v = vec![0.0; n];
            for &(d, p) in pts {
                v[d] += s * p;
            }
            v
        };
        let (x, y) = (&pair.first, &pair.second);
        let (fe, loads) = match pair.role {
            Role::Primal => (
                [fe_moments(model, x, None), fe_moments(model, y, Some((x, xi)))],
                [
                    BeamLoad {
                        q: per_element(&model.q, 1.0),
                        nodal: nodal(&model.point_loads, 1.0),
                    },
                    BeamLoad {
                        q: per_element(&model.q_prime, xi),
                        nodal: nodal(&model.point_loads_prime, xi),
                    },
                ],
            ),
            Role::Adjoint => {
                let g = &qoi.ok_or_else(|| Error::InvalidInput("adjoint pair needs the QoI".into()))?.g;
                (
                    [fe_moments(model, x, Some((y, xi))), fe_moments(model, y, None)],
                    [
                        BeamLoad::zeros(mesh),
                        BeamLoad {
                            q: vec![0.0; mesh.elements.len()],
                            nodal: g.iter().map(|v| v / xi).collect(),
                        },
                    ],
                )
            }
        };
        Ok(BeamPair { model, fe, loads })
    }

    /// Recovered field, FE field and richer-space defect of field `i`.
    pub(crate) fn recover(&self, i: usize) -> Result<(StressField, StressField, f64)> {
        let mesh = &self.model.mesh;
        let rec = recover_from_fe(mesh, &self.fe[i], &self.loads[i])?;
        let defect = equilibrium_defect(mesh, &rec, &self.loads[i], RICH_TESTS)?;
        Ok((
            rec,
            StressField::Beam {
                moments: self.fe[i].clone(),
            },
            defect,
        ))
    }
}
