//! Statically admissible residual pairs.
//!
//! Each field of a block pair is first equilibrated as an ordinary
//! single-field problem (recovered moment for beams, recovered flux for the
//! membrane). The coupled residual pair then follows pointwise from
//!
//! ```text
//! res_1 = (d_1 - lambda d_2) / (1 - lambda^2)
//! res_2 = (d_2 - lambda d_1) / (1 - lambda^2)
//! ```
//!
//! where `d_i` is recovered minus finite element stress and
//! `lambda = xi c' / (2 c)` for the stiffness coefficient `c`.

mod beam;
mod membrane;

pub use beam::{recover_beam_moments, BeamLoad};
pub use membrane::{recover_quad_flux, FluxRecovery};
pub(crate) use membrane::integral_product;

use crate::error::{Error, Result};
use crate::forms::{AssembledProblem, MembraneLoad, ModelKind, QoI};
use crate::poly::{Poly, Poly2};
use crate::sensitivity::{FieldPair, Role};

/// Default tolerance of the equilibrium guards, relative to the summed
/// magnitude of the terms being balanced.
pub const EQUILIBRIUM_TOL: f64 = 1e-10;

/// Per-element stress data.
#[derive(Debug, Clone, PartialEq)]
pub enum StressField {
    /// Bending moment per element in the local coordinate `x in [0, h_e]`.
    Beam { moments: Vec<Poly> },
    /// Flux `(q_x, q_y)` and reaction per cell in unit cell coordinates
    /// `(X, Y) in [0, 1]^2`, `x = x0 + h X`.
    Membrane {
        h: f64,
        flux: Vec<[Poly2; 2]>,
        reaction: Vec<Poly2>,
    },
}

impl StressField {
    pub fn n_elements(&self) -> usize {
        match self {
            StressField::Beam { moments } => moments.len(),
            StressField::Membrane { flux, .. } => flux.len(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            StressField::Beam { moments } => moments.iter().all(Poly::is_zero),
            StressField::Membrane { flux, reaction, .. } => {
                flux.iter().flatten().all(|p| p.max_abs_coeff() == 0.0)
                    && reaction.iter().all(|p| p.max_abs_coeff() == 0.0)
            }
        }
    }

    /// Largest coefficient magnitude (a cheap size measure for tolerances).
    pub fn max_abs(&self) -> f64 {
        match self {
            StressField::Beam { moments } => moments
                .iter()
                .flat_map(|p| p.coeffs().iter())
                .fold(0.0_f64, |m, c| m.max(c.abs())),
            StressField::Membrane { flux, reaction, .. } => flux
                .iter()
                .flatten()
                .chain(reaction.iter())
                .fold(0.0_f64, |m, p| m.max(p.max_abs_coeff())),
        }
    }

    /// Elementwise `a[e] * self + b[e] * other`.
    pub fn combine(&self, a: &[f64], other: &StressField, b: &[f64]) -> Result<StressField> {
        match (self, other) {
            (StressField::Beam { moments: m1 }, StressField::Beam { moments: m2 })
                if m1.len() == m2.len() =>
            {
                Ok(StressField::Beam {
                    moments: m1
                        .iter()
                        .zip(m2)
                        .enumerate()
                        .map(|(e, (p, q))| &p.scale(a[e]) + &q.scale(b[e]))
                        .collect(),
                })
            }
            (
                StressField::Membrane {
                    h,
                    flux: f1,
                    reaction: r1,
                },
                StressField::Membrane {
                    flux: f2,
                    reaction: r2,
                    ..
                },
            ) if f1.len() == f2.len() => Ok(StressField::Membrane {
                h: *h,
                flux: f1
                    .iter()
                    .zip(f2)
                    .enumerate()
                    .map(|(e, (p, q))| {
                        [
                            p[0].scale(a[e]).add(&q[0].scale(b[e])),
                            p[1].scale(a[e]).add(&q[1].scale(b[e])),
                        ]
                    })
                    .collect(),
                reaction: r1
                    .iter()
                    .zip(r2)
                    .enumerate()
                    .map(|(e, (p, q))| p.scale(a[e]).add(&q.scale(b[e])))
                    .collect(),
            }),
            _ => Err(Error::MeshMismatch),
        }
    }

    pub fn sub(&self, other: &StressField) -> Result<StressField> {
        let n = self.n_elements();
        self.combine(&vec![1.0; n], other, &vec![-1.0; n])
    }
}

/// The coupled residual pair `{res_1, res_2}` of a primal or adjoint block
/// pair together with the single-field data it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleResidualPair {
    pub role: Role,
    pub xi: f64,
    /// `sigma^res` (primal) or `tau^res` (adjoint).
    pub sigma_res: StressField,
    /// `Sigma^res` (primal) or `Gamma^res` (adjoint).
    pub big_sigma_res: StressField,
    /// `lambda` per element for the flux/moment component.
    pub lambda: Vec<f64>,
    /// `lambda` per element for the membrane reaction component.
    pub lambda_reaction: Vec<f64>,
    /// Recovered single-field admissible stresses.
    pub recovered: [StressField; 2],
    /// Finite element stresses of the two fields.
    pub fe: [StressField; 2],
    /// Worst relative defect of the richer-space equilibrium checks.
    pub equilibrium_defect: f64,
    /// Worst relative defect of the coupled residual equations tested with
    /// finite element basis functions.
    pub galerkin_defect: f64,
}

impl AdmissibleResidualPair {
    /// Forward map `d_1 = res_1 + lambda res_2`, `d_2 = res_2 + lambda res_1`.
    pub fn forward_transform(&self) -> Result<(StressField, StressField)> {
        let ones = vec![1.0; self.lambda.len()];
        let (d1, d2) = match (&self.sigma_res, &self.big_sigma_res) {
            (StressField::Membrane { .. }, StressField::Membrane { .. }) => (
                transform_membrane(&self.sigma_res, &self.big_sigma_res, &self.lambda, &self.lambda_reaction, 1.0)?,
                transform_membrane(&self.big_sigma_res, &self.sigma_res, &self.lambda, &self.lambda_reaction, 1.0)?,
            ),
            _ => (
                self.sigma_res.combine(&ones, &self.big_sigma_res, &self.lambda)?,
                self.big_sigma_res.combine(&ones, &self.sigma_res, &self.lambda)?,
            ),
        };
        Ok((d1, d2))
    }

    /// `recovered - fe` for both fields.
    pub fn differences(&self) -> Result<(StressField, StressField)> {
        Ok((
            self.recovered[0].sub(&self.fe[0])?,
            self.recovered[1].sub(&self.fe[1])?,
        ))
    }
}

/// `x + lambda y` with separate lambdas for flux and reaction, scaled by
/// `scale`.
fn transform_membrane(
    x: &StressField,
    y: &StressField,
    lambda: &[f64],
    lambda_r: &[f64],
    scale: f64,
) -> Result<StressField> {
    let (
        StressField::Membrane {
            h,
            flux: fx,
            reaction: rx,
        },
        StressField::Membrane {
            flux: fy,
            reaction: ry,
            ..
        },
    ) = (x, y)
    else {
        return Err(Error::MeshMismatch);
    };
    Ok(StressField::Membrane {
        h: *h,
        flux: fx
            .iter()
            .zip(fy)
            .enumerate()
            .map(|(e, (a, b))| {
                [
                    a[0].add(&b[0].scale(lambda[e])).scale(scale),
                    a[1].add(&b[1].scale(lambda[e])).scale(scale),
                ]
            })
            .collect(),
        reaction: rx
            .iter()
            .zip(ry)
            .enumerate()
            .map(|(e, (a, b))| a.add(&b.scale(lambda_r[e])).scale(scale))
            .collect(),
    })
}

/// Inverse map applied to the differences `d_1`, `d_2`.
fn inverse_transform(
    d1: &StressField,
    d2: &StressField,
    lambda: &[f64],
    lambda_r: &[f64],
) -> Result<(StressField, StressField)> {
    for (e, l) in lambda.iter().chain(lambda_r.iter()).enumerate() {
        if !(l.abs() < 1.0) {
            return Err(Error::SingularTransform {
                element: e % lambda.len().max(1),
                value: *l,
            });
        }
    }
    match d1 {
        StressField::Beam { .. } => {
            let a: Vec<f64> = lambda.iter().map(|l| 1.0 / (1.0 - l * l)).collect();
            let b: Vec<f64> = lambda.iter().map(|l| -l / (1.0 - l * l)).collect();
            Ok((d1.combine(&a, d2, &b)?, d2.combine(&a, d1, &b)?))
        }
        StressField::Membrane { .. } => {
            let neg: Vec<f64> = lambda.iter().map(|l| -l).collect();
            let neg_r: Vec<f64> = lambda_r.iter().map(|l| -l).collect();
            let r1 = transform_membrane(d1, d2, &neg, &neg_r, 1.0)?;
            let r2 = transform_membrane(d2, d1, &neg, &neg_r, 1.0)?;
            // divide flux and reaction parts by their own 1 - lambda^2
            let fix = |f: StressField| -> StressField {
                let StressField::Membrane { h, flux, reaction } = f else {
                    unreachable!()
                };
                StressField::Membrane {
                    h,
                    flux: flux
                        .iter()
                        .enumerate()
                        .map(|(e, q)| {
                            let s = 1.0 / (1.0 - lambda[e] * lambda[e]);
                            [q[0].scale(s), q[1].scale(s)]
                        })
                        .collect(),
                    reaction: reaction
                        .iter()
                        .enumerate()
                        .map(|(e, r)| r.scale(1.0 / (1.0 - lambda_r[e] * lambda_r[e])))
                        .collect(),
                }
            };
            Ok((fix(r1), fix(r2)))
        }
    }
}

/// Builds the admissible residual pair of a solved block pair. The adjoint
/// role needs the QoI, whose functional is the load of the second field.
pub fn build_admissible_pair(
    asm: &AssembledProblem,
    pair: &FieldPair,
    qoi: Option<&QoI>,
) -> Result<AdmissibleResidualPair> {
    let xi = pair.xi;
    let n = asm.k.dim();
    if pair.first.len() != n || pair.second.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: pair.first.len(),
        });
    }
    if pair.role == Role::Adjoint && qoi.is_none() {
        return Err(Error::InvalidInput(
            "the adjoint residual pair needs the QoI".into(),
        ));
    }
    match &asm.problem.model {
        ModelKind::Beam(model) => {
            let b = beam::BeamPair::new(model, pair, qoi, n)?;
            let (rec1, fe1, def1) = b.recover(0)?;
            let (rec2, fe2, def2) = b.recover(1)?;
            let lambda = beam::element_lambdas(model, xi)?;
            let d1 = rec1.sub(&fe1)?;
            let d2 = rec2.sub(&fe2)?;
            let (r1, r2) = inverse_transform(&d1, &d2, &lambda, &vec![0.0; lambda.len()])?;
            let galerkin = beam::basis_defect(&model.mesh, &[&rec1, &rec2], &[&fe1, &fe2]);
            let nl = lambda.len();
            Ok(AdmissibleResidualPair {
                role: pair.role,
                xi,
                sigma_res: r1,
                big_sigma_res: r2,
                lambda,
                lambda_reaction: vec![0.0; nl],
                recovered: [rec1, rec2],
                fe: [fe1, fe2],
                equilibrium_defect: def1.max(def2),
                galerkin_defect: galerkin,
            })
        }
        ModelKind::Membrane(model) => {
            let mesh = &model.mesh;
            let (a, ap, k, kp) = (model.a, model.a_prime, model.k, model.k_prime);
            let (x, y) = (&pair.first, &pair.second);
            let comb = |s: f64, u: &[f64], t: f64, v: &[f64]| -> Vec<f64> {
                u.iter().zip(v).map(|(p, q)| s * p + t * q).collect()
            };
            let zero = MembraneLoad::zeros(mesh);
            let specs: [FluxRecovery; 2] = match pair.role {
                Role::Primal => [
                    FluxRecovery {
                        potential: x.iter().map(|v| a * v).collect(),
                        reaction: x.iter().map(|v| k * v).collect(),
                        load: model.load.clone(),
                    },
                    FluxRecovery {
                        potential: comb(a, y, xi * ap, x),
                        reaction: comb(k, y, xi * kp, x),
                        load: model.load_prime.scaled(xi),
                    },
                ],
                Role::Adjoint => {
                    let density = qoi
                        .and_then(|q| q.density.as_ref())
                        .ok_or_else(|| Error::InvalidInput("membrane QoI without density".into()))?;
                    [
                        FluxRecovery {
                            potential: comb(a, x, xi * ap, y),
                            reaction: comb(k, x, xi * kp, y),
                            load: zero,
                        },
                        FluxRecovery {
                            potential: y.iter().map(|v| a * v).collect(),
                            reaction: y.iter().map(|v| k * v).collect(),
                            load: density.scaled(1.0 / xi),
                        },
                    ]
                }
            };
            let mut recovered = Vec::with_capacity(2);
            let mut fe = Vec::with_capacity(2);
            let mut defect = 0.0_f64;
            for spec in &specs {
                let rec = recover_quad_flux(mesh, spec)?;
                defect = defect.max(membrane::equilibrium_defect(mesh, &rec, spec, RICH_TESTS)?);
                fe.push(membrane::fe_stress(mesh, spec));
                recovered.push(rec);
            }
            let nc = mesh.n_cells();
            let lambda = vec![xi * ap / (2.0 * a); nc];
            let lambda_r = vec![if kp == 0.0 { 0.0 } else { xi * kp / (2.0 * k) }; nc];
            let d1 = recovered[0].sub(&fe[0])?;
            let d2 = recovered[1].sub(&fe[1])?;
            let (r1, r2) = inverse_transform(&d1, &d2, &lambda, &lambda_r)?;
            let galerkin = membrane::basis_defect(mesh, &[&recovered[0], &recovered[1]], &[&fe[0], &fe[1]])?;
            let rec1 = recovered.remove(0);
            let rec2 = recovered.remove(0);
            let fe1 = fe.remove(0);
            let fe2 = fe.remove(0);
            Ok(AdmissibleResidualPair {
                role: pair.role,
                xi,
                sigma_res: r1,
                big_sigma_res: r2,
                lambda,
                lambda_reaction: lambda_r,
                recovered: [rec1, rec2],
                fe: [fe1, fe2],
                equilibrium_defect: defect,
                galerkin_defect: galerkin,
            })
        }
    }
}

/// Load of a single-field problem `K v = load`.
#[derive(Debug, Clone, Copy)]
pub enum SingleLoad<'a> {
    /// The problem load `f`.
    Problem,
    /// The QoI functional `g`.
    Qoi(&'a QoI),
}

/// `recovered - fe` stress of a single-field FE solution and the worst
/// richer-space equilibrium defect of the recovered field.
pub fn single_field_difference(asm: &AssembledProblem, coeffs: &[f64], load: SingleLoad) -> Result<(StressField, f64)> {
    let n = asm.k.dim();
    if coeffs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: coeffs.len(),
        });
    }
    match &asm.problem.model {
        ModelKind::Beam(model) => {
            let mesh = &model.mesh;
            let bl = match load {
                SingleLoad::Problem => {
                    let mut nodal = vec![0.0; n];
                    for &(d, p) in &model.point_loads {
                        nodal[d] += p;
                    }
                    BeamLoad {
                        q: mesh.elements.iter().map(|e| model.q[e.member]).collect(),
                        nodal,
                    }
                }
                SingleLoad::Qoi(q) => BeamLoad {
                    q: vec![0.0; mesh.elements.len()],
                    nodal: q.g.clone(),
                },
            };
            let fe = StressField::Beam {
                moments: beam::fe_moments(model, coeffs, None),
            };
            let rec = recover_beam_moments(model, coeffs, &bl)?;
            let defect = beam::equilibrium_defect(mesh, &rec, &bl, RICH_TESTS)?;
            Ok((rec.sub(&fe)?, defect))
        }
        ModelKind::Membrane(model) => {
            let load = match load {
                SingleLoad::Problem => model.load.clone(),
                SingleLoad::Qoi(q) => q
                    .density
                    .clone()
                    .ok_or_else(|| Error::InvalidInput("membrane QoI without density".into()))?,
            };
            let spec = FluxRecovery {
                potential: coeffs.iter().map(|v| model.a * v).collect(),
                reaction: coeffs.iter().map(|v| model.k * v).collect(),
                load,
            };
            let rec = recover_quad_flux(&model.mesh, &spec)?;
            let defect = membrane::equilibrium_defect(&model.mesh, &rec, &spec, RICH_TESTS)?;
            Ok((rec.sub(&membrane::fe_stress(&model.mesh, &spec))?, defect))
        }
    }
}

/// Number of random richer-space test functions per equilibrium check.
pub const RICH_TESTS: usize = 50;

/// Fails if either defect of a pair exceeds `tol`.
pub fn check_equilibrium(pair: &AdmissibleResidualPair, tol: f64) -> Result<()> {
    for (defect, context) in [
        (pair.equilibrium_defect, "richer-space equilibrium"),
        (pair.galerkin_defect, "coupled residual equilibrium"),
    ] {
        if !(defect <= tol) {
            return Err(Error::EquilibriumViolation {
                defect,
                tolerance: tol,
                context: format!("{} {context}", pair.role.name()),
            });
        }
    }
    Ok(())
}
