#![allow(dead_code)]

use sensbound::equilibration::{recover_beam_moments, single_field_difference, BeamLoad, SingleLoad};
use sensbound::forms::{assemble_qoi, AssembledProblem, BeamModel, ModelKind, ParamProblem, Parameter, QoiTarget};
use sensbound::linalg::DEFAULT_REL_TOL;
use sensbound::mesh::{build_single_span, DofKind, SpanEnd, StiffnessProfile};
use sensbound::poly::Poly;
use sensbound::StressField;

/// Clamped unit beam, `EI = 1`, uniform load `q`, on `n` elements.
pub fn clamped_beam(n: usize, q: f64) -> ParamProblem {
    let mesh = build_single_span(1.0, n, SpanEnd::Clamped, SpanEnd::Clamped, StiffnessProfile::Uniform { ei: 1.0 })
        .unwrap();
    let model = BeamModel {
        mesh,
        ei: vec![Poly::constant(1.0)],
        ei_prime: vec![Poly::zero()],
        q: vec![q],
        q_prime: vec![0.0],
        point_loads: vec![],
        point_loads_prime: vec![],
    };
    ParamProblem::new(ModelKind::Beam(model), Parameter::Beta1, [1.0, 1.0], 1.0).unwrap()
}

/// Exact bending moment `EI w''` of the clamped beam under unit load.
pub fn clamped_exact_moment() -> Poly {
    Poly::new(vec![1.0 / 12.0, -0.5, 0.5])
}

pub fn midspan_deflection() -> QoiTarget {
    QoiTarget::BeamNode {
        member: 0,
        s: 0.5,
        kind: DofKind::Deflection,
    }
}

/// `sum_e int_e x y` for per-element polynomials in local coordinates.
pub fn beam_inner(asm: &AssembledProblem, x: &[Poly], y: &[Poly]) -> f64 {
    let ModelKind::Beam(model) = &asm.problem.model else {
        panic!("beam expected")
    };
    model
        .mesh
        .elements
        .iter()
        .zip(x.iter().zip(y))
        .map(|(e, (a, b))| (a * b).integrate(0.0, e.length()))
        .sum()
}

/// Relative defect of the Prager-Synge identity
/// `|s - M_h|^2 = |s - M|^2 + |M - M_h|^2` for the clamped unit beam, with
/// `s` the recovered moment plus the self-equilibrated field `c0 + c1 x`
/// and `M_h` the FE moment on `n` elements.
pub fn prager_synge_defect(n: usize, c0: f64, c1: f64) -> f64 {
    let problem = clamped_beam(n, 1.0);
    let asm = problem.assemble(DEFAULT_REL_TOL).unwrap();
    let ModelKind::Beam(model) = &asm.problem.model else {
        unreachable!()
    };
    let (u, _) = asm.factor.solve(&asm.f).unwrap();
    let load = BeamLoad {
        q: vec![1.0; n],
        nodal: vec![0.0; model.mesh.n_free],
    };
    let StressField::Beam { moments: rec } = recover_beam_moments(model, &u, &load).unwrap() else {
        unreachable!()
    };
    let (StressField::Beam { moments: diff }, _) = single_field_difference(&asm, &u, SingleLoad::Problem).unwrap()
    else {
        unreachable!()
    };
    let exact = clamped_exact_moment();
    let mut s_hat = Vec::new();
    let mut fe = Vec::new();
    let mut ex = Vec::new();
    for (e, (r, d)) in model.mesh.elements.iter().zip(rec.iter().zip(&diff)) {
        let shift = Poly::new(vec![c0 + c1 * e.s_a, c1]);
        s_hat.push(r + &shift);
        fe.push(r - d);
        ex.push(exact.shifted(e.s_a));
    }
    let sub = |a: &[Poly], b: &[Poly]| -> Vec<Poly> { a.iter().zip(b).map(|(x, y)| x - y).collect() };
    let lhs_f = sub(&s_hat, &fe);
    let a_f = sub(&s_hat, &ex);
    let b_f = sub(&ex, &fe);
    let lhs = beam_inner(&asm, &lhs_f, &lhs_f);
    let a = beam_inner(&asm, &a_f, &a_f);
    let b = beam_inner(&asm, &b_f, &b_f);
    (lhs - a - b).abs() / lhs
}

/// Midspan QoI of the clamped beam.
pub fn clamped_midspan(n: usize) -> (AssembledProblem, sensbound::QoI) {
    let problem = clamped_beam(n, 1.0);
    let asm = problem.assemble(DEFAULT_REL_TOL).unwrap();
    let q = assemble_qoi(&problem, midspan_deflection()).unwrap();
    (asm, q)
}
