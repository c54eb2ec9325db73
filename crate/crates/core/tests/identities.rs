mod common;

use common::{clamped_midspan, prager_synge_defect};
use sensbound::bounds::{cre_estimator, cross_term, plain_qoi_bounds, sensitivity_bounds, symmetric_bounds};
use sensbound::equilibration::{build_admissible_pair, single_field_difference, SingleLoad};
use sensbound::forms::{assemble_qoi, membrane_average, ParamProblem, Parameter, QoiTarget, MEMBRANE_MEAN};
use sensbound::linalg::DEFAULT_REL_TOL;
use sensbound::sensitivity::{evaluate_qoi, solve_adjoint_pair, solve_primal_pair};

#[test]
fn prager_synge_identity_holds() {
    for (n, c0, c1) in [(1, 0.2, 0.4), (2, 0.3, -0.7), (4, -1.0, 2.0), (7, 1e-3, 5e-3)] {
        let d = prager_synge_defect(n, c0, c1);
        assert!(d < 1e-10, "n={n}: {d:e}");
    }
}

#[test]
fn clamped_midspan_deflection_is_bracketed() {
    let exact = 1.0 / 384.0;
    for n in [2, 4, 6] {
        let (asm, q) = clamped_midspan(n);
        let r = plain_qoi_bounds(&asm, &q).unwrap();
        // the point-load adjoint is recovered exactly, so the interval
        // collapses onto the nodally exact FE value; only solver rounding
        // separates it from the closed form
        let slack = if n == 2 { 4.0 * f64::EPSILON } else { 1e-12 } * exact;
        assert!(r.lower - slack <= exact && exact <= r.upper + slack, "n={n}: {r:?}");
        assert!(r.e_primal > 0.0 && r.e_dual < 1e-12 * r.e_primal);
        assert!(r.meta.equil_res < 1e-10);
    }
}

#[test]
fn membrane_average_is_bracketed() {
    let q_of = |n: usize| {
        let p = ParamProblem::membrane(n, Parameter::Beta1, MEMBRANE_MEAN, 1.0).unwrap();
        let asm = p.assemble(DEFAULT_REL_TOL).unwrap();
        let q = assemble_qoi(&p, membrane_average()).unwrap();
        plain_qoi_bounds(&asm, &q).unwrap()
    };
    let reference = q_of(128).quantity_value;
    for n in [8, 16] {
        let r = q_of(n);
        assert!(r.brackets(reference), "n={n}: {r:?} vs {reference}");
    }
}

#[test]
fn uncoupled_case_reduces_to_symmetric_bounds() {
    // membrane beta_2 has K' = 0: the pairs decouple into `K u = f`,
    // `K U = xi f'` and `K W = g / xi`, with w = 0
    let xi = 0.7;
    let p = ParamProblem::membrane(8, Parameter::Beta2, MEMBRANE_MEAN, xi).unwrap();
    let asm = p.assemble(DEFAULT_REL_TOL).unwrap();
    let q = assemble_qoi(&p, membrane_average()).unwrap();
    let pr = solve_primal_pair(&asm).unwrap();
    let ad = solve_adjoint_pair(&asm, &q).unwrap();
    let j = evaluate_qoi(&pr, &q).unwrap();
    let pp = build_admissible_pair(&asm, &pr, None).unwrap();
    let pd = build_admissible_pair(&asm, &ad, Some(&q)).unwrap();
    let full = sensitivity_bounds(&pp, &pd, j, &p).unwrap();

    let sensbound::ModelKind::Membrane(m) = &p.model else { unreachable!() };
    let second_load = m.load_prime.scaled(xi);
    let g_second: Vec<f64> = asm.f_prime.iter().map(|v| xi * v).collect();
    let q_second = assemble_qoi(&p, QoiTarget::Custom { g: g_second, density: Some(second_load) }).unwrap();
    let q_adj = assemble_qoi(
        &p,
        QoiTarget::Custom {
            g: q.g.iter().map(|v| v / xi).collect(),
            density: q.density.as_ref().map(|d| d.scaled(1.0 / xi)),
        },
    )
    .unwrap();
    let (du, _) = single_field_difference(&asm, &pr.first, SingleLoad::Problem).unwrap();
    let (d_big_u, _) = single_field_difference(&asm, &pr.second, SingleLoad::Qoi(&q_second)).unwrap();
    let (d_big_w, _) = single_field_difference(&asm, &ad.second, SingleLoad::Qoi(&q_adj)).unwrap();
    let first = symmetric_bounds(&p, &du, &du, 0.0).unwrap();
    let second = symmetric_bounds(&p, &d_big_u, &d_big_w, j).unwrap();

    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    assert!(close(full.e_primal, first.e_primal.hypot(second.e_primal)), "{full:?} {first:?} {second:?}");
    assert!(close(full.e_dual, second.e_dual));
    assert!(close(full.correction, second.correction));
    let kappa = (second.e_dual / first.e_primal.hypot(second.e_primal)).sqrt();
    assert!(close(full.kappa, kappa));
}

#[test]
fn estimator_parts_and_cross_term_on_real_pairs() {
    let p = ParamProblem::portal_frame(&Default::default(), 4, Parameter::Beta1, [1.0, 1.0], 1.3).unwrap();
    let asm = p.assemble(DEFAULT_REL_TOL).unwrap();
    let q = assemble_qoi(&p, sensbound::forms::frame_sway_at_c(&Default::default())).unwrap();
    let pp = build_admissible_pair(&asm, &solve_primal_pair(&asm).unwrap(), None).unwrap();
    let pd = build_admissible_pair(&asm, &solve_adjoint_pair(&asm, &q).unwrap(), Some(&q)).unwrap();
    let ep = cre_estimator(&pp, &p).unwrap();
    let ed = cre_estimator(&pd, &p).unwrap();
    assert!((ep.value.powi(2) - ep.parts.iter().sum::<f64>()).abs() <= 1e-14 * ep.value.powi(2));
    let a = cross_term(&pp, &pd, &p).unwrap();
    assert!((a - cross_term(&pd, &pp, &p).unwrap()).abs() <= 1e-13 * a.abs());
    assert!(a.abs() <= ep.value * ed.value);
    let self_term = cross_term(&pp, &pp, &p).unwrap();
    assert!((self_term - ep.value.powi(2)).abs() <= 1e-13 * self_term);
}
