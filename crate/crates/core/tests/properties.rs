use std::sync::OnceLock;

use proptest::prelude::*;

use sensbound::bounds::{cre_estimator, cross_term, optimal_kappa, sensitivity_bounds};
use sensbound::equilibration::{build_admissible_pair, AdmissibleResidualPair};
use sensbound::forms::{
    assemble_qoi, frame_rotation_at_b, frame_sway_at_c, membrane_average, ParamProblem, Parameter, QoiTarget,
    FRAME_MEAN, MEMBRANE_MEAN,
};
use sensbound::harness::fit_rate;
use sensbound::harness::output::{csv_string, parse_csv};
use sensbound::harness::StudyRow;
use sensbound::linalg::DEFAULT_REL_TOL;
use sensbound::mesh::PortalFrame;
use sensbound::sensitivity::{evaluate_qoi, solve_adjoint_pair, solve_primal_pair};

struct Bounded {
    j_h: f64,
    lower: f64,
    upper: f64,
    e_primal: f64,
    pairs: (AdmissibleResidualPair, AdmissibleResidualPair),
    problem: ParamProblem,
}

fn target(problem: &ParamProblem, parameter: Parameter) -> QoiTarget {
    match (&problem.model, parameter) {
        (sensbound::ModelKind::Beam(_), Parameter::Beta1) => frame_sway_at_c(&PortalFrame::default()),
        (sensbound::ModelKind::Beam(_), Parameter::Beta2) => frame_rotation_at_b(&PortalFrame::default()),
        _ => membrane_average(),
    }
}

fn bound(problem: ParamProblem) -> Bounded {
    let asm = problem.assemble(DEFAULT_REL_TOL).unwrap();
    let q = assemble_qoi(&problem, target(&problem, problem.parameter)).unwrap();
    let pr = solve_primal_pair(&asm).unwrap();
    let ad = solve_adjoint_pair(&asm, &q).unwrap();
    let j_h = evaluate_qoi(&pr, &q).unwrap();
    let pp = build_admissible_pair(&asm, &pr, None).unwrap();
    let pd = build_admissible_pair(&asm, &ad, Some(&q)).unwrap();
    let r = sensitivity_bounds(&pp, &pd, j_h, &problem).unwrap();
    Bounded {
        j_h,
        lower: r.lower,
        upper: r.upper,
        e_primal: r.e_primal,
        pairs: (pp, pd),
        problem,
    }
}

fn frame(m: usize, parameter: Parameter, xi: f64) -> ParamProblem {
    ParamProblem::portal_frame(&PortalFrame::default(), m, parameter, FRAME_MEAN, xi).unwrap()
}

/// Frame `J(u'_h)` on the reference mesh; independent of `xi`.
fn frame_reference(parameter: Parameter) -> f64 {
    static REF: OnceLock<[f64; 2]> = OnceLock::new();
    REF.get_or_init(|| [Parameter::Beta1, Parameter::Beta2].map(|p| bound(frame(50, p, 1.0)).j_h))[parameter.index()]
}

fn parameter() -> impl Strategy<Value = Parameter> {
    prop_oneof![Just(Parameter::Beta1), Just(Parameter::Beta2)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn frame_bounds_are_strict(m in 1usize..=12, p in parameter(), xi in 0.05f64..1.95) {
        let b = bound(frame(m, p, xi));
        let j = frame_reference(p);
        prop_assert!(b.lower <= j && j <= b.upper, "m={} xi={}: {} not in [{}, {}]", m, xi, j, b.lower, b.upper);
    }

    #[test]
    fn sensitivity_value_is_independent_of_xi(m in 1usize..=8, p in parameter(), xi in 0.05f64..1.95) {
        let a = bound(frame(m, p, xi)).j_h;
        let b = bound(frame(m, p, 1.0)).j_h;
        prop_assert!((a - b).abs() <= 1e-11 * b.abs());
    }

    #[test]
    fn transform_round_trip_and_cauchy_schwarz(m in 1usize..=8, p in parameter(), xi in 0.05f64..1.95) {
        let b = bound(frame(m, p, xi));
        let (pp, pd) = &b.pairs;
        for pair in [pp, pd] {
            let (f1, f2) = pair.forward_transform().unwrap();
            let (d1, d2) = pair.differences().unwrap();
            let scale = d1.max_abs().max(d2.max_abs()).max(f64::MIN_POSITIVE);
            prop_assert!(f1.sub(&d1).unwrap().max_abs() <= 1e-12 * scale);
            prop_assert!(f2.sub(&d2).unwrap().max_abs() <= 1e-12 * scale);
            let e = cre_estimator(pair, &b.problem).unwrap();
            prop_assert!(e.value >= 0.0);
            prop_assert!((e.value * e.value - e.parts.iter().sum::<f64>()).abs() <= 1e-13 * e.value * e.value + 1e-300);
        }
        let ep = cre_estimator(pp, &b.problem).unwrap().value;
        let ed = cre_estimator(pd, &b.problem).unwrap().value;
        let a = cross_term(pp, pd, &b.problem).unwrap();
        prop_assert!(a.abs() <= ep * ed * (1.0 + 1e-12));
        prop_assert!(((b.upper - b.lower) - ep * ed).abs() <= 1e-13 * ep * ed + 4.0 * f64::EPSILON * b.j_h.abs());
    }

    #[test]
    fn estimator_decreases_under_refinement(m in 1usize..=8, p in parameter(), xi in 0.05f64..1.95) {
        let coarse = bound(frame(m, p, xi)).e_primal;
        let fine = bound(frame(2 * m, p, xi)).e_primal;
        prop_assert!(fine <= coarse);
    }

    #[test]
    fn fit_rate_recovers_power_laws(c in 0.01f64..100.0, rate in 0.5f64..6.0, h0 in 0.05f64..1.0, r in 1.5f64..3.0) {
        let h: Vec<f64> = (0..4).map(|i| h0 / r.powi(i)).collect();
        let y: Vec<f64> = h.iter().map(|h| c * h.powf(rate)).collect();
        prop_assert!((fit_rate(&h, &y).unwrap() - rate).abs() < 1e-10);
    }

    #[test]
    fn optimal_kappa_balances_the_split(ep in 1e-8f64..1e3, ed in 1e-8f64..1e3) {
        let k = optimal_kappa(ep, ed);
        prop_assert!(((k * ep).powi(2) - (ed / k).powi(2)).abs() <= 1e-12 * ep * ed);
    }

    #[test]
    fn csv_round_trip_is_bit_exact(v in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 10)) {
        let row = StudyRow {
            h: v[0], xi: v[1], j_h: v[2], lower: v[3], upper: v[4], gap: v[5],
            re_jh: v[6], re_gap: v[7], solver_res: v[8], equil_res: v[9],
        };
        let back = parse_csv(&csv_string(std::slice::from_ref(&row)).unwrap()).unwrap();
        let bits = |r: &StudyRow| [r.h, r.xi, r.j_h, r.lower, r.upper, r.gap, r.re_jh, r.re_gap, r.solver_res, r.equil_res].map(f64::to_bits);
        prop_assert_eq!(bits(&row), bits(&back[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn membrane_bounds_are_strict(beta1 in 0.5f64..2.0, p in parameter(), xi_frac in 0.05f64..0.95, fine in any::<bool>()) {
        let n = if fine { 16 } else { 8 };
        // xi below 2 beta_1 keeps the beta_1 coupling admissible
        let xi = xi_frac * 2.0 * beta1;
        let betas = [beta1, MEMBRANE_MEAN[1]];
        let b = bound(ParamProblem::membrane(n, p, betas, xi).unwrap());
        let j = bound(ParamProblem::membrane(4 * n, p, betas, 1.0).unwrap()).j_h;
        prop_assert!(b.lower <= j && j <= b.upper, "n={} beta1={} xi={}: {} not in [{}, {}]", n, beta1, xi, j, b.lower, b.upper);
    }
}
