mod common;

use common::{lp_vertex_value, random_lp, rng};
use cuopt::lp::{
    parse_lp_text, solve_lp, solve_with_psd_cuts, write_lp_text, LpProblem, LpStatus, Objective, PsdBlock, PsdBlockSpec,
    RowSense,
};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn random_lps_match_vertex_enumeration() {
    let mut g = rng(91);
    for k in 0..150 {
        let (n, m) = (g.gen_range(1..=6), g.gen_range(1..=6));
        let p = random_lp(&mut g, n, m);
        let sol = solve_lp(&p).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal, "instance {k}");
        let oracle = lp_vertex_value(&p).expect("bounded feasible LP has a vertex");
        assert!((sol.objective - oracle).abs() <= 1e-8, "instance {k}: {} vs {}", sol.objective, oracle);
        let c = sol.check(&p);
        assert!(c.max_complementarity <= 1e-7 && c.primal_residual <= 1e-9 && c.gap <= 1e-8, "instance {k}: {c:?}");
    }
}

#[test]
fn infeasible_rows_yield_farkas_certificate() {
    let mut p = LpProblem::new(Objective::Min);
    let x = p.add_var(0.0, 4.0, 1.0);
    let y = p.add_var(0.0, 4.0, 1.0);
    p.add_row(vec![(x, 1.0), (y, 1.0)], RowSense::Ge, 3.0);
    p.add_row(vec![(x, 1.0), (y, 1.0)], RowSense::Le, 2.0);
    let s = solve_lp(&p).unwrap();
    assert_eq!(s.status, LpStatus::Infeasible);
    assert!(lp_vertex_value(&p).is_none());
    assert!(s.certificate.is_some());
}

#[test]
fn unbounded_direction() {
    let mut p = LpProblem::new(Objective::Max);
    let x = p.add_var(0.0, f64::INFINITY, 1.0);
    let y = p.add_var(0.0, f64::INFINITY, -1.0);
    p.add_row(vec![(x, 1.0), (y, -2.0)], RowSense::Le, 1.0);
    let s = solve_lp(&p).unwrap();
    assert_eq!(s.status, LpStatus::Unbounded);
    let ray = s.certificate.unwrap();
    // an improving ray that keeps the row satisfied
    assert!(ray[0] - ray[1] > 0.0 && ray[0] - 2.0 * ray[1] <= 1e-12);
}

#[test]
fn psd_cut_loop_two_by_two() {
    // min X11 + X22 with X12 = 1 and X ⪰ 0: optimum X = [[1, 1], [1, 1]], value 2
    let mut p = LpProblem::new(Objective::Min);
    let a = p.add_free_var(1.0);
    let b = p.add_free_var(0.0);
    let c = p.add_free_var(1.0);
    p.add_row(vec![(b, 1.0)], RowSense::Eq, 1.0);
    let block = PsdBlock::symmetric_variable(&[vec![a, b], vec![b, c]]).unwrap();
    let res = solve_with_psd_cuts(&p, &PsdBlockSpec::new(vec![block])).unwrap();
    assert!((res.solution.objective - 2.0).abs() < 1e-5);
    let x = &res.solution.x;
    assert!(x[a] * x[c] - x[b] * x[b] >= -1e-5 && x[a] >= -1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_round_trip_is_byte_stable(seed in any::<u64>(), n in 1usize..5, m in 0usize..5) {
        let p = random_lp(&mut rng(seed), n, m);
        let text = write_lp_text(&p);
        let back = parse_lp_text(&text).unwrap();
        prop_assert_eq!(write_lp_text(&back), text);
        let (a, b) = (solve_lp(&p).unwrap(), solve_lp(&back).unwrap());
        prop_assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }

    #[test]
    fn duals_are_shadow_prices(seed in any::<u64>()) {
        let mut g = rng(seed);
        let p = random_lp(&mut g, 3, 3);
        let s = solve_lp(&p).unwrap();
        prop_assume!(s.status == LpStatus::Optimal);
        let c = s.check(&p);
        prop_assert!((c.dual_objective - s.objective).abs() <= 1e-8 * (1.0 + s.objective.abs()));
    }
}
