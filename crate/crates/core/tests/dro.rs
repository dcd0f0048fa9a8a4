mod common;

use common::{chained_expectation, moment_violation, rng, vertex_max};
use cuopt::cu_sets::{MomentAmbiguityProcess, MomentProcessParts, SupportMode};
use cuopt::dro::{
    assemble_dual, dro_report, moment_sup_lp, nested_dro_value, CostSpec, Direction, StageCost, UTILITY_PIECES,
};
use cuopt::error::Error;
use cuopt::experiments::generators::moment_instance;
use cuopt::numerics::{DenseMatrix, DenseVector};
use proptest::prelude::*;
use rand::Rng;

fn refs(costs: &[CostSpec]) -> Vec<&dyn StageCost> {
    costs.iter().map(|c| c as &dyn StageCost).collect()
}

/// Max of Σ w_i f_i over the scalar moment polytope, by vertex enumeration in w.
fn scalar_stage_max(points: &[f64], center: f64, delta: f64, anchor: f64, cap: f64, f: &[f64]) -> f64 {
    let k = points.len();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..k {
        let mut e = vec![0.0; k];
        e[i] = 1.0;
        rows.push(e);
        rhs.push(0.0);
    }
    rows.push(vec![1.0; k]);
    rhs.push(1.0);
    rows.push(vec![-1.0; k]);
    rhs.push(-1.0);
    rows.push(points.to_vec());
    rhs.push(center - delta);
    rows.push(points.iter().map(|p| -p).collect());
    rhs.push(-(center + delta));
    rows.push(points.iter().map(|p| -(p - anchor).powi(2)).collect());
    rhs.push(-cap);
    vertex_max(&rows, &rhs, f).expect("feasible stage set")
}

/// Nested sup for a scalar two-period fixed-support process, rebuilt from the
/// raw process data (conditional mean a·d_1 + b, default anchor a·mean(Ξ_1) + b).
fn scalar_nested_oracle(p: &MomentAmbiguityProcess, costs: &[&dyn StageCost], sign: f64) -> f64 {
    let s1: Vec<f64> = p.support(0).iter().map(|v| v[0]).collect();
    let s2: Vec<f64> = p.support(1).iter().map(|v| v[0]).collect();
    let (a, b) = p.mean_step(1);
    let (a, b) = (a[(0, 0)], b[0]);
    let mean1 = s1.iter().sum::<f64>() / s1.len() as f64;
    let anchor2 = a * mean1 + b;
    let h2: Vec<f64> = s2.iter().map(|d| sign * costs[1].eval(&[*d])).collect();
    let g2: Vec<f64> = s1
        .iter()
        .map(|d1| scalar_stage_max(&s2, a * d1 + b, p.delta(1)[0], anchor2, p.sigma_cap(1)[(0, 0)], &h2))
        .collect();
    let h1: Vec<f64> = s1.iter().zip(&g2).map(|(d, g)| sign * costs[0].eval(&[*d]) + g).collect();
    let mu1 = p.mu1()[0];
    sign * scalar_stage_max(&s1, mu1, p.delta(0)[0], mu1, p.sigma_cap(0)[(0, 0)], &h1)
}

#[test]
fn nested_value_matches_vertex_oracle() {
    for i in 0..60 {
        let (p, costs) = moment_instance(21, i, 5).unwrap();
        let c = refs(&costs);
        let sup = nested_dro_value(&p, &c, Direction::Sup).unwrap();
        let want = scalar_nested_oracle(&p, &c, 1.0);
        assert!((sup.value - want).abs() <= 1e-7 * (1.0 + want.abs()), "instance {i} sup: {} vs {want}", sup.value);
        let inf = nested_dro_value(&p, &c, Direction::Inf).unwrap();
        let want = scalar_nested_oracle(&p, &c, -1.0);
        assert!((inf.value - want).abs() <= 1e-7 * (1.0 + want.abs()), "instance {i} inf: {} vs {want}", inf.value);
        assert!(inf.value <= sup.value + 1e-9);
    }
}

#[test]
fn bounds_are_ordered() {
    let mut strict = 0;
    for i in 0..40 {
        let (p, costs) = moment_instance(22, i, 5).unwrap();
        let r = dro_report(&p, &refs(&costs)).unwrap();
        assert!(r.primal <= r.exact_dual + 1e-4, "instance {i}: {r:?}");
        assert!(r.exact_dual <= r.conservative_dual + 1e-7, "instance {i}: {r:?}");
        if r.gaps.conservative_minus_exact > 1e-4 {
            strict += 1;
        }
    }
    // the per-stage dual is a genuine relaxation on some instances
    assert!(strict > 0);
}

#[test]
fn conditionals_are_feasible_and_chain_to_the_value() {
    for i in 0..40 {
        let (p, costs) = moment_instance(23, i, 5).unwrap();
        let c = refs(&costs);
        let res = nested_dro_value(&p, &c, Direction::Sup).unwrap();
        for cond in &res.conditionals {
            let prev = cond.path.last().map(|&j| p.support(cond.stage - 2)[j].as_slice());
            let set = p.stage_set(cond.stage - 1, prev).unwrap();
            assert!(moment_violation(&set, &cond.distribution.masses) <= 1e-7, "instance {i} {:?}", cond.path);
        }
        let chained = chained_expectation(&p, &res, &c);
        assert!((chained - res.value).abs() <= 1e-8 * (1.0 + res.value.abs()), "instance {i}: {chained} vs {}", res.value);
        assert!((res.joint_expectation(&p, &c) - res.value).abs() <= 1e-8 * (1.0 + res.value.abs()));
    }
}

fn grid2(n: usize, lo: f64, hi: f64) -> Vec<DenseVector> {
    let step = (hi - lo) / (n - 1) as f64;
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            out.push(DenseVector(vec![lo + i as f64 * step, lo + j as f64 * step]));
        }
    }
    out
}

fn two_asset_process(mode: SupportMode) -> MomentAmbiguityProcess {
    let cap = DenseMatrix::from_rows(&[vec![0.02, 0.004], vec![0.004, 0.03]]).unwrap();
    let supports = match mode {
        SupportMode::Fixed => vec![grid2(4, 0.85, 1.25), grid2(4, 0.85, 1.25)],
        SupportMode::Translated => vec![grid2(3, -0.15, 0.15), grid2(3, -0.15, 0.15)],
    };
    MomentAmbiguityProcess::new(MomentProcessParts {
        support_mode: mode,
        supports,
        mu1: DenseVector(vec![1.05, 1.04]),
        cond_a: vec![DenseMatrix::from_rows(&[vec![0.4, 0.0], vec![0.0, 0.4]]).unwrap()],
        cond_b: vec![DenseVector(vec![0.63, 0.62])],
        delta: vec![DenseVector(vec![0.01, 0.01]), DenseVector(vec![0.01, 0.01])],
        anchors: None,
        sigma_caps: vec![cap.clone(), cap],
    })
    .unwrap()
}

#[test]
fn stage_optimum_dominates_random_feasible_distributions() {
    // PSD cap in two dimensions: compare against random feasible mixtures
    let p = two_asset_process(SupportMode::Fixed);
    let set = p.stage_set(0, None).unwrap();
    let cost = CostSpec::portfolio_utility(&[0.5, 0.5]);
    let f: Vec<f64> = set.support.iter().map(|d| cost.eval(d)).collect();
    let sup = moment_sup_lp(&f, &set, Direction::Sup).unwrap();
    let inf = moment_sup_lp(&f, &set, Direction::Inf).unwrap();
    assert!(moment_violation(&set, &sup.distribution.masses) <= 1e-7);
    assert!(moment_violation(&set, &inf.distribution.masses) <= 1e-7);
    let mut g = rng(5);
    let mut checked = 0;
    for _ in 0..20_000 {
        let raw: Vec<f64> = (0..f.len()).map(|_| g.gen::<f64>().powi(4)).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        if moment_violation(&set, &w) > 0.0 {
            continue;
        }
        checked += 1;
        let e: f64 = w.iter().zip(&f).map(|(a, b)| a * b).sum();
        assert!(e <= sup.value + 1e-8 && e >= inf.value - 1e-8);
    }
    assert!(checked > 10, "only {checked} feasible samples");
}

#[test]
fn two_asset_bounds_are_ordered() {
    let p = two_asset_process(SupportMode::Fixed);
    let costs = vec![CostSpec::portfolio_utility(&[0.6, 0.4]), CostSpec::portfolio_utility(&[0.3, 0.7])];
    let flipped: Vec<[f64; 2]> = UTILITY_PIECES.iter().map(|[s, c]| [-s, -c]).collect();
    let neg = vec![
        CostSpec::PiecewiseMax { x: DenseVector(vec![0.5, 0.5]), pieces: flipped.clone() },
        CostSpec::PiecewiseMax { x: DenseVector(vec![0.2, 0.8]), pieces: flipped },
    ];
    for c in [&costs, &neg] {
        let r = dro_report(&p, &refs(c)).unwrap();
        assert!(r.primal <= r.exact_dual + 1e-4, "{r:?}");
        assert!(r.exact_dual <= r.conservative_dual + 1e-7, "{r:?}");
    }
}

#[test]
fn translated_supports_have_a_primal_but_no_dual() {
    let p = two_asset_process(SupportMode::Translated);
    let costs = vec![CostSpec::portfolio_utility(&[0.6, 0.4]), CostSpec::portfolio_utility(&[0.3, 0.7])];
    let c = refs(&costs);
    let res = nested_dro_value(&p, &c, Direction::Inf).unwrap();
    assert!((res.joint_expectation(&p, &c) - res.value).abs() <= 1e-8);
    for cond in &res.conditionals {
        let realized = p.realize(&cond.path);
        let set = p.stage_set(cond.stage - 1, realized.last().map(|v| v.as_slice())).unwrap();
        assert!(moment_violation(&set, &cond.distribution.masses) <= 1e-7);
    }
    for per_point in [true, false] {
        assert!(matches!(assemble_dual(&p, &c, per_point), Err(Error::UnsupportedModel(_))));
    }
}

#[test]
fn infeasible_stage_set_is_reported() {
    let mut parts = MomentProcessParts {
        support_mode: SupportMode::Fixed,
        supports: vec![vec![DenseVector(vec![0.0]), DenseVector(vec![1.0])]],
        mu1: DenseVector(vec![3.0]),
        cond_a: vec![],
        cond_b: vec![],
        delta: vec![DenseVector(vec![0.1])],
        anchors: None,
        sigma_caps: vec![DenseMatrix::from_rows(&[vec![1.0]]).unwrap()],
    };
    assert!(matches!(MomentAmbiguityProcess::new(parts.clone()), Err(Error::InfeasibleMomentSet { .. })));
    parts.mu1 = DenseVector(vec![0.5]);
    assert!(MomentAmbiguityProcess::new(parts).is_ok());
}

/// `scale · base + shift`, applied pointwise.
struct Affine {
    base: CostSpec,
    scale: f64,
    shift: f64,
}

impl StageCost for Affine {
    fn eval(&self, d: &[f64]) -> f64 {
        self.scale * self.base.eval(d) + self.shift
    }
}

fn affine(costs: &[CostSpec], scale: f64, shift: f64) -> Vec<Affine> {
    costs.iter().map(|c| Affine { base: c.clone(), scale, shift }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn inf_is_negated_sup_of_negated_cost(seed in any::<u64>(), idx in 0usize..100) {
        let (p, costs) = moment_instance(seed, idx, 4).unwrap();
        let negated = affine(&costs, -1.0, 0.0);
        let n: Vec<&dyn StageCost> = negated.iter().map(|a| a as &dyn StageCost).collect();
        let inf = nested_dro_value(&p, &refs(&costs), Direction::Inf).unwrap().value;
        let sup_neg = nested_dro_value(&p, &n, Direction::Sup).unwrap().value;
        prop_assert!((inf + sup_neg).abs() <= 1e-8 * (1.0 + inf.abs()));
    }

    #[test]
    fn shifting_costs_shifts_the_value(seed in any::<u64>(), shift in -3.0f64..3.0) {
        let (p, costs) = moment_instance(seed, 0, 4).unwrap();
        let shifted = affine(&costs, 1.0, shift);
        let s: Vec<&dyn StageCost> = shifted.iter().map(|a| a as &dyn StageCost).collect();
        let base = nested_dro_value(&p, &refs(&costs), Direction::Sup).unwrap().value;
        let moved = nested_dro_value(&p, &s, Direction::Sup).unwrap().value;
        prop_assert!((moved - base - 2.0 * shift).abs() <= 1e-7 * (1.0 + base.abs()));
    }
}
