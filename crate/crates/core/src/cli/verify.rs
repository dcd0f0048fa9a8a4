use serde::{Deserialize, Serialize};

use crate::dro::{dro_report, nested_dro_value, Direction, StageCost};
use crate::error::Result;
use crate::experiments::generators;
use crate::ro::{
    aro_ellipsoidal_rows, center_cu_lhs, matrix_cu_lhs, matrix_sampled_worst_case, nested_worst_case_oracle,
    polyhedral_dual_min, polyhedral_worst_case, OracleMode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Center counterpart against the scalar endpoint recursion.
    Exactness,
    /// Covariance counterpart against sampled nested worst cases.
    Conservativeness,
    /// Polyhedral dual minimum against the primal worst case.
    Duality,
    /// Ellipsoidal ARO residuals against endpoint enumeration.
    Aro,
    /// Nested primal ≤ exact dual ≤ conservative dual.
    Dro,
    All,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Exactness => "exactness",
            Suite::Conservativeness => "conservativeness",
            Suite::Duality => "duality",
            Suite::Aro => "aro",
            Suite::Dro => "dro",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub instances: usize,
    /// Largest tolerance-normalized violation; the suite passes when ≤ 1.
    pub max_ratio: f64,
    pub max_gap: f64,
    pub tolerance: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
    pub pass: bool,
}

struct Gaps {
    max_ratio: f64,
    max_gap: f64,
}

impl Gaps {
    fn new() -> Self {
        Gaps { max_ratio: 0.0, max_gap: 0.0 }
    }

    /// Records a violation `gap` (≤ 0 means satisfied) against tolerance `tol`.
    fn push(&mut self, gap: f64, tol: f64) {
        self.max_gap = self.max_gap.max(gap);
        self.max_ratio = self.max_ratio.max(gap / tol);
    }

    fn report(self, suite: Suite, instances: usize, tolerance: &str) -> SuiteReport {
        SuiteReport {
            suite: suite.name().into(),
            instances,
            max_ratio: self.max_ratio,
            max_gap: self.max_gap,
            tolerance: tolerance.into(),
            pass: self.max_ratio <= 1.0,
        }
    }
}

fn exactness(seed: u64, n: usize) -> Result<SuiteReport> {
    let mut g = Gaps::new();
    for i in 0..n {
        let (p, x) = generators::center_instance(seed, i, 1, 1 + i % 4);
        let (lhs, _) = center_cu_lhs(&x, &p)?;
        let oracle = nested_worst_case_oracle(&x, &p, OracleMode::Exact1d)?;
        g.push((lhs - oracle).abs(), 1e-10 * (1.0 + lhs.abs()));
    }
    Ok(g.report(Suite::Exactness, n, "|lhs - exact1d| <= 1e-10 (1 + |lhs|)"))
}

fn conservativeness(seed: u64, n: usize) -> Result<SuiteReport> {
    let mut g = Gaps::new();
    for i in 0..n {
        let (p, x) = generators::matrix_instance(seed, i, 2 + i % 2);
        let (lhs, _) = matrix_cu_lhs(&x, &p)?;
        let sampled = matrix_sampled_worst_case(&x, &p, 2000, seed ^ i as u64)?;
        g.push(sampled - lhs, 1e-9);
    }
    Ok(g.report(Suite::Conservativeness, n, "sampled worst case <= lhs + 1e-9"))
}

fn duality(seed: u64, n: usize) -> Result<SuiteReport> {
    let mut g = Gaps::new();
    for i in 0..n {
        let (p, x) = generators::polyhedral_instance(seed, i, 1 + i % 4, 1 + i % 3, 8);
        let (primal, _) = polyhedral_worst_case(&x, &p)?;
        let (dual, _) = polyhedral_dual_min(&x, &p)?;
        g.push((primal - dual).abs(), 1e-7 * (1.0 + primal.abs()));
    }
    Ok(g.report(Suite::Duality, n, "|dual - primal| <= 1e-7 (1 + |primal|)"))
}

fn aro(seed: u64, n: usize) -> Result<SuiteReport> {
    let mut g = Gaps::new();
    for i in 0..n {
        let inst = generators::aro_ellipsoidal_instance(seed, i);
        let rows = aro_ellipsoidal_rows(&inst)?;
        let (mu, l1, l2) = (inst.mu1[0], inst.l1[(0, 0)], inst.l2[(0, 0)]);
        for (r, res) in rows.iter().enumerate() {
            let b = inst.b2[(r, 0)];
            let ax = inst.x2_rule.tr_mul_vec(inst.a22.row(r))[0];
            let mut worst = f64::NEG_INFINITY;
            for u1 in [-inst.r1, inst.r1] {
                for u2 in [-inst.r2, inst.r2] {
                    let d1 = mu + l1 * u1;
                    let d2 = inst.a2[(0, 0)] * mu + inst.f2[(0, 0)] * d1 + inst.c2[0] + l2 * u2;
                    worst = worst.max(b * d2 - ax * d1);
                }
            }
            let direct = worst - inst.a21.row(r).iter().zip(inst.x1.iter()).map(|(a, x)| a * x).sum::<f64>();
            g.push((direct - res).abs(), 1e-9);
        }
    }
    Ok(g.report(Suite::Aro, n, "|residual - endpoint worst case| <= 1e-9"))
}

fn dro(seed: u64, n: usize) -> Result<SuiteReport> {
    let mut g = Gaps::new();
    for i in 0..n {
        let (p, costs) = generators::moment_instance(seed, i, 5)?;
        let refs: Vec<&dyn StageCost> = costs.iter().map(|c| c as &dyn StageCost).collect();
        let rep = dro_report(&p, &refs)?;
        g.push(rep.primal - rep.exact_dual, 1e-4);
        g.push(rep.exact_dual - rep.conservative_dual, 1e-7);
        let nested = nested_dro_value(&p, &refs, Direction::Sup)?;
        g.push((nested.joint_expectation(&p, &refs) - nested.value).abs(), 1e-8);
    }
    Ok(g.report(Suite::Dro, n, "primal <= exact + 1e-4; exact <= conservative + 1e-7; |joint - nested| <= 1e-8"))
}

pub fn run_suite(suite: Suite, seed: u64, instances: usize) -> Result<VerifyReport> {
    let list = match suite {
        Suite::All => vec![Suite::Exactness, Suite::Conservativeness, Suite::Duality, Suite::Aro, Suite::Dro],
        s => vec![s],
    };
    let mut suites = Vec::with_capacity(list.len());
    for s in list {
        suites.push(match s {
            Suite::Exactness => exactness(seed, instances)?,
            Suite::Conservativeness => conservativeness(seed, instances)?,
            Suite::Duality => duality(seed, instances)?,
            Suite::Aro => aro(seed, instances)?,
            Suite::Dro => dro(seed, instances)?,
            Suite::All => unreachable!("expanded above"),
        });
    }
    let pass = suites.iter().all(|s| s.pass);
    Ok(VerifyReport { seed, suites, pass })
}
