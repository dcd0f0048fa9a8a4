use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::output::{fmt_opt, fmt_sig, CsvTable};
use crate::cu_sets::{check_len, KnapsackUncertaintyModel};
use crate::error::{Error, Result};
use crate::numerics::{cholesky, dot, two_norm, DenseMatrix, DenseVector};
use crate::rng;

pub const MAX_EXHAUSTIVE_ITEMS: usize = 24;
pub const MAX_BNB_ITEMS: usize = 40;
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComparisonMode {
    /// Second-period center follows d_1.
    Cu,
    /// Second-period center fixed at μ_1.
    Nc,
}

impl ComparisonMode {
    pub fn tag(self) -> &'static str {
        match self {
            ComparisonMode::Cu => "cu",
            ComparisonMode::Nc => "nc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    #[default]
    BranchAndBound,
    Exhaustive,
}

/// μ_1ᵀ(x_1 + (Φ+Ψ)ᵀx_2) + r_1‖Lᵀ(x_1 + Ψᵀx_2)‖ + r_2‖Lᵀx_2‖
pub fn cu_knapsack_lhs(x1: &[f64], x2: &[f64], model: &KnapsackUncertaintyModel) -> Result<f64> {
    let m = model.dim();
    check_len(x1, m, "x1")?;
    check_len(x2, m, "x2")?;
    let phi_x = model.phi.tr_mul_vec(x2);
    let psi_x = model.psi.tr_mul_vec(x2);
    let y1: Vec<f64> = (0..m).map(|i| x1[i] + phi_x[i] + psi_x[i]).collect();
    let shock: Vec<f64> = (0..m).map(|i| x1[i] + psi_x[i]).collect();
    Ok(dot(&model.mu1, &y1)
        + model.r1 * two_norm(&model.chol.tr_mul_vec(&shock))
        + model.r2 * two_norm(&model.chol.tr_mul_vec(x2)))
}

/// μ_1ᵀx_1 + r_1‖Lᵀx_1‖ + μ_1ᵀx_2 + r_2‖Lᵀx_2‖; Φ and Ψ are ignored.
pub fn nc_knapsack_lhs(x1: &[f64], x2: &[f64], model: &KnapsackUncertaintyModel) -> Result<f64> {
    let m = model.dim();
    check_len(x1, m, "x1")?;
    check_len(x2, m, "x2")?;
    Ok(dot(&model.mu1, x1)
        + model.r1 * two_norm(&model.chol.tr_mul_vec(x1))
        + dot(&model.mu1, x2)
        + model.r2 * two_norm(&model.chol.tr_mul_vec(x2)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnapsackInstance {
    pub c1: DenseVector,
    pub c2: DenseVector,
    pub budget: f64,
    pub model: KnapsackUncertaintyModel,
    pub mode: ComparisonMode,
}

impl KnapsackInstance {
    pub fn new(c1: DenseVector, c2: DenseVector, budget: f64, model: KnapsackUncertaintyModel, mode: ComparisonMode) -> Result<Self> {
        check_len(&c1, model.dim(), "c1")?;
        check_len(&c2, model.dim(), "c2")?;
        if !budget.is_finite() || !c1.is_finite() || !c2.is_finite() {
            return Err(Error::InvalidInstance("budget and objective must be finite".into()));
        }
        Ok(KnapsackInstance { c1, c2, budget, model, mode })
    }

    pub fn items(&self) -> usize {
        2 * self.model.dim()
    }

    /// Counterpart LHS for the stacked decision (x_1; x_2).
    pub fn lhs(&self, x: &[f64]) -> Result<f64> {
        let m = self.model.dim();
        check_len(x, 2 * m, "decision")?;
        match self.mode {
            ComparisonMode::Cu => cu_knapsack_lhs(&x[..m], &x[m..], &self.model),
            ComparisonMode::Nc => nc_knapsack_lhs(&x[..m], &x[m..], &self.model),
        }
    }

    fn costs(&self) -> Vec<f64> {
        self.c1.iter().chain(self.c2.iter()).copied().collect()
    }

    /// Weights of the mean part of the LHS; the norm terms are nonnegative so
    /// this linear form bounds the LHS from below.
    fn mean_weights(&self) -> Vec<f64> {
        let mu = &self.model.mu1;
        let second = match self.mode {
            ComparisonMode::Cu => self.model.phi.add(&self.model.psi).expect("square").mul_vec(mu),
            ComparisonMode::Nc => mu.0.clone(),
        };
        mu.iter().chain(second.iter()).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnapsackSolution {
    pub x1: Vec<u8>,
    pub x2: Vec<u8>,
    pub objective: f64,
    pub lhs: f64,
    pub nodes: u64,
}

impl KnapsackSolution {
    pub fn x1_f64(&self) -> Vec<f64> {
        self.x1.iter().map(|&v| v as f64).collect()
    }

    pub fn x2_f64(&self) -> Vec<f64> {
        self.x2.iter().map(|&v| v as f64).collect()
    }
}

fn objective(c: &[f64], x: &[f64]) -> f64 {
    dot(c, x)
}

fn split(inst: &KnapsackInstance, x: &[f64], objective: f64, lhs: f64, nodes: u64) -> KnapsackSolution {
    let m = inst.model.dim();
    let bits: Vec<u8> = x.iter().map(|&v| v as u8).collect();
    KnapsackSolution { x1: bits[..m].to_vec(), x2: bits[m..].to_vec(), objective, lhs, nodes }
}

/// Maximizes c_1ᵀx_1 + c_2ᵀx_2 over binary x with the counterpart LHS ≤ B.
/// Among optimal decisions the lexicographically smallest (x_1; x_2) wins.
pub fn solve_robust_knapsack(inst: &KnapsackInstance, method: SolveMethod) -> Result<KnapsackSolution> {
    let n = inst.items();
    let zero = vec![0.0; n];
    if inst.lhs(&zero)? > inst.budget + FEAS_TOL {
        return Err(Error::Infeasible("the empty selection violates the budget".into()));
    }
    match method {
        SolveMethod::Exhaustive => {
            if n > MAX_EXHAUSTIVE_ITEMS {
                return Err(Error::InvalidInstance(format!("{n} items exceed the exhaustive cap {MAX_EXHAUSTIVE_ITEMS}")));
            }
            exhaustive(inst)
        }
        SolveMethod::BranchAndBound => {
            if n > MAX_BNB_ITEMS {
                return Err(Error::InvalidInstance(format!("{n} items exceed the branch-and-bound cap {MAX_BNB_ITEMS}")));
            }
            branch_and_bound(inst)
        }
    }
}

fn exhaustive(inst: &KnapsackInstance) -> Result<KnapsackSolution> {
    let n = inst.items();
    let c = inst.costs();
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    let mut x = vec![0.0; n];
    for code in 0u64..(1u64 << n) {
        for (j, v) in x.iter_mut().enumerate() {
            *v = ((code >> (n - 1 - j)) & 1) as f64;
        }
        let obj = objective(&c, &x);
        if best.as_ref().is_some_and(|b| obj <= b.1) {
            continue;
        }
        let lhs = inst.lhs(&x)?;
        if lhs <= inst.budget + FEAS_TOL {
            best = Some((x.clone(), obj, lhs));
        }
    }
    let (x, obj, lhs) = best.expect("the empty selection is feasible");
    Ok(split(inst, &x, obj, lhs, 1u64 << n))
}

struct Search<'a> {
    inst: &'a KnapsackInstance,
    c: Vec<f64>,
    w: Vec<f64>,
    pos_c_tail: Vec<f64>,
    neg_w_tail: Vec<f64>,
    x: Vec<f64>,
    best: (Vec<f64>, f64, f64),
    nodes: u64,
}

impl Search<'_> {
    fn visit(&mut self, depth: usize, value: f64, mean: f64) -> Result<()> {
        self.nodes += 1;
        let inc = self.best.1;
        // keep ties within rounding alive so the lexicographic rule matches exhaustive search
        if value + self.pos_c_tail[depth] < inc - 1e-9 * (1.0 + inc.abs()) {
            return Ok(());
        }
        if mean + self.neg_w_tail[depth] > self.inst.budget + FEAS_TOL {
            return Ok(());
        }
        if depth == self.x.len() {
            let obj = objective(&self.c, &self.x);
            if obj > inc {
                let lhs = self.inst.lhs(&self.x)?;
                if lhs <= self.inst.budget + FEAS_TOL {
                    self.best = (self.x.clone(), obj, lhs);
                }
            }
            return Ok(());
        }
        self.x[depth] = 0.0;
        self.visit(depth + 1, value, mean)?;
        self.x[depth] = 1.0;
        let r = self.visit(depth + 1, value + self.c[depth], mean + self.w[depth]);
        self.x[depth] = 0.0;
        r
    }
}

fn branch_and_bound(inst: &KnapsackInstance) -> Result<KnapsackSolution> {
    let n = inst.items();
    let c = inst.costs();
    let w = inst.mean_weights();
    let mut pos_c_tail = vec![0.0; n + 1];
    let mut neg_w_tail = vec![0.0; n + 1];
    for j in (0..n).rev() {
        pos_c_tail[j] = pos_c_tail[j + 1] + c[j].max(0.0);
        neg_w_tail[j] = neg_w_tail[j + 1] + w[j].min(0.0);
    }
    let zero = vec![0.0; n];
    let lhs0 = inst.lhs(&zero)?;
    let mut s = Search {
        inst,
        c,
        w,
        pos_c_tail,
        neg_w_tail,
        x: zero.clone(),
        best: (zero, 0.0, lhs0),
        nodes: 0,
    };
    s.visit(0, 0.0, 0.0)?;
    let (x, obj, lhs) = s.best.clone();
    Ok(split(inst, &x, obj, lhs, s.nodes))
}

/// Fraction of `n` sampled paths with d_1ᵀx_1 + d_2ᵀx_2 ≤ B, where the
/// residuals are N(0, sigma) and the centers follow `model`.
pub fn constraint_satisfaction(
    x1: &[f64],
    x2: &[f64],
    model: &KnapsackUncertaintyModel,
    sigma: &DenseMatrix,
    budget: f64,
    n: usize,
    seed: u64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInstance("at least one sample required".into()));
    }
    check_len(x1, model.dim(), "x1")?;
    check_len(x2, model.dim(), "x2")?;
    let l = cholesky(&sigma.symmetrized())?;
    let ok = (0..n)
        .filter(|&s| {
            let (d1, d2) = model.sample_path_keyed(&l, seed, &[s as u64]);
            dot(&d1, x1) + dot(&d2, x2) <= budget
        })
        .count();
    Ok(ok as f64 / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnapsackExperimentConfig {
    pub schema_version: u32,
    /// Items per period (m_1 = m_2).
    pub items: usize,
    pub budget: f64,
    pub replications: usize,
    pub estimation_samples: usize,
    pub evaluation_samples: usize,
    pub radius_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    /// λ of the radius sweep.
    pub default_lambda: f64,
    /// r_1 = r_2 of the λ sweep.
    pub sweep_radius: f64,
    /// Diagonal level of the randomly generated residual covariance.
    pub sigma_scale: f64,
    /// Objective coefficients are drawn with covariance `cost_cov_scale`·Σ.
    pub cost_cov_scale: f64,
    pub first_cost_mean: f64,
    pub second_cost_mean: f64,
    #[serde(default)]
    pub method: SolveMethod,
    pub seed: u64,
}

impl Default for KnapsackExperimentConfig {
    fn default() -> Self {
        KnapsackExperimentConfig {
            schema_version: 1,
            items: 10,
            budget: 20.0,
            replications: 10,
            estimation_samples: 500,
            evaluation_samples: 500,
            radius_grid: (0..8).map(|i| 0.5 * i as f64).collect(),
            lambda_grid: (0..9).map(|i| -1.0 + 0.25 * i as f64).collect(),
            default_lambda: 0.5,
            sweep_radius: 2.0,
            sigma_scale: 0.04,
            cost_cov_scale: 0.01,
            first_cost_mean: 1.0,
            second_cost_mean: 1.25,
            method: SolveMethod::BranchAndBound,
            seed: 2024,
        }
    }
}

impl KnapsackExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidInstance(s.into()));
        if self.schema_version != 1 {
            return bad("unsupported schema_version");
        }
        if self.items == 0 || self.replications == 0 || self.evaluation_samples == 0 {
            return bad("counts must be at least 1");
        }
        if self.estimation_samples < 2 {
            return bad("estimation needs at least 2 samples");
        }
        if self.radius_grid.is_empty() && self.lambda_grid.is_empty() {
            return bad("both grids are empty");
        }
        let finite = [self.budget, self.default_lambda, self.sweep_radius, self.sigma_scale, self.cost_cov_scale]
            .iter()
            .chain(&self.radius_grid)
            .chain(&self.lambda_grid)
            .all(|v| v.is_finite());
        if !finite || self.sigma_scale <= 0.0 || self.cost_cov_scale < 0.0 {
            return bad("config values must be finite; sigma_scale > 0");
        }
        if self.radius_grid.iter().chain([&self.sweep_radius]).any(|r| *r < 0.0) {
            return bad("radii must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sweep {
    Radius,
    Lambda,
}

impl Sweep {
    fn tag(self) -> &'static str {
        match self {
            Sweep::Radius => "radius",
            Sweep::Lambda => "lambda",
        }
    }
}

/// One replication of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnapsackReplicate {
    pub sweep: Sweep,
    pub radius: f64,
    pub lambda: f64,
    pub model: ComparisonMode,
    pub replication: usize,
    pub objective: Option<f64>,
    pub satisfied: usize,
    pub nonzero_x1: usize,
    pub nonzero_x2: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnapsackRecord {
    pub sweep: Sweep,
    pub radius: f64,
    pub lambda: f64,
    pub model: ComparisonMode,
    pub replications: usize,
    pub failed: usize,
    /// Objective averaged over satisfied (replication, realization) pairs.
    pub avg_objective: Option<f64>,
    /// Objective averaged over solved replications, ignoring satisfaction.
    pub mean_objective: Option<f64>,
    pub satisfaction: f64,
    pub evaluated: usize,
    pub satisfied: usize,
    pub excluded: usize,
    pub avg_nonzero_x1: f64,
    pub avg_nonzero_x2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnapsackExperimentResult {
    pub config: KnapsackExperimentConfig,
    pub records: Vec<KnapsackRecord>,
    pub replicates: Vec<KnapsackReplicate>,
}

impl KnapsackExperimentResult {
    pub fn record(&self, sweep: Sweep, value: f64, model: ComparisonMode) -> Option<&KnapsackRecord> {
        self.records.iter().find(|r| {
            let v = match sweep {
                Sweep::Radius => r.radius,
                Sweep::Lambda => r.lambda,
            };
            r.sweep == sweep && r.model == model && v == value
        })
    }

    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&[
            "sweep",
            "radius",
            "lambda",
            "model",
            "replications",
            "failed",
            "avg_objective",
            "mean_objective",
            "satisfaction",
            "evaluated",
            "satisfied",
            "excluded",
            "avg_nonzero_x1",
            "avg_nonzero_x2",
        ]);
        for r in &self.records {
            t.push(vec![
                r.sweep.tag().into(),
                fmt_sig(r.radius),
                fmt_sig(r.lambda),
                r.model.tag().into(),
                r.replications.to_string(),
                r.failed.to_string(),
                fmt_opt(r.avg_objective),
                fmt_opt(r.mean_objective),
                fmt_sig(r.satisfaction),
                r.evaluated.to_string(),
                r.satisfied.to_string(),
                r.excluded.to_string(),
                fmt_sig(r.avg_nonzero_x1),
                fmt_sig(r.avg_nonzero_x2),
            ]);
        }
        t.to_csv()
    }
}

/// Everything one replication shares across grid cells.
struct Replication {
    c1: DenseVector,
    c2: DenseVector,
    mu_hat: DenseVector,
    chol_hat: DenseMatrix,
    /// e_1, e_2 residual draws used for evaluation (common to all cells and models).
    residuals: Vec<(Vec<f64>, Vec<f64>)>,
}

/// Σ = s·(½·GGᵀ/m + ½·I) for a standard normal m×m matrix G.
pub fn random_covariance(m: usize, scale: f64, seed: u64, keys: &[u64]) -> DenseMatrix {
    let mut g = rng::stream(seed, keys);
    let entries = rng::standard_normals(&mut g, m * m);
    DenseMatrix::from_fn(m, m, |i, j| {
        let gg: f64 = (0..m).map(|k| entries[i * m + k] * entries[j * m + k]).sum();
        scale * (0.5 * gg / m as f64 + if i == j { 0.5 } else { 0.0 })
    })
}

/// Sample mean and unbiased sample covariance.
pub fn sample_moments(samples: &[Vec<f64>]) -> (DenseVector, DenseMatrix) {
    let n = samples.len();
    let m = samples[0].len();
    let mut mean = vec![0.0; m];
    for s in samples {
        for (a, v) in mean.iter_mut().zip(s) {
            *a += v;
        }
    }
    mean.iter_mut().for_each(|a| *a /= n as f64);
    let mut cov = DenseMatrix::zeros(m, m);
    for s in samples {
        for i in 0..m {
            for j in 0..m {
                cov[(i, j)] += (s[i] - mean[i]) * (s[j] - mean[j]);
            }
        }
    }
    cov.scale_in_place(1.0 / (n as f64 - 1.0));
    (DenseVector(mean), cov)
}

fn replication(cfg: &KnapsackExperimentConfig, true_chol: &DenseMatrix, rep: usize) -> Result<Replication> {
    let m = cfg.items;
    let r = rep as u64;
    let cost_chol = true_chol.scaled(cfg.cost_cov_scale.sqrt());
    let draw_cost = |mean: f64, tag: u64| {
        let z = rng::correlated_normal(&mut rng::stream(cfg.seed, &[1, r, tag]), &cost_chol);
        DenseVector(z.iter().map(|v| mean + v).collect())
    };
    let c1 = draw_cost(cfg.first_cost_mean, 1);
    let c2 = draw_cost(cfg.second_cost_mean, 2);
    let d1: Vec<Vec<f64>> = (0..cfg.estimation_samples)
        .map(|s| {
            let e = rng::correlated_normal(&mut rng::stream(cfg.seed, &[2, r, s as u64]), true_chol);
            e.iter().map(|v| 1.0 + v).collect()
        })
        .collect();
    let (mu_hat, sigma_hat) = sample_moments(&d1);
    let chol_hat = cholesky(&sigma_hat.symmetrized())?;
    let residuals = (0..cfg.evaluation_samples)
        .map(|s| {
            let key = [3, r, s as u64];
            let e1 = rng::correlated_normal(&mut rng::stream(cfg.seed, &[key[0], key[1], key[2], 1]), true_chol);
            let e2 = rng::correlated_normal(&mut rng::stream(cfg.seed, &[key[0], key[1], key[2], 2]), true_chol);
            (e1, e2)
        })
        .collect();
    debug_assert_eq!(mu_hat.len(), m);
    Ok(Replication { c1, c2, mu_hat, chol_hat, residuals })
}

/// Counts paths with d_1ᵀx_1 + d_2ᵀx_2 ≤ B under the true dynamics
/// d_1 = e + e_1, d_2 = e + λd_1 + e_2.
fn satisfied_count(x1: &[f64], x2: &[f64], lambda: f64, budget: f64, residuals: &[(Vec<f64>, Vec<f64>)]) -> usize {
    residuals
        .iter()
        .filter(|(e1, e2)| {
            let mut total = 0.0;
            for i in 0..x1.len() {
                let d1 = 1.0 + e1[i];
                let d2 = 1.0 + lambda * d1 + e2[i];
                total += d1 * x1[i] + d2 * x2[i];
            }
            total <= budget
        })
        .count()
}

fn solve_cell(
    cfg: &KnapsackExperimentConfig,
    rep: &Replication,
    radius: f64,
    lambda: f64,
    mode: ComparisonMode,
) -> Result<KnapsackSolution> {
    let m = cfg.items;
    let model = KnapsackUncertaintyModel::new(
        rep.mu_hat.clone(),
        DenseMatrix::identity(m),
        DenseMatrix::scaled_identity(m, lambda),
        rep.chol_hat.clone(),
        radius,
        radius,
    )?;
    let inst = KnapsackInstance::new(rep.c1.clone(), rep.c2.clone(), cfg.budget, model, mode)?;
    solve_robust_knapsack(&inst, cfg.method)
}

/// Radius sweep at the default λ, then λ sweep at the fixed radius, each for
/// CU and NC; evaluation paths are shared by every cell of a replication.
pub fn run_knapsack_experiment(cfg: &KnapsackExperimentConfig) -> Result<KnapsackExperimentResult> {
    cfg.validate()?;
    let true_sigma = random_covariance(cfg.items, cfg.sigma_scale, cfg.seed, &[0]);
    let true_chol = cholesky(&true_sigma)?;
    let reps: Vec<Replication> = (0..cfg.replications)
        .into_par_iter()
        .map(|k| replication(cfg, &true_chol, k))
        .collect::<Result<_>>()?;

    let mut cells: Vec<(Sweep, f64, f64, ComparisonMode)> = Vec::new();
    for &r in &cfg.radius_grid {
        for mode in [ComparisonMode::Cu, ComparisonMode::Nc] {
            cells.push((Sweep::Radius, r, cfg.default_lambda, mode));
        }
    }
    for &l in &cfg.lambda_grid {
        for mode in [ComparisonMode::Cu, ComparisonMode::Nc] {
            cells.push((Sweep::Lambda, cfg.sweep_radius, l, mode));
        }
    }
    let units: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..reps.len()).map(move |k| (c, k))).collect();
    let replicates: Vec<KnapsackReplicate> = units
        .par_iter()
        .map(|&(c, k)| {
            let (sweep, radius, lambda, model) = cells[c];
            let base = KnapsackReplicate {
                sweep,
                radius,
                lambda,
                model,
                replication: k,
                objective: None,
                satisfied: 0,
                nonzero_x1: 0,
                nonzero_x2: 0,
                error: None,
            };
            match solve_cell(cfg, &reps[k], radius, lambda, model) {
                Ok(sol) => {
                    let (x1, x2) = (sol.x1_f64(), sol.x2_f64());
                    KnapsackReplicate {
                        objective: Some(sol.objective),
                        satisfied: satisfied_count(&x1, &x2, lambda, cfg.budget, &reps[k].residuals),
                        nonzero_x1: sol.x1.iter().filter(|&&v| v == 1).count(),
                        nonzero_x2: sol.x2.iter().filter(|&&v| v == 1).count(),
                        ..base
                    }
                }
                Err(e) => KnapsackReplicate { error: Some(e.to_string()), ..base },
            }
        })
        .collect();

    let n = cfg.evaluation_samples;
    let records = cells
        .iter()
        .enumerate()
        .map(|(c, &(sweep, radius, lambda, model))| {
            let rows = &replicates[c * reps.len()..(c + 1) * reps.len()];
            let solved: Vec<&KnapsackReplicate> = rows.iter().filter(|r| r.objective.is_some()).collect();
            let evaluated = solved.len() * n;
            let satisfied: usize = solved.iter().map(|r| r.satisfied).sum();
            let weighted: f64 = solved.iter().map(|r| r.objective.unwrap() * r.satisfied as f64).sum();
            let avg = |f: &dyn Fn(&KnapsackReplicate) -> f64| {
                if solved.is_empty() {
                    0.0
                } else {
                    solved.iter().map(|r| f(r)).sum::<f64>() / solved.len() as f64
                }
            };
            KnapsackRecord {
                sweep,
                radius,
                lambda,
                model,
                replications: rows.len(),
                failed: rows.len() - solved.len(),
                avg_objective: (satisfied > 0).then(|| weighted / satisfied as f64),
                mean_objective: (!solved.is_empty()).then(|| avg(&|r| r.objective.unwrap())),
                satisfaction: if evaluated > 0 { satisfied as f64 / evaluated as f64 } else { 0.0 },
                evaluated,
                satisfied,
                excluded: evaluated - satisfied,
                avg_nonzero_x1: avg(&|r| r.nonzero_x1 as f64),
                avg_nonzero_x2: avg(&|r| r.nonzero_x2 as f64),
            }
        })
        .collect();
    Ok(KnapsackExperimentResult { config: cfg.clone(), records, replicates })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_model(psi: f64, r: f64) -> KnapsackUncertaintyModel {
        let s = |v: f64| DenseMatrix::from_rows(&[vec![v]]).unwrap();
        KnapsackUncertaintyModel::new(DenseVector(vec![1.0]), s(1.0), s(psi), s(1.0), r, r).unwrap()
    }

    #[test]
    fn scalar_counterpart_value() {
        let v = cu_knapsack_lhs(&[1.0], &[1.0], &scalar_model(0.5, 2.0)).unwrap();
        assert!((v - 7.5).abs() < 1e-12);
        let nc = nc_knapsack_lhs(&[1.0], &[1.0], &scalar_model(0.5, 2.0)).unwrap();
        assert!((nc - 6.0).abs() < 1e-12);
    }

    #[test]
    fn all_items_fit_without_uncertainty() {
        let m = 3;
        let model = KnapsackUncertaintyModel::nonconnected(DenseVector::constant(m, 1.0), DenseMatrix::identity(m), 0.0, 0.0).unwrap();
        let inst = KnapsackInstance::new(
            DenseVector::constant(m, 1.0),
            DenseVector::constant(m, 2.0),
            6.0,
            model,
            ComparisonMode::Cu,
        )
        .unwrap();
        let sol = solve_robust_knapsack(&inst, SolveMethod::BranchAndBound).unwrap();
        assert_eq!(sol.x1, vec![1; 3]);
        assert_eq!(sol.x2, vec![1; 3]);
        assert!((sol.objective - 9.0).abs() < 1e-12);
    }

    #[test]
    fn zero_budget_selects_nothing() {
        let model = scalar_model(0.5, 1.0);
        let inst = KnapsackInstance::new(DenseVector(vec![1.0]), DenseVector(vec![1.0]), 0.0, model, ComparisonMode::Cu).unwrap();
        let sol = solve_robust_knapsack(&inst, SolveMethod::Exhaustive).unwrap();
        assert_eq!((sol.x1, sol.x2, sol.objective), (vec![0], vec![0], 0.0));
        let neg = KnapsackInstance { budget: -1.0, ..inst };
        assert!(matches!(solve_robust_knapsack(&neg, SolveMethod::BranchAndBound), Err(Error::Infeasible(_))));
    }

    #[test]
    fn ties_go_to_the_smaller_decision() {
        // two identical items, room for one: (0, 1) precedes (1, 0)
        let model = KnapsackUncertaintyModel::nonconnected(DenseVector(vec![1.0]), DenseMatrix::identity(1), 0.0, 0.0).unwrap();
        let inst = KnapsackInstance::new(DenseVector(vec![1.0]), DenseVector(vec![1.0]), 1.0, model, ComparisonMode::Nc).unwrap();
        for method in [SolveMethod::Exhaustive, SolveMethod::BranchAndBound] {
            let sol = solve_robust_knapsack(&inst, method).unwrap();
            assert_eq!((sol.x1.clone(), sol.x2.clone()), (vec![0], vec![1]));
        }
    }

    #[test]
    fn satisfaction_without_noise() {
        let model = scalar_model(0.5, 0.0);
        let zero = DenseMatrix::zeros(1, 1);
        // d_1 = 1, d_2 = 1.5
        assert_eq!(constraint_satisfaction(&[1.0], &[1.0], &model, &zero, 2.5, 10, 1).unwrap(), 1.0);
        assert_eq!(constraint_satisfaction(&[1.0], &[1.0], &model, &zero, 2.4, 10, 1).unwrap(), 0.0);
        let noisy = DenseMatrix::from_rows(&[vec![4.0]]).unwrap();
        assert_eq!(constraint_satisfaction(&[0.0], &[0.0], &model, &noisy, 0.0, 50, 1).unwrap(), 1.0);
    }

    #[test]
    fn sample_moments_match_hand_values() {
        let (m, c) = sample_moments(&[vec![1.0, 0.0], vec![3.0, 2.0]]);
        assert_eq!(m.0, vec![2.0, 1.0]);
        assert_eq!(c.to_rows(), vec![vec![2.0, 2.0], vec![2.0, 2.0]]);
    }
}
