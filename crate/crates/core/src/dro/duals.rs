use serde::{Deserialize, Serialize};

use super::cost::StageCost;
use super::nested::nested_dro_value;
use super::moment::Direction;
use crate::cu_sets::{MomentAmbiguityProcess, SupportMode};
use crate::error::{Error, Result};
use crate::lp::{solve_with_psd_cuts, LpProblem, LpStatus, Objective, PsdBlock, PsdBlockSpec, RowSense};
use crate::numerics::DenseMatrix;
use crate::ro::{ConstraintSystem, VarSign};

/// Column layout of one copy of (p, q^u, q^l, R) for a stage.
#[derive(Debug, Clone)]
struct DualCopy {
    p: usize,
    qu: Vec<usize>,
    ql: Vec<usize>,
    /// r[i][j], symmetric
    r: Vec<Vec<usize>>,
}

fn add_copy(lp: &mut LpProblem, m: usize, tag: &str) -> DualCopy {
    let p = lp.add_named_var(format!("p_{tag}"), f64::NEG_INFINITY, f64::INFINITY, 0.0);
    let qu = (0..m).map(|j| lp.add_named_var(format!("qu_{tag}_{}", j + 1), 0.0, f64::INFINITY, 0.0)).collect();
    let ql = (0..m).map(|j| lp.add_named_var(format!("ql_{tag}_{}", j + 1), 0.0, f64::INFINITY, 0.0)).collect();
    let mut r = vec![vec![0; m]; m];
    for i in 0..m {
        for j in i..m {
            let c = lp.add_named_var(format!("r_{tag}_{}{}", i + 1, j + 1), f64::NEG_INFINITY, f64::INFINITY, 0.0);
            r[i][j] = c;
            r[j][i] = c;
        }
    }
    DualCopy { p, qu, ql, r }
}

/// Linear form of p + (q^u − q^l)ᵀμ + (q^u + q^l)ᵀδ + R·(Σ − μ⁰μ⁰ᵀ) for a given μ.
fn dual_objective_terms(copy: &DualCopy, center: &[f64], delta: &[f64], shifted_cap: &DenseMatrix, scale: f64, out: &mut Vec<(usize, f64)>) {
    let m = center.len();
    out.push((copy.p, scale));
    for j in 0..m {
        out.push((copy.qu[j], scale * (center[j] + delta[j])));
        out.push((copy.ql[j], scale * (delta[j] - center[j])));
    }
    for i in 0..m {
        for j in i..m {
            let w = if i == j { 1.0 } else { 2.0 };
            out.push((copy.r[i][j], scale * w * shifted_cap[(i, j)]));
        }
    }
}

/// Linear form of p + (q^u − q^l − 2Rμ⁰)ᵀξ + ξᵀRξ.
fn dual_constraint_terms(copy: &DualCopy, xi: &[f64], anchor: &[f64], out: &mut Vec<(usize, f64)>) {
    let m = xi.len();
    out.push((copy.p, 1.0));
    for j in 0..m {
        out.push((copy.qu[j], xi[j]));
        out.push((copy.ql[j], -xi[j]));
    }
    for i in 0..m {
        for j in i..m {
            let a = if i == j {
                xi[i] * xi[i] - 2.0 * anchor[i] * xi[i]
            } else {
                2.0 * xi[i] * xi[j] - 2.0 * (anchor[i] * xi[j] + anchor[j] * xi[i])
            };
            out.push((copy.r[i][j], a));
        }
    }
}

fn merge(mut coeffs: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    coeffs.sort_by_key(|c| c.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
    for (c, v) in coeffs {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => out.push((c, v)),
        }
    }
    out.retain(|c| c.1 != 0.0);
    out
}

/// The assembled dual program for inspection or export.
#[derive(Debug, Clone)]
pub struct DualProgram {
    pub problem: LpProblem,
    pub blocks: PsdBlockSpec,
    /// Column map of each R copy, one matrix per PSD block.
    pub psd_columns: Vec<Vec<Vec<usize>>>,
}

impl DualProgram {
    /// The dual as a constraint system; with a budget the objective row
    /// `dual objective ≤ B` is appended, certifying sup E[Σ h_t] ≤ B.
    pub fn to_system(&self, budget: Option<f64>) -> ConstraintSystem {
        let lp = &self.problem;
        let mut sys = ConstraintSystem::new();
        for j in 0..lp.num_cols() {
            let sign = if lp.lower[j] == 0.0 { VarSign::Nonnegative } else { VarSign::Free };
            sys.add_var(&lp.col_names[j], sign);
        }
        for row in &lp.rows {
            sys.add_linear(&row.coeffs, row.sense, row.rhs);
        }
        for cols in &self.psd_columns {
            sys.add_psd(cols);
        }
        if let Some(b) = budget {
            let obj: Vec<(usize, f64)> = lp.cost.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(j, c)| (j, *c)).collect();
            sys.add_linear(&obj, RowSense::Le, b);
        }
        sys
    }
}

/// Builds the minimization over stage duals. With `per_point` each stage
/// t ≥ 2 carries one dual copy per conditioning point of Ξ_{t−1}; otherwise
/// every stage has a single copy shared by all conditioning points.
pub fn assemble_dual(proc: &MomentAmbiguityProcess, costs: &[&dyn StageCost], per_point: bool) -> Result<DualProgram> {
    if proc.support_mode() == SupportMode::Translated {
        return Err(Error::UnsupportedModel("dual assembly needs fixed stage supports".into()));
    }
    let t_max = proc.periods();
    if costs.len() != t_max {
        return Err(Error::DimensionMismatch(format!("{} costs for {} periods", costs.len(), t_max)));
    }
    let m = proc.dim();
    if m > 4 {
        return Err(Error::DimensionMismatch("dual PSD blocks are limited to dimension 4".into()));
    }
    let mut lp = LpProblem::new(Objective::Min);
    let mut copies: Vec<Vec<DualCopy>> = Vec::with_capacity(t_max);
    for t in 0..t_max {
        let n = if per_point && t > 0 { proc.support(t - 1).len() } else { 1 };
        copies.push(
            (0..n)
                .map(|c| {
                    let tag = if n == 1 { format!("{}", t + 1) } else { format!("{}_{}", t + 1, c + 1) };
                    add_copy(&mut lp, m, &tag)
                })
                .collect(),
        );
    }
    let shifted_cap = |t: usize| {
        let a = proc.anchor(t);
        let mut s = proc.sigma_cap(t).clone();
        s.add_scaled(-1.0, &DenseMatrix::outer(&a, &a));
        s
    };
    let mut objective = Vec::new();
    dual_objective_terms(&copies[0][0], proc.mu1(), proc.delta(0), &shifted_cap(0), 1.0, &mut objective);
    for (col, v) in merge(objective) {
        lp.cost[col] = v;
    }
    for t in 0..t_max {
        let anchor = proc.anchor(t);
        let next_cap = if t + 1 < t_max { Some(shifted_cap(t + 1)) } else { None };
        for copy in &copies[t] {
            for (i, xi) in proc.support(t).iter().enumerate() {
                let mut coeffs = Vec::new();
                dual_constraint_terms(copy, xi, &anchor, &mut coeffs);
                if let Some(cap) = &next_cap {
                    let next = if per_point { &copies[t + 1][i] } else { &copies[t + 1][0] };
                    let center = proc.center(t + 1, Some(xi));
                    dual_objective_terms(next, &center, proc.delta(t + 1), cap, -1.0, &mut coeffs);
                }
                lp.add_row(merge(coeffs), RowSense::Ge, costs[t].eval(xi));
            }
        }
    }
    let mut blocks = Vec::new();
    let mut psd_columns = Vec::new();
    for stage in &copies {
        for copy in stage {
            blocks.push(PsdBlock::symmetric_variable(&copy.r)?);
            psd_columns.push(copy.r.clone());
        }
    }
    Ok(DualProgram { problem: lp, blocks: PsdBlockSpec::new(blocks), psd_columns })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualValue {
    pub value: f64,
    pub cuts: usize,
    pub cut_iterations: usize,
    pub rows: usize,
    pub cols: usize,
}

fn solve_dual(program: DualProgram) -> Result<DualValue> {
    let res = solve_with_psd_cuts(&program.problem, &program.blocks)?;
    match res.solution.status {
        LpStatus::Optimal => Ok(DualValue {
            value: res.solution.objective,
            cuts: res.cuts.len(),
            cut_iterations: res.iterations,
            rows: res.problem.num_rows(),
            cols: res.problem.num_cols(),
        }),
        LpStatus::Infeasible => Err(Error::LpInfeasible),
        LpStatus::Unbounded => Err(Error::LpUnbounded),
    }
}

/// Upper bound on the nested sup from duals that depend on the previous realization.
pub fn exact_dual_value(proc: &MomentAmbiguityProcess, costs: &[&dyn StageCost]) -> Result<DualValue> {
    solve_dual(assemble_dual(proc, costs, true)?)
}

/// Upper bound from one dual copy per stage.
pub fn conservative_dual_value(proc: &MomentAmbiguityProcess, costs: &[&dyn StageCost]) -> Result<DualValue> {
    solve_dual(assemble_dual(proc, costs, false)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroGaps {
    pub exact_minus_primal: f64,
    pub conservative_minus_exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroCutCounts {
    pub primal: usize,
    pub exact_dual: usize,
    pub conservative_dual: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroReport {
    pub primal: f64,
    pub exact_dual: f64,
    pub conservative_dual: f64,
    pub gaps: DroGaps,
    pub cuts: DroCutCounts,
}

pub fn dro_report(proc: &MomentAmbiguityProcess, costs: &[&dyn StageCost]) -> Result<DroReport> {
    let primal = nested_dro_value(proc, costs, Direction::Sup)?;
    let exact = exact_dual_value(proc, costs)?;
    let conservative = conservative_dual_value(proc, costs)?;
    Ok(DroReport {
        primal: primal.value,
        exact_dual: exact.value,
        conservative_dual: conservative.value,
        gaps: DroGaps {
            exact_minus_primal: exact.value - primal.value,
            conservative_minus_exact: conservative.value - exact.value,
        },
        cuts: DroCutCounts { primal: primal.cuts, exact_dual: exact.cuts, conservative_dual: conservative.cuts },
    })
}

/// Smallest strict-feasibility margin over every stage set of the process
/// (each conditioning point in fixed mode).
pub fn strict_feasibility_margin(proc: &MomentAmbiguityProcess) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for t in 0..proc.periods() {
        let prevs: Vec<Option<Vec<f64>>> = if t == 0 {
            vec![None]
        } else {
            match proc.support_mode() {
                SupportMode::Fixed => proc.support(t - 1).iter().map(|p| Some(p.0.clone())).collect(),
                SupportMode::Translated => vec![Some(vec![0.0; proc.dim()])],
            }
        };
        for prev in prevs {
            let set = proc.stage_set(t, prev.as_deref())?;
            worst = worst.min(set.strict_feasibility_margin()?);
        }
    }
    Ok(worst)
}
