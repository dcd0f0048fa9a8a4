use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cost::StageCost;
use super::moment::{moment_sup_lp, DiscreteDistribution, Direction};
use crate::cu_sets::{MomentAmbiguityProcess, SupportMode};
use crate::error::{Error, Result};

/// Optimal conditional distribution of one stage. With fixed supports the
/// key `path` is just the index of the conditioning point (empty at stage 1);
/// with translated supports it is the full index path d_1..d_{t−1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conditional {
    pub stage: usize,
    pub path: Vec<usize>,
    pub value: f64,
    pub distribution: DiscreteDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedDroResult {
    pub value: f64,
    pub direction: Direction,
    pub conditionals: Vec<Conditional>,
    pub cuts: usize,
}

impl NestedDroResult {
    fn lookup(&self) -> BTreeMap<(usize, Vec<usize>), usize> {
        self.conditionals
            .iter()
            .enumerate()
            .map(|(k, c)| ((c.stage, c.path.clone()), k))
            .collect()
    }

    /// Joint distribution over index paths obtained by chaining the
    /// conditionals; entries with zero mass are dropped.
    pub fn joint(&self, proc: &MomentAmbiguityProcess) -> Vec<(Vec<usize>, f64)> {
        let map = self.lookup();
        let key = |path: &[usize]| -> Vec<usize> {
            match proc.support_mode() {
                SupportMode::Fixed => path.last().map(|&j| vec![j]).unwrap_or_default(),
                SupportMode::Translated => path.to_vec(),
            }
        };
        let mut frontier: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), 1.0)];
        for stage in 1..=proc.periods() {
            let mut next = Vec::new();
            for (path, mass) in frontier {
                let c = &self.conditionals[map[&(stage, key(&path))]];
                for (i, w) in c.distribution.masses.iter().enumerate() {
                    if *w > 0.0 {
                        let mut p = path.clone();
                        p.push(i);
                        next.push((p, mass * w));
                    }
                }
            }
            frontier = next;
        }
        frontier
    }

    /// E[Σ_t h_t(d_t)] under the composed joint distribution.
    pub fn joint_expectation(&self, proc: &MomentAmbiguityProcess, costs: &[&dyn StageCost]) -> f64 {
        self.joint(proc)
            .into_iter()
            .map(|(path, mass)| {
                let d = proc.realize(&path);
                mass * d.iter().zip(costs).map(|(dt, h)| h.eval(dt)).sum::<f64>()
            })
            .sum()
    }
}

struct NodeOut {
    value: f64,
    conditionals: Vec<Conditional>,
    cuts: usize,
}

/// Backward recursion g_t(d_{t−1}) = sup/inf over the stage set of
/// E[h_t(d_t) + g_{t+1}(d_t)], returning g_1 and every conditional optimum.
pub fn nested_dro_value(
    proc: &MomentAmbiguityProcess,
    costs: &[&dyn StageCost],
    direction: Direction,
) -> Result<NestedDroResult> {
    if costs.len() != proc.periods() {
        return Err(Error::DimensionMismatch(format!("{} costs for {} periods", costs.len(), proc.periods())));
    }
    let out = match proc.support_mode() {
        SupportMode::Fixed => fixed_recursion(proc, costs, direction)?,
        SupportMode::Translated => translated_node(proc, costs, direction, 0, None, Vec::new())?,
    };
    let mut conditionals = out.conditionals;
    conditionals.sort_by(|a, b| (a.stage, &a.path).cmp(&(b.stage, &b.path)));
    Ok(NestedDroResult { value: out.value, direction, conditionals, cuts: out.cuts })
}

fn stage_error(e: Error, stage: usize, point: Option<usize>) -> Error {
    match e {
        Error::InfeasibleMomentSet { .. } => Error::InfeasibleMomentSet { stage, point },
        other => other,
    }
}

fn fixed_recursion(proc: &MomentAmbiguityProcess, costs: &[&dyn StageCost], direction: Direction) -> Result<NodeOut> {
    let t_max = proc.periods();
    let mut conditionals = Vec::new();
    let mut cuts = 0;
    // future[i] = g_{t+1}(ξ_i) for ξ_i in Ξ_t
    let mut future = vec![0.0; proc.support(t_max - 1).len()];
    for t in (0..t_max).rev() {
        let cost: Vec<f64> = proc
            .support(t)
            .iter()
            .zip(&future)
            .map(|(xi, g)| costs[t].eval(xi) + g)
            .collect();
        let parents: Vec<Option<usize>> = if t == 0 { vec![None] } else { (0..proc.support(t - 1).len()).map(Some).collect() };
        let solved: Vec<Result<(Option<usize>, super::moment::MomentSolution)>> = parents
            .par_iter()
            .map(|&j| {
                let prev = j.map(|j| proc.support(t - 1)[j].as_slice());
                let set = proc.stage_set(t, prev)?;
                let sol = moment_sup_lp(&cost, &set, direction).map_err(|e| stage_error(e, t + 1, j))?;
                Ok((j, sol))
            })
            .collect();
        let mut values = Vec::with_capacity(parents.len());
        for r in solved {
            let (j, sol) = r?;
            cuts += sol.cuts;
            values.push(sol.value);
            conditionals.push(Conditional {
                stage: t + 1,
                path: j.into_iter().collect(),
                value: sol.value,
                distribution: sol.distribution,
            });
        }
        future = values;
    }
    Ok(NodeOut { value: future[0], conditionals, cuts })
}

fn translated_node(
    proc: &MomentAmbiguityProcess,
    costs: &[&dyn StageCost],
    direction: Direction,
    t: usize,
    prev: Option<Vec<f64>>,
    path: Vec<usize>,
) -> Result<NodeOut> {
    let set = proc.stage_set(t, prev.as_deref())?;
    let children: Vec<Result<NodeOut>> = if t + 1 < proc.periods() {
        (0..set.support.len())
            .into_par_iter()
            .map(|i| {
                let mut p = path.clone();
                p.push(i);
                translated_node(proc, costs, direction, t + 1, Some(set.support[i].0.clone()), p)
            })
            .collect()
    } else {
        Vec::new()
    };
    let mut conditionals = Vec::new();
    let mut cuts = 0;
    let mut future = vec![0.0; set.support.len()];
    for (i, c) in children.into_iter().enumerate() {
        let c = c?;
        future[i] = c.value;
        cuts += c.cuts;
        conditionals.extend(c.conditionals);
    }
    let cost: Vec<f64> = set.support.iter().zip(&future).map(|(xi, g)| costs[t].eval(xi) + g).collect();
    let sol = moment_sup_lp(&cost, &set, direction).map_err(|e| stage_error(e, t + 1, None))?;
    cuts += sol.cuts;
    conditionals.push(Conditional { stage: t + 1, path, value: sol.value, distribution: sol.distribution });
    Ok(NodeOut { value: sol.value, conditionals, cuts })
}
