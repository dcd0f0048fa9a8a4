use std::collections::HashMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{solve_lp, solve_with_psd_cuts, LpProblem, LpStatus, Objective, PsdBlock, PsdBlockSpec, RowSense};
use crate::numerics::{min_eigenvalue, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarSign {
    Free,
    Nonnegative,
    Nonpositive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub sign: VarSign,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AffineExpr {
    #[serde(default)]
    pub constant: f64,
    pub coeffs: IndexMap<String, f64>,
}

impl AffineExpr {
    pub fn eval(&self, sys: &ConstraintSystem, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().map(|(n, c)| c * x[sys.index[n]]).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coeffs: IndexMap<String, f64>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// ‖body‖₂ ≤ head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocConstraint {
    pub head: AffineExpr,
    pub body: Vec<AffineExpr>,
}

/// Symmetric matrix of variables required PSD; `entries[i][j]` names the variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdConstraint {
    pub entries: Vec<Vec<String>>,
}

/// Declared variables with linear, second-order-cone and PSD rows; rows
/// reference variables by name in declaration order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "SystemRaw")]
pub struct ConstraintSystem {
    pub variables: Vec<Variable>,
    pub linear: Vec<LinearConstraint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub soc: Vec<SocConstraint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub psd: Vec<PsdConstraint>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct SystemRaw {
    variables: Vec<Variable>,
    linear: Vec<LinearConstraint>,
    #[serde(default)]
    soc: Vec<SocConstraint>,
    #[serde(default)]
    psd: Vec<PsdConstraint>,
}

impl TryFrom<SystemRaw> for ConstraintSystem {
    type Error = Error;
    fn try_from(r: SystemRaw) -> Result<Self> {
        let mut sys = ConstraintSystem::default();
        for v in r.variables {
            if sys.index.contains_key(&v.name) {
                return Err(Error::InvalidInstance(format!("variable {} declared twice", v.name)));
            }
            sys.add_var(&v.name, v.sign);
        }
        let known = |n: &String| -> Result<()> {
            if sys.index.contains_key(n) {
                Ok(())
            } else {
                Err(Error::InvalidInstance(format!("undeclared variable {n}")))
            }
        };
        for row in &r.linear {
            row.coeffs.keys().try_for_each(known)?;
        }
        for row in &r.soc {
            row.head.coeffs.keys().chain(row.body.iter().flat_map(|b| b.coeffs.keys())).try_for_each(known)?;
        }
        for block in &r.psd {
            block.entries.iter().flatten().try_for_each(known)?;
        }
        sys.linear = r.linear;
        sys.soc = r.soc;
        sys.psd = r.psd;
        Ok(sys)
    }
}

impl ConstraintSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    /// Declares a variable, returning its column; redeclaring returns the old column.
    pub fn add_var(&mut self, name: &str, sign: VarSign) -> usize {
        if let Some(&c) = self.index.get(name) {
            return c;
        }
        let c = self.variables.len();
        self.variables.push(Variable { name: name.to_string(), sign });
        self.index.insert(name.to_string(), c);
        c
    }

    pub fn col(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn named(&self, coeffs: &[(usize, f64)]) -> IndexMap<String, f64> {
        let mut out = IndexMap::new();
        for &(c, v) in coeffs {
            *out.entry(self.variables[c].name.clone()).or_insert(0.0) += v;
        }
        out.retain(|_, v| *v != 0.0);
        out
    }

    pub fn add_linear(&mut self, coeffs: &[(usize, f64)], sense: RowSense, rhs: f64) {
        let coeffs = self.named(coeffs);
        self.linear.push(LinearConstraint { coeffs, sense, rhs });
    }

    pub fn affine(&self, constant: f64, coeffs: &[(usize, f64)]) -> AffineExpr {
        AffineExpr { constant, coeffs: self.named(coeffs) }
    }

    pub fn add_soc(&mut self, head: AffineExpr, body: Vec<AffineExpr>) {
        self.soc.push(SocConstraint { head, body });
    }

    pub fn add_psd(&mut self, cols: &[Vec<usize>]) {
        let entries = cols.iter().map(|r| r.iter().map(|&c| self.variables[c].name.clone()).collect()).collect();
        self.psd.push(PsdConstraint { entries });
    }

    /// Linear rows and sign bounds as an LP with the given objective.
    pub fn to_lp(&self, objective: Objective, cost: &[(usize, f64)]) -> Result<LpProblem> {
        if !self.soc.is_empty() {
            return Err(Error::UnsupportedModel("second-order-cone rows have no LP form".into()));
        }
        let mut lp = LpProblem::new(objective);
        for v in &self.variables {
            let (lo, up) = match v.sign {
                VarSign::Free => (f64::NEG_INFINITY, f64::INFINITY),
                VarSign::Nonnegative => (0.0, f64::INFINITY),
                VarSign::Nonpositive => (f64::NEG_INFINITY, 0.0),
            };
            lp.add_named_var(v.name.clone(), lo, up, 0.0);
        }
        for &(c, v) in cost {
            lp.cost[c] += v;
        }
        for row in &self.linear {
            let coeffs = row.coeffs.iter().map(|(n, v)| (self.index[n], *v)).collect();
            lp.add_row(coeffs, row.sense, row.rhs);
        }
        Ok(lp)
    }

    fn psd_spec(&self) -> Result<PsdBlockSpec> {
        let blocks = self
            .psd
            .iter()
            .map(|b| {
                let cols: Vec<Vec<usize>> = b.entries.iter().map(|r| r.iter().map(|n| self.index[n]).collect()).collect();
                PsdBlock::symmetric_variable(&cols)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PsdBlockSpec::new(blocks))
    }

    /// Solves min/max of `cost` over the linear and PSD rows.
    pub fn optimize(&self, objective: Objective, cost: &[(usize, f64)]) -> Result<crate::lp::LpSolution> {
        let lp = self.to_lp(objective, cost)?;
        if self.psd.is_empty() {
            solve_lp(&lp)
        } else {
            Ok(solve_with_psd_cuts(&lp, &self.psd_spec()?)?.solution)
        }
    }

    /// Phase-1 feasibility of the linear and PSD rows.
    pub fn is_feasible(&self) -> Result<bool> {
        let sol = self.optimize(Objective::Min, &[])?;
        Ok(sol.status != LpStatus::Infeasible)
    }

    /// Largest violation of any row, sign restriction or PSD block at `x`.
    pub fn max_violation(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.variables.len() {
            return Err(Error::DimensionMismatch("assignment length vs variables".into()));
        }
        let mut worst: f64 = 0.0;
        for (v, xi) in self.variables.iter().zip(x) {
            let viol = match v.sign {
                VarSign::Free => 0.0,
                VarSign::Nonnegative => -xi,
                VarSign::Nonpositive => *xi,
            };
            worst = worst.max(viol);
        }
        for row in &self.linear {
            let a: f64 = row.coeffs.iter().map(|(n, c)| c * x[self.index[n]]).sum();
            let viol = match row.sense {
                RowSense::Le => a - row.rhs,
                RowSense::Ge => row.rhs - a,
                RowSense::Eq => (a - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        for row in &self.soc {
            let norm = row.body.iter().map(|b| b.eval(self, x).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(norm - row.head.eval(self, x));
        }
        for b in &self.psd {
            let m = DenseMatrix::from_fn(b.entries.len(), b.entries.len(), |i, j| x[self.index[&b.entries[i][j]]]);
            worst = worst.max(-min_eigenvalue(&m)?.0);
        }
        Ok(worst)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("system serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_feasibility() {
        let mut s = ConstraintSystem::new();
        let a = s.add_var("a", VarSign::Nonpositive);
        let b = s.add_var("b", VarSign::Free);
        s.add_linear(&[(a, 1.0), (b, 1.0)], RowSense::Eq, 1.0);
        s.add_linear(&[(b, 1.0)], RowSense::Le, 2.0);
        assert!(s.is_feasible().unwrap());
        let text = s.to_json();
        let back: ConstraintSystem = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert_eq!(back.col("b"), Some(1));
        s.add_linear(&[(b, 1.0)], RowSense::Ge, 3.0);
        assert!(!s.is_feasible().unwrap());
    }

    #[test]
    fn rejects_undeclared_names() {
        let text = r#"{"variables":[{"name":"a","sign":"free"}],"linear":[{"coeffs":{"z":1.0},"sense":"<=","rhs":0.0}]}"#;
        assert!(serde_json::from_str::<ConstraintSystem>(text).is_err());
    }

    #[test]
    fn soc_violation() {
        let mut s = ConstraintSystem::new();
        let t = s.add_var("t", VarSign::Nonnegative);
        let u = s.add_var("u", VarSign::Free);
        let head = s.affine(0.0, &[(t, 1.0)]);
        let body = vec![s.affine(0.0, &[(u, 1.0)]), s.affine(1.0, &[])];
        s.add_soc(head, body);
        assert!((s.max_violation(&[1.0, 1.0]).unwrap() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!(s.to_lp(Objective::Min, &[]).is_err());
    }
}
