//! Dense linear programming: a two-phase tableau simplex with dual values and
//! certificates, plus an eigenvector cutting-plane loop for small PSD blocks.

mod psd;
mod simplex;
mod text;

use serde::{Deserialize, Serialize};

pub use psd::{solve_with_psd_cuts, CutLoopResult, CutRecord, PsdBlock, PsdBlockSpec};
pub use simplex::solve_lp;
pub use text::{parse_lp_text, write_lp_text};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    /// Sparse (column, coefficient) pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl LpRow {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|(j, a)| a * x[*j]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            RowSense::Le => (a - self.rhs).max(0.0),
            RowSense::Ge => (self.rhs - a).max(0.0),
            RowSense::Eq => (a - self.rhs).abs(),
        }
    }
}

/// min or max cᵀx subject to sparse rows and column bounds (bounds may be infinite).
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Objective,
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub col_names: Vec<String>,
}

impl LpProblem {
    pub fn new(objective: Objective) -> Self {
        LpProblem {
            objective,
            cost: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            rows: Vec::new(),
            col_names: Vec::new(),
        }
    }

    pub fn num_cols(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        let j = self.cost.len();
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.col_names.push(format!("x{j}"));
        j
    }

    pub fn add_named_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        let j = self.add_var(lower, upper, cost);
        self.col_names[j] = name.into();
        j
    }

    pub fn add_free_var(&mut self, cost: f64) -> usize {
        self.add_var(f64::NEG_INFINITY, f64::INFINITY, cost)
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: RowSense, rhs: f64) -> usize {
        self.rows.push(LpRow { coeffs, sense, rhs });
        self.rows.len() - 1
    }

    /// Adds a row from a dense coefficient vector, dropping zeros.
    pub fn add_dense_row(&mut self, coeffs: &[f64], sense: RowSense, rhs: f64) -> usize {
        let sparse = coeffs.iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(j, a)| (j, *a)).collect();
        self.add_row(sparse, sense, rhs)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cost.len();
        if self.lower.len() != n || self.upper.len() != n || self.col_names.len() != n {
            return Err(Error::DimensionMismatch("bound vectors vs cost length".into()));
        }
        if self.cost.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInstance("non-finite objective coefficient".into()));
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] == f64::INFINITY
                || self.upper[j] == f64::NEG_INFINITY
            {
                return Err(Error::InvalidInstance(format!("bad bounds on column {j}")));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(Error::InvalidInstance(format!("non-finite rhs in row {i}")));
            }
            for (j, a) in &row.coeffs {
                if *j >= n {
                    return Err(Error::DimensionMismatch(format!("row {i} references column {j}")));
                }
                if !a.is_finite() {
                    return Err(Error::InvalidInstance(format!("non-finite coefficient in row {i}")));
                }
            }
        }
        Ok(())
    }

    /// Largest row or bound violation at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for row in &self.rows {
            worst = worst.max(row.violation(x));
        }
        for (j, v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver output. Row duals are shadow prices ∂(objective)/∂(rhs).
/// For infeasible problems `certificate` holds row multipliers of a Farkas
/// combination; for unbounded problems it holds an improving primal ray.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
    pub objective: f64,
    pub certificate: Option<Vec<f64>>,
    pub iterations: usize,
}

/// Residuals of a claimed optimal primal/dual pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateCheck {
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub max_complementarity: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Recomputes primal/dual feasibility, the duality gap and complementary
    /// slackness from scratch against `p`.
    pub fn check(&self, p: &LpProblem) -> CertificateCheck {
        let n = p.num_cols();
        let is_max = p.objective == Objective::Max;
        let mut dual_residual = 0.0f64;
        let mut dual_objective = 0.0;
        let mut max_comp = 0.0f64;
        let mut reduced = p.cost.clone();
        for (i, row) in p.rows.iter().enumerate() {
            let y = self.duals[i];
            dual_objective += y * row.rhs;
            for (j, a) in &row.coeffs {
                reduced[*j] -= y * a;
            }
            // sign requirement on shadow prices
            let wrong = match (row.sense, is_max) {
                (RowSense::Le, true) | (RowSense::Ge, false) => (-y).max(0.0),
                (RowSense::Ge, true) | (RowSense::Le, false) => y.max(0.0),
                (RowSense::Eq, _) => 0.0,
            };
            dual_residual = dual_residual.max(wrong);
            max_comp = max_comp.max((y * (row.activity(&self.x) - row.rhs)).abs());
        }
        for j in 0..n {
            let z = reduced[j];
            // for max, z > 0 must be paid by the upper bound, z < 0 by the lower one
            let (pos_bound, neg_bound) = if is_max { (p.upper[j], p.lower[j]) } else { (p.lower[j], p.upper[j]) };
            if z > 0.0 {
                if pos_bound.is_finite() {
                    dual_objective += z * pos_bound;
                    max_comp = max_comp.max((z * (self.x[j] - pos_bound)).abs());
                } else {
                    dual_residual = dual_residual.max(z);
                }
            } else if z < 0.0 {
                if neg_bound.is_finite() {
                    dual_objective += z * neg_bound;
                    max_comp = max_comp.max((z * (self.x[j] - neg_bound)).abs());
                } else {
                    dual_residual = dual_residual.max(-z);
                }
            }
        }
        CertificateCheck {
            primal_residual: p.primal_residual(&self.x),
            dual_residual,
            dual_objective,
            gap: (self.objective - dual_objective).abs(),
            max_complementarity: max_comp,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bound_row() {
        let mut p = LpProblem::new(Objective::Max);
        let x = p.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0);
        p.add_row(vec![(x, 1.0)], RowSense::Le, 3.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 3.0).abs() < 1e-12);
        assert!((s.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_vertex() {
        let mut p = LpProblem::new(Objective::Max);
        let x = p.add_var(0.0, f64::INFINITY, 1.0);
        let y = p.add_var(0.0, f64::INFINITY, 1.0);
        p.add_row(vec![(x, 1.0), (y, 1.0)], RowSense::Le, 1.0);
        p.add_row(vec![(x, 1.0)], RowSense::Le, 1.0);
        p.add_row(vec![(y, 1.0)], RowSense::Le, 1.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
        let c = s.check(&p);
        assert!(c.gap < 1e-9 && c.dual_residual < 1e-9 && c.primal_residual < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut p = LpProblem::new(Objective::Min);
        let x = p.add_var(0.0, f64::INFINITY, 1.0);
        p.add_row(vec![(x, 1.0)], RowSense::Le, -1.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        let y = s.certificate.unwrap();
        // the only row is the culprit
        assert!(y[0] != 0.0);

        let mut q = LpProblem::new(Objective::Max);
        let x = q.add_var(0.0, f64::INFINITY, 1.0);
        let z = q.add_var(0.0, f64::INFINITY, 0.0);
        q.add_row(vec![(x, 1.0), (z, -1.0)], RowSense::Le, 1.0);
        let s = solve_lp(&q).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
        let ray = s.certificate.unwrap();
        assert!(ray[0] > 0.0 && ray[0] - ray[1] <= 1e-12);
    }

    #[test]
    fn equality_and_free_bounds() {
        // min |shifted| style: min x1 + 2 x2, x1 + x2 = 4, x1 <= 3, x2 free but >= -10
        let mut p = LpProblem::new(Objective::Min);
        let a = p.add_var(f64::NEG_INFINITY, 3.0, 1.0);
        let b = p.add_var(-10.0, f64::INFINITY, 2.0);
        p.add_row(vec![(a, 1.0), (b, 1.0)], RowSense::Eq, 4.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - 5.0).abs() < 1e-10, "{}", s.objective);
        let c = s.check(&p);
        assert!(c.gap < 1e-9, "{c:?}");
    }
}
