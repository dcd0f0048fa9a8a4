use serde::{Deserialize, Serialize};

use super::ellipsoidal::check_len;
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpProblem, LpStatus, Objective, RowSense};
use crate::numerics::{DenseMatrix, DenseVector};

/// One period of `G_t d_t ≥ g_t + Δ_t d_{t−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyhedralStage {
    pub g_mat: DenseMatrix,
    pub g_vec: DenseVector,
    pub delta: DenseMatrix,
}

/// Polyhedra whose right-hand side shifts with the previous realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyhedralRaw")]
pub struct PolyhedralCuProcess {
    periods: usize,
    dim: usize,
    stages: Vec<PolyhedralStage>,
}

#[derive(Deserialize)]
struct PolyhedralRaw {
    periods: usize,
    dim: usize,
    stages: Vec<PolyhedralStage>,
}

impl TryFrom<PolyhedralRaw> for PolyhedralCuProcess {
    type Error = Error;
    fn try_from(r: PolyhedralRaw) -> Result<Self> {
        if r.stages.len() != r.periods {
            return Err(Error::DimensionMismatch(format!(
                "{} stages for {} periods",
                r.stages.len(),
                r.periods
            )));
        }
        let p = PolyhedralCuProcess::new(r.stages)?;
        if p.dim != r.dim {
            return Err(Error::DimensionMismatch("declared dim differs from stage matrices".into()));
        }
        Ok(p)
    }
}

impl PolyhedralCuProcess {
    /// Validates shapes, Δ_1 = 0, per-stage boundedness and joint nonemptiness.
    pub fn new(stages: Vec<PolyhedralStage>) -> Result<Self> {
        let periods = stages.len();
        if periods == 0 {
            return Err(Error::InvalidInstance("at least one period required".into()));
        }
        let dim = stages[0].g_mat.cols();
        if dim == 0 {
            return Err(Error::InvalidInstance("dimension must be positive".into()));
        }
        for (t, s) in stages.iter().enumerate() {
            let k = s.g_mat.rows();
            if s.g_mat.cols() != dim || s.delta.cols() != dim || s.delta.rows() != k {
                return Err(Error::DimensionMismatch(format!("stage {t}: G and Δ shapes disagree")));
            }
            check_len(&s.g_vec, k, "g_t")?;
            if !s.g_vec.is_finite() {
                return Err(Error::InvalidInstance("non-finite g entries".into()));
            }
        }
        if stages[0].delta.max_abs() != 0.0 {
            return Err(Error::InvalidInstance("Δ_1 must be zero".into()));
        }
        let p = PolyhedralCuProcess { periods, dim, stages };
        p.check_bounded()?;
        p.check_nonempty()?;
        Ok(p)
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stage(&self, t: usize) -> &PolyhedralStage {
        &self.stages[t]
    }

    pub fn stages(&self) -> &[PolyhedralStage] {
        &self.stages
    }

    /// Every stage polyhedron is bounded iff its recession cone {v : G_t v ≥ 0}
    /// is {0}; checked by maximizing ±e_i over the cone.
    fn check_bounded(&self) -> Result<()> {
        for (t, s) in self.stages.iter().enumerate() {
            for i in 0..self.dim {
                for sign in [1.0, -1.0] {
                    let mut lp = LpProblem::new(Objective::Max);
                    for j in 0..self.dim {
                        lp.add_free_var(if j == i { sign } else { 0.0 });
                    }
                    for r in 0..s.g_mat.rows() {
                        lp.add_dense_row(s.g_mat.row(r), RowSense::Ge, 0.0);
                    }
                    let sol = solve_lp(&lp)?;
                    if sol.status == LpStatus::Unbounded {
                        return Err(Error::InvalidInstance(format!(
                            "stage {t} polyhedron is unbounded along coordinate {i}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_nonempty(&self) -> Result<()> {
        let x: Vec<DenseVector> = (0..self.periods).map(|_| DenseVector::zeros(self.dim)).collect();
        let lp = self.joint_lp(&x)?;
        match solve_lp(&lp)?.status {
            LpStatus::Optimal => Ok(()),
            LpStatus::Infeasible => Err(Error::InvalidInstance("joint polyhedron is empty".into())),
            LpStatus::Unbounded => Err(Error::InvalidInstance("joint polyhedron is unbounded".into())),
        }
    }

    /// max Σ x_tᵀd_t over the joint polyhedron; column t·m + i is d_{t,i}.
    pub fn joint_lp(&self, x: &[DenseVector]) -> Result<LpProblem> {
        if x.len() != self.periods {
            return Err(Error::DimensionMismatch("decision count vs periods".into()));
        }
        let m = self.dim;
        let mut lp = LpProblem::new(Objective::Max);
        for (t, xt) in x.iter().enumerate() {
            check_len(xt, m, "decision vector")?;
            for (i, c) in xt.iter().enumerate() {
                lp.add_named_var(format!("d_{}_{}", t + 1, i + 1), f64::NEG_INFINITY, f64::INFINITY, *c);
            }
        }
        for (t, s) in self.stages.iter().enumerate() {
            for r in 0..s.g_mat.rows() {
                let mut coeffs: Vec<(usize, f64)> = Vec::new();
                for i in 0..m {
                    let a = s.g_mat[(r, i)];
                    if a != 0.0 {
                        coeffs.push((t * m + i, a));
                    }
                }
                if t > 0 {
                    for i in 0..m {
                        let a = s.delta[(r, i)];
                        if a != 0.0 {
                            coeffs.push(((t - 1) * m + i, -a));
                        }
                    }
                }
                lp.add_row(coeffs, RowSense::Ge, s.g_vec[r]);
            }
        }
        Ok(lp)
    }

    /// Membership of `d` in the period-`t` polyhedron given `d_prev`
    /// (ignored for t = 0, where Δ_1 = 0).
    pub fn member_polyhedral(&self, t: usize, d_prev: &[f64], d: &[f64]) -> Result<bool> {
        if t >= self.periods {
            return Err(Error::DimensionMismatch(format!("period {t} out of range")));
        }
        check_len(d, self.dim, "point")?;
        let s = &self.stages[t];
        let shift = if t == 0 {
            vec![0.0; s.g_mat.rows()]
        } else {
            check_len(d_prev, self.dim, "previous point")?;
            s.delta.mul_vec(d_prev)
        };
        let gd = s.g_mat.mul_vec(d);
        Ok((0..gd.len()).all(|r| gd[r] >= s.g_vec[r] + shift[r] - 1e-9))
    }
}
