//! Two-period adjustable constraints with the second decision replaced by
//! x_2(d_1) = X_2 d_1 (constant term carried by a unit first component of d_1).

use serde::{Deserialize, Serialize};

use super::system::{ConstraintSystem, VarSign};
use crate::error::{Error, Result};
use crate::lp::RowSense;
use crate::numerics::{dot, two_norm, DenseMatrix, DenseVector};

/// Rows A_21 x_1 + A_22 X_2 d_1 ≥ B_2 d_2 for all d_1 ∈ {G_1 d_1 ≥ g_1} and
/// d_2 ∈ {G_2 d_2 ≥ g_2 + Δ_1 d_1}, plus optionally A_11 x_1 ≥ B_1 d_1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AroPolyhedralInstance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a11: Option<DenseMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1: Option<DenseMatrix>,
    pub a21: DenseMatrix,
    pub a22: DenseMatrix,
    pub b2: DenseMatrix,
    pub g1_mat: DenseMatrix,
    pub g1_vec: DenseVector,
    pub g2_mat: DenseMatrix,
    pub g2_vec: DenseVector,
    pub delta1: DenseMatrix,
    pub x2_rule: DenseMatrix,
    pub x1: DenseVector,
}

impl AroPolyhedralInstance {
    pub fn validate(&self) -> Result<()> {
        let n1 = self.x1.len();
        let m1 = self.g1_mat.cols();
        let m2 = self.g2_mat.cols();
        let rows = self.a21.rows();
        let bad = |w: &str| Err(Error::DimensionMismatch(format!("ARO instance: {w}")));
        if self.a21.cols() != n1 {
            return bad("A_21 columns vs x_1");
        }
        if self.a22.rows() != rows || self.a22.cols() != self.x2_rule.rows() || self.x2_rule.cols() != m1 {
            return bad("A_22 / X_2 shapes");
        }
        if self.b2.rows() != rows || self.b2.cols() != m2 {
            return bad("B_2 shape");
        }
        if self.g1_vec.len() != self.g1_mat.rows() || self.g2_vec.len() != self.g2_mat.rows() {
            return bad("g vectors vs G rows");
        }
        if self.delta1.rows() != self.g2_mat.rows() || self.delta1.cols() != m1 {
            return bad("Δ_1 shape");
        }
        match (&self.a11, &self.b1) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                if a.cols() != n1 || b.rows() != a.rows() || b.cols() != m1 {
                    return bad("A_11 / B_1 shapes");
                }
            }
            _ => return bad("A_11 and B_1 come together"),
        }
        Ok(())
    }

    /// Row i of A_22 X_2 as a vector over d_1.
    pub fn adaptive_row(&self, i: usize) -> Vec<f64> {
        self.x2_rule.tr_mul_vec(self.a22.row(i))
    }
}

fn add_second_stage_row(sys: &mut ConstraintSystem, inst: &AroPolyhedralInstance, i: usize) {
    let k1 = inst.g1_mat.rows();
    let k2 = inst.g2_mat.rows();
    let p: Vec<usize> = (0..k1).map(|r| sys.add_var(&format!("p_{}_{}", i + 1, r + 1), VarSign::Nonpositive)).collect();
    let q: Vec<usize> = (0..k2).map(|r| sys.add_var(&format!("q_{}_{}", i + 1, r + 1), VarSign::Nonpositive)).collect();
    let ax = inst.adaptive_row(i);
    // G_1ᵀp − Δ_1ᵀq = −[A_22 X_2]_i
    for j in 0..inst.g1_mat.cols() {
        let mut coeffs: Vec<(usize, f64)> = (0..k1).map(|r| (p[r], inst.g1_mat[(r, j)])).collect();
        coeffs.extend((0..k2).map(|r| (q[r], -inst.delta1[(r, j)])));
        sys.add_linear(&coeffs, RowSense::Eq, -ax[j]);
    }
    // G_2ᵀq = B_{2,i}
    for j in 0..inst.g2_mat.cols() {
        let coeffs: Vec<(usize, f64)> = (0..k2).map(|r| (q[r], inst.g2_mat[(r, j)])).collect();
        sys.add_linear(&coeffs, RowSense::Eq, inst.b2[(i, j)]);
    }
    // g_1ᵀp + g_2ᵀq ≤ A_{21,i}ᵀx_1
    let mut coeffs: Vec<(usize, f64)> = (0..k1).map(|r| (p[r], inst.g1_vec[r])).collect();
    coeffs.extend((0..k2).map(|r| (q[r], inst.g2_vec[r])));
    sys.add_linear(&coeffs, RowSense::Le, dot(inst.a21.row(i), &inst.x1));
}

fn add_first_stage_row(sys: &mut ConstraintSystem, inst: &AroPolyhedralInstance, a11: &DenseMatrix, b1: &DenseMatrix, i: usize) {
    let k1 = inst.g1_mat.rows();
    let w: Vec<usize> = (0..k1).map(|r| sys.add_var(&format!("w_{}_{}", i + 1, r + 1), VarSign::Nonpositive)).collect();
    for j in 0..inst.g1_mat.cols() {
        let coeffs: Vec<(usize, f64)> = (0..k1).map(|r| (w[r], inst.g1_mat[(r, j)])).collect();
        sys.add_linear(&coeffs, RowSense::Eq, b1[(i, j)]);
    }
    let coeffs: Vec<(usize, f64)> = (0..k1).map(|r| (w[r], inst.g1_vec[r])).collect();
    sys.add_linear(&coeffs, RowSense::Le, dot(a11.row(i), &inst.x1));
}

/// Dual system of one second-stage row: feasible iff
/// max B_{2,i}ᵀd_2 − [A_22 X_2]_iᵀd_1 ≤ A_{21,i}ᵀx_1 over the connected sets.
pub fn aro_polyhedral_row_system(inst: &AroPolyhedralInstance, i: usize) -> Result<ConstraintSystem> {
    inst.validate()?;
    if i >= inst.a21.rows() {
        return Err(Error::DimensionMismatch(format!("row {i} out of range")));
    }
    let mut sys = ConstraintSystem::new();
    add_second_stage_row(&mut sys, inst, i);
    Ok(sys)
}

/// Every second-stage row (dual vectors p_i, q_i), then the first-stage rows when present.
pub fn aro_polyhedral_system(inst: &AroPolyhedralInstance) -> Result<ConstraintSystem> {
    inst.validate()?;
    let mut sys = ConstraintSystem::new();
    for i in 0..inst.a21.rows() {
        add_second_stage_row(&mut sys, inst, i);
    }
    if let (Some(a11), Some(b1)) = (&inst.a11, &inst.b1) {
        for i in 0..a11.rows() {
            add_first_stage_row(&mut sys, inst, a11, b1, i);
        }
    }
    Ok(sys)
}

/// Ellipsoidal sets U_1 = {μ_1 + L_1u_1}, U_2(d_1) = {A_2μ_1 + F_2d_1 + c_2 + L_2u_2}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AroEllipsoidalInstance {
    pub a21: DenseMatrix,
    pub a22: DenseMatrix,
    pub b2: DenseMatrix,
    pub x2_rule: DenseMatrix,
    pub x1: DenseVector,
    pub mu1: DenseVector,
    pub l1: DenseMatrix,
    pub l2: DenseMatrix,
    pub r1: f64,
    pub r2: f64,
    pub a2: DenseMatrix,
    pub f2: DenseMatrix,
    pub c2: DenseVector,
}

/// Per-row worst case of B_{2,i}ᵀd_2 − [A_22X_2]_iᵀd_1 minus A_{21,i}ᵀx_1;
/// the rule is robustly feasible iff every residual is ≤ 1e-9.
pub fn aro_ellipsoidal_rows(inst: &AroEllipsoidalInstance) -> Result<Vec<f64>> {
    let m = inst.mu1.len();
    let rows = inst.a21.rows();
    let sq = |a: &DenseMatrix| a.rows() == m && a.cols() == m;
    if !(sq(&inst.l1) && sq(&inst.l2) && sq(&inst.a2) && sq(&inst.f2)) || inst.c2.len() != m {
        return Err(Error::DimensionMismatch("ARO ellipsoidal: set data must be m×m / length m".into()));
    }
    if inst.a21.cols() != inst.x1.len()
        || inst.a22.rows() != rows
        || inst.a22.cols() != inst.x2_rule.rows()
        || inst.x2_rule.cols() != m
        || inst.b2.rows() != rows
        || inst.b2.cols() != m
    {
        return Err(Error::DimensionMismatch("ARO ellipsoidal: constraint data shapes".into()));
    }
    let nominal: Vec<f64> = {
        let am = inst.a2.mul_vec(&inst.mu1);
        let fm = inst.f2.mul_vec(&inst.mu1);
        (0..m).map(|j| am[j] + fm[j] + inst.c2[j]).collect()
    };
    Ok((0..rows)
        .map(|i| {
            let b = inst.b2.row(i);
            let ax = inst.x2_rule.tr_mul_vec(inst.a22.row(i));
            let fb = inst.f2.tr_mul_vec(b);
            let first: Vec<f64> = (0..m).map(|j| fb[j] - ax[j]).collect();
            dot(b, &nominal) - dot(&ax, &inst.mu1)
                + inst.r2 * two_norm(&inst.l2.tr_mul_vec(b))
                + inst.r1 * two_norm(&inst.l1.tr_mul_vec(&first))
                - dot(inst.a21.row(i), &inst.x1)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> DenseMatrix {
        DenseMatrix::from_rows(&[vec![v]]).unwrap()
    }

    #[test]
    fn ellipsoidal_scalar_endpoints() {
        let inst = AroEllipsoidalInstance {
            a21: s(1.0),
            a22: s(0.5),
            b2: s(2.0),
            x2_rule: s(0.4),
            x1: DenseVector(vec![3.0]),
            mu1: DenseVector(vec![1.0]),
            l1: s(0.7),
            l2: s(1.1),
            r1: 1.5,
            r2: 0.5,
            a2: s(0.3),
            f2: s(0.6),
            c2: DenseVector(vec![0.2]),
        };
        let res = aro_ellipsoidal_rows(&inst).unwrap()[0];
        let mut best = f64::NEG_INFINITY;
        for u1 in [-1.5, 1.5] {
            for u2 in [-0.5, 0.5] {
                let d1 = 1.0 + 0.7 * u1;
                let d2 = 0.3 * 1.0 + 0.6 * d1 + 0.2 + 1.1 * u2;
                best = best.max(2.0 * d2 - 0.5 * 0.4 * d1 - 3.0);
            }
        }
        assert!((res - best).abs() < 1e-12);
    }

    #[test]
    fn polyhedral_zero_rule_is_first_period_only() {
        let inst = AroPolyhedralInstance {
            a11: Some(s(1.0)),
            b1: Some(s(1.0)),
            a21: s(1.0),
            a22: s(1.0),
            b2: s(0.0),
            g1_mat: DenseMatrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap(),
            g1_vec: DenseVector(vec![0.0, -1.0]),
            g2_mat: DenseMatrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap(),
            g2_vec: DenseVector(vec![0.0, -1.0]),
            delta1: DenseMatrix::from_rows(&[vec![0.2], vec![-0.2]]).unwrap(),
            x2_rule: s(0.0),
            x1: DenseVector(vec![1.0]),
        };
        assert!(aro_polyhedral_system(&inst).unwrap().is_feasible().unwrap());
        let tight = AroPolyhedralInstance { x1: DenseVector(vec![0.9]), ..inst };
        assert!(!aro_polyhedral_system(&tight).unwrap().is_feasible().unwrap());
        assert!(aro_polyhedral_row_system(&tight, 0).unwrap().is_feasible().unwrap());
    }
}
