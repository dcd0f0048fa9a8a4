use super::system::{ConstraintSystem, VarSign};
use crate::cu_sets::{check_count, check_len, PolyhedralCuProcess};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpStatus, Objective, RowSense};
use crate::numerics::DenseVector;

/// Columns of q_t in a dual system, one vector per period.
pub fn dual_columns(sys: &ConstraintSystem, proc: &PolyhedralCuProcess) -> Vec<Vec<usize>> {
    (0..proc.periods())
        .map(|t| {
            (0..proc.stage(t).g_mat.rows())
                .map(|r| sys.col(&format!("q_{}_{}", t + 1, r + 1)).expect("declared"))
                .collect()
        })
        .collect()
}

fn dual_rows(x: &[DenseVector], proc: &PolyhedralCuProcess) -> Result<(ConstraintSystem, Vec<(usize, f64)>)> {
    check_count(x, proc.periods(), "decision")?;
    let m = proc.dim();
    for xt in x {
        check_len(xt, m, "decision vector")?;
    }
    let mut sys = ConstraintSystem::new();
    let q: Vec<Vec<usize>> = (0..proc.periods())
        .map(|t| {
            (0..proc.stage(t).g_mat.rows())
                .map(|r| sys.add_var(&format!("q_{}_{}", t + 1, r + 1), VarSign::Nonpositive))
                .collect()
        })
        .collect();
    // G_tᵀq_t − Δ_{t+1}ᵀq_{t+1} = x_t, with Δ_{T+1} = 0
    for t in 0..proc.periods() {
        let s = proc.stage(t);
        for i in 0..m {
            let mut coeffs: Vec<(usize, f64)> = (0..s.g_mat.rows()).map(|r| (q[t][r], s.g_mat[(r, i)])).collect();
            if t + 1 < proc.periods() {
                let next = proc.stage(t + 1);
                coeffs.extend((0..next.delta.rows()).map(|r| (q[t + 1][r], -next.delta[(r, i)])));
            }
            sys.add_linear(&coeffs, RowSense::Eq, x[t][i]);
        }
    }
    let objective: Vec<(usize, f64)> = (0..proc.periods())
        .flat_map(|t| {
            let g = &proc.stage(t).g_vec;
            q[t].iter().zip(g.iter()).map(|(&c, &v)| (c, v)).collect::<Vec<_>>()
        })
        .collect();
    Ok((sys, objective))
}

/// Dual system in q_t ≤ 0: G_tᵀq_t − Δ_{t+1}ᵀq_{t+1} = x_t and Σ g_tᵀq_t ≤ B.
pub fn polyhedral_cu_dual_system(x: &[DenseVector], proc: &PolyhedralCuProcess, budget: f64) -> Result<ConstraintSystem> {
    let (mut sys, objective) = dual_rows(x, proc)?;
    sys.add_linear(&objective, RowSense::Le, budget);
    Ok(sys)
}

/// min Σ g_tᵀq_t over the dual rows, with the minimizing q.
pub fn polyhedral_dual_min(x: &[DenseVector], proc: &PolyhedralCuProcess) -> Result<(f64, Vec<DenseVector>)> {
    let (sys, objective) = dual_rows(x, proc)?;
    let sol = sys.optimize(Objective::Min, &objective)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::LpUnbounded),
        LpStatus::Unbounded => return Err(Error::LpInfeasible),
    }
    let q = dual_columns(&sys, proc)
        .iter()
        .map(|cols| DenseVector(cols.iter().map(|&c| sol.x[c]).collect()))
        .collect();
    Ok((sol.objective, q))
}

/// max Σ d_tᵀx_t over the joint polyhedron, with the maximizing path.
pub fn polyhedral_worst_case(x: &[DenseVector], proc: &PolyhedralCuProcess) -> Result<(f64, Vec<DenseVector>)> {
    let lp = proc.joint_lp(x)?;
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::LpInfeasible),
        LpStatus::Unbounded => return Err(Error::LpUnbounded),
    }
    let m = proc.dim();
    let path = (0..proc.periods()).map(|t| DenseVector(sol.x[t * m..(t + 1) * m].to_vec())).collect();
    Ok((sol.objective, path))
}
