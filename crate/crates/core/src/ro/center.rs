use serde::{Deserialize, Serialize};

use super::system::{ConstraintSystem, VarSign};
use crate::cu_sets::{check_count, check_len, EllipsoidalCuProcess};
use crate::error::{Error, Result};
use crate::lp::RowSense;
use crate::numerics::{dot, two_norm, DenseMatrix, DenseVector};
use crate::rng;

/// y_t, C_t, R_t of the center-dependent counterpart (index 0 is period 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterCuRecursion {
    pub y: Vec<DenseVector>,
    pub c: Vec<f64>,
    pub r: Vec<f64>,
}

fn check_decision(x: &[DenseVector], periods: usize, dim: usize) -> Result<()> {
    check_count(x, periods, "decision")?;
    for xt in x {
        check_len(xt, dim, "decision vector")?;
    }
    Ok(())
}

/// μ_1ᵀy_1 + C_1 + R_1 with
/// y_T = x_T, y_k = x_k + (F_k + A_k)ᵀy_{k+1},
/// C_k = c_kᵀy_{k+1} + C_{k+1},
/// R_k = r_k‖L_kᵀ(x_k + F_kᵀy_{k+1})‖ + R_{k+1}.
pub fn center_cu_lhs(x: &[DenseVector], proc: &EllipsoidalCuProcess) -> Result<(f64, CenterCuRecursion)> {
    let (t_max, m) = (proc.periods(), proc.dim());
    check_decision(x, t_max, m)?;
    let mut y = vec![DenseVector::zeros(m); t_max];
    let mut c = vec![0.0; t_max];
    let mut r = vec![0.0; t_max];
    y[t_max - 1] = x[t_max - 1].clone();
    r[t_max - 1] = proc.radius(t_max - 1) * two_norm(&proc.chol(t_max - 1).tr_mul_vec(&x[t_max - 1]));
    for k in (0..t_max - 1).rev() {
        let (a, f, ck) = proc.center_step(k);
        let fy = f.tr_mul_vec(&y[k + 1]);
        let ay = a.tr_mul_vec(&y[k + 1]);
        let shock: Vec<f64> = (0..m).map(|i| x[k][i] + fy[i]).collect();
        y[k] = DenseVector((0..m).map(|i| shock[i] + ay[i]).collect());
        c[k] = dot(ck, &y[k + 1]) + c[k + 1];
        r[k] = proc.radius(k) * two_norm(&proc.chol(k).tr_mul_vec(&shock)) + r[k + 1];
    }
    let lhs = dot(proc.mu1(), &y[0]) + c[0] + r[0];
    Ok((lhs, CenterCuRecursion { y, c, r }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum OracleMode {
    /// Endpoint recursion, exact for one-dimensional sets.
    Exact1d,
    /// Max over sampled boundary paths; a lower bound.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Nested worst case max_{d_1} [d_1ᵀx_1 + max_{d_2 ∈ U_2(d_1)} [...]] evaluated directly.
pub fn nested_worst_case_oracle(x: &[DenseVector], proc: &EllipsoidalCuProcess, mode: OracleMode) -> Result<f64> {
    check_decision(x, proc.periods(), proc.dim())?;
    match mode {
        OracleMode::Exact1d => {
            if proc.dim() != 1 {
                return Err(Error::ModeUnsupportedForDimension(proc.dim()));
            }
            Ok(endpoint_value(x, proc, 0, proc.mu1()[0]))
        }
        OracleMode::MonteCarlo { samples, seed } => Ok(monte_carlo(x, proc, samples, seed)),
    }
}

/// W_t(μ) = max over d ∈ {μ ± r_t|L_t|} of d·x_t + W_{t+1}(next center); the
/// value function is convex in μ so the interval maximum sits at an endpoint.
fn endpoint_value(x: &[DenseVector], proc: &EllipsoidalCuProcess, t: usize, mu: f64) -> f64 {
    let half = proc.radius(t) * proc.chol(t)[(0, 0)].abs();
    let last = t + 1 == proc.periods();
    [mu - half, mu + half]
        .iter()
        .map(|&d| {
            let here = d * x[t][0];
            if last {
                here
            } else {
                let next = proc.next_center(t, &[mu], &[d])[0];
                here + endpoint_value(x, proc, t + 1, next)
            }
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn monte_carlo(x: &[DenseVector], proc: &EllipsoidalCuProcess, samples: usize, seed: u64) -> f64 {
    let m = proc.dim();
    let mut best = f64::NEG_INFINITY;
    for s in 0..samples {
        let mut rng = rng::stream(seed, &[s as u64]);
        let mut mu = proc.mu1().0.clone();
        let mut total = 0.0;
        for t in 0..proc.periods() {
            let u = rng::on_sphere(&mut rng, m, proc.radius(t));
            let lu = proc.chol(t).mul_vec(&u);
            let d: Vec<f64> = (0..m).map(|i| mu[i] + lu[i]).collect();
            total += dot(&d, &x[t]);
            if t + 1 < proc.periods() {
                mu = proc.next_center(t, &mu, &d);
            }
        }
        best = best.max(total);
    }
    best
}

/// Linear map v ↦ M v over the stacked decision (x_1; …; x_T), stored as m × Tm.
type LinearMap = DenseMatrix;

fn select(t: usize, m: usize, periods: usize) -> LinearMap {
    DenseMatrix::from_fn(m, m * periods, |i, j| if j == t * m + i { 1.0 } else { 0.0 })
}

fn compose(a_t: &DenseMatrix, map: &LinearMap) -> LinearMap {
    a_t.transpose().matmul(map).expect("conforming shapes")
}

pub(crate) fn decision_vars(sys: &mut ConstraintSystem, periods: usize, m: usize) -> Vec<usize> {
    let mut cols = Vec::with_capacity(periods * m);
    for t in 0..periods {
        for i in 0..m {
            cols.push(sys.add_var(&format!("x_{}_{}", t + 1, i + 1), VarSign::Free));
        }
    }
    cols
}

/// The counterpart as cone rows in the decision variables x_{t,i}:
/// μ_1ᵀy_1 + C_1 + Σ_k s_k ≤ B with ‖r_k L_kᵀ(x_k + F_kᵀy_{k+1})‖ ≤ s_k.
pub fn center_cu_system(proc: &EllipsoidalCuProcess, budget: f64) -> ConstraintSystem {
    let (t_max, m) = (proc.periods(), proc.dim());
    let mut sys = ConstraintSystem::new();
    let cols = decision_vars(&mut sys, t_max, m);
    let s: Vec<usize> = (0..t_max).map(|k| sys.add_var(&format!("s_{}", k + 1), VarSign::Nonnegative)).collect();
    let mut y: Vec<LinearMap> = vec![DenseMatrix::zeros(m, m * t_max); t_max];
    let mut shocks: Vec<LinearMap> = vec![DenseMatrix::zeros(m, m * t_max); t_max];
    let mut c_row = vec![0.0; m * t_max];
    y[t_max - 1] = select(t_max - 1, m, t_max);
    shocks[t_max - 1] = y[t_max - 1].clone();
    for k in (0..t_max - 1).rev() {
        let (a, f, ck) = proc.center_step(k);
        let shock = select(k, m, t_max).add(&compose(f, &y[k + 1])).expect("shapes");
        y[k] = shock.add(&compose(a, &y[k + 1])).expect("shapes");
        let cy = y[k + 1].tr_mul_vec(ck);
        c_row.iter_mut().zip(cy).for_each(|(acc, v)| *acc += v);
        shocks[k] = shock;
    }
    let mut lhs = y[0].tr_mul_vec(proc.mu1());
    lhs.iter_mut().zip(&c_row).for_each(|(a, c)| *a += c);
    let mut row: Vec<(usize, f64)> = lhs.iter().enumerate().map(|(j, v)| (cols[j], *v)).collect();
    row.extend(s.iter().map(|&c| (c, 1.0)));
    sys.add_linear(&row, RowSense::Le, budget);
    for k in 0..t_max {
        let body_map = compose(proc.chol(k), &shocks[k]).scaled(proc.radius(k));
        let head = sys.affine(0.0, &[(s[k], 1.0)]);
        let body = (0..m)
            .map(|i| {
                let coeffs: Vec<(usize, f64)> = body_map.row(i).iter().enumerate().map(|(j, v)| (cols[j], *v)).collect();
                sys.affine(0.0, &coeffs)
            })
            .collect();
        sys.add_soc(head, body);
    }
    sys
}
