use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::center::decision_vars;
use super::system::{ConstraintSystem, VarSign};
use crate::cu_sets::{check_count, check_len, MatrixCuProcess};
use crate::error::{Error, Result};
use crate::lp::RowSense;
use crate::numerics::{cholesky, dot, DenseMatrix, DenseVector};
use crate::rng;

pub const MAX_SIGN_HORIZON: usize = 5;

/// Signs n_{k,t} ∈ {−1, +1} for 1 ≤ k < t ≤ T, stored in lexicographic (k, t) order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignVector {
    pub periods: usize,
    pub signs: Vec<i8>,
}

impl SignVector {
    fn position(periods: usize, k: usize, t: usize) -> usize {
        // 0-based k < t
        (0..k).map(|j| periods - 1 - j).sum::<usize>() + (t - k - 1)
    }

    /// n_{k,t} for 0-based periods k < t.
    pub fn get(&self, k: usize, t: usize) -> f64 {
        self.signs[Self::position(self.periods, k, t)] as f64
    }
}

/// All 2^{T(T−1)/2} sign vectors, lexicographic with −1 before +1.
pub fn enumerate_sign_vectors(periods: usize) -> Result<Vec<SignVector>> {
    if periods > MAX_SIGN_HORIZON {
        return Err(Error::HorizonTooLarge(periods));
    }
    let len = periods * periods.saturating_sub(1) / 2;
    Ok((0..1usize << len)
        .map(|b| SignVector {
            periods,
            signs: (0..len).map(|p| if b >> (len - 1 - p) & 1 == 1 { 1 } else { -1 }).collect(),
        })
        .collect())
}

/// Π_{j=k}^{t−1} a_j (0-based; empty product 1).
fn a_prod(proc: &MatrixCuProcess, k: usize, t: usize) -> f64 {
    (k..t).map(|j| proc.step(j).0).product()
}

fn check_decision(x: &[DenseVector], proc: &MatrixCuProcess) -> Result<()> {
    check_count(x, proc.periods(), "decision")?;
    for xt in x {
        check_len(xt, proc.dim(), "decision vector")?;
    }
    Ok(())
}

fn sqrt_quad(m: &DenseMatrix, v: &[f64]) -> f64 {
    m.quad_form(v).max(0.0).sqrt()
}

/// Counterpart value for one sign vector.
pub fn matrix_cu_lhs_for(x: &[DenseVector], proc: &MatrixCuProcess, n: &SignVector) -> Result<f64> {
    check_decision(x, proc)?;
    let t_max = proc.periods();
    if n.periods != t_max {
        return Err(Error::DimensionMismatch("sign vector horizon".into()));
    }
    let m = proc.dim();
    let mut y: Vec<Vec<f64>> = vec![vec![0.0; m]; t_max];
    let mut r_acc = 0.0;
    y[t_max - 1] = x[t_max - 1].0.clone();
    for k in (0..t_max - 1).rev() {
        let (_, f, c) = proc.step(k);
        let mut yk = x[k].0.clone();
        for t in (k + 1)..t_max {
            let w = n.get(k, t) * proc.radius(t) * (a_prod(proc, k + 1, t) * f).sqrt();
            for i in 0..m {
                yk[i] += w * y[t][i];
            }
            r_acc += proc.radius(t) * (a_prod(proc, k + 1, t)).sqrt() * sqrt_quad(c, &y[t]);
        }
        y[k] = yk;
    }
    let mut lhs = r_acc;
    for t in 0..t_max {
        lhs += dot(proc.mean(t), &x[t]);
        lhs += proc.radius(t) * a_prod(proc, 0, t).sqrt() * sqrt_quad(proc.sigma1(), &y[t]);
    }
    Ok(lhs)
}

/// Max over all sign vectors; ties go to the lexicographically first vector.
pub fn matrix_cu_lhs(x: &[DenseVector], proc: &MatrixCuProcess) -> Result<(f64, SignVector)> {
    check_decision(x, proc)?;
    let signs = enumerate_sign_vectors(proc.periods())?;
    let values: Vec<Result<f64>> = signs.par_iter().map(|n| matrix_cu_lhs_for(x, proc, n)).collect();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        if v > best.0 {
            best = (v, i);
        }
    }
    Ok((best.0, signs[best.1].clone()))
}

/// Max of Σ d_tᵀx_t over sampled paths with u_t on the radius-r_t sphere
/// and Σ_t propagated along the path; a lower bound on the nested worst case.
pub fn matrix_sampled_worst_case(x: &[DenseVector], proc: &MatrixCuProcess, samples: usize, seed: u64) -> Result<f64> {
    check_decision(x, proc)?;
    let m = proc.dim();
    let l1 = MatrixCuProcess::factor(proc.sigma1())?;
    let mut best = f64::NEG_INFINITY;
    for s in 0..samples {
        let mut g = rng::stream(seed, &[s as u64]);
        let mut sigma = proc.sigma1().clone();
        let mut l = l1.clone();
        let mut total = 0.0;
        for t in 0..proc.periods() {
            if t > 0 {
                l = MatrixCuProcess::factor(&sigma)?;
            }
            let u = rng::on_sphere(&mut g, m, proc.radius(t));
            let lu = l.mul_vec(&u);
            let d: Vec<f64> = (0..m).map(|i| proc.mean(t)[i] + lu[i]).collect();
            total += dot(&d, &x[t]);
            if t + 1 < proc.periods() {
                sigma = proc.next_covariance(t, &sigma, &d);
            }
        }
        best = best.max(total);
    }
    Ok(best)
}

/// One cone block per sign vector, in the decision variables x_{t,i}.
pub fn matrix_cu_system(proc: &MatrixCuProcess, budget: f64) -> Result<ConstraintSystem> {
    let (t_max, m) = (proc.periods(), proc.dim());
    let signs = enumerate_sign_vectors(t_max)?;
    let l1 = MatrixCuProcess::factor(proc.sigma1())?;
    let lc: Vec<DenseMatrix> = (0..t_max - 1).map(|k| cholesky(&proc.step(k).2.symmetrized())).collect::<Result<_>>()?;
    let mut sys = ConstraintSystem::new();
    let cols = decision_vars(&mut sys, t_max, m);
    let select = |t: usize| DenseMatrix::from_fn(m, m * t_max, |i, j| if j == t * m + i { 1.0 } else { 0.0 });
    for (ni, n) in signs.iter().enumerate() {
        let mut y: Vec<DenseMatrix> = vec![DenseMatrix::zeros(m, m * t_max); t_max];
        y[t_max - 1] = select(t_max - 1);
        // (weight, factor, map) per norm term
        let mut norms: Vec<(f64, &DenseMatrix, DenseMatrix)> = Vec::new();
        for k in (0..t_max - 1).rev() {
            let f = proc.step(k).1;
            let mut yk = select(k);
            for t in (k + 1)..t_max {
                let w = n.get(k, t) * proc.radius(t) * (a_prod(proc, k + 1, t) * f).sqrt();
                yk.add_scaled(w, &y[t]);
                norms.push((proc.radius(t) * a_prod(proc, k + 1, t).sqrt(), &lc[k], y[t].clone()));
            }
            y[k] = yk;
        }
        for (t, yt) in y.iter().enumerate() {
            norms.push((proc.radius(t) * a_prod(proc, 0, t).sqrt(), &l1, yt.clone()));
        }
        let mut row: Vec<(usize, f64)> = Vec::new();
        for t in 0..t_max {
            for i in 0..m {
                row.push((cols[t * m + i], proc.mean(t)[i]));
            }
        }
        for (j, (w, factor, map)) in norms.into_iter().enumerate() {
            let s = sys.add_var(&format!("s_{}_{}", ni + 1, j + 1), VarSign::Nonnegative);
            row.push((s, 1.0));
            let body_map = factor.transpose().matmul(&map)?.scaled(w);
            let head = sys.affine(0.0, &[(s, 1.0)]);
            let body = (0..m)
                .map(|i| {
                    let coeffs: Vec<(usize, f64)> = body_map.row(i).iter().enumerate().map(|(j, v)| (cols[j], *v)).collect();
                    sys.affine(0.0, &coeffs)
                })
                .collect();
            sys.add_soc(head, body);
        }
        sys.add_linear(&row, RowSense::Le, budget);
    }
    Ok(sys)
}
