//! Oracles shared by the integration tests. Everything here is computed
//! from first principles (path enumeration, vertex enumeration with
//! nalgebra, direct sampling) rather than through the library's solvers.
#![allow(dead_code)]

use cuopt::cu_sets::{EllipsoidalCuProcess, MatrixCuProcess, MomentAmbiguityProcess, PolyhedralCuProcess};
use cuopt::ro::AroPolyhedralInstance;
use cuopt::lp::{LpProblem, Objective, RowSense};
use cuopt::dro::{NestedDroResult, StageCost, StageMomentSet};
use cuopt::numerics::DenseVector;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Next center A_t μ_t + F_t d_t + c_t, recomputed from the raw coefficients.
fn center_update(proc: &EllipsoidalCuProcess, t: usize, mu: &[f64], d: &[f64]) -> Vec<f64> {
    let (a, f, c) = proc.center_step(t);
    let m = mu.len();
    (0..m)
        .map(|i| (0..m).map(|j| a[(i, j)] * mu[j] + f[(i, j)] * d[j]).sum::<f64>() + c[i])
        .collect()
}

/// m = 1: the worst case of Σ x_t d_t is attained on a path of interval
/// endpoints, so the maximum over all 2^T endpoint paths is exact.
pub fn center_endpoint_oracle(proc: &EllipsoidalCuProcess, x: &[DenseVector]) -> f64 {
    assert_eq!(proc.dim(), 1);
    let t_max = proc.periods();
    let mut best = f64::NEG_INFINITY;
    for bits in 0..1u32 << t_max {
        let mut mu = proc.mu1()[0];
        let mut total = 0.0;
        for t in 0..t_max {
            let sign = if bits >> t & 1 == 1 { 1.0 } else { -1.0 };
            let d = mu + sign * proc.radius(t) * proc.chol(t)[(0, 0)].abs();
            total += x[t][0] * d;
            if t + 1 < t_max {
                mu = center_update(proc, t, &[mu], &[d])[0];
            }
        }
        best = best.max(total);
    }
    best
}

pub fn unit_sphere(g: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| g.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let n = dotv(&v, &v).sqrt();
        if n > 1e-12 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// Maximum of Σ x_tᵀd_t over `n` paths with every d_t on the boundary of its
/// (center-propagated) ellipsoid μ_t + r_t L_t u, ‖u‖ = 1.
pub fn center_boundary_samples(proc: &EllipsoidalCuProcess, x: &[DenseVector], n: usize, seed: u64) -> f64 {
    let (t_max, m) = (proc.periods(), proc.dim());
    let mut g = rng(seed);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..n {
        let mut mu = proc.mu1().0.clone();
        let mut total = 0.0;
        for t in 0..t_max {
            let u = unit_sphere(&mut g, m);
            let l = proc.chol(t);
            let lu: Vec<f64> = (0..m).map(|i| (0..m).map(|j| l[(i, j)] * u[j]).sum()).collect();
            let d: Vec<f64> = (0..m).map(|i| mu[i] + proc.radius(t) * lu[i]).collect();
            total += dotv(&x[t], &d);
            if t + 1 < t_max {
                mu = center_update(proc, t, &mu, &d);
            }
        }
        best = best.max(total);
    }
    best
}

/// m = 1 covariance-dependent process: maximum over all paths whose
/// normalized positions u_t lie on a `k`-point grid of [−1, 1]
/// (endpoints included). A lower bound on the nested worst case.
pub fn matrix_grid_worst_case(proc: &MatrixCuProcess, x: &[DenseVector], k: usize) -> f64 {
    assert_eq!(proc.dim(), 1);
    let grid: Vec<f64> = (0..k).map(|i| -1.0 + 2.0 * i as f64 / (k - 1) as f64).collect();
    fn go(proc: &MatrixCuProcess, x: &[DenseVector], grid: &[f64], t: usize, sigma: f64) -> f64 {
        let mu = proc.mean(t)[0];
        let half = proc.radius(t) * sigma.max(0.0).sqrt();
        let mut best = f64::NEG_INFINITY;
        for &u in grid {
            let d = mu + half * u;
            let mut v = x[t][0] * d;
            if t + 1 < proc.periods() {
                let (a, f, c) = proc.step(t);
                v += go(proc, x, grid, t + 1, a * sigma + f * (d - mu).powi(2) + c[(0, 0)]);
            }
            best = best.max(v);
        }
        best
    }
    go(proc, x, &grid, 0, proc.sigma1()[(0, 0)])
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Vertices of {z : rows[i]·z ≥ rhs[i]} found by solving every square
/// subsystem; empty if the polyhedron has no vertex.
pub fn polytope_vertices(rows: &[Vec<f64>], rhs: &[f64], dim: usize) -> Vec<Vec<f64>> {
    let mut verts = Vec::new();
    if dim == 0 {
        return vec![Vec::new()];
    }
    for subset in combinations(rows.len(), dim) {
        let a = DMatrix::from_fn(dim, dim, |i, j| rows[subset[i]][j]);
        let b = DVector::from_fn(dim, |i, _| rhs[subset[i]]);
        let Some(z) = a.lu().solve(&b) else { continue };
        let z: Vec<f64> = z.iter().copied().collect();
        if !z.iter().all(|v| v.is_finite()) {
            continue;
        }
        let feasible = rows
            .iter()
            .zip(rhs)
            .all(|(r, b)| dotv(r, &z) >= b - 1e-9 * (1.0 + b.abs()));
        if feasible {
            verts.push(z);
        }
    }
    verts
}

/// max cᵀz over a bounded polytope by enumerating its vertices.
pub fn vertex_max(rows: &[Vec<f64>], rhs: &[f64], c: &[f64]) -> Option<f64> {
    polytope_vertices(rows, rhs, c.len())
        .iter()
        .map(|z| dotv(c, z))
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
}

pub fn min_eig(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let a = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[i][j] + m[j][i]));
    a.symmetric_eigen().eigenvalues.iter().fold(f64::INFINITY, |x, y| x.min(*y))
}

/// Largest violation of the moment conditions by a distribution on the
/// stage set's support: mass balance, mean box and cap − E[(d−μ⁰)(d−μ⁰)ᵀ] ⪰ 0.
pub fn moment_violation(set: &StageMomentSet, masses: &[f64]) -> f64 {
    let m = set.dim();
    let mut viol = (masses.iter().sum::<f64>() - 1.0).abs();
    viol = viol.max(masses.iter().fold(0.0f64, |v, w| v.max(-w)));
    let mut mean = vec![0.0; m];
    let mut second = vec![vec![0.0; m]; m];
    for (d, w) in set.support.iter().zip(masses) {
        for i in 0..m {
            mean[i] += w * d[i];
            for j in 0..m {
                second[i][j] += w * (d[i] - set.anchor[i]) * (d[j] - set.anchor[j]);
            }
        }
    }
    for i in 0..m {
        viol = viol.max((mean[i] - set.center[i]).abs() - set.delta[i]);
    }
    let slack: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| set.cap[(i, j)] - second[i][j]).collect()).collect();
    viol.max(-min_eig(&slack))
}

/// E[Σ h_t] under the joint distribution built by chaining the reported
/// conditionals (fixed supports), computed without the library's chaining.
pub fn chained_expectation(proc: &MomentAmbiguityProcess, res: &NestedDroResult, costs: &[&dyn StageCost]) -> f64 {
    assert_eq!(proc.periods(), 2);
    let first = res.conditionals.iter().find(|c| c.stage == 1).expect("stage 1");
    let mut total = 0.0;
    for (i, w1) in first.distribution.masses.iter().enumerate() {
        let d1 = &proc.support(0)[i];
        let second = res.conditionals.iter().find(|c| c.stage == 2 && c.path == vec![i]).expect("stage 2");
        for (j, w2) in second.distribution.masses.iter().enumerate() {
            let d2 = &proc.support(1)[j];
            total += w1 * w2 * (costs[0].eval(d1) + costs[1].eval(d2));
        }
    }
    total
}

/// One-sided two-proportion z statistic for `a − b`.
pub fn z_diff(a: f64, na: usize, b: f64, nb: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let pooled = (a * na as f64 + b * nb as f64) / (na + nb) as f64;
    let se = (pooled * (1.0 - pooled)).max(0.0).sqrt() * (1.0 / na as f64 + 1.0 / nb as f64).sqrt();
    if se == 0.0 {
        (a - b).signum() * f64::INFINITY
    } else {
        (a - b) / se
    }
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}


/// Feasible, bounded LP with `n` boxed columns and `m` rows around a random
/// interior point.
pub fn random_lp(g: &mut ChaCha8Rng, n: usize, m: usize) -> LpProblem {
    let objective = if g.gen_bool(0.5) { Objective::Max } else { Objective::Min };
    let mut p = LpProblem::new(objective);
    let mut x0 = Vec::with_capacity(n);
    for _ in 0..n {
        let (lo, hi) = if g.gen_bool(0.3) { (-g.gen_range(0.5..3.0), g.gen_range(0.5..3.0)) } else { (0.0, g.gen_range(1.0..5.0)) };
        p.add_var(lo, hi, g.gen_range(-1.0..1.0));
        x0.push(g.gen_range(lo..hi));
    }
    for _ in 0..m {
        let a: Vec<f64> = (0..n).map(|_| if g.gen_bool(0.8) { g.gen_range(-1.0..1.0) } else { 0.0 }).collect();
        let act = dotv(&a, &x0);
        let (sense, rhs) = match g.gen_range(0..5) {
            0 => (RowSense::Eq, act),
            1 | 2 => (RowSense::Le, act + g.gen_range(0.0..1.0)),
            _ => (RowSense::Ge, act - g.gen_range(0.0..1.0)),
        };
        p.add_dense_row(&a, sense, rhs);
    }
    p
}

/// Optimal value of a boxed LP by vertex enumeration.
pub fn lp_vertex_value(p: &LpProblem) -> Option<f64> {
    let n = p.num_cols();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let unit = |j: usize, s: f64| {
        let mut e = vec![0.0; n];
        e[j] = s;
        e
    };
    for j in 0..n {
        if p.lower[j].is_finite() {
            rows.push(unit(j, 1.0));
            rhs.push(p.lower[j]);
        }
        if p.upper[j].is_finite() {
            rows.push(unit(j, -1.0));
            rhs.push(-p.upper[j]);
        }
    }
    for r in &p.rows {
        let mut a = vec![0.0; n];
        for (j, v) in &r.coeffs {
            a[*j] += v;
        }
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        match r.sense {
            RowSense::Ge => {
                rows.push(a);
                rhs.push(r.rhs);
            }
            RowSense::Le => {
                rows.push(neg);
                rhs.push(-r.rhs);
            }
            RowSense::Eq => {
                rows.push(a);
                rhs.push(r.rhs);
                rows.push(neg);
                rhs.push(-r.rhs);
            }
        }
    }
    let sign = if p.objective == Objective::Max { 1.0 } else { -1.0 };
    let c: Vec<f64> = p.cost.iter().map(|v| sign * v).collect();
    vertex_max(&rows, &rhs, &c).map(|v| sign * v)
}

/// Worst case of Σ x_tᵀd_t by vertex enumeration of the joint polytope.
pub fn polyhedral_vertex_oracle(p: &PolyhedralCuProcess, x: &[DenseVector]) -> f64 {
    // joint polytope in (d_1, ..., d_T): G_t d_t − Δ_t d_{t−1} ≥ g_t
    let (t_max, m) = (p.periods(), p.dim());
    let n = t_max * m;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for t in 0..t_max {
        let st = p.stage(t);
        for r in 0..st.g_mat.rows() {
            let mut a = vec![0.0; n];
            for j in 0..m {
                a[t * m + j] = st.g_mat[(r, j)];
                if t > 0 {
                    a[(t - 1) * m + j] = -st.delta[(r, j)];
                }
            }
            rows.push(a);
            rhs.push(st.g_vec[r]);
        }
    }
    let c: Vec<f64> = x.iter().flat_map(|v| v.iter().copied()).collect();
    vertex_max(&rows, &rhs, &c).expect("bounded nonempty polytope")
}

/// Per-row ARO feasibility by vertex enumeration of the joint (d_1, d_2) polytope.
pub fn aro_row_oracle(inst: &AroPolyhedralInstance, i: usize) -> f64 {
    let (m1, m2) = (inst.g1_mat.cols(), inst.g2_mat.cols());
    let n = m1 + m2;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for r in 0..inst.g1_mat.rows() {
        let mut a = vec![0.0; n];
        a[..m1].copy_from_slice(inst.g1_mat.row(r));
        rows.push(a);
        rhs.push(inst.g1_vec[r]);
    }
    for r in 0..inst.g2_mat.rows() {
        let mut a = vec![0.0; n];
        for j in 0..m1 {
            a[j] = -inst.delta1[(r, j)];
        }
        a[m1..].copy_from_slice(inst.g2_mat.row(r));
        rows.push(a);
        rhs.push(inst.g2_vec[r]);
    }
    // [A_22 X_2]_i over d_1
    let ax: Vec<f64> = (0..m1)
        .map(|j| (0..inst.a22.cols()).map(|k| inst.a22[(i, k)] * inst.x2_rule[(k, j)]).sum())
        .collect();
    let c: Vec<f64> = ax.iter().map(|v| -v).chain(inst.b2.row(i).iter().copied()).collect();
    vertex_max(&rows, &rhs, &c).expect("bounded") - dotv(inst.a21.row(i), &inst.x1)
}

/// Largest first-stage row residual over the vertices of the first-stage set.
pub fn aro_first_stage_oracle(inst: &AroPolyhedralInstance) -> f64 {
    let (Some(a11), Some(b1)) = (&inst.a11, &inst.b1) else { return f64::NEG_INFINITY };
    let rows: Vec<Vec<f64>> = (0..inst.g1_mat.rows()).map(|r| inst.g1_mat.row(r).to_vec()).collect();
    let verts = polytope_vertices(&rows, &inst.g1_vec, inst.g1_mat.cols());
    (0..a11.rows())
        .map(|k| verts.iter().map(|v| dotv(b1.row(k), v)).fold(f64::NEG_INFINITY, f64::max) - dotv(a11.row(k), &inst.x1))
        .fold(f64::NEG_INFINITY, f64::max)
}
