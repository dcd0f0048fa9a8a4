use super::{LpProblem, LpSolution, LpStatus, Objective, RowSense};
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Lu};

const PIVOT_TOL: f64 = 1e-9;
const MIN_PIVOT: f64 = 1e-11;
const OPT_TOL: f64 = 1e-9;

/// How an original column is represented by standard-form columns (all ≥ 0).
#[derive(Debug, Clone, Copy)]
enum ColMap {
    /// x = offset + x'
    Shift { col: usize, offset: f64 },
    /// x = offset − x'
    Flip { col: usize, offset: f64 },
    /// x = x⁺ − x⁻
    Split { pos: usize, neg: usize },
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

/// Standard form  min cᵀz  s.t.  A z = b, z ≥ 0, b ≥ 0.
struct StandardForm {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    cost: Vec<f64>,
    kinds: Vec<ColKind>,
    /// initial basis column for each row
    start_basis: Vec<usize>,
    /// for each original row: (standard row, sign applied)
    row_map: Vec<(usize, f64)>,
    col_map: Vec<ColMap>,
    cost_sign: f64,
}

fn standardize(p: &LpProblem) -> StandardForm {
    let cost_sign = if p.objective == Objective::Max { -1.0 } else { 1.0 };
    let mut col_map = Vec::with_capacity(p.num_cols());
    let mut n = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..p.num_cols() {
        let (l, u) = (p.lower[j], p.upper[j]);
        let m = if l.is_finite() && u.is_finite() && u <= l {
            ColMap::Fixed(l)
        } else if l.is_finite() {
            if u.is_finite() {
                bound_rows.push((n, u - l));
            }
            n += 1;
            ColMap::Shift { col: n - 1, offset: l }
        } else if u.is_finite() {
            n += 1;
            ColMap::Flip { col: n - 1, offset: u }
        } else {
            n += 2;
            ColMap::Split { pos: n - 2, neg: n - 1 }
        };
        col_map.push(m);
    }
    let n_structural = n;
    let mut cost = vec![0.0; n];
    for (j, m) in col_map.iter().enumerate() {
        let c = cost_sign * p.cost[j];
        match *m {
            ColMap::Shift { col, .. } => cost[col] = c,
            ColMap::Flip { col, .. } => cost[col] = -c,
            ColMap::Split { pos, neg } => {
                cost[pos] = c;
                cost[neg] = -c;
            }
            ColMap::Fixed(_) => {}
        }
    }

    // rows expressed over structural columns
    let mut rows: Vec<(Vec<f64>, RowSense, f64)> = Vec::new();
    for row in &p.rows {
        let mut dense = vec![0.0; n_structural];
        let mut rhs = row.rhs;
        for &(j, a) in &row.coeffs {
            match col_map[j] {
                ColMap::Shift { col, offset } => {
                    dense[col] += a;
                    rhs -= a * offset;
                }
                ColMap::Flip { col, offset } => {
                    dense[col] -= a;
                    rhs -= a * offset;
                }
                ColMap::Split { pos, neg } => {
                    dense[pos] += a;
                    dense[neg] -= a;
                }
                ColMap::Fixed(v) => rhs -= a * v,
            }
        }
        rows.push((dense, row.sense, rhs));
    }
    for &(col, width) in &bound_rows {
        let mut dense = vec![0.0; n_structural];
        dense[col] = 1.0;
        rows.push((dense, RowSense::Le, width));
    }

    // flip rows to nonnegative rhs, then append slack/artificial columns
    let m = rows.len();
    let mut signs = vec![1.0; m];
    for (i, (dense, sense, rhs)) in rows.iter_mut().enumerate() {
        if *rhs < 0.0 {
            signs[i] = -1.0;
            for v in dense.iter_mut() {
                *v = -*v;
            }
            *rhs = -*rhs;
            *sense = match *sense {
                RowSense::Le => RowSense::Ge,
                RowSense::Ge => RowSense::Le,
                RowSense::Eq => RowSense::Eq,
            };
        }
    }
    let n_slack = rows.iter().filter(|r| r.1 != RowSense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != RowSense::Le).count();
    let total = n_structural + n_slack + n_art;
    let mut kinds = vec![ColKind::Structural; n_structural];
    kinds.extend(std::iter::repeat(ColKind::Slack).take(n_slack));
    kinds.extend(std::iter::repeat(ColKind::Artificial).take(n_art));
    cost.resize(total, 0.0);
    let mut a = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    let mut start_basis = Vec::with_capacity(m);
    let mut next_slack = n_structural;
    let mut next_art = n_structural + n_slack;
    for (dense, sense, rhs) in rows {
        let mut full = dense;
        full.resize(total, 0.0);
        match sense {
            RowSense::Le => {
                full[next_slack] = 1.0;
                start_basis.push(next_slack);
                next_slack += 1;
            }
            RowSense::Ge => {
                full[next_slack] = -1.0;
                next_slack += 1;
                full[next_art] = 1.0;
                start_basis.push(next_art);
                next_art += 1;
            }
            RowSense::Eq => {
                full[next_art] = 1.0;
                start_basis.push(next_art);
                next_art += 1;
            }
        }
        a.push(full);
        b.push(rhs);
    }
    let row_map = (0..p.num_rows()).map(|i| (i, signs[i])).collect();
    StandardForm {
        a,
        b,
        cost,
        kinds,
        start_basis,
        row_map,
        col_map,
        cost_sign,
    }
}

enum Outcome {
    Optimal,
    Unbounded(usize),
}

struct Tableau {
    t: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// standard-form row index of each tableau row
    row_ids: Vec<usize>,
    ncols: usize,
    iterations: usize,
    max_iterations: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, q: usize) {
        let piv = self.t[r][q];
        let inv = 1.0 / piv;
        for v in self.t[r].iter_mut() {
            *v *= inv;
        }
        self.rhs[r] *= inv;
        self.t[r][q] = 1.0;
        let pivot_row = self.t[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.t.len() {
            if i == r {
                continue;
            }
            let f = self.t[i][q];
            if f == 0.0 {
                continue;
            }
            for (v, pv) in self.t[i].iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.t[i][q] = 0.0;
            self.rhs[i] -= f * pivot_rhs;
            if self.rhs[i] < 0.0 && self.rhs[i] > -1e-11 {
                self.rhs[i] = 0.0;
            }
        }
        self.basis[r] = q;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (i, row) in self.t.iter().enumerate() {
            let cb = cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            for (dj, a) in d.iter_mut().zip(row) {
                *dj -= cb * a;
            }
        }
        d
    }

    fn value(&self, cost: &[f64]) -> f64 {
        self.basis.iter().zip(&self.rhs).map(|(&j, v)| cost[j] * v).sum()
    }

    /// Primal simplex on the current (feasible) basis.
    fn run(&mut self, cost: &[f64], allowed: &[bool]) -> Result<Outcome> {
        let mut d = self.reduced_costs(cost);
        let stall_limit = 3 * (self.t.len() + self.ncols);
        let mut stall = 0usize;
        let mut bland = false;
        let mut best = self.value(cost);
        loop {
            if self.iterations >= self.max_iterations {
                return Err(Error::NumericalFailure(format!(
                    "simplex iteration limit {} reached",
                    self.max_iterations
                )));
            }
            // pricing
            let mut enter = None;
            let mut most = -OPT_TOL;
            for j in 0..self.ncols {
                if !allowed[j] || d[j] >= -OPT_TOL {
                    continue;
                }
                if bland {
                    enter = Some(j);
                    break;
                }
                if d[j] < most {
                    most = d[j];
                    enter = Some(j);
                }
            }
            let Some(q) = enter else { return Ok(Outcome::Optimal) };

            // ratio test; fall back to tiny pivots only when nothing else exists
            let mut leave = self.ratio_test(q, PIVOT_TOL, bland);
            if leave.is_none() {
                leave = self.ratio_test(q, MIN_PIVOT, bland);
            }
            let Some(r) = leave else { return Ok(Outcome::Unbounded(q)) };

            self.pivot(r, q);
            self.iterations += 1;
            // update reduced costs with the normalized pivot row
            let dq = d[q];
            if dq != 0.0 {
                for (dj, a) in d.iter_mut().zip(&self.t[r]) {
                    *dj -= dq * a;
                }
            }
            d[q] = 0.0;
            for &bj in &self.basis {
                d[bj] = 0.0;
            }
            let val = self.value(cost);
            if val < best - 1e-12 * (1.0 + best.abs()) {
                best = val;
                stall = 0;
            } else {
                stall += 1;
                if stall > stall_limit {
                    bland = true;
                }
            }
            // periodic refresh against drift
            if self.iterations % 50 == 0 {
                d = self.reduced_costs(cost);
            }
        }
    }

    fn ratio_test(&self, q: usize, tol: f64, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.t.len() {
            let a = self.t[i][q];
            if a <= tol {
                continue;
            }
            let ratio = self.rhs[i].max(0.0) / a;
            match best {
                None => best = Some((i, ratio)),
                Some((bi, br)) => {
                    let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                    let better = if tie {
                        if bland {
                            self.basis[i] < self.basis[bi]
                        } else {
                            a > self.t[bi][q]
                        }
                    } else {
                        ratio < br
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Solves `p` by the two-phase dense simplex method.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    p.validate()?;
    let sf = standardize(p);
    let m = sf.a.len();
    let ncols = sf.cost.len();
    let mut tab = Tableau {
        t: sf.a.clone(),
        rhs: sf.b.clone(),
        basis: sf.start_basis.clone(),
        row_ids: (0..m).collect(),
        ncols,
        iterations: 0,
        max_iterations: 20_000 + 200 * (m + ncols),
    };

    // phase 1
    let phase1_cost: Vec<f64> =
        sf.kinds.iter().map(|k| if *k == ColKind::Artificial { 1.0 } else { 0.0 }).collect();
    let has_artificial = sf.kinds.contains(&ColKind::Artificial);
    if has_artificial {
        let all = vec![true; ncols];
        if let Outcome::Unbounded(_) = tab.run(&phase1_cost, &all)? {
            return Err(Error::NumericalFailure("phase 1 reported unbounded".into()));
        }
        let infeas = tab.value(&phase1_cost);
        let scale = 1.0 + sf.b.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if infeas > 1e-9 * scale {
            let y_std = basis_duals(&sf, &tab, &phase1_cost)
                .ok_or_else(|| Error::NumericalFailure("singular basis in phase 1".into()))?;
            let cert = sf.row_map.iter().map(|&(r, s)| row_dual(&tab, &y_std, r) * s).collect();
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; p.num_cols()],
                duals: vec![0.0; p.num_rows()],
                objective: f64::NAN,
                certificate: Some(cert),
                iterations: tab.iterations,
            });
        }
        drive_out_artificials(&sf, &mut tab);
    }

    // phase 2
    let allowed: Vec<bool> = sf.kinds.iter().map(|k| *k != ColKind::Artificial).collect();
    match tab.run(&sf.cost, &allowed)? {
        Outcome::Unbounded(q) => {
            let mut dir = vec![0.0; ncols];
            dir[q] = 1.0;
            for (i, &bj) in tab.basis.iter().enumerate() {
                dir[bj] = -tab.t[i][q];
            }
            let ray = map_direction(&sf, &dir);
            Ok(LpSolution {
                status: LpStatus::Unbounded,
                x: vec![0.0; p.num_cols()],
                duals: vec![0.0; p.num_rows()],
                objective: if p.objective == Objective::Max { f64::INFINITY } else { f64::NEG_INFINITY },
                certificate: Some(ray),
                iterations: tab.iterations,
            })
        }
        Outcome::Optimal => {
            let (z, y_std) = refine(&sf, &tab)
                .ok_or_else(|| Error::NumericalFailure("singular optimal basis".into()))?;
            let x = map_point(&sf, &z);
            let duals = sf
                .row_map
                .iter()
                .map(|&(r, s)| sf.cost_sign * s * row_dual(&tab, &y_std, r))
                .collect();
            let objective = p.objective_value(&x);
            Ok(LpSolution {
                status: LpStatus::Optimal,
                x,
                duals,
                objective,
                certificate: None,
                iterations: tab.iterations,
            })
        }
    }
}

fn row_dual(tab: &Tableau, y: &[f64], std_row: usize) -> f64 {
    tab.row_ids.iter().position(|&r| r == std_row).map_or(0.0, |k| y[k])
}

/// Pivots basic artificials out where possible and drops redundant rows.
fn drive_out_artificials(sf: &StandardForm, tab: &mut Tableau) {
    let mut i = 0;
    while i < tab.t.len() {
        let bj = tab.basis[i];
        if sf.kinds[bj] != ColKind::Artificial {
            i += 1;
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..tab.ncols {
            if sf.kinds[j] == ColKind::Artificial {
                continue;
            }
            let a = tab.t[i][j].abs();
            if a > 1e-7 && best.is_none_or(|(_, b)| a > b) {
                best = Some((j, a));
            }
        }
        match best {
            Some((j, _)) => {
                tab.pivot(i, j);
                i += 1;
            }
            None => {
                tab.t.remove(i);
                tab.rhs.remove(i);
                tab.basis.remove(i);
                tab.row_ids.remove(i);
            }
        }
    }
}

/// Basis square matrix over the surviving standard rows.
fn basis_matrix(sf: &StandardForm, tab: &Tableau) -> DenseMatrix {
    let k = tab.basis.len();
    DenseMatrix::from_fn(k, k, |r, c| sf.a[tab.row_ids[r]][tab.basis[c]])
}

fn basis_duals(sf: &StandardForm, tab: &Tableau, cost: &[f64]) -> Option<Vec<f64>> {
    let lu = Lu::factor(&basis_matrix(sf, tab), 1e-13)?;
    let cb: Vec<f64> = tab.basis.iter().map(|&j| cost[j]).collect();
    Some(lu.solve_transpose(&cb))
}

/// Recomputes the basic solution and duals directly from the original data.
fn refine(sf: &StandardForm, tab: &Tableau) -> Option<(Vec<f64>, Vec<f64>)> {
    let lu = Lu::factor(&basis_matrix(sf, tab), 1e-13)?;
    let b: Vec<f64> = tab.row_ids.iter().map(|&r| sf.b[r]).collect();
    let xb = lu.solve(&b);
    let mut z = vec![0.0; sf.cost.len()];
    for (k, &j) in tab.basis.iter().enumerate() {
        // tiny negative values are round-off of degenerate basics
        z[j] = if xb[k] < 0.0 && xb[k] > -1e-9 { 0.0 } else { xb[k] };
    }
    let cb: Vec<f64> = tab.basis.iter().map(|&j| sf.cost[j]).collect();
    let y = lu.solve_transpose(&cb);
    Some((z, y))
}

fn map_point(sf: &StandardForm, z: &[f64]) -> Vec<f64> {
    sf.col_map
        .iter()
        .map(|m| match *m {
            ColMap::Shift { col, offset } => offset + z[col],
            ColMap::Flip { col, offset } => offset - z[col],
            ColMap::Split { pos, neg } => z[pos] - z[neg],
            ColMap::Fixed(v) => v,
        })
        .collect()
}

fn map_direction(sf: &StandardForm, z: &[f64]) -> Vec<f64> {
    sf.col_map
        .iter()
        .map(|m| match *m {
            ColMap::Shift { col, .. } => z[col],
            ColMap::Flip { col, .. } => -z[col],
            ColMap::Split { pos, neg } => z[pos] - z[neg],
            ColMap::Fixed(_) => 0.0,
        })
        .collect()
}
