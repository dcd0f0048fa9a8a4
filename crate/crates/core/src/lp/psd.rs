use super::{solve_lp, LpProblem, LpSolution, LpStatus, RowSense};
use crate::error::{Error, Result};
use crate::numerics::{dot, symmetric_eigen, DenseMatrix};

const PSD_TOL: f64 = 1e-7;
const MAX_ITERATIONS: usize = 200;
const DUPLICATE_COS: f64 = 1.0 - 1e-6;

/// An affine symmetric matrix `constant + Σ_k x[col_k]·M_k` required to be PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdBlock {
    pub dim: usize,
    pub constant: DenseMatrix,
    pub terms: Vec<(usize, DenseMatrix)>,
}

impl PsdBlock {
    /// A symmetric matrix variable whose entry (i, j) lives in LP column
    /// `cols[i][j]`; entries (i, j) and (j, i) must share a column.
    pub fn symmetric_variable(cols: &[Vec<usize>]) -> Result<Self> {
        let dim = cols.len();
        for (i, row) in cols.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch("PSD block column map is not square".into()));
            }
            for j in 0..dim {
                if cols[i][j] != cols[j][i] {
                    return Err(Error::InvalidInstance(format!(
                        "PSD block entries ({i},{j}) and ({j},{i}) map to different columns"
                    )));
                }
            }
        }
        let mut terms = Vec::new();
        for i in 0..dim {
            for j in i..dim {
                let mut m = DenseMatrix::zeros(dim, dim);
                m[(i, j)] = 1.0;
                m[(j, i)] = 1.0;
                terms.push((cols[i][j], m));
            }
        }
        Ok(PsdBlock { dim, constant: DenseMatrix::zeros(dim, dim), terms })
    }

    pub fn evaluate(&self, x: &[f64]) -> DenseMatrix {
        let mut m = self.constant.clone();
        for (col, mk) in &self.terms {
            m.add_scaled(x[*col], mk);
        }
        m
    }

    /// Linear part only, evaluated on a direction.
    fn evaluate_direction(&self, d: &[f64]) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.dim, self.dim);
        for (col, mk) in &self.terms {
            m.add_scaled(d[*col], mk);
        }
        m
    }

    /// The cut vᵀ(C + Σ x_k M_k)v ≥ 0 as an LP row.
    fn cut_row(&self, v: &[f64]) -> (Vec<(usize, f64)>, f64) {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for (col, mk) in &self.terms {
            let a = mk.quad_form(v);
            if a == 0.0 {
                continue;
            }
            match coeffs.iter_mut().find(|(c, _)| c == col) {
                Some(entry) => entry.1 += a,
                None => coeffs.push((*col, a)),
            }
        }
        (coeffs, -self.constant.quad_form(v))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PsdBlockSpec {
    pub blocks: Vec<PsdBlock>,
}

impl PsdBlockSpec {
    pub fn new(blocks: Vec<PsdBlock>) -> Self {
        PsdBlockSpec { blocks }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutRecord {
    pub block: usize,
    pub direction: Vec<f64>,
    /// Row index of the cut in the final LP.
    pub row: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutLoopResult {
    pub solution: LpSolution,
    /// The LP actually solved last (input rows followed by cut rows).
    pub problem: LpProblem,
    pub cuts: Vec<CutRecord>,
    pub iterations: usize,
    /// Objective value after each LP solve.
    pub history: Vec<f64>,
}

fn seed_directions(dim: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        out.push(e);
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..dim {
        for j in (i + 1)..dim {
            let mut plus = vec![0.0; dim];
            plus[i] = h;
            plus[j] = h;
            out.push(plus);
            let mut minus = vec![0.0; dim];
            minus[i] = h;
            minus[j] = -h;
            out.push(minus);
        }
    }
    out
}

struct CutState {
    problem: LpProblem,
    cuts: Vec<CutRecord>,
}

impl CutState {
    fn is_duplicate(&self, block: usize, v: &[f64]) -> bool {
        self.cuts.iter().any(|c| c.block == block && dot(&c.direction, v).abs() > DUPLICATE_COS)
    }

    fn add(&mut self, spec: &PsdBlockSpec, block: usize, v: Vec<f64>) {
        let (coeffs, rhs) = spec.blocks[block].cut_row(&v);
        let row = self.problem.add_row(coeffs, RowSense::Ge, rhs);
        self.cuts.push(CutRecord { block, direction: v, row });
    }

    /// Adds a cut for the most negative eigen-direction of `m` that is not
    /// already present; returns whether anything was added.
    fn cut_matrix(&mut self, spec: &PsdBlockSpec, block: usize, m: &DenseMatrix, tol: f64) -> Result<bool> {
        let (vals, vecs) = symmetric_eigen(m)?;
        let mut fallback = None;
        for (k, lam) in vals.iter().enumerate() {
            if *lam >= -tol {
                break;
            }
            let mut v = vecs.column(k);
            let norm = crate::numerics::two_norm(&v);
            v.iter_mut().for_each(|x| *x /= norm);
            if !self.is_duplicate(block, &v) {
                self.add(spec, block, v);
                return Ok(true);
            }
            if fallback.is_none() {
                fallback = Some(v);
            }
        }
        // every violated direction nearly repeats an old cut; add it anyway
        if let Some(v) = fallback {
            self.add(spec, block, v);
            return Ok(true);
        }
        Ok(false)
    }
}

/// Solves `p` with every block of `spec` constrained PSD, by iteratively
/// adding eigenvector cuts. Blocks start with coordinate and pairwise cuts.
pub fn solve_with_psd_cuts(p: &LpProblem, spec: &PsdBlockSpec) -> Result<CutLoopResult> {
    for b in &spec.blocks {
        if b.dim > 4 {
            return Err(Error::DimensionMismatch(format!("PSD block dimension {} exceeds 4", b.dim)));
        }
        if b.terms.iter().any(|(c, _)| *c >= p.num_cols()) {
            return Err(Error::DimensionMismatch("PSD block references a missing column".into()));
        }
    }
    let mut state = CutState { problem: p.clone(), cuts: Vec::new() };
    for (bi, b) in spec.blocks.iter().enumerate() {
        for v in seed_directions(b.dim) {
            state.add(spec, bi, v);
        }
    }
    let mut history = Vec::new();
    for iteration in 1..=MAX_ITERATIONS {
        let sol = solve_lp(&state.problem)?;
        match sol.status {
            LpStatus::Infeasible => {
                return Ok(CutLoopResult {
                    solution: sol,
                    problem: state.problem,
                    cuts: state.cuts,
                    iterations: iteration,
                    history,
                });
            }
            LpStatus::Unbounded => {
                let ray = sol.certificate.clone().unwrap_or_default();
                let mut added = false;
                for (bi, b) in spec.blocks.iter().enumerate() {
                    let m = b.evaluate_direction(&ray);
                    added |= state.cut_matrix(spec, bi, &m, 1e-12 * (1.0 + m.max_abs()))?;
                }
                if !added {
                    return Ok(CutLoopResult {
                        solution: sol,
                        problem: state.problem,
                        cuts: state.cuts,
                        iterations: iteration,
                        history,
                    });
                }
            }
            LpStatus::Optimal => {
                history.push(sol.objective);
                let mut added = false;
                for (bi, b) in spec.blocks.iter().enumerate() {
                    let m = b.evaluate(&sol.x);
                    added |= state.cut_matrix(spec, bi, &m, PSD_TOL)?;
                }
                if !added {
                    return Ok(CutLoopResult {
                        solution: sol,
                        problem: state.problem,
                        cuts: state.cuts,
                        iterations: iteration,
                        history,
                    });
                }
            }
        }
    }
    Err(Error::CutLimitExceeded(MAX_ITERATIONS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::Objective;

    #[test]
    fn trace_with_unit_offdiagonal() {
        let mut p = LpProblem::new(Objective::Min);
        let a = p.add_free_var(1.0);
        let b = p.add_free_var(0.0);
        let c = p.add_free_var(1.0);
        p.add_row(vec![(b, 1.0)], RowSense::Eq, 1.0);
        let block = PsdBlock::symmetric_variable(&[vec![a, b], vec![b, c]]).unwrap();
        let res = solve_with_psd_cuts(&p, &PsdBlockSpec::new(vec![block])).unwrap();
        assert!((res.solution.objective - 2.0).abs() < 1e-5, "{}", res.solution.objective);
        for w in res.history.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
    }

    #[test]
    fn scalar_block_is_sign_constraint() {
        let mut p = LpProblem::new(Objective::Min);
        let r = p.add_free_var(1.0);
        let s = p.add_free_var(0.0);
        p.add_row(vec![(r, 1.0), (s, 1.0)], RowSense::Ge, -2.0);
        p.add_row(vec![(s, 1.0)], RowSense::Le, 1.0);
        let block = PsdBlock::symmetric_variable(&[vec![r]]).unwrap();
        let cut = solve_with_psd_cuts(&p, &PsdBlockSpec::new(vec![block])).unwrap();
        let mut q = p.clone();
        q.lower[r] = 0.0;
        let direct = solve_lp(&q).unwrap();
        assert!((cut.solution.objective - direct.objective).abs() < 1e-12);
    }

    #[test]
    fn no_blocks_matches_plain_solve() {
        let mut p = LpProblem::new(Objective::Max);
        let x = p.add_var(0.0, 2.0, 1.0);
        p.add_row(vec![(x, 1.0)], RowSense::Le, 1.5);
        let a = solve_with_psd_cuts(&p, &PsdBlockSpec::default()).unwrap();
        let b = solve_lp(&p).unwrap();
        assert_eq!(a.solution, b);
    }
}
