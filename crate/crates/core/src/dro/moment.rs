use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{solve_with_psd_cuts, LpProblem, LpStatus, Objective, PsdBlock, PsdBlockSpec, RowSense};
use crate::numerics::{dot, sub_vec, DenseMatrix, DenseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Sup,
    Inf,
}

/// Probability masses over the points of a stage support; `masses[i]` is the
/// mass of support point i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    pub masses: Vec<f64>,
}

impl DiscreteDistribution {
    /// Indices carrying positive mass.
    pub fn support_indices(&self) -> Vec<usize> {
        (0..self.masses.len()).filter(|&i| self.masses[i] > 0.0).collect()
    }

    pub fn expectation(&self, values: &[f64]) -> f64 {
        dot(&self.masses, values)
    }
}

/// One stage of the moment ambiguity set: distributions on `support` with
/// mean in [center − δ, center + δ] and E[(d−μ⁰)(d−μ⁰)ᵀ] ⪯ cap.
#[derive(Debug, Clone, PartialEq)]
pub struct StageMomentSet {
    pub support: Vec<DenseVector>,
    pub center: DenseVector,
    pub delta: DenseVector,
    pub anchor: DenseVector,
    pub cap: DenseMatrix,
}

/// Dual multipliers (p, q^u, q^l, R) of the moment problem in the form
/// p + (q^u − q^l − 2Rμ⁰)ᵀd + dᵀRd ≥ f(d) on the support, with objective
/// p + (q^u − q^l)ᵀμ + (q^u + q^l)ᵀδ + R·(Σ − μ⁰μ⁰ᵀ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentDuals {
    pub p: f64,
    pub q_upper: DenseVector,
    pub q_lower: DenseVector,
    pub r: DenseMatrix,
}

impl MomentDuals {
    pub fn objective(&self, set: &StageMomentSet) -> f64 {
        let m = set.center.len();
        let mut v = self.p;
        for j in 0..m {
            v += (self.q_upper[j] - self.q_lower[j]) * set.center[j] + (self.q_upper[j] + self.q_lower[j]) * set.delta[j];
        }
        let mut shifted = set.cap.clone();
        shifted.add_scaled(-1.0, &DenseMatrix::outer(&set.anchor, &set.anchor));
        v + self.r.frobenius_dot(&shifted)
    }

    /// Smallest slack p + (q^u − q^l − 2Rμ⁰)ᵀξ + ξᵀRξ − f(ξ) over the support.
    pub fn min_slack(&self, set: &StageMomentSet, cost: &[f64]) -> f64 {
        let r_anchor = self.r.mul_vec(&set.anchor);
        let lin: Vec<f64> = (0..set.center.len())
            .map(|j| self.q_upper[j] - self.q_lower[j] - 2.0 * r_anchor[j])
            .collect();
        set.support
            .iter()
            .zip(cost)
            .map(|(xi, f)| self.p + dot(&lin, xi) + self.r.quad_form(xi) - f)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSolution {
    pub value: f64,
    pub distribution: DiscreteDistribution,
    /// Duals of the sup problem (of −f when the direction is inf).
    pub duals: MomentDuals,
    pub cuts: usize,
    pub cut_iterations: usize,
}

impl StageMomentSet {
    pub fn new(
        support: Vec<DenseVector>,
        center: DenseVector,
        delta: DenseVector,
        anchor: DenseVector,
        cap: DenseMatrix,
    ) -> Result<Self> {
        let set = StageMomentSet { support, center, delta, anchor, cap };
        set.validate_shape()?;
        if !set.is_feasible()? {
            return Err(Error::InfeasibleMomentSet { stage: 0, point: None });
        }
        Ok(set)
    }

    /// Without the feasibility LP; for callers that already validated.
    pub(crate) fn new_unchecked(
        support: Vec<DenseVector>,
        center: DenseVector,
        delta: DenseVector,
        anchor: DenseVector,
        cap: DenseMatrix,
    ) -> Self {
        StageMomentSet { support, center, delta, anchor, cap }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub(crate) fn validate_shape(&self) -> Result<()> {
        let m = self.center.len();
        if m == 0 {
            return Err(Error::InvalidInstance("moment set dimension must be positive".into()));
        }
        if self.support.len() < 2 {
            return Err(Error::InvalidInstance("support needs at least two points".into()));
        }
        if self.delta.len() != m || self.anchor.len() != m || self.cap.rows() != m || self.cap.cols() != m {
            return Err(Error::DimensionMismatch("moment set vectors/cap vs dimension".into()));
        }
        if self.support.iter().any(|p| p.len() != m || !p.is_finite()) {
            return Err(Error::DimensionMismatch("support point dimension".into()));
        }
        for i in 0..self.support.len() {
            for j in (i + 1)..self.support.len() {
                if self.support[i] == self.support[j] {
                    return Err(Error::InvalidInstance(format!("support points {i} and {j} coincide")));
                }
            }
        }
        if self.delta.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidInstance("δ must be nonnegative".into()));
        }
        self.cap.check_symmetric()?;
        let (lam, _) = crate::numerics::min_eigenvalue(&self.cap)?;
        if lam < -1e-9 * (1.0 + self.cap.max_abs()) {
            return Err(Error::InvalidInstance("covariance cap is not PSD".into()));
        }
        Ok(())
    }

    /// Moment LP over masses with the given objective; column i is the mass
    /// of support point i. Rows: normalization, m upper mean rows, m lower.
    fn base_lp(&self, objective: Objective, cost: &[f64]) -> LpProblem {
        let m = self.dim();
        let mut lp = LpProblem::new(objective);
        for (i, c) in cost.iter().enumerate() {
            lp.add_named_var(format!("pi_{}", i + 1), 0.0, f64::INFINITY, *c);
        }
        let n = self.support.len();
        lp.add_row((0..n).map(|i| (i, 1.0)).collect(), RowSense::Eq, 1.0);
        for j in 0..m {
            let coeffs = (0..n).map(|i| (i, self.support[i][j])).collect();
            lp.add_row(coeffs, RowSense::Le, self.center[j] + self.delta[j]);
        }
        for j in 0..m {
            let coeffs = (0..n).map(|i| (i, self.support[i][j])).collect();
            lp.add_row(coeffs, RowSense::Ge, self.center[j] - self.delta[j]);
        }
        lp
    }

    /// Σ − Σ_i π_i (ξ_i − μ⁰)(ξ_i − μ⁰)ᵀ ⪰ 0, optionally minus s·I for a margin column.
    fn cap_block(&self, margin_col: Option<usize>) -> PsdBlock {
        let m = self.dim();
        let mut terms: Vec<(usize, DenseMatrix)> = self
            .support
            .iter()
            .enumerate()
            .map(|(i, xi)| {
                let dev = sub_vec(xi, &self.anchor);
                (i, DenseMatrix::outer(&dev, &dev).scaled(-1.0))
            })
            .collect();
        if let Some(c) = margin_col {
            terms.push((c, DenseMatrix::scaled_identity(m, -1.0)));
        }
        PsdBlock { dim: m, constant: self.cap.clone(), terms }
    }

    pub fn is_feasible(&self) -> Result<bool> {
        let cost = vec![0.0; self.support.len()];
        let lp = self.base_lp(Objective::Max, &cost);
        let res = solve_with_psd_cuts(&lp, &PsdBlockSpec::new(vec![self.cap_block(None)]))?;
        Ok(res.solution.status == LpStatus::Optimal)
    }

    /// Largest s ≤ 1 such that a distribution exists with every mass ≥ s,
    /// mean at least s inside each bound and Σ − second moment ⪰ s·I.
    /// Negative when the set has no strictly feasible member.
    pub fn strict_feasibility_margin(&self) -> Result<f64> {
        let n = self.support.len();
        let m = self.dim();
        let mut lp = self.base_lp(Objective::Max, &vec![0.0; n]);
        let s = lp.add_named_var("margin", f64::NEG_INFINITY, 1.0, 1.0);
        for row in lp.rows.iter_mut().skip(1).take(m) {
            row.coeffs.push((s, 1.0));
        }
        for row in lp.rows.iter_mut().skip(1 + m).take(m) {
            row.coeffs.push((s, -1.0));
        }
        for i in 0..n {
            lp.add_row(vec![(i, 1.0), (s, -1.0)], RowSense::Ge, 0.0);
        }
        let res = solve_with_psd_cuts(&lp, &PsdBlockSpec::new(vec![self.cap_block(Some(s))]))?;
        match res.solution.status {
            LpStatus::Optimal => Ok(res.solution.x[s]),
            _ => Ok(f64::NEG_INFINITY),
        }
    }
}

/// Worst-case (sup) or best-case (inf) expectation of `cost` over the set.
pub fn moment_sup_lp(cost: &[f64], set: &StageMomentSet, direction: Direction) -> Result<MomentSolution> {
    if cost.len() != set.support.len() {
        return Err(Error::DimensionMismatch("cost per support point".into()));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInstance("stage cost is not finite on the support".into()));
    }
    let sign = match direction {
        Direction::Sup => 1.0,
        Direction::Inf => -1.0,
    };
    let signed: Vec<f64> = cost.iter().map(|c| sign * c).collect();
    let lp = set.base_lp(Objective::Max, &signed);
    let res = solve_with_psd_cuts(&lp, &PsdBlockSpec::new(vec![set.cap_block(None)]))?;
    let sol = &res.solution;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::InfeasibleMomentSet { stage: 0, point: None }),
        LpStatus::Unbounded => return Err(Error::NumericalFailure("bounded moment LP reported unbounded".into())),
    }
    let m = set.dim();
    let n = set.support.len();
    let masses: Vec<f64> = sol.x[..n].iter().map(|v| v.max(0.0)).collect();
    let mut r = DenseMatrix::zeros(m, m);
    for cut in &res.cuts {
        let w = -sol.duals[cut.row];
        if w != 0.0 {
            r.add_scaled(w, &DenseMatrix::outer(&cut.direction, &cut.direction));
        }
    }
    let q_upper = DenseVector((0..m).map(|j| sol.duals[1 + j]).collect());
    let q_lower = DenseVector((0..m).map(|j| -sol.duals[1 + m + j]).collect());
    let p = sol.duals[0] + r.quad_form(&set.anchor);
    let value = sign * sol.objective;
    Ok(MomentSolution {
        value,
        distribution: DiscreteDistribution { masses },
        duals: MomentDuals { p, q_upper, q_lower, r },
        cuts: res.cuts.len(),
        cut_iterations: res.iterations,
    })
}
