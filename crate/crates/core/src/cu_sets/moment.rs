use serde::{Deserialize, Serialize};

use super::ellipsoidal::{check_count, check_len, check_square};
use crate::dro::StageMomentSet;
use crate::error::{Error, Result};
use crate::numerics::{add_vec, DenseMatrix, DenseVector};

/// How stage supports relate to the conditional mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupportMode {
    /// Ξ_t is the same point list whatever d_{t−1} was.
    #[default]
    Fixed,
    /// Ξ_t(d_{t−1}) = μ_t(d_{t−1}) + offsets, anchored at μ_t(d_{t−1}).
    Translated,
}

/// Finite-support moment ambiguity with conditional means
/// μ_t(d_{t−1}) = A_t d_{t−1} + b_t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MomentRaw")]
pub struct MomentAmbiguityProcess {
    periods: usize,
    dim: usize,
    #[serde(default, skip_serializing_if = "is_fixed")]
    support_mode: SupportMode,
    /// Support points per period; offsets from the center in translated mode.
    supports: Vec<Vec<DenseVector>>,
    mu1: DenseVector,
    cond_a: Vec<DenseMatrix>,
    cond_b: Vec<DenseVector>,
    delta: Vec<DenseVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    anchors: Option<Vec<DenseVector>>,
    sigma_caps: Vec<DenseMatrix>,
}

fn is_fixed(m: &SupportMode) -> bool {
    *m == SupportMode::Fixed
}

#[derive(Deserialize)]
struct MomentRaw {
    periods: usize,
    dim: usize,
    #[serde(default)]
    support_mode: SupportMode,
    supports: Vec<Vec<DenseVector>>,
    mu1: DenseVector,
    cond_a: Vec<DenseMatrix>,
    cond_b: Vec<DenseVector>,
    delta: Vec<DenseVector>,
    #[serde(default)]
    anchors: Option<Vec<DenseVector>>,
    sigma_caps: Vec<DenseMatrix>,
}

impl TryFrom<MomentRaw> for MomentAmbiguityProcess {
    type Error = Error;
    fn try_from(r: MomentRaw) -> Result<Self> {
        let p = MomentAmbiguityProcess {
            periods: r.periods,
            dim: r.dim,
            support_mode: r.support_mode,
            supports: r.supports,
            mu1: r.mu1,
            cond_a: r.cond_a,
            cond_b: r.cond_b,
            delta: r.delta,
            anchors: r.anchors,
            sigma_caps: r.sigma_caps,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentProcessParts {
    pub support_mode: SupportMode,
    pub supports: Vec<Vec<DenseVector>>,
    pub mu1: DenseVector,
    pub cond_a: Vec<DenseMatrix>,
    pub cond_b: Vec<DenseVector>,
    pub delta: Vec<DenseVector>,
    pub anchors: Option<Vec<DenseVector>>,
    pub sigma_caps: Vec<DenseMatrix>,
}

impl MomentAmbiguityProcess {
    pub fn new(parts: MomentProcessParts) -> Result<Self> {
        let p = MomentAmbiguityProcess {
            periods: parts.supports.len(),
            dim: parts.mu1.len(),
            support_mode: parts.support_mode,
            supports: parts.supports,
            mu1: parts.mu1,
            cond_a: parts.cond_a,
            cond_b: parts.cond_b,
            delta: parts.delta,
            anchors: parts.anchors,
            sigma_caps: parts.sigma_caps,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let (t, m) = (self.periods, self.dim);
        if t == 0 || m == 0 {
            return Err(Error::InvalidInstance("periods and dim must be positive".into()));
        }
        check_count(&self.supports, t, "supports")?;
        check_len(&self.mu1, m, "mu1")?;
        check_count(&self.cond_a, t - 1, "cond_a")?;
        check_count(&self.cond_b, t - 1, "cond_b")?;
        check_count(&self.delta, t, "delta")?;
        check_count(&self.sigma_caps, t, "sigma_caps")?;
        for a in &self.cond_a {
            check_square(a, m, "cond_a")?;
        }
        for b in &self.cond_b {
            check_len(b, m, "cond_b")?;
        }
        if let Some(anchors) = &self.anchors {
            check_count(anchors, t, "anchors")?;
            for a in anchors {
                check_len(a, m, "anchor")?;
            }
            if self.support_mode == SupportMode::Translated {
                return Err(Error::InvalidInstance("translated supports anchor at the conditional mean".into()));
            }
        }
        if !self.mu1.is_finite() || self.cond_b.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInstance("non-finite mean coefficients".into()));
        }
        match self.support_mode {
            SupportMode::Fixed => {
                for s in 0..t {
                    if s == 0 {
                        self.check_stage(0, None, None)?;
                    } else {
                        for j in 0..self.supports[s - 1].len() {
                            self.check_stage(s, Some(&self.supports[s - 1][j]), Some(j))?;
                        }
                    }
                }
            }
            SupportMode::Translated => {
                // every conditional set is a translate of the one centered at 0
                for s in 0..t {
                    let set = self.translated_set(s, &DenseVector::zeros(m));
                    set.validate_shape()
                        .map_err(|e| relabel(e, s))?;
                    if !set.is_feasible()? {
                        return Err(Error::InfeasibleMomentSet { stage: s + 1, point: None });
                    }
                }
            }
        }
        Ok(())
    }

    fn check_stage(&self, t: usize, prev: Option<&DenseVector>, index: Option<usize>) -> Result<()> {
        let set = self.fixed_set(t, prev.map(|v| v.as_slice()));
        set.validate_shape().map_err(|e| relabel(e, t))?;
        if !set.is_feasible()? {
            return Err(Error::InfeasibleMomentSet { stage: t + 1, point: index });
        }
        Ok(())
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_mode(&self) -> SupportMode {
        self.support_mode
    }

    /// Raw support list of period t (offsets in translated mode).
    pub fn support(&self, t: usize) -> &[DenseVector] {
        &self.supports[t]
    }

    pub fn mu1(&self) -> &DenseVector {
        &self.mu1
    }

    /// (A_t, b_t) driving the mean of period t (t ≥ 1, 0-based).
    pub fn mean_step(&self, t: usize) -> (&DenseMatrix, &DenseVector) {
        (&self.cond_a[t - 1], &self.cond_b[t - 1])
    }

    pub fn delta(&self, t: usize) -> &DenseVector {
        &self.delta[t]
    }

    pub fn sigma_cap(&self, t: usize) -> &DenseMatrix {
        &self.sigma_caps[t]
    }

    /// Conditional mean of period t given the previous realization.
    pub fn center(&self, t: usize, prev: Option<&[f64]>) -> DenseVector {
        if t == 0 {
            return self.mu1.clone();
        }
        let (a, b) = self.mean_step(t);
        let prev = prev.expect("previous realization required after the first period");
        DenseVector(add_vec(&a.mul_vec(prev), b))
    }

    /// Anchor μ_t⁰ in fixed mode: the explicit value, else μ_1 for the first
    /// period and b_t + A_t·mean(Ξ_{t−1}) afterwards.
    pub fn anchor(&self, t: usize) -> DenseVector {
        if let Some(a) = &self.anchors {
            return a[t].clone();
        }
        if t == 0 {
            return self.mu1.clone();
        }
        let prev = &self.supports[t - 1];
        let mut mean = vec![0.0; self.dim];
        for p in prev {
            for (m, v) in mean.iter_mut().zip(p.iter()) {
                *m += v / prev.len() as f64;
            }
        }
        self.center(t, Some(&mean))
    }

    fn fixed_set(&self, t: usize, prev: Option<&[f64]>) -> StageMomentSet {
        StageMomentSet::new_unchecked(
            self.supports[t].clone(),
            self.center(t, prev),
            self.delta[t].clone(),
            self.anchor(t),
            self.sigma_caps[t].clone(),
        )
    }

    fn translated_set(&self, t: usize, center: &DenseVector) -> StageMomentSet {
        let support = self.supports[t].iter().map(|o| DenseVector(add_vec(center, o))).collect();
        StageMomentSet::new_unchecked(
            support,
            center.clone(),
            self.delta[t].clone(),
            center.clone(),
            self.sigma_caps[t].clone(),
        )
    }

    /// Support point `i` of period t given the previous realization.
    pub fn point(&self, t: usize, prev: Option<&[f64]>, i: usize) -> DenseVector {
        match self.support_mode {
            SupportMode::Fixed => self.supports[t][i].clone(),
            SupportMode::Translated => DenseVector(add_vec(&self.center(t, prev), &self.supports[t][i])),
        }
    }

    /// Realized d_1..d_k for a path of support indices.
    pub fn realize(&self, path: &[usize]) -> Vec<DenseVector> {
        let mut out: Vec<DenseVector> = Vec::with_capacity(path.len());
        for (t, &i) in path.iter().enumerate() {
            let prev = out.last().map(|v| v.as_slice());
            let p = self.point(t, prev, i);
            out.push(p);
        }
        out
    }

    /// The period-t moment set given the previous realization (ignored at t = 0).
    pub fn stage_set(&self, t: usize, prev: Option<&[f64]>) -> Result<StageMomentSet> {
        if t >= self.periods {
            return Err(Error::DimensionMismatch(format!("period {t} out of range")));
        }
        if t > 0 {
            match prev {
                Some(p) => check_len(p, self.dim, "previous realization")?,
                None => return Err(Error::DimensionMismatch("previous realization missing".into())),
            }
        }
        Ok(match self.support_mode {
            SupportMode::Fixed => self.fixed_set(t, prev),
            SupportMode::Translated => {
                let c = self.center(t, prev);
                self.translated_set(t, &c)
            }
        })
    }
}

fn relabel(e: Error, t: usize) -> Error {
    match e {
        Error::InvalidInstance(s) => Error::InvalidInstance(format!("stage {}: {s}", t + 1)),
        Error::DimensionMismatch(s) => Error::DimensionMismatch(format!("stage {}: {s}", t + 1)),
        other => other,
    }
}
