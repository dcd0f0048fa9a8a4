use serde::{Deserialize, Serialize};

use super::{EllipsoidalCuProcess, MatrixCuProcess, MomentAmbiguityProcess, PolyhedralCuProcess};
use crate::dro::CostSpec;
use crate::error::{Error, Result};
use crate::numerics::DenseVector;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessSpec {
    EllipsoidalCenter(EllipsoidalCuProcess),
    EllipsoidalMatrix(MatrixCuProcess),
    PolyhedralRhs(PolyhedralCuProcess),
    Moment(MomentAmbiguityProcess),
}

impl ProcessSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ProcessSpec::EllipsoidalCenter(_) => "ellipsoidal_center",
            ProcessSpec::EllipsoidalMatrix(_) => "ellipsoidal_matrix",
            ProcessSpec::PolyhedralRhs(_) => "polyhedral_rhs",
            ProcessSpec::Moment(_) => "moment",
        }
    }

    pub fn periods(&self) -> usize {
        match self {
            ProcessSpec::EllipsoidalCenter(p) => p.periods(),
            ProcessSpec::EllipsoidalMatrix(p) => p.periods(),
            ProcessSpec::PolyhedralRhs(p) => p.periods(),
            ProcessSpec::Moment(p) => p.periods(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ProcessSpec::EllipsoidalCenter(p) => p.dim(),
            ProcessSpec::EllipsoidalMatrix(p) => p.dim(),
            ProcessSpec::PolyhedralRhs(p) => p.dim(),
            ProcessSpec::Moment(p) => p.dim(),
        }
    }
}

/// A process together with the decision it is evaluated at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub schema_version: u32,
    #[serde(flatten)]
    pub process: ProcessSpec,
    /// x_1..x_T (linear constraint models).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<Vec<DenseVector>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    /// Stage costs of moment models; defaults to xᵀd from `decision`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<Vec<CostSpec>>,
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Instance =
            serde_json::from_str(text).map_err(|e| Error::InvalidInstance(format!("instance JSON: {e}")))?;
        if inst.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInstance(format!("unsupported schema_version {}", inst.schema_version)));
        }
        if let Some(x) = &inst.decision {
            if x.len() != inst.process.periods() || x.iter().any(|v| v.len() != inst.process.dim()) {
                return Err(Error::DimensionMismatch("decision must hold one vector per period".into()));
            }
        }
        if let Some(c) = &inst.costs {
            if c.len() != inst.process.periods() {
                return Err(Error::DimensionMismatch("one stage cost per period".into()));
            }
        }
        Ok(inst)
    }

    /// Canonical pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn decision(&self) -> Result<&[DenseVector]> {
        self.decision
            .as_deref()
            .ok_or_else(|| Error::InvalidInstance("instance has no decision".into()))
    }

    pub fn budget(&self) -> Result<f64> {
        self.budget.ok_or_else(|| Error::InvalidInstance("instance has no budget".into()))
    }

    /// Stage costs: explicit ones, else linear in the decision.
    pub fn stage_costs(&self) -> Result<Vec<CostSpec>> {
        if let Some(c) = &self.costs {
            return Ok(c.clone());
        }
        Ok(self.decision()?.iter().map(|x| CostSpec::Linear { x: x.clone() }).collect())
    }
}
