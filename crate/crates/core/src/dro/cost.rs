use serde::{Deserialize, Serialize};

use crate::numerics::{dot, DenseVector};

/// h_t(x_t, ·) for a fixed decision, evaluated on support points.
pub trait StageCost: Sync {
    fn eval(&self, d: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64 + Sync> StageCost for F {
    fn eval(&self, d: &[f64]) -> f64 {
        self(d)
    }
}

/// Serializable stage costs; pieces are (slope, intercept) pairs applied to r = xᵀd.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CostSpec {
    Zero,
    Linear { x: DenseVector },
    PiecewiseMin { x: DenseVector, pieces: Vec<[f64; 2]> },
    PiecewiseMax { x: DenseVector, pieces: Vec<[f64; 2]> },
}

impl CostSpec {
    pub fn portfolio_utility(x: &[f64]) -> Self {
        CostSpec::PiecewiseMin { x: DenseVector(x.to_vec()), pieces: UTILITY_PIECES.to_vec() }
    }
}

/// min(1.5r, 0.015 + r, 0.06 + 0.2r)
pub const UTILITY_PIECES: [[f64; 2]; 3] = [[1.5, 0.0], [1.0, 0.015], [0.2, 0.06]];

pub fn piecewise_utility(r: f64) -> f64 {
    UTILITY_PIECES.iter().map(|[a, b]| a * r + b).fold(f64::INFINITY, f64::min)
}

impl StageCost for CostSpec {
    fn eval(&self, d: &[f64]) -> f64 {
        match self {
            CostSpec::Zero => 0.0,
            CostSpec::Linear { x } => dot(x, d),
            CostSpec::PiecewiseMin { x, pieces } => {
                let r = dot(x, d);
                pieces.iter().map(|[a, b]| a * r + b).fold(f64::INFINITY, f64::min)
            }
            CostSpec::PiecewiseMax { x, pieces } => {
                let r = dot(x, d);
                pieces.iter().map(|[a, b]| a * r + b).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn utility_kinks() {
        assert_eq!(piecewise_utility(0.0), 0.0);
        assert!((piecewise_utility(0.03) - 0.045).abs() < 1e-15);
        assert!((piecewise_utility(0.1) - 0.08).abs() < 1e-15);
        assert!((piecewise_utility(-0.1) + 0.15).abs() < 1e-15);
        let c = CostSpec::portfolio_utility(&[0.5, 0.5]);
        assert!((c.eval(&[0.02, 0.04]) - 0.045).abs() < 1e-15);
    }
}
