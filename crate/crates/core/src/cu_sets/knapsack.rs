use serde::{Deserialize, Serialize};

use super::ellipsoidal::{check_len, check_square};
use super::EllipsoidalCuProcess;
use crate::error::{Error, Result};
use crate::numerics::{add_vec, cholesky, DenseMatrix, DenseVector};
use crate::rng;

/// Two-period weights d_1 = μ_1 + ε_1, d_2 = Φμ_1 + Ψd_1 + ε_2 with a shared
/// shape factor L for both ellipsoids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnapsackUncertaintyModel {
    pub mu1: DenseVector,
    pub phi: DenseMatrix,
    pub psi: DenseMatrix,
    pub chol: DenseMatrix,
    pub r1: f64,
    pub r2: f64,
}

impl KnapsackUncertaintyModel {
    pub fn new(mu1: DenseVector, phi: DenseMatrix, psi: DenseMatrix, chol: DenseMatrix, r1: f64, r2: f64) -> Result<Self> {
        let m = mu1.len();
        check_square(&phi, m, "phi")?;
        check_square(&psi, m, "psi")?;
        check_square(&chol, m, "chol")?;
        if !(r1 >= 0.0 && r2 >= 0.0 && r1.is_finite() && r2.is_finite()) {
            return Err(Error::InvalidInstance("radii must be finite and nonnegative".into()));
        }
        Ok(KnapsackUncertaintyModel { mu1, phi, psi, chol, r1, r2 })
    }

    /// The nonconnected comparison: μ_2 = μ_1 regardless of d_1.
    pub fn nonconnected(mu1: DenseVector, chol: DenseMatrix, r1: f64, r2: f64) -> Result<Self> {
        let m = mu1.len();
        Self::new(mu1, DenseMatrix::identity(m), DenseMatrix::zeros(m, m), chol, r1, r2)
    }

    pub fn dim(&self) -> usize {
        self.mu1.len()
    }

    pub fn to_process(&self) -> Result<EllipsoidalCuProcess> {
        let m = self.dim();
        EllipsoidalCuProcess::new(
            self.mu1.clone(),
            vec![self.r1, self.r2],
            vec![self.chol.clone(), self.chol.clone()],
            vec![self.phi.clone()],
            vec![self.psi.clone()],
            vec![DenseVector::zeros(m)],
        )
    }

    /// Center of the second ellipsoid after observing d_1.
    pub fn second_center(&self, d1: &[f64]) -> Vec<f64> {
        add_vec(&self.phi.mul_vec(&self.mu1), &self.psi.mul_vec(d1))
    }

    /// One path with residuals N(0, Σ) drawn from the stream keyed by
    /// (seed, keys..., period); `sigma_chol` is a Cholesky factor of Σ.
    pub fn sample_path_keyed(&self, sigma_chol: &DenseMatrix, seed: u64, keys: &[u64]) -> (Vec<f64>, Vec<f64>) {
        let mut k1 = keys.to_vec();
        k1.push(1);
        let mut k2 = keys.to_vec();
        k2.push(2);
        let e1 = rng::correlated_normal(&mut rng::stream(seed, &k1), sigma_chol);
        let e2 = rng::correlated_normal(&mut rng::stream(seed, &k2), sigma_chol);
        let d1 = add_vec(&self.mu1, &e1);
        let d2 = add_vec(&self.second_center(&d1), &e2);
        (d1, d2)
    }
}

/// Draws (d_1, d_2) with Gaussian residuals of covariance `sigma`.
pub fn sample_path(model: &KnapsackUncertaintyModel, sigma: &DenseMatrix, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_square(sigma, model.dim(), "sigma")?;
    let l = cholesky(&sigma.symmetrized())?;
    check_len(&model.mu1, l.rows(), "mu1")?;
    Ok(model.sample_path_keyed(&l, seed, &[]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(psi: f64) -> KnapsackUncertaintyModel {
        KnapsackUncertaintyModel::new(
            DenseVector(vec![1.0, 2.0]),
            DenseMatrix::identity(2),
            DenseMatrix::scaled_identity(2, psi),
            DenseMatrix::identity(2),
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_noise_is_center_path() {
        let m = model(0.5);
        let (d1, d2) = sample_path(&m, &DenseMatrix::zeros(2, 2), 3).unwrap();
        assert_eq!(d1, vec![1.0, 2.0]);
        assert_eq!(d2, vec![1.5, 3.0]);
    }

    #[test]
    fn seeded_reproduction() {
        let m = model(0.5);
        let sigma = DenseMatrix::from_rows(&[vec![0.04, 0.01], vec![0.01, 0.04]]).unwrap();
        assert_eq!(sample_path(&m, &sigma, 7).unwrap(), sample_path(&m, &sigma, 7).unwrap());
        assert_ne!(sample_path(&m, &sigma, 7).unwrap(), sample_path(&m, &sigma, 8).unwrap());
    }

    #[test]
    fn rejects_indefinite_sigma() {
        let m = model(0.0);
        let bad = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(sample_path(&m, &bad, 1), Err(Error::NotPsd { .. })));
    }
}
