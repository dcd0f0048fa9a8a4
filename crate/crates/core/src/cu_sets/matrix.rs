use serde::{Deserialize, Serialize};

use super::ellipsoidal::{check_count, check_len, check_square};
use crate::error::{Error, Result};
use crate::numerics::{cholesky, min_eigenvalue, sub_vec, DenseMatrix, DenseVector};

/// Ellipsoids with fixed centers μ_t whose covariance follows
/// `Σ_{t+1} = a_t Σ_t + f_t (d_t − μ_t)(d_t − μ_t)ᵀ + C_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRaw")]
pub struct MatrixCuProcess {
    periods: usize,
    dim: usize,
    means: Vec<DenseVector>,
    radii: Vec<f64>,
    sigma1: DenseMatrix,
    a: Vec<f64>,
    f: Vec<f64>,
    c: Vec<DenseMatrix>,
}

#[derive(Deserialize)]
struct MatrixRaw {
    periods: usize,
    dim: usize,
    means: Vec<DenseVector>,
    radii: Vec<f64>,
    sigma1: DenseMatrix,
    a: Vec<f64>,
    f: Vec<f64>,
    c: Vec<DenseMatrix>,
}

impl TryFrom<MatrixRaw> for MatrixCuProcess {
    type Error = Error;
    fn try_from(r: MatrixRaw) -> Result<Self> {
        let p = MatrixCuProcess {
            periods: r.periods,
            dim: r.dim,
            means: r.means,
            radii: r.radii,
            sigma1: r.sigma1,
            a: r.a,
            f: r.f,
            c: r.c,
        };
        p.validate()?;
        Ok(p)
    }
}

fn check_psd(m: &DenseMatrix, what: &str) -> Result<()> {
    m.check_symmetric()?;
    let (lam, _) = min_eigenvalue(m)?;
    if lam < -1e-9 * (1.0 + m.max_abs()) {
        return Err(Error::InvalidInstance(format!("{what} is not PSD (min eigenvalue {lam:e})")));
    }
    Ok(())
}

impl MatrixCuProcess {
    pub fn new(
        means: Vec<DenseVector>,
        radii: Vec<f64>,
        sigma1: DenseMatrix,
        a: Vec<f64>,
        f: Vec<f64>,
        c: Vec<DenseMatrix>,
    ) -> Result<Self> {
        let p = MatrixCuProcess {
            periods: means.len(),
            dim: sigma1.rows(),
            means,
            radii,
            sigma1,
            a,
            f,
            c,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let (t, m) = (self.periods, self.dim);
        if t == 0 || m == 0 {
            return Err(Error::InvalidInstance("periods and dim must be positive".into()));
        }
        check_count(&self.means, t, "means")?;
        check_count(&self.radii, t, "radii")?;
        check_count(&self.a, t - 1, "a")?;
        check_count(&self.f, t - 1, "f")?;
        check_count(&self.c, t - 1, "c")?;
        for mu in &self.means {
            check_len(mu, m, "mean")?;
        }
        check_square(&self.sigma1, m, "sigma1")?;
        check_psd(&self.sigma1, "sigma1")?;
        for c in &self.c {
            check_square(c, m, "C_t")?;
            check_psd(c, "C_t")?;
        }
        let nonneg = |v: &[f64]| v.iter().all(|x| x.is_finite() && *x >= 0.0);
        if !nonneg(&self.a) || !nonneg(&self.f) || !nonneg(&self.radii) {
            return Err(Error::InvalidInstance("a_t, f_t and radii must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self, t: usize) -> &DenseVector {
        &self.means[t]
    }

    pub fn radius(&self, t: usize) -> f64 {
        self.radii[t]
    }

    pub fn sigma1(&self) -> &DenseMatrix {
        &self.sigma1
    }

    /// (a_t, f_t, C_t) producing Σ_{t+1} (t 0-based).
    pub fn step(&self, t: usize) -> (f64, f64, &DenseMatrix) {
        (self.a[t], self.f[t], &self.c[t])
    }

    /// Σ_1..Σ_T along a realized path d_1..d_{T−1}.
    pub fn propagate_covariance(&self, path: &[DenseVector]) -> Result<Vec<DenseMatrix>> {
        check_count(path, self.periods - 1, "path")?;
        let mut out = vec![self.sigma1.clone()];
        for (t, d) in path.iter().enumerate() {
            check_len(d, self.dim, "path vector")?;
            out.push(self.next_covariance(t, &out[t], d));
        }
        Ok(out)
    }

    pub fn next_covariance(&self, t: usize, sigma_t: &DenseMatrix, d_t: &[f64]) -> DenseMatrix {
        let (a, f, c) = self.step(t);
        let dev = sub_vec(d_t, &self.means[t]);
        let mut next = sigma_t.scaled(a);
        next.add_scaled(f, &DenseMatrix::outer(&dev, &dev));
        next.add_scaled(1.0, c);
        next
    }

    /// Cholesky factor of a propagated covariance.
    pub fn factor(sigma: &DenseMatrix) -> Result<DenseMatrix> {
        cholesky(&sigma.symmetrized())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> DenseMatrix {
        DenseMatrix::from_rows(&[vec![v]]).unwrap()
    }

    #[test]
    fn scalar_update() {
        let p = MatrixCuProcess::new(
            vec![DenseVector(vec![0.0]); 2],
            vec![1.0, 1.0],
            s(2.0),
            vec![0.5],
            vec![0.25],
            vec![s(0.1)],
        )
        .unwrap();
        let cov = p.propagate_covariance(&[DenseVector(vec![2.0])]).unwrap();
        assert!((cov[1][(0, 0)] - 2.1).abs() < 1e-15);
    }

    #[test]
    fn collapses_at_center() {
        let p = MatrixCuProcess::new(
            vec![DenseVector(vec![1.0]); 2],
            vec![1.0, 1.0],
            s(2.0),
            vec![0.0],
            vec![3.0],
            vec![s(0.0)],
        )
        .unwrap();
        let cov = p.propagate_covariance(&[DenseVector(vec![1.0])]).unwrap();
        assert_eq!(cov[1][(0, 0)], 0.0);
    }

    #[test]
    fn rejects_negative_coefficients() {
        let r = MatrixCuProcess::new(vec![DenseVector(vec![0.0]); 2], vec![1.0; 2], s(1.0), vec![-0.1], vec![0.0], vec![s(0.0)]);
        assert!(r.is_err());
    }
}
