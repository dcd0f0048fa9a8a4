use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{min_norm_preimage, sub_vec, DenseMatrix, DenseVector};

/// Ellipsoids `{μ_t + L_t u : ‖u‖ ≤ r_t}` whose center follows
/// `μ_{t+1} = A_t μ_t + F_t d_t + c_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EllipsoidalRaw")]
pub struct EllipsoidalCuProcess {
    periods: usize,
    dim: usize,
    mu1: DenseVector,
    radii: Vec<f64>,
    chol: Vec<DenseMatrix>,
    center_a: Vec<DenseMatrix>,
    center_f: Vec<DenseMatrix>,
    center_c: Vec<DenseVector>,
}

#[derive(Deserialize)]
struct EllipsoidalRaw {
    periods: usize,
    dim: usize,
    mu1: DenseVector,
    radii: Vec<f64>,
    chol: Vec<DenseMatrix>,
    center_a: Vec<DenseMatrix>,
    center_f: Vec<DenseMatrix>,
    center_c: Vec<DenseVector>,
}

impl TryFrom<EllipsoidalRaw> for EllipsoidalCuProcess {
    type Error = Error;
    fn try_from(r: EllipsoidalRaw) -> Result<Self> {
        let p = EllipsoidalCuProcess {
            periods: r.periods,
            dim: r.dim,
            mu1: r.mu1,
            radii: r.radii,
            chol: r.chol,
            center_a: r.center_a,
            center_f: r.center_f,
            center_c: r.center_c,
        };
        p.validate()?;
        Ok(p)
    }
}

pub(crate) fn check_square(m: &DenseMatrix, n: usize, what: &str) -> Result<()> {
    if m.rows() != n || m.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, expected {n}x{n}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

pub(crate) fn check_len(v: &[f64], n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch(format!("{what} has length {}, expected {n}", v.len())));
    }
    Ok(())
}

pub(crate) fn check_count<T>(v: &[T], n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch(format!("{what}: {} entries, expected {n}", v.len())));
    }
    Ok(())
}

impl EllipsoidalCuProcess {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mu1: DenseVector,
        radii: Vec<f64>,
        chol: Vec<DenseMatrix>,
        center_a: Vec<DenseMatrix>,
        center_f: Vec<DenseMatrix>,
        center_c: Vec<DenseVector>,
    ) -> Result<Self> {
        let p = EllipsoidalCuProcess {
            periods: radii.len(),
            dim: mu1.len(),
            mu1,
            radii,
            chol,
            center_a,
            center_f,
            center_c,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let (t, m) = (self.periods, self.dim);
        if t == 0 || m == 0 {
            return Err(Error::InvalidInstance("periods and dim must be positive".into()));
        }
        check_len(&self.mu1, m, "mu1")?;
        check_count(&self.radii, t, "radii")?;
        check_count(&self.chol, t, "chol")?;
        check_count(&self.center_a, t - 1, "center_a")?;
        check_count(&self.center_f, t - 1, "center_f")?;
        check_count(&self.center_c, t - 1, "center_c")?;
        if self.radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidInstance("radii must be finite and nonnegative".into()));
        }
        if !self.mu1.is_finite() || self.center_c.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInstance("non-finite vector entries".into()));
        }
        for l in &self.chol {
            check_square(l, m, "cholesky factor")?;
        }
        for a in self.center_a.iter().chain(&self.center_f) {
            check_square(a, m, "center coefficient")?;
        }
        for c in &self.center_c {
            check_len(c, m, "center offset")?;
        }
        Ok(())
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mu1(&self) -> &DenseVector {
        &self.mu1
    }

    /// Radius of period `t` (0-based).
    pub fn radius(&self, t: usize) -> f64 {
        self.radii[t]
    }

    pub fn chol(&self, t: usize) -> &DenseMatrix {
        &self.chol[t]
    }

    /// Coefficients (A_t, F_t, c_t) producing the center of period t+1.
    pub fn center_step(&self, t: usize) -> (&DenseMatrix, &DenseMatrix, &DenseVector) {
        (&self.center_a[t], &self.center_f[t], &self.center_c[t])
    }

    /// One center update μ_{t+1} = A_t μ_t + F_t d_t + c_t (t 0-based).
    pub fn next_center(&self, t: usize, mu_t: &[f64], d_t: &[f64]) -> Vec<f64> {
        let (a, f, c) = self.center_step(t);
        let am = a.mul_vec(mu_t);
        let fd = f.mul_vec(d_t);
        (0..self.dim).map(|i| am[i] + fd[i] + c[i]).collect()
    }

    /// Centers μ_1..μ_T along a realized path d_1..d_{T−1}.
    pub fn propagate_center(&self, path: &[DenseVector]) -> Result<Vec<DenseVector>> {
        check_count(path, self.periods - 1, "path")?;
        let mut centers = vec![self.mu1.clone()];
        for (t, d) in path.iter().enumerate() {
            check_len(d, self.dim, "path vector")?;
            let next = self.next_center(t, &centers[t], d);
            centers.push(DenseVector(next));
        }
        Ok(centers)
    }

    /// Membership of `d` in the period-`t` ellipsoid centered at `mu_t`.
    pub fn member_ellipsoidal(&self, t: usize, mu_t: &[f64], d: &[f64]) -> Result<bool> {
        if t >= self.periods {
            return Err(Error::DimensionMismatch(format!("period {t} out of range")));
        }
        check_len(mu_t, self.dim, "center")?;
        check_len(d, self.dim, "point")?;
        let v = sub_vec(d, mu_t);
        Ok(match min_norm_preimage(&self.chol[t], &v)? {
            Some(n) => n <= self.radii[t] + 1e-9,
            None => false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> DenseMatrix {
        DenseMatrix::from_rows(&[vec![v]]).unwrap()
    }

    #[test]
    fn center_hand_recursion() {
        let p = EllipsoidalCuProcess::new(
            DenseVector(vec![1.0]),
            vec![1.0; 3],
            vec![scalar(1.0); 3],
            vec![scalar(0.5); 2],
            vec![scalar(0.3); 2],
            vec![DenseVector(vec![0.1]); 2],
        )
        .unwrap();
        let c = p.propagate_center(&[DenseVector(vec![2.0]), DenseVector(vec![1.0])]).unwrap();
        assert!((c[1][0] - 1.2).abs() < 1e-15);
        assert!((c[2][0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn membership_examples() {
        let p = EllipsoidalCuProcess::new(DenseVector(vec![0.0]), vec![2.0], vec![scalar(1.0)], vec![], vec![], vec![])
            .unwrap();
        assert!(p.member_ellipsoidal(0, &[0.0], &[0.0]).unwrap());
        assert!(!p.member_ellipsoidal(0, &[0.0], &[2.5]).unwrap());
        let q = EllipsoidalCuProcess::new(
            DenseVector(vec![0.0, 0.0]),
            vec![1.0],
            vec![DenseMatrix::identity(2)],
            vec![],
            vec![],
            vec![],
        )
        .unwrap();
        assert!(q.member_ellipsoidal(0, &[1.0, 1.0], &[1.6, 1.8]).unwrap());
    }

    #[test]
    fn rejects_bad_shapes() {
        let r = EllipsoidalCuProcess::new(DenseVector(vec![0.0]), vec![1.0, 1.0], vec![scalar(1.0)], vec![], vec![], vec![]);
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }
}
